use std::collections::BTreeSet;

use super::{AutomatonError, Clock, ClockRole, Guard, RegionRef, State, TimedAutomaton, Transition};
use crate::stl::Time;

const KAPPA: usize = 0;
const ETA: usize = 1;

fn check(lo: Time, hi: Time, horizon: Time, what: &str) -> Result<(), AutomatonError> {
    if Time::ZERO <= lo && lo <= hi && hi <= horizon {
        Ok(())
    } else {
        Err(AutomatonError::Bounds(format!("{what}: [{lo},{hi}] with T = {horizon}")))
    }
}

fn clocks(dwell: bool) -> Vec<Clock> {
    let mut c = vec![Clock { name: "kappa".into(), role: ClockRole::Global }];
    if dwell {
        c.push(Clock { name: "eta".into(), role: ClockRole::Dwell });
    }
    c
}

fn edge(from: usize, to: usize, guard: Guard, resets: &[usize]) -> Transition {
    Transition { from, to, guard, resets: resets.iter().copied().collect() }
}

fn build(
    horizon: Time,
    regions: Vec<RegionRef>,
    accepting: &[usize],
    dwell: bool,
    transitions: Vec<Transition>,
) -> Result<TimedAutomaton, AutomatonError> {
    let states = regions
        .into_iter()
        .enumerate()
        .map(|(i, region)| State { label: format!("s{i}"), region })
        .collect();
    TimedAutomaton::new(
        horizon,
        states,
        BTreeSet::from([0]),
        accepting.iter().copied().collect(),
        clocks(dwell),
        transitions,
    )
}

/// `F[a,b] φ`: wait in Ω, hit `φ` between a and b, then roam freely.
pub fn template_eventually(a: Time, b: Time, phi: RegionRef, horizon: Time) -> Result<TimedAutomaton, AutomatonError> {
    check(a, b, horizon, "F")?;
    let g = Guard::trivial();
    build(
        horizon,
        vec![RegionRef::new(), phi, RegionRef::new()],
        &[1, 2],
        false,
        vec![edge(0, 1, g.clone().with(KAPPA, a, b), &[]), edge(1, 2, g, &[])],
    )
}

/// `G[a,b] φ`.
pub fn template_always(a: Time, b: Time, phi: RegionRef, horizon: Time) -> Result<TimedAutomaton, AutomatonError> {
    check(a, b, horizon, "G")?;
    let g = Guard::trivial();
    build(
        horizon,
        vec![RegionRef::new(), phi, RegionRef::new()],
        &[2],
        false,
        vec![
            edge(0, 1, g.clone().with(KAPPA, Time::ZERO, a), &[]),
            edge(1, 2, g.with(KAPPA, b, horizon), &[]),
        ],
    )
}

/// `φ1 U[a,b] φ2`; `both` is the region of `φ1 ∧ φ2`.
pub fn template_until(
    a: Time,
    b: Time,
    phi1: RegionRef,
    both: RegionRef,
    horizon: Time,
) -> Result<TimedAutomaton, AutomatonError> {
    check(a, b, horizon, "U")?;
    let g = Guard::trivial();
    build(
        horizon,
        vec![phi1, both, RegionRef::new()],
        &[1, 2],
        false,
        vec![edge(0, 1, g.clone().with(KAPPA, a, b), &[]), edge(1, 2, g, &[])],
    )
}

/// `F[a,b] G[c,d] φ`.
pub fn template_eventually_always(
    a: Time,
    b: Time,
    c: Time,
    d: Time,
    phi: RegionRef,
    horizon: Time,
) -> Result<TimedAutomaton, AutomatonError> {
    check(a, b, horizon, "F of FG")?;
    check(c, d, horizon, "G of FG")?;
    check(a + c, b + d, horizon, "FG")?;
    let g = Guard::trivial();
    build(
        horizon,
        vec![RegionRef::new(), phi, RegionRef::new()],
        &[2],
        true,
        vec![
            edge(0, 1, g.clone().with(KAPPA, a + c, b + c), &[ETA]),
            edge(1, 2, g.with(ETA, d - c, horizon), &[]),
        ],
    )
}

/// `G[a,b] F[c,d] φ`. `not_phi` must cover the complement of `φ` inside Ω.
pub fn template_always_eventually(
    a: Time,
    b: Time,
    c: Time,
    d: Time,
    phi: RegionRef,
    not_phi: Option<RegionRef>,
    horizon: Time,
) -> Result<TimedAutomaton, AutomatonError> {
    check(a, b, horizon, "G of GF")?;
    check(c, d, horizon, "F of GF")?;
    check(a + c, b + d, horizon, "GF")?;
    let not_phi = not_phi.ok_or_else(|| {
        AutomatonError::MissingNegRegion(phi.iter().cloned().collect::<Vec<_>>().join(" & "))
    })?;
    let g = Guard::trivial();
    let gap = g.clone().with(ETA, Time::ZERO, d - c);
    build(
        horizon,
        vec![RegionRef::new(), RegionRef::new(), phi, not_phi, RegionRef::new()],
        &[4],
        true,
        vec![
            edge(0, 1, g.clone().with(KAPPA, Time::ZERO, a + c), &[ETA]),
            edge(1, 2, gap.clone(), &[]),
            edge(2, 3, g.clone(), &[ETA]),
            edge(3, 2, gap, &[]),
            edge(2, 4, g.with(KAPPA, b + c, horizon), &[]),
        ],
    )
}

/// Response with deadline `a` for every goal and service delay `b`. The
/// goals are visited in the given order, one block of five states each.
pub fn template_response(
    a: Time,
    b: Time,
    goals: &[RegionRef],
    service: RegionRef,
    free: RegionRef,
    horizon: Time,
) -> Result<TimedAutomaton, AutomatonError> {
    check(Time::ZERO, a, horizon, "response deadline")?;
    check(Time::ZERO, b, horizon, "response delay")?;
    if goals.is_empty() {
        return Err(AutomatonError::Invalid("response needs at least one goal".into()));
    }
    let n = goals.len();
    let early = Guard::trivial().with(KAPPA, Time::ZERO, a);
    let both_a = early.clone().with(ETA, Time::ZERO, a);
    let both_b = early.with(ETA, Time::ZERO, b);
    let mut regions = Vec::with_capacity(5 * n + 1);
    let mut transitions = Vec::new();
    for (i, goal) in goals.iter().enumerate() {
        let s = 5 * i;
        regions.extend([free.clone(), RegionRef::new(), goal.clone(), RegionRef::new(), service.clone()]);
        transitions.push(edge(s, s + 1, both_a.clone(), &[ETA]));
        transitions.push(edge(s + 1, s + 2, both_b.clone(), &[]));
        transitions.push(edge(s + 2, s + 3, both_b.clone(), &[]));
        transitions.push(edge(s + 3, s + 4, Guard::trivial().with(ETA, Time::ZERO, b), &[]));
        if i + 1 < n {
            transitions.push(edge(s + 4, s + 5, both_a.clone(), &[]));
        }
    }
    regions.push(RegionRef::new());
    transitions.push(edge(5 * n - 1, 5 * n, Guard::trivial().with(KAPPA, a, horizon), &[]));
    build(horizon, regions, &[5 * n], true, transitions)
}

#[cfg(test)]
mod tests {
    use super::super::{region_ref, Interval};
    use super::*;

    fn secs(s: i64) -> Time {
        Time::from_secs(s)
    }

    fn iv(lo: i64, hi: i64) -> Interval {
        Interval::new(secs(lo), secs(hi))
    }

    #[test]
    fn five_templates_stay_small() {
        let r = || region_ref(["R"]);
        let all = [
            template_eventually(secs(1), secs(4), r(), secs(10)),
            template_always(secs(1), secs(4), r(), secs(10)),
            template_until(secs(1), secs(4), region_ref(["Q"]), region_ref(["Q", "R"]), secs(10)),
            template_eventually_always(secs(1), secs(4), secs(0), secs(2), r(), secs(10)),
            template_always_eventually(secs(1), secs(4), secs(0), secs(2), r(), Some(region_ref(["notR"])), secs(10)),
        ];
        for a in all {
            let a = a.unwrap();
            assert!(a.num_states() <= 5 && a.num_clocks() <= 2, "{} states, {} clocks", a.num_states(), a.num_clocks());
        }
    }

    #[test]
    fn eventually_shape() {
        let a = template_eventually(secs(2), secs(5), region_ref(["R"]), secs(10)).unwrap();
        assert_eq!(a.num_states(), 3);
        assert_eq!(a.accepting, BTreeSet::from([1, 2]));
        assert_eq!(a.transition(0, 1).unwrap().guard.bounds[&0], iv(2, 5));
        assert!(a.transition(1, 2).unwrap().guard.bounds.is_empty());
        assert_eq!(a.states[1].region, region_ref(["R"]));
    }

    #[test]
    fn always_guards_bracket_the_window() {
        let a = template_always(secs(3), secs(7), region_ref(["R"]), secs(10)).unwrap();
        assert_eq!(a.accepting, BTreeSet::from([2]));
        assert_eq!(a.transition(0, 1).unwrap().guard.bounds[&0], iv(0, 3));
        assert_eq!(a.transition(1, 2).unwrap().guard.bounds[&0], iv(7, 10));
    }

    #[test]
    fn eventually_always_uses_dwell_clock() {
        let a = template_eventually_always(secs(0), secs(15), secs(0), secs(5), region_ref(["R"]), secs(20)).unwrap();
        let enter = a.transition(0, 1).unwrap();
        assert_eq!(enter.guard.bounds[&0], iv(0, 15));
        assert_eq!(enter.resets, BTreeSet::from([1]));
        assert_eq!(a.transition(1, 2).unwrap().guard.bounds[&1], iv(5, 20));
        assert_eq!(a.clocks[1].role, ClockRole::Dwell);
    }

    #[test]
    fn always_eventually_needs_cover() {
        let err = template_always_eventually(secs(0), secs(10), secs(0), secs(4), region_ref(["R"]), None, secs(20));
        assert!(matches!(err, Err(AutomatonError::MissingNegRegion(_))));
        let a = template_always_eventually(
            secs(0),
            secs(10),
            secs(1),
            secs(4),
            region_ref(["R"]),
            Some(region_ref(["notR"])),
            secs(20),
        )
        .unwrap();
        assert_eq!(a.num_states(), 5);
        assert_eq!(a.accepting, BTreeSet::from([4]));
        assert_eq!(a.transition(0, 1).unwrap().guard.bounds[&0], iv(0, 1));
        assert_eq!(a.transition(3, 2).unwrap().guard.bounds[&1], iv(0, 3));
        assert_eq!(a.transition(2, 4).unwrap().guard.bounds[&0], iv(11, 20));
        assert_eq!(a.transition(2, 3).unwrap().resets, BTreeSet::from([1]));
    }

    #[test]
    fn response_two_goals_matches_construction() {
        let a = template_response(
            secs(20),
            secs(5),
            &[region_ref(["G1"]), region_ref(["G2"])],
            region_ref(["S"]),
            region_ref(["free"]),
            secs(30),
        )
        .unwrap();
        assert_eq!(a.num_states(), 11);
        assert_eq!(a.transitions.len(), 10);
        assert_eq!(a.accepting, BTreeSet::from([10]));
        let t01 = a.transition(0, 1).unwrap();
        assert_eq!((t01.guard.bounds[&0], t01.guard.bounds[&1]), (iv(0, 20), iv(0, 20)));
        assert_eq!(t01.resets, BTreeSet::from([1]));
        assert_eq!(a.transition(5, 6).unwrap().resets, BTreeSet::from([1]));
        assert!(a.transition(4, 5).unwrap().resets.is_empty());
        let t34 = a.transition(3, 4).unwrap();
        assert_eq!(t34.guard.bounds.len(), 1);
        assert_eq!(t34.guard.bounds[&1], iv(0, 5));
        assert_eq!(a.transition(9, 10).unwrap().guard.bounds[&0], iv(20, 30));
        let regions: Vec<_> = a.states.iter().map(|s| s.region.iter().cloned().collect::<Vec<_>>().join("")).collect();
        assert_eq!(regions, ["free", "", "G1", "", "S", "free", "", "G2", "", "S", ""]);
    }

    #[test]
    fn bounds_beyond_horizon_rejected() {
        assert!(matches!(
            template_eventually(secs(2), secs(12), RegionRef::new(), secs(10)),
            Err(AutomatonError::Bounds(_))
        ));
        assert!(matches!(
            template_eventually_always(secs(0), secs(8), secs(0), secs(5), RegionRef::new(), secs(10)),
            Err(AutomatonError::Bounds(_))
        ));
    }
}
