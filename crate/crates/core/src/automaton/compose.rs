use std::collections::{BTreeMap, BTreeSet, VecDeque};

use super::{AutomatonError, Clock, ClockId, ClockRole, Guard, Interval, RegionRef, State, TimedAutomaton, Transition};
use crate::regions::RegionTable;
use crate::stl::Time;

fn shift(set: &BTreeSet<usize>, by: usize) -> BTreeSet<usize> {
    set.iter().map(|&s| s + by).collect()
}

/// Disjoint union: accepts whatever either operand accepts.
pub fn union(a1: &TimedAutomaton, a2: &TimedAutomaton) -> Result<TimedAutomaton, AutomatonError> {
    if a1.horizon != a2.horizon {
        return Err(AutomatonError::HorizonMismatch);
    }
    let (n1, c1) = (a1.num_states(), a1.num_clocks());
    let label = |side: u8, s: &State| State { label: format!("{side}.{}", s.label), region: s.region.clone() };
    let states = a1.states.iter().map(|s| label(1, s)).chain(a2.states.iter().map(|s| label(2, s))).collect();
    let mut transitions = a1.transitions.clone();
    transitions.extend(a2.transitions.iter().map(|t| Transition {
        from: t.from + n1,
        to: t.to + n1,
        guard: t.guard.remap(|c| c + c1),
        resets: shift(&t.resets, c1),
    }));
    TimedAutomaton::new(
        a1.horizon,
        states,
        a1.initial.union(&shift(&a2.initial, n1)).copied().collect(),
        a1.accepting.union(&shift(&a2.accepting, n1)).copied().collect(),
        a1.clocks.iter().chain(&a2.clocks).cloned().collect(),
        transitions,
    )
}

/// Asynchronous product: one component moves per transition and each
/// product state carries the intersection of both regions. Pairs whose
/// region is empty are dropped.
pub fn product(a1: &TimedAutomaton, a2: &TimedAutomaton, table: &RegionTable) -> Result<TimedAutomaton, AutomatonError> {
    if a1.horizon != a2.horizon {
        return Err(AutomatonError::HorizonMismatch);
    }
    let (n1, n2, c1) = (a1.num_states(), a2.num_states(), a1.num_clocks());
    let mut nonempty: BTreeMap<RegionRef, bool> = BTreeMap::new();
    let mut id = vec![None; n1 * n2];
    let mut states = Vec::new();
    for i in 0..n1 {
        for j in 0..n2 {
            let region: RegionRef = a1.states[i].region.union(&a2.states[j].region).cloned().collect();
            let keep = match nonempty.get(&region) {
                Some(&k) => k,
                None => {
                    let k = table.realize(region.iter().map(String::as_str))?.is_nonempty()?;
                    nonempty.insert(region.clone(), k);
                    k
                }
            };
            if keep {
                id[i * n2 + j] = Some(states.len());
                let label = format!("({},{})", a1.states[i].label, a2.states[j].label);
                states.push(State { label, region });
            }
        }
    }
    let pair = |i: usize, j: usize| id[i * n2 + j];
    let mut transitions = Vec::new();
    for t in &a1.transitions {
        for j in 0..n2 {
            if let (Some(from), Some(to)) = (pair(t.from, j), pair(t.to, j)) {
                transitions.push(Transition { from, to, guard: t.guard.clone(), resets: t.resets.clone() });
            }
        }
    }
    for t in &a2.transitions {
        for i in 0..n1 {
            if let (Some(from), Some(to)) = (pair(i, t.from), pair(i, t.to)) {
                transitions.push(Transition {
                    from,
                    to,
                    guard: t.guard.remap(|c| c + c1),
                    resets: shift(&t.resets, c1),
                });
            }
        }
    }
    let collect = |s1: &BTreeSet<usize>, s2: &BTreeSet<usize>| -> BTreeSet<usize> {
        s1.iter().flat_map(|&i| s2.iter().filter_map(move |&j| pair(i, j))).collect()
    };
    let initial = collect(&a1.initial, &a2.initial);
    let accepting = collect(&a1.accepting, &a2.accepting);
    if initial.is_empty() {
        return Err(AutomatonError::EmptyProduct("initial"));
    }
    if accepting.is_empty() {
        return Err(AutomatonError::EmptyProduct("accepting"));
    }
    TimedAutomaton::new(
        a1.horizon,
        states,
        initial,
        accepting,
        a1.clocks.iter().chain(&a2.clocks).cloned().collect(),
        transitions,
    )
}

/// Merges every global clock into one. Resulting clocks are named `kappa`
/// and `eta1`, `eta2`, … in order.
pub fn share_global_clock(a: &TimedAutomaton) -> Result<TimedAutomaton, AutomatonError> {
    let globals = a.global_clocks();
    for t in &a.transitions {
        if let Some(&c) = t.resets.iter().find(|c| globals.contains(c)) {
            return Err(AutomatonError::NotTemplateBuilt(a.clocks[c].name.clone()));
        }
    }
    let mut map = vec![0; a.num_clocks()];
    let mut clocks = Vec::new();
    if !globals.is_empty() {
        clocks.push(Clock { name: "kappa".into(), role: ClockRole::Global });
    }
    for (c, clock) in a.clocks.iter().enumerate() {
        if clock.role == ClockRole::Dwell {
            map[c] = clocks.len();
            clocks.push(Clock { name: format!("eta{}", clocks.len() + usize::from(globals.is_empty())), role: ClockRole::Dwell });
        }
    }
    let transitions = a
        .transitions
        .iter()
        .map(|t| Transition {
            from: t.from,
            to: t.to,
            guard: t.guard.remap(|c| map[c]),
            resets: t.resets.iter().map(|&c| map[c]).collect(),
        })
        .collect();
    TimedAutomaton::new(a.horizon, a.states.clone(), a.initial.clone(), a.accepting.clone(), clocks, transitions)
}

/// Absolute-time window during which `t` can fire, read off its global
/// clock guards.
fn fire_window(a: &TimedAutomaton, globals: &[ClockId], t: &Transition) -> Interval {
    let mut w = Interval::new(Time::ZERO, a.horizon);
    for c in globals {
        if let Some(iv) = t.guard.bounds.get(c) {
            w = w.intersect(iv);
        }
    }
    w
}

/// Earliest entry time of each state and latest time a run can still leave
/// it on the way to acceptance; `None` when unreachable or hopeless.
fn time_bounds(a: &TimedAutomaton, globals: &[ClockId]) -> (Vec<Option<Time>>, Vec<Option<Time>>) {
    let n = a.num_states();
    let mut earliest = vec![None; n];
    for &s in &a.initial {
        earliest[s] = Some(Time::ZERO);
    }
    let windows: Vec<Interval> = a.transitions.iter().map(|t| fire_window(a, globals, t)).collect();
    let mut changed = true;
    while changed {
        changed = false;
        for (t, w) in a.transitions.iter().zip(&windows) {
            let Some(e) = earliest[t.from] else { continue };
            let fire = e.max(w.lo);
            if fire <= w.hi && earliest[t.to].map_or(true, |old| fire < old) {
                earliest[t.to] = Some(fire);
                changed = true;
            }
        }
    }
    let mut latest = vec![None; n];
    for &s in &a.accepting {
        latest[s] = Some(a.horizon);
    }
    changed = true;
    while changed {
        changed = false;
        for (t, w) in a.transitions.iter().zip(&windows) {
            let Some(l) = latest[t.to] else { continue };
            let fire = l.min(w.hi);
            if fire >= w.lo && latest[t.from].map_or(true, |old| fire > old) {
                latest[t.from] = Some(fire);
                changed = true;
            }
        }
    }
    (earliest, latest)
}

/// Removes transitions with empty guards, states and transitions that no
/// accepted run can use given the global-clock guards, states off every
/// initial-to-accepting path, and clocks nothing refers to.
pub fn prune(a: &TimedAutomaton) -> Result<TimedAutomaton, AutomatonError> {
    let globals = a.global_clocks();
    let (earliest, latest) = time_bounds(a, &globals);
    let alive = |s: usize| matches!((earliest[s], latest[s]), (Some(e), Some(l)) if e <= l);
    let mut kept: Vec<&Transition> = a
        .transitions
        .iter()
        .filter(|t| {
            if t.guard.is_empty() || !alive(t.from) || !alive(t.to) {
                return false;
            }
            let w = fire_window(a, &globals, t);
            earliest[t.from].unwrap().max(w.lo) <= latest[t.to].unwrap().min(w.hi)
        })
        .collect();

    let n = a.num_states();
    let reach = |seeds: &BTreeSet<usize>, forward: bool, kept: &[&Transition]| {
        let mut seen = vec![false; n];
        let mut queue: VecDeque<usize> = seeds.iter().copied().filter(|&s| alive(s)).collect();
        for &s in &queue {
            seen[s] = true;
        }
        while let Some(s) = queue.pop_front() {
            for t in kept {
                let (x, y) = if forward { (t.from, t.to) } else { (t.to, t.from) };
                if x == s && !seen[y] {
                    seen[y] = true;
                    queue.push_back(y);
                }
            }
        }
        seen
    };
    let fwd = reach(&a.initial, true, &kept);
    let bwd = reach(&a.accepting, false, &kept);
    let useful: Vec<bool> = (0..n).map(|s| fwd[s] && bwd[s]).collect();
    kept.retain(|t| useful[t.from] && useful[t.to]);

    let mut id = vec![None; n];
    let mut states = Vec::new();
    for s in (0..n).filter(|&s| useful[s]) {
        id[s] = Some(states.len());
        states.push(a.states[s].clone());
    }
    let initial: BTreeSet<usize> = a.initial.iter().filter_map(|&s| id[s]).collect();
    let accepting: BTreeSet<usize> = a.accepting.iter().filter_map(|&s| id[s]).collect();
    if initial.is_empty() {
        return Err(AutomatonError::EmptyAutomaton("initial"));
    }
    if accepting.is_empty() {
        return Err(AutomatonError::EmptyAutomaton("accepting"));
    }

    let mut used = vec![false; a.num_clocks()];
    for t in &kept {
        for &c in t.guard.bounds.keys().chain(&t.resets) {
            used[c] = true;
        }
    }
    let mut clock_id = vec![0; a.num_clocks()];
    let mut clocks = Vec::new();
    for c in (0..a.num_clocks()).filter(|&c| used[c]) {
        clock_id[c] = clocks.len();
        clocks.push(a.clocks[c].clone());
    }
    let transitions = kept
        .iter()
        .map(|t| Transition {
            from: id[t.from].unwrap(),
            to: id[t.to].unwrap(),
            guard: Guard { bounds: t.guard.bounds.iter().map(|(&c, &iv)| (clock_id[c], iv)).collect() },
            resets: t.resets.iter().map(|&c| clock_id[c]).collect(),
        })
        .collect();
    TimedAutomaton::new(a.horizon, states, initial, accepting, clocks, transitions)
}

#[cfg(test)]
mod tests {
    use super::super::{region_ref, template_always, template_eventually, template_eventually_always};
    use super::*;
    use crate::regions::Polytope;

    fn secs(s: i64) -> Time {
        Time::from_secs(s)
    }

    fn table() -> RegionTable {
        let bx = |lo: [f64; 2], hi: [f64; 2]| Polytope::from_box(&lo, &hi).unwrap();
        RegionTable::new(
            bx([0.0, 0.0], [10.0, 10.0]),
            BTreeMap::from([
                ("A".to_string(), bx([0.0, 0.0], [4.0, 4.0])),
                ("B".to_string(), bx([6.0, 6.0], [9.0, 9.0])),
                ("C".to_string(), bx([3.0, 3.0], [7.0, 7.0])),
            ]),
        )
        .unwrap()
    }

    #[test]
    fn union_keeps_both_halves() {
        let f = template_eventually(secs(0), secs(5), region_ref(["A"]), secs(10)).unwrap();
        let g = template_always(secs(0), secs(5), region_ref(["B"]), secs(10)).unwrap();
        let u = union(&f, &g).unwrap();
        assert_eq!(u.num_states(), 6);
        assert_eq!(u.num_clocks(), 2);
        assert_eq!(u.initial, BTreeSet::from([0, 3]));
        assert_eq!(u.accepting, BTreeSet::from([1, 2, 5]));
        assert_eq!(u.transition(3, 4).unwrap().guard.bounds[&1], Interval::new(secs(0), secs(0)));
    }

    #[test]
    fn product_drops_disjoint_pairs() {
        let f = template_eventually(secs(0), secs(5), region_ref(["A"]), secs(10)).unwrap();
        let g = template_eventually(secs(0), secs(5), region_ref(["B"]), secs(10)).unwrap();
        let p = product(&f, &g, &table()).unwrap();
        // (s1,s1) would need A ∩ B, which is empty.
        assert_eq!(p.num_states(), 8);
        assert!(p.states.iter().all(|s| s.region != region_ref(["A", "B"])));
        assert_eq!(p.num_clocks(), 2);
    }

    #[test]
    fn product_fails_without_accepting_pair() {
        let f = template_always(secs(0), secs(10), region_ref(["A"]), secs(10)).unwrap();
        let g = template_always(secs(0), secs(10), region_ref(["B"]), secs(10)).unwrap();
        // (s1,s1) needs A ∩ B and is dropped, so no run reaches (s2,s2).
        let p = product(&f, &g, &table()).unwrap();
        assert!(matches!(prune(&share_global_clock(&p).unwrap()), Err(AutomatonError::EmptyAutomaton(_))));
    }

    #[test]
    fn sharing_merges_globals_only() {
        let f = template_eventually(secs(0), secs(5), region_ref(["A"]), secs(20)).unwrap();
        let g = template_eventually_always(secs(0), secs(5), secs(0), secs(3), region_ref(["C"]), secs(20)).unwrap();
        let p = product(&f, &g, &table()).unwrap();
        assert_eq!(p.num_clocks(), 3);
        let s = share_global_clock(&p).unwrap();
        assert_eq!(s.clocks.iter().map(|c| c.name.as_str()).collect::<Vec<_>>(), ["kappa", "eta1"]);
    }

    #[test]
    fn global_time_pruning_cuts_late_branch() {
        let f = template_eventually(secs(0), secs(2), region_ref(["A"]), secs(10)).unwrap();
        let g = template_always(secs(6), secs(10), region_ref(["B"]), secs(10)).unwrap();
        let p = share_global_clock(&product(&f, &g, &table()).unwrap()).unwrap();
        let pruned = prune(&p).unwrap();
        let labels: Vec<&str> = pruned.states.iter().map(|s| s.label.as_str()).collect();
        // Entering B first leaves no way to visit A before 2; entering g's
        // final state happens at 10, after F's deadline.
        assert!(!labels.contains(&"(s0,s1)"));
        assert!(!labels.contains(&"(s0,s2)"));
        assert!(labels.contains(&"(s2,s2)"));
        assert!(pruned.num_states() < p.num_states());
    }

    #[test]
    fn pruning_drops_unreachable_and_dead_states() {
        let f = template_eventually(secs(0), secs(5), region_ref(["A"]), secs(10)).unwrap();
        let mut broken = f.clone();
        broken.transitions[0].guard = Guard::trivial().with(0, secs(4), secs(3));
        let pruned = prune(&broken);
        assert!(matches!(pruned, Err(AutomatonError::EmptyAutomaton(_))));
        assert_eq!(prune(&f).unwrap(), f);
    }
}
