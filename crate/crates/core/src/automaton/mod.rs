//! Timed automata whose states carry workspace regions.

mod compile;
mod compose;
mod templates;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::{self, Write};

use thiserror::Error;

use crate::regions::RegionError;
use crate::stl::Time;

pub use compile::{compile, Bindings};
pub use compose::{product, prune, share_global_clock, union};
pub use templates::{
    template_always, template_always_eventually, template_eventually, template_eventually_always,
    template_response, template_until,
};

pub type StateId = usize;
pub type ClockId = usize;

/// Region map value: the workspace intersected with the named regions. The
/// empty set stands for the whole workspace.
pub type RegionRef = BTreeSet<String>;

pub fn region_ref<'a>(names: impl IntoIterator<Item = &'a str>) -> RegionRef {
    names.into_iter().map(str::to_string).collect()
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AutomatonError {
    #[error("interval bounds violate 0 <= a <= b <= T: {0}")]
    Bounds(String),
    #[error("no complement cover region declared for `{0}`")]
    MissingNegRegion(String),
    #[error("free region `{free}` intersects goal region `{goal}`")]
    RegionOverlap { free: String, goal: String },
    #[error("negation region `{region}` for `{predicate}` intersects the predicate's region")]
    NegationOverlap { predicate: String, region: String },
    #[error("product has no surviving {0} state")]
    EmptyProduct(&'static str),
    #[error("global clock `{0}` is reset by some transition")]
    NotTemplateBuilt(String),
    #[error("automaton has no {0} state left after pruning")]
    EmptyAutomaton(&'static str),
    #[error("predicate `{0}` is not bound to a region")]
    UnboundPredicate(String),
    #[error("formula `{0}` lies outside the plannable fragment")]
    OutsideFragment(String),
    #[error("automata disagree on the horizon")]
    HorizonMismatch,
    #[error("malformed automaton: {0}")]
    Invalid(String),
    #[error(transparent)]
    Region(#[from] RegionError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ClockRole {
    /// Never reset; measures absolute time.
    Global,
    /// Reset by transitions to time a dwell or a recurrence.
    Dwell,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Clock {
    pub name: String,
    pub role: ClockRole,
}

/// Closed interval; `lo > hi` encodes the empty interval.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Interval {
    pub lo: Time,
    pub hi: Time,
}

impl Interval {
    pub fn new(lo: Time, hi: Time) -> Interval {
        Interval { lo, hi }
    }

    pub fn is_empty(&self) -> bool {
        self.lo > self.hi
    }

    pub fn intersect(&self, other: &Interval) -> Interval {
        Interval { lo: self.lo.max(other.lo), hi: self.hi.min(other.hi) }
    }

    pub fn contains(&self, t: Time) -> bool {
        self.lo <= t && t <= self.hi
    }

    /// Distance of `v` seconds outside the interval; zero inside.
    pub fn residual(&self, v: f64) -> f64 {
        (self.lo.secs() - v).max(v - self.hi.secs()).max(0.0)
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{},{}]", self.lo, self.hi)
    }
}

/// Conjunction of per-clock interval constraints; absent clocks are free.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct Guard {
    pub bounds: BTreeMap<ClockId, Interval>,
}

impl Guard {
    pub fn trivial() -> Guard {
        Guard::default()
    }

    pub fn with(mut self, clock: ClockId, lo: Time, hi: Time) -> Guard {
        self.constrain(clock, Interval::new(lo, hi));
        self
    }

    pub fn constrain(&mut self, clock: ClockId, iv: Interval) {
        let slot = self.bounds.entry(clock).or_insert(iv);
        *slot = slot.intersect(&iv);
    }

    pub fn is_empty(&self) -> bool {
        self.bounds.values().any(Interval::is_empty)
    }

    /// Largest distance by which valuation `v` misses the guard.
    pub fn residual(&self, v: &[f64]) -> f64 {
        self.bounds.iter().map(|(&c, iv)| iv.residual(v[c])).fold(0.0, f64::max)
    }

    fn remap(&self, map: impl Fn(ClockId) -> ClockId) -> Guard {
        let mut g = Guard::default();
        for (&c, iv) in &self.bounds {
            g.constrain(map(c), *iv);
        }
        g
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Transition {
    pub from: StateId,
    pub to: StateId,
    pub guard: Guard,
    pub resets: BTreeSet<ClockId>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct State {
    pub label: String,
    pub region: RegionRef,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TimedAutomaton {
    pub horizon: Time,
    pub states: Vec<State>,
    pub initial: BTreeSet<StateId>,
    pub accepting: BTreeSet<StateId>,
    pub clocks: Vec<Clock>,
    /// At most one transition per ordered state pair, sorted by `(from, to)`.
    pub transitions: Vec<Transition>,
}

impl TimedAutomaton {
    /// Checks the structural invariants and sorts the transition list.
    pub fn new(
        horizon: Time,
        states: Vec<State>,
        initial: BTreeSet<StateId>,
        accepting: BTreeSet<StateId>,
        clocks: Vec<Clock>,
        mut transitions: Vec<Transition>,
    ) -> Result<Self, AutomatonError> {
        let n = states.len();
        let bad = |what: String| Err(AutomatonError::Invalid(what));
        if initial.iter().chain(&accepting).any(|&s| s >= n) {
            return bad("initial or accepting state out of range".into());
        }
        transitions.sort_by_key(|t| (t.from, t.to));
        for w in transitions.windows(2) {
            if (w[0].from, w[0].to) == (w[1].from, w[1].to) {
                return bad(format!("two transitions {} -> {}", w[0].from, w[0].to));
            }
        }
        for t in &transitions {
            if t.from >= n || t.to >= n {
                return bad(format!("transition {} -> {} leaves the state set", t.from, t.to));
            }
            if t.guard.bounds.keys().chain(&t.resets).any(|&c| c >= clocks.len()) {
                return bad("guard or reset names an unknown clock".into());
            }
            for iv in t.guard.bounds.values() {
                if iv.lo < Time::ZERO || iv.hi > horizon {
                    return Err(AutomatonError::Bounds(format!("guard {iv} outside [0,{horizon}]")));
                }
            }
        }
        Ok(TimedAutomaton { horizon, states, initial, accepting, clocks, transitions })
    }

    pub fn num_states(&self) -> usize {
        self.states.len()
    }

    pub fn num_clocks(&self) -> usize {
        self.clocks.len()
    }

    pub fn transition(&self, from: StateId, to: StateId) -> Option<&Transition> {
        self.transitions
            .binary_search_by_key(&(from, to), |t| (t.from, t.to))
            .ok()
            .map(|i| &self.transitions[i])
    }

    pub fn outgoing(&self, from: StateId) -> &[Transition] {
        let lo = self.transitions.partition_point(|t| t.from < from);
        let hi = self.transitions.partition_point(|t| t.from <= from);
        &self.transitions[lo..hi]
    }

    pub fn global_clocks(&self) -> Vec<ClockId> {
        (0..self.clocks.len()).filter(|&c| self.clocks[c].role == ClockRole::Global).collect()
    }

    /// Sequences of transitions that can all fire at one instant. Each chain
    /// visits distinct states; its guard applies to the valuation on entry
    /// to the chain. A clock reset earlier in the chain must admit 0 at every
    /// later guard.
    pub fn instant_chains(&self, from: StateId, max_len: usize) -> Vec<Chain> {
        let mut out = Vec::new();
        let start = Chain { states: vec![from], guard: Guard::trivial(), resets: BTreeSet::new() };
        self.extend_chain(start, max_len, &mut out);
        out
    }

    fn extend_chain(&self, chain: Chain, max_len: usize, out: &mut Vec<Chain>) {
        if chain.states.len() > max_len {
            return;
        }
        let here = *chain.states.last().unwrap();
        for t in self.outgoing(here) {
            if chain.states.contains(&t.to) {
                continue;
            }
            let mut next = chain.clone();
            let mut ok = true;
            for (&c, iv) in &t.guard.bounds {
                if chain.resets.contains(&c) {
                    ok &= iv.contains(Time::ZERO);
                } else {
                    next.guard.constrain(c, *iv);
                }
            }
            if !ok || next.guard.is_empty() {
                continue;
            }
            next.resets.extend(t.resets.iter().copied());
            next.states.push(t.to);
            out.push(next.clone());
            self.extend_chain(next, max_len, out);
        }
    }

    pub fn to_dot(&self) -> String {
        let mut s = String::from("digraph ta {\n  rankdir=LR;\n  node [shape=circle];\n");
        for (i, st) in self.states.iter().enumerate() {
            let shape = if self.accepting.contains(&i) { "doublecircle" } else { "circle" };
            let region = if st.region.is_empty() {
                "Ω".to_string()
            } else {
                st.region.iter().cloned().collect::<Vec<_>>().join("∩")
            };
            writeln!(s, "  q{i} [shape={shape}, label=\"{}\\n{}\"];", escape(&st.label), escape(&region)).unwrap();
            if self.initial.contains(&i) {
                writeln!(s, "  init{i} [shape=point];\n  init{i} -> q{i};").unwrap();
            }
        }
        for t in &self.transitions {
            let guard: Vec<String> = t
                .guard
                .bounds
                .iter()
                .map(|(&c, iv)| format!("{} in {iv}", self.clocks[c].name))
                .collect();
            let mut label = if guard.is_empty() { "true".to_string() } else { guard.join(", ") };
            if !t.resets.is_empty() {
                let r: Vec<&str> = t.resets.iter().map(|&c| self.clocks[c].name.as_str()).collect();
                write!(label, " / reset {}", r.join(",")).unwrap();
            }
            writeln!(s, "  q{} -> q{} [label=\"{}\"];", t.from, t.to, escape(&label)).unwrap();
        }
        s.push_str("}\n");
        s
    }
}

fn escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Chain {
    /// Visited states, first to last, at least two.
    pub states: Vec<StateId>,
    pub guard: Guard,
    pub resets: BTreeSet<ClockId>,
}

impl Chain {
    pub fn first(&self) -> StateId {
        self.states[0]
    }

    pub fn last(&self) -> StateId {
        *self.states.last().unwrap()
    }

    /// States strictly between the endpoints.
    pub fn intermediate(&self) -> &[StateId] {
        &self.states[1..self.states.len() - 1]
    }
}

/// A timed run: consecutive occupancy intervals with entry valuations.
#[derive(Clone, Debug, PartialEq)]
pub struct TaRun {
    pub steps: Vec<RunStep>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunStep {
    pub state: StateId,
    pub start: f64,
    pub end: f64,
    /// Clock valuation on entering this step.
    pub valuation: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunViolation {
    pub step: usize,
    /// 1: initial state and valuation, 2: interval tiling, 3: guard, 4: reset.
    pub condition: u8,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunReport {
    pub violations: Vec<RunViolation>,
    pub max_guard_residual: f64,
    pub accepting: bool,
}

impl RunReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Slack for time and valuation comparisons in run validation.
pub const RUN_TOL: f64 = 1e-9;

pub fn validate_run(a: &TimedAutomaton, run: &TaRun) -> RunReport {
    let mut violations = Vec::new();
    let mut max_guard_residual: f64 = 0.0;
    let mut flag = |step: usize, condition: u8, detail: String| {
        violations.push(RunViolation { step, condition, detail });
    };
    let nclk = a.num_clocks();
    let t_end = a.horizon.secs();
    let Some(first) = run.steps.first() else {
        flag(0, 1, "empty run".into());
        return RunReport { violations, max_guard_residual, accepting: false };
    };
    if !a.initial.contains(&first.state) {
        flag(0, 1, format!("state {} is not initial", first.state));
    }
    if first.start.abs() > RUN_TOL {
        flag(0, 2, format!("run starts at {}", first.start));
    }
    if first.valuation.len() != nclk || first.valuation.iter().any(|v| v.abs() > RUN_TOL) {
        flag(0, 1, "initial valuation is not zero".into());
    }
    for (i, st) in run.steps.iter().enumerate() {
        if st.state >= a.num_states() || st.valuation.len() != nclk {
            flag(i, 1, "unknown state or wrong valuation length".into());
            return RunReport { violations, max_guard_residual, accepting: false };
        }
        if st.end < st.start - RUN_TOL {
            flag(i, 2, format!("interval [{}, {}] runs backwards", st.start, st.end));
        }
        if st.valuation.iter().any(|&v| v < -RUN_TOL || v > t_end + RUN_TOL) {
            flag(i, 2, "valuation outside [0,T]".into());
        }
        if i == 0 {
            continue;
        }
        let prev = &run.steps[i - 1];
        if (prev.end - st.start).abs() > RUN_TOL {
            flag(i, 2, format!("gap between {} and {}", prev.end, st.start));
        }
        let Some(t) = a.transition(prev.state, st.state) else {
            flag(i, 3, format!("no transition {} -> {}", prev.state, st.state));
            continue;
        };
        let elapsed = st.start - prev.start;
        let advanced: Vec<f64> = prev.valuation.iter().map(|v| v + elapsed).collect();
        let r = t.guard.residual(&advanced);
        max_guard_residual = max_guard_residual.max(r);
        if r > RUN_TOL {
            flag(i, 3, format!("guard of {} -> {} missed by {r:.3e}", prev.state, st.state));
        }
        for c in 0..nclk {
            let expect = if t.resets.contains(&c) { 0.0 } else { advanced[c] };
            if (st.valuation[c] - expect).abs() > RUN_TOL {
                flag(i, 4, format!("clock {} is {} but should be {}", a.clocks[c].name, st.valuation[c], expect));
            }
        }
    }
    let last = run.steps.last().unwrap();
    if (last.end - t_end).abs() > RUN_TOL {
        flag(run.steps.len() - 1, 2, format!("run ends at {} instead of {t_end}", last.end));
    }
    let accepting = a.accepting.contains(&last.state);
    RunReport { violations, max_guard_residual, accepting }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn secs(s: i64) -> Time {
        Time::from_secs(s)
    }

    fn eventually() -> TimedAutomaton {
        template_eventually(secs(2), secs(5), region_ref(["R"]), secs(10)).unwrap()
    }

    fn step(state: StateId, start: f64, end: f64, valuation: Vec<f64>) -> RunStep {
        RunStep { state, start, end, valuation }
    }

    #[test]
    fn single_state_run_of_trivial_automaton() {
        let a = TimedAutomaton::new(
            secs(4),
            vec![State { label: "s".into(), region: RegionRef::new() }],
            BTreeSet::from([0]),
            BTreeSet::from([0]),
            vec![],
            vec![],
        )
        .unwrap();
        let run = TaRun { steps: vec![step(0, 0.0, 4.0, vec![])] };
        let report = validate_run(&a, &run);
        assert!(report.is_valid() && report.accepting);
    }

    #[test]
    fn guard_miss_is_condition_three() {
        let a = eventually();
        let good = TaRun { steps: vec![step(0, 0.0, 3.0, vec![0.0]), step(1, 3.0, 10.0, vec![3.0])] };
        assert!(validate_run(&a, &good).is_valid());
        let late = TaRun { steps: vec![step(0, 0.0, 5.1, vec![0.0]), step(1, 5.1, 10.0, vec![5.1])] };
        let report = validate_run(&a, &late);
        assert_eq!(report.violations.len(), 1);
        assert_eq!(report.violations[0].condition, 3);
        assert!((report.max_guard_residual - 0.1).abs() < 1e-12);
    }

    #[test]
    fn reset_and_tiling_checked() {
        let a = eventually();
        let wrong_clock = TaRun { steps: vec![step(0, 0.0, 3.0, vec![0.0]), step(1, 3.0, 10.0, vec![0.0])] };
        assert_eq!(validate_run(&a, &wrong_clock).violations[0].condition, 4);
        let short = TaRun { steps: vec![step(0, 0.0, 3.0, vec![0.0]), step(1, 3.0, 9.0, vec![3.0])] };
        assert_eq!(validate_run(&a, &short).violations[0].condition, 2);
        let not_initial = TaRun { steps: vec![step(1, 0.0, 10.0, vec![0.0])] };
        assert_eq!(validate_run(&a, &not_initial).violations[0].condition, 1);
    }

    #[test]
    fn chains_respect_resets() {
        // s0 -(reset h)-> s1 -(h in [1,2])-> s2 cannot fire at one instant.
        let a = TimedAutomaton::new(
            secs(5),
            (0..3).map(|i| State { label: format!("s{i}"), region: RegionRef::new() }).collect(),
            BTreeSet::from([0]),
            BTreeSet::from([2]),
            vec![Clock { name: "h".into(), role: ClockRole::Dwell }],
            vec![
                Transition { from: 0, to: 1, guard: Guard::trivial(), resets: BTreeSet::from([0]) },
                Transition { from: 1, to: 2, guard: Guard::trivial().with(0, secs(1), secs(2)), resets: BTreeSet::new() },
            ],
        )
        .unwrap();
        let chains = a.instant_chains(0, 3);
        assert_eq!(chains.len(), 1);
        assert_eq!(chains[0].states, vec![0, 1]);
        let from1 = a.instant_chains(1, 3);
        assert_eq!(from1[0].guard, Guard::trivial().with(0, secs(1), secs(2)));
    }

    #[test]
    fn dot_lists_states_and_guards() {
        let dot = eventually().to_dot();
        assert!(dot.contains("q1 [shape=doublecircle, label=\"s1\\nR\"]"));
        assert!(dot.contains("q0 -> q1 [label=\"kappa in [2,5]\"]"));
        assert!(dot.contains("init0 -> q0"));
    }

    #[test]
    fn invalid_guard_rejected() {
        let err = TimedAutomaton::new(
            secs(5),
            vec![State { label: "s".into(), region: RegionRef::new() }; 2],
            BTreeSet::from([0]),
            BTreeSet::from([1]),
            vec![Clock { name: "k".into(), role: ClockRole::Global }],
            vec![Transition { from: 0, to: 1, guard: Guard::trivial().with(0, secs(0), secs(6)), resets: BTreeSet::new() }],
        );
        assert!(matches!(err, Err(AutomatonError::Bounds(_))));
    }
}
