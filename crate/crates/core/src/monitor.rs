//! Sampled STL satisfaction checking of trajectories against polytopic
//! predicates.
//!
//! The sample grid is the uniform grid of step `dt` together with every
//! breakpoint of the signal shifted back by each sum of window endpoints
//! along a path of the formula tree. Dwell constraints that are met exactly
//! at segment junctions are therefore sampled at the instants that decide
//! them.

use std::collections::BTreeSet;

use thiserror::Error;

use crate::bezier::{eval_trajectory, BezierError, Trajectory};
use crate::lp::{solve_lp_with, Backend, LinearProgram, LpStatus, Tolerances};
use crate::regions::{Polytope, RegionTable, CONTAINS_TOL};
use crate::stl::{horizon, Formula, Kind, Time};

/// Slack when matching sample instants to window endpoints.
pub const TIME_TOL: f64 = 1e-9;

/// Default step is the horizon divided by this.
pub const DEFAULT_STEPS: f64 = 2000.0;

const MAX_OFFSETS: usize = 512;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MonitorError {
    #[error("predicate `{0}` has no region")]
    UnboundPredicate(String),
    #[error("formula horizon {formula} exceeds signal horizon {signal}")]
    HorizonExceeded { formula: f64, signal: f64 },
    #[error("segmentwise check does not apply: {0}")]
    NotApplicable(String),
    #[error("bad signal: {0}")]
    BadSignal(String),
    #[error(transparent)]
    Trajectory(#[from] BezierError),
}

/// A continuous signal over `[0, horizon]`.
pub trait Signal {
    fn horizon(&self) -> f64;
    fn dim(&self) -> usize;
    fn value(&self, t: f64) -> Result<Vec<f64>, MonitorError>;
    /// Instants where the signal may change character, including 0 and T.
    fn breakpoints(&self) -> Vec<f64>;
}

impl Signal for Trajectory {
    fn horizon(&self) -> f64 {
        Trajectory::horizon(self)
    }

    fn dim(&self) -> usize {
        Trajectory::dim(self)
    }

    fn value(&self, t: f64) -> Result<Vec<f64>, MonitorError> {
        Ok(eval_trajectory(self, t)?)
    }

    fn breakpoints(&self) -> Vec<f64> {
        Trajectory::breakpoints(self)
    }
}

/// Linear interpolation between knots with strictly increasing times.
#[derive(Clone, Debug, PartialEq)]
pub struct PiecewiseLinear {
    times: Vec<f64>,
    points: Vec<Vec<f64>>,
}

impl PiecewiseLinear {
    pub fn new(times: Vec<f64>, points: Vec<Vec<f64>>) -> Result<Self, MonitorError> {
        let bad = |m: &str| Err(MonitorError::BadSignal(m.to_string()));
        if times.is_empty() || times.len() != points.len() {
            return bad("need one point per knot");
        }
        if times[0] != 0.0 {
            return bad("first knot must be at 0");
        }
        if times.windows(2).any(|w| !(w[0] < w[1])) {
            return bad("knot times must increase strictly");
        }
        let dim = points[0].len();
        if points.iter().any(|p| p.len() != dim || p.iter().any(|v| !v.is_finite())) {
            return bad("points must share a dimension and be finite");
        }
        Ok(PiecewiseLinear { times, points })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }
}

impl Signal for PiecewiseLinear {
    fn horizon(&self) -> f64 {
        *self.times.last().unwrap()
    }

    fn dim(&self) -> usize {
        self.points[0].len()
    }

    fn value(&self, t: f64) -> Result<Vec<f64>, MonitorError> {
        if !(-TIME_TOL..=self.horizon() + TIME_TOL).contains(&t) {
            return Err(MonitorError::BadSignal(format!("t = {t} outside the signal")));
        }
        let k = self.times.partition_point(|&x| x < t);
        if k == 0 {
            return Ok(self.points[0].clone());
        }
        if k == self.times.len() {
            return Ok(self.points[k - 1].clone());
        }
        let (t0, t1) = (self.times[k - 1], self.times[k]);
        let s = (t - t0) / (t1 - t0);
        Ok(self.points[k - 1].iter().zip(&self.points[k]).map(|(a, b)| a + s * (b - a)).collect())
    }

    fn breakpoints(&self) -> Vec<f64> {
        self.times.clone()
    }
}

/// Signal values at sorted sample instants covering `[0, T]`.
#[derive(Clone, Debug, PartialEq)]
pub struct SampledSignal {
    times: Vec<f64>,
    points: Vec<Vec<f64>>,
    step: f64,
}

impl SampledSignal {
    /// Samples at the given instants; `step` is the nominal spacing.
    pub fn from_samples(times: Vec<f64>, points: Vec<Vec<f64>>, step: f64) -> Result<Self, MonitorError> {
        if !(step > 0.0) {
            return Err(MonitorError::BadSignal("step must be positive".into()));
        }
        if times.is_empty() || times.len() != points.len() || times[0] != 0.0 {
            return Err(MonitorError::BadSignal("samples must start at 0, one point each".into()));
        }
        if times.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(MonitorError::BadSignal("sample times must increase strictly".into()));
        }
        Ok(SampledSignal { times, points, step })
    }

    /// Uniform grid `0, dt, 2dt, …` with `T` appended.
    pub fn uniform(signal: &impl Signal, dt: f64) -> Result<Self, MonitorError> {
        let times = merge_times(uniform_times(signal.horizon(), dt)?);
        Self::at(signal, times, dt)
    }

    /// Uniform grid refined with the breakpoint shifts that matter for `f`.
    pub fn refined(signal: &impl Signal, f: &Formula, dt: f64) -> Result<Self, MonitorError> {
        let t_end = signal.horizon();
        let mut times = uniform_times(t_end, dt)?;
        let offsets = offsets(f);
        let breaks = signal.breakpoints();
        for &o in &offsets {
            times.push(o);
            for &b in &breaks {
                times.push(b - o);
            }
        }
        times.retain(|&t| (0.0..=t_end).contains(&t));
        Self::at(signal, merge_times(times), dt)
    }

    fn at(signal: &impl Signal, times: Vec<f64>, step: f64) -> Result<Self, MonitorError> {
        let points = times.iter().map(|&t| signal.value(t)).collect::<Result<_, _>>()?;
        SampledSignal::from_samples(times, points, step)
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn horizon(&self) -> f64 {
        *self.times.last().unwrap()
    }

    /// First sample index at or after `t`, allowing `TIME_TOL`.
    fn first_at_or_after(&self, t: f64) -> usize {
        self.times.partition_point(|&x| x < t - TIME_TOL)
    }

    /// One past the last sample index at or before `t`, allowing `TIME_TOL`.
    fn end_at_or_before(&self, t: f64) -> usize {
        self.times.partition_point(|&x| x <= t + TIME_TOL)
    }
}

fn uniform_times(t_end: f64, dt: f64) -> Result<Vec<f64>, MonitorError> {
    if !(dt > 0.0) || !(t_end >= 0.0) {
        return Err(MonitorError::BadSignal(format!("need dt > 0 and T >= 0, got dt = {dt}, T = {t_end}")));
    }
    let n = (t_end / dt).floor() as usize;
    let mut times: Vec<f64> = (0..=n).map(|k| k as f64 * dt).filter(|&t| t <= t_end).collect();
    times.push(t_end);
    Ok(times)
}

/// Sorts and drops instants closer than 1e-12 to their predecessor.
fn merge_times(mut times: Vec<f64>) -> Vec<f64> {
    times.sort_by(f64::total_cmp);
    let mut out: Vec<f64> = Vec::with_capacity(times.len());
    for t in times {
        match out.last() {
            Some(&last) if t - last <= 1e-12 => {}
            _ => out.push(t),
        }
    }
    if let Some(first) = out.first_mut() {
        if first.abs() <= 1e-12 {
            *first = 0.0;
        }
    }
    out
}

/// Sums of window endpoints along root-to-node paths, in seconds.
fn offsets(f: &Formula) -> Vec<f64> {
    fn go(f: &Formula, out: &mut BTreeSet<i64>) -> BTreeSet<i64> {
        let mut own = BTreeSet::from([0i64]);
        for c in f.children() {
            own.extend(go(c, out));
        }
        if let Some(w) = f.window() {
            let shifted: Vec<i64> = own.iter().flat_map(|&o| [o + w.lo.micros(), o + w.hi.micros()]).collect();
            own.extend(shifted);
        }
        while own.len() > MAX_OFFSETS {
            own.pop_last();
        }
        out.extend(own.iter().copied());
        own
    }
    let mut all = BTreeSet::new();
    go(f, &mut all);
    all.into_iter().map(|us| Time::from_micros(us).secs()).collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct Witness {
    /// The temporal node, printed.
    pub node: String,
    /// Time at which the node was evaluated.
    pub at: f64,
    pub holds: bool,
    /// Witnessing instant when it holds, first violating instant otherwise.
    pub instant: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Verdict {
    pub satisfied: bool,
    /// Smallest deadline slack over satisfied eventually/until witnesses
    /// (0 if there are none); minus the step when violated.
    pub margin: f64,
    pub witnesses: Vec<Witness>,
    /// True when the segmentwise hull certificate decided the verdict.
    pub certified: bool,
    pub samples: usize,
    pub warnings: Vec<String>,
}

/// Samples `signal` on the refined grid and checks `f` at time 0.
pub fn check(signal: &impl Signal, f: &Formula, regions: &RegionTable, dt: f64) -> Result<Verdict, MonitorError> {
    let h = horizon(f).secs();
    if h > signal.horizon() + TIME_TOL {
        return Err(MonitorError::HorizonExceeded { formula: h, signal: signal.horizon() });
    }
    let sampled = SampledSignal::refined(signal, f, dt)?;
    check_samples(&sampled, f, regions)
}

/// Checks `f` at time 0 on an already sampled signal.
pub fn check_samples(s: &SampledSignal, f: &Formula, regions: &RegionTable) -> Result<Verdict, MonitorError> {
    let h = horizon(f).secs();
    if h > s.horizon() + TIME_TOL {
        return Err(MonitorError::HorizonExceeded { formula: h, signal: s.horizon() });
    }
    let eval = Evaluator { s, regions };
    let mut tables = Tables::default();
    let root = eval.eval(f, &mut tables)?;
    let satisfied = tables.rows[root][0];
    let mut witnesses = Vec::new();
    eval.explain(f, root, 0, &tables, &mut witnesses);
    let margin = if satisfied {
        let mut slack = f64::INFINITY;
        collect_slack(f, &witnesses, &mut slack);
        if slack.is_finite() { slack } else { 0.0 }
    } else {
        -s.step
    };
    let mut warnings = Vec::new();
    let narrowest = narrowest_window(f);
    if narrowest.is_finite() && s.step > narrowest / 10.0 {
        warnings.push(format!("step {} exceeds a tenth of the narrowest window {}", s.step, narrowest));
    }
    Ok(Verdict { satisfied, margin, witnesses, certified: false, samples: s.times.len(), warnings })
}

fn narrowest_window(f: &Formula) -> f64 {
    let own = match f.window() {
        Some(w) if w.hi > w.lo => (w.hi - w.lo).secs(),
        _ => f64::INFINITY,
    };
    f.children().into_iter().map(narrowest_window).fold(own, f64::min)
}

fn collect_slack(f: &Formula, witnesses: &[Witness], slack: &mut f64) {
    let printed = f.to_string();
    for w in witnesses {
        if !w.holds || w.node != printed {
            continue;
        }
        if let (Some(win), Some(inst), Kind::Eventually { .. } | Kind::Until { .. }) = (f.window(), w.instant, &f.kind) {
            *slack = slack.min(w.at + win.hi.secs() - inst);
        }
    }
    for c in f.children() {
        collect_slack(c, witnesses, slack);
    }
}

/// Per-node truth tables in post-order, with each node's child ids.
#[derive(Default)]
struct Tables {
    rows: Vec<Vec<bool>>,
    kids: Vec<Vec<usize>>,
}

struct Evaluator<'a> {
    s: &'a SampledSignal,
    regions: &'a RegionTable,
}

impl Evaluator<'_> {
    fn n(&self) -> usize {
        self.s.times.len()
    }

    /// Sample index range `[lo, hi)` for the window `[t_i + a, t_i + b]`.
    fn window(&self, i: usize, a: f64, b: f64) -> (usize, usize) {
        let t = self.s.times[i];
        (self.s.first_at_or_after(t + a), self.s.end_at_or_before(t + b))
    }

    /// Evaluates `f` at every sample; returns the id of its table.
    fn eval(&self, f: &Formula, tables: &mut Tables) -> Result<usize, MonitorError> {
        let n = self.n();
        let kids = f.children().into_iter().map(|c| self.eval(c, tables)).collect::<Result<Vec<_>, _>>()?;
        let t = &tables.rows;
        let row = match &f.kind {
            Kind::True => vec![true; n],
            Kind::Pred(p) => {
                let poly: &Polytope = self.regions.get(p).ok_or_else(|| MonitorError::UnboundPredicate(p.clone()))?;
                if poly.dim() != self.s.points[0].len() {
                    return Err(MonitorError::BadSignal(format!("predicate `{p}` has dimension {}", poly.dim())));
                }
                self.s.points.iter().map(|x| poly.max_violation(x) <= CONTAINS_TOL).collect()
            }
            Kind::Not(_) => t[kids[0]].iter().map(|v| !v).collect(),
            Kind::And(_) | Kind::Or(_) => {
                let is_and = matches!(f.kind, Kind::And(_));
                let mut acc = vec![is_and; n];
                for &k in &kids {
                    for (a, &v) in acc.iter_mut().zip(&t[k]) {
                        *a = if is_and { *a && v } else { *a || v };
                    }
                }
                acc
            }
            Kind::Eventually { window, .. } | Kind::Always { window, .. } => {
                let always = matches!(f.kind, Kind::Always { .. });
                let c = &t[kids[0]];
                let mut prefix = vec![0usize; n + 1];
                for i in 0..n {
                    prefix[i + 1] = prefix[i] + usize::from(c[i]);
                }
                (0..n)
                    .map(|i| {
                        let (lo, hi) = self.window(i, window.lo.secs(), window.hi.secs());
                        if lo >= hi {
                            // Empty window: G holds vacuously, F fails.
                            return always;
                        }
                        let trues = prefix[hi] - prefix[lo];
                        if always { trues == hi - lo } else { trues > 0 }
                    })
                    .collect()
            }
            Kind::Until { window, .. } => {
                let (l, r) = (&t[kids[0]], &t[kids[1]]);
                // next_false[i]: first index >= i where lhs fails.
                let mut next_false = vec![n; n + 1];
                let mut next_true_r = vec![n; n + 1];
                for i in (0..n).rev() {
                    next_false[i] = if l[i] { next_false[i + 1] } else { i };
                    next_true_r[i] = if r[i] { i } else { next_true_r[i + 1] };
                }
                (0..n)
                    .map(|i| {
                        let (lo, hi) = self.window(i, window.lo.secs(), window.hi.secs());
                        let j = next_true_r[lo.min(n)];
                        j < hi && j < next_false[i]
                    })
                    .collect()
            }
        };
        tables.rows.push(row);
        tables.kids.push(kids);
        Ok(tables.rows.len() - 1)
    }

    /// Records witnesses for the temporal nodes that decide `f` (table `id`)
    /// at sample `i`.
    fn explain(&self, f: &Formula, id: usize, i: usize, tables: &Tables, out: &mut Vec<Witness>) {
        let kids = &tables.kids[id];
        let rows = &tables.rows;
        let holds = rows[id][i];
        let t = self.s.times[i];
        let record = |instant: Option<usize>, out: &mut Vec<Witness>| {
            out.push(Witness { node: f.to_string(), at: t, holds, instant: instant.map(|j| self.s.times[j]) });
        };
        let children = f.children();
        match &f.kind {
            Kind::True | Kind::Pred(_) => {}
            Kind::Not(_) | Kind::And(_) => {
                for (c, &k) in children.iter().zip(kids) {
                    self.explain(c, k, i, tables, out);
                }
            }
            Kind::Or(_) => match children.iter().zip(kids).find(|(_, &k)| rows[k][i]) {
                Some((c, &k)) => self.explain(c, k, i, tables, out),
                None => {
                    for (c, &k) in children.iter().zip(kids) {
                        self.explain(c, k, i, tables, out);
                    }
                }
            },
            Kind::Eventually { window, .. } | Kind::Always { window, .. } => {
                let always = matches!(f.kind, Kind::Always { .. });
                let (lo, hi) = self.window(i, window.lo.secs(), window.hi.secs());
                // F: first true instant. G: first false instant.
                let j = (lo..hi).find(|&j| rows[kids[0]][j] != always);
                record(j, out);
                if let Some(j) = j {
                    self.explain(children[0], kids[0], j, tables, out);
                }
            }
            Kind::Until { window, .. } => {
                let (lo, hi) = self.window(i, window.lo.secs(), window.hi.secs());
                let j = if holds { (lo..hi).find(|&j| rows[kids[1]][j]) } else { None };
                record(j, out);
                if let Some(j) = j {
                    self.explain(children[1], kids[1], j, tables, out);
                }
            }
        }
    }
}

/// For `G[a,b] φ` with `φ` a conjunction of literals: certifies satisfaction
/// when, on every segment meeting `[a,b]`, the control polygon lies inside
/// each positive literal's region and misses each negated one. Otherwise
/// the sampled check decides.
pub fn check_segmentwise(
    traj: &Trajectory,
    f: &Formula,
    regions: &RegionTable,
    dt: f64,
) -> Result<Verdict, MonitorError> {
    let Kind::Always { child, window } = &f.kind else {
        return Err(MonitorError::NotApplicable(format!("`{f}` is not an always node")));
    };
    let mut pos = Vec::new();
    let mut neg = Vec::new();
    collect_literals(child, &mut pos, &mut neg)
        .ok_or_else(|| MonitorError::NotApplicable(format!("`{child}` is not a conjunction of literals")))?;
    let lookup = |p: &String| regions.get(p).ok_or_else(|| MonitorError::UnboundPredicate(p.clone()));
    let pos: Vec<&Polytope> = pos.iter().map(lookup).collect::<Result<_, _>>()?;
    let neg: Vec<&Polytope> = neg.iter().map(lookup).collect::<Result<_, _>>()?;
    let (a, b) = (window.lo.secs(), window.hi.secs());
    let mut certified = true;
    for seg in traj.segments() {
        if seg.end() < a - TIME_TOL || seg.start() > b + TIME_TOL {
            continue;
        }
        let pts = seg.spatial.points();
        if !pos.iter().all(|p| pts.iter().all(|x| p.max_violation(x) <= CONTAINS_TOL)) {
            certified = false;
            break;
        }
        if !neg.iter().all(|p| hull_misses(pts, p)) {
            certified = false;
            break;
        }
    }
    if certified {
        return Ok(Verdict {
            satisfied: true,
            margin: 0.0,
            witnesses: Vec::new(),
            certified: true,
            samples: 0,
            warnings: Vec::new(),
        });
    }
    check(traj, f, regions, dt)
}

fn collect_literals(f: &Formula, pos: &mut Vec<String>, neg: &mut Vec<String>) -> Option<()> {
    match &f.kind {
        Kind::True => Some(()),
        Kind::Pred(p) => {
            pos.push(p.clone());
            Some(())
        }
        Kind::Not(c) => match &c.kind {
            Kind::Pred(p) => {
                neg.push(p.clone());
                Some(())
            }
            _ => None,
        },
        Kind::And(cs) => cs.iter().try_for_each(|c| collect_literals(c, pos, neg)),
        _ => None,
    }
}

/// True when the convex hull of `pts` provably misses `p`: no convex
/// combination of the points satisfies `p`'s inequalities.
fn hull_misses(pts: &[Vec<f64>], p: &Polytope) -> bool {
    let mut lp = LinearProgram::new();
    let lam = lp.add_vars(pts.len(), 0.0, f64::INFINITY);
    lp.add_eq((0..pts.len()).map(|k| (lam + k, 1.0)), 1.0);
    for (row, rhs) in p.rows() {
        let coeffs = (0..pts.len()).map(|k| (lam + k, row.iter().zip(&pts[k]).map(|(a, x)| a * x).sum::<f64>()));
        lp.add_le(coeffs, rhs + CONTAINS_TOL);
    }
    solve_lp_with(&lp, Backend::Simplex, &Tolerances::default()).status == LpStatus::Infeasible
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeMap;

    use super::*;
    use crate::bezier::{BezierCurve, TrajectorySegment};
    use crate::stl::parse_formula;

    fn ramp(t_end: f64) -> PiecewiseLinear {
        PiecewiseLinear::new(vec![0.0, t_end], vec![vec![0.0], vec![t_end]]).unwrap()
    }

    fn line_table() -> RegionTable {
        let half = |lo: f64, hi: f64| Polytope::from_box(&[lo], &[hi]).unwrap();
        RegionTable::new(
            half(-100.0, 100.0),
            BTreeMap::from([
                ("ge8".to_string(), half(8.0, 100.0)),
                ("le6".to_string(), half(-100.0, 6.0)),
                ("ge5".to_string(), half(5.0, 100.0)),
                ("mid".to_string(), half(2.0, 4.0)),
            ]),
        )
        .unwrap()
    }

    fn verdict(sig: &impl Signal, f: &str) -> Verdict {
        check(sig, &parse_formula(f).unwrap(), &line_table(), 0.005).unwrap()
    }

    #[test]
    fn crossing_at_eight() {
        let r = ramp(10.0);
        assert!(!verdict(&r, "F[0,5] ge8").satisfied);
        let v = verdict(&r, "F[0,9] ge8");
        assert!(v.satisfied);
        assert_eq!(v.witnesses[0].instant, Some(8.0));
        assert!((v.margin - 1.0).abs() < 1e-9);
    }

    #[test]
    fn until_witness_between_five_and_six() {
        let v = verdict(&ramp(10.0), "le6 U[0,10] ge5");
        assert!(v.satisfied);
        let w = v.witnesses[0].instant.unwrap();
        assert!((5.0..=6.0).contains(&w));
        assert!(!verdict(&ramp(10.0), "le6 U[0,10] ge8").satisfied);
    }

    #[test]
    fn constant_signal_under_always() {
        let s = PiecewiseLinear::new(vec![0.0, 4.0], vec![vec![3.0], vec![3.0]]).unwrap();
        assert!(verdict(&s, "G[0,4] mid").satisfied);
        assert!(!verdict(&s, "G[0,4] !mid").satisfied);
        let v = verdict(&s, "G[0,4] ge8");
        assert!(!v.satisfied && v.margin < 0.0);
        assert_eq!(v.witnesses[0].instant, Some(0.0));
    }

    #[test]
    fn horizon_and_binding_errors() {
        let f = parse_formula("F[0,20] ge8").unwrap();
        assert!(matches!(check(&ramp(10.0), &f, &line_table(), 0.01), Err(MonitorError::HorizonExceeded { .. })));
        let f = parse_formula("F[0,2] nowhere").unwrap();
        assert_eq!(check(&ramp(10.0), &f, &line_table(), 0.01), Err(MonitorError::UnboundPredicate("nowhere".into())));
    }

    #[test]
    fn tight_dwell_found_by_refinement() {
        // In [2,4] exactly on [1/3, 7/3] shifted so no uniform sample lands on
        // the entry instant.
        let times = vec![0.0, 1.0 / 3.0, 7.0 / 3.0, 4.0];
        let pts = vec![vec![0.0], vec![2.0], vec![4.0], vec![9.0]];
        let s = PiecewiseLinear::new(times, pts).unwrap();
        assert!(verdict(&s, "F[0,1] G[0,2] mid").satisfied);
        assert!(!verdict(&s, "F[0,1] G[0,2.01] mid").satisfied);
    }

    #[test]
    fn witnesses_follow_nested_nodes() {
        let v = verdict(&ramp(10.0), "F[0,5] G[0,2] mid");
        assert!(v.satisfied);
        assert_eq!(v.witnesses.len(), 1 + 1);
        assert_eq!(v.witnesses[0].node, "F[0,5] G[0,2] mid");
        assert_eq!(v.witnesses[0].instant, Some(2.0));
        assert_eq!(v.witnesses[1].node, "G[0,2] mid");
        assert!(v.witnesses[1].holds);
    }

    #[test]
    fn wide_step_warns() {
        let f = parse_formula("F[0,1] ge8").unwrap();
        let v = check(&ramp(10.0), &f, &line_table(), 0.5).unwrap();
        assert_eq!(v.warnings.len(), 1);
    }

    fn square_table() -> RegionTable {
        let bx = |lo: [f64; 2], hi: [f64; 2]| Polytope::from_box(&lo, &hi).unwrap();
        RegionTable::new(
            bx([-10.0, -10.0], [10.0, 10.0]),
            BTreeMap::from([
                ("R".to_string(), bx([0.0, 0.0], [4.0, 4.0])),
                ("B".to_string(), bx([5.0, 5.0], [6.0, 6.0])),
                ("D".to_string(), bx([-1.0, 0.5], [10.0, 1.5])),
            ]),
        )
        .unwrap()
    }

    fn traj(points: Vec<Vec<f64>>) -> Trajectory {
        let k = points.len() - 1;
        let timing = BezierCurve::scalar(&(0..=k).map(|i| 4.0 * i as f64 / k as f64).collect::<Vec<_>>()).unwrap();
        let seg = TrajectorySegment::new(BezierCurve::new(points).unwrap(), timing).unwrap();
        Trajectory::new(vec![seg], 4.0).unwrap()
    }

    #[test]
    fn segmentwise_certifies_hull_inside() {
        let t = traj(vec![vec![1.0, 1.0], vec![3.0, 3.0], vec![2.0, 1.0]]);
        let v = check_segmentwise(&t, &parse_formula("G[0,4] (R & !B)").unwrap(), &square_table(), 0.002).unwrap();
        assert!(v.satisfied && v.certified);
    }

    #[test]
    fn segmentwise_falls_back() {
        // The middle control point leaves D but the curve stays inside.
        let t = traj(vec![vec![0.0, 1.0], vec![2.0, 1.8], vec![4.0, 0.8]]);
        let f = parse_formula("G[0,4] D").unwrap();
        let v = check_segmentwise(&t, &f, &square_table(), 0.002).unwrap();
        assert!(v.satisfied && !v.certified);
        let err = check_segmentwise(&t, &parse_formula("F[0,4] D").unwrap(), &square_table(), 0.01);
        assert!(matches!(err, Err(MonitorError::NotApplicable(_))));
    }

    #[test]
    fn predicate_negation_is_dual() {
        let s = PiecewiseLinear::new(vec![0.0, 2.0, 4.0], vec![vec![0.0], vec![3.0], vec![9.0]]).unwrap();
        let sampled = SampledSignal::uniform(&s, 0.01).unwrap();
        for p in ["ge8", "mid", "le6"] {
            let pos = check_samples(&sampled, &parse_formula(p).unwrap(), &line_table()).unwrap();
            let neg = check_samples(&sampled, &parse_formula(&format!("!{p}")).unwrap(), &line_table()).unwrap();
            assert_ne!(pos.satisfied, neg.satisfied);
        }
    }

    #[test]
    fn refined_grid_contains_shifted_breakpoints() {
        let s = PiecewiseLinear::new(vec![0.0, 1.3, 4.0], vec![vec![0.0], vec![1.0], vec![2.0]]).unwrap();
        let g = SampledSignal::refined(&s, &parse_formula("F[0,1] G[0,0.25] mid").unwrap(), 1.0).unwrap();
        for t in [1.3, 0.3, 1.05, 0.05, 3.0, 2.75, 1.25, 0.25] {
            assert!(g.times().iter().any(|&x| (x - t).abs() < 1e-12), "missing {t}: {:?}", g.times());
        }
    }
}
