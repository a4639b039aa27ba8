//! End-to-end planning: formula to automaton, JTS, GCS, solve, trajectory.

use std::time::{Duration, Instant};

use thiserror::Error;

use crate::automaton::{compile, validate_run, AutomatonError, Bindings, RunReport, TaRun, TimedAutomaton};
use crate::bezier::Trajectory;
use crate::gcs::{
    build_gcs, encode_relaxation, reconstruct, round_paths, solve_exact, solve_restricted, ExactOutcome, GcsError,
    GcsParams, GcsProblem, Reconstruction, RestrictedSolution, DEFAULT_NODE_LIMIT,
};
use crate::jts::{build_jts, JtsError, JtsOptions, JtsStats};
use crate::lp::{Backend, LpStatus};
use crate::monitor::{check, MonitorError, Verdict, DEFAULT_STEPS};
use crate::regions::{Decomposition, Polytope, RegionTable};
use crate::stl::{Formula, Time};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PlanError {
    #[error(transparent)]
    Automaton(#[from] AutomatonError),
    #[error(transparent)]
    Jts(#[from] JtsError),
    #[error(transparent)]
    Gcs(#[from] GcsError),
    #[error(transparent)]
    Monitor(#[from] MonitorError),
}

#[derive(Clone, Debug)]
pub struct Scenario {
    pub name: String,
    pub formula: Formula,
    pub table: RegionTable,
    pub cells: Decomposition,
    pub bindings: Bindings,
    pub x0: Vec<f64>,
    pub horizon: f64,
    pub velocity: Polytope,
    pub smoothness: usize,
    pub degree: usize,
    pub epsilon: f64,
    pub copies: usize,
    pub time_weight: f64,
}

impl Scenario {
    pub fn gcs_params(&self) -> GcsParams {
        GcsParams {
            x0: self.x0.clone(),
            horizon: self.horizon,
            velocity: self.velocity.clone(),
            smoothness: self.smoothness,
            degree: self.degree,
            epsilon: self.epsilon,
            time_weight: self.time_weight,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Mode {
    #[default]
    Relax,
    Exact,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PlanOptions {
    pub mode: Mode,
    pub trials: usize,
    pub seed: u64,
    /// Backend for the relaxation and branch-and-bound nodes.
    pub backend: Backend,
    pub node_limit: usize,
    /// Monitor step; `None` means `T / 2000`.
    pub monitor_dt: Option<f64>,
}

impl Default for PlanOptions {
    fn default() -> Self {
        PlanOptions {
            mode: Mode::Relax,
            trials: 100,
            seed: 0,
            backend: Backend::InteriorPoint,
            node_limit: DEFAULT_NODE_LIMIT,
            monitor_dt: None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PlanStatus {
    Feasible,
    Infeasible,
    RelaxationInfeasible,
    RoundingFailed,
}

impl PlanStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            PlanStatus::Feasible => "Feasible",
            PlanStatus::Infeasible => "Infeasible",
            PlanStatus::RelaxationInfeasible => "RelaxationInfeasible",
            PlanStatus::RoundingFailed => "RoundingFailed",
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct PlanStats {
    pub ta_states: usize,
    pub ta_clocks: usize,
    pub jts: Option<JtsStats>,
    pub gcs_vertices: usize,
    pub gcs_edges: usize,
    pub variables: usize,
    pub constraints: usize,
    pub candidates: usize,
    pub candidates_tried: usize,
    pub bb_nodes: Option<usize>,
}

/// Wall-clock time per phase: STL to TA, forming the GCS, solving.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Timings {
    pub compile: Duration,
    pub form: Duration,
    pub solve: Duration,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PlanResult {
    pub status: PlanStatus,
    /// Why the result is not Feasible, when known.
    pub diagnostic: Option<String>,
    pub edges: Vec<usize>,
    /// Labels of the JTS states on the chosen path.
    pub path: Vec<String>,
    pub points: Vec<Vec<f64>>,
    pub trajectory: Option<Trajectory>,
    pub run: Option<TaRun>,
    pub run_report: Option<RunReport>,
    pub relaxed_cost: Option<f64>,
    pub cost: Option<f64>,
    pub verdict: Option<Verdict>,
    pub stats: PlanStats,
    pub timings: Timings,
}

impl PlanResult {
    fn empty(status: PlanStatus, diagnostic: String, stats: PlanStats, timings: Timings) -> Self {
        PlanResult {
            status,
            diagnostic: Some(diagnostic),
            edges: Vec::new(),
            path: Vec::new(),
            points: Vec::new(),
            trajectory: None,
            run: None,
            run_report: None,
            relaxed_cost: None,
            cost: None,
            verdict: None,
            stats,
            timings,
        }
    }

    pub fn verified(&self) -> bool {
        self.status == PlanStatus::Feasible
            && self.verdict.as_ref().is_some_and(|v| v.satisfied)
            && self.run_report.as_ref().is_some_and(|r| r.is_valid())
    }
}

fn structural(e: &PlanError) -> bool {
    matches!(
        e,
        PlanError::Automaton(AutomatonError::EmptyProduct(_) | AutomatonError::EmptyAutomaton(_))
            | PlanError::Jts(JtsError::EmptyJts(_))
            | PlanError::Gcs(GcsError::NoSourceEdge | GcsError::NoTargetEdge)
    )
}

pub fn compile_scenario(s: &Scenario) -> Result<TimedAutomaton, PlanError> {
    Ok(compile(&s.formula, &s.bindings, &s.table, Time::from_secs_f64(s.horizon))?)
}

pub fn build_problem(s: &Scenario, ta: &TimedAutomaton) -> Result<GcsProblem, PlanError> {
    let options = JtsOptions { copies: s.copies, ..JtsOptions::default() };
    let jts = build_jts(ta, &s.cells, &s.table, options)?.trim()?;
    Ok(build_gcs(&jts, s.gcs_params())?)
}

pub fn plan(s: &Scenario, opts: &PlanOptions) -> Result<PlanResult, PlanError> {
    let mut stats = PlanStats::default();
    let mut timings = Timings::default();
    let clock = Instant::now();
    let ta = match compile_scenario(s) {
        Ok(ta) => ta,
        Err(e) if structural(&e) => {
            timings.compile = clock.elapsed();
            return Ok(PlanResult::empty(PlanStatus::Infeasible, e.to_string(), stats, timings));
        }
        Err(e) => return Err(e),
    };
    stats.ta_states = ta.num_states();
    stats.ta_clocks = ta.num_clocks();
    timings.compile = clock.elapsed();

    let clock = Instant::now();
    let problem = match build_problem(s, &ta) {
        Ok(p) => p,
        Err(e) if structural(&e) => {
            timings.form = clock.elapsed();
            return Ok(PlanResult::empty(PlanStatus::Infeasible, e.to_string(), stats, timings));
        }
        Err(e) => return Err(e),
    };
    stats.jts = Some(problem.jts.stats());
    stats.gcs_vertices = problem.num_vertices();
    stats.gcs_edges = problem.edges.len();
    stats.variables = problem.num_variables();
    stats.constraints = problem.num_constraints();
    timings.form = clock.elapsed();

    let clock = Instant::now();
    let mut result = match opts.mode {
        Mode::Relax => solve_relaxed(s, &ta, &problem, opts, &mut stats)?,
        Mode::Exact => solve_branch_and_bound(s, &ta, &problem, opts, &mut stats)?,
    };
    timings.solve = clock.elapsed();
    result.stats = stats;
    result.timings = timings;
    Ok(result)
}

fn solve_relaxed(
    s: &Scenario,
    ta: &TimedAutomaton,
    p: &GcsProblem,
    opts: &PlanOptions,
    stats: &mut PlanStats,
) -> Result<PlanResult, PlanError> {
    let relaxed = encode_relaxation(p).solve(opts.backend);
    match relaxed.status {
        LpStatus::Optimal => {}
        LpStatus::Infeasible => {
            return Ok(PlanResult::empty(PlanStatus::RelaxationInfeasible, "relaxation infeasible".into(), stats.clone(), Timings::default()))
        }
        LpStatus::Unbounded => return Err(GcsError::SolverFailure("relaxation unbounded".into()).into()),
        LpStatus::NumericalFailure => {
            let msg = relaxed.solution.diagnostic.clone().unwrap_or_else(|| "numerical failure in relaxation".into());
            return Err(GcsError::SolverFailure(msg).into());
        }
    }
    let candidates = match round_paths(p, &relaxed, opts.trials, opts.seed) {
        Ok(c) => c,
        Err(GcsError::NoCandidate) => {
            let mut r = PlanResult::empty(PlanStatus::RoundingFailed, GcsError::NoCandidate.to_string(), stats.clone(), Timings::default());
            r.relaxed_cost = Some(relaxed.cost);
            return Ok(r);
        }
        Err(e) => return Err(e.into()),
    };
    stats.candidates = candidates.len();
    let mut last_issue = format!("none of {} rounded paths admits a solution", candidates.len());
    for path in &candidates {
        stats.candidates_tried += 1;
        let Some(sol) = solve_restricted(p, path)? else { continue };
        match finish(s, ta, p, &sol, opts) {
            Ok(mut r) => {
                r.relaxed_cost = Some(relaxed.cost);
                return Ok(r);
            }
            Err(PlanError::Gcs(GcsError::ConstraintResidual(res))) => {
                last_issue = GcsError::ConstraintResidual(res).to_string();
            }
            Err(e) => return Err(e),
        }
    }
    let mut r = PlanResult::empty(PlanStatus::RoundingFailed, last_issue, stats.clone(), Timings::default());
    r.relaxed_cost = Some(relaxed.cost);
    Ok(r)
}

fn solve_branch_and_bound(
    s: &Scenario,
    ta: &TimedAutomaton,
    p: &GcsProblem,
    opts: &PlanOptions,
    stats: &mut PlanStats,
) -> Result<PlanResult, PlanError> {
    match solve_exact(p, opts.backend, opts.node_limit)? {
        ExactOutcome::Infeasible { nodes } => {
            stats.bb_nodes = Some(nodes);
            Ok(PlanResult::empty(PlanStatus::Infeasible, format!("branch and bound exhausted after {nodes} nodes"), stats.clone(), Timings::default()))
        }
        ExactOutcome::Optimal(r) => {
            stats.bb_nodes = Some(r.nodes);
            let mut out = finish(s, ta, p, &r.solution, opts)?;
            out.relaxed_cost = Some(r.root_bound);
            Ok(out)
        }
    }
}

fn finish(
    s: &Scenario,
    ta: &TimedAutomaton,
    p: &GcsProblem,
    sol: &RestrictedSolution,
    opts: &PlanOptions,
) -> Result<PlanResult, PlanError> {
    let Reconstruction { trajectory, run, .. } = reconstruct(p, ta, sol)?;
    let report = validate_run(ta, &run);
    let dt = opts.monitor_dt.unwrap_or(s.horizon / DEFAULT_STEPS);
    let verdict = check(&trajectory, &s.formula, &s.table, dt)?;
    Ok(PlanResult {
        status: PlanStatus::Feasible,
        diagnostic: None,
        edges: sol.edges.clone(),
        path: sol.states.iter().map(|&q| p.jts.label(q)).collect(),
        points: sol.points.clone(),
        trajectory: Some(trajectory),
        run: Some(run),
        run_report: Some(report),
        relaxed_cost: None,
        cost: Some(sol.cost),
        verdict: Some(verdict),
        stats: PlanStats::default(),
        timings: Timings::default(),
    })
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeMap;

    use super::*;
    use crate::bezier::eval_trajectory;
    use crate::stl::parse_formula;

    fn line(lo: f64, hi: f64) -> Polytope {
        Polytope::from_box(&[lo], &[hi]).unwrap()
    }

    pub(crate) fn corridor(formula: &str, vmax: f64) -> Scenario {
        let table = RegionTable::new(line(0.0, 10.0), BTreeMap::from([("goal".to_string(), line(8.0, 10.0)), ("near".to_string(), line(0.0, 2.0))])).unwrap();
        Scenario {
            name: "corridor".into(),
            formula: parse_formula(formula).unwrap(),
            table,
            cells: Decomposition::new(vec![("a".into(), line(0.0, 6.0)), ("b".into(), line(4.0, 10.0))]).unwrap(),
            bindings: Bindings::default(),
            x0: vec![0.0],
            horizon: 5.0,
            velocity: line(-vmax, vmax),
            smoothness: 1,
            degree: 3,
            epsilon: 1e-3,
            copies: 1,
            time_weight: 0.0,
        }
    }

    #[test]
    fn corridor_relax_and_exact_agree() {
        let s = corridor("F[0,5] goal", 3.0);
        let relax = plan(&s, &PlanOptions::default()).unwrap();
        assert!(relax.verified(), "{relax:?}");
        assert!((relax.cost.unwrap() - 8.0).abs() < 1e-6);
        let x = eval_trajectory(relax.trajectory.as_ref().unwrap(), 0.0).unwrap();
        assert_eq!(x, vec![0.0]);
        let exact = plan(&s, &PlanOptions { mode: Mode::Exact, ..PlanOptions::default() }).unwrap();
        assert!(exact.verified());
        assert!(relax.relaxed_cost.unwrap() <= exact.cost.unwrap() + 1e-6);
        assert!(exact.cost.unwrap() <= relax.cost.unwrap() + 1e-6);
    }

    #[test]
    fn slow_corridor_is_never_feasible() {
        let s = corridor("F[0,5] goal", 1.0);
        let relax = plan(&s, &PlanOptions::default()).unwrap();
        assert!(matches!(relax.status, PlanStatus::RelaxationInfeasible | PlanStatus::RoundingFailed));
        assert!(relax.trajectory.is_none());
        let exact = plan(&s, &PlanOptions { mode: Mode::Exact, ..PlanOptions::default() }).unwrap();
        assert_eq!(exact.status, PlanStatus::Infeasible);
    }

    #[test]
    fn trivial_task_stays_put() {
        let s = corridor("G[0,5] true", 3.0);
        let r = plan(&s, &PlanOptions::default()).unwrap();
        assert!(r.verified());
        assert!(r.cost.unwrap().abs() < 1e-9);
    }

    #[test]
    fn unreachable_product_reported_infeasible() {
        let s = corridor("G[0,5] goal & G[0,5] near", 3.0);
        let r = plan(&s, &PlanOptions::default()).unwrap();
        assert_eq!(r.status, PlanStatus::Infeasible);
        assert!(r.diagnostic.is_some());
        let r = plan(&corridor("G[0,5] goal", 3.0), &PlanOptions::default()).unwrap();
        assert_ne!(r.status, PlanStatus::Feasible);
    }
}
