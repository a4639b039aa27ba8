use std::cmp::Ordering;
use std::collections::BinaryHeap;

use super::{encode_relaxation, round_paths, solve_restricted, GcsError, GcsProblem, RelaxedSolution, RestrictedSolution, Vertex};
use crate::lp::{Backend, LpStatus, Tolerances};

pub const DEFAULT_NODE_LIMIT: usize = 100_000;

/// Relative optimality gap; interior point bounds are only accurate to about 1e-7.
pub const GAP_TOL: f64 = 1e-6;

const ROOT_ROUNDING_TRIALS: usize = 20;
const NODE_ROUNDING_TRIALS: usize = 2;

#[derive(Clone, Debug, PartialEq)]
pub struct ExactResult {
    pub solution: RestrictedSolution,
    /// Optimum of the root relaxation.
    pub root_bound: f64,
    pub nodes: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub enum ExactOutcome {
    Optimal(ExactResult),
    Infeasible { nodes: usize },
}

struct Node {
    bound: f64,
    id: usize,
    fixed: Vec<(usize, bool)>,
    relaxed: RelaxedSolution,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Node {}

impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Node {
    // Reversed so the max-heap pops the smallest bound, oldest first.
    fn cmp(&self, other: &Self) -> Ordering {
        other.bound.total_cmp(&self.bound).then(other.id.cmp(&self.id))
    }
}

/// Most fractional flow; ties go to the lowest edge id.
fn branching_edge(flows: &[f64], tol: f64) -> Option<usize> {
    let mut best: Option<(f64, usize)> = None;
    for (e, &f) in flows.iter().enumerate() {
        if f <= tol || f >= 1.0 - tol {
            continue;
        }
        let dist = (f - 0.5).abs();
        if best.map_or(true, |(d, _)| dist < d - 1e-12) {
            best = Some((dist, e));
        }
    }
    best.map(|(_, e)| e)
}

/// Follows the unit-flow edges from the source.
fn integral_path(p: &GcsProblem, flows: &[f64]) -> Option<Vec<usize>> {
    let mut at = Vertex::Source;
    let mut path = Vec::new();
    while at != Vertex::Target {
        let e = (0..p.edges.len()).find(|&e| p.edges[e].from == at && flows[e] > 0.5)?;
        path.push(e);
        at = p.edges[e].to;
        if path.len() > p.edges.len() {
            return None;
        }
    }
    Some(path)
}

fn lp_outcome(r: RelaxedSolution) -> Result<Option<RelaxedSolution>, GcsError> {
    match r.status {
        LpStatus::Optimal => Ok(Some(r)),
        LpStatus::Infeasible => Ok(None),
        LpStatus::Unbounded => Err(GcsError::SolverFailure("relaxation unbounded".into())),
        LpStatus::NumericalFailure => Err(GcsError::SolverFailure(
            r.solution.diagnostic.unwrap_or_else(|| "numerical failure in relaxation".into()),
        )),
    }
}

fn prunable(bound: f64, incumbent: &Option<RestrictedSolution>) -> bool {
    incumbent.as_ref().map_or(false, |inc| bound >= inc.cost - GAP_TOL * inc.cost.abs().max(1.0))
}

fn offer(incumbent: &mut Option<RestrictedSolution>, sol: RestrictedSolution) {
    if incumbent.as_ref().map_or(true, |inc| sol.cost < inc.cost) {
        *incumbent = Some(sol);
    }
}

/// Rounds the node's flows into paths and keeps the best restricted solution.
fn round_into(
    p: &GcsProblem,
    r: &RelaxedSolution,
    trials: usize,
    seed: u64,
    incumbent: &mut Option<RestrictedSolution>,
) -> Result<(), GcsError> {
    let paths = match round_paths(p, r, trials, seed) {
        Ok(paths) => paths,
        Err(GcsError::NoCandidate) => return Ok(()),
        Err(e) => return Err(e),
    };
    for path in paths {
        if let Some(sol) = solve_restricted(p, &path)? {
            offer(incumbent, sol);
        }
    }
    Ok(())
}

/// Best-first branch and bound on the edge flows of the relaxation.
pub fn solve_exact(p: &GcsProblem, backend: Backend, node_limit: usize) -> Result<ExactOutcome, GcsError> {
    let relax = encode_relaxation(p);
    let tol = Tolerances::default().integrality;
    let Some(root) = lp_outcome(relax.solve(backend))? else {
        return Ok(ExactOutcome::Infeasible { nodes: 1 });
    };
    let root_bound = root.cost;
    let mut incumbent: Option<RestrictedSolution> = None;
    round_into(p, &root, ROOT_ROUNDING_TRIALS, 0, &mut incumbent)?;
    let mut heap = BinaryHeap::new();
    heap.push(Node { bound: root.cost, id: 0, fixed: Vec::new(), relaxed: root });
    let mut nodes = 1;
    while let Some(node) = heap.pop() {
        if prunable(node.bound, &incumbent) {
            continue;
        }
        let Some(e) = branching_edge(&node.relaxed.flows, tol) else {
            if let Some(path) = integral_path(p, &node.relaxed.flows) {
                if let Some(sol) = solve_restricted(p, &path)? {
                    offer(&mut incumbent, sol);
                }
            }
            continue;
        };
        if node.id > 0 {
            round_into(p, &node.relaxed, NODE_ROUNDING_TRIALS, node.id as u64, &mut incumbent)?;
            if prunable(node.bound, &incumbent) {
                continue;
            }
        }
        for one in [true, false] {
            if nodes >= node_limit {
                return Err(GcsError::NodeLimit(nodes));
            }
            let mut fixed = node.fixed.clone();
            fixed.push((e, one));
            let child = relax.solve_fixed(&fixed, backend);
            nodes += 1;
            if let Some(r) = lp_outcome(child)? {
                if prunable(r.cost, &incumbent) {
                    continue;
                }
                heap.push(Node { bound: r.cost, id: nodes, fixed, relaxed: r });
            }
        }
    }
    Ok(match incumbent {
        Some(solution) => ExactOutcome::Optimal(ExactResult { solution, root_bound, nodes }),
        None => ExactOutcome::Infeasible { nodes },
    })
}
