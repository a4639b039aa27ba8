use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{GcsError, GcsProblem, RelaxedSolution, Vertex};

/// Flows below this are treated as absent.
pub const MIN_FLOW: f64 = 1e-6;

/// Expansion budget of a single walk, bounding backtracking.
const WALK_BUDGET: usize = 20_000;

/// Randomized depth-first walks from the source. Each step samples an
/// unused outgoing edge with probability proportional to its relaxed flow
/// and backtracks on dead ends. Returns distinct edge paths in the order
/// they were found.
pub fn round_paths(
    p: &GcsProblem,
    relaxed: &RelaxedSolution,
    trials: usize,
    seed: u64,
) -> Result<Vec<Vec<usize>>, GcsError> {
    if relaxed.flows.len() != p.edges.len() {
        return Err(GcsError::SolverFailure("relaxed solution has no flows".into()));
    }
    let out = adjacency(p);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut found: Vec<Vec<usize>> = Vec::new();
    let mut seen = BTreeSet::new();
    for _ in 0..trials {
        if let Some(path) = walk(p, &out, &relaxed.flows, &mut rng) {
            if seen.insert(path.clone()) {
                found.push(path);
            }
        }
    }
    if found.is_empty() {
        return Err(GcsError::NoCandidate);
    }
    Ok(found)
}

/// Outgoing edges per vertex slot: source, target, then states.
fn adjacency(p: &GcsProblem) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new(); p.jts.states.len() + 2];
    for (e, edge) in p.edges.iter().enumerate() {
        out[slot(edge.from)].push(e);
    }
    out
}

fn slot(v: Vertex) -> usize {
    match v {
        Vertex::Source => 0,
        Vertex::Target => 1,
        Vertex::State(q) => q + 2,
    }
}

fn walk(p: &GcsProblem, out: &[Vec<usize>], flows: &[f64], rng: &mut ChaCha8Rng) -> Option<Vec<usize>> {
    let mut visited = vec![false; out.len()];
    visited[0] = true;
    let candidates = |v: usize, visited: &[bool]| -> Vec<usize> {
        out[v]
            .iter()
            .copied()
            .filter(|&e| flows[e] >= MIN_FLOW && !visited[slot(p.edges[e].to)])
            .collect()
    };
    let mut stack: Vec<(usize, Vec<usize>)> = vec![(0, candidates(0, &visited))];
    let mut path: Vec<usize> = Vec::new();
    let mut budget = WALK_BUDGET;
    while let Some((v, options)) = stack.last_mut() {
        if options.is_empty() || budget == 0 {
            if budget == 0 {
                return None;
            }
            visited[*v] = false;
            stack.pop();
            path.pop();
            continue;
        }
        budget -= 1;
        let total: f64 = options.iter().map(|&e| flows[e]).sum();
        let mut r = rng.gen::<f64>() * total;
        let mut pick = options.len() - 1;
        for (i, &e) in options.iter().enumerate() {
            if r < flows[e] {
                pick = i;
                break;
            }
            r -= flows[e];
        }
        let e = options.swap_remove(pick);
        let head = slot(p.edges[e].to);
        path.push(e);
        if head == 1 {
            return Some(path);
        }
        if visited[head] {
            path.pop();
            continue;
        }
        visited[head] = true;
        let next = candidates(head, &visited);
        stack.push((head, next));
    }
    None
}

/// Every simple source-to-target path, up to `limit` of them, in
/// depth-first order.
#[cfg(test)]
pub(crate) fn enumerate_paths(p: &GcsProblem, limit: usize) -> Vec<Vec<usize>> {
    fn go(
        p: &GcsProblem,
        out: &[Vec<usize>],
        v: usize,
        visited: &mut Vec<bool>,
        path: &mut Vec<usize>,
        acc: &mut Vec<Vec<usize>>,
        limit: usize,
    ) {
        for &e in &out[v] {
            if acc.len() >= limit {
                return;
            }
            let head = slot(p.edges[e].to);
            if visited[head] {
                continue;
            }
            path.push(e);
            if head == 1 {
                acc.push(path.clone());
            } else {
                visited[head] = true;
                go(p, out, head, visited, path, acc, limit);
                visited[head] = false;
            }
            path.pop();
        }
    }
    let out = adjacency(p);
    let mut visited = vec![false; out.len()];
    visited[0] = true;
    let mut acc = Vec::new();
    go(p, &out, 0, &mut visited, &mut Vec::new(), &mut acc, limit);
    acc
}

#[cfg(test)]
mod tests {
    use super::super::tests::corridor;
    use super::super::encode_relaxation;
    use super::*;
    use crate::lp::Backend;

    #[test]
    fn rounding_is_deterministic_and_follows_flow() {
        let p = corridor(3.0);
        let r = encode_relaxation(&p).solve(Backend::Simplex);
        let a = round_paths(&p, &r, 20, 7).unwrap();
        let b = round_paths(&p, &r, 20, 7).unwrap();
        assert_eq!(a, b);
        for path in &a {
            p.path_states(path).unwrap();
            assert!(path.iter().all(|&e| r.flows[e] >= MIN_FLOW));
        }
    }

    #[test]
    fn zero_flow_gives_no_candidate() {
        let p = corridor(3.0);
        let mut r = encode_relaxation(&p).solve(Backend::Simplex);
        r.flows.iter_mut().for_each(|f| *f = 0.0);
        assert_eq!(round_paths(&p, &r, 5, 1), Err(GcsError::NoCandidate));
    }

    #[test]
    fn concentrated_flow_is_sampled_first() {
        let p = corridor(3.0);
        let paths = enumerate_paths(&p, 100);
        let chosen = &paths[paths.len() - 1];
        let mut r = encode_relaxation(&p).solve(Backend::Simplex);
        r.flows.iter_mut().for_each(|f| *f = 1e-3);
        for &e in chosen {
            r.flows[e] = 1.0;
        }
        // Off-path branches carry 1e-3 of the mass per step.
        let hits = (0..200u64).filter(|&s| &round_paths(&p, &r, 1, s).unwrap()[0] == chosen).count();
        assert!(hits >= 180, "{hits}");
    }
}
