//! Graph of convex sets over a joint transition system and the
//! shortest-path machinery on top of it.
//!
//! Every JTS state becomes a vertex whose variables are `K+1` spatial
//! control points, `K+1` timing control points and the clock values on
//! entry. Edges carry smoothness, clock and guard constraints.

mod exact;
mod reconstruct;
mod relax;
mod round;

use std::collections::BTreeSet;

use thiserror::Error;

pub use exact::{solve_exact, ExactOutcome, ExactResult, DEFAULT_NODE_LIMIT};
pub use reconstruct::{reconstruct, Reconstruction, RECONSTRUCT_TOL};
pub use relax::{encode_relaxation, Relaxation, RelaxedSolution};
pub use round::round_paths;

use crate::bezier::binomial;
use crate::jts::JointTransitionSystem;
use crate::lp::{solve_lp_with, Backend, LinearProgram, LpStatus, Row, Sense, Tolerances};
use crate::regions::{Polytope, RegionError, CONTAINS_TOL};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GcsError {
    #[error("degree {degree} must be at least max(1, smoothness {smoothness})")]
    DegreeTooLow { degree: usize, smoothness: usize },
    #[error("no initial state admits the initial point")]
    NoSourceEdge,
    #[error("no edge reaches the target")]
    NoTargetEdge,
    #[error("bad parameter: {0}")]
    BadParameter(String),
    #[error("path is not a source-to-target walk over existing edges")]
    BadPath,
    #[error("all rounding walks dead-ended")]
    NoCandidate,
    #[error("branch and bound stopped after {0} nodes")]
    NodeLimit(usize),
    #[error("constraint residual {0:.3e} exceeds tolerance")]
    ConstraintResidual(f64),
    #[error("LP solver failed: {0}")]
    SolverFailure(String),
    #[error(transparent)]
    Region(#[from] RegionError),
}

#[derive(Clone, Debug, PartialEq)]
pub struct GcsParams {
    pub x0: Vec<f64>,
    pub horizon: f64,
    pub velocity: Polytope,
    /// Continuity order `d` at junctions.
    pub smoothness: usize,
    /// Bézier degree `K`.
    pub degree: usize,
    /// Minimum spacing of consecutive timing control points.
    pub epsilon: f64,
    /// Weight on segment durations added to the path-length cost.
    pub time_weight: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Vertex {
    Source,
    Target,
    State(usize),
}

impl Vertex {
    pub fn state(self) -> Option<usize> {
        match self {
            Vertex::State(q) => Some(q),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EdgeKind {
    /// Index into the JTS entry list.
    Source(usize),
    Inner,
    /// Index into the JTS outer-edge list.
    Outer(usize),
    /// Index into the JTS exit list.
    Target(usize),
}

/// Affine row over the tail's and the head's local variables.
#[derive(Clone, Debug, PartialEq)]
pub struct EdgeRow {
    pub tail: Vec<(usize, f64)>,
    pub head: Vec<(usize, f64)>,
    pub sense: Sense,
    pub rhs: f64,
}

impl EdgeRow {
    fn violation(&self, tail: &[f64], head: &[f64]) -> f64 {
        let act: f64 = self.tail.iter().map(|&(j, a)| a * tail[j]).sum::<f64>()
            + self.head.iter().map(|&(j, a)| a * head[j]).sum::<f64>();
        match self.sense {
            Sense::Le => (act - self.rhs).max(0.0),
            Sense::Eq => (act - self.rhs).abs(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GcsEdge {
    pub from: Vertex,
    pub to: Vertex,
    pub kind: EdgeKind,
    pub rows: Vec<EdgeRow>,
}

/// Positions of a vertex's variables in its local vector.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Layout {
    pub dim: usize,
    pub degree: usize,
    pub clocks: usize,
}

impl Layout {
    pub fn nu(&self, k: usize, i: usize) -> usize {
        k * self.dim + i
    }

    pub fn t(&self, k: usize) -> usize {
        (self.degree + 1) * self.dim + k
    }

    pub fn clock(&self, j: usize) -> usize {
        (self.degree + 1) * (self.dim + 1) + j
    }

    /// `(n+1)(K+1) + |C|`.
    pub fn len(&self) -> usize {
        (self.degree + 1) * (self.dim + 1) + self.clocks
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn control_points(&self, x: &[f64]) -> Vec<Vec<f64>> {
        (0..=self.degree).map(|k| (0..self.dim).map(|i| x[self.nu(k, i)]).collect()).collect()
    }

    pub fn times(&self, x: &[f64]) -> Vec<f64> {
        (0..=self.degree).map(|k| x[self.t(k)]).collect()
    }

    /// Epigraph pairs `(index, index')` whose absolute difference is summed
    /// into the control-polygon length.
    fn polygon_pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.degree).flat_map(move |k| (0..self.dim).map(move |i| (self.nu(k, i), self.nu(k + 1, i))))
    }
}

#[derive(Clone, Debug)]
pub struct GcsProblem {
    pub jts: JointTransitionSystem,
    pub params: GcsParams,
    pub layout: Layout,
    /// Membership rows of each state's convex set over its local variables.
    pub vertex_rows: Vec<Vec<Row>>,
    pub edges: Vec<GcsEdge>,
}

impl GcsProblem {
    pub fn num_vertices(&self) -> usize {
        self.jts.states.len() + 2
    }

    /// Decision variables of the vertex sets: `|Q|·((n+1)(K+1)+|C|)`.
    pub fn num_variables(&self) -> usize {
        self.jts.states.len() * self.layout.len()
    }

    /// Vertex-set rows plus edge rows.
    pub fn num_constraints(&self) -> usize {
        self.vertex_rows.iter().map(Vec::len).sum::<usize>() + self.edges.iter().map(|e| e.rows.len()).sum::<usize>()
    }

    pub fn out_edges(&self, v: Vertex) -> Vec<usize> {
        (0..self.edges.len()).filter(|&e| self.edges[e].from == v).collect()
    }

    pub fn in_edges(&self, v: Vertex) -> Vec<usize> {
        (0..self.edges.len()).filter(|&e| self.edges[e].to == v).collect()
    }

    /// Path length plus optional time weight of one vertex's variables.
    pub fn vertex_cost(&self, x: &[f64]) -> f64 {
        let l = &self.layout;
        let length: f64 = l.polygon_pairs().map(|(a, b)| (x[b] - x[a]).abs()).sum();
        length + self.params.time_weight * (x[l.t(l.degree)] - x[l.t(0)])
    }

    /// Checks that `edges` walks from source to target without repeating a
    /// vertex; returns the visited states in order.
    pub fn path_states(&self, edges: &[usize]) -> Result<Vec<usize>, GcsError> {
        let mut at = Vertex::Source;
        let mut seen = BTreeSet::new();
        let mut states = Vec::new();
        for &e in edges {
            let edge = self.edges.get(e).ok_or(GcsError::BadPath)?;
            if edge.from != at {
                return Err(GcsError::BadPath);
            }
            at = edge.to;
            if let Vertex::State(q) = at {
                if !seen.insert(q) {
                    return Err(GcsError::BadPath);
                }
                states.push(q);
            }
        }
        if at != Vertex::Target {
            return Err(GcsError::BadPath);
        }
        Ok(states)
    }

    /// Largest violation of any vertex or edge row along `edges` at the
    /// given per-state points.
    pub fn path_residual(&self, edges: &[usize], points: &[Vec<f64>]) -> Result<f64, GcsError> {
        let states = self.path_states(edges)?;
        let mut worst: f64 = 0.0;
        for (x, &q) in points.iter().zip(&states) {
            for row in &self.vertex_rows[q] {
                worst = worst.max(row.violation(x));
            }
        }
        let empty: Vec<f64> = Vec::new();
        for (pos, &e) in edges.iter().enumerate() {
            let tail = if pos == 0 { &empty } else { &points[pos - 1] };
            let head = if pos == states.len() { &empty } else { &points[pos] };
            for row in &self.edges[e].rows {
                worst = worst.max(row.violation(tail, head));
            }
        }
        Ok(worst)
    }

    /// LP over the concatenated variables of the states on `edges`, with
    /// every vertex and edge row active.
    pub fn restricted_program(&self, edges: &[usize]) -> Result<(LinearProgram, Vec<usize>), GcsError> {
        let states = self.path_states(edges)?;
        let m = self.layout.len();
        let mut lp = LinearProgram::new();
        let base: Vec<usize> = states.iter().map(|_| lp.add_vars(m, f64::NEG_INFINITY, f64::INFINITY)).collect();
        for (pos, &q) in states.iter().enumerate() {
            for row in &self.vertex_rows[q] {
                lp.add_row(row.coeffs.iter().map(|&(j, a)| (base[pos] + j, a)), row.sense, row.rhs);
            }
            self.add_cost(&mut lp, base[pos], 1.0);
        }
        for (pos, &e) in edges.iter().enumerate() {
            for row in &self.edges[e].rows {
                let tail = row.tail.iter().map(|&(j, a)| (base[pos - 1] + j, a));
                let head: Vec<(usize, f64)> = row.head.iter().map(|&(j, a)| (base[pos] + j, a)).collect();
                lp.add_row(tail.chain(head), row.sense, row.rhs);
            }
        }
        Ok((lp, base))
    }

    /// Adds epigraph variables for the ℓ1 polygon length of the vertex
    /// variables starting at `base`, scaled by `scale`, plus the time term.
    /// The rows are homogeneous, so they serve perspective copies unchanged.
    fn add_cost(&self, lp: &mut LinearProgram, base: usize, scale: f64) {
        let l = self.layout;
        for (a, b) in l.polygon_pairs() {
            let w = lp.add_var(0.0, f64::INFINITY, scale);
            lp.add_le([(base + b, 1.0), (base + a, -1.0), (w, -1.0)], 0.0);
            lp.add_le([(base + a, 1.0), (base + b, -1.0), (w, -1.0)], 0.0);
        }
        if self.params.time_weight != 0.0 {
            let tw = self.params.time_weight * scale;
            lp.cost[base + l.t(l.degree)] += tw;
            lp.cost[base + l.t(0)] -= tw;
        }
    }
}

/// Solution of the LP restricted to one path.
#[derive(Clone, Debug, PartialEq)]
pub struct RestrictedSolution {
    pub edges: Vec<usize>,
    pub states: Vec<usize>,
    /// Local variable vector of each state on the path.
    pub points: Vec<Vec<f64>>,
    pub cost: f64,
}

/// Solves the LP along a fixed path. `Ok(None)` means infeasible.
pub fn solve_restricted(p: &GcsProblem, edges: &[usize]) -> Result<Option<RestrictedSolution>, GcsError> {
    solve_restricted_with(p, edges, Backend::Simplex)
}

pub fn solve_restricted_with(
    p: &GcsProblem,
    edges: &[usize],
    backend: Backend,
) -> Result<Option<RestrictedSolution>, GcsError> {
    let states = p.path_states(edges)?;
    let (lp, base) = p.restricted_program(edges)?;
    let sol = solve_lp_with(&lp, backend, &Tolerances::default());
    match sol.status {
        LpStatus::Optimal => {
            let m = p.layout.len();
            let points: Vec<Vec<f64>> = base.iter().map(|&b| sol.x[b..b + m].to_vec()).collect();
            let cost = points.iter().map(|x| p.vertex_cost(x)).sum();
            Ok(Some(RestrictedSolution { edges: edges.to_vec(), states, points, cost }))
        }
        LpStatus::Infeasible => Ok(None),
        LpStatus::Unbounded => Err(GcsError::SolverFailure("restricted LP unbounded".into())),
        LpStatus::NumericalFailure => {
            Err(GcsError::SolverFailure(sol.diagnostic.unwrap_or_else(|| "numerical failure".into())))
        }
    }
}

/// Coefficients of the `m`-th derivative control point at the end of a
/// degree-`degree` curve, over `ν_{K-m}..ν_K` (common factor dropped).
fn end_derivative(m: usize, degree: usize) -> Vec<(usize, f64)> {
    (0..=m).map(|j| (degree - m + j, sign(m - j) * binomial(m, j))).collect()
}

/// Same at the start, over `ν_0..ν_m`.
fn start_derivative(m: usize) -> Vec<(usize, f64)> {
    (0..=m).map(|j| (j, sign(m - j) * binomial(m, j))).collect()
}

fn sign(p: usize) -> f64 {
    if p % 2 == 0 { 1.0 } else { -1.0 }
}

fn vertex_rows(layout: Layout, region: &Polytope, params: &GcsParams) -> Vec<Row> {
    let l = layout;
    let kk = l.degree;
    let mut rows = Vec::new();
    let mut push = |coeffs: Vec<(usize, f64)>, rhs: f64| {
        rows.push(Row { coeffs: coeffs.into_iter().filter(|&(_, a)| a != 0.0).collect(), sense: Sense::Le, rhs });
    };
    for k in 0..=kk {
        for (a, b) in region.rows() {
            push(a.iter().enumerate().map(|(i, &ai)| (l.nu(k, i), ai)).collect(), b);
        }
    }
    push(vec![(l.t(0), -1.0)], 0.0);
    push(vec![(l.t(kk), 1.0)], params.horizon);
    for k in 0..kk {
        push(vec![(l.t(k), 1.0), (l.t(k + 1), -1.0)], -params.epsilon);
    }
    for k in 0..kk {
        for (a, b) in params.velocity.rows() {
            let mut c: Vec<(usize, f64)> = Vec::new();
            for (i, &ai) in a.iter().enumerate() {
                c.push((l.nu(k + 1, i), ai));
                c.push((l.nu(k, i), -ai));
            }
            c.push((l.t(k + 1), -b));
            c.push((l.t(k), b));
            push(c, 0.0);
        }
    }
    for j in 0..l.clocks {
        push(vec![(l.clock(j), -1.0)], 0.0);
        push(vec![(l.clock(j), 1.0), (l.t(kk), 1.0), (l.t(0), -1.0)], params.horizon);
    }
    rows
}

fn eq(tail: Vec<(usize, f64)>, head: Vec<(usize, f64)>, rhs: f64) -> EdgeRow {
    EdgeRow { tail, head, sense: Sense::Eq, rhs }
}

fn le(tail: Vec<(usize, f64)>, head: Vec<(usize, f64)>, rhs: f64) -> EdgeRow {
    EdgeRow { tail, head, sense: Sense::Le, rhs }
}

fn smoothness_rows(l: Layout, d: usize) -> Vec<EdgeRow> {
    let mut rows = Vec::new();
    for m in 0..=d {
        let end = end_derivative(m, l.degree);
        let start = start_derivative(m);
        for i in 0..l.dim {
            rows.push(eq(
                end.iter().map(|&(k, a)| (l.nu(k, i), a)).collect(),
                start.iter().map(|&(k, a)| (l.nu(k, i), -a)).collect(),
                0.0,
            ));
        }
        rows.push(eq(
            end.iter().map(|&(k, a)| (l.t(k), a)).collect(),
            start.iter().map(|&(k, a)| (l.t(k), -a)).collect(),
            0.0,
        ));
    }
    rows
}

/// `c_j + t_K − t_0` of the tail, the clock value on leaving.
fn elapsed(l: Layout, j: usize, scale: f64) -> Vec<(usize, f64)> {
    vec![(l.clock(j), scale), (l.t(l.degree), scale), (l.t(0), -scale)]
}

fn guard_rows(l: Layout, guard: &crate::automaton::Guard, horizon: f64) -> Vec<EdgeRow> {
    let mut rows = Vec::new();
    for (&j, iv) in &guard.bounds {
        if iv.lo.secs() > 0.0 {
            rows.push(le(elapsed(l, j, -1.0), vec![], -iv.lo.secs()));
        }
        if iv.hi.secs() < horizon {
            rows.push(le(elapsed(l, j, 1.0), vec![], iv.hi.secs()));
        }
    }
    rows
}

fn region_rows_tail_end(l: Layout, regions: &[Polytope]) -> Vec<EdgeRow> {
    let mut rows = Vec::new();
    for p in regions {
        for (a, b) in p.rows() {
            rows.push(le(a.iter().enumerate().map(|(i, &ai)| (l.nu(l.degree, i), ai)).collect(), vec![], b));
        }
    }
    rows
}

/// Assembles vertex sets and edges. Source edges only go to states whose
/// entry regions all contain `x₀`.
pub fn build_gcs(jts: &JointTransitionSystem, params: GcsParams) -> Result<GcsProblem, GcsError> {
    let (d, kk) = (params.smoothness, params.degree);
    if kk < d.max(1) {
        return Err(GcsError::DegreeTooLow { degree: kk, smoothness: d });
    }
    if !(params.epsilon > 0.0) || !(params.horizon > 0.0) {
        return Err(GcsError::BadParameter("epsilon and horizon must be positive".into()));
    }
    if params.epsilon * kk as f64 > params.horizon {
        return Err(GcsError::BadParameter("K·epsilon exceeds the horizon".into()));
    }
    let n = params.x0.len();
    if params.x0.iter().any(|v| !v.is_finite()) || params.velocity.dim() != n {
        return Err(GcsError::BadParameter("x0 must be finite and match the velocity dimension".into()));
    }
    if jts.states.first().is_some_and(|q| q.region.dim() != n) {
        return Err(GcsError::BadParameter("x0 dimension differs from the regions".into()));
    }
    if !params.velocity.is_nonempty()? {
        return Err(GcsError::BadParameter("velocity set is empty".into()));
    }
    let layout = Layout { dim: n, degree: kk, clocks: jts.clocks.len() };
    let l = layout;
    let t_end = params.horizon;
    let vertex_rows: Vec<Vec<Row>> = jts.states.iter().map(|q| vertex_rows(l, &q.region, &params)).collect();

    let mut edges = Vec::new();
    let mut sourced = BTreeSet::new();
    for (idx, entry) in jts.entries.iter().enumerate() {
        let q = entry.to;
        if sourced.contains(&q) {
            continue;
        }
        let inside = |p: &Polytope| p.max_violation(&params.x0) <= CONTAINS_TOL;
        if !inside(&jts.states[q].region) || !entry.regions.iter().all(inside) {
            continue;
        }
        sourced.insert(q);
        let mut rows = Vec::new();
        for (i, &x) in params.x0.iter().enumerate() {
            rows.push(eq(vec![], vec![(l.nu(0, i), 1.0)], x));
        }
        rows.push(eq(vec![], vec![(l.t(0), 1.0)], 0.0));
        for j in 0..l.clocks {
            rows.push(eq(vec![], vec![(l.clock(j), 1.0)], 0.0));
        }
        edges.push(GcsEdge { from: Vertex::Source, to: Vertex::State(q), kind: EdgeKind::Source(idx), rows });
    }
    if edges.is_empty() {
        return Err(GcsError::NoSourceEdge);
    }

    let smooth = smoothness_rows(l, d);
    for &(a, b) in &jts.inner {
        let mut rows = smooth.clone();
        for j in 0..l.clocks {
            rows.push(eq(elapsed(l, j, -1.0), vec![(l.clock(j), 1.0)], 0.0));
        }
        edges.push(GcsEdge { from: Vertex::State(a), to: Vertex::State(b), kind: EdgeKind::Inner, rows });
    }
    for (idx, e) in jts.outer.iter().enumerate() {
        let mut rows = smooth.clone();
        for j in 0..l.clocks {
            if e.chain.resets.contains(&j) {
                rows.push(eq(vec![], vec![(l.clock(j), 1.0)], 0.0));
            } else {
                rows.push(eq(elapsed(l, j, -1.0), vec![(l.clock(j), 1.0)], 0.0));
            }
        }
        rows.extend(guard_rows(l, &e.chain.guard, t_end));
        rows.extend(region_rows_tail_end(l, &e.mid_regions));
        edges.push(GcsEdge { from: Vertex::State(e.from), to: Vertex::State(e.to), kind: EdgeKind::Outer(idx), rows });
    }
    let mut any_target = false;
    for (idx, x) in jts.exits.iter().enumerate() {
        let mut rows = vec![eq(vec![(l.t(kk), 1.0)], vec![], t_end)];
        if let Some(chain) = &x.chain {
            rows.extend(guard_rows(l, &chain.guard, t_end));
        }
        rows.extend(region_rows_tail_end(l, &x.regions));
        edges.push(GcsEdge { from: Vertex::State(x.from), to: Vertex::Target, kind: EdgeKind::Target(idx), rows });
        any_target = true;
    }
    if !any_target {
        return Err(GcsError::NoTargetEdge);
    }
    Ok(GcsProblem { jts: jts.clone(), params, layout, vertex_rows, edges })
}
