use super::{GcsProblem, Vertex};
use crate::lp::{solve_lp_with, Backend, LinearProgram, LpSolution, LpStatus, Row, Sense, Tolerances};

/// Flow-based convex relaxation of the shortest path through the GCS.
#[derive(Clone, Debug)]
pub struct Relaxation {
    pub lp: LinearProgram,
    /// Flow variable of each edge.
    pub y: Vec<usize>,
    /// First variable of the perspective copy of the tail's variables.
    pub z_tail: Vec<Option<usize>>,
    /// Same for the head.
    pub z_head: Vec<Option<usize>>,
}

#[derive(Clone, Debug)]
pub struct RelaxedSolution {
    pub status: LpStatus,
    pub flows: Vec<f64>,
    pub cost: f64,
    pub solution: LpSolution,
}

fn perspective(lp: &mut LinearProgram, rows: &[Row], base: usize, y: usize) {
    for r in rows {
        let coeffs = r.coeffs.iter().map(|&(j, a)| (base + j, a)).chain([(y, -r.rhs)]);
        lp.add_row(coeffs, r.sense, 0.0);
    }
}

/// Builds the LP: unit flow out of the source and into the target,
/// conservation with throughput at most one elsewhere, perspective copies of
/// vertex and edge sets, agreement of copies at each vertex, and the
/// polygon-length cost on every edge's head.
pub fn encode_relaxation(p: &GcsProblem) -> Relaxation {
    let m = p.layout.len();
    let ne = p.edges.len();
    let mut lp = LinearProgram::new();
    let y: Vec<usize> = (0..ne).map(|_| lp.add_var(0.0, 1.0, 0.0)).collect();
    for (e, &ye) in y.iter().enumerate() {
        lp.name_var(ye, format!("y{e}"));
    }
    let mut z_tail = vec![None; ne];
    let mut z_head = vec![None; ne];
    for (e, edge) in p.edges.iter().enumerate() {
        if let Vertex::State(q) = edge.from {
            let base = lp.add_vars(m, f64::NEG_INFINITY, f64::INFINITY);
            perspective(&mut lp, &p.vertex_rows[q], base, y[e]);
            z_tail[e] = Some(base);
        }
        if let Vertex::State(q) = edge.to {
            let base = lp.add_vars(m, f64::NEG_INFINITY, f64::INFINITY);
            perspective(&mut lp, &p.vertex_rows[q], base, y[e]);
            p.add_cost(&mut lp, base, 1.0);
            z_head[e] = Some(base);
        }
        for r in &edge.rows {
            let tail = r.tail.iter().map(|&(j, a)| (z_tail[e].unwrap() + j, a));
            let head: Vec<(usize, f64)> = r.head.iter().map(|&(j, a)| (z_head[e].unwrap() + j, a)).collect();
            lp.add_row(tail.chain(head).chain([(y[e], -r.rhs)]), r.sense, 0.0);
        }
    }

    let nq = p.jts.states.len();
    let mut ins = vec![Vec::new(); nq];
    let mut outs = vec![Vec::new(); nq];
    let mut source_out = Vec::new();
    let mut target_in = Vec::new();
    for (e, edge) in p.edges.iter().enumerate() {
        match edge.from {
            Vertex::State(q) => outs[q].push(e),
            Vertex::Source => source_out.push(e),
            Vertex::Target => {}
        }
        match edge.to {
            Vertex::State(q) => ins[q].push(e),
            Vertex::Target => target_in.push(e),
            Vertex::Source => {}
        }
    }
    lp.add_eq(source_out.iter().map(|&e| (y[e], 1.0)), 1.0);
    lp.add_eq(target_in.iter().map(|&e| (y[e], 1.0)), 1.0);
    for q in 0..nq {
        if ins[q].is_empty() && outs[q].is_empty() {
            continue;
        }
        let balance = ins[q].iter().map(|&e| (y[e], 1.0)).chain(outs[q].iter().map(|&e| (y[e], -1.0)));
        lp.add_eq(balance, 0.0);
        lp.add_le(ins[q].iter().map(|&e| (y[e], 1.0)), 1.0);
        for j in 0..m {
            let agree = ins[q]
                .iter()
                .map(|&e| (z_head[e].unwrap() + j, 1.0))
                .chain(outs[q].iter().map(|&e| (z_tail[e].unwrap() + j, -1.0)));
            lp.add_row(agree, Sense::Eq, 0.0);
        }
    }
    Relaxation { lp, y, z_tail, z_head }
}

impl Relaxation {
    pub fn solve(&self, backend: Backend) -> RelaxedSolution {
        self.finish(solve_lp_with(&self.lp, backend, &Tolerances::default()))
    }

    /// Solves with some flows pinned to 0 or 1.
    pub fn solve_fixed(&self, fixed: &[(usize, bool)], backend: Backend) -> RelaxedSolution {
        let mut lp = self.lp.clone();
        for &(e, one) in fixed {
            let v = if one { 1.0 } else { 0.0 };
            lp.lower[self.y[e]] = v;
            lp.upper[self.y[e]] = v;
        }
        self.finish(solve_lp_with(&lp, backend, &Tolerances::default()))
    }

    fn finish(&self, solution: LpSolution) -> RelaxedSolution {
        let flows = if solution.x.is_empty() {
            Vec::new()
        } else {
            self.y.iter().map(|&v| solution.x[v].clamp(0.0, 1.0)).collect()
        };
        RelaxedSolution { status: solution.status, flows, cost: solution.objective, solution }
    }
}
