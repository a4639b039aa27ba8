//! Sparse linear programs and the solver backends behind them.
//!
//! Two backends share one contract: an interior-point method (Clarabel) for the
//! large flow relaxations, and a bounded-variable simplex (minilp) for small
//! programs where vertex-exact solutions matter (region tests, restricted path
//! solves). Every `Optimal` answer is re-checked against the original rows.

mod format;
mod ipm;
mod simplex;

use std::collections::BTreeMap;

pub use format::write_lp_format;

/// Every numerical tolerance used by the LP layer and its callers.
#[derive(Clone, Debug, PartialEq)]
pub struct Tolerances {
    /// Max-norm primal residual allowed for an `Optimal` answer.
    pub residual: f64,
    pub ipm_feasibility: f64,
    pub ipm_gap_abs: f64,
    pub ipm_gap_rel: f64,
    pub ipm_max_iter: u32,
    /// Flow values within this distance of 0 or 1 count as integral.
    pub integrality: f64,
    /// Point-in-polytope slack.
    pub membership: f64,
    /// Chebyshev radius below which a polytope is treated as flat.
    pub interior_radius: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            residual: 1e-7,
            ipm_feasibility: 1e-9,
            ipm_gap_abs: 1e-9,
            ipm_gap_rel: 1e-9,
            ipm_max_iter: 400,
            integrality: 1e-6,
            membership: 1e-9,
            interior_radius: 1e-6,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sense {
    Le,
    Eq,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Row {
    pub coeffs: Vec<(usize, f64)>,
    pub sense: Sense,
    pub rhs: f64,
}

impl Row {
    pub fn activity(&self, x: &[f64]) -> f64 {
        self.coeffs.iter().map(|&(j, a)| a * x[j]).sum()
    }

    /// Positive part of the violation at `x`.
    pub fn violation(&self, x: &[f64]) -> f64 {
        let v = self.activity(x) - self.rhs;
        match self.sense {
            Sense::Le => v.max(0.0),
            Sense::Eq => v.abs(),
        }
    }
}

/// `min cᵀx  s.t.  rows, lower ≤ x ≤ upper`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct LinearProgram {
    pub cost: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub rows: Vec<Row>,
    pub var_names: BTreeMap<usize, String>,
    pub row_names: BTreeMap<usize, String>,
}

impl LinearProgram {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn num_vars(&self) -> usize {
        self.cost.len()
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn add_var(&mut self, lower: f64, upper: f64, cost: f64) -> usize {
        self.cost.push(cost);
        self.lower.push(lower);
        self.upper.push(upper);
        self.cost.len() - 1
    }

    pub fn add_vars(&mut self, count: usize, lower: f64, upper: f64) -> usize {
        let first = self.num_vars();
        for _ in 0..count {
            self.add_var(lower, upper, 0.0);
        }
        first
    }

    pub fn name_var(&mut self, var: usize, name: impl Into<String>) {
        self.var_names.insert(var, name.into());
    }

    pub fn name_row(&mut self, row: usize, name: impl Into<String>) {
        self.row_names.insert(row, name.into());
    }

    /// Adds a row, merging repeated columns and dropping exact zeros.
    pub fn add_row<I>(&mut self, coeffs: I, sense: Sense, rhs: f64) -> usize
    where
        I: IntoIterator<Item = (usize, f64)>,
    {
        let mut merged: Vec<(usize, f64)> = coeffs.into_iter().collect();
        merged.sort_by_key(|&(j, _)| j);
        let mut out: Vec<(usize, f64)> = Vec::with_capacity(merged.len());
        for (j, a) in merged {
            debug_assert!(j < self.num_vars(), "column {j} out of range");
            match out.last_mut() {
                Some(last) if last.0 == j => last.1 += a,
                _ => out.push((j, a)),
            }
        }
        out.retain(|&(_, a)| a != 0.0);
        self.rows.push(Row { coeffs: out, sense, rhs });
        self.rows.len() - 1
    }

    pub fn add_le<I: IntoIterator<Item = (usize, f64)>>(&mut self, coeffs: I, rhs: f64) -> usize {
        self.add_row(coeffs, Sense::Le, rhs)
    }

    pub fn add_ge<I: IntoIterator<Item = (usize, f64)>>(&mut self, coeffs: I, rhs: f64) -> usize {
        self.add_row(coeffs.into_iter().map(|(j, a)| (j, -a)), Sense::Le, -rhs)
    }

    pub fn add_eq<I: IntoIterator<Item = (usize, f64)>>(&mut self, coeffs: I, rhs: f64) -> usize {
        self.add_row(coeffs, Sense::Eq, rhs)
    }

    pub fn objective(&self, x: &[f64]) -> f64 {
        self.cost.iter().zip(x).map(|(c, v)| c * v).sum()
    }

    /// Max-norm violation of rows and bounds at `x`.
    pub fn residual(&self, x: &[f64]) -> f64 {
        let rows = self.rows.iter().map(|r| r.violation(x)).fold(0.0, f64::max);
        let bounds = x
            .iter()
            .zip(self.lower.iter().zip(&self.upper))
            .map(|(&v, (&lo, &hi))| (lo - v).max(v - hi).max(0.0))
            .fold(0.0, f64::max);
        rows.max(bounds)
    }

    pub fn nonzeros(&self) -> usize {
        self.rows.iter().map(|r| r.coeffs.len()).sum()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    NumericalFailure,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LpSolution {
    pub status: LpStatus,
    pub x: Vec<f64>,
    pub objective: f64,
    /// Row multipliers, when the backend produces them.
    pub duals: Option<Vec<f64>>,
    pub dual_objective: Option<f64>,
    /// Zero when the backend does not report iterations.
    pub iterations: u32,
    pub residual: f64,
    pub diagnostic: Option<String>,
}

impl LpSolution {
    pub fn is_optimal(&self) -> bool {
        self.status == LpStatus::Optimal
    }

    fn without_point(status: LpStatus, diagnostic: Option<String>) -> Self {
        LpSolution {
            status,
            x: Vec::new(),
            objective: f64::NAN,
            duals: None,
            dual_objective: None,
            iterations: 0,
            residual: f64::NAN,
            diagnostic,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum Backend {
    /// Primal-dual interior point.
    #[default]
    InteriorPoint,
    /// Bounded simplex; answers are basic solutions.
    Simplex,
}

pub fn solve_lp(p: &LinearProgram) -> LpSolution {
    solve_lp_with(p, Backend::default(), &Tolerances::default())
}

pub fn solve_lp_with(p: &LinearProgram, backend: Backend, tol: &Tolerances) -> LpSolution {
    if let Some(bad) = malformed(p) {
        return LpSolution::without_point(LpStatus::NumericalFailure, Some(bad));
    }
    if p.lower.iter().zip(&p.upper).any(|(lo, hi)| lo > hi) {
        return LpSolution::without_point(LpStatus::Infeasible, Some("crossed bounds".into()));
    }
    let mut sol = match backend {
        Backend::InteriorPoint => ipm::solve(p, tol),
        Backend::Simplex => simplex::solve(p),
    };
    if sol.status == LpStatus::Optimal {
        sol.residual = p.residual(&sol.x);
        sol.objective = p.objective(&sol.x);
        if !(sol.residual <= tol.residual) {
            sol.diagnostic = Some(format!(
                "post-check residual {:.3e} exceeds {:.1e} ({} rows, {} vars)",
                sol.residual,
                tol.residual,
                p.num_rows(),
                p.num_vars()
            ));
            sol.status = LpStatus::NumericalFailure;
        }
    }
    sol
}

/// Solves `p` with selected variables pinned by appended equality rows.
pub fn solve_lp_fixed(
    p: &LinearProgram,
    fixations: &BTreeMap<usize, f64>,
    backend: Backend,
    tol: &Tolerances,
) -> LpSolution {
    let mut q = p.clone();
    for (&var, &value) in fixations {
        q.add_eq([(var, 1.0)], value);
    }
    solve_lp_with(&q, backend, tol)
}

fn malformed(p: &LinearProgram) -> Option<String> {
    let n = p.num_vars();
    if p.lower.len() != n || p.upper.len() != n {
        return Some("bound vectors do not match the variable count".into());
    }
    if p.cost.iter().any(|c| !c.is_finite()) {
        return Some("non-finite cost".into());
    }
    for (i, r) in p.rows.iter().enumerate() {
        if !r.rhs.is_finite() || r.coeffs.iter().any(|&(j, a)| j >= n || !a.is_finite()) {
            return Some(format!("row {i} has a non-finite entry or bad column"));
        }
    }
    None
}
