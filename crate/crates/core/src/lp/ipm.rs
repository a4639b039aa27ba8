use clarabel::algebra::CscMatrix;
use clarabel::solver::{
    DefaultSettingsBuilder, DefaultSolver, IPSolver, SolverStatus, SupportedConeT,
};

use super::{LinearProgram, LpSolution, LpStatus, Sense, Tolerances};

/// Clarabel form: `A x + s = b`, `s` in zero cones (equalities) then the
/// nonnegative orthant (inequalities and finite bounds).
pub(super) fn solve(p: &LinearProgram, tol: &Tolerances) -> LpSolution {
    let n = p.num_vars();
    let mut rows = ConeRows::default();
    for (i, row) in p.rows.iter().enumerate().filter(|(_, r)| r.sense == Sense::Eq) {
        rows.push(row.coeffs.iter().copied(), row.rhs, Some(i));
    }
    for j in 0..n {
        if p.lower[j] == p.upper[j] {
            rows.push([(j, 1.0)], p.lower[j], None);
        }
    }
    let zeros = rows.b.len();
    for (i, row) in p.rows.iter().enumerate().filter(|(_, r)| r.sense == Sense::Le) {
        rows.push(row.coeffs.iter().copied(), row.rhs, Some(i));
    }
    for j in 0..n {
        if p.lower[j] == p.upper[j] {
            continue;
        }
        if p.lower[j].is_finite() {
            rows.push([(j, -1.0)], -p.lower[j], None);
        }
        if p.upper[j].is_finite() {
            rows.push([(j, 1.0)], p.upper[j], None);
        }
    }
    let ConeRows { ii, jj, vv, b, origin } = rows;
    let m = b.len();
    let nonneg = m - zeros;

    let a = CscMatrix::new_from_triplets(m, n, ii, jj, vv);
    let pmat = CscMatrix::<f64>::zeros((n, n));
    let mut cones = Vec::new();
    if zeros > 0 {
        cones.push(SupportedConeT::ZeroConeT(zeros));
    }
    if nonneg > 0 {
        cones.push(SupportedConeT::NonnegativeConeT(nonneg));
    }
    let settings = DefaultSettingsBuilder::default()
        .verbose(false)
        .tol_feas(tol.ipm_feasibility)
        .tol_gap_abs(tol.ipm_gap_abs)
        .tol_gap_rel(tol.ipm_gap_rel)
        .tol_infeas_abs(1e-10)
        .tol_infeas_rel(1e-10)
        .max_iter(tol.ipm_max_iter)
        .build()
        .expect("static solver settings are valid");

    let mut solver = match DefaultSolver::new(&pmat, &p.cost, &a, &b, &cones, settings) {
        Ok(s) => s,
        Err(e) => {
            return LpSolution::without_point(LpStatus::NumericalFailure, Some(format!("setup: {e}")))
        }
    };
    solver.solve();
    let sol = &solver.solution;
    let status = match sol.status {
        SolverStatus::Solved | SolverStatus::AlmostSolved => LpStatus::Optimal,
        SolverStatus::PrimalInfeasible | SolverStatus::AlmostPrimalInfeasible => LpStatus::Infeasible,
        SolverStatus::DualInfeasible | SolverStatus::AlmostDualInfeasible => LpStatus::Unbounded,
        other => {
            return LpSolution {
                iterations: sol.iterations,
                ..LpSolution::without_point(
                    LpStatus::NumericalFailure,
                    Some(format!("interior point stopped with {other:?}")),
                )
            }
        }
    };
    if status != LpStatus::Optimal {
        return LpSolution { iterations: sol.iterations, ..LpSolution::without_point(status, None) };
    }
    let mut duals = vec![0.0; p.num_rows()];
    for (k, from) in origin.iter().enumerate() {
        if let Some(i) = *from {
            duals[i] = sol.z[k];
        }
    }
    LpSolution {
        status,
        x: sol.x.clone(),
        objective: sol.obj_val,
        duals: Some(duals),
        dual_objective: Some(sol.obj_val_dual),
        iterations: sol.iterations,
        residual: 0.0,
        diagnostic: None,
    }
}

#[derive(Default)]
struct ConeRows {
    ii: Vec<usize>,
    jj: Vec<usize>,
    vv: Vec<f64>,
    b: Vec<f64>,
    // Original row index per cone row, to map duals back.
    origin: Vec<Option<usize>>,
}

impl ConeRows {
    fn push(&mut self, coeffs: impl IntoIterator<Item = (usize, f64)>, rhs: f64, from: Option<usize>) {
        let r = self.b.len();
        for (j, a) in coeffs {
            self.ii.push(r);
            self.jj.push(j);
            self.vv.push(a);
        }
        self.b.push(rhs);
        self.origin.push(from);
    }
}
