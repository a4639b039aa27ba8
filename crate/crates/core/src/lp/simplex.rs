use minilp::{ComparisonOp, Error, OptimizationDirection, Problem};

use super::{LinearProgram, LpSolution, LpStatus, Sense};

pub(super) fn solve(p: &LinearProgram) -> LpSolution {
    let mut problem = Problem::new(OptimizationDirection::Minimize);
    let vars: Vec<_> = (0..p.num_vars())
        .map(|j| problem.add_var(p.cost[j], (p.lower[j], p.upper[j])))
        .collect();
    for row in &p.rows {
        if row.coeffs.is_empty() {
            let ok = match row.sense {
                Sense::Le => 0.0 <= row.rhs,
                Sense::Eq => row.rhs == 0.0,
            };
            if !ok {
                return LpSolution::without_point(LpStatus::Infeasible, Some("empty row violated".into()));
            }
            continue;
        }
        let op = match row.sense {
            Sense::Le => ComparisonOp::Le,
            Sense::Eq => ComparisonOp::Eq,
        };
        problem.add_constraint(row.coeffs.iter().map(|&(j, a)| (vars[j], a)), op, row.rhs);
    }
    match problem.solve() {
        Ok(sol) => {
            let x: Vec<f64> = vars.iter().map(|&v| *sol.var_value(v)).collect();
            // minilp can report a free variable driven to infinity as optimal.
            if !sol.objective().is_finite() || x.iter().any(|v| !v.is_finite()) {
                return LpSolution::without_point(LpStatus::Unbounded, None);
            }
            LpSolution {
                status: LpStatus::Optimal,
                objective: sol.objective(),
                x,
                duals: None,
                dual_objective: None,
                iterations: 0,
                residual: 0.0,
                diagnostic: None,
            }
        }
        Err(Error::Infeasible) => LpSolution::without_point(LpStatus::Infeasible, None),
        Err(Error::Unbounded) => LpSolution::without_point(LpStatus::Unbounded, None),
    }
}
