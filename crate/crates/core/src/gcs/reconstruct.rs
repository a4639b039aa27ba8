use super::{EdgeKind, GcsError, GcsProblem, RestrictedSolution};
use crate::automaton::{RunStep, StateId, TaRun, TimedAutomaton};
use crate::bezier::{BezierCurve, Trajectory, TrajectorySegment};

/// Residual allowed on the restricted solution before snapping.
pub const RECONSTRUCT_TOL: f64 = 1e-7;

#[derive(Clone, Debug, PartialEq)]
pub struct Reconstruction {
    pub trajectory: Trajectory,
    pub run: TaRun,
    /// Worst constraint violation of the unsnapped solution.
    pub residual: f64,
}

/// Turns a restricted solution into a Bézier trajectory and a TA run.
///
/// Junction times and points are snapped to their neighbours so the pieces
/// tile `[0, T]` exactly and the curve starts at `x₀`.
pub fn reconstruct(p: &GcsProblem, ta: &TimedAutomaton, sol: &RestrictedSolution) -> Result<Reconstruction, GcsError> {
    let residual = p.path_residual(&sol.edges, &sol.points)?;
    if residual > RECONSTRUCT_TOL {
        return Err(GcsError::ConstraintResidual(residual));
    }
    let l = p.layout;
    let k = l.degree;
    let horizon = p.params.horizon;
    let mut cps: Vec<Vec<Vec<f64>>> = sol.points.iter().map(|x| l.control_points(x)).collect();
    let mut times: Vec<Vec<f64>> = sol.points.iter().map(|x| l.times(x)).collect();
    let n = times.len();
    for i in 0..n {
        if i == 0 {
            times[0][0] = 0.0;
            cps[0][0] = p.params.x0.clone();
        } else {
            times[i][0] = times[i - 1][k];
            cps[i][0] = cps[i - 1][k].clone();
        }
    }
    times[n - 1][k] = horizon;

    let malformed = |e: crate::bezier::BezierError| GcsError::SolverFailure(format!("reconstruction: {e}"));
    let segments = cps
        .into_iter()
        .zip(&times)
        .map(|(cp, tm)| TrajectorySegment::new(BezierCurve::new(cp).map_err(malformed)?, BezierCurve::scalar(tm).map_err(malformed)?).map_err(malformed))
        .collect::<Result<Vec<_>, _>>()?;
    let trajectory = Trajectory::new(segments, horizon).map_err(malformed)?;

    // (state, start, end) in run order.
    let mut spans: Vec<(StateId, f64, f64)> = Vec::new();
    let jts = &p.jts;
    let mut open: Option<(StateId, f64)> = None;
    for (pos, &e) in sol.edges.iter().enumerate() {
        match p.edges[e].kind {
            EdgeKind::Source(i) => {
                let path = &jts.entries[i].ta_states;
                spans.extend(path[..path.len() - 1].iter().map(|&s| (s, 0.0, 0.0)));
                open = Some((*path.last().unwrap(), 0.0));
            }
            EdgeKind::Inner => {}
            EdgeKind::Outer(i) => {
                let tau = times[pos - 1][k];
                let (s, start) = open.take().ok_or(GcsError::BadPath)?;
                spans.push((s, start, tau));
                let chain = &jts.outer[i].chain;
                spans.extend(chain.intermediate().iter().map(|&m| (m, tau, tau)));
                open = Some((chain.last(), tau));
            }
            EdgeKind::Target(i) => {
                let (s, start) = open.take().ok_or(GcsError::BadPath)?;
                spans.push((s, start, horizon));
                if let Some(chain) = &jts.exits[i].chain {
                    spans.extend(chain.states[1..].iter().map(|&m| (m, horizon, horizon)));
                }
            }
        }
    }

    let mut steps: Vec<RunStep> = Vec::with_capacity(spans.len());
    for (i, &(state, start, end)) in spans.iter().enumerate() {
        let valuation = match steps.last() {
            None => vec![0.0; ta.num_clocks()],
            Some(prev) => {
                let mut v: Vec<f64> = prev.valuation.iter().map(|c| c + (start - prev.start)).collect();
                if let Some(tr) = ta.transition(spans[i - 1].0, state) {
                    for &c in &tr.resets {
                        v[c] = 0.0;
                    }
                }
                v
            }
        };
        steps.push(RunStep { state, start, end, valuation });
    }
    Ok(Reconstruction { trajectory, run: TaRun { steps }, residual })
}

#[cfg(test)]
mod tests {
    use super::super::tests::corridor;
    use super::super::{round_paths, encode_relaxation, solve_restricted};
    use super::*;
    use crate::automaton::validate_run;
    use crate::bezier::eval_trajectory;
    use crate::lp::Backend;

    #[test]
    fn corridor_run_is_valid_and_reaches_goal() {
        let p = corridor(3.0);
        let relaxed = encode_relaxation(&p).solve(Backend::Simplex);
        let path = &round_paths(&p, &relaxed, 10, 0).unwrap()[0];
        let sol = solve_restricted(&p, path).unwrap().unwrap();
        let ta = crate::automaton::template_eventually(
            crate::stl::Time::ZERO,
            crate::stl::Time::from_secs(5),
            crate::automaton::region_ref(["goal"]),
            crate::stl::Time::from_secs(5),
        )
        .unwrap();
        let r = reconstruct(&p, &ta, &sol).unwrap();
        assert!(r.residual <= RECONSTRUCT_TOL);
        assert!(validate_run(&ta, &r.run).is_valid(), "{:?}", validate_run(&ta, &r.run));
        assert_eq!(eval_trajectory(&r.trajectory, 0.0).unwrap(), vec![0.0]);
        assert_eq!(r.trajectory.horizon(), 5.0);
        let end = eval_trajectory(&r.trajectory, 5.0).unwrap()[0];
        assert!(end >= 8.0 - 1e-6);
    }

    #[test]
    fn perturbed_solution_rejected() {
        let p = corridor(3.0);
        let relaxed = encode_relaxation(&p).solve(Backend::Simplex);
        let path = &round_paths(&p, &relaxed, 10, 0).unwrap()[0];
        let mut sol = solve_restricted(&p, path).unwrap().unwrap();
        let t0 = p.layout.t(0);
        sol.points[0][t0] += 1e-3;
        let ta = crate::automaton::template_eventually(
            crate::stl::Time::ZERO,
            crate::stl::Time::from_secs(5),
            crate::automaton::region_ref(["goal"]),
            crate::stl::Time::from_secs(5),
        )
        .unwrap();
        assert!(matches!(reconstruct(&p, &ta, &sol), Err(GcsError::ConstraintResidual(_))));
    }
}
