//! Bézier curves in the Bernstein basis and the piecewise trajectories built
//! from (spatial, timing) curve pairs.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BezierError {
    #[error("Bernstein index {k} out of range for degree {degree}")]
    IndexOutOfRange { k: usize, degree: usize },
    #[error("a degree-zero curve has no derivative curve")]
    DegreeZero,
    #[error("time {t} outside [{start}, {end}]")]
    OutOfRange { t: f64, start: f64, end: f64 },
    #[error("time {t} outside the horizon [0, {horizon}]")]
    OutOfHorizon { t: f64, horizon: f64 },
    #[error("malformed curve: {0}")]
    Malformed(String),
}

pub fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// `C(K,k) s^k (1−s)^(K−k)`.
pub fn bernstein(k: usize, degree: usize, s: f64) -> Result<f64, BezierError> {
    if k > degree {
        return Err(BezierError::IndexOutOfRange { k, degree });
    }
    Ok(binomial(degree, k) * s.powi(k as i32) * (1.0 - s).powi((degree - k) as i32))
}

#[derive(Clone, Debug, PartialEq)]
pub struct BezierCurve {
    points: Vec<Vec<f64>>,
}

impl BezierCurve {
    pub fn new(points: Vec<Vec<f64>>) -> Result<Self, BezierError> {
        let Some(first) = points.first() else {
            return Err(BezierError::Malformed("no control points".into()));
        };
        let dim = first.len();
        if dim == 0 {
            return Err(BezierError::Malformed("zero-dimensional control point".into()));
        }
        if points.iter().any(|p| p.len() != dim || p.iter().any(|v| !v.is_finite())) {
            return Err(BezierError::Malformed("ragged or non-finite control points".into()));
        }
        Ok(BezierCurve { points })
    }

    /// Scalar curve with the given control values.
    pub fn scalar(values: &[f64]) -> Result<Self, BezierError> {
        BezierCurve::new(values.iter().map(|&v| vec![v]).collect())
    }

    pub fn degree(&self) -> usize {
        self.points.len() - 1
    }

    pub fn dim(&self) -> usize {
        self.points[0].len()
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn first(&self) -> &[f64] {
        &self.points[0]
    }

    pub fn last(&self) -> &[f64] {
        &self.points[self.degree()]
    }

    /// de Casteljau evaluation.
    pub fn eval(&self, s: f64) -> Vec<f64> {
        let mut work = self.points.clone();
        for level in (1..work.len()).rev() {
            for k in 0..level {
                let (lo, hi) = work.split_at_mut(k + 1);
                for (a, b) in lo[k].iter_mut().zip(&hi[0]) {
                    *a = (1.0 - s) * *a + s * b;
                }
            }
        }
        work.swap_remove(0)
    }

    /// Direct Bernstein sum; kept as a cross-check for `eval`.
    pub fn eval_bernstein(&self, s: f64) -> Vec<f64> {
        let k_max = self.degree();
        let mut out = vec![0.0; self.dim()];
        for (k, p) in self.points.iter().enumerate() {
            let w = binomial(k_max, k) * s.powi(k as i32) * (1.0 - s).powi((k_max - k) as i32);
            for (o, v) in out.iter_mut().zip(p) {
                *o += w * v;
            }
        }
        out
    }

    /// Degree `K−1` curve with control points `K(γ_{k+1} − γ_k)`.
    pub fn derivative(&self) -> Result<BezierCurve, BezierError> {
        let k = self.degree();
        if k == 0 {
            return Err(BezierError::DegreeZero);
        }
        let points = self
            .points
            .windows(2)
            .map(|w| w[1].iter().zip(&w[0]).map(|(b, a)| k as f64 * (b - a)).collect())
            .collect();
        Ok(BezierCurve { points })
    }

    pub fn scalar_eval(&self, s: f64) -> f64 {
        self.eval(s)[0]
    }
}

/// A spatial curve and its monotone timing curve.
#[derive(Clone, Debug, PartialEq)]
pub struct TrajectorySegment {
    pub spatial: BezierCurve,
    pub timing: BezierCurve,
}

impl TrajectorySegment {
    /// Requires a scalar timing curve with strictly increasing control points.
    pub fn new(spatial: BezierCurve, timing: BezierCurve) -> Result<Self, BezierError> {
        if timing.dim() != 1 || timing.degree() == 0 {
            return Err(BezierError::Malformed("timing must be a scalar curve of degree >= 1".into()));
        }
        if timing.points.windows(2).any(|w| w[1][0] <= w[0][0]) {
            return Err(BezierError::Malformed("timing control points must increase".into()));
        }
        if spatial.degree() == 0 {
            return Err(BezierError::Malformed("spatial curve needs degree >= 1".into()));
        }
        Ok(TrajectorySegment { spatial, timing })
    }

    pub fn start(&self) -> f64 {
        self.timing.first()[0]
    }

    pub fn end(&self) -> f64 {
        self.timing.last()[0]
    }

    pub fn invert_timing(&self, t: f64) -> Result<f64, BezierError> {
        invert_timing(self, t)
    }

    pub fn eval_at_time(&self, t: f64) -> Result<Vec<f64>, BezierError> {
        Ok(self.spatial.eval(self.invert_timing(t)?))
    }
}

/// Newton iteration safeguarded by bisection: finds `s` with
/// `|timing(s) − t| ≤ 1e-12·max(1, t_K)`, exact at the segment endpoints.
pub fn invert_timing(seg: &TrajectorySegment, t: f64) -> Result<f64, BezierError> {
    let (t0, t1) = (seg.start(), seg.end());
    let range = 1e-10 * t1.abs().max(1.0);
    let tol = 1e-12 * t1.abs().max(1.0);
    if !(t >= t0 - range && t <= t1 + range) {
        return Err(BezierError::OutOfRange { t, start: t0, end: t1 });
    }
    if t <= t0 {
        return Ok(0.0);
    }
    if t >= t1 {
        return Ok(1.0);
    }
    let dtiming = seg.timing.derivative()?;
    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    let mut s = (t - t0) / (t1 - t0);
    for _ in 0..200 {
        let h = seg.timing.scalar_eval(s) - t;
        if h.abs() <= tol {
            return Ok(s);
        }
        if h > 0.0 {
            hi = s;
        } else {
            lo = s;
        }
        let d = dtiming.scalar_eval(s);
        let newton = s - h / d;
        s = if d > 0.0 && newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
    }
    Ok(s)
}

/// Segments tiling `[0, T]` in order.
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    segments: Vec<TrajectorySegment>,
    horizon: f64,
}

/// Allowed gap between consecutive segment time ranges.
pub const TILING_TOL: f64 = 1e-9;

impl Trajectory {
    pub fn new(segments: Vec<TrajectorySegment>, horizon: f64) -> Result<Self, BezierError> {
        let (Some(first), Some(last)) = (segments.first(), segments.last()) else {
            return Err(BezierError::Malformed("trajectory needs at least one segment".into()));
        };
        let dim = first.spatial.dim();
        if segments.iter().any(|s| s.spatial.dim() != dim) {
            return Err(BezierError::Malformed("segments differ in dimension".into()));
        }
        if first.start().abs() > TILING_TOL || (last.end() - horizon).abs() > TILING_TOL {
            return Err(BezierError::Malformed(format!(
                "segments span [{}, {}], expected [0, {horizon}]",
                first.start(),
                last.end()
            )));
        }
        for w in segments.windows(2) {
            if (w[0].end() - w[1].start()).abs() > TILING_TOL {
                return Err(BezierError::Malformed(format!(
                    "gap between {} and {}",
                    w[0].end(),
                    w[1].start()
                )));
            }
        }
        Ok(Trajectory { segments, horizon })
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn dim(&self) -> usize {
        self.segments[0].spatial.dim()
    }

    pub fn segments(&self) -> &[TrajectorySegment] {
        &self.segments
    }

    /// Segment start times followed by the horizon.
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut out: Vec<f64> = self.segments.iter().map(|s| s.start()).collect();
        out.push(self.horizon);
        out
    }

    /// Index of the segment answering for `t`; the earlier segment owns a
    /// shared junction instant.
    pub fn segment_index(&self, t: f64) -> Result<usize, BezierError> {
        if !(t >= -TILING_TOL && t <= self.horizon + TILING_TOL) {
            return Err(BezierError::OutOfHorizon { t, horizon: self.horizon });
        }
        let i = self.segments.partition_point(|s| s.end() < t);
        Ok(i.min(self.segments.len() - 1))
    }

    fn locate(&self, t: f64) -> Result<(usize, f64), BezierError> {
        let i = self.segment_index(t)?;
        let seg = &self.segments[i];
        let clamped = t.clamp(seg.start(), seg.end());
        Ok((i, invert_timing(seg, clamped)?))
    }
}

pub fn eval_trajectory(traj: &Trajectory, t: f64) -> Result<Vec<f64>, BezierError> {
    let (i, s) = traj.locate(t)?;
    Ok(traj.segments[i].spatial.eval(s))
}

/// `Γ̇ʳ(τ) / Γ̇ʰ(τ)` at `τ = (Γʰ)⁻¹(t)`.
pub fn velocity(traj: &Trajectory, t: f64) -> Result<Vec<f64>, BezierError> {
    let (i, s) = traj.locate(t)?;
    let seg = &traj.segments[i];
    let dr = seg.spatial.derivative()?.eval(s);
    let dh = seg.timing.derivative()?.scalar_eval(s);
    Ok(dr.into_iter().map(|v| v / dh).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn curve(pts: &[&[f64]]) -> BezierCurve {
        BezierCurve::new(pts.iter().map(|p| p.to_vec()).collect()).unwrap()
    }

    fn linear_timing(t0: f64, t1: f64, k: usize) -> BezierCurve {
        BezierCurve::scalar(&(0..=k).map(|i| t0 + (t1 - t0) * i as f64 / k as f64).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn bernstein_values() {
        assert_eq!(bernstein(0, 2, 0.5).unwrap(), 0.25);
        assert_eq!(bernstein(1, 2, 0.5).unwrap(), 0.5);
        let sum: f64 = (0..=7).map(|k| bernstein(k, 7, 0.3).unwrap()).sum();
        assert!((sum - 1.0).abs() < 1e-15);
        assert_eq!(bernstein(3, 2, 0.5), Err(BezierError::IndexOutOfRange { k: 3, degree: 2 }));
    }

    #[test]
    fn evaluation_examples() {
        let c = BezierCurve::scalar(&[0.0, 1.0, 3.0]).unwrap();
        assert_eq!(c.scalar_eval(0.5), 1.25);
        assert_eq!(c.eval_bernstein(0.5)[0], 1.25);
        let c = curve(&[&[0.3, -1.0], &[2.0, 5.0], &[7.1, 0.4], &[-2.2, 9.9]]);
        assert_eq!(c.eval(0.0), c.first());
        assert_eq!(c.eval(1.0), c.last());
    }

    #[test]
    fn derivative_examples() {
        let c = BezierCurve::scalar(&[0.0, 1.0, 3.0]).unwrap();
        assert_eq!(c.derivative().unwrap(), BezierCurve::scalar(&[2.0, 4.0]).unwrap());
        let flat = BezierCurve::scalar(&[4.0, 4.0, 4.0]).unwrap();
        assert_eq!(flat.derivative().unwrap(), BezierCurve::scalar(&[0.0, 0.0]).unwrap());
        assert_eq!(BezierCurve::scalar(&[1.0]).unwrap().derivative(), Err(BezierError::DegreeZero));
    }

    #[test]
    fn inversion_examples() {
        let spatial = curve(&[&[0.0], &[1.0], &[2.0], &[3.0]]);
        let seg = TrajectorySegment::new(spatial, linear_timing(0.0, 8.0, 3)).unwrap();
        assert!((invert_timing(&seg, 4.0).unwrap() - 0.5).abs() < 1e-12);
        assert_eq!(invert_timing(&seg, 0.0).unwrap(), 0.0);
        assert!(matches!(invert_timing(&seg, 9.0), Err(BezierError::OutOfRange { .. })));
    }

    #[test]
    fn trajectory_endpoints_and_affine_case() {
        let spatial = curve(&[&[1.0, 2.0], &[4.0, -1.0], &[0.0, 3.0]]);
        let seg = TrajectorySegment::new(spatial.clone(), linear_timing(0.0, 5.0, 2)).unwrap();
        let traj = Trajectory::new(vec![seg], 5.0).unwrap();
        assert_eq!(eval_trajectory(&traj, 0.0).unwrap(), vec![1.0, 2.0]);
        assert_eq!(eval_trajectory(&traj, 5.0).unwrap(), vec![0.0, 3.0]);
        for t in [0.7, 2.5, 4.1] {
            let a = eval_trajectory(&traj, t).unwrap();
            let b = spatial.eval(t / 5.0);
            assert!(a.iter().zip(&b).all(|(x, y)| (x - y).abs() < 1e-12));
        }
        assert!(matches!(eval_trajectory(&traj, 5.1), Err(BezierError::OutOfHorizon { .. })));
    }

    #[test]
    fn velocity_examples() {
        let line = curve(&[&[0.0, 0.0], &[3.0, 6.0]]);
        let traj = Trajectory::new(vec![TrajectorySegment::new(line, linear_timing(0.0, 3.0, 1)).unwrap()], 3.0).unwrap();
        for t in [0.0, 1.3, 3.0] {
            let v = velocity(&traj, t).unwrap();
            assert!((v[0] - 1.0).abs() < 1e-12 && (v[1] - 2.0).abs() < 1e-12);
        }
        let still = curve(&[&[1.0], &[1.0], &[1.0]]);
        let traj = Trajectory::new(vec![TrajectorySegment::new(still, linear_timing(0.0, 2.0, 2)).unwrap()], 2.0).unwrap();
        assert_eq!(velocity(&traj, 1.0).unwrap(), vec![0.0]);
    }

    #[test]
    fn junction_owned_by_earlier_segment() {
        let a = TrajectorySegment::new(curve(&[&[0.0], &[1.0]]), linear_timing(0.0, 1.0, 1)).unwrap();
        let b = TrajectorySegment::new(curve(&[&[1.0], &[1.0]]), linear_timing(1.0, 2.0, 1)).unwrap();
        let traj = Trajectory::new(vec![a, b], 2.0).unwrap();
        assert_eq!(traj.segment_index(1.0).unwrap(), 0);
        assert_eq!(traj.segment_index(1.5).unwrap(), 1);
        assert_eq!(traj.breakpoints(), vec![0.0, 1.0, 2.0]);
    }

    #[test]
    fn tiling_is_enforced() {
        let a = TrajectorySegment::new(curve(&[&[0.0], &[1.0]]), linear_timing(0.0, 1.0, 1)).unwrap();
        let b = TrajectorySegment::new(curve(&[&[1.0], &[1.0]]), linear_timing(1.5, 2.0, 1)).unwrap();
        assert!(Trajectory::new(vec![a.clone(), b], 2.0).is_err());
        assert!(Trajectory::new(vec![a], 2.0).is_err());
        assert!(TrajectorySegment::new(curve(&[&[0.0], &[1.0]]), BezierCurve::scalar(&[1.0, 1.0]).unwrap()).is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn curve_strategy(dim: usize) -> impl Strategy<Value = BezierCurve> {
            (1usize..9).prop_flat_map(move |k| {
                prop::collection::vec(prop::collection::vec(-10.0f64..10.0, dim), k + 1)
                    .prop_map(|pts| BezierCurve::new(pts).unwrap())
            })
        }

        proptest! {
            #[test]
            fn de_casteljau_matches_bernstein_sum(c in curve_strategy(2), s in 0.0f64..=1.0) {
                let a = c.eval(s);
                let b = c.eval_bernstein(s);
                for (x, y) in a.iter().zip(&b) {
                    prop_assert!((x - y).abs() <= 1e-9);
                }
            }

            #[test]
            fn derivative_is_linear(
                c1 in curve_strategy(2),
                shift in prop::collection::vec(-3.0f64..3.0, 2),
                alpha in -2.0f64..2.0,
            ) {
                // c2 has the same degree as c1.
                let c2 = BezierCurve::new(
                    c1.points().iter().enumerate()
                        .map(|(k, p)| p.iter().zip(&shift).map(|(v, s)| v * 0.5 + s * k as f64).collect())
                        .collect(),
                ).unwrap();
                let combo = BezierCurve::new(
                    c1.points().iter().zip(c2.points())
                        .map(|(p, q)| p.iter().zip(q).map(|(a, b)| alpha * a + b).collect())
                        .collect(),
                ).unwrap();
                let (d1, d2, dc) = (c1.derivative().unwrap(), c2.derivative().unwrap(), combo.derivative().unwrap());
                for k in 0..dc.points().len() {
                    for j in 0..2 {
                        let expect = alpha * d1.points()[k][j] + d2.points()[k][j];
                        prop_assert!((dc.points()[k][j] - expect).abs() <= 1e-9);
                    }
                }
            }
        }
    }
}
