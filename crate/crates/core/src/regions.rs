//! Convex polytopes in H-representation, named region tables and the convex
//! decomposition of the workspace.

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use crate::lp::{solve_lp_with, Backend, LinearProgram, LpStatus, Tolerances};

/// Absolute slack for membership and containment tests.
pub const CONTAINS_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RegionError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("LP solver failure: {0}")]
    SolverFailure(String),
    #[error("polytope is unbounded along row {row} of the containing set")]
    UnboundedRegion { row: usize },
    #[error("polytope `{0}` is empty")]
    Empty(String),
    #[error("polytope `{0}` is unbounded")]
    Unbounded(String),
    #[error("malformed polytope: {0}")]
    Malformed(String),
    #[error("duplicate name `{0}`")]
    DuplicateName(String),
    #[error("unknown region `{0}`")]
    UnknownRegion(String),
}

/// `{x : A x ≤ b}` with `A` stored row-major.
#[derive(Clone, PartialEq)]
pub struct Polytope {
    dim: usize,
    a: Vec<f64>,
    b: Vec<f64>,
}

impl fmt::Debug for Polytope {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut list = f.debug_list();
        for i in 0..self.num_rows() {
            list.entry(&(self.row(i), self.b[i]));
        }
        list.finish()
    }
}

impl Polytope {
    pub fn new(dim: usize, rows: &[Vec<f64>], b: &[f64]) -> Result<Self, RegionError> {
        if dim == 0 {
            return Err(RegionError::Malformed("dimension must be positive".into()));
        }
        if rows.is_empty() || rows.len() != b.len() {
            return Err(RegionError::Malformed(format!(
                "{} rows but {} right-hand sides",
                rows.len(),
                b.len()
            )));
        }
        let mut a = Vec::with_capacity(rows.len() * dim);
        for r in rows {
            if r.len() != dim {
                return Err(RegionError::DimensionMismatch { expected: dim, found: r.len() });
            }
            a.extend_from_slice(r);
        }
        if a.iter().chain(b).any(|v| !v.is_finite()) {
            return Err(RegionError::Malformed("non-finite entry".into()));
        }
        Ok(Polytope { dim, a, b: b.to_vec() })
    }

    /// Axis-aligned box `[lo, hi]`.
    pub fn from_box(lo: &[f64], hi: &[f64]) -> Result<Self, RegionError> {
        if lo.len() != hi.len() {
            return Err(RegionError::DimensionMismatch { expected: lo.len(), found: hi.len() });
        }
        let n = lo.len();
        let mut rows = Vec::with_capacity(2 * n);
        let mut b = Vec::with_capacity(2 * n);
        for i in 0..n {
            let mut up = vec![0.0; n];
            up[i] = 1.0;
            rows.push(up);
            b.push(hi[i]);
            let mut down = vec![0.0; n];
            down[i] = -1.0;
            rows.push(down);
            b.push(-lo[i]);
        }
        Polytope::new(n, &rows, &b)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn num_rows(&self) -> usize {
        self.b.len()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.a[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rhs(&self) -> &[f64] {
        &self.b
    }

    pub fn rows(&self) -> impl Iterator<Item = (&[f64], f64)> + '_ {
        (0..self.num_rows()).map(move |i| (self.row(i), self.b[i]))
    }

    /// Largest row violation `max_i (a_i·x − b_i)`; non-positive inside.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        self.rows()
            .map(|(a, b)| dot(a, x) - b)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn contains(&self, x: &[f64]) -> Result<bool, RegionError> {
        self.check_dim(x.len())?;
        Ok(self.max_violation(x) <= CONTAINS_TOL)
    }

    /// Stacked intersection; parallel rows keep only the tighter bound.
    pub fn intersection(&self, other: &Polytope) -> Result<Polytope, RegionError> {
        self.check_dim(other.dim)?;
        let mut out = self.clone();
        for (a, b) in other.rows() {
            out.push_row_merging(a, b);
        }
        Ok(out)
    }

    fn push_row_merging(&mut self, a: &[f64], b: f64) {
        let norm = dot(a, a).sqrt();
        if norm == 0.0 {
            // 0·x ≤ b: vacuous when b ≥ 0, otherwise keep it to mark emptiness.
            if b >= 0.0 {
                return;
            }
        } else {
            for i in 0..self.num_rows() {
                let r = self.row(i);
                let rn = dot(r, r).sqrt();
                if rn == 0.0 {
                    continue;
                }
                let parallel = r.iter().zip(a).all(|(p, q)| (p / rn - q / norm).abs() <= 1e-12);
                if parallel {
                    let scaled = b / norm * rn;
                    if scaled < self.b[i] {
                        self.b[i] = scaled;
                    }
                    return;
                }
            }
        }
        self.a.extend_from_slice(a);
        self.b.push(b);
    }

    /// Maximizes `dir·x` over the polytope.
    pub fn support(&self, dir: &[f64]) -> Result<SupportValue, RegionError> {
        self.check_dim(dir.len())?;
        let mut lp = self.membership_lp();
        for (j, &d) in dir.iter().enumerate() {
            lp.cost[j] = -d;
        }
        let s = solve_lp_with(&lp, Backend::Simplex, &Tolerances::default());
        match s.status {
            LpStatus::Optimal => Ok(SupportValue::Finite(-s.objective)),
            LpStatus::Unbounded => Ok(SupportValue::Unbounded),
            LpStatus::Infeasible => Ok(SupportValue::Empty),
            LpStatus::NumericalFailure => Err(RegionError::SolverFailure(
                s.diagnostic.unwrap_or_else(|| "support LP".into()),
            )),
        }
    }

    /// Chebyshev center and radius (radius capped at 1e6); `None` when empty.
    pub fn chebyshev(&self) -> Result<Option<(Vec<f64>, f64)>, RegionError> {
        let mut lp = self.membership_lp();
        let r = lp.add_var(0.0, 1e6, -1.0);
        for i in 0..self.num_rows() {
            let norm = dot(self.row(i), self.row(i)).sqrt();
            lp.rows[i].coeffs.push((r, norm));
        }
        let s = solve_lp_with(&lp, Backend::Simplex, &Tolerances::default());
        match s.status {
            LpStatus::Optimal => Ok(Some((s.x[..self.dim].to_vec(), s.x[r]))),
            LpStatus::Infeasible => Ok(None),
            _ => Err(RegionError::SolverFailure(
                s.diagnostic.unwrap_or_else(|| "Chebyshev LP".into()),
            )),
        }
    }

    pub fn is_nonempty(&self) -> Result<bool, RegionError> {
        Ok(self.chebyshev()?.is_some())
    }

    /// Nonempty with an inscribed ball wider than `radius`.
    pub fn has_interior(&self, radius: f64) -> Result<bool, RegionError> {
        Ok(matches!(self.chebyshev()?, Some((_, r)) if r > radius))
    }

    /// Bounded iff the support in all 2n coordinate directions is finite.
    pub fn is_bounded(&self) -> Result<bool, RegionError> {
        for i in 0..self.dim {
            for sign in [1.0, -1.0] {
                let mut e = vec![0.0; self.dim];
                e[i] = sign;
                if self.support(&e)? == SupportValue::Unbounded {
                    return Ok(false);
                }
            }
        }
        Ok(true)
    }

    /// Axis-aligned bounding box, if bounded and nonempty.
    pub fn bounding_box(&self) -> Result<Option<(Vec<f64>, Vec<f64>)>, RegionError> {
        let mut lo = vec![0.0; self.dim];
        let mut hi = vec![0.0; self.dim];
        for i in 0..self.dim {
            let mut e = vec![0.0; self.dim];
            e[i] = 1.0;
            match self.support(&e)? {
                SupportValue::Finite(v) => hi[i] = v,
                _ => return Ok(None),
            }
            e[i] = -1.0;
            match self.support(&e)? {
                SupportValue::Finite(v) => lo[i] = -v,
                _ => return Ok(None),
            }
        }
        Ok(Some((lo, hi)))
    }

    /// Feasibility LP over free variables `x ∈ ℝⁿ` with one row per facet.
    fn membership_lp(&self) -> LinearProgram {
        let mut lp = LinearProgram::new();
        lp.add_vars(self.dim, f64::NEG_INFINITY, f64::INFINITY);
        for (a, b) in self.rows() {
            lp.add_le(a.iter().copied().enumerate(), b);
        }
        lp
    }

    fn check_dim(&self, found: usize) -> Result<(), RegionError> {
        if found != self.dim {
            return Err(RegionError::DimensionMismatch { expected: self.dim, found });
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SupportValue {
    Finite(f64),
    Unbounded,
    Empty,
}

pub fn contains(p: &Polytope, x: &[f64]) -> Result<bool, RegionError> {
    p.contains(x)
}

pub fn intersect_nonempty(p: &Polytope, q: &Polytope) -> Result<bool, RegionError> {
    p.check_dim(q.dim)?;
    let mut lp = p.membership_lp();
    for (a, b) in q.rows() {
        lp.add_le(a.iter().copied().enumerate(), b);
    }
    let s = solve_lp_with(&lp, Backend::Simplex, &Tolerances::default());
    match s.status {
        LpStatus::Optimal => Ok(true),
        LpStatus::Infeasible => Ok(false),
        _ => Err(RegionError::SolverFailure(
            s.diagnostic.unwrap_or_else(|| format!("phase-1 LP ended {:?}", s.status)),
        )),
    }
}

/// `P ⊆ Q`, one support LP per row of `Q`. An empty `P` is a subset of anything.
pub fn subset_of(p: &Polytope, q: &Polytope) -> Result<bool, RegionError> {
    p.check_dim(q.dim)?;
    for (i, (a, c)) in q.rows().enumerate() {
        match p.support(a)? {
            SupportValue::Finite(v) if v > c + CONTAINS_TOL => return Ok(false),
            SupportValue::Finite(_) => {}
            SupportValue::Empty => return Ok(true),
            SupportValue::Unbounded => return Err(RegionError::UnboundedRegion { row: i }),
        }
    }
    Ok(true)
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Named convex cells covering the free workspace.
#[derive(Clone, Debug, PartialEq)]
pub struct Decomposition {
    cells: Vec<(String, Polytope)>,
}

impl Decomposition {
    /// Validates names, dimensions, nonemptiness and boundedness.
    pub fn new(cells: Vec<(String, Polytope)>) -> Result<Self, RegionError> {
        let Some(first) = cells.first() else {
            return Err(RegionError::Malformed("decomposition has no cells".into()));
        };
        let dim = first.1.dim();
        let mut seen = std::collections::BTreeSet::new();
        for (name, p) in &cells {
            if !seen.insert(name.as_str()) {
                return Err(RegionError::DuplicateName(name.clone()));
            }
            p.check_dim(dim)?;
            if !p.is_nonempty()? {
                return Err(RegionError::Empty(name.clone()));
            }
            if !p.is_bounded()? {
                return Err(RegionError::Unbounded(name.clone()));
            }
        }
        Ok(Decomposition { cells })
    }

    pub fn dim(&self) -> usize {
        self.cells[0].1.dim()
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn name(&self, i: usize) -> &str {
        &self.cells[i].0
    }

    pub fn cell(&self, i: usize) -> &Polytope {
        &self.cells[i].1
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Polytope)> {
        self.cells.iter().map(|(n, p)| (n.as_str(), p))
    }
}

/// Named regions plus the declared workspace box standing in for Ω.
#[derive(Clone, Debug, PartialEq)]
pub struct RegionTable {
    workspace: Polytope,
    regions: BTreeMap<String, Polytope>,
}

impl RegionTable {
    pub fn new(workspace: Polytope, regions: BTreeMap<String, Polytope>) -> Result<Self, RegionError> {
        if !workspace.is_nonempty()? {
            return Err(RegionError::Empty("workspace".into()));
        }
        if !workspace.is_bounded()? {
            return Err(RegionError::Unbounded("workspace".into()));
        }
        for (name, p) in &regions {
            workspace.check_dim(p.dim())?;
            if !p.is_nonempty()? {
                return Err(RegionError::Empty(name.clone()));
            }
        }
        Ok(RegionTable { workspace, regions })
    }

    pub fn dim(&self) -> usize {
        self.workspace.dim()
    }

    pub fn workspace(&self) -> &Polytope {
        &self.workspace
    }

    pub fn get(&self, name: &str) -> Option<&Polytope> {
        self.regions.get(name)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.regions.keys().map(String::as_str)
    }

    /// Ω intersected with every named region; an empty name set is Ω itself.
    pub fn realize<'a, I>(&self, names: I) -> Result<Polytope, RegionError>
    where
        I: IntoIterator<Item = &'a str>,
    {
        let mut p = self.workspace.clone();
        for name in names {
            let r = self.get(name).ok_or_else(|| RegionError::UnknownRegion(name.to_string()))?;
            p = p.intersection(r)?;
        }
        Ok(p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bx(lo: &[f64], hi: &[f64]) -> Polytope {
        Polytope::from_box(lo, hi).unwrap()
    }

    fn unit() -> Polytope {
        bx(&[0.0, 0.0], &[1.0, 1.0])
    }

    #[test]
    fn membership_examples() {
        assert!(contains(&unit(), &[0.5, 0.5]).unwrap());
        assert!(!contains(&unit(), &[1.0 + 1e-6, 0.0]).unwrap());
        assert!(contains(&unit(), &[1.0, 1.0]).unwrap());
        assert!(matches!(
            contains(&unit(), &[1.0]),
            Err(RegionError::DimensionMismatch { expected: 2, found: 1 })
        ));
    }

    #[test]
    fn intersection_examples() {
        assert!(intersect_nonempty(&unit(), &bx(&[1.0, 0.0], &[2.0, 1.0])).unwrap());
        assert!(!intersect_nonempty(&unit(), &bx(&[2.0, 2.0], &[3.0, 3.0])).unwrap());
        assert!(intersect_nonempty(&unit(), &bx(&[0.5, 0.5], &[1.5, 1.5])).unwrap());
    }

    #[test]
    fn subset_examples() {
        let inner = bx(&[0.2, 0.2], &[0.8, 0.8]);
        assert!(subset_of(&inner, &unit()).unwrap());
        assert!(!subset_of(&unit(), &inner).unwrap());
        assert!(subset_of(&unit(), &unit()).unwrap());
    }

    #[test]
    fn unbounded_subset_is_an_error() {
        let half = Polytope::new(2, &[vec![1.0, 0.0]], &[0.0]).unwrap();
        assert!(matches!(subset_of(&half, &unit()), Err(RegionError::UnboundedRegion { .. })));
        assert!(!half.is_bounded().unwrap());
        assert!(unit().is_bounded().unwrap());
    }

    #[test]
    fn stacked_boxes_merge_parallel_rows() {
        let p = unit().intersection(&bx(&[0.5, -1.0], &[2.0, 0.5])).unwrap();
        assert_eq!(p.num_rows(), 4);
        assert_eq!(p.bounding_box().unwrap().unwrap(), (vec![0.5, 0.0], vec![1.0, 0.5]));
    }

    #[test]
    fn flat_intersection_has_no_interior() {
        let p = unit().intersection(&bx(&[1.0, 0.0], &[2.0, 1.0])).unwrap();
        assert!(p.is_nonempty().unwrap());
        assert!(!p.has_interior(1e-6).unwrap());
        let (c, r) = unit().chebyshev().unwrap().unwrap();
        assert!((r - 0.5).abs() < 1e-9 && (c[0] - 0.5).abs() < 1e-9);
    }

    #[test]
    fn decomposition_rejects_bad_cells() {
        let dup = Decomposition::new(vec![("a".into(), unit()), ("a".into(), unit())]);
        assert_eq!(dup, Err(RegionError::DuplicateName("a".into())));
        let empty = Polytope::new(1, &[vec![1.0], vec![-1.0]], &[0.0, -1.0]).unwrap();
        assert_eq!(Decomposition::new(vec![("e".into(), empty)]), Err(RegionError::Empty("e".into())));
    }

    #[test]
    fn realize_intersects_with_workspace() {
        let table = RegionTable::new(
            bx(&[0.0, 0.0], &[10.0, 10.0]),
            BTreeMap::from([("R".to_string(), bx(&[8.0, -5.0], &[20.0, 20.0]))]),
        )
        .unwrap();
        let p = table.realize(["R"]).unwrap();
        assert_eq!(p.bounding_box().unwrap().unwrap(), (vec![8.0, 0.0], vec![10.0, 10.0]));
        assert_eq!(table.realize(["Z"]), Err(RegionError::UnknownRegion("Z".into())));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn box_strategy() -> impl Strategy<Value = Polytope> {
            prop::collection::vec((-5.0f64..5.0, 0.1f64..4.0), 2)
                .prop_map(|v| bx(&[v[0].0, v[1].0], &[v[0].0 + v[0].1, v[1].0 + v[1].1]))
        }

        /// A box cut by one random halfspace through its centre.
        fn cut_strategy() -> impl Strategy<Value = Polytope> {
            (box_strategy(), -1.0f64..1.0, -1.0f64..1.0).prop_map(|(p, u, v)| {
                let (lo, hi) = p.bounding_box().unwrap().unwrap();
                let c = [(lo[0] + hi[0]) / 2.0, (lo[1] + hi[1]) / 2.0];
                let mut rows: Vec<Vec<f64>> = p.rows().map(|(a, _)| a.to_vec()).collect();
                let mut b = p.rhs().to_vec();
                rows.push(vec![u, v]);
                b.push(u * c[0] + v * c[1]);
                Polytope::new(2, &rows, &b).unwrap()
            })
        }

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(1000))]

            #[test]
            fn contains_matches_row_arithmetic(p in cut_strategy(), x in -6.0f64..10.0, y in -6.0f64..10.0) {
                let mut inside = true;
                for i in 0..p.num_rows() {
                    let a = p.row(i);
                    if a[0] * x + a[1] * y > p.rhs()[i] + CONTAINS_TOL {
                        inside = false;
                    }
                }
                prop_assert_eq!(contains(&p, &[x, y]).unwrap(), inside);
            }
        }

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(200))]

            #[test]
            fn intersect_nonempty_is_symmetric(p in cut_strategy(), q in cut_strategy()) {
                prop_assert_eq!(intersect_nonempty(&p, &q).unwrap(), intersect_nonempty(&q, &p).unwrap());
            }

            #[test]
            fn subset_is_transitive(p in box_strategy(), grow1 in 0.0f64..1.0, grow2 in 0.0f64..1.0, q in box_strategy()) {
                // r ⊇ mid ⊇ p by construction; q is an unrelated box.
                let (lo, hi) = p.bounding_box().unwrap().unwrap();
                let mid = bx(&[lo[0] - grow1, lo[1]], &[hi[0], hi[1] + grow1]);
                let r = bx(&[lo[0] - grow1 - grow2, lo[1] - grow2], &[hi[0] + grow2, hi[1] + grow1 + grow2]);
                for (a, b, c) in [(&p, &mid, &r), (&p, &q, &r), (&q, &mid, &r), (&p, &mid, &q)] {
                    if subset_of(a, b).unwrap() && subset_of(b, c).unwrap() {
                        prop_assert!(subset_of(a, c).unwrap());
                    }
                }
                prop_assert!(subset_of(&p, &mid).unwrap() && subset_of(&mid, &r).unwrap());
            }
        }
    }
}
