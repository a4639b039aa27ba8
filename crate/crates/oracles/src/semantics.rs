//! Direct recursive STL semantics on a uniform time grid.

use std::collections::HashMap;

use stlgcs::regions::RegionTable;
use stlgcs::stl::{Formula, Kind, Window};

pub const ORACLE_DT: f64 = 1e-3;

/// Truth of `f` at time 0 with samples every millisecond.
pub fn oracle_semantics(signal: &dyn Fn(f64) -> Vec<f64>, horizon: f64, f: &Formula, table: &RegionTable) -> bool {
    oracle_semantics_dt(signal, horizon, f, table, ORACLE_DT)
}

pub fn oracle_semantics_dt(
    signal: &dyn Fn(f64) -> Vec<f64>,
    horizon: f64,
    f: &Formula,
    table: &RegionTable,
    dt: f64,
) -> bool {
    let n = (horizon / dt + 1e-9).floor() as usize;
    let samples: Vec<Vec<f64>> = (0..=n).map(|i| signal((i as f64 * dt).min(horizon))).collect();
    let mut eval = Naive { samples: &samples, table, dt, memo: HashMap::new() };
    eval.sat(f, 0)
}

struct Naive<'a> {
    samples: &'a [Vec<f64>],
    table: &'a RegionTable,
    dt: f64,
    memo: HashMap<(*const Formula, usize), bool>,
}

impl Naive<'_> {
    fn indices(&self, i: usize, w: &Window) -> (usize, usize) {
        let lo = (w.lo.secs() / self.dt - 1e-9).ceil() as usize;
        let hi = (w.hi.secs() / self.dt + 1e-9).floor() as usize;
        (i + lo, (i + hi).min(self.samples.len() - 1))
    }

    fn inside(&self, name: &str, i: usize) -> bool {
        let poly = self.table.get(name).unwrap_or_else(|| panic!("unbound predicate {name}"));
        let x = &self.samples[i];
        poly.rows().all(|(a, b)| a.iter().zip(x).map(|(p, q)| p * q).sum::<f64>() <= b + 1e-9)
    }

    fn sat(&mut self, f: &Formula, i: usize) -> bool {
        let key = (f as *const Formula, i);
        if let Some(&v) = self.memo.get(&key) {
            return v;
        }
        let v = match &f.kind {
            Kind::True => true,
            Kind::Pred(name) => self.inside(name, i),
            Kind::Not(g) => !self.sat(g, i),
            Kind::And(gs) => gs.iter().all(|g| self.sat(g, i)),
            Kind::Or(gs) => gs.iter().any(|g| self.sat(g, i)),
            Kind::Eventually { child, window } => {
                let (lo, hi) = self.indices(i, window);
                (lo..=hi).any(|j| self.sat(child, j))
            }
            Kind::Always { child, window } => {
                let (lo, hi) = self.indices(i, window);
                (lo..=hi).all(|j| self.sat(child, j))
            }
            Kind::Until { lhs, rhs, window } => {
                let (lo, hi) = self.indices(i, window);
                let mut found = false;
                for j in i..=hi {
                    if !self.sat(lhs, j) {
                        break;
                    }
                    if j >= lo && self.sat(rhs, j) {
                        found = true;
                        break;
                    }
                }
                found
            }
        };
        self.memo.insert(key, v);
        v
    }
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeMap;

    use stlgcs::regions::Polytope;
    use stlgcs::stl::parse_formula;

    use super::*;

    fn table() -> RegionTable {
        let line = |lo: f64, hi: f64| Polytope::from_box(&[lo], &[hi]).unwrap();
        RegionTable::new(
            line(-100.0, 100.0),
            BTreeMap::from([("low".into(), line(-100.0, 6.0)), ("high".into(), line(5.0, 100.0))]),
        )
        .unwrap()
    }

    #[test]
    fn ramp_until() {
        let ramp = |t: f64| vec![t];
        let f = parse_formula("low U[0,10] high").unwrap();
        assert!(oracle_semantics(&ramp, 10.0, &f, &table()));
        let g = parse_formula("low U[0,4] high").unwrap();
        assert!(!oracle_semantics(&ramp, 10.0, &g, &table()));
    }

    #[test]
    fn constant_always_is_membership() {
        let f = parse_formula("G[0,3] high").unwrap();
        assert!(oracle_semantics(&|_| vec![7.0], 3.0, &f, &table()));
        assert!(!oracle_semantics(&|_| vec![4.0], 3.0, &f, &table()));
    }
}
