//! Dense two-phase tableau simplex with Bland's rule.

use stlgcs::lp::{LinearProgram, Sense};

const PIVOT_TOL: f64 = 1e-9;
const FEAS_TOL: f64 = 1e-7;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Cmp {
    Le,
    Ge,
    Eq,
}

#[derive(Clone, Debug, PartialEq)]
pub enum TableauOutcome {
    Optimal { x: Vec<f64>, objective: f64 },
    Infeasible,
    Unbounded,
}

struct Tableau {
    // rows 0..m are constraints, row m is the objective; last column is rhs
    t: Vec<Vec<f64>>,
    basis: Vec<usize>,
    cols: usize,
}

impl Tableau {
    fn rhs(&self, i: usize) -> f64 {
        self.t[i][self.cols]
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let p = self.t[r][c];
        for v in self.t[r].iter_mut() {
            *v /= p;
        }
        let pivot_row = self.t[r].clone();
        for (i, row) in self.t.iter_mut().enumerate() {
            if i != r && row[c] != 0.0 {
                let f = row[c];
                for (v, pv) in row.iter_mut().zip(&pivot_row) {
                    *v -= f * pv;
                }
            }
        }
        self.basis[r] = c;
    }

    /// Minimizes the objective row over columns allowed by `enter`.
    /// Returns false when unbounded.
    fn run(&mut self, enter: &dyn Fn(usize) -> bool) -> bool {
        let m = self.basis.len();
        loop {
            let Some(c) = (0..self.cols).find(|&j| enter(j) && self.t[m][j] < -PIVOT_TOL) else {
                return true;
            };
            let mut best: Option<(f64, usize, usize)> = None;
            for i in 0..m {
                if self.t[i][c] > PIVOT_TOL {
                    let ratio = self.rhs(i) / self.t[i][c];
                    let better = match best {
                        None => true,
                        Some((r, _, b)) => ratio < r - 1e-12 || (ratio <= r + 1e-12 && self.basis[i] < b),
                    };
                    if better {
                        best = Some((ratio, i, self.basis[i]));
                    }
                }
            }
            let Some((_, r, _)) = best else { return false };
            self.pivot(r, c);
        }
    }
}

/// Minimizes `c·x` subject to `a x (cmp) b` and `x ≥ 0`.
pub fn tableau_simplex(c: &[f64], a: &[Vec<f64>], cmp: &[Cmp], b: &[f64]) -> TableauOutcome {
    let n = c.len();
    let m = a.len();
    // normalize to b >= 0
    let mut rows: Vec<(Vec<f64>, Cmp, f64)> = Vec::with_capacity(m);
    for i in 0..m {
        if b[i] < 0.0 {
            let flipped = match cmp[i] {
                Cmp::Le => Cmp::Ge,
                Cmp::Ge => Cmp::Le,
                Cmp::Eq => Cmp::Eq,
            };
            rows.push((a[i].iter().map(|v| -v).collect(), flipped, -b[i]));
        } else {
            rows.push((a[i].clone(), cmp[i], b[i]));
        }
    }
    let slacks = rows.iter().filter(|r| r.1 != Cmp::Eq).count();
    let artificials = rows.iter().filter(|r| r.1 != Cmp::Le).count();
    let cols = n + slacks + artificials;
    let art_start = n + slacks;
    let mut t = vec![vec![0.0; cols + 1]; m + 1];
    let mut basis = vec![0; m];
    let (mut s, mut art) = (n, art_start);
    for (i, (row, kind, rhs)) in rows.iter().enumerate() {
        t[i][..n].copy_from_slice(row);
        t[i][cols] = *rhs;
        match kind {
            Cmp::Le => {
                t[i][s] = 1.0;
                basis[i] = s;
                s += 1;
            }
            Cmp::Ge => {
                t[i][s] = -1.0;
                s += 1;
                t[i][art] = 1.0;
                basis[i] = art;
                art += 1;
            }
            Cmp::Eq => {
                t[i][art] = 1.0;
                basis[i] = art;
                art += 1;
            }
        }
    }
    let mut tab = Tableau { t, basis, cols };

    // phase one: minimize the sum of artificials
    for j in art_start..cols {
        tab.t[m][j] = 1.0;
    }
    for i in 0..m {
        if tab.basis[i] >= art_start {
            let row = tab.t[i].clone();
            for (v, r) in tab.t[m].iter_mut().zip(&row) {
                *v -= r;
            }
        }
    }
    tab.run(&|_| true);
    if -tab.t[m][cols] > FEAS_TOL {
        return TableauOutcome::Infeasible;
    }
    for i in 0..m {
        if tab.basis[i] >= art_start {
            if let Some(j) = (0..art_start).find(|&j| tab.t[i][j].abs() > PIVOT_TOL) {
                tab.pivot(i, j);
            }
        }
    }

    // phase two
    for j in 0..=cols {
        tab.t[m][j] = if j < n { c[j] } else { 0.0 };
    }
    for i in 0..m {
        let bj = tab.basis[i];
        let f = tab.t[m][bj];
        if f != 0.0 {
            let row = tab.t[i].clone();
            for (v, r) in tab.t[m].iter_mut().zip(&row) {
                *v -= f * r;
            }
        }
    }
    if !tab.run(&|j| j < art_start) {
        return TableauOutcome::Unbounded;
    }
    let mut x = vec![0.0; n];
    for i in 0..m {
        if tab.basis[i] < n {
            x[tab.basis[i]] = tab.rhs(i);
        }
    }
    let objective = c.iter().zip(&x).map(|(a, b)| a * b).sum();
    TableauOutcome::Optimal { x, objective }
}

/// Solves a sparse program by substituting bounds into nonnegative
/// variables and calling the tableau method.
pub fn solve_program(lp: &LinearProgram) -> TableauOutcome {
    let n = lp.cost.len();
    // x_j = offset_j + sum of coef * y_k
    let mut map: Vec<Vec<(usize, f64)>> = Vec::with_capacity(n);
    let mut offset = vec![0.0; n];
    let mut ny = 0;
    let mut extra: Vec<(usize, f64)> = Vec::new(); // y_k <= width
    for j in 0..n {
        let (l, u) = (lp.lower[j], lp.upper[j]);
        if l.is_finite() {
            offset[j] = l;
            map.push(vec![(ny, 1.0)]);
            if u.is_finite() {
                extra.push((ny, u - l));
            }
            ny += 1;
        } else if u.is_finite() {
            offset[j] = u;
            map.push(vec![(ny, -1.0)]);
            ny += 1;
        } else {
            map.push(vec![(ny, 1.0), (ny + 1, -1.0)]);
            ny += 2;
        }
    }
    let mut c = vec![0.0; ny];
    let mut const_obj = 0.0;
    for j in 0..n {
        const_obj += lp.cost[j] * offset[j];
        for &(k, s) in &map[j] {
            c[k] += lp.cost[j] * s;
        }
    }
    let mut a = Vec::new();
    let mut cmp = Vec::new();
    let mut b = Vec::new();
    for row in &lp.rows {
        let mut dense = vec![0.0; ny];
        let mut rhs = row.rhs;
        for &(j, v) in &row.coeffs {
            rhs -= v * offset[j];
            for &(k, s) in &map[j] {
                dense[k] += v * s;
            }
        }
        a.push(dense);
        cmp.push(match row.sense {
            Sense::Le => Cmp::Le,
            Sense::Eq => Cmp::Eq,
        });
        b.push(rhs);
    }
    for (k, w) in extra {
        let mut dense = vec![0.0; ny];
        dense[k] = 1.0;
        a.push(dense);
        cmp.push(Cmp::Le);
        b.push(w);
    }
    match tableau_simplex(&c, &a, &cmp, &b) {
        TableauOutcome::Optimal { x: y, objective } => {
            let x = (0..n).map(|j| offset[j] + map[j].iter().map(|&(k, s)| s * y[k]).sum::<f64>()).collect();
            TableauOutcome::Optimal { x, objective: objective + const_obj }
        }
        other => other,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn textbook_example() {
        // max 3x + 5y s.t. x <= 4, 2y <= 12, 3x + 2y <= 18
        let out = tableau_simplex(
            &[-3.0, -5.0],
            &[vec![1.0, 0.0], vec![0.0, 2.0], vec![3.0, 2.0]],
            &[Cmp::Le; 3],
            &[4.0, 12.0, 18.0],
        );
        let TableauOutcome::Optimal { x, objective } = out else { panic!("{out:?}") };
        assert!((objective + 36.0).abs() < 1e-9);
        assert!((x[0] - 2.0).abs() < 1e-9 && (x[1] - 6.0).abs() < 1e-9);
    }

    #[test]
    fn infeasible_and_unbounded() {
        let inf = tableau_simplex(&[1.0], &[vec![1.0], vec![1.0]], &[Cmp::Le, Cmp::Ge], &[0.0, 1.0]);
        assert_eq!(inf, TableauOutcome::Infeasible);
        let unb = tableau_simplex(&[-1.0], &[vec![-1.0]], &[Cmp::Le], &[0.0]);
        assert_eq!(unb, TableauOutcome::Unbounded);
    }

    #[test]
    fn equality_and_free_variables() {
        let mut lp = LinearProgram::new();
        let x = lp.add_var(f64::NEG_INFINITY, f64::INFINITY, 1.0);
        let y = lp.add_var(f64::NEG_INFINITY, 2.0, -1.0);
        lp.add_eq([(x, 1.0), (y, 1.0)], 1.0);
        lp.add_ge([(x, 1.0)], -3.0);
        let TableauOutcome::Optimal { x: sol, objective } = solve_program(&lp) else { panic!() };
        // x = -3 forces y = 4 > 2, so y = 2 and x = -1
        assert!((sol[0] + 1.0).abs() < 1e-9 && (sol[1] - 2.0).abs() < 1e-9);
        assert!((objective + 3.0).abs() < 1e-9);
    }
}
