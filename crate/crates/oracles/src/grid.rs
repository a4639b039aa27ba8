//! Breadth-first reachability over a space-time grid crossed with the
//! compiled automaton. Motion is piecewise linear with one velocity per
//! time step; transitions fire only at grid instants.

use std::collections::{BTreeSet, HashMap};

use stlgcs::automaton::{compile, AutomatonError, StateId, TimedAutomaton};
use stlgcs::plan::Scenario;
use stlgcs::regions::{Polytope, RegionError};
use stlgcs::stl::Time;

#[derive(Debug)]
pub enum OracleError {
    Dimension(usize),
    Misaligned(String),
    Automaton(AutomatonError),
    Region(RegionError),
}

impl From<AutomatonError> for OracleError {
    fn from(e: AutomatonError) -> Self {
        OracleError::Automaton(e)
    }
}

impl From<RegionError> for OracleError {
    fn from(e: RegionError) -> Self {
        OracleError::Region(e)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GridPlanOracle {
    /// Spatial step.
    pub h: f64,
    /// Time step; must divide the horizon.
    pub tau: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GridVerdict {
    pub feasible: bool,
    /// Verdict at half the steps, when refinement was requested.
    pub refined: Option<bool>,
    /// Set when the two resolutions disagree.
    pub warning: Option<String>,
}

type Node = (Vec<i64>, StateId, Vec<i64>);

fn inside(p: &Polytope, x: &[f64]) -> bool {
    p.rows().all(|(a, b)| a.iter().zip(x).map(|(u, v)| u * v).sum::<f64>() <= b + 1e-9)
}

struct Grid<'a> {
    s: &'a Scenario,
    ta: TimedAutomaton,
    regions: Vec<Polytope>,
    h: f64,
    tau_us: i64,
    steps: i64,
    moves: Vec<Vec<i64>>,
    cells_of: HashMap<Vec<i64>, u64>,
}

impl Grid<'_> {
    fn point(&self, z: &[i64]) -> Vec<f64> {
        self.s.x0.iter().zip(z).map(|(x, k)| x + self.h * *k as f64).collect()
    }

    fn cells(&mut self, z: &[i64]) -> u64 {
        if let Some(&m) = self.cells_of.get(z) {
            return m;
        }
        let x = self.point(z);
        let mut mask = 0u64;
        for (i, (_, p)) in self.s.cells.iter().enumerate() {
            if inside(p, &x) {
                mask |= 1 << i;
            }
        }
        self.cells_of.insert(z.to_vec(), mask);
        mask
    }

    fn guard_ok(&self, g: &stlgcs::automaton::Guard, clocks: &[i64]) -> bool {
        g.bounds.iter().all(|(&c, iv)| iv.contains(Time::from_micros(clocks[c] * self.tau_us)))
    }

    /// All nodes reachable at one instant through zero-time transitions.
    fn closure(&self, seeds: Vec<Node>) -> BTreeSet<Node> {
        let mut seen: BTreeSet<Node> = seeds.iter().cloned().collect();
        let mut stack = seeds;
        while let Some((z, s, clocks)) = stack.pop() {
            let x = self.point(&z);
            for tr in self.ta.outgoing(s) {
                if !self.guard_ok(&tr.guard, &clocks) || !inside(&self.regions[tr.to], &x) {
                    continue;
                }
                let next: Vec<i64> =
                    clocks.iter().enumerate().map(|(c, &v)| if tr.resets.contains(&c) { 0 } else { v }).collect();
                let node = (z.clone(), tr.to, next);
                if seen.insert(node.clone()) {
                    stack.push(node);
                }
            }
        }
        seen
    }

    fn search(&mut self) -> bool {
        let z0 = vec![0i64; self.s.x0.len()];
        if self.cells(&z0) == 0 {
            return false;
        }
        let x0 = self.point(&z0);
        let seeds: Vec<Node> = self
            .ta
            .initial
            .iter()
            .filter(|&&s| inside(&self.regions[s], &x0))
            .map(|&s| (z0.clone(), s, vec![0; self.ta.num_clocks()]))
            .collect();
        let mut layer = self.closure(seeds);
        for _ in 0..self.steps {
            let mut next = Vec::new();
            let mut seen = BTreeSet::new();
            for (z, s, clocks) in &layer {
                let here = self.cells(z);
                let advanced: Vec<i64> = clocks.iter().map(|v| v + 1).collect();
                for m in self.moves.clone() {
                    let z2: Vec<i64> = z.iter().zip(&m).map(|(a, b)| a + b).collect();
                    if self.cells(&z2) & here == 0 || !inside(&self.regions[*s], &self.point(&z2)) {
                        continue;
                    }
                    let node = (z2, *s, advanced.clone());
                    if seen.insert(node.clone()) {
                        next.push(node);
                    }
                }
            }
            if next.is_empty() {
                return false;
            }
            layer = self.closure(next);
        }
        layer.iter().any(|(_, s, _)| self.ta.accepting.contains(s))
    }
}

impl GridPlanOracle {
    pub fn feasible(&self, s: &Scenario) -> Result<bool, OracleError> {
        let n = s.x0.len();
        if n == 0 || n > 2 || s.cells.len() > 64 {
            return Err(OracleError::Dimension(n));
        }
        let tau_us = (self.tau * 1e6).round() as i64;
        let horizon_us = (s.horizon * 1e6).round() as i64;
        if tau_us <= 0 || horizon_us % tau_us != 0 {
            return Err(OracleError::Misaligned(format!("time step {} does not divide {}", self.tau, s.horizon)));
        }
        let ta = compile(&s.formula, &s.bindings, &s.table, Time::from_micros(horizon_us))?;
        let regions = ta
            .states
            .iter()
            .map(|st| s.table.realize(st.region.iter().map(String::as_str)))
            .collect::<Result<Vec<_>, _>>()?;
        let (vlo, vhi) = s.velocity.bounding_box()?.ok_or_else(|| OracleError::Misaligned("empty velocity".into()))?;
        let reach: Vec<(i64, i64)> = vlo
            .iter()
            .zip(&vhi)
            .map(|(a, b)| ((a * self.tau / self.h + 1e-9).ceil() as i64, (b * self.tau / self.h + 1e-9).floor() as i64))
            .collect();
        let mut moves: Vec<Vec<i64>> = vec![Vec::new()];
        for &(lo, hi) in &reach {
            moves = moves.into_iter().flat_map(|m| (lo..=hi).map(move |k| [m.clone(), vec![k]].concat())).collect();
        }
        moves.retain(|m| {
            let v: Vec<f64> = m.iter().map(|&k| k as f64 * self.h / self.tau).collect();
            inside(&s.velocity, &v)
        });
        let mut grid = Grid {
            s,
            ta,
            regions,
            h: self.h,
            tau_us,
            steps: horizon_us / tau_us,
            moves,
            cells_of: HashMap::new(),
        };
        Ok(grid.search())
    }
}

/// Runs the grid search at `(h, tau)`, and also at half the steps when
/// `refine` is set.
pub fn oracle_feasible(s: &Scenario, h: f64, tau: f64, refine: bool) -> Result<GridVerdict, OracleError> {
    let feasible = GridPlanOracle { h, tau }.feasible(s)?;
    if !refine {
        return Ok(GridVerdict { feasible, refined: None, warning: None });
    }
    let fine = GridPlanOracle { h: h / 2.0, tau: tau / 2.0 }.feasible(s)?;
    let warning = (fine != feasible).then(|| format!("ResolutionTooCoarse: {feasible} at h={h}, {fine} at h={}", h / 2.0));
    Ok(GridVerdict { feasible, refined: Some(fine), warning })
}
