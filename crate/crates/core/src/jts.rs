//! Joint transition system: timed-automaton progress paired with the convex
//! cell the trajectory occupies.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt::Write;

use thiserror::Error;

use crate::automaton::{Chain, Clock, Guard, StateId, TimedAutomaton};
use crate::lp::Tolerances;
use crate::regions::{Decomposition, Polytope, RegionError, RegionTable};
use crate::stl::Time;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum JtsError {
    #[error("joint transition system has no {0} state")]
    EmptyJts(&'static str),
    #[error("copies must be at least 1")]
    InvalidCopies,
    #[error("decomposition dimension {cells} differs from region dimension {regions}")]
    DimensionMismatch { cells: usize, regions: usize },
    #[error(transparent)]
    Region(#[from] RegionError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct JtsOptions {
    /// Duplicates of every `(s, D)` pair, allowing revisits within one TA state.
    pub copies: usize,
    /// Longest chain of TA transitions taken at a single instant.
    pub max_chain: usize,
}

impl Default for JtsOptions {
    fn default() -> Self {
        JtsOptions { copies: 1, max_chain: 3 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct JtsState {
    pub ta_state: StateId,
    pub cell: usize,
    pub copy: usize,
    /// `D ∩ M(s)`; equal to `D` whenever `D ⊆ M(s)`.
    pub region: Polytope,
}

/// Entry at time 0: a chain from an initial TA state to this state's TA
/// state whose guards hold at the zero valuation. `x₀` must lie in every
/// region along the way.
#[derive(Clone, Debug, PartialEq)]
pub struct Entry {
    pub to: usize,
    pub ta_states: Vec<StateId>,
    pub regions: Vec<Polytope>,
}

/// Exit at time T: from this state to an accepting TA state through
/// `chain` (absent when the TA state itself accepts).
#[derive(Clone, Debug, PartialEq)]
pub struct Exit {
    pub from: usize,
    pub chain: Option<Chain>,
    /// Regions of the chain states after the first; they must contain the
    /// final point.
    pub regions: Vec<Polytope>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct OuterEdge {
    pub from: usize,
    pub to: usize,
    pub chain: Chain,
    /// Regions of the chain's intermediate states; they must contain the
    /// junction point.
    pub mid_regions: Vec<Polytope>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct JointTransitionSystem {
    pub states: Vec<JtsState>,
    pub entries: Vec<Entry>,
    pub exits: Vec<Exit>,
    /// Same TA state, different intersecting cells; stored in both directions.
    pub inner: Vec<(usize, usize)>,
    pub outer: Vec<OuterEdge>,
    pub clocks: Vec<Clock>,
    pub horizon: Time,
    pub cell_names: Vec<String>,
    pub ta_labels: Vec<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct JtsStats {
    pub states: usize,
    pub inner: usize,
    pub outer: usize,
    pub clocks: usize,
    pub initial: usize,
    pub accepting: usize,
}

fn realize_state(ta: &TimedAutomaton, table: &RegionTable, s: StateId) -> Result<Polytope, RegionError> {
    table.realize(ta.states[s].region.iter().map(String::as_str))
}

fn nonempty_all(polys: &[&Polytope]) -> Result<bool, RegionError> {
    let mut acc = polys[0].clone();
    for p in &polys[1..] {
        acc = acc.intersection(p)?;
    }
    acc.is_nonempty()
}

/// Pairs every TA state with every cell whose overlap with the state's
/// region has an interior, then adds inner, outer, entry and exit links.
pub fn build_jts(
    ta: &TimedAutomaton,
    cells: &Decomposition,
    table: &RegionTable,
    options: JtsOptions,
) -> Result<JointTransitionSystem, JtsError> {
    if options.copies == 0 {
        return Err(JtsError::InvalidCopies);
    }
    if cells.dim() != table.dim() {
        return Err(JtsError::DimensionMismatch { cells: cells.dim(), regions: table.dim() });
    }
    let radius = Tolerances::default().interior_radius;
    let regions: Vec<Polytope> = (0..ta.num_states()).map(|s| realize_state(ta, table, s)).collect::<Result<_, _>>()?;

    let mut states = Vec::new();
    // (s, D) → ids of its copies
    let mut by_pair: BTreeMap<(StateId, usize), Vec<usize>> = BTreeMap::new();
    for s in 0..ta.num_states() {
        for d in 0..cells.len() {
            let cell = cells.cell(d);
            let inside = crate::regions::subset_of(cell, &regions[s])?;
            let region = if inside { cell.clone() } else { cell.intersection(&regions[s])? };
            if !inside && !region.has_interior(radius)? {
                continue;
            }
            for copy in 0..options.copies {
                by_pair.entry((s, d)).or_default().push(states.len());
                states.push(JtsState { ta_state: s, cell: d, copy, region: region.clone() });
            }
        }
    }

    let mut meets: BTreeMap<(usize, usize), bool> = BTreeMap::new();
    let mut meets_pair = |a: (StateId, usize), b: (StateId, usize), states: &[JtsState]| -> Result<bool, RegionError> {
        let (ia, ib) = (by_pair[&a][0], by_pair[&b][0]);
        let key = (ia.min(ib), ia.max(ib));
        if let Some(&m) = meets.get(&key) {
            return Ok(m);
        }
        let m = crate::regions::intersect_nonempty(&states[ia].region, &states[ib].region)?;
        meets.insert(key, m);
        Ok(m)
    };

    let pairs: Vec<(StateId, usize)> = by_pair.keys().copied().collect();
    let mut inner = Vec::new();
    for &(s, d) in &pairs {
        for &(s2, d2) in &pairs {
            if s2 != s || d2 == d || !meets_pair((s, d), (s2, d2), &states)? {
                continue;
            }
            for &q in &by_pair[&(s, d)] {
                for &q2 in &by_pair[&(s2, d2)] {
                    inner.push((q, q2));
                }
            }
        }
    }

    let chains: Vec<Vec<Chain>> = (0..ta.num_states()).map(|s| ta.instant_chains(s, options.max_chain)).collect();
    let mut outer = Vec::new();
    for &(s, d) in &pairs {
        for chain in &chains[s] {
            let s2 = chain.last();
            let mids: Vec<Polytope> = chain.intermediate().iter().map(|&m| regions[m].clone()).collect();
            for d2 in 0..cells.len() {
                let Some(targets) = by_pair.get(&(s2, d2)) else { continue };
                let (q, q2) = (by_pair[&(s, d)][0], targets[0]);
                let mut polys = vec![&states[q].region, &states[q2].region];
                polys.extend(mids.iter());
                let ok = if mids.is_empty() { meets_pair((s, d), (s2, d2), &states)? } else { nonempty_all(&polys)? };
                if !ok {
                    continue;
                }
                for &a in &by_pair[&(s, d)] {
                    for &b in targets {
                        outer.push(OuterEdge { from: a, to: b, chain: chain.clone(), mid_regions: mids.clone() });
                    }
                }
            }
        }
    }

    let mut entries = Vec::new();
    for &s0 in &ta.initial {
        let mut paths: Vec<Vec<StateId>> = vec![vec![s0]];
        for chain in &chains[s0] {
            let zero_ok = chain.guard.bounds.values().all(|iv| iv.contains(Time::ZERO));
            if zero_ok {
                paths.push(chain.states.clone());
            }
        }
        for path in paths {
            let s = *path.last().unwrap();
            let path_regions: Vec<Polytope> = path.iter().map(|&m| regions[m].clone()).collect();
            for d in 0..cells.len() {
                let Some(qs) = by_pair.get(&(s, d)) else { continue };
                let mut polys = vec![&states[qs[0]].region];
                polys.extend(path_regions.iter());
                if !nonempty_all(&polys)? {
                    continue;
                }
                for &q in qs {
                    entries.push(Entry { to: q, ta_states: path.clone(), regions: path_regions.clone() });
                }
            }
        }
    }

    let mut exits = Vec::new();
    for (q, st) in states.iter().enumerate() {
        if ta.accepting.contains(&st.ta_state) {
            exits.push(Exit { from: q, chain: None, regions: Vec::new() });
        }
        for chain in &chains[st.ta_state] {
            if !ta.accepting.contains(&chain.last()) {
                continue;
            }
            let rest: Vec<Polytope> = chain.states[1..].iter().map(|&m| regions[m].clone()).collect();
            let mut polys = vec![&st.region];
            polys.extend(rest.iter());
            if nonempty_all(&polys)? {
                exits.push(Exit { from: q, chain: Some(chain.clone()), regions: rest });
            }
        }
    }

    if entries.is_empty() {
        return Err(JtsError::EmptyJts("initial"));
    }
    if exits.is_empty() {
        return Err(JtsError::EmptyJts("accepting"));
    }
    Ok(JointTransitionSystem {
        states,
        entries,
        exits,
        inner,
        outer,
        clocks: ta.clocks.clone(),
        horizon: ta.horizon,
        cell_names: (0..cells.len()).map(|d| cells.name(d).to_string()).collect(),
        ta_labels: ta.states.iter().map(|s| s.label.clone()).collect(),
    })
}

impl JointTransitionSystem {
    pub fn stats(&self) -> JtsStats {
        jts_stats(self)
    }

    pub fn initial_states(&self) -> BTreeSet<usize> {
        self.entries.iter().map(|e| e.to).collect()
    }

    pub fn accepting_states(&self) -> BTreeSet<usize> {
        self.exits.iter().map(|e| e.from).collect()
    }

    pub fn label(&self, q: usize) -> String {
        let st = &self.states[q];
        let base = format!("({},{})", self.ta_labels[st.ta_state], self.cell_names[st.cell]);
        if st.copy == 0 { base } else { format!("{base}#{}", st.copy) }
    }

    /// Drops states that lie on no entry-to-exit path, keeping the order of
    /// the survivors.
    pub fn trim(&self) -> Result<JointTransitionSystem, JtsError> {
        let n = self.states.len();
        let mut succ = vec![Vec::new(); n];
        let mut pred = vec![Vec::new(); n];
        let edges = self.inner.iter().copied().chain(self.outer.iter().map(|e| (e.from, e.to)));
        for (a, b) in edges {
            succ[a].push(b);
            pred[b].push(a);
        }
        let reach = |seeds: BTreeSet<usize>, adj: &[Vec<usize>]| {
            let mut seen = vec![false; n];
            let mut queue: VecDeque<usize> = seeds.into_iter().collect();
            for &q in &queue {
                seen[q] = true;
            }
            while let Some(q) = queue.pop_front() {
                for &r in &adj[q] {
                    if !seen[r] {
                        seen[r] = true;
                        queue.push_back(r);
                    }
                }
            }
            seen
        };
        let fwd = reach(self.initial_states(), &succ);
        let bwd = reach(self.accepting_states(), &pred);
        let mut id = vec![None; n];
        let mut states = Vec::new();
        for q in (0..n).filter(|&q| fwd[q] && bwd[q]) {
            id[q] = Some(states.len());
            states.push(self.states[q].clone());
        }
        let entries: Vec<Entry> = self
            .entries
            .iter()
            .filter_map(|e| Some(Entry { to: id[e.to]?, ..e.clone() }))
            .collect();
        let exits: Vec<Exit> = self
            .exits
            .iter()
            .filter_map(|e| Some(Exit { from: id[e.from]?, ..e.clone() }))
            .collect();
        if entries.is_empty() {
            return Err(JtsError::EmptyJts("initial"));
        }
        if exits.is_empty() {
            return Err(JtsError::EmptyJts("accepting"));
        }
        Ok(JointTransitionSystem {
            states,
            entries,
            exits,
            inner: self.inner.iter().filter_map(|&(a, b)| Some((id[a]?, id[b]?))).collect(),
            outer: self
                .outer
                .iter()
                .filter_map(|e| Some(OuterEdge { from: id[e.from]?, to: id[e.to]?, ..e.clone() }))
                .collect(),
            clocks: self.clocks.clone(),
            horizon: self.horizon,
            cell_names: self.cell_names.clone(),
            ta_labels: self.ta_labels.clone(),
        })
    }

    pub fn to_dot(&self) -> String {
        let mut s = String::from("digraph jts {\n  rankdir=LR;\n");
        let init = self.initial_states();
        let acc = self.accepting_states();
        for q in 0..self.states.len() {
            let shape = if acc.contains(&q) { "doublecircle" } else { "circle" };
            writeln!(s, "  q{q} [shape={shape}, label=\"{}\"];", self.label(q)).unwrap();
            if init.contains(&q) {
                writeln!(s, "  init{q} [shape=point];\n  init{q} -> q{q};").unwrap();
            }
        }
        for &(a, b) in &self.inner {
            writeln!(s, "  q{a} -> q{b} [style=dashed];").unwrap();
        }
        for e in &self.outer {
            writeln!(s, "  q{} -> q{} [label=\"{}\"];", e.from, e.to, guard_text(&e.chain.guard, &self.clocks)).unwrap();
        }
        s.push_str("}\n");
        s
    }
}

fn guard_text(g: &Guard, clocks: &[Clock]) -> String {
    if g.bounds.is_empty() {
        return "true".into();
    }
    g.bounds.iter().map(|(&c, iv)| format!("{} in {iv}", clocks[c].name)).collect::<Vec<_>>().join(", ")
}

pub fn jts_stats(j: &JointTransitionSystem) -> JtsStats {
    JtsStats {
        states: j.states.len(),
        inner: j.inner.len(),
        outer: j.outer.len(),
        clocks: j.clocks.len(),
        initial: j.initial_states().len(),
        accepting: j.accepting_states().len(),
    }
}
