//! Scenario files: JSON with `"schema": 1`.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use stlgcs::automaton::Bindings;
use stlgcs::plan::{Mode, PlanOptions, Scenario};
use stlgcs::regions::{Decomposition, Polytope, RegionError, RegionTable};
use stlgcs::stl::{parse_formula, ParseError};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("JSON error at line {line}, column {column}: {message}")]
    Json { line: usize, column: usize, message: String },
    #[error("unsupported schema version {0}, expected {SCHEMA_VERSION}")]
    Schema(u32),
    #[error("formula, offset {}: {source}", source.position())]
    Formula { source: ParseError },
    #[error("region `{name}`: {source}")]
    Region { name: String, source: RegionError },
    #[error("{0}")]
    Invalid(String),
}

/// A polytope either as halfspaces `A x <= b` or as an axis-aligned box.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PolytopeSpec {
    Halfspaces {
        #[serde(rename = "A")]
        a: Vec<Vec<f64>>,
        b: Vec<f64>,
    },
    Box {
        lo: Vec<f64>,
        hi: Vec<f64>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NamedPolytope {
    pub name: String,
    #[serde(flatten)]
    pub poly: PolytopeSpec,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModeSpec {
    #[default]
    Relax,
    Exact,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSpec {
    #[serde(default)]
    pub mode: ModeSpec,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default)]
    pub seed: u64,
}

impl Default for SolverSpec {
    fn default() -> Self {
        SolverSpec { mode: ModeSpec::Relax, trials: default_trials(), seed: 0 }
    }
}

fn default_trials() -> usize {
    100
}
fn default_epsilon() -> f64 {
    1e-3
}
fn default_copies() -> usize {
    1
}
fn default_degree() -> usize {
    3
}
fn default_smoothness() -> usize {
    1
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub schema: u32,
    pub name: String,
    pub dimension: usize,
    pub horizon: f64,
    pub x0: Vec<f64>,
    pub velocity: PolytopeSpec,
    #[serde(default = "default_smoothness")]
    pub smoothness: usize,
    #[serde(default = "default_degree")]
    pub degree: usize,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    #[serde(default = "default_copies")]
    pub copies: usize,
    #[serde(default)]
    pub time_weight: f64,
    pub workspace: PolytopeSpec,
    pub regions: Vec<NamedPolytope>,
    pub cells: Vec<NamedPolytope>,
    pub formula: String,
    /// Printed formula to the region standing for its negation.
    #[serde(default)]
    pub negations: BTreeMap<String, String>,
    /// Printed formula to a region covering where it fails.
    #[serde(default)]
    pub covers: BTreeMap<String, String>,
    #[serde(default)]
    pub solver: SolverSpec,
    /// Coordinates drawn in the SVG when `dimension > 2`.
    #[serde(default)]
    pub project: Option<[usize; 2]>,
}

fn polytope(name: &str, spec: &PolytopeSpec, dim: usize) -> Result<Polytope, ScenarioError> {
    let wrap = |source| ScenarioError::Region { name: name.to_string(), source };
    let p = match spec {
        PolytopeSpec::Halfspaces { a, b } => Polytope::new(dim, a, b).map_err(wrap)?,
        PolytopeSpec::Box { lo, hi } => Polytope::from_box(lo, hi).map_err(wrap)?,
    };
    if p.dim() != dim {
        return Err(ScenarioError::Invalid(format!("region `{name}` has dimension {}, expected {dim}", p.dim())));
    }
    Ok(p)
}

impl ScenarioFile {
    pub fn parse(text: &str) -> Result<Self, ScenarioError> {
        let file: ScenarioFile = serde_json::from_str(text).map_err(|e| ScenarioError::Json {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })?;
        if file.schema != SCHEMA_VERSION {
            return Err(ScenarioError::Schema(file.schema));
        }
        Ok(file)
    }

    pub fn load(path: &Path) -> Result<Self, ScenarioError> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| ScenarioError::Io { path: path.display().to_string(), source })?;
        Self::parse(&text)
    }

    pub fn to_scenario(&self) -> Result<Scenario, ScenarioError> {
        let n = self.dimension;
        if self.x0.len() != n {
            return Err(ScenarioError::Invalid(format!("x0 has {} coordinates, expected {n}", self.x0.len())));
        }
        if !(self.horizon > 0.0) {
            return Err(ScenarioError::Invalid("horizon must be positive".into()));
        }
        let mut regions = BTreeMap::new();
        for r in &self.regions {
            if regions.insert(r.name.clone(), polytope(&r.name, &r.poly, n)?).is_some() {
                return Err(ScenarioError::Invalid(format!("duplicate region `{}`", r.name)));
            }
        }
        let workspace = polytope("workspace", &self.workspace, n)?;
        let table = RegionTable::new(workspace, regions)
            .map_err(|source| ScenarioError::Region { name: "region table".into(), source })?;
        let cells = self
            .cells
            .iter()
            .map(|c| Ok((c.name.clone(), polytope(&c.name, &c.poly, n)?)))
            .collect::<Result<Vec<_>, ScenarioError>>()?;
        let cells =
            Decomposition::new(cells).map_err(|source| ScenarioError::Region { name: "cells".into(), source })?;
        let formula = parse_formula(&self.formula).map_err(|source| ScenarioError::Formula { source })?;
        Ok(Scenario {
            name: self.name.clone(),
            formula,
            table,
            cells,
            bindings: Bindings { negations: self.negations.clone(), complement_covers: self.covers.clone() },
            x0: self.x0.clone(),
            horizon: self.horizon,
            velocity: polytope("velocity", &self.velocity, n)?,
            smoothness: self.smoothness,
            degree: self.degree,
            epsilon: self.epsilon,
            copies: self.copies,
            time_weight: self.time_weight,
        })
    }

    pub fn plan_options(&self) -> PlanOptions {
        PlanOptions {
            mode: match self.solver.mode {
                ModeSpec::Relax => Mode::Relax,
                ModeSpec::Exact => Mode::Exact,
            },
            trials: self.solver.trials,
            seed: self.solver.seed,
            ..PlanOptions::default()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "schema": 1, "name": "line", "dimension": 1, "horizon": 5, "x0": [0],
        "velocity": {"lo": [-3], "hi": [3]},
        "workspace": {"lo": [0], "hi": [10]},
        "regions": [{"name": "goal", "A": [[-1]], "b": [-8]}],
        "cells": [{"name": "a", "lo": [0], "hi": [6]}, {"name": "b", "lo": [4], "hi": [10]}],
        "formula": "F[0,5] goal"
    }"#;

    #[test]
    fn minimal_file_loads_with_defaults() {
        let f = ScenarioFile::parse(MINIMAL).unwrap();
        assert_eq!((f.smoothness, f.degree, f.copies, f.solver.trials), (1, 3, 1, 100));
        let s = f.to_scenario().unwrap();
        assert_eq!(s.cells.len(), 2);
        assert!(s.table.get("goal").unwrap().contains(&[9.0]).unwrap());
    }

    #[test]
    fn schema_and_position_errors() {
        let bad = MINIMAL.replace("\"schema\": 1", "\"schema\": 2");
        assert!(matches!(ScenarioFile::parse(&bad), Err(ScenarioError::Schema(2))));
        let broken = MINIMAL.replace("\"horizon\": 5,", "\"horizon\": ,");
        let Err(ScenarioError::Json { line, .. }) = ScenarioFile::parse(&broken) else { panic!() };
        assert_eq!(line, 2);
        let f = ScenarioFile::parse(&MINIMAL.replace("F[0,5] goal", "F[0,5] (goal")).unwrap();
        assert!(matches!(f.to_scenario(), Err(ScenarioError::Formula { .. })));
    }
}
