use std::path::{Path, PathBuf};
use std::time::Duration;

use serde_json::{json, Value};
use thiserror::Error;

use stlgcs::automaton::AutomatonError;
use stlgcs::gcs::GcsError;
use stlgcs::monitor::{check, PiecewiseLinear, DEFAULT_STEPS};
use stlgcs::plan::{build_problem, compile_scenario, plan, Mode, PlanError, PlanOptions, PlanResult, PlanStatus};

use crate::artifacts::{automaton_json, jts_json, result_json, trajectory_csv, trajectory_svg, verdict_json};
use crate::scenario::{ScenarioError, ScenarioFile};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_INFEASIBLE: i32 = 2;
pub const EXIT_SOLVER: i32 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    Plan(#[from] PlanError),
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("trajectory CSV, line {line}: {message}")]
    Csv { line: usize, message: String },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Plan(PlanError::Gcs(
                GcsError::SolverFailure(_) | GcsError::NodeLimit(_) | GcsError::ConstraintResidual(_) | GcsError::NoCandidate,
            )) => EXIT_SOLVER,
            CliError::Plan(PlanError::Automaton(
                AutomatonError::EmptyProduct(_) | AutomatonError::EmptyAutomaton(_),
            )) => EXIT_INFEASIBLE,
            _ => EXIT_USAGE,
        }
    }
}

fn write(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|source| CliError::Io { path: path.display().to_string(), source })
}

fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|source| CliError::Io { path: dir.display().to_string(), source })
}

fn pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("JSON values serialize");
    s.push('\n');
    s
}

/// Command-line settings that take precedence over the scenario file.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Overrides {
    pub mode: Option<Mode>,
    pub trials: Option<usize>,
    pub seed: Option<u64>,
    pub epsilon: Option<f64>,
    pub copies: Option<usize>,
    pub dt: Option<f64>,
    pub project: Option<[usize; 2]>,
}

impl Overrides {
    fn apply(&self, file: &mut ScenarioFile) -> PlanOptions {
        if let Some(e) = self.epsilon {
            file.epsilon = e;
        }
        if let Some(c) = self.copies {
            file.copies = c;
        }
        let mut opts = file.plan_options();
        if let Some(m) = self.mode {
            opts.mode = m;
        }
        if let Some(t) = self.trials {
            opts.trials = t;
        }
        if let Some(s) = self.seed {
            opts.seed = s;
        }
        opts.monitor_dt = self.dt;
        opts
    }
}

#[derive(Debug)]
pub struct CompileReport {
    pub ta_states: usize,
    pub ta_clocks: usize,
    pub jts_states: usize,
}

/// Writes `ta.dot`, `ta.json`, `jts.dot` and `jts.json` into `out`.
pub fn cmd_compile(scenario: &Path, out: &Path) -> Result<CompileReport, CliError> {
    let file = ScenarioFile::load(scenario)?;
    let s = file.to_scenario()?;
    let ta = compile_scenario(&s)?;
    ensure_dir(out)?;
    write(&out.join("ta.dot"), &ta.to_dot())?;
    write(&out.join("ta.json"), &pretty(&automaton_json(&ta)))?;
    let problem = build_problem(&s, &ta)?;
    write(&out.join("jts.dot"), &problem.jts.to_dot())?;
    write(&out.join("jts.json"), &pretty(&jts_json(&problem.jts)))?;
    Ok(CompileReport { ta_states: ta.num_states(), ta_clocks: ta.num_clocks(), jts_states: problem.jts.states.len() })
}

#[derive(Debug)]
pub struct PlanRun {
    pub result: PlanResult,
    pub json: String,
}

impl PlanRun {
    pub fn exit_code(&self) -> i32 {
        match self.result.status {
            PlanStatus::Feasible if self.result.verified() => EXIT_OK,
            PlanStatus::Feasible => EXIT_SOLVER,
            _ => EXIT_INFEASIBLE,
        }
    }
}

fn mode_name(m: Mode) -> &'static str {
    match m {
        Mode::Relax => "relax",
        Mode::Exact => "exact",
    }
}

/// Plans and, when `out` is given, writes `result.json`, `trajectory.csv`,
/// `trajectory.svg` and `verdict.json`.
pub fn cmd_plan(scenario: &Path, out: Option<&Path>, o: &Overrides) -> Result<PlanRun, CliError> {
    let mut file = ScenarioFile::load(scenario)?;
    let opts = o.apply(&mut file);
    let s = file.to_scenario()?;
    let result = plan(&s, &opts)?;
    let json = pretty(&result_json(&s, &result, mode_name(opts.mode), opts.seed));
    if let Some(dir) = out {
        ensure_dir(dir)?;
        write(&dir.join("result.json"), &json)?;
        if let Some(t) = &result.trajectory {
            write(&dir.join("trajectory.csv"), &trajectory_csv(t))?;
            let axes = o.project.or(file.project).unwrap_or([0, 1]);
            write(&dir.join("trajectory.svg"), &trajectory_svg(t, &s.table, &s.cells, axes))?;
        }
        if let Some(v) = &result.verdict {
            write(&dir.join("verdict.json"), &pretty(&verdict_json(v)))?;
        }
    }
    Ok(PlanRun { result, json })
}

#[derive(Clone, Debug, PartialEq)]
pub struct BenchRow {
    pub name: String,
    pub status: String,
    pub compile: Duration,
    pub form: Duration,
    pub solve: Duration,
    pub satisfied: Option<bool>,
    pub cost: Option<f64>,
}

pub fn scenario_files(dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    let entries = std::fs::read_dir(dir).map_err(|source| CliError::Io { path: dir.display().to_string(), source })?;
    let mut files: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    files.sort();
    Ok(files)
}

/// Plans every `*.json` scenario in `dir`; failures become rows.
pub fn cmd_bench(dir: &Path, o: &Overrides) -> Result<Vec<BenchRow>, CliError> {
    let mut rows = Vec::new();
    for path in scenario_files(dir)? {
        let name = path.file_stem().unwrap().to_string_lossy().into_owned();
        let row = match cmd_plan(&path, None, o) {
            Ok(run) => {
                let r = &run.result;
                BenchRow {
                    name,
                    status: r.status.as_str().to_string(),
                    compile: r.timings.compile,
                    form: r.timings.form,
                    solve: r.timings.solve,
                    satisfied: r.verdict.as_ref().map(|v| v.satisfied),
                    cost: r.cost,
                }
            }
            Err(e) => BenchRow {
                name,
                status: format!("error: {e}"),
                compile: Duration::ZERO,
                form: Duration::ZERO,
                solve: Duration::ZERO,
                satisfied: None,
                cost: None,
            },
        };
        rows.push(row);
    }
    Ok(rows)
}

fn opt<T: ToString>(v: &Option<T>) -> String {
    v.as_ref().map_or_else(|| "-".into(), T::to_string)
}

pub fn bench_csv(rows: &[BenchRow]) -> String {
    let mut out = String::from("scenario,status,stl_to_ta_s,form_gcs_s,solve_s,satisfied,cost\n");
    for r in rows {
        out += &format!(
            "{},{},{:.6},{:.6},{:.6},{},{}\n",
            r.name,
            r.status.replace(',', ";"),
            r.compile.as_secs_f64(),
            r.form.as_secs_f64(),
            r.solve.as_secs_f64(),
            opt(&r.satisfied),
            opt(&r.cost.map(|c| format!("{c:.4}")))
        );
    }
    out
}

pub fn bench_table(rows: &[BenchRow]) -> String {
    let width = rows.iter().map(|r| r.name.len()).max().unwrap_or(8).max(8);
    let mut out = format!(
        "{:<width$}  {:<20}  {:>10}  {:>10}  {:>10}  {:>9}  {:>10}\n",
        "scenario", "status", "STL->TA", "form GCS", "solve", "monitor", "cost"
    );
    for r in rows {
        let status: String = r.status.chars().take(20).collect();
        out += &format!(
            "{:<width$}  {:<20}  {:>10.4}  {:>10.4}  {:>10.4}  {:>9}  {:>10}\n",
            r.name,
            status,
            r.compile.as_secs_f64(),
            r.form.as_secs_f64(),
            r.solve.as_secs_f64(),
            opt(&r.satisfied),
            opt(&r.cost.map(|c| format!("{c:.4}")))
        );
    }
    out
}

pub fn read_trajectory_csv(text: &str, dim: usize) -> Result<PiecewiseLinear, CliError> {
    let mut lines = text.lines();
    let header = lines.next().ok_or(CliError::Csv { line: 1, message: "empty file".into() })?;
    let cols: Vec<&str> = header.split(',').collect();
    if cols.first() != Some(&"t") || cols.len() != 1 + 2 * dim {
        return Err(CliError::Csv { line: 1, message: format!("expected t plus {dim} positions and {dim} velocities") });
    }
    let (mut times, mut points) = (Vec::new(), Vec::new());
    for (k, line) in lines.enumerate() {
        let vals = line
            .split(',')
            .map(|v| v.trim().parse::<f64>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| CliError::Csv { line: k + 2, message: e.to_string() })?;
        if vals.len() != cols.len() {
            return Err(CliError::Csv { line: k + 2, message: format!("{} fields, expected {}", vals.len(), cols.len()) });
        }
        times.push(vals[0]);
        points.push(vals[1..=dim].to_vec());
    }
    if times.len() < 2 {
        return Err(CliError::Csv { line: times.len() + 1, message: "need at least two samples".into() });
    }
    PiecewiseLinear::new(times, points).map_err(|e| CliError::Csv { line: 0, message: e.to_string() })
}

/// Checks a trajectory CSV against a scenario's formula, horizon and
/// initial point. Returns the verdict JSON and whether everything holds.
pub fn cmd_validate(trajectory: &Path, scenario: &Path, dt: Option<f64>) -> Result<(Value, bool), CliError> {
    let file = ScenarioFile::load(scenario)?;
    let s = file.to_scenario()?;
    let text = std::fs::read_to_string(trajectory)
        .map_err(|source| CliError::Io { path: trajectory.display().to_string(), source })?;
    let signal = read_trajectory_csv(&text, s.x0.len())?;
    let first = text.lines().nth(1).unwrap().split(',').skip(1).take(s.x0.len());
    let start: Vec<f64> = first.map(|v| v.trim().parse().unwrap()).collect();
    let initial_ok = start.iter().zip(&s.x0).all(|(a, b)| (a - b).abs() <= 1e-9);
    let dt = dt.unwrap_or(s.horizon / DEFAULT_STEPS);
    let verdict = check(&signal, &s.formula, &s.table, dt).map_err(PlanError::from)?;
    let ok = verdict.satisfied && initial_ok;
    let mut v = verdict_json(&verdict);
    v["initial_condition"] = json!({"ok": initial_ok, "expected": s.x0, "found": start});
    v["valid"] = json!(ok);
    Ok((v, ok))
}
