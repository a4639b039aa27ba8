use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use stlgcs::plan::Mode;
use stlgcs_cli::{bench_csv, bench_table, cmd_bench, cmd_compile, cmd_plan, cmd_validate, CliError, Overrides, EXIT_OK, EXIT_USAGE};

#[derive(Parser)]
#[command(name = "stlgcs", version, about = "STL motion planning over graphs of convex sets")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Relax,
    Exact,
}

#[derive(clap::Args, Default)]
struct SolveFlags {
    #[arg(long, value_enum)]
    mode: Option<ModeArg>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    copies: Option<usize>,
    /// Monitor sampling step in seconds (default T/2000).
    #[arg(long)]
    dt: Option<f64>,
    /// SVG axes as `i,j`.
    #[arg(long, value_parser = parse_pair)]
    project: Option<(usize, usize)>,
}

fn parse_pair(s: &str) -> Result<(usize, usize), String> {
    let (a, b) = s.split_once(',').ok_or("expected i,j")?;
    Ok((a.trim().parse().map_err(|e| format!("{e}"))?, b.trim().parse().map_err(|e| format!("{e}"))?))
}

impl SolveFlags {
    fn overrides(&self) -> Overrides {
        Overrides {
            mode: self.mode.map(|m| match m {
                ModeArg::Relax => Mode::Relax,
                ModeArg::Exact => Mode::Exact,
            }),
            trials: self.trials,
            seed: self.seed,
            epsilon: self.epsilon,
            copies: self.copies,
            dt: self.dt,
            project: self.project.map(|(i, j)| [i, j]),
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Compile the formula and write TA and JTS artifacts.
    Compile {
        scenario: PathBuf,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Plan a trajectory and write result, CSV, SVG and verdict files.
    Plan {
        scenario: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        #[command(flatten)]
        flags: SolveFlags,
    },
    /// Plan every scenario in a directory and print a timing table.
    Bench {
        dir: PathBuf,
        /// Also write the table as CSV.
        #[arg(long)]
        csv: Option<PathBuf>,
        #[command(flatten)]
        flags: SolveFlags,
    },
    /// Check a trajectory CSV against a scenario.
    Validate {
        trajectory: PathBuf,
        scenario: PathBuf,
        #[arg(long)]
        dt: Option<f64>,
        /// Where to write the verdict JSON (default stdout).
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn run(cli: Cli) -> Result<i32, CliError> {
    match cli.command {
        Command::Compile { scenario, out } => {
            let r = cmd_compile(&scenario, &out)?;
            println!("TA: {} states, {} clocks; JTS: {} states", r.ta_states, r.ta_clocks, r.jts_states);
            Ok(EXIT_OK)
        }
        Command::Plan { scenario, out, flags } => {
            let run = cmd_plan(&scenario, Some(&out), &flags.overrides())?;
            let r = &run.result;
            let t = r.timings;
            println!(
                "{}: {} (cost {}), STL->TA {:.3}s, form {:.3}s, solve {:.3}s",
                scenario.display(),
                r.status.as_str(),
                r.cost.map_or("-".into(), |c| format!("{c:.4}")),
                t.compile.as_secs_f64(),
                t.form.as_secs_f64(),
                t.solve.as_secs_f64()
            );
            if let Some(d) = &r.diagnostic {
                println!("  {d}");
            }
            Ok(run.exit_code())
        }
        Command::Bench { dir, csv, flags } => {
            let rows = cmd_bench(&dir, &flags.overrides())?;
            print!("{}", bench_table(&rows));
            if let Some(path) = csv {
                std::fs::write(&path, bench_csv(&rows))
                    .map_err(|source| CliError::Io { path: path.display().to_string(), source })?;
            }
            Ok(EXIT_OK)
        }
        Command::Validate { trajectory, scenario, dt, out } => {
            let (verdict, ok) = cmd_validate(&trajectory, &scenario, dt)?;
            let text = serde_json::to_string_pretty(&verdict).expect("JSON values serialize") + "\n";
            match out {
                Some(path) => std::fs::write(&path, text)
                    .map_err(|source| CliError::Io { path: path.display().to_string(), source })?,
                None => print!("{text}"),
            }
            Ok(if ok { EXIT_OK } else { stlgcs_cli::EXIT_INFEASIBLE })
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
