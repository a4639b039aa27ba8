//! Scenario files, artifact writers and the commands behind the `stlgcs`
//! binary.

pub mod artifacts;
pub mod commands;
pub mod scenario;

pub use commands::{
    bench_csv, bench_table, cmd_bench, cmd_compile, cmd_plan, cmd_validate, CliError, Overrides, EXIT_INFEASIBLE,
    EXIT_OK, EXIT_SOLVER, EXIT_USAGE,
};
pub use scenario::{ScenarioError, ScenarioFile};
