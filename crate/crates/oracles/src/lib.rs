//! Naive reference implementations used to cross-check the planner and the
//! monitor. Nothing here is tuned; clarity wins over speed.

pub mod grid;
pub mod runs;
pub mod semantics;
pub mod simplex;

pub use grid::{oracle_feasible, GridPlanOracle, GridVerdict, OracleError};
pub use runs::{sample_accepting_run, SampledRun};
pub use semantics::{oracle_semantics, oracle_semantics_dt, ORACLE_DT};
pub use simplex::{solve_program, tableau_simplex, Cmp, TableauOutcome};
