//! Benchmark harness behind the `oscil` command line: problem/method
//! dispatch, error metrics against exact or reference solutions, table and
//! figure reproduction, and deterministic CSV emission.

pub mod config;
pub mod harness;

pub use config::{ConfigFile, RunConfig};
pub use harness::{
    compute_errors, params_command, run_figure, run_solve, run_table, BenchRecord, HarnessError,
    Method, Problem, Scale,
};
