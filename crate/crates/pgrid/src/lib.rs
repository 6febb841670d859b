//! Case files, experiment suites, reports and the `pgrid` command line.

pub mod casefile;
pub mod cli;
pub mod report;
pub mod suite;

pub use casefile::{load_case, parse_case, Case, CaseError};
pub use suite::{shipped_suite, shipped_suites, validate_suite, ExperimentSuite, SuiteError, SuiteReport};
