//! Command-line pipelines around `superburst-core`: simulation of the
//! collective-decay master equation and the optical Bloch equations,
//! synthetic time-tag generation, HBT correlation analysis, and
//! model-vs-data comparison.
//!
//! File formats (the interchange contracts):
//! - time tags: header `#timetag-v1 bin_origin_ns=<float>` (optionally
//!   followed by `n_repetitions=<int>` and `fixed_nph=<int>` on the same
//!   line), then CSV rows `repetition,channel,time_ns` sorted by
//!   (repetition, time), times with at least 3 fractional digits;
//! - correlation maps: `#g2map-v1` then `t1_ns,t2_ns,g2,sigma,nc,n1,n2`
//!   rows with the `nan` literal for undefined entries;
//! - diagonal summary: `t_ns,g2,sigma`;
//! - sum-rule report: `lhs=… rhs=… rel_dev=… fixed_nph=…` key-value block.

use std::fmt;

pub mod commands;
pub mod config;
pub mod formats;

/// Error taxonomy mapped onto process exit codes: 2 for configuration
/// problems, 3 for bad input data, 4 for numerical failures.
#[derive(Clone, Debug, PartialEq)]
pub enum CliError {
    Config(String),
    Input(String),
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Input(_) => 3,
            CliError::Numerical(_) => 4,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(msg) => write!(f, "config error: {msg}"),
            CliError::Input(msg) => write!(f, "input error: {msg}"),
            CliError::Numerical(msg) => write!(f, "numerical failure: {msg}"),
        }
    }
}

impl std::error::Error for CliError {}
