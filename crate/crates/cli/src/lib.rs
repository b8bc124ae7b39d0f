// SPDX-License-Identifier: Apache-2.0

//! Batch front end for `upex-core`.
//!
//! `upex eval --model M --queries Q --out DIR` reads a JSON model and a JSON
//! query list, evaluates every query and writes `report.json`, one CSV per
//! convergence or rate-condition query, and `timings.json`. The report is a
//! pure function of the inputs and the seed; wall times live only in the
//! timings file.

// `!(x > 0.0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod diag;
pub mod fmt;
pub mod model;
pub mod query;
pub mod run;

pub use diag::{Diagnostic, InputError};
pub use model::{parse_model, parse_model_str, Model, ModelFile};
pub use query::{parse_queries, parse_queries_str, Query, QueryFile};
pub use run::{run, run_queries, write_outputs, Outcome, Record, RunOptions};

/// Process exit codes.
pub mod exit {
    pub const PASS: i32 = 0;
    pub const PARSE_ERROR: i32 = 1;
    pub const CHECK_FAILURE: i32 = 2;
}
