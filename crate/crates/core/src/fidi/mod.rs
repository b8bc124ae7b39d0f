// SPDX-License-Identifier: Apache-2.0

//! Finite-dimensional upper expectations of path functionals.

mod checks;
mod eval;
pub mod expr;
mod gamble;
mod grid;
mod initial;

pub use checks::{
    check_consistency, downward_probe, grid_limit, hitting_family, rate_condition_probe,
    DownwardProbe, GridLimit, RateProbe, ESTIMATE_MONOTONE_TOL,
};
pub use eval::{
    backward_reduce, evaluate_lower, evaluate_upper, jump_gamble, Evaluation, ReductionStats,
};
pub use expr::Expr;
pub use gamble::{Automaton, FinitaryGamble, TABLE_CAP};
pub use grid::TimeGrid;
pub use initial::InitialUpperExpectation;
