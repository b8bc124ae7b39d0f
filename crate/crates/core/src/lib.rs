// SPDX-License-Identifier: Apache-2.0

//! Sublinear expectations for countable-state uncertain processes.
//!
//! The crate is organised bottom-up:
//!
//! * [`space`] and [`rate`]: state spaces, gambles, rate matrices and upper
//!   rate operators (finite envelopes, interval rows, the sublinear Poisson
//!   generator);
//! * [`axioms`]: randomised checks of the upper-rate-operator axioms and
//!   operator seminorm bounds;
//! * [`semigroup`]: Euler-product exponentials `T_t = exp(t Q)` and the
//!   semigroup, contraction and domination checks;
//! * [`poisson`]: closed forms for the sublinear Poisson semigroup;
//! * [`fidi`]: finite-dimensional upper expectations by backward recursion
//!   and monotone-limit queries on path functionals;
//! * [`oracle`]: independent references (series exponential, two-state closed
//!   form, Monte Carlo policy lower bounds).

// `!(x > 0.0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod axioms;
pub mod error;
pub mod fidi;
pub mod oracle;
pub mod poisson;
pub mod rate;
pub mod report;
pub mod semigroup;
pub mod space;

pub use error::{Error, Result};
pub use fidi::{FinitaryGamble, InitialUpperExpectation, TimeGrid};
pub use poisson::{poisson_generator, RateInterval};
pub use rate::{upper_envelope, IntervalRows, RateMatrix, RateSpec, UpperRateOperator};
pub use report::CheckReport;
pub use semigroup::{StepReport, TransitionEngine};
pub use space::{Gamble, StateSpace};
