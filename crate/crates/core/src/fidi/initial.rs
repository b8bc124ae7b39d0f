// SPDX-License-Identifier: Apache-2.0

use crate::error::{Error, Result};
use crate::space::{Gamble, StateSpace};

/// Upper expectation for the initial state.
#[derive(Debug, Clone, PartialEq)]
pub enum InitialUpperExpectation {
    /// Upper envelope of finitely many mass functions on the retained states.
    Envelope(Vec<Vec<f64>>),
    /// Point mass at a retained state.
    Degenerate(usize),
    /// Vacuous model over a nonempty set of retained states.
    Vacuous(Vec<usize>),
}

impl InitialUpperExpectation {
    pub fn envelope(space: &StateSpace, pmfs: Vec<Vec<f64>>) -> Result<Self> {
        if pmfs.is_empty() {
            return Err(Error::InvalidInitial("no mass functions".into()));
        }
        for (i, p) in pmfs.iter().enumerate() {
            if p.len() != space.len() {
                return Err(Error::InvalidInitial(format!(
                    "mass function {i} has {} entries, expected {}",
                    p.len(),
                    space.len()
                )));
            }
            if p.iter().any(|m| !(*m >= 0.0) || !m.is_finite()) {
                return Err(Error::InvalidInitial(format!(
                    "mass function {i} has a negative entry"
                )));
            }
            let total: f64 = p.iter().sum();
            if (total - 1.0).abs() > 1e-12 {
                return Err(Error::InvalidInitial(format!(
                    "mass function {i} sums to {total}"
                )));
            }
        }
        Ok(InitialUpperExpectation::Envelope(pmfs))
    }

    pub fn degenerate(space: &StateSpace, state: usize) -> Result<Self> {
        if state >= space.len() {
            return Err(Error::InvalidInitial(format!(
                "state {state} is not retained"
            )));
        }
        Ok(InitialUpperExpectation::Degenerate(state))
    }

    pub fn vacuous(space: &StateSpace, states: Vec<usize>) -> Result<Self> {
        if states.is_empty() {
            return Err(Error::InvalidInitial(
                "vacuous model over an empty set".into(),
            ));
        }
        if let Some(s) = states.iter().find(|s| **s >= space.len()) {
            return Err(Error::InvalidInitial(format!("state {s} is not retained")));
        }
        Ok(InitialUpperExpectation::Vacuous(states))
    }

    /// Checks the model against a state space it was not built for.
    pub fn check_space(&self, space: &StateSpace) -> Result<()> {
        match self {
            InitialUpperExpectation::Envelope(p) => Self::envelope(space, p.clone()).map(|_| ()),
            InitialUpperExpectation::Degenerate(s) => Self::degenerate(space, *s).map(|_| ()),
            InitialUpperExpectation::Vacuous(s) => Self::vacuous(space, s.clone()).map(|_| ()),
        }
    }

    pub fn upper(&self, g: &Gamble) -> f64 {
        let v = g.values();
        match self {
            InitialUpperExpectation::Envelope(pmfs) => pmfs
                .iter()
                .map(|p| p.iter().zip(v).map(|(m, x)| m * x).sum::<f64>())
                .fold(f64::NEG_INFINITY, f64::max),
            InitialUpperExpectation::Degenerate(s) => v[*s],
            InitialUpperExpectation::Vacuous(set) => {
                set.iter().map(|s| v[*s]).fold(f64::NEG_INFINITY, f64::max)
            }
        }
    }

    pub fn lower(&self, g: &Gamble) -> f64 {
        -self.upper(&g.neg())
    }
}
