// SPDX-License-Identifier: Apache-2.0

//! State spaces and gambles.
//!
//! A countably infinite state space `{0, 1, 2, ...}` is finitised by keeping
//! the states `0..N` and lumping everything from `N` upwards into a single
//! tail value. Gambles on such a space are exact functions on the infinite
//! space: their value at every state `z >= N` is the tail value.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum StateSpace {
    /// A finite space with distinct labels, indexed in label order.
    Finite { labels: Vec<String> },
    /// The non-negative integers, with states `0..levels` retained.
    Truncated { levels: usize },
}

impl StateSpace {
    pub fn finite<S: Into<String>>(labels: impl IntoIterator<Item = S>) -> Result<Self> {
        let labels: Vec<String> = labels.into_iter().map(Into::into).collect();
        if labels.is_empty() {
            return Err(Error::InvalidStateSpace(
                "finite space needs at least one label".into(),
            ));
        }
        for (i, a) in labels.iter().enumerate() {
            if labels[..i].contains(a) {
                return Err(Error::InvalidStateSpace(format!("duplicate label {a:?}")));
            }
        }
        Ok(StateSpace::Finite { labels })
    }

    /// Finite space labelled `0..n`.
    pub fn indexed(n: usize) -> Result<Self> {
        Self::finite((0..n).map(|i| i.to_string()))
    }

    pub fn truncated(levels: usize) -> Result<Self> {
        if levels < 2 {
            return Err(Error::InvalidStateSpace(format!(
                "truncation level must be at least 2, got {levels}"
            )));
        }
        Ok(StateSpace::Truncated { levels })
    }

    /// Number of retained states.
    pub fn len(&self) -> usize {
        match self {
            StateSpace::Finite { labels } => labels.len(),
            StateSpace::Truncated { levels } => *levels,
        }
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn is_truncated(&self) -> bool {
        matches!(self, StateSpace::Truncated { .. })
    }

    /// Number of coordinate cells used by path functionals: the retained
    /// states, plus one lumped cell for the tail of a truncated space.
    pub fn cells(&self) -> usize {
        self.len() + usize::from(self.is_truncated())
    }

    /// Numeric code of a cell. The tail cell of a truncated space is coded as
    /// the truncation level, so `coord` behaves like the identity capped at N.
    pub fn cell_value(&self, cell: usize) -> f64 {
        cell as f64
    }

    pub fn label(&self, state: usize) -> String {
        match self {
            StateSpace::Finite { labels } => labels[state].clone(),
            StateSpace::Truncated { .. } => state.to_string(),
        }
    }
}

/// A bounded real function on a state space.
#[derive(Debug, Clone, PartialEq)]
pub struct Gamble {
    values: Vec<f64>,
    tail: f64,
}

impl Gamble {
    /// Gamble with tail value 0, the only admissible tail on finite spaces.
    pub fn new(values: Vec<f64>) -> Result<Self> {
        Self::with_tail(values, 0.0)
    }

    pub fn with_tail(values: Vec<f64>, tail: f64) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidGamble("no values".into()));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidGamble(format!(
                "value at state {i} is not finite"
            )));
        }
        if !tail.is_finite() {
            return Err(Error::InvalidGamble("tail value is not finite".into()));
        }
        Ok(Gamble { values, tail })
    }

    pub(crate) fn from_parts(values: Vec<f64>, tail: f64) -> Self {
        debug_assert!(values.iter().all(|v| v.is_finite()) && tail.is_finite());
        Gamble { values, tail }
    }

    pub fn constant(space: &StateSpace, c: f64) -> Self {
        let tail = if space.is_truncated() { c } else { 0.0 };
        Gamble {
            values: vec![c; space.len()],
            tail,
        }
    }

    pub fn zero(space: &StateSpace) -> Self {
        Self::constant(space, 0.0)
    }

    pub fn indicator(space: &StateSpace, state: usize) -> Self {
        let mut values = vec![0.0; space.len()];
        values[state] = 1.0;
        Gamble { values, tail: 0.0 }
    }

    /// `1 - 1_x`, exact on the whole (possibly infinite) space.
    pub fn complement_indicator(space: &StateSpace, state: usize) -> Self {
        let mut g = Self::constant(space, 1.0);
        g.values[state] = 0.0;
        g
    }

    /// Gamble defined by a function of the state; on truncated spaces the tail
    /// takes the function's value at the truncation level.
    pub fn from_fn(space: &StateSpace, f: impl Fn(usize) -> f64) -> Result<Self> {
        let values = (0..space.len()).map(&f).collect();
        let tail = if space.is_truncated() {
            f(space.len())
        } else {
            0.0
        };
        Self::with_tail(values, tail)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn tail(&self) -> f64 {
        self.tail
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Value at an arbitrary state; states past the retained ones read the tail.
    pub fn at(&self, state: usize) -> f64 {
        self.values.get(state).copied().unwrap_or(self.tail)
    }

    /// Sup-norm, tail included.
    pub fn norm(&self) -> f64 {
        self.values
            .iter()
            .fold(self.tail.abs(), |m, v| m.max(v.abs()))
    }

    pub fn sup(&self, space: &StateSpace) -> f64 {
        let m = self
            .values
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max);
        if space.is_truncated() {
            m.max(self.tail)
        } else {
            m
        }
    }

    /// Index of the largest retained value, lowest index on ties.
    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (i, v) in self.values.iter().enumerate() {
            if *v > self.values[best] {
                best = i;
            }
        }
        best
    }

    pub fn check_space(&self, space: &StateSpace) -> Result<()> {
        if self.values.len() != space.len() {
            return Err(Error::DimensionMismatch {
                expected: space.len(),
                actual: self.values.len(),
            });
        }
        Ok(())
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Gamble {
        Gamble {
            values: self.values.iter().map(|v| f(*v)).collect(),
            tail: f(self.tail),
        }
    }

    pub fn zip_with(&self, other: &Gamble, f: impl Fn(f64, f64) -> f64) -> Gamble {
        assert_eq!(self.len(), other.len(), "gamble lengths differ");
        Gamble {
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| f(*a, *b))
                .collect(),
            tail: f(self.tail, other.tail),
        }
    }

    pub fn scale(&self, mu: f64) -> Gamble {
        self.map(|v| mu * v)
    }

    pub fn neg(&self) -> Gamble {
        self.map(|v| -v)
    }

    pub fn add(&self, other: &Gamble) -> Gamble {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Gamble) -> Gamble {
        self.zip_with(other, |a, b| a - b)
    }

    /// Sup-norm of `self - other`.
    pub fn distance(&self, other: &Gamble) -> f64 {
        self.sub(other).norm()
    }

    /// Whether the gamble is non-decreasing in the state, tail included.
    pub fn is_increasing(&self) -> bool {
        self.values.windows(2).all(|w| w[0] <= w[1])
            && self.values.last().is_some_and(|v| *v <= self.tail)
    }

    pub fn is_decreasing(&self) -> bool {
        self.values.windows(2).all(|w| w[0] >= w[1])
            && self.values.last().is_some_and(|v| *v >= self.tail)
    }

    /// Cell-indexed view: retained values followed by the tail cell on
    /// truncated spaces.
    pub fn cell(&self, space: &StateSpace, cell: usize) -> f64 {
        if cell < self.values.len() {
            self.values[cell]
        } else {
            debug_assert!(space.is_truncated());
            self.tail
        }
    }

    /// Build a gamble from cell values (see [`Gamble::cell`]).
    pub fn from_cells(space: &StateSpace, cells: &[f64]) -> Gamble {
        debug_assert_eq!(cells.len(), space.cells());
        let n = space.len();
        let tail = if space.is_truncated() { cells[n] } else { 0.0 };
        Gamble {
            values: cells[..n].to_vec(),
            tail,
        }
    }
}
