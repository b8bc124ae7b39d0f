// SPDX-License-Identifier: Apache-2.0

use crate::error::{Error, Result};

/// A nonempty, strictly increasing, finite set of non-negative times.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeGrid {
    points: Vec<f64>,
}

impl TimeGrid {
    pub fn new(points: Vec<f64>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidGrid("grid is empty".into()));
        }
        if let Some(p) = points.iter().find(|p| !p.is_finite() || **p < 0.0) {
            return Err(Error::InvalidGrid(format!(
                "time {p} is negative or not finite"
            )));
        }
        if let Some(w) = points.windows(2).find(|w| w[0] >= w[1]) {
            return Err(Error::InvalidGrid(format!(
                "times {} and {} are not strictly increasing",
                w[0], w[1]
            )));
        }
        Ok(TimeGrid { points })
    }

    /// `2^level + 1` equally spaced points on `[0, horizon]`. Grids of
    /// consecutive levels are nested exactly.
    pub fn dyadic(horizon: f64, level: u32) -> Result<Self> {
        if !(horizon > 0.0) {
            return Err(Error::InvalidGrid(format!(
                "horizon must be positive, got {horizon}"
            )));
        }
        let m = 1u64 << level;
        Self::new((0..=m).map(|k| horizon * (k as f64 / m as f64)).collect())
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn first(&self) -> f64 {
        self.points[0]
    }

    pub fn last(&self) -> f64 {
        self.points[self.points.len() - 1]
    }

    pub fn position(&self, t: f64) -> Option<usize> {
        self.points.iter().position(|p| *p == t)
    }

    pub fn is_subset_of(&self, other: &TimeGrid) -> bool {
        self.points.iter().all(|p| other.position(*p).is_some())
    }

    pub fn union(&self, other: &TimeGrid) -> TimeGrid {
        let mut pts: Vec<f64> = self.points.iter().chain(&other.points).copied().collect();
        pts.sort_by(f64::total_cmp);
        pts.dedup();
        TimeGrid { points: pts }
    }

    pub(crate) fn without_last(&self) -> TimeGrid {
        debug_assert!(self.points.len() >= 2);
        TimeGrid {
            points: self.points[..self.points.len() - 1].to_vec(),
        }
    }

    pub(crate) fn with_zero(&self) -> TimeGrid {
        if self.points[0] == 0.0 {
            self.clone()
        } else {
            let mut pts = Vec::with_capacity(self.points.len() + 1);
            pts.push(0.0);
            pts.extend(&self.points);
            TimeGrid { points: pts }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validation() {
        assert!(TimeGrid::new(vec![]).is_err());
        assert!(TimeGrid::new(vec![0.0, 0.0]).is_err());
        assert!(TimeGrid::new(vec![0.5, 0.2]).is_err());
        assert!(TimeGrid::new(vec![-0.1]).is_err());
        assert!(TimeGrid::new(vec![0.0, 0.1, 2.0]).is_ok());
    }

    #[test]
    fn dyadic_grids_nest() {
        for level in 0..8 {
            let a = TimeGrid::dyadic(0.7, level).unwrap();
            let b = TimeGrid::dyadic(0.7, level + 1).unwrap();
            assert_eq!(a.len(), (1 << level) + 1);
            assert!(a.is_subset_of(&b));
            assert_eq!(b.last(), 0.7);
        }
    }

    #[test]
    fn union_and_zero() {
        let a = TimeGrid::new(vec![0.2, 0.5]).unwrap();
        let b = TimeGrid::new(vec![0.3, 0.5]).unwrap();
        assert_eq!(a.union(&b).points(), &[0.2, 0.3, 0.5]);
        assert_eq!(a.with_zero().points(), &[0.0, 0.2, 0.5]);
    }
}
