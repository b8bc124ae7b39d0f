// SPDX-License-Identifier: Apache-2.0

//! Rate matrices and upper rate operators.
//!
//! Every operator here is evaluated in difference form,
//! `[Q f](x) = sum_{y != x} q(x, y) (f(y) - f(x))`, which equals the usual
//! matrix-vector product for zero row sums, maps constants to exactly zero and
//! satisfies the positive maximum principle without rounding slack.

use crate::error::{Error, Result};
use crate::poisson::RateInterval;
use crate::space::{Gamble, StateSpace};

const ROW_SUM_TOL: f64 = 1e-12;

/// A linear rate operator on a finite set of retained states, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct RateMatrix {
    n: usize,
    data: Vec<f64>,
}

impl RateMatrix {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        let m = Self::new_unchecked(rows)?;
        m.validate()?;
        Ok(m)
    }

    /// Builds a square matrix without checking the rate-matrix sign and
    /// row-sum conditions. Used to construct counterexamples.
    pub fn new_unchecked(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n = rows.len();
        if n == 0 {
            return Err(Error::InvalidRateMatrix("empty matrix".into()));
        }
        let mut data = Vec::with_capacity(n * n);
        for (i, row) in rows.into_iter().enumerate() {
            if row.len() != n {
                return Err(Error::InvalidRateMatrix(format!(
                    "row {i} has {} entries, expected {n}",
                    row.len()
                )));
            }
            data.extend(row);
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidRateMatrix("non-finite entry".into()));
        }
        Ok(RateMatrix { n, data })
    }

    pub fn zero(n: usize) -> Self {
        RateMatrix {
            n,
            data: vec![0.0; n * n],
        }
    }

    /// `[[-a, a], [b, -b]]`.
    pub fn two_state(a: f64, b: f64) -> Result<Self> {
        Self::new(vec![vec![-a, a], vec![b, -b]])
    }

    fn validate(&self) -> Result<()> {
        for x in 0..self.n {
            let row = self.row(x);
            let mut sum = 0.0;
            let mut scale = 1.0_f64;
            for (y, q) in row.iter().enumerate() {
                if y != x && *q < 0.0 {
                    return Err(Error::InvalidRateMatrix(format!(
                        "negative off-diagonal entry {q} at ({x}, {y})"
                    )));
                }
                sum += q;
                scale = scale.max(q.abs());
            }
            if sum.abs() > ROW_SUM_TOL * scale {
                return Err(Error::InvalidRateMatrix(format!("row {x} sums to {sum:e}")));
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn row(&self, x: usize) -> &[f64] {
        &self.data[x * self.n..(x + 1) * self.n]
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.data[x * self.n + y]
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        (0..self.n).map(|x| self.row(x).to_vec()).collect()
    }

    /// Total exit rate `sum_{y != x} q(x, y)`.
    pub fn exit_rate(&self, x: usize) -> f64 {
        self.row(x)
            .iter()
            .enumerate()
            .filter(|(y, _)| *y != x)
            .map(|(_, q)| q)
            .sum()
    }

    /// `[Q f](x)` in difference form.
    pub fn row_apply(&self, x: usize, f: &[f64]) -> f64 {
        let fx = f[x];
        let mut acc = 0.0;
        for (y, q) in self.row(x).iter().enumerate() {
            if y != x {
                acc += q * (f[y] - fx);
            }
        }
        acc
    }

    pub fn apply(&self, f: &Gamble) -> Result<Gamble> {
        if f.len() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                actual: f.len(),
            });
        }
        let v = (0..self.n).map(|x| self.row_apply(x, f.values())).collect();
        Ok(Gamble::from_parts(v, 0.0))
    }

    /// Largest `|q(x, x)|`, taken as the exit rate so it is exact for
    /// validated matrices.
    pub fn max_exit_rate(&self) -> f64 {
        (0..self.n)
            .map(|x| self.exit_rate(x).max(self.get(x, x).abs()))
            .fold(0.0, f64::max)
    }
}

/// Row-wise interval specification of a credal set of rate matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct IntervalRows {
    n: usize,
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl IntervalRows {
    pub fn new(lower: Vec<Vec<f64>>, upper: Vec<Vec<f64>>) -> Result<Self> {
        let lo = RateMatrix::new_unchecked(lower)?;
        let hi = RateMatrix::new_unchecked(upper)?;
        if lo.n != hi.n {
            return Err(Error::DimensionMismatch {
                expected: lo.n,
                actual: hi.n,
            });
        }
        let n = lo.n;
        for x in 0..n {
            let (mut sum_lo, mut sum_hi) = (0.0, 0.0);
            for y in 0..n {
                let (l, u) = (lo.get(x, y), hi.get(x, y));
                if l > u {
                    return Err(Error::InfeasibleRowIntervals {
                        row: x,
                        reason: format!("lower {l} exceeds upper {u} at column {y}"),
                    });
                }
                if y != x && l < 0.0 {
                    return Err(Error::InfeasibleRowIntervals {
                        row: x,
                        reason: format!("negative off-diagonal lower bound {l} at column {y}"),
                    });
                }
                sum_lo += l;
                sum_hi += u;
            }
            if sum_lo > 1e-12 || sum_hi < -1e-12 {
                return Err(Error::InfeasibleRowIntervals {
                    row: x,
                    reason: format!("no zero-sum selection: bounds sum to [{sum_lo}, {sum_hi}]"),
                });
            }
        }
        Ok(IntervalRows {
            n,
            lower: lo.data,
            upper: hi.data,
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn lower(&self, x: usize, y: usize) -> f64 {
        self.lower[x * self.n + y]
    }

    pub fn upper(&self, x: usize, y: usize) -> f64 {
        self.upper[x * self.n + y]
    }

    pub fn lower_rows(&self) -> Vec<Vec<f64>> {
        self.lower.chunks(self.n).map(<[f64]>::to_vec).collect()
    }

    pub fn upper_rows(&self) -> Vec<Vec<f64>> {
        self.upper.chunks(self.n).map(<[f64]>::to_vec).collect()
    }

    /// Maximises `sum_y q(x, y) (f(y) - f(x))` over the credal row: start at
    /// the lower bounds and hand out the remaining mass `-sum lower` in
    /// decreasing order of `f(y) - f(x)`, lowest index first on ties.
    pub fn row_apply(&self, x: usize, f: &[f64]) -> f64 {
        let n = self.n;
        let fx = f[x];
        let lo = &self.lower[x * n..(x + 1) * n];
        let hi = &self.upper[x * n..(x + 1) * n];
        let coef = |y: usize| if y == x { 0.0 } else { f[y] - fx };
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|a, b| coef(*b).total_cmp(&coef(*a)));
        let mut budget = -lo.iter().sum::<f64>();
        let mut acc: f64 = (0..n).map(|y| lo[y] * coef(y)).sum();
        for y in order {
            if budget <= 0.0 {
                break;
            }
            let add = (hi[y] - lo[y]).min(budget);
            acc += add * coef(y);
            budget -= add;
        }
        acc
    }

    /// A rate matrix in the credal set attaining the greedy maximum for `f`.
    pub fn maximiser(&self, f: &[f64]) -> RateMatrix {
        let n = self.n;
        let mut data = self.lower.clone();
        for x in 0..n {
            let fx = f[x];
            let coef = |y: usize| if y == x { 0.0 } else { f[y] - fx };
            let mut order: Vec<usize> = (0..n).collect();
            order.sort_by(|a, b| coef(*b).total_cmp(&coef(*a)));
            let mut budget = -self.lower[x * n..(x + 1) * n].iter().sum::<f64>();
            for y in order {
                if budget <= 0.0 {
                    break;
                }
                let add = (self.upper(x, y) - self.lower(x, y)).min(budget);
                data[x * n + y] += add;
                budget -= add;
            }
        }
        RateMatrix { n, data }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum RateSpec {
    Extremes(Vec<RateMatrix>),
    RowIntervals(IntervalRows),
    PoissonInterval(RateInterval),
}

/// A sublinear rate operator: a finite envelope of rate matrices, a credal
/// set given by row intervals, or the sublinear Poisson generator.
#[derive(Debug, Clone, PartialEq)]
pub struct UpperRateOperator {
    space: StateSpace,
    spec: RateSpec,
}

impl UpperRateOperator {
    pub fn new(space: StateSpace, spec: RateSpec) -> Result<Self> {
        let n = space.len();
        match &spec {
            RateSpec::Extremes(ms) => {
                if ms.is_empty() {
                    return Err(Error::EmptyEnvelope);
                }
                if let Some(m) = ms.iter().find(|m| m.dim() != n) {
                    return Err(Error::DimensionMismatch {
                        expected: n,
                        actual: m.dim(),
                    });
                }
            }
            RateSpec::RowIntervals(r) => {
                if r.dim() != n {
                    return Err(Error::DimensionMismatch {
                        expected: n,
                        actual: r.dim(),
                    });
                }
            }
            RateSpec::PoissonInterval(_) => {
                if !space.is_truncated() {
                    return Err(Error::WrongSpaceKind);
                }
            }
        }
        Ok(UpperRateOperator { space, spec })
    }

    pub fn space(&self) -> &StateSpace {
        &self.space
    }

    pub fn spec(&self) -> &RateSpec {
        &self.spec
    }

    /// The extreme matrices of an envelope operator, if it is one.
    pub fn extremes(&self) -> Option<&[RateMatrix]> {
        match &self.spec {
            RateSpec::Extremes(ms) => Some(ms),
            _ => None,
        }
    }

    /// `[Q f](x)` for a single retained state.
    pub fn row_apply(&self, x: usize, f: &Gamble) -> f64 {
        match &self.spec {
            RateSpec::Extremes(ms) => ms
                .iter()
                .map(|m| m.row_apply(x, f.values()))
                .fold(f64::NEG_INFINITY, f64::max),
            RateSpec::RowIntervals(r) => r.row_apply(x, f.values()),
            RateSpec::PoissonInterval(l) => l.max_rate_times(f.at(x + 1) - f.values()[x]),
        }
    }

    /// Writes `Q f` for the retained states into `out`. The value of `Q f` on
    /// the tail is always zero: matrix generators do not reach past the
    /// retained states and the Poisson generator sees a constant there.
    pub(crate) fn apply_into(&self, f: &Gamble, out: &mut [f64]) {
        let v = f.values();
        match &self.spec {
            RateSpec::Extremes(ms) => {
                for (x, o) in out.iter_mut().enumerate() {
                    *o = ms
                        .iter()
                        .map(|m| m.row_apply(x, v))
                        .fold(f64::NEG_INFINITY, f64::max);
                }
            }
            RateSpec::RowIntervals(r) => {
                for (x, o) in out.iter_mut().enumerate() {
                    *o = r.row_apply(x, v);
                }
            }
            RateSpec::PoissonInterval(l) => {
                let n = v.len();
                for z in 0..n {
                    let next = if z + 1 < n { v[z + 1] } else { f.tail() };
                    out[z] = l.max_rate_times(next - v[z]);
                }
            }
        }
    }

    pub fn apply(&self, f: &Gamble) -> Result<Gamble> {
        f.check_space(&self.space)?;
        let mut out = vec![0.0; self.space.len()];
        self.apply_into(f, &mut out);
        Ok(Gamble::from_parts(out, 0.0))
    }

    /// `max_x [Q(1 - 1_x)](x)`.
    pub fn rate_bound(&self) -> f64 {
        match &self.spec {
            RateSpec::PoissonInterval(l) => l.upper(),
            _ => (0..self.space.len())
                .map(|x| self.row_apply(x, &Gamble::complement_indicator(&self.space, x)))
                .fold(0.0, f64::max),
        }
    }

    /// Upper bound on the operator seminorm, `2 max_x |q(x, x)|` over the
    /// generating matrices.
    pub fn norm_upper_bound(&self) -> f64 {
        match &self.spec {
            RateSpec::Extremes(ms) => {
                2.0 * ms.iter().map(RateMatrix::max_exit_rate).fold(0.0, f64::max)
            }
            RateSpec::RowIntervals(r) => {
                let n = r.dim();
                let worst = (0..n)
                    .map(|x| {
                        let off: f64 = (0..n).filter(|y| *y != x).map(|y| r.upper(x, y)).sum();
                        off.min(-r.lower(x, x))
                    })
                    .fold(0.0, f64::max);
                2.0 * worst
            }
            RateSpec::PoissonInterval(l) => 2.0 * l.upper(),
        }
    }
}

/// Envelope operator of a nonempty list of rate matrices. Exact duplicates
/// are dropped.
pub fn upper_envelope(space: StateSpace, matrices: Vec<RateMatrix>) -> Result<UpperRateOperator> {
    if matrices.is_empty() {
        return Err(Error::EmptyEnvelope);
    }
    let mut unique: Vec<RateMatrix> = Vec::with_capacity(matrices.len());
    for m in matrices {
        if !unique.contains(&m) {
            unique.push(m);
        }
    }
    UpperRateOperator::new(space, RateSpec::Extremes(unique))
}

/// The conjugate lower operator `f -> -U(-f)`.
pub fn lower_via_conjugacy<E>(
    apply_upper: impl FnOnce(&Gamble) -> std::result::Result<Gamble, E>,
    f: &Gamble,
) -> std::result::Result<Gamble, E> {
    Ok(apply_upper(&f.neg())?.neg())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two() -> StateSpace {
        StateSpace::indexed(2).unwrap()
    }

    #[test]
    fn rejects_bad_matrices() {
        assert!(RateMatrix::new(vec![vec![1.0, -1.0], vec![0.0, 0.0]]).is_err());
        assert!(RateMatrix::new(vec![vec![-1.0, 2.0], vec![0.0, 0.0]]).is_err());
        assert!(RateMatrix::new(vec![vec![-1.0, 1.0]]).is_err());
        assert!(RateMatrix::new(vec![vec![0.0]]).is_ok());
    }

    #[test]
    fn singleton_envelope_is_linear() {
        let q = RateMatrix::two_state(1.0, 2.0).unwrap();
        let op = upper_envelope(two(), vec![q.clone()]).unwrap();
        let f = Gamble::new(vec![0.3, -1.2]).unwrap();
        assert_eq!(op.apply(&f).unwrap(), q.apply(&f).unwrap());
    }

    #[test]
    fn two_extremes_direct_envelope() {
        let q1 = RateMatrix::two_state(1.0, 2.0).unwrap();
        let q2 = RateMatrix::two_state(3.0, 1.0).unwrap();
        let op = upper_envelope(two(), vec![q1, q2]).unwrap();
        let out = op.apply(&Gamble::new(vec![0.0, 1.0]).unwrap()).unwrap();
        assert_eq!(out.values()[0], 3.0);
        assert_eq!(out.values()[1], -1.0);
    }

    #[test]
    fn duplicate_extremes_collapse() {
        let q = RateMatrix::two_state(1.0, 2.0).unwrap();
        let a = upper_envelope(two(), vec![q.clone()]).unwrap();
        let b = upper_envelope(two(), vec![q.clone(), q]).unwrap();
        assert_eq!(a, b);
        assert!(upper_envelope(two(), vec![]).is_err());
    }

    #[test]
    fn row_interval_two_state() {
        // q(0,1) in [1,3]; diagonal left free enough
        let r = IntervalRows::new(
            vec![vec![-3.0, 1.0], vec![0.0, 0.0]],
            vec![vec![-1.0, 3.0], vec![0.0, 0.0]],
        )
        .unwrap();
        let op = UpperRateOperator::new(two(), RateSpec::RowIntervals(r)).unwrap();
        let out = op.apply(&Gamble::new(vec![0.0, 1.0]).unwrap()).unwrap();
        assert_eq!(out.values()[0], 3.0);
        assert_eq!(op.rate_bound(), 3.0);
    }

    #[test]
    fn infeasible_rows() {
        let e = IntervalRows::new(
            vec![vec![-1.0, 2.0], vec![0.0, 0.0]],
            vec![vec![-1.0, 3.0], vec![0.0, 0.0]],
        );
        assert!(matches!(
            e,
            Err(Error::InfeasibleRowIntervals { row: 0, .. })
        ));
        let e = IntervalRows::new(
            vec![vec![-1.0, 2.0], vec![0.0, 0.0]],
            vec![vec![-2.0, 1.0], vec![0.0, 0.0]],
        );
        assert!(e.is_err());
    }

    #[test]
    fn rate_bound_two_state() {
        let op = upper_envelope(two(), vec![RateMatrix::two_state(1.5, 0.5).unwrap()]).unwrap();
        assert_eq!(op.rate_bound(), 1.5);
        let op = upper_envelope(
            two(),
            vec![
                RateMatrix::two_state(1.5, 0.5).unwrap(),
                RateMatrix::two_state(0.2, 4.0).unwrap(),
            ],
        )
        .unwrap();
        assert_eq!(op.rate_bound(), 4.0);
    }

    #[test]
    fn one_state_is_zero_operator() {
        let one = StateSpace::indexed(1).unwrap();
        let op = upper_envelope(one, vec![RateMatrix::zero(1)]).unwrap();
        assert_eq!(
            op.apply(&Gamble::new(vec![5.0]).unwrap()).unwrap().values(),
            &[0.0]
        );
        assert_eq!(op.rate_bound(), 0.0);
    }

    #[test]
    fn dimension_mismatch() {
        let op = upper_envelope(two(), vec![RateMatrix::two_state(1.0, 1.0).unwrap()]).unwrap();
        assert!(matches!(
            op.apply(&Gamble::new(vec![1.0, 2.0, 3.0]).unwrap()),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn conjugacy_of_linear_and_constants() {
        let q = RateMatrix::two_state(1.0, 2.0).unwrap();
        let f = Gamble::new(vec![0.25, 0.5]).unwrap();
        let lower = lower_via_conjugacy(|g| q.apply(g), &f).unwrap();
        assert_eq!(lower, q.apply(&f).unwrap());
        let c = Gamble::new(vec![4.0, 4.0]).unwrap();
        let id = lower_via_conjugacy::<Error>(|g| Ok(g.clone()), &c).unwrap();
        assert_eq!(id, c);
    }
}
