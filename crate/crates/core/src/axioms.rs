// SPDX-License-Identifier: Apache-2.0

//! Randomised verification of the upper-rate-operator axioms and bounds on
//! the operator seminorm `sup ||Q f|| / ||f||`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::rate::UpperRateOperator;
use crate::space::{Gamble, StateSpace};

/// Slack for the positive maximum principle and constant maps.
pub const PMP_TOL: f64 = 1e-12;
/// Relative slack for subadditivity, scaled by `||f|| + ||g||`.
pub const SUBADDITIVE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct AxiomReport {
    pub samples: usize,
    pub worst_constant: f64,
    pub worst_subadditivity: f64,
    pub worst_homogeneity: f64,
    pub worst_pmp: f64,
    pub failures: Vec<String>,
}

impl AxiomReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }

    fn fail(&mut self, msg: String) {
        if self.failures.len() < 32 {
            self.failures.push(msg);
        }
    }
}

/// Random gamble on `space`; values in `[-scale, scale]`, tail included on
/// truncated spaces.
pub fn random_gamble(space: &StateSpace, rng: &mut impl Rng, scale: f64) -> Gamble {
    let values = (0..space.len())
        .map(|_| scale * rng.random_range(-1.0..=1.0))
        .collect();
    let tail = if space.is_truncated() {
        scale * rng.random_range(-1.0..=1.0)
    } else {
        0.0
    };
    Gamble::with_tail(values, tail).expect("finite random values")
}

/// Samples gambles and checks: constants map to zero, subadditivity,
/// exact positive homogeneity for power-of-two factors, and the positive
/// maximum principle. Indicator gambles are always probed as well.
pub fn check_upper_rate_axioms(
    op: &UpperRateOperator,
    sample_count: usize,
    seed: u64,
) -> AxiomReport {
    assert!(sample_count >= 1, "sample_count must be at least 1");
    let space = op.space();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = AxiomReport {
        samples: sample_count,
        worst_constant: 0.0,
        worst_subadditivity: 0.0,
        worst_homogeneity: 0.0,
        worst_pmp: 0.0,
        failures: Vec::new(),
    };

    let mut probes: Vec<Gamble> = (0..space.len().min(64))
        .map(|x| Gamble::indicator(space, x))
        .collect();
    probes.extend((0..space.len().min(64)).map(|x| Gamble::complement_indicator(space, x).neg()));

    for i in 0..sample_count {
        let scale = 10f64.powf(rng.random_range(-2.0..2.0));
        let f = random_gamble(space, &mut rng, scale);
        let g = random_gamble(space, &mut rng, scale);

        let c = Gamble::constant(space, scale * rng.random_range(-1.0..=1.0));
        let qc = op.apply(&c).expect("same space");
        let dev = qc.norm();
        report.worst_constant = report.worst_constant.max(dev);
        if dev > PMP_TOL {
            report.fail(format!("sample {i}: constant maps to {dev:e}"));
        }

        let qf = op.apply(&f).expect("same space");
        let qg = op.apply(&g).expect("same space");
        let qfg = op.apply(&f.add(&g)).expect("same space");
        let excess = qfg
            .sub(&qf.add(&qg))
            .values()
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max);
        report.worst_subadditivity = report.worst_subadditivity.max(excess);
        if excess > SUBADDITIVE_TOL * (f.norm() + g.norm()) {
            report.fail(format!("sample {i}: subadditivity violated by {excess:e}"));
        }

        let k: i32 = rng.random_range(-5..=4);
        let mu = if k == -5 { 0.0 } else { 2f64.powi(k) };
        let lhs = op.apply(&f.scale(mu)).expect("same space");
        let dev = lhs.distance(&qf.scale(mu));
        report.worst_homogeneity = report.worst_homogeneity.max(dev);
        if dev != 0.0 {
            report.fail(format!("sample {i}: homogeneity off by {dev:e} at mu={mu}"));
        }

        pmp_probe(op, &f, i, &mut report);
    }
    for (i, p) in probes.iter().enumerate() {
        pmp_probe(op, p, sample_count + i, &mut report);
    }
    report
}

fn pmp_probe(op: &UpperRateOperator, f: &Gamble, i: usize, report: &mut AxiomReport) {
    let space = op.space();
    let sup = f.sup(space);
    if sup < 0.0 {
        return;
    }
    for x in 0..space.len() {
        if f.values()[x] == sup {
            let v = op.row_apply(x, f);
            report.worst_pmp = report.worst_pmp.max(v);
            if v > PMP_TOL {
                report.fail(format!(
                    "sample {i}: positive maximum principle fails at state {x}: {v:e}"
                ));
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormEstimate {
    pub lower: f64,
    pub upper: f64,
}

/// Interval for the operator seminorm. The lower end maximises `||Q f||`
/// over sign gambles `f` with values in `{-1, +1}` (exhaustive in counting
/// order up to half the budget, then random); the upper end is
/// `2 max_x |q(x, x)|` over the generating matrices.
pub fn operator_norm_estimate(op: &UpperRateOperator, budget: usize, seed: u64) -> NormEstimate {
    assert!(budget >= 1, "budget must be at least 1");
    let space = op.space();
    let cells = space.cells();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let exhaustive = cells < 63 && (1u64 << cells) <= budget as u64;
    let enumerated = if exhaustive {
        1usize << cells
    } else {
        budget.div_ceil(2)
    };
    let random = if exhaustive { 0 } else { budget - enumerated };

    let mut lower: f64 = 0.0;
    let mut cell_values = vec![0.0; cells];
    let mut eval = |cell_values: &[f64]| {
        let f = Gamble::from_cells(space, cell_values);
        lower = lower.max(op.apply(&f).expect("same space").norm());
    };
    for code in 0..enumerated as u64 {
        for (j, v) in cell_values.iter_mut().enumerate() {
            *v = if j < 64 && (code >> j) & 1 == 1 {
                1.0
            } else {
                -1.0
            };
        }
        eval(&cell_values);
    }
    for _ in 0..random {
        for v in cell_values.iter_mut() {
            *v = if rng.random::<bool>() { 1.0 } else { -1.0 };
        }
        eval(&cell_values);
    }
    let upper = op.norm_upper_bound();
    debug_assert!(
        lower <= upper * (1.0 + 1e-12) + 1e-12,
        "lower {lower} > upper {upper}"
    );
    NormEstimate {
        lower: lower.min(upper),
        upper,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poisson::{poisson_generator, RateInterval};
    use crate::rate::{upper_envelope, IntervalRows, RateMatrix, RateSpec};

    #[test]
    fn envelope_passes() {
        let space = StateSpace::indexed(3).unwrap();
        let q1 = RateMatrix::new(vec![
            vec![-1.0, 0.5, 0.5],
            vec![2.0, -3.0, 1.0],
            vec![0.0, 0.1, -0.1],
        ])
        .unwrap();
        let q2 = RateMatrix::new(vec![
            vec![-0.2, 0.2, 0.0],
            vec![0.0, -1.0, 1.0],
            vec![3.0, 0.0, -3.0],
        ])
        .unwrap();
        let op = upper_envelope(space, vec![q1, q2]).unwrap();
        let r = check_upper_rate_axioms(&op, 200, 7);
        assert!(r.passed(), "{:?}", r.failures);
    }

    #[test]
    fn smuggled_negative_rate_fails_pmp() {
        let space = StateSpace::indexed(2).unwrap();
        let bad = RateMatrix::new_unchecked(vec![vec![1.0, -1.0], vec![0.0, 0.0]]).unwrap();
        let op = upper_envelope(space, vec![bad]).unwrap();
        let r = check_upper_rate_axioms(&op, 5, 1);
        assert!(!r.passed());
        assert!(r.worst_pmp > 0.0);
        assert!(r
            .failures
            .iter()
            .any(|m| m.contains("positive maximum principle")));
    }

    #[test]
    fn poisson_passes() {
        let op = poisson_generator(
            RateInterval::new(1.0, 2.0).unwrap(),
            StateSpace::truncated(12).unwrap(),
        )
        .unwrap();
        let r = check_upper_rate_axioms(&op, 300, 3);
        assert!(r.passed(), "{:?}", r.failures);
    }

    #[test]
    fn interval_rows_pass() {
        let space = StateSpace::indexed(3).unwrap();
        let rows = IntervalRows::new(
            vec![
                vec![-4.0, 0.5, 0.0],
                vec![0.0, -2.0, 0.2],
                vec![1.0, 1.0, -3.0],
            ],
            vec![
                vec![-0.5, 2.0, 1.5],
                vec![1.0, -0.2, 1.0],
                vec![2.0, 1.5, -2.0],
            ],
        )
        .unwrap();
        let op = crate::rate::UpperRateOperator::new(space, RateSpec::RowIntervals(rows)).unwrap();
        let r = check_upper_rate_axioms(&op, 300, 11);
        assert!(r.passed(), "{:?}", r.failures);
    }

    #[test]
    fn norm_examples() {
        let space = StateSpace::indexed(2).unwrap();
        let op = upper_envelope(
            space.clone(),
            vec![RateMatrix::two_state(1.0, 2.0).unwrap()],
        )
        .unwrap();
        let est = operator_norm_estimate(&op, 16, 0);
        assert_eq!((est.lower, est.upper), (4.0, 4.0));

        let zero = upper_envelope(space, vec![RateMatrix::zero(2)]).unwrap();
        let est = operator_norm_estimate(&zero, 16, 0);
        assert_eq!((est.lower, est.upper), (0.0, 0.0));

        let l = poisson_generator(
            RateInterval::new(1.0, 2.0).unwrap(),
            StateSpace::truncated(30).unwrap(),
        )
        .unwrap();
        let est = operator_norm_estimate(&l, 64, 5);
        assert_eq!(est.upper, 4.0);
        assert_eq!(est.lower, 4.0);
    }
}
