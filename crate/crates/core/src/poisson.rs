// SPDX-License-Identifier: Apache-2.0

//! The sublinear Poisson generator `L f(z) = max_{l in [lo, hi]} l (f(z+1) - f(z))`
//! and closed forms for its semigroup on monotone gambles.
//!
//! An increasing gamble is pushed up by the largest rate at every instant, so
//! the upper semigroup integrates it against the Poisson distribution with
//! parameter `hi * t`; a decreasing one against parameter `lo * t`.

use crate::error::{Error, Result};
use crate::rate::{RateSpec, UpperRateOperator};
use crate::report::CheckReport;
use crate::semigroup::TransitionEngine;
use crate::space::{Gamble, StateSpace};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateInterval {
    lower: f64,
    upper: f64,
}

impl RateInterval {
    pub fn new(lower: f64, upper: f64) -> Result<Self> {
        if !(lower.is_finite() && upper.is_finite()) {
            return Err(Error::InvalidRateInterval("rates must be finite".into()));
        }
        if lower < 0.0 {
            return Err(Error::InvalidRateInterval(format!(
                "lower rate {lower} is negative"
            )));
        }
        if lower > upper {
            return Err(Error::InvalidRateInterval(format!(
                "lower rate {lower} exceeds upper rate {upper}"
            )));
        }
        Ok(RateInterval { lower, upper })
    }

    pub fn precise(rate: f64) -> Result<Self> {
        Self::new(rate, rate)
    }

    pub fn lower(&self) -> f64 {
        self.lower
    }

    pub fn upper(&self) -> f64 {
        self.upper
    }

    /// `max { l * d : l in [lower, upper] }`.
    #[inline]
    pub fn max_rate_times(&self, d: f64) -> f64 {
        if d >= 0.0 {
            self.upper * d
        } else {
            self.lower * d
        }
    }
}

pub fn poisson_generator(rates: RateInterval, space: StateSpace) -> Result<UpperRateOperator> {
    UpperRateOperator::new(space, RateSpec::PoissonInterval(rates))
}

/// Truncation level keeping the Poisson tail negligible for states up to
/// `z_max` and horizons up to `t_max`.
pub fn default_truncation(lambda_upper: f64, t_max: f64, z_max: usize) -> usize {
    z_max + (20.0 * (1.0 + lambda_upper * t_max)).ceil() as usize
}

#[derive(Debug, Clone, PartialEq)]
pub struct PoissonPmf {
    pub parameter: f64,
    pub masses: Vec<f64>,
    /// Upper bound on the mass beyond the support cap.
    pub tail_bound: f64,
}

impl PoissonPmf {
    pub fn cap(&self) -> usize {
        self.masses.len() - 1
    }
}

/// Poisson masses for `k = 0..=cap` by the ratio recurrence
/// `p_k = p_{k-1} * param / k`. Parameters above 50 run the recurrence on
/// log-masses so `exp(-param)` cannot underflow.
pub fn poisson_pmf(param: f64, cap: usize) -> PoissonPmf {
    assert!(
        param >= 0.0 && param.is_finite(),
        "Poisson parameter must be finite and non-negative"
    );
    let mut masses = Vec::with_capacity(cap + 1);
    if param == 0.0 {
        masses.push(1.0);
        masses.resize(cap + 1, 0.0);
    } else if param <= 50.0 {
        let mut p = (-param).exp();
        masses.push(p);
        for k in 1..=cap {
            p *= param / k as f64;
            masses.push(p);
        }
    } else {
        let ln_param = param.ln();
        let mut lp = -param;
        masses.push(lp.exp());
        for k in 1..=cap {
            lp += ln_param - (k as f64).ln();
            masses.push(lp.exp());
        }
    }
    let total: f64 = masses.iter().sum();
    let rounding = (cap as f64 + 1.0) * f64::EPSILON;
    let tail_bound = (1.0 - total).max(0.0) + rounding;
    PoissonPmf {
        parameter: param,
        masses,
        tail_bound,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Monotone {
    Increasing,
    Decreasing,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClosedForm {
    pub value: f64,
    pub error_bound: f64,
}

/// Upper semigroup value `[M_t f](z)` for a monotone gamble `f`:
/// `sum_k f(z + k) psi(k)` with `psi` Poisson of parameter `upper * t` for
/// increasing `f` and `lower * t` for decreasing `f`.
pub fn monotone_closed_form(
    rates: RateInterval,
    t: f64,
    z: usize,
    f: &Gamble,
    direction: Monotone,
    tol: f64,
) -> Result<ClosedForm> {
    let rate = match direction {
        Monotone::Increasing if f.is_increasing() => rates.upper(),
        Monotone::Decreasing if f.is_decreasing() => rates.lower(),
        Monotone::Increasing => return Err(Error::NotMonotone("increasing")),
        Monotone::Decreasing => return Err(Error::NotMonotone("decreasing")),
    };
    let param = rate * t;
    let norm = f.norm();
    let mut cap = (20.0 * (1.0 + param)).ceil() as usize;
    let pmf = loop {
        let pmf = poisson_pmf(param, cap);
        // past the point where rounding dominates, a longer sum cannot help
        let rounding = (cap + 1) as f64 * f64::EPSILON;
        if pmf.tail_bound * norm < tol || pmf.tail_bound <= 2.0 * rounding || cap > 1 << 24 {
            break pmf;
        }
        cap *= 2;
    };
    let value = pmf
        .masses
        .iter()
        .enumerate()
        .map(|(k, p)| f.at(z + k) * p)
        .sum();
    Ok(ClosedForm {
        value,
        error_bound: pmf.tail_bound * norm,
    })
}

/// Compares the Euler-product engine on the sublinear Poisson generator with
/// the monotone closed forms, and checks the rate witness
/// `(1/t) [M_t(1 - 1_z)](z) = (1 - exp(-upper t)) / t <= upper`.
pub fn check_poisson_semigroup(rates: RateInterval, t: f64, tol: f64) -> Result<CheckReport> {
    if !(t > 0.0) {
        return Err(Error::InvalidEngine(format!(
            "horizon must be positive, got {t}"
        )));
    }
    let queried = [0usize, 3];
    let levels = default_truncation(rates.upper(), t, *queried.iter().max().unwrap());
    let space = StateSpace::truncated(levels)?;
    let engine = TransitionEngine::new(poisson_generator(rates, space.clone())?)?
        .with_tolerance(tol * 0.1)?;
    let mut report = CheckReport::new("poisson-semigroup", tol);

    let battery: Vec<(&str, Gamble)> = vec![
        ("1{>=1}", Gamble::from_fn(&space, |z| f64::from(z >= 1))?),
        ("1{>=4}", Gamble::from_fn(&space, |z| f64::from(z >= 4))?),
        ("identity", Gamble::from_fn(&space, |z| z as f64)?),
        (
            "min(z,5)",
            Gamble::from_fn(&space, |z| (z as f64).min(5.0))?,
        ),
        ("sqrt", Gamble::from_fn(&space, |z| (z as f64).sqrt())?),
        ("1{<=2}", Gamble::from_fn(&space, |z| f64::from(z <= 2))?),
        ("exp(-z)", Gamble::from_fn(&space, |z| (-(z as f64)).exp())?),
        (
            "-min(z,7)",
            Gamble::from_fn(&space, |z| -(z as f64).min(7.0))?,
        ),
    ];
    for (name, f) in &battery {
        let direction = if f.is_increasing() {
            Monotone::Increasing
        } else {
            Monotone::Decreasing
        };
        let (got, _) = engine.exponential_apply(t, f)?;
        for &z in &queried {
            let cf = monotone_closed_form(rates, t, z, f, direction, tol * 0.1)?;
            let allowed = cf.error_bound;
            report.observe((got.values()[z] - cf.value).abs() - allowed, || {
                format!(
                    "{name} at z={z}: engine {} vs closed form {}",
                    got.values()[z],
                    cf.value
                )
            });
        }
    }

    let z = queried[0];
    let (jump, _) = engine.exponential_apply(t, &Gamble::complement_indicator(&space, z))?;
    let ratio = jump.values()[z] / t;
    let expected = (1.0 - (-rates.upper() * t).exp()) / t;
    report.observe((ratio - expected).abs(), || {
        format!("rate witness {ratio} vs {expected}")
    });
    if ratio > rates.upper() + tol {
        report.fail(format!(
            "rate witness {ratio} exceeds upper rate {}",
            rates.upper()
        ));
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn exp_series(x: f64) -> f64 {
        // truncated exponential series, independent of f64::exp
        let mut term = 1.0;
        let mut sum = 1.0;
        for k in 1..60 {
            term *= x / k as f64;
            sum += term;
        }
        sum
    }

    #[test]
    fn generator_values() {
        let l = poisson_generator(
            RateInterval::new(1.0, 2.0).unwrap(),
            StateSpace::truncated(4).unwrap(),
        )
        .unwrap();
        let up = Gamble::with_tail(vec![0.0, 3.0, 3.0, 3.0], 3.0).unwrap();
        assert_eq!(l.apply(&up).unwrap().values()[0], 6.0);
        let down = Gamble::with_tail(vec![3.0, 0.0, 0.0, 0.0], 0.0).unwrap();
        assert_eq!(l.apply(&down).unwrap().values()[0], -3.0);
        let c = Gamble::with_tail(vec![2.0; 4], 2.0).unwrap();
        assert!(l.apply(&c).unwrap().values().iter().all(|v| *v == 0.0));
        assert_eq!(l.rate_bound(), 2.0);
    }

    #[test]
    fn generator_needs_integer_space() {
        let e = poisson_generator(
            RateInterval::new(1.0, 2.0).unwrap(),
            StateSpace::indexed(3).unwrap(),
        );
        assert_eq!(e.unwrap_err(), Error::WrongSpaceKind);
    }

    #[test]
    fn invalid_intervals() {
        assert!(RateInterval::new(2.0, 1.0).is_err());
        assert!(RateInterval::new(-0.5, 1.0).is_err());
        assert!(RateInterval::new(0.0, 0.0).is_ok());
    }

    #[test]
    fn pmf_values() {
        let p = poisson_pmf(1.0, 10);
        assert!((p.masses[0] - 1.0 / exp_series(1.0)).abs() < 1e-15);
        assert!((p.masses[0] - 0.3678794412).abs() < 1e-10);
        let p0 = poisson_pmf(0.0, 5);
        assert_eq!(p0.masses, vec![1.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn pmf_tail_bound_covers_mass() {
        for param in [0.1, 1.0, 4.0, 12.0, 30.0, 80.0] {
            let cap = (20.0 * (1.0 + param)) as usize;
            let p = poisson_pmf(param, cap);
            let sum: f64 = p.masses.iter().sum();
            assert!(sum >= 1.0 - 1e-12, "param {param}: sum {sum}");
            assert!(p.masses.iter().all(|m| *m >= 0.0));
            // Chernoff-type bound on P(X > cap) for cap >= param.
            let k = (cap + 1) as f64;
            let chernoff = (-param + k * (std::f64::consts::E * param / k).ln()).exp();
            assert!(1.0 - sum <= chernoff + 1e-13);
        }
    }

    #[test]
    fn closed_form_examples() {
        let rates = RateInterval::new(1.0, 2.0).unwrap();
        let space = StateSpace::truncated(60).unwrap();
        let id = Gamble::from_fn(&space, |z| z as f64).unwrap();
        let cf = monotone_closed_form(rates, 0.5, 0, &id, Monotone::Increasing, 1e-12).unwrap();
        assert!((cf.value - 1.0).abs() < 1e-12);

        let c = Gamble::constant(&space, 2.5);
        let cf = monotone_closed_form(rates, 0.5, 3, &c, Monotone::Increasing, 1e-12).unwrap();
        assert!((cf.value - 2.5).abs() < 1e-12);

        let step = Gamble::from_fn(&space, |z| f64::from(z >= 1)).unwrap();
        let cf = monotone_closed_form(rates, 0.1, 0, &step, Monotone::Increasing, 1e-12).unwrap();
        assert!((cf.value - (1.0 - 1.0 / exp_series(0.2))).abs() < 1e-12);
        assert!((cf.value - 0.1812692).abs() < 1e-7);

        let down = step.neg();
        let cf = monotone_closed_form(rates, 0.1, 0, &down, Monotone::Decreasing, 1e-12).unwrap();
        assert!((cf.value + (1.0 - 1.0 / exp_series(0.1))).abs() < 1e-12);
    }

    #[test]
    fn closed_form_rejects_mixed() {
        let g = Gamble::with_tail(vec![0.0, 1.0, 0.0], 0.0).unwrap();
        let r = RateInterval::new(1.0, 2.0).unwrap();
        assert!(monotone_closed_form(r, 1.0, 0, &g, Monotone::Increasing, 1e-9).is_err());
        assert!(monotone_closed_form(r, 1.0, 0, &g, Monotone::Decreasing, 1e-9).is_err());
    }
}
