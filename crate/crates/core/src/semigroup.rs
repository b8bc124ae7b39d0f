// SPDX-License-Identifier: Apache-2.0

//! The upper transition semigroup `T_t = lim (I + (t/n) Q)^n` generated by an
//! upper rate operator.
//!
//! [`TransitionEngine::exponential_apply`] evaluates Euler products on a
//! doubling schedule `n0, 2 n0, 4 n0, ...` with `n0 = ceil(2 t rate_bound)`,
//! so every factor is an upper transition operator, and stops once
//! successive estimates agree to the engine tolerance. The Euler error is
//! `O(1/n)`; by default the doubling sequence is Richardson-extrapolated
//! (a Romberg table in powers of `1/n`), which keeps the step counts
//! practical at tolerances near `1e-10`.

use crate::error::{Error, Result};
use crate::rate::{RateMatrix, UpperRateOperator};
use crate::report::CheckReport;
use crate::space::Gamble;

const STEP_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepReport {
    /// Euler steps in the finest product that was evaluated.
    pub n_steps: u64,
    /// Sup-norm change between the last two estimates.
    pub estimated_error: f64,
    /// Whether any reported state may be contaminated by the truncation.
    /// Tail values are carried exactly by every generator in this crate, so
    /// this is never raised; it stays in the report for consumers.
    pub edge_flag: bool,
    /// Doubling levels evaluated after the first product.
    pub levels: u32,
}

impl StepReport {
    fn exact(n_steps: u64) -> Self {
        StepReport {
            n_steps,
            estimated_error: 0.0,
            edge_flag: false,
            levels: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct TransitionEngine {
    generator: UpperRateOperator,
    rate: f64,
    step_cap: f64,
    tolerance: f64,
    max_steps: u64,
    extrapolation: usize,
}

impl TransitionEngine {
    pub const DEFAULT_TOLERANCE: f64 = 1e-9;
    pub const DEFAULT_MAX_STEPS: u64 = 1 << 20;
    /// One Richardson column. The Euler error of an envelope generator has a
    /// clean first-order term but no smooth expansion beyond it, because the
    /// maximising matrix switches; further columns amplify that roughness.
    pub const DEFAULT_EXTRAPOLATION: usize = 1;

    pub fn new(generator: UpperRateOperator) -> Result<Self> {
        let rate = generator.rate_bound();
        let step_cap = if rate > 0.0 {
            1.0 / rate
        } else {
            f64::INFINITY
        };
        Ok(TransitionEngine {
            generator,
            rate,
            step_cap,
            tolerance: Self::DEFAULT_TOLERANCE,
            max_steps: Self::DEFAULT_MAX_STEPS,
            extrapolation: Self::DEFAULT_EXTRAPOLATION,
        })
    }

    pub fn with_tolerance(mut self, tolerance: f64) -> Result<Self> {
        if !(tolerance > 0.0) {
            return Err(Error::InvalidEngine(format!(
                "tolerance must be positive, got {tolerance}"
            )));
        }
        self.tolerance = tolerance;
        Ok(self)
    }

    pub fn with_step_cap(mut self, step_cap: f64) -> Result<Self> {
        if !(step_cap > 0.0) || step_cap * self.rate > 1.0 + STEP_SLACK {
            return Err(Error::InvalidEngine(format!(
                "step cap {step_cap} must be positive with step cap * rate bound {} <= 1",
                self.rate
            )));
        }
        self.step_cap = step_cap;
        Ok(self)
    }

    pub fn with_max_steps(mut self, max_steps: u64) -> Result<Self> {
        if max_steps == 0 {
            return Err(Error::InvalidEngine(
                "iteration cap must be positive".into(),
            ));
        }
        self.max_steps = max_steps;
        Ok(self)
    }

    /// Number of Richardson columns; 0 gives the plain Euler doubling scheme.
    pub fn with_extrapolation(mut self, columns: usize) -> Self {
        self.extrapolation = columns;
        self
    }

    pub fn generator(&self) -> &UpperRateOperator {
        &self.generator
    }

    pub fn rate_bound(&self) -> f64 {
        self.rate
    }

    pub fn tolerance(&self) -> f64 {
        self.tolerance
    }

    pub fn step_cap(&self) -> f64 {
        self.step_cap
    }

    pub fn max_steps(&self) -> u64 {
        self.max_steps
    }

    pub fn extrapolation(&self) -> usize {
        self.extrapolation
    }

    /// Smallest admissible step count for horizon `t`.
    pub fn initial_steps(&self, t: f64) -> u64 {
        let by_rate = (2.0 * t * self.rate).ceil();
        let by_cap = if self.step_cap.is_finite() {
            (t / self.step_cap).ceil()
        } else {
            0.0
        };
        (by_rate.max(by_cap) as u64).max(1)
    }

    /// `T_t f` with a step report. Fails if the doubling schedule exceeds the
    /// iteration cap before two successive estimates agree.
    pub fn exponential_apply(&self, t: f64, f: &Gamble) -> Result<(Gamble, StepReport)> {
        self.run(t, f, None)
    }

    /// `T_t f` evaluated on exactly `levels` doublings past the first
    /// product, regardless of convergence. Two gambles pushed through the
    /// same schedule see the same operator.
    pub fn apply_with_levels(
        &self,
        t: f64,
        f: &Gamble,
        levels: u32,
    ) -> Result<(Gamble, StepReport)> {
        self.run(t, f, Some(levels))
    }

    fn run(&self, t: f64, f: &Gamble, fixed_levels: Option<u32>) -> Result<(Gamble, StepReport)> {
        f.check_space(self.generator.space())?;
        if !(t >= 0.0) || !t.is_finite() {
            return Err(Error::InvalidEngine(format!(
                "time must be finite and non-negative, got {t}"
            )));
        }
        if t == 0.0 || self.rate == 0.0 {
            return Ok((f.clone(), StepReport::exact(0)));
        }
        let n0 = self.initial_steps(t);
        let min_levels = if self.extrapolation > 0 { 2 } else { 1 };
        // Romberg table rows; only the previous row is kept.
        let mut prev_row: Vec<Gamble> = Vec::new();
        let mut prev_best: Option<Gamble> = None;
        let mut level = 0u32;
        let mut n = n0;
        let mut last_change = f64::INFINITY;
        loop {
            if n > self.max_steps {
                return Err(Error::NoConvergence {
                    max_steps: self.max_steps,
                    last_change,
                });
            }
            let euler = euler_iterate_unchecked(&self.generator, t, n, f);
            let mut row = Vec::with_capacity(prev_row.len() + 1);
            row.push(euler);
            for j in 1..=self.extrapolation.min(level as usize) {
                let factor = ((1u64 << j) - 1) as f64;
                let a = &row[j - 1];
                let b = &prev_row[j - 1];
                row.push(a.zip_with(b, |x, y| x + (x - y) / factor));
            }
            let best = row.last().expect("row is nonempty").clone();
            if let Some(p) = &prev_best {
                last_change = best.distance(p);
            }
            let done = match fixed_levels {
                Some(l) => level >= l,
                None => level >= min_levels && last_change < self.tolerance,
            };
            if done {
                let report = StepReport {
                    n_steps: n,
                    estimated_error: last_change,
                    edge_flag: false,
                    levels: level,
                };
                return Ok((best, report));
            }
            prev_best = Some(best);
            prev_row = row;
            level += 1;
            n *= 2;
        }
    }

    /// `(1/t) [T_t(1 - 1_x)](x)` for each horizon in `ts`.
    pub fn rate_witness(&self, x: usize, ts: &[f64]) -> Result<Vec<f64>> {
        let g = Gamble::complement_indicator(self.generator.space(), x);
        ts.iter()
            .map(|&t| {
                let (v, _) = self.exponential_apply(t, &g)?;
                Ok(v.values()[x] / t)
            })
            .collect()
    }
}

fn check_step(q: &UpperRateOperator, dt: f64) -> Result<f64> {
    let rate = q.rate_bound();
    if !(dt >= 0.0) || dt * rate > 1.0 + STEP_SLACK {
        return Err(Error::StepTooLarge { step: dt, rate });
    }
    Ok(rate)
}

/// One Euler factor `f + dt * Q f`; an upper transition operator whenever
/// `dt * rate_bound(Q) <= 1`.
pub fn transition_step(q: &UpperRateOperator, dt: f64, f: &Gamble) -> Result<Gamble> {
    f.check_space(q.space())?;
    check_step(q, dt)?;
    if dt == 0.0 {
        return Ok(f.clone());
    }
    let mut out = vec![0.0; f.len()];
    q.apply_into(f, &mut out);
    let values = f
        .values()
        .iter()
        .zip(&out)
        .map(|(v, r)| v + dt * r)
        .collect();
    Ok(Gamble::from_parts(values, f.tail()))
}

/// `(I + (t/n) Q)^n f`.
pub fn euler_iterate(q: &UpperRateOperator, t: f64, n: u64, f: &Gamble) -> Result<Gamble> {
    f.check_space(q.space())?;
    if n == 0 {
        return Err(Error::InvalidEngine(
            "Euler product needs at least one step".into(),
        ));
    }
    check_step(q, t / n as f64)?;
    Ok(euler_iterate_unchecked(q, t, n, f))
}

fn euler_iterate_unchecked(q: &UpperRateOperator, t: f64, n: u64, f: &Gamble) -> Gamble {
    let dt = t / n as f64;
    let mut cur = f.clone();
    let mut rate = vec![0.0; f.len()];
    for _ in 0..n {
        q.apply_into(&cur, &mut rate);
        let tail = cur.tail();
        let values: Vec<f64> = cur
            .values()
            .iter()
            .zip(&rate)
            .map(|(v, r)| v + dt * r)
            .collect();
        cur = Gamble::from_parts(values, tail);
    }
    cur
}

/// Backward dynamic program over the extreme matrices: at each of `n` steps
/// and each state, pick the matrix maximising the one-step value
/// `sum_y (delta_xy + dt q(x, y)) f(y)`.
pub fn selection_dp(extremes: &[RateMatrix], dt: f64, n: usize, f: &Gamble) -> Result<Gamble> {
    let first = extremes.first().ok_or(Error::EmptyEnvelope)?;
    let dim = first.dim();
    if let Some(m) = extremes.iter().find(|m| m.dim() != dim) {
        return Err(Error::DimensionMismatch {
            expected: dim,
            actual: m.dim(),
        });
    }
    if f.len() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            actual: f.len(),
        });
    }
    let rate = extremes
        .iter()
        .flat_map(|m| (0..dim).map(move |x| m.exit_rate(x)))
        .fold(0.0, f64::max);
    if !(dt >= 0.0) || dt * rate > 1.0 + STEP_SLACK {
        return Err(Error::StepTooLarge { step: dt, rate });
    }
    let mut value = f.values().to_vec();
    for _ in 0..n {
        let next: Vec<f64> = (0..dim)
            .map(|x| {
                extremes
                    .iter()
                    .map(|m| {
                        (0..dim)
                            .map(|y| {
                                let kernel = if x == y {
                                    1.0 + dt * m.get(x, y)
                                } else {
                                    dt * m.get(x, y)
                                };
                                kernel * value[y]
                            })
                            .sum::<f64>()
                    })
                    .fold(f64::NEG_INFINITY, f64::max)
            })
            .collect();
        value = next;
    }
    Gamble::with_tail(value, f.tail())
}

/// `||T_{s+t} f - T_s T_t f|| <= tol` for each gamble.
pub fn check_semigroup_law(
    engine: &TransitionEngine,
    s: f64,
    t: f64,
    fs: &[Gamble],
    tol: f64,
) -> Result<CheckReport> {
    let mut report = CheckReport::new("semigroup-law", tol);
    for (i, f) in fs.iter().enumerate() {
        let (joint, _) = engine.exponential_apply(s + t, f)?;
        let (inner, _) = engine.exponential_apply(t, f)?;
        let (outer, _) = engine.exponential_apply(s, &inner)?;
        report.observe(joint.distance(&outer), || {
            format!("gamble {i}, s={s}, t={t}")
        });
    }
    Ok(report)
}

/// `||T_t f - T_t g|| <= ||f - g|| + 1e-12`, with both gambles evaluated on
/// the same step schedule.
pub fn check_contraction(
    engine: &TransitionEngine,
    t: f64,
    f: &Gamble,
    g: &Gamble,
) -> Result<CheckReport> {
    let (_, rf) = engine.exponential_apply(t, f)?;
    let (_, rg) = engine.exponential_apply(t, g)?;
    let levels = rf.levels.max(rg.levels);
    let (tf, _) = engine.apply_with_levels(t, f, levels)?;
    let (tg, _) = engine.apply_with_levels(t, g, levels)?;
    let mut report = CheckReport::new("contraction", 1e-12);
    let excess = tf.distance(&tg) - f.distance(g);
    report.observe(excess, || format!("t={t}"));
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poisson::{poisson_generator, RateInterval};
    use crate::rate::upper_envelope;
    use crate::space::StateSpace;

    fn poisson(levels: usize, lo: f64, hi: f64) -> UpperRateOperator {
        poisson_generator(
            RateInterval::new(lo, hi).unwrap(),
            StateSpace::truncated(levels).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn single_step_examples() {
        let l = poisson(10, 1.0, 2.0);
        let z0 = 3;
        let f = Gamble::indicator(l.space(), z0 + 1);
        let g = transition_step(&l, 0.1, &f).unwrap();
        assert!((g.values()[z0] - 0.2).abs() < 1e-15);
        assert!((g.values()[z0 + 1] - 0.9).abs() < 1e-15);
        assert_eq!(transition_step(&l, 0.0, &f).unwrap(), f);
        assert!(matches!(
            transition_step(&l, 0.6, &f),
            Err(Error::StepTooLarge { .. })
        ));
    }

    #[test]
    fn exponential_of_precise_poisson() {
        let l = poisson(40, 1.0, 1.0);
        let engine = TransitionEngine::new(l)
            .unwrap()
            .with_tolerance(1e-12)
            .unwrap()
            .with_extrapolation(4);
        let f = Gamble::indicator(engine.generator().space(), 0);
        let (v, rep) = engine.exponential_apply(1.0, &f).unwrap();
        assert!(
            (v.values()[0] - (-1.0f64).exp()).abs() < 1e-10,
            "{}",
            v.values()[0]
        );
        assert!(rep.estimated_error < 1e-12);
        assert!(!rep.edge_flag);
    }

    #[test]
    fn exponential_two_state() {
        let q = RateMatrix::two_state(1.0, 2.0).unwrap();
        let op = upper_envelope(StateSpace::indexed(2).unwrap(), vec![q]).unwrap();
        let engine = TransitionEngine::new(op)
            .unwrap()
            .with_tolerance(1e-12)
            .unwrap()
            .with_extrapolation(4);
        let f = Gamble::new(vec![0.0, 1.0]).unwrap();
        let (v, _) = engine.exponential_apply(0.7, &f).unwrap();
        let expected = (1.0 - (-2.1f64).exp()) / 3.0;
        assert!((v.values()[0] - expected).abs() < 1e-11);
        let (same, rep) = engine.exponential_apply(0.0, &f).unwrap();
        assert_eq!(same, f);
        assert_eq!(rep.n_steps, 0);
    }

    #[test]
    fn plain_euler_converges_slowly_but_surely() {
        let q = RateMatrix::two_state(1.0, 2.0).unwrap();
        let op = upper_envelope(StateSpace::indexed(2).unwrap(), vec![q]).unwrap();
        let engine = TransitionEngine::new(op)
            .unwrap()
            .with_tolerance(1e-5)
            .unwrap()
            .with_extrapolation(0);
        let f = Gamble::new(vec![0.0, 1.0]).unwrap();
        let (v, rep) = engine.exponential_apply(0.7, &f).unwrap();
        let expected = (1.0 - (-2.1f64).exp()) / 3.0;
        assert!((v.values()[0] - expected).abs() < 2e-5);
        assert!(rep.n_steps > 1000);
    }

    #[test]
    fn iteration_cap() {
        let q = RateMatrix::two_state(1.0, 2.0).unwrap();
        let op = upper_envelope(StateSpace::indexed(2).unwrap(), vec![q]).unwrap();
        let engine = TransitionEngine::new(op)
            .unwrap()
            .with_tolerance(1e-14)
            .unwrap()
            .with_extrapolation(0)
            .with_max_steps(64)
            .unwrap();
        let f = Gamble::new(vec![0.0, 1.0]).unwrap();
        assert!(matches!(
            engine.exponential_apply(1.0, &f),
            Err(Error::NoConvergence { .. })
        ));
    }

    #[test]
    fn step_cap_validation() {
        let op = poisson(10, 1.0, 2.0);
        let engine = TransitionEngine::new(op).unwrap();
        assert!(engine.clone().with_step_cap(0.5).is_ok());
        assert!(engine.clone().with_step_cap(0.6).is_err());
        assert!(engine.with_tolerance(0.0).is_err());
    }

    #[test]
    fn dp_matches_euler_for_one_step_and_singletons() {
        let q1 = RateMatrix::two_state(1.0, 2.0).unwrap();
        let q2 = RateMatrix::two_state(3.0, 0.5).unwrap();
        let space = StateSpace::indexed(2).unwrap();
        let op = upper_envelope(space, vec![q1.clone(), q2.clone()]).unwrap();
        let f = Gamble::new(vec![0.2, -0.7]).unwrap();
        let dp = selection_dp(&[q1.clone(), q2], 0.05, 1, &f).unwrap();
        let step = transition_step(&op, 0.05, &f).unwrap();
        assert!(dp.distance(&step) < 1e-15);

        let dp = selection_dp(std::slice::from_ref(&q1), 0.05, 6, &f).unwrap();
        let mut v = f.values().to_vec();
        for _ in 0..6 {
            v = (0..2)
                .map(|x| v[x] + 0.05 * (0..2).map(|y| q1.get(x, y) * v[y]).sum::<f64>())
                .collect();
        }
        assert!((dp.values()[0] - v[0]).abs() < 1e-15 && (dp.values()[1] - v[1]).abs() < 1e-15);
        assert!(selection_dp(&[q1], 0.6, 1, &f).is_err());
    }

    #[test]
    fn semigroup_and_contraction_basic() {
        let engine = TransitionEngine::new(poisson(30, 1.0, 2.0)).unwrap();
        let space = engine.generator().space().clone();
        let f = Gamble::from_fn(&space, |z| ((z as f64) * 0.7).sin()).unwrap();
        let rep = check_semigroup_law(&engine, 0.0, 0.3, std::slice::from_ref(&f), 1e-12).unwrap();
        assert!(rep.passed && rep.worst == 0.0, "{rep}");
        let rep = check_contraction(&engine, 0.5, &f, &f).unwrap();
        assert!(rep.passed && rep.worst <= 0.0);
        let shifted = f.map(|v| v + 0.75);
        let (a, _) = engine.apply_with_levels(0.5, &f, 3).unwrap();
        let (b, _) = engine.apply_with_levels(0.5, &shifted, 3).unwrap();
        assert!((a.distance(&b) - 0.75).abs() < 1e-12);
    }
}
