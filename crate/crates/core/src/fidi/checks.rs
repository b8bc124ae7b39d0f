// SPDX-License-Identifier: Apache-2.0

//! Consistency, rate-condition and monotone-limit probes on top of the
//! backward recursion.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::eval::{evaluate_upper, jump_gamble};
use super::gamble::FinitaryGamble;
use super::grid::TimeGrid;
use super::initial::InitialUpperExpectation;
use crate::error::{Error, Result};
use crate::poisson::Monotone;
use crate::report::CheckReport;
use crate::semigroup::TransitionEngine;

/// Slack allowed when checking that a monotone family yields monotone
/// estimates.
pub const ESTIMATE_MONOTONE_TOL: f64 = 1e-10;
const MONOTONE_SAMPLES: usize = 512;

/// `E_U(f) = E_V(f o pi)` for `U` inside `V`.
pub fn check_consistency(
    initial: &InitialUpperExpectation,
    engine: &TransitionEngine,
    u: &TimeGrid,
    v: &TimeGrid,
    f: &FinitaryGamble,
    tol: f64,
) -> Result<CheckReport> {
    if f.grid() != u {
        return Err(Error::GridMismatch("gamble does not live on U".into()));
    }
    if !u.is_subset_of(v) {
        return Err(Error::GridMismatch("U is not contained in V".into()));
    }
    let on_u = evaluate_upper(initial, engine, f)?.value;
    let on_v = evaluate_upper(initial, engine, &f.lift(v)?)?.value;
    let mut report = CheckReport::new("consistency", tol);
    report.observe((on_u - on_v).abs(), || {
        format!("E_U = {on_u}, E_V = {on_v}")
    });
    Ok(report)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RateProbe {
    pub deltas: Vec<f64>,
    /// `E_{t, t + delta}(d) / delta` per delta.
    pub ratios: Vec<f64>,
    pub bound: f64,
    pub report: CheckReport,
}

/// Jump-gamble ratios over a decreasing sequence of gaps, checked against
/// the generator's rate bound.
pub fn rate_condition_probe(
    initial: &InitialUpperExpectation,
    engine: &TransitionEngine,
    t: f64,
    deltas: &[f64],
    tol: f64,
) -> Result<RateProbe> {
    if deltas.is_empty() || deltas.iter().any(|d| !(*d > 0.0)) {
        return Err(Error::InvalidGrid("gaps must be positive".into()));
    }
    if deltas.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidGrid(
            "gaps must be strictly decreasing".into(),
        ));
    }
    let space = engine.generator().space();
    let bound = engine.rate_bound();
    let mut report = CheckReport::new("rate-condition", tol);
    let mut ratios = Vec::with_capacity(deltas.len());
    for &d in deltas {
        let g = jump_gamble(space, t, t + d)?;
        let ratio = evaluate_upper(initial, engine, &g)?.value / d;
        report.observe(ratio - bound, || {
            format!("delta {d}: ratio {ratio} above bound {bound}")
        });
        ratios.push(ratio);
    }
    Ok(RateProbe {
        deltas: deltas.to_vec(),
        ratios,
        bound,
        report,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridLimit {
    pub estimates: Vec<f64>,
    pub converged: bool,
    /// First level whose estimate moved less than the tolerance.
    pub converged_at: Option<usize>,
    /// Whether the estimates moved in the family's direction throughout.
    pub monotone: bool,
}

fn sample_tuples(len: usize, cells: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<usize>> {
    let mut out: Vec<Vec<usize>> = (0..cells.min(8)).map(|x| vec![x; len]).collect();
    for _ in 0..MONOTONE_SAMPLES {
        out.push((0..len).map(|_| rng.random_range(0..cells)).collect());
    }
    out
}

/// Checks `lo <= hi` pointwise on sampled paths of the union grid.
fn dominated(
    lo: &FinitaryGamble,
    hi: &FinitaryGamble,
    rng: &mut ChaCha8Rng,
) -> Result<Option<Vec<usize>>> {
    let grid = lo.grid().union(hi.grid());
    let a = lo.lift(&grid)?;
    let b = hi.lift(&grid)?;
    for tuple in sample_tuples(grid.len(), a.cells(), rng) {
        if a.eval(&tuple) > b.eval(&tuple) {
            return Ok(Some(tuple));
        }
    }
    Ok(None)
}

/// Evaluates a monotone family of finitary gambles at levels `0..=levels`.
/// The family's monotonicity is checked on sampled paths first.
pub fn grid_limit(
    initial: &InitialUpperExpectation,
    engine: &TransitionEngine,
    family: &dyn Fn(usize) -> Result<FinitaryGamble>,
    levels: usize,
    direction: Monotone,
    tol: f64,
    seed: u64,
) -> Result<GridLimit> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut estimates = Vec::with_capacity(levels + 1);
    let mut prev: Option<FinitaryGamble> = None;
    let mut converged_at = None;
    let mut monotone = true;
    for level in 0..=levels {
        let f = family(level)?;
        if let Some(p) = &prev {
            let bad = match direction {
                Monotone::Increasing => dominated(p, &f, &mut rng)?,
                Monotone::Decreasing => dominated(&f, p, &mut rng)?,
            };
            if let Some(tuple) = bad {
                return Err(Error::MonotonicityViolation(format!(
                    "level {level} breaks the order on path {tuple:?}"
                )));
            }
        }
        let e = evaluate_upper(initial, engine, &f)?.value;
        if let Some(last) = estimates.last().copied() {
            let step: f64 = e - last;
            let ok = match direction {
                Monotone::Increasing => step >= -ESTIMATE_MONOTONE_TOL,
                Monotone::Decreasing => step <= ESTIMATE_MONOTONE_TOL,
            };
            monotone &= ok;
            if converged_at.is_none() && step.abs() < tol {
                converged_at = Some(level);
            }
        }
        estimates.push(e);
        prev = Some(f);
    }
    Ok(GridLimit {
        estimates,
        converged: converged_at.is_some(),
        converged_at,
        monotone,
    })
}

/// Hitting query `max_i 1{X_{t_i} = target}` on the dyadic grid of the
/// given level over `[0, horizon]`.
pub fn hitting_family(
    space: &crate::space::StateSpace,
    target: usize,
    horizon: f64,
) -> impl Fn(usize) -> Result<FinitaryGamble> + '_ {
    move |level| FinitaryGamble::hitting(TimeGrid::dyadic(horizon, level as u32)?, space, target)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DownwardProbe {
    pub values: Vec<f64>,
    pub limit_value: f64,
    pub report: CheckReport,
}

/// Numeric witness of downward continuity: for gambles decreasing pointwise
/// to `limit`, the upper expectations should decrease to that of `limit`.
pub fn downward_probe(
    initial: &InitialUpperExpectation,
    engine: &TransitionEngine,
    sequence: &[FinitaryGamble],
    limit: &FinitaryGamble,
    tol: f64,
    seed: u64,
) -> Result<DownwardProbe> {
    if sequence.is_empty() {
        return Err(Error::MonotonicityViolation("empty sequence".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for (k, w) in sequence.windows(2).enumerate() {
        if let Some(tuple) = dominated(&w[1], &w[0], &mut rng)? {
            return Err(Error::MonotonicityViolation(format!(
                "element {} exceeds element {k} on path {tuple:?}",
                k + 1
            )));
        }
    }
    if let Some(tuple) = dominated(limit, sequence.last().expect("nonempty"), &mut rng)? {
        return Err(Error::MonotonicityViolation(format!(
            "limit exceeds the sequence on path {tuple:?}"
        )));
    }
    let values: Vec<f64> = sequence
        .iter()
        .map(|f| evaluate_upper(initial, engine, f).map(|e| e.value))
        .collect::<Result<_>>()?;
    let limit_value = evaluate_upper(initial, engine, limit)?.value;
    let mut report = CheckReport::new("downward", tol);
    for (k, w) in values.windows(2).enumerate() {
        if w[1] > w[0] + ESTIMATE_MONOTONE_TOL {
            report.fail(format!("estimate {} rose from {} to {}", k + 1, w[0], w[1]));
        }
    }
    let last = *values.last().expect("nonempty");
    report.observe((last - limit_value).abs(), || {
        format!("last {last} vs limit {limit_value}")
    });
    Ok(DownwardProbe {
        values,
        limit_value,
        report,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poisson::{poisson_generator, RateInterval};
    use crate::rate::{upper_envelope, RateMatrix};
    use crate::space::StateSpace;

    fn poisson_engine(lo: f64, hi: f64, levels: usize) -> TransitionEngine {
        let op = poisson_generator(
            RateInterval::new(lo, hi).unwrap(),
            StateSpace::truncated(levels).unwrap(),
        )
        .unwrap();
        TransitionEngine::new(op)
            .unwrap()
            .with_tolerance(1e-12)
            .unwrap()
            .with_extrapolation(4)
    }

    #[test]
    fn consistency_identical_grids() {
        let engine = poisson_engine(1.0, 2.0, 12);
        let space = engine.generator().space().clone();
        let e0 = InitialUpperExpectation::degenerate(&space, 0).unwrap();
        let f = jump_gamble(&space, 0.1, 0.4).unwrap();
        let u = f.grid().clone();
        let rep = check_consistency(&e0, &engine, &u, &u, &f, 0.0).unwrap();
        assert!(rep.passed, "{rep}");
        let not_sup = TimeGrid::new(vec![0.1, 0.5]).unwrap();
        assert!(check_consistency(&e0, &engine, &u, &not_sup, &f, 1e-9).is_err());
    }

    #[test]
    fn rate_probe_precise_poisson() {
        let engine = poisson_engine(1.5, 1.5, 20);
        let space = engine.generator().space().clone();
        let e0 = InitialUpperExpectation::degenerate(&space, 0).unwrap();
        let deltas = [0.5, 0.25, 0.125];
        let probe = rate_condition_probe(&e0, &engine, 0.3, &deltas, 1e-9).unwrap();
        assert!(probe.report.passed);
        for (d, r) in deltas.iter().zip(&probe.ratios) {
            assert!((r - (1.0 - (-1.5 * d).exp()) / d).abs() < 1e-10);
        }
        assert!(probe.ratios.windows(2).all(|w| w[1] > w[0]));
        assert!(rate_condition_probe(&e0, &engine, 0.3, &[0.1, 0.2], 1e-9).is_err());
    }

    #[test]
    fn constant_family_converges_immediately() {
        let engine = poisson_engine(1.0, 2.0, 10);
        let space = engine.generator().space().clone();
        let e0 = InitialUpperExpectation::degenerate(&space, 0).unwrap();
        let fam =
            |_: usize| FinitaryGamble::constant(TimeGrid::new(vec![1.0]).unwrap(), &space, 0.5);
        let gl = grid_limit(&e0, &engine, &fam, 3, Monotone::Increasing, 1e-9, 0).unwrap();
        assert_eq!(gl.estimates, vec![0.5; 4]);
        assert_eq!(gl.converged_at, Some(1));
        assert!(gl.monotone);
    }

    #[test]
    fn non_monotone_family_rejected() {
        let engine = poisson_engine(1.0, 2.0, 10);
        let space = engine.generator().space().clone();
        let e0 = InitialUpperExpectation::degenerate(&space, 0).unwrap();
        let fam = |level: usize| {
            let c = if level.is_multiple_of(2) { 0.0 } else { 1.0 };
            FinitaryGamble::constant(TimeGrid::new(vec![1.0]).unwrap(), &space, c)
        };
        let e = grid_limit(&e0, &engine, &fam, 3, Monotone::Increasing, 1e-9, 0);
        assert!(matches!(e, Err(Error::MonotonicityViolation(_))));
    }

    #[test]
    fn hitting_levels_increase() {
        let q = RateMatrix::two_state(1.0, 2.0).unwrap();
        let space = StateSpace::indexed(2).unwrap();
        let engine = TransitionEngine::new(upper_envelope(space.clone(), vec![q]).unwrap())
            .unwrap()
            .with_tolerance(1e-12)
            .unwrap()
            .with_extrapolation(4);
        let e0 = InitialUpperExpectation::degenerate(&space, 0).unwrap();
        let fam = hitting_family(&space, 1, 0.7);
        let gl = grid_limit(&e0, &engine, &fam, 5, Monotone::Increasing, 1e-9, 1).unwrap();
        assert!(gl.monotone);
        // level 0 grid {0, 0.7}: P(X_0.7 = 1)
        let p01 = (1.0 - (-2.1f64).exp()) / 3.0;
        assert!((gl.estimates[0] - p01).abs() < 1e-11);
        assert!(gl.estimates[5] < 1.0 - (-0.7f64).exp());
    }

    #[test]
    fn downward_shifted_sequence() {
        let engine = poisson_engine(1.0, 2.0, 15);
        let space = engine.generator().space().clone();
        let e0 = InitialUpperExpectation::degenerate(&space, 0).unwrap();
        let base = jump_gamble(&space, 0.0, 0.5).unwrap();
        let seq: Vec<FinitaryGamble> = (1..=8).map(|n| base.affine(1.0, 1.0 / n as f64)).collect();
        let probe = downward_probe(&e0, &engine, &seq, &base, 0.13, 0).unwrap();
        assert!(probe.report.passed, "{}", probe.report);
        for (n, v) in (1..=8).zip(&probe.values) {
            assert!((v - probe.limit_value - 1.0 / n as f64).abs() < 1e-12);
        }
        let rising: Vec<FinitaryGamble> = seq.into_iter().rev().collect();
        assert!(downward_probe(&e0, &engine, &rising, &base, 1.0, 0).is_err());
    }
}
