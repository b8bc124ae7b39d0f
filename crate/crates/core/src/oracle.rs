// SPDX-License-Identifier: Apache-2.0

//! Independent references: a scaled Taylor-series matrix exponential, the
//! two-state closed form, Poisson jump probabilities and a Monte Carlo lower
//! bound obtained by simulating piecewise-constant selection policies.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::fidi::{FinitaryGamble, InitialUpperExpectation};
use crate::rate::RateMatrix;
use crate::space::Gamble;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OracleMethod {
    TaylorSeries,
    ClosedForm,
    MonteCarlo,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleResult<T = Gamble> {
    pub value: T,
    pub error_bound: f64,
    pub method: OracleMethod,
}

/// Remainder target for the series on the scaled matrix.
const SERIES_REMAINDER: f64 = 1e-17;

fn mat_mul(a: &[f64], b: &[f64], n: usize) -> Vec<f64> {
    let mut c = vec![0.0; n * n];
    for i in 0..n {
        for k in 0..n {
            let aik = a[i * n + k];
            if aik == 0.0 {
                continue;
            }
            for j in 0..n {
                c[i * n + j] += aik * b[k * n + j];
            }
        }
    }
    c
}

/// `exp(t Q)` as a dense row-major matrix plus a bound on its sup-norm
/// error. The exponent is halved until `t ||Q|| <= 1`, summed to `K` terms
/// and squared back.
pub fn exponential_matrix(q: &RateMatrix, t: f64) -> Result<(Vec<f64>, f64)> {
    if !(t >= 0.0) || !t.is_finite() {
        return Err(Error::InvalidGrid(format!(
            "time {t} must be a finite nonnegative number"
        )));
    }
    let n = q.dim();
    let norm: f64 = (0..n)
        .map(|x| q.row(x).iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max);
    let mut squarings = 0u32;
    let mut h = t;
    while h * norm > 1.0 {
        h *= 0.5;
        squarings += 1;
    }
    let a = h * norm;
    // remainder of the scaled series: a^{K+1}/(K+1)! e^a
    let mut k = 0usize;
    let mut term = 1.0f64;
    while term * a * a.exp() / (k + 1) as f64 > SERIES_REMAINDER && k < 64 {
        k += 1;
        term *= a / k as f64;
    }
    let remainder = term * a * a.exp() / (k + 1) as f64;

    let hq: Vec<f64> = (0..n * n).map(|i| h * q.get(i / n, i % n)).collect();
    let mut sum = vec![0.0; n * n];
    let mut power = vec![0.0; n * n];
    for i in 0..n {
        sum[i * n + i] = 1.0;
        power[i * n + i] = 1.0;
    }
    for j in 1..=k {
        power = mat_mul(&power, &hq, n);
        let inv = 1.0 / (1..=j).map(|m| m as f64).product::<f64>();
        for (s, p) in sum.iter_mut().zip(&power) {
            *s += p * inv;
        }
    }
    for _ in 0..squarings {
        sum = mat_mul(&sum, &sum, n);
    }
    // each squaring at most doubles the error of a near-stochastic matrix;
    // rounding is charged per product
    let rounding = (k + 2) as f64 * n as f64 * f64::EPSILON;
    let bound = 2f64.powi(squarings as i32) * (remainder + rounding) * 1.01;
    Ok((sum, bound))
}

/// `exp(t Q) f` for a linear rate matrix.
pub fn precise_exponential(q: &RateMatrix, t: f64, f: &Gamble) -> Result<OracleResult> {
    let n = q.dim();
    if f.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: f.len(),
        });
    }
    if t == 0.0 {
        return Ok(OracleResult {
            value: f.clone(),
            error_bound: 0.0,
            method: OracleMethod::TaylorSeries,
        });
    }
    let (m, bound) = exponential_matrix(q, t)?;
    let fv = f.values();
    let out: Vec<f64> = (0..n)
        .map(|x| (0..n).map(|y| m[x * n + y] * fv[y]).sum())
        .collect();
    let norm = fv.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
    Ok(OracleResult {
        value: Gamble::new(out)?,
        error_bound: bound * norm,
        method: OracleMethod::TaylorSeries,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct TwoStateKernel {
    /// `p[x][y] = P(X_t = y | X_0 = x)`.
    pub p: [[f64; 2]; 2],
    pub note: Option<&'static str>,
}

/// Transition probabilities of the chain `[[-a, a], [b, -b]]`.
pub fn two_state_closed_form(a: f64, b: f64, t: f64) -> Result<TwoStateKernel> {
    if !(a >= 0.0 && b >= 0.0 && t >= 0.0) {
        return Err(Error::InvalidRateMatrix(format!(
            "rates ({a}, {b}) and time {t} must be nonnegative"
        )));
    }
    let s = a + b;
    if s == 0.0 {
        return Ok(TwoStateKernel {
            p: [[1.0, 0.0], [0.0, 1.0]],
            note: Some("zero rates: identity"),
        });
    }
    let decay = -(-s * t).exp_m1();
    let p01 = a / s * decay;
    let p10 = b / s * decay;
    Ok(TwoStateKernel {
        p: [[1.0 - p01, p01], [p10, 1.0 - p10]],
        note: None,
    })
}

/// Probability that a Poisson process with rate `lambda` jumps within `delta`.
pub fn poisson_jump_prob(lambda: f64, delta: f64) -> f64 {
    -(-lambda * delta).exp_m1()
}

struct Policy {
    start: usize,
    /// `choice[interval][state]` indexes the extremes.
    choice: Vec<Vec<usize>>,
}

fn start_states(initial: &InitialUpperExpectation, n: usize) -> Vec<Vec<f64>> {
    match initial {
        InitialUpperExpectation::Envelope(pmfs) => pmfs.clone(),
        InitialUpperExpectation::Degenerate(x) => {
            let mut p = vec![0.0; n];
            p[*x] = 1.0;
            vec![p]
        }
        InitialUpperExpectation::Vacuous(states) => states
            .iter()
            .map(|&x| {
                let mut p = vec![0.0; n];
                p[x] = 1.0;
                p
            })
            .collect(),
    }
}

fn sample_index(weights: &[f64], rng: &mut ChaCha8Rng) -> usize {
    let total: f64 = weights.iter().sum();
    let mut u = rng.random::<f64>() * total;
    for (i, w) in weights.iter().enumerate() {
        if *w > 0.0 {
            if u < *w {
                return i;
            }
            u -= w;
        }
    }
    weights.iter().rposition(|w| *w > 0.0).unwrap_or(0)
}

/// Interval boundaries: the grid with 0 prepended when missing.
fn boundaries(f: &FinitaryGamble) -> (Vec<f64>, usize) {
    let pts = f.grid().points();
    if pts[0] == 0.0 {
        (pts.to_vec(), 1)
    } else {
        let mut b = vec![0.0];
        b.extend_from_slice(pts);
        (b, 0)
    }
}

fn simulate(
    extremes: &[RateMatrix],
    pmfs: &[Vec<f64>],
    policy: &Policy,
    f: &FinitaryGamble,
    n_paths: usize,
    rng: &mut ChaCha8Rng,
) -> (f64, f64) {
    let (bounds, skip) = boundaries(f);
    let mut tuple = vec![0usize; f.grid().len()];
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    for _ in 0..n_paths {
        let mut x = sample_index(&pmfs[policy.start], rng);
        if skip == 1 {
            tuple[0] = x;
        }
        for (i, w) in bounds.windows(2).enumerate() {
            let q = &extremes[policy.choice[i][x]];
            let mut now = w[0];
            let mut q_here = q;
            loop {
                let rate = q_here.exit_rate(x);
                if rate <= 0.0 {
                    break;
                }
                let u: f64 = rng.random();
                now += -(1.0 - u).ln() / rate;
                if now >= w[1] {
                    break;
                }
                let row: Vec<f64> = q_here
                    .row(x)
                    .iter()
                    .enumerate()
                    .map(|(y, v)| if y == x { 0.0 } else { *v })
                    .collect();
                x = sample_index(&row, rng);
                q_here = &extremes[policy.choice[i][x]];
            }
            tuple[i + skip] = x;
        }
        let v = f.eval(&tuple);
        sum += v;
        sum_sq += v * v;
    }
    let m = n_paths as f64;
    let mean = sum / m;
    let var = if n_paths > 1 {
        ((sum_sq - m * mean * mean) / (m - 1.0)).max(0.0)
    } else {
        0.0
    };
    (mean, (var / m).sqrt())
}

/// Monte Carlo lower estimate of the upper expectation of `f`: random
/// piecewise-constant policies pick one extreme per grid interval and state,
/// the best one is selected on a first batch and re-estimated on a fresh
/// batch. The error bound is the standard error of the second batch.
pub fn policy_mc_lower(
    extremes: &[RateMatrix],
    initial: &InitialUpperExpectation,
    f: &FinitaryGamble,
    n_policies: usize,
    n_paths: usize,
    seed: u64,
) -> Result<OracleResult<f64>> {
    if extremes.is_empty() {
        return Err(Error::EmptyEnvelope);
    }
    let n = extremes[0].dim();
    if extremes.iter().any(|q| q.dim() != n) {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: extremes.iter().map(|q| q.dim()).max().unwrap_or(0),
        });
    }
    if f.cells() != n {
        return Err(Error::Unsupported(
            "Monte Carlo policies need a finite state space".into(),
        ));
    }
    if n_policies == 0 || n_paths == 0 {
        return Err(Error::Unsupported(
            "need at least one policy and one path".into(),
        ));
    }
    let pmfs = start_states(initial, n);
    if pmfs.iter().any(|p| p.len() != n) {
        return Err(Error::InvalidInitial(
            "initial model does not match the space".into(),
        ));
    }
    let intervals = boundaries(f).0.len() - 1;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let policies: Vec<Policy> = (0..n_policies)
        .map(|_| Policy {
            start: rng.random_range(0..pmfs.len()),
            choice: (0..intervals)
                .map(|_| {
                    (0..n)
                        .map(|_| rng.random_range(0..extremes.len()))
                        .collect()
                })
                .collect(),
        })
        .collect();
    let mut best = 0;
    let mut best_mean = f64::NEG_INFINITY;
    for (i, p) in policies.iter().enumerate() {
        let (mean, _) = simulate(extremes, &pmfs, p, f, n_paths, &mut rng);
        if mean > best_mean {
            best_mean = mean;
            best = i;
        }
    }
    let (value, stderr) = simulate(extremes, &pmfs, &policies[best], f, n_paths, &mut rng);
    Ok(OracleResult {
        value,
        error_bound: stderr,
        method: OracleMethod::MonteCarlo,
    })
}
