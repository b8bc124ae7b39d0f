// SPDX-License-Identifier: Apache-2.0

//! Fixtures shared by the criterion benchmarks in `benches/`.

use upex_core::{
    poisson_generator, upper_envelope, InitialUpperExpectation, RateInterval, RateMatrix,
    StateSpace, TransitionEngine,
};

/// A birth-death style matrix with rates tied to `seed`, so fixtures are
/// reproducible without a random generator.
pub fn ring_matrix(n: usize, seed: f64) -> RateMatrix {
    let mut rows = vec![vec![0.0; n]; n];
    for x in 0..n {
        let up = 1.0 + ((x as f64 + seed) * 0.37).sin().abs();
        let down = 0.5 + ((x as f64 * 1.3 + seed) * 0.61).cos().abs();
        rows[x][(x + 1) % n] += up;
        rows[x][(x + n - 1) % n] += down;
        rows[x][x] -= up + down;
    }
    RateMatrix::new(rows).expect("valid by construction")
}

pub fn envelope_engine(n: usize, extremes: usize) -> TransitionEngine {
    let mats = (0..extremes).map(|k| ring_matrix(n, k as f64)).collect();
    let op =
        upper_envelope(StateSpace::indexed(n).expect("n > 0"), mats).expect("matching dimensions");
    TransitionEngine::new(op).expect("valid engine")
}

pub fn poisson_engine(levels: usize) -> TransitionEngine {
    let rates = RateInterval::new(1.0, 2.0).expect("ordered rates");
    let op = poisson_generator(rates, StateSpace::truncated(levels).expect("levels >= 2"))
        .expect("integer space");
    TransitionEngine::new(op).expect("valid engine")
}

pub fn start_at_zero(engine: &TransitionEngine) -> InitialUpperExpectation {
    InitialUpperExpectation::degenerate(engine.generator().space(), 0).expect("state 0 exists")
}
