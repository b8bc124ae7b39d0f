// SPDX-License-Identifier: Apache-2.0

//! Model files: state space, generator, initial model and numeric settings.

use std::path::Path;

use serde::{Deserialize, Serialize};
use upex_core::semigroup::TransitionEngine;
use upex_core::{
    poisson_generator, upper_envelope, InitialUpperExpectation, IntervalRows, RateInterval,
    RateMatrix, RateSpec, StateSpace, UpperRateOperator,
};

use crate::diag::{from_json, Diagnostic, InputError};

pub const MODEL_FORMAT: &str = "upex-model/1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    pub format: String,
    pub state_space: SpaceSpec,
    pub generator: GeneratorSpec,
    pub initial: InitialSpec,
    #[serde(default)]
    pub numeric: NumericSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SpaceSpec {
    /// Named states.
    Finite { labels: Vec<String> },
    /// `0, 1, 2, ...`, truncated at `numeric.truncation` retained levels.
    Counting,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum GeneratorSpec {
    Extremes {
        matrices: Vec<Vec<Vec<f64>>>,
    },
    RowIntervals {
        lower: Vec<Vec<f64>>,
        upper: Vec<Vec<f64>>,
    },
    PoissonInterval {
        lower: f64,
        upper: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialSpec {
    Pmfs { pmfs: Vec<Vec<f64>> },
    Degenerate { state: usize },
    Vacuous { states: Vec<usize> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NumericSpec {
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub step_cap: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truncation: Option<usize>,
    #[serde(default = "default_max_steps")]
    pub max_steps: u64,
    #[serde(default = "default_extrapolation")]
    pub extrapolation: usize,
}

fn default_tolerance() -> f64 {
    TransitionEngine::DEFAULT_TOLERANCE
}

fn default_max_steps() -> u64 {
    TransitionEngine::DEFAULT_MAX_STEPS
}

fn default_extrapolation() -> usize {
    TransitionEngine::DEFAULT_EXTRAPOLATION
}

impl Default for NumericSpec {
    fn default() -> Self {
        NumericSpec {
            tolerance: default_tolerance(),
            step_cap: None,
            truncation: None,
            max_steps: default_max_steps(),
            extrapolation: default_extrapolation(),
        }
    }
}

/// A validated model ready for evaluation.
#[derive(Debug, Clone)]
pub struct Model {
    pub file: ModelFile,
    pub space: StateSpace,
    pub engine: TransitionEngine,
    pub initial: InitialUpperExpectation,
}

impl Model {
    pub fn generator(&self) -> &UpperRateOperator {
        self.engine.generator()
    }

    /// Rebuilds the engine with a different tolerance.
    pub fn with_tolerance(mut self, tol: f64) -> Result<Self, InputError> {
        self.file.numeric.tolerance = tol;
        self.engine = self
            .engine
            .with_tolerance(tol)
            .map_err(|e| invalid(vec![Diagnostic::at("--tol", e.to_string())]))?;
        Ok(self)
    }
}

fn invalid(diagnostics: Vec<Diagnostic>) -> InputError {
    InputError::Invalid {
        file: "model".into(),
        diagnostics,
    }
}

pub fn parse_model_str(text: &str) -> Result<Model, InputError> {
    let file: ModelFile = from_json(text, "model")?;
    validate(file)
}

pub fn parse_model(path: &Path) -> Result<Model, InputError> {
    let text = std::fs::read_to_string(path).map_err(|source| InputError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_model_str(&text).map_err(|e| match e {
        InputError::Invalid { diagnostics, .. } => InputError::Invalid {
            file: path.display().to_string(),
            diagnostics,
        },
        other => other,
    })
}

pub fn validate(file: ModelFile) -> Result<Model, InputError> {
    let d =
        |path: &str, e: &dyn std::fmt::Display| invalid(vec![Diagnostic::at(path, e.to_string())]);
    if file.format != MODEL_FORMAT {
        return Err(d(
            "format",
            &format!("expected \"{MODEL_FORMAT}\", found \"{}\"", file.format),
        ));
    }
    let n = &file.numeric;
    let space = match &file.state_space {
        SpaceSpec::Finite { labels } => {
            StateSpace::finite(labels.iter().cloned()).map_err(|e| d("state_space.labels", &e))?
        }
        SpaceSpec::Counting => {
            let levels = n.truncation.ok_or_else(|| {
                d(
                    "numeric.truncation",
                    &"a counting state space needs a truncation level",
                )
            })?;
            StateSpace::truncated(levels).map_err(|e| d("numeric.truncation", &e))?
        }
    };
    let generator = match &file.generator {
        GeneratorSpec::Extremes { matrices } => {
            let mats = matrices
                .iter()
                .enumerate()
                .map(|(i, m)| {
                    RateMatrix::new(m.clone())
                        .map_err(|e| d(&format!("generator.matrices[{i}]"), &e))
                })
                .collect::<Result<Vec<_>, _>>()?;
            upper_envelope(space.clone(), mats).map_err(|e| d("generator.matrices", &e))?
        }
        GeneratorSpec::RowIntervals { lower, upper } => {
            let rows =
                IntervalRows::new(lower.clone(), upper.clone()).map_err(|e| d("generator", &e))?;
            UpperRateOperator::new(space.clone(), RateSpec::RowIntervals(rows))
                .map_err(|e| d("generator", &e))?
        }
        GeneratorSpec::PoissonInterval { lower, upper } => {
            if lower > upper {
                return Err(d(
                    "generator.lower",
                    &format!("lower rate {lower} exceeds upper rate {upper}"),
                ));
            }
            let rates = RateInterval::new(*lower, *upper).map_err(|e| d("generator.lower", &e))?;
            poisson_generator(rates, space.clone()).map_err(|e| d("generator", &e))?
        }
    };
    let mut engine = TransitionEngine::new(generator)
        .map_err(|e| d("generator", &e))?
        .with_tolerance(n.tolerance)
        .map_err(|e| d("numeric.tolerance", &e))?
        .with_max_steps(n.max_steps)
        .map_err(|e| d("numeric.max_steps", &e))?
        .with_extrapolation(n.extrapolation);
    if let Some(cap) = n.step_cap {
        engine = engine
            .with_step_cap(cap)
            .map_err(|e| d("numeric.step_cap", &e))?;
    }
    let initial = match &file.initial {
        InitialSpec::Pmfs { pmfs } => InitialUpperExpectation::envelope(&space, pmfs.clone()),
        InitialSpec::Degenerate { state } => InitialUpperExpectation::degenerate(&space, *state),
        InitialSpec::Vacuous { states } => InitialUpperExpectation::vacuous(&space, states.clone()),
    }
    .map_err(|e| d("initial", &e))?;
    Ok(Model {
        file,
        space,
        engine,
        initial,
    })
}

pub fn to_json(file: &ModelFile) -> String {
    serde_json::to_string_pretty(file).expect("model files always serialise")
}

#[cfg(test)]
mod tests {
    use super::*;

    const TWO_STATE: &str = r#"{
        "format": "upex-model/1",
        "state_space": {"kind": "finite", "labels": ["up", "down"]},
        "generator": {"kind": "extremes", "matrices": [[[-1, 1], [2, -2]]]},
        "initial": {"kind": "degenerate", "state": 0}
    }"#;

    #[test]
    fn round_trip_is_a_fixpoint() {
        let m = parse_model_str(TWO_STATE).unwrap();
        let once = to_json(&m.file);
        let twice = to_json(&parse_model_str(&once).unwrap().file);
        assert_eq!(once, twice);
    }

    #[test]
    fn inverted_poisson_rates_name_the_key() {
        let text = r#"{"format": "upex-model/1", "state_space": {"kind": "counting"},
            "generator": {"kind": "poisson_interval", "lower": 3, "upper": 1},
            "initial": {"kind": "degenerate", "state": 0}, "numeric": {"truncation": 20}}"#;
        let e = parse_model_str(text).unwrap_err();
        assert_eq!(e.diagnostics()[0].path, "generator.lower");
    }

    #[test]
    fn negative_off_diagonal_is_invariant_error() {
        let text = TWO_STATE.replace("[[-1, 1], [2, -2]]", "[[1, -1], [2, -2]]");
        let e = parse_model_str(&text).unwrap_err();
        assert_eq!(e.diagnostics()[0].path, "generator.matrices[0]");
    }

    #[test]
    fn unknown_keys_rejected_with_path() {
        let text = TWO_STATE.replace("\"state\": 0", "\"state\": 0, \"weight\": 1");
        let e = parse_model_str(&text).unwrap_err();
        let diag = &e.diagnostics()[0];
        assert_eq!(diag.path, "initial");
        assert!(diag.reason.contains("weight"), "{diag}");
        assert!(diag.line.is_some());
    }

    #[test]
    fn counting_needs_truncation() {
        let text = r#"{"format": "upex-model/1", "state_space": {"kind": "counting"},
            "generator": {"kind": "poisson_interval", "lower": 1, "upper": 2},
            "initial": {"kind": "degenerate", "state": 0}}"#;
        let e = parse_model_str(text).unwrap_err();
        assert_eq!(e.diagnostics()[0].path, "numeric.truncation");
    }
}
