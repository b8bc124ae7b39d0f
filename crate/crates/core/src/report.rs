// SPDX-License-Identifier: Apache-2.0

use std::fmt;

/// Outcome of a numerical check: pass/fail with the worst observed deviation
/// against the tolerance it was held to.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckReport {
    pub name: String,
    pub passed: bool,
    pub worst: f64,
    pub tolerance: f64,
    pub details: Vec<String>,
}

impl CheckReport {
    pub fn new(name: impl Into<String>, tolerance: f64) -> Self {
        CheckReport {
            name: name.into(),
            passed: true,
            worst: 0.0,
            tolerance,
            details: Vec::new(),
        }
    }

    /// Records a deviation; it fails the check when it exceeds the tolerance.
    pub fn observe(&mut self, deviation: f64, context: impl FnOnce() -> String) {
        if deviation > self.worst || deviation.is_nan() {
            self.worst = deviation;
        }
        if !(deviation <= self.tolerance) {
            self.passed = false;
            if self.details.len() < 16 {
                self.details
                    .push(format!("{}: deviation {deviation:e}", context()));
            }
        }
    }

    pub fn fail(&mut self, reason: impl Into<String>) {
        self.passed = false;
        self.details.push(reason.into());
    }

    pub fn note(&mut self, note: impl Into<String>) {
        self.details.push(note.into());
    }

    pub fn merge(&mut self, other: CheckReport) {
        self.passed &= other.passed;
        if other.worst > self.worst {
            self.worst = other.worst;
        }
        self.details.extend(
            other
                .details
                .into_iter()
                .map(|d| format!("{}: {d}", other.name)),
        );
    }
}

impl fmt::Display for CheckReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {}: worst {:e} (tol {:e})",
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.worst,
            self.tolerance
        )
    }
}
