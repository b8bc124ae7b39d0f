// SPDX-License-Identifier: Apache-2.0

use std::fmt;

/// One problem found while reading an input file.
#[derive(Debug, Clone, PartialEq)]
pub struct Diagnostic {
    /// Dotted key path, e.g. `generator.lower` or `queries[2].grid`.
    pub path: String,
    pub line: Option<usize>,
    pub reason: String,
}

impl Diagnostic {
    pub fn at(path: impl Into<String>, reason: impl Into<String>) -> Self {
        Diagnostic {
            path: path.into(),
            line: None,
            reason: reason.into(),
        }
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let path = if self.path.is_empty() {
            "<root>"
        } else {
            &self.path
        };
        match self.line {
            Some(line) => write!(f, "{path} (line {line}): {}", self.reason),
            None => write!(f, "{path}: {}", self.reason),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum InputError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("{file}: {}", .diagnostics.iter().map(|d| d.to_string()).collect::<Vec<_>>().join("; "))]
    Invalid {
        file: String,
        diagnostics: Vec<Diagnostic>,
    },
}

impl InputError {
    pub fn diagnostics(&self) -> &[Diagnostic] {
        match self {
            InputError::Io { .. } => &[],
            InputError::Invalid { diagnostics, .. } => diagnostics,
        }
    }
}

/// Deserialises strict JSON, reporting the failing key path and line.
pub(crate) fn from_json<T: serde::de::DeserializeOwned>(
    text: &str,
    file: &str,
) -> Result<T, InputError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let parsed: Result<T, _> = serde_path_to_error::deserialize(de);
    parsed.map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        let line = inner.line();
        let reason = inner.to_string();
        // serde_json appends " at line L column C"; the line is kept separately
        let reason = match reason.rfind(" at line ") {
            Some(i) => reason[..i].to_string(),
            None => reason,
        };
        let path = if path == "." { String::new() } else { path };
        InputError::Invalid {
            file: file.into(),
            diagnostics: vec![Diagnostic {
                path,
                line: Some(line),
                reason,
            }],
        }
    })
}
