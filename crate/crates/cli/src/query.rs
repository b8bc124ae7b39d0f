// SPDX-License-Identifier: Apache-2.0

//! Query files.

use std::path::Path;

use serde::{Deserialize, Serialize};
use upex_core::fidi::Expr;
use upex_core::{StateSpace, TimeGrid};

use crate::diag::{from_json, Diagnostic, InputError};

pub const QUERY_FORMAT: &str = "upex-queries/1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QueryFile {
    pub format: String,
    pub queries: Vec<Query>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Query {
    /// Upper (or lower) expectation of a path functional on a time grid.
    Eval {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        name: Option<String>,
        grid: Vec<f64>,
        gamble: String,
        #[serde(default)]
        lower: bool,
    },
    /// `T_t f` for a gamble written in `coord(0)`.
    Transition {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        name: Option<String>,
        t: f64,
        gamble: String,
        #[serde(default)]
        lower: bool,
    },
    Check {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        name: Option<String>,
        check: CheckSpec,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        tol: Option<f64>,
    },
    /// Estimates along a monotone family, one per level.
    Converge {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        name: Option<String>,
        family: FamilySpec,
        levels: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        tol: Option<f64>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum CheckSpec {
    Axioms {
        #[serde(default = "default_samples")]
        samples: usize,
    },
    /// `T_{s+t} f = T_s T_t f` on the listed gambles plus `random` random ones.
    Semigroup {
        s: f64,
        t: f64,
        #[serde(default)]
        gambles: Vec<String>,
        #[serde(default)]
        random: usize,
    },
    Consistency {
        u: Vec<f64>,
        v: Vec<f64>,
        gamble: String,
    },
    RateCondition {
        t: f64,
        deltas: Vec<f64>,
    },
    /// `f + 1/n` for `n = 1..=terms` decreasing to `f`.
    Downward {
        grid: Vec<f64>,
        gamble: String,
        terms: usize,
    },
}

fn default_samples() -> usize {
    100
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Increasing,
    Decreasing,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FamilySpec {
    /// `max_i 1{X(t_i) = target}` over the dyadic grid of each level on
    /// `[0, horizon]`.
    Hitting { target: usize, horizon: f64 },
    /// An expression with `{n}` placeholders, `n = start + level`.
    Template {
        grid: Vec<f64>,
        gamble: String,
        #[serde(default)]
        start: i64,
        direction: Direction,
    },
}

impl Query {
    pub fn name(&self) -> Option<&str> {
        match self {
            Query::Eval { name, .. }
            | Query::Transition { name, .. }
            | Query::Check { name, .. }
            | Query::Converge { name, .. } => name.as_deref(),
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Query::Eval { .. } => "eval",
            Query::Transition { .. } => "transition",
            Query::Check { .. } => "check",
            Query::Converge { .. } => "converge",
        }
    }
}

pub fn instantiate(template: &str, n: i64) -> String {
    template.replace("{n}", &n.to_string())
}

fn grid(path: &str, points: &[f64]) -> Result<TimeGrid, Diagnostic> {
    TimeGrid::new(points.to_vec()).map_err(|e| Diagnostic::at(path, e.to_string()))
}

fn expr(path: &str, src: &str, grid_len: usize, space: &StateSpace) -> Result<Expr, Diagnostic> {
    let e = Expr::parse(src).map_err(|e| Diagnostic::at(path, e.to_string()))?;
    e.validate(grid_len, space.len())
        .map_err(|e| Diagnostic::at(path, e.to_string()))?;
    Ok(e)
}

/// Checks grids and expressions against the state space without evaluating.
pub fn validate(file: &QueryFile, space: &StateSpace) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    if file.format != QUERY_FORMAT {
        out.push(Diagnostic::at(
            "format",
            format!("expected \"{QUERY_FORMAT}\", found \"{}\"", file.format),
        ));
    }
    for (i, q) in file.queries.iter().enumerate() {
        let p = |key: &str| format!("queries[{i}].{key}");
        let mut check = |r: Result<(), Diagnostic>| {
            if let Err(d) = r {
                out.push(d);
            }
        };
        match q {
            Query::Eval {
                grid: g, gamble, ..
            } => check(
                grid(&p("grid"), g)
                    .and_then(|g| expr(&p("gamble"), gamble, g.len(), space).map(drop)),
            ),
            Query::Transition { t, gamble, .. } => {
                if !(*t >= 0.0) || !t.is_finite() {
                    check(Err(Diagnostic::at(
                        p("t"),
                        "time must be finite and non-negative",
                    )));
                }
                check(expr(&p("gamble"), gamble, 1, space).map(drop));
            }
            Query::Check { check: c, tol, .. } => {
                if let Some(tol) = tol {
                    if !(*tol >= 0.0) {
                        check(Err(Diagnostic::at(
                            p("tol"),
                            "tolerance must be non-negative",
                        )));
                    }
                }
                match c {
                    CheckSpec::Axioms { .. } => {}
                    CheckSpec::Semigroup { s, t, gambles, .. } => {
                        if !(*s >= 0.0 && *t >= 0.0) {
                            check(Err(Diagnostic::at(
                                p("check"),
                                "s and t must be non-negative",
                            )));
                        }
                        for (k, g) in gambles.iter().enumerate() {
                            check(expr(&p(&format!("check.gambles[{k}]")), g, 1, space).map(drop));
                        }
                    }
                    CheckSpec::Consistency { u, v, gamble } => {
                        check(grid(&p("check.v"), v).map(drop));
                        check(grid(&p("check.u"), u).and_then(|g| {
                            expr(&p("check.gamble"), gamble, g.len(), space).map(drop)
                        }));
                    }
                    CheckSpec::RateCondition { t, deltas } => {
                        if !(*t >= 0.0) {
                            check(Err(Diagnostic::at(
                                p("check.t"),
                                "time must be non-negative",
                            )));
                        }
                        if deltas.is_empty() || deltas.iter().any(|d| !(*d > 0.0)) {
                            check(Err(Diagnostic::at(
                                p("check.deltas"),
                                "gaps must be positive",
                            )));
                        }
                    }
                    CheckSpec::Downward {
                        grid: g,
                        gamble,
                        terms,
                    } => {
                        if *terms == 0 {
                            check(Err(Diagnostic::at(
                                p("check.terms"),
                                "need at least one term",
                            )));
                        }
                        check(grid(&p("check.grid"), g).and_then(|g| {
                            expr(&p("check.gamble"), gamble, g.len(), space).map(drop)
                        }));
                    }
                }
            }
            Query::Converge { family, .. } => match family {
                FamilySpec::Hitting { target, horizon } => {
                    if *target >= space.len() {
                        check(Err(Diagnostic::at(
                            p("family.target"),
                            "target is not a retained state",
                        )));
                    }
                    if !(*horizon > 0.0) || !horizon.is_finite() {
                        check(Err(Diagnostic::at(
                            p("family.horizon"),
                            "horizon must be positive",
                        )));
                    }
                }
                FamilySpec::Template {
                    grid: g,
                    gamble,
                    start,
                    ..
                } => check(grid(&p("family.grid"), g).and_then(|g| {
                    expr(
                        &p("family.gamble"),
                        &instantiate(gamble, *start),
                        g.len(),
                        space,
                    )
                    .map(drop)
                })),
            },
        }
    }
    out
}

pub fn parse_queries_str(text: &str, space: &StateSpace) -> Result<QueryFile, InputError> {
    let file: QueryFile = from_json(text, "queries")?;
    let diagnostics = validate(&file, space);
    if diagnostics.is_empty() {
        Ok(file)
    } else {
        Err(InputError::Invalid {
            file: "queries".into(),
            diagnostics,
        })
    }
}

pub fn parse_queries(path: &Path, space: &StateSpace) -> Result<QueryFile, InputError> {
    let text = std::fs::read_to_string(path).map_err(|source| InputError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_queries_str(&text, space).map_err(|e| match e {
        InputError::Invalid { diagnostics, .. } => InputError::Invalid {
            file: path.display().to_string(),
            diagnostics,
        },
        other => other,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bad_grid_and_expression_reported() {
        let space = StateSpace::indexed(2).unwrap();
        let text = r#"{"format": "upex-queries/1", "queries": [
            {"kind": "eval", "grid": [0.5, 0.1], "gamble": "coord(0)"},
            {"kind": "eval", "grid": [0.1], "gamble": "coord(3)"}
        ]}"#;
        let e = parse_queries_str(text, &space).unwrap_err();
        let paths: Vec<&str> = e.diagnostics().iter().map(|d| d.path.as_str()).collect();
        assert_eq!(paths, ["queries[0].grid", "queries[1].gamble"]);
    }

    #[test]
    fn empty_list_is_valid() {
        let space = StateSpace::indexed(2).unwrap();
        let f =
            parse_queries_str(r#"{"format": "upex-queries/1", "queries": []}"#, &space).unwrap();
        assert!(f.queries.is_empty());
    }

    #[test]
    fn template_instantiation() {
        assert_eq!(
            instantiate("indicator(coord(0) == {n})", 7),
            "indicator(coord(0) == 7)"
        );
    }
}
