// SPDX-License-Identifier: Apache-2.0

//! Query evaluation and report writing.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use upex_core::axioms::{check_upper_rate_axioms, random_gamble};
use upex_core::fidi::{
    check_consistency, downward_probe, evaluate_lower, evaluate_upper, grid_limit, hitting_family,
    rate_condition_probe, Expr,
};
use upex_core::poisson::Monotone;
use upex_core::semigroup::check_semigroup_law;
use upex_core::{CheckReport, FinitaryGamble, Gamble, TimeGrid};

use crate::fmt::g12;
use crate::model::{Model, ModelFile};
use crate::query::{instantiate, CheckSpec, Direction, FamilySpec, Query, QueryFile};

pub const REPORT_FORMAT: &str = "upex-report/1";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunOptions {
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    /// A value query that completed.
    Ok,
    Pass,
    Fail,
    /// The engine rejected the query.
    Error,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Value {
    Scalar(f64),
    Vector(Vec<f64>),
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Steps {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub engine_calls: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_steps: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub levels: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub edge_flag: Option<bool>,
}

/// Plot data attached to a record.
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub header: [&'static str; 2],
    pub rows: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Record {
    pub index: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub kind: &'static str,
    pub input: Query,
    pub status: Status,
    pub value: Option<Value>,
    pub error_estimate: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub steps: Option<Steps>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub converged: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub csv: Option<String>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub details: Vec<String>,
    #[serde(skip)]
    pub series: Option<Series>,
    #[serde(skip)]
    pub seconds: f64,
}

impl Record {
    fn new(index: usize, query: &Query) -> Self {
        Record {
            index,
            name: query.name().map(str::to_string),
            kind: query.kind(),
            input: query.clone(),
            status: Status::Ok,
            value: None,
            error_estimate: None,
            tolerance: None,
            steps: None,
            converged: None,
            csv: None,
            details: Vec::new(),
            series: None,
            seconds: 0.0,
        }
    }

    fn check(&mut self, report: &CheckReport, error_estimate: f64) {
        self.status = if report.passed {
            Status::Pass
        } else {
            Status::Fail
        };
        self.value = Some(Value::Scalar(report.worst));
        self.tolerance = Some(report.tolerance);
        self.error_estimate = Some(error_estimate);
        self.details.extend(report.details.iter().cloned());
    }

    pub fn failed(&self) -> bool {
        matches!(self.status, Status::Fail | Status::Error)
    }

    fn csv_name(&self) -> String {
        let stem: String = self
            .name
            .as_deref()
            .unwrap_or(self.kind)
            .chars()
            .map(|c| {
                if c.is_ascii_alphanumeric() || c == '-' || c == '_' {
                    c
                } else {
                    '_'
                }
            })
            .collect();
        format!("{:03}_{stem}.csv", self.index)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Report<'a> {
    pub format: &'static str,
    pub model: &'a ModelFile,
    pub seed: u64,
    pub passed: bool,
    pub records: &'a [Record],
}

#[derive(Debug, Clone)]
pub struct Outcome {
    pub records: Vec<Record>,
}

impl Outcome {
    pub fn passed(&self) -> bool {
        self.records.iter().all(|r| !r.failed())
    }

    pub fn exit_code(&self) -> i32 {
        if self.passed() {
            crate::exit::PASS
        } else {
            crate::exit::CHECK_FAILURE
        }
    }
}

type QResult<T> = upex_core::Result<T>;

fn gamble_on(model: &Model, grid: &[f64], src: &str) -> QResult<FinitaryGamble> {
    FinitaryGamble::from_expr(
        TimeGrid::new(grid.to_vec())?,
        &model.space,
        Expr::parse(src)?,
    )
}

fn state_gamble(model: &Model, src: &str) -> QResult<Gamble> {
    let e = Expr::parse(src)?;
    e.validate(1, model.space.len())?;
    let cells: Vec<f64> = (0..model.space.cells()).map(|c| e.eval(&[c])).collect();
    Ok(Gamble::from_cells(&model.space, &cells))
}

fn default_tol(model: &Model) -> f64 {
    10.0 * model.engine.tolerance()
}

fn evaluate(model: &Model, query: &Query, seed: u64, rec: &mut Record) -> QResult<()> {
    let eps = model.engine.tolerance();
    match query {
        Query::Eval {
            grid,
            gamble,
            lower,
            ..
        } => {
            let f = gamble_on(model, grid, gamble)?;
            let e = if *lower {
                evaluate_lower(&model.initial, &model.engine, &f)?
            } else {
                evaluate_upper(&model.initial, &model.engine, &f)?
            };
            rec.value = Some(Value::Scalar(e.value));
            rec.error_estimate = Some(e.stats.error_estimate);
            rec.steps = Some(Steps {
                engine_calls: Some(e.stats.engine_calls),
                n_steps: Some(e.stats.max_steps),
                ..Steps::default()
            });
        }
        Query::Transition {
            t, gamble, lower, ..
        } => {
            let f = state_gamble(model, gamble)?;
            let (v, report) = if *lower {
                let (v, r) = model.engine.exponential_apply(*t, &f.neg())?;
                (v.neg(), r)
            } else {
                model.engine.exponential_apply(*t, &f)?
            };
            let cells: Vec<f64> = (0..model.space.cells())
                .map(|c| v.cell(&model.space, c))
                .collect();
            rec.value = Some(Value::Vector(cells));
            rec.error_estimate = Some(report.estimated_error);
            rec.steps = Some(Steps {
                n_steps: Some(report.n_steps),
                levels: Some(report.levels),
                edge_flag: Some(report.edge_flag),
                ..Steps::default()
            });
        }
        Query::Check { check, tol, .. } => {
            let tol = tol.unwrap_or_else(|| default_tol(model));
            match check {
                CheckSpec::Axioms { samples } => {
                    let r = check_upper_rate_axioms(model.generator(), *samples, seed);
                    let worst = r
                        .worst_constant
                        .max(r.worst_subadditivity)
                        .max(r.worst_homogeneity)
                        .max(r.worst_pmp);
                    rec.status = if r.passed() {
                        Status::Pass
                    } else {
                        Status::Fail
                    };
                    rec.value = Some(Value::Scalar(worst));
                    rec.error_estimate = Some(0.0);
                    rec.details = r.failures;
                }
                CheckSpec::Semigroup {
                    s,
                    t,
                    gambles,
                    random,
                } => {
                    let mut fs = gambles
                        .iter()
                        .map(|g| state_gamble(model, g))
                        .collect::<QResult<Vec<_>>>()?;
                    let mut rng = ChaCha8Rng::seed_from_u64(seed);
                    fs.extend((0..*random).map(|_| random_gamble(&model.space, &mut rng, 1.0)));
                    let r = check_semigroup_law(&model.engine, *s, *t, &fs, tol)?;
                    rec.check(&r, eps);
                }
                CheckSpec::Consistency { u, v, gamble } => {
                    let f = gamble_on(model, u, gamble)?;
                    let v = TimeGrid::new(v.clone())?;
                    let r =
                        check_consistency(&model.initial, &model.engine, f.grid(), &v, &f, tol)?;
                    rec.check(&r, eps);
                }
                CheckSpec::RateCondition { t, deltas } => {
                    let p = rate_condition_probe(&model.initial, &model.engine, *t, deltas, tol)?;
                    rec.check(&p.report, eps);
                    rec.value = Some(Value::Vector(p.ratios.clone()));
                    rec.series = Some(Series {
                        header: ["delta", "ratio"],
                        rows: p
                            .deltas
                            .iter()
                            .copied()
                            .zip(p.ratios.iter().copied())
                            .collect(),
                    });
                }
                CheckSpec::Downward {
                    grid,
                    gamble,
                    terms,
                } => {
                    let f = gamble_on(model, grid, gamble)?;
                    let seq: Vec<FinitaryGamble> = (1..=*terms)
                        .map(|n| f.affine(1.0, 1.0 / n as f64))
                        .collect();
                    let tol = tol.max(1.0 / *terms as f64 + default_tol(model));
                    let p = downward_probe(&model.initial, &model.engine, &seq, &f, tol, seed)?;
                    rec.check(&p.report, eps);
                    rec.value = Some(Value::Vector(p.values.clone()));
                }
            }
        }
        Query::Converge {
            family,
            levels,
            tol,
            ..
        } => {
            let tol = tol.unwrap_or_else(|| default_tol(model));
            let limit = match family {
                FamilySpec::Hitting { target, horizon } => {
                    let fam = hitting_family(&model.space, *target, *horizon);
                    grid_limit(
                        &model.initial,
                        &model.engine,
                        &fam,
                        *levels,
                        Monotone::Increasing,
                        tol,
                        seed,
                    )?
                }
                FamilySpec::Template {
                    grid,
                    gamble,
                    start,
                    direction,
                } => {
                    let fam = |level: usize| {
                        gamble_on(model, grid, &instantiate(gamble, start + level as i64))
                    };
                    let dir = match direction {
                        Direction::Increasing => Monotone::Increasing,
                        Direction::Decreasing => Monotone::Decreasing,
                    };
                    grid_limit(&model.initial, &model.engine, &fam, *levels, dir, tol, seed)?
                }
            };
            let est = &limit.estimates;
            let last = *est.last().expect("at least one level");
            let change = if est.len() > 1 {
                (last - est[est.len() - 2]).abs()
            } else {
                f64::INFINITY
            };
            rec.status = if limit.monotone {
                Status::Pass
            } else {
                Status::Fail
            };
            if !limit.monotone {
                rec.details.push("estimates are not monotone".into());
            }
            rec.value = Some(Value::Scalar(last));
            rec.error_estimate = Some(change);
            rec.tolerance = Some(tol);
            rec.converged = Some(limit.converged);
            rec.series = Some(Series {
                header: ["level", "estimate"],
                rows: est
                    .iter()
                    .enumerate()
                    .map(|(l, e)| (l as f64, *e))
                    .collect(),
            });
        }
    }
    Ok(())
}

/// Evaluates every query; records come back in input order.
pub fn run_queries(model: &Model, queries: &QueryFile, options: RunOptions) -> Outcome {
    let records = queries
        .queries
        .par_iter()
        .enumerate()
        .map(|(index, query)| {
            let mut rec = Record::new(index, query);
            let start = Instant::now();
            let seed = options.seed.wrapping_add(index as u64);
            if let Err(e) = evaluate(model, query, seed, &mut rec) {
                rec.status = Status::Error;
                rec.details.push(e.to_string());
            }
            if rec.series.is_some() {
                rec.csv = Some(rec.csv_name());
            }
            rec.seconds = start.elapsed().as_secs_f64();
            rec
        })
        .collect();
    Outcome { records }
}

pub fn report_json(model: &Model, outcome: &Outcome, options: RunOptions) -> String {
    let report = Report {
        format: REPORT_FORMAT,
        model: &model.file,
        seed: options.seed,
        passed: outcome.passed(),
        records: &outcome.records,
    };
    let mut s = serde_json::to_string_pretty(&report).expect("reports always serialise");
    s.push('\n');
    s
}

fn csv_text(series: &Series) -> String {
    let mut s = format!("{},{}\n", series.header[0], series.header[1]);
    for (x, y) in &series.rows {
        s.push_str(&format!("{},{}\n", g12(*x), g12(*y)));
    }
    s
}

fn write_file(path: PathBuf, text: &str) -> std::io::Result<()> {
    let mut f = std::fs::File::create(path)?;
    f.write_all(text.as_bytes())
}

/// Writes `report.json`, the CSV files and `timings.json` into `out`.
pub fn write_outputs(
    out: &Path,
    model: &Model,
    outcome: &Outcome,
    options: RunOptions,
) -> std::io::Result<()> {
    std::fs::create_dir_all(out)?;
    write_file(
        out.join("report.json"),
        &report_json(model, outcome, options),
    )?;
    for rec in &outcome.records {
        if let (Some(name), Some(series)) = (&rec.csv, &rec.series) {
            write_file(out.join(name), &csv_text(series))?;
        }
    }
    #[derive(Serialize)]
    struct Timing<'a> {
        index: usize,
        name: Option<&'a str>,
        seconds: f64,
    }
    let timings: Vec<Timing> = outcome
        .records
        .iter()
        .map(|r| Timing {
            index: r.index,
            name: r.name.as_deref(),
            seconds: r.seconds,
        })
        .collect();
    write_file(
        out.join("timings.json"),
        &serde_json::to_string_pretty(&timings).expect("serialisable"),
    )
}

/// Parses both files, evaluates and writes outputs. Returns the exit code.
pub fn run(
    model_path: &Path,
    query_path: &Path,
    out: &Path,
    seed: u64,
    tol: Option<f64>,
) -> Result<i32, crate::InputError> {
    let mut model = crate::model::parse_model(model_path)?;
    if let Some(tol) = tol {
        model = model.with_tolerance(tol)?;
    }
    let queries = crate::query::parse_queries(query_path, &model.space)?;
    let options = RunOptions { seed };
    let outcome = run_queries(&model, &queries, options);
    write_outputs(out, &model, &outcome, options).map_err(|source| crate::InputError::Io {
        path: out.display().to_string(),
        source,
    })?;
    Ok(outcome.exit_code())
}
