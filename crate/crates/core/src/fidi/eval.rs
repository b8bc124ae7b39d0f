// SPDX-License-Identifier: Apache-2.0

//! Backward recursion: the last time point of a finitary gamble is removed by
//! applying `T_{t - s}` to each final section and reading the result at the
//! previous coordinate. Repeating down to time 0 and applying the initial
//! model gives the upper expectation of the gamble.

use std::collections::HashMap;

use super::expr::Expr;
use super::gamble::{advance, table_size, Automaton, FinitaryGamble, Repr, TABLE_CAP};
use super::grid::TimeGrid;
use super::initial::InitialUpperExpectation;
use crate::error::{Error, Result};
use crate::semigroup::TransitionEngine;
use crate::space::{Gamble, StateSpace};

/// Bookkeeping for one or more reductions.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ReductionStats {
    pub engine_calls: usize,
    pub max_steps: u64,
    /// Sum over stages of the largest per-call error estimate. Later stages
    /// are contractions, so stage errors add up.
    pub error_estimate: f64,
}

impl ReductionStats {
    fn absorb(&mut self, other: ReductionStats) {
        self.engine_calls += other.engine_calls;
        self.max_steps = self.max_steps.max(other.max_steps);
        self.error_estimate += other.error_estimate;
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Evaluation {
    pub value: f64,
    pub stats: ReductionStats,
}

/// Applies the engine to sections, memoised on the exact section values.
struct SectionSolver<'a> {
    engine: &'a TransitionEngine,
    space: &'a StateSpace,
    dt: f64,
    cache: HashMap<Vec<u64>, Gamble>,
    stats: ReductionStats,
}

impl<'a> SectionSolver<'a> {
    fn new(engine: &'a TransitionEngine, dt: f64) -> Self {
        SectionSolver {
            engine,
            space: engine.generator().space(),
            dt,
            cache: HashMap::new(),
            stats: ReductionStats::default(),
        }
    }

    /// `[T_dt section](at)`, with `section` given cell-wise.
    fn value(&mut self, section: &[f64], at: usize) -> Result<f64> {
        if section.iter().all(|v| *v == section[0]) {
            return Ok(section[0]);
        }
        let key: Vec<u64> = section.iter().map(|v| v.to_bits()).collect();
        if !self.cache.contains_key(&key) {
            let g = Gamble::from_cells(self.space, section);
            let (out, report) = self.engine.exponential_apply(self.dt, &g)?;
            self.stats.engine_calls += 1;
            self.stats.max_steps = self.stats.max_steps.max(report.n_steps);
            self.stats.error_estimate = self.stats.error_estimate.max(report.estimated_error);
            self.cache.insert(key.clone(), out);
        }
        Ok(self.cache[&key].cell(self.space, at))
    }
}

fn check_engine_space(engine: &TransitionEngine, f: &FinitaryGamble) -> Result<()> {
    let space = engine.generator().space();
    if space.cells() != f.cells {
        return Err(Error::DimensionMismatch {
            expected: space.cells(),
            actual: f.cells,
        });
    }
    Ok(())
}

/// Removes the last point of `grid` from `f`. `grid` must be `f`'s grid and
/// have at least two points.
pub fn backward_reduce(
    engine: &TransitionEngine,
    grid: &TimeGrid,
    f: &FinitaryGamble,
) -> Result<(FinitaryGamble, ReductionStats)> {
    if *grid != f.grid {
        return Err(Error::GridMismatch(
            "gamble is defined on a different grid".into(),
        ));
    }
    if grid.len() < 2 {
        return Err(Error::GridMismatch(
            "backward reduction needs at least two time points".into(),
        ));
    }
    check_engine_space(engine, f)?;
    let m = grid.len();
    let dt = grid.points()[m - 1] - grid.points()[m - 2];
    let cells = f.cells;
    let prefix_grid = grid.without_last();
    let mut solver = SectionSolver::new(engine, dt);

    let repr = match &f.repr {
        Repr::Table(data) => {
            let mut out = Vec::with_capacity(data.len() / cells);
            for (p, section) in data.chunks(cells).enumerate() {
                out.push(solver.value(section, p % cells)?);
            }
            Repr::Table(out)
        }
        Repr::Expr(expr) => Repr::Table(reduce_expr(expr, m, cells, &mut solver)?),
        Repr::Automaton(a) => Repr::Automaton(reduce_automaton(a, cells, &mut solver)?),
    };
    let stats = solver.stats;
    Ok((
        FinitaryGamble {
            grid: prefix_grid,
            cells,
            retained: f.retained,
            repr,
        },
        stats,
    ))
}

fn reduce_expr(
    expr: &Expr,
    m: usize,
    cells: usize,
    solver: &mut SectionSolver<'_>,
) -> Result<Vec<f64>> {
    let size = table_size(cells, m - 1);
    if size > TABLE_CAP {
        return Err(Error::TableTooLarge(size));
    }
    let mut out = Vec::with_capacity(size as usize);
    let mut tuple = vec![0usize; m];
    let mut section = vec![0.0; cells];
    loop {
        for (y, s) in section.iter_mut().enumerate() {
            tuple[m - 1] = y;
            *s = expr.eval(&tuple);
        }
        out.push(solver.value(&section, tuple[m - 2])?);
        if !advance(&mut tuple[..m - 1], cells) {
            break;
        }
    }
    Ok(out)
}

fn reduce_automaton(
    a: &Automaton,
    cells: usize,
    solver: &mut SectionSolver<'_>,
) -> Result<Automaton> {
    let last_step = a.steps.last().expect("at least two grid points");
    let mut terminal = vec![0.0; a.n_acc * cells];
    let mut section = vec![0.0; cells];
    for acc in 0..a.n_acc {
        for x in 0..cells {
            let next = last_step[acc * cells + x];
            section.copy_from_slice(&a.terminal[next * cells..(next + 1) * cells]);
            terminal[acc * cells + x] = solver.value(&section, x)?;
        }
    }
    Ok(Automaton {
        n_acc: a.n_acc,
        init: a.init,
        steps: a.steps[..a.steps.len() - 1].to_vec(),
        terminal,
    })
}

/// Upper expectation of a finitary gamble under the initial model and the
/// engine's semigroup. Grids not starting at 0 get an ignored coordinate at
/// time 0.
pub fn evaluate_upper(
    initial: &InitialUpperExpectation,
    engine: &TransitionEngine,
    f: &FinitaryGamble,
) -> Result<Evaluation> {
    check_engine_space(engine, f)?;
    let space = engine.generator().space();
    initial.check_space(space)?;
    let mut g = if f.grid.first() == 0.0 {
        f.clone()
    } else {
        f.lift(&f.grid.with_zero())?
    };
    let mut stats = ReductionStats::default();
    while g.grid.len() > 1 {
        let grid = g.grid.clone();
        let (next, s) = backward_reduce(engine, &grid, &g)?;
        stats.absorb(s);
        g = next;
    }
    let cells: Vec<f64> = (0..g.cells).map(|x| g.eval(&[x])).collect();
    let g0 = Gamble::from_cells(space, &cells);
    Ok(Evaluation {
        value: initial.upper(&g0),
        stats,
    })
}

/// Conjugate lower expectation `-E(-f)`.
pub fn evaluate_lower(
    initial: &InitialUpperExpectation,
    engine: &TransitionEngine,
    f: &FinitaryGamble,
) -> Result<Evaluation> {
    let e = evaluate_upper(initial, engine, &f.neg())?;
    Ok(Evaluation {
        value: -e.value,
        ..e
    })
}

/// The jump gamble `1{X(t1) != X(t2)}`.
pub fn jump_gamble(space: &StateSpace, t1: f64, t2: f64) -> Result<FinitaryGamble> {
    if t1 == t2 {
        return Err(Error::EqualTimes);
    }
    let grid = TimeGrid::new(vec![t1.min(t2), t1.max(t2)])?;
    FinitaryGamble::from_expr(grid, space, Expr::jump(0, 1))
}
