// SPDX-License-Identifier: Apache-2.0

//! Finitary gambles: bounded functions of the states visited at the times of
//! a finite grid.
//!
//! Coordinates range over the cells of the state space (retained states plus
//! the lumped tail cell of a truncated space). Three representations are
//! supported:
//!
//! * a dense table over all cell tuples, capped at [`TABLE_CAP`] entries;
//! * an expression, evaluated lazily one section at a time;
//! * a finite automaton that folds the path into an accumulator and pays a
//!   terminal reward `F(acc, x_last)`. Hitting-type queries on fine grids
//!   only stay tractable in this form.

use super::expr::Expr;
use super::grid::TimeGrid;
use crate::error::{Error, Result};
use crate::space::StateSpace;

/// Largest dense table, in entries.
pub const TABLE_CAP: u128 = 10_000_000;

#[derive(Debug, Clone, PartialEq)]
pub struct Automaton {
    pub(crate) n_acc: usize,
    pub(crate) init: usize,
    /// `steps[i][acc * cells + x]`: accumulator after reading coordinate `i`;
    /// one table per grid point except the last.
    pub(crate) steps: Vec<Vec<usize>>,
    /// `terminal[acc * cells + x_last]`.
    pub(crate) terminal: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Repr {
    Table(Vec<f64>),
    Expr(Expr),
    Automaton(Automaton),
}

#[derive(Debug, Clone, PartialEq)]
pub struct FinitaryGamble {
    pub(crate) grid: TimeGrid,
    pub(crate) cells: usize,
    pub(crate) retained: usize,
    pub(crate) repr: Repr,
}

pub(crate) fn table_size(cells: usize, dims: usize) -> u128 {
    (cells as u128)
        .checked_pow(dims as u32)
        .unwrap_or(u128::MAX)
}

impl FinitaryGamble {
    /// Dense table, first coordinate most significant.
    pub fn from_table(grid: TimeGrid, space: &StateSpace, data: Vec<f64>) -> Result<Self> {
        let cells = space.cells();
        let size = table_size(cells, grid.len());
        if size > TABLE_CAP {
            return Err(Error::TableTooLarge(size));
        }
        if data.len() as u128 != size {
            return Err(Error::DimensionMismatch {
                expected: size as usize,
                actual: data.len(),
            });
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidGamble("table has a non-finite entry".into()));
        }
        Ok(FinitaryGamble {
            grid,
            cells,
            retained: space.len(),
            repr: Repr::Table(data),
        })
    }

    /// Table filled from a function of the cell tuple.
    pub fn tabulate(
        grid: TimeGrid,
        space: &StateSpace,
        f: impl Fn(&[usize]) -> f64,
    ) -> Result<Self> {
        let cells = space.cells();
        let size = table_size(cells, grid.len());
        if size > TABLE_CAP {
            return Err(Error::TableTooLarge(size));
        }
        let mut tuple = vec![0usize; grid.len()];
        let mut data = Vec::with_capacity(size as usize);
        loop {
            data.push(f(&tuple));
            if !advance(&mut tuple, cells) {
                break;
            }
        }
        Self::from_table(grid, space, data)
    }

    pub fn from_expr(grid: TimeGrid, space: &StateSpace, expr: Expr) -> Result<Self> {
        expr.validate(grid.len(), space.len())?;
        Ok(FinitaryGamble {
            grid,
            cells: space.cells(),
            retained: space.len(),
            repr: Repr::Expr(expr),
        })
    }

    pub fn from_automaton(
        grid: TimeGrid,
        space: &StateSpace,
        automaton: Automaton,
    ) -> Result<Self> {
        let cells = space.cells();
        let a = &automaton;
        let bad = |m: &str| Err(Error::InvalidGamble(format!("automaton: {m}")));
        if a.n_acc == 0 || a.init >= a.n_acc {
            return bad("initial accumulator out of range");
        }
        if a.steps.len() + 1 != grid.len() {
            return bad("needs one transition table per grid point but the last");
        }
        if a.steps
            .iter()
            .any(|s| s.len() != a.n_acc * cells || s.iter().any(|v| *v >= a.n_acc))
        {
            return bad("malformed transition table");
        }
        if a.terminal.len() != a.n_acc * cells || a.terminal.iter().any(|v| !v.is_finite()) {
            return bad("malformed terminal table");
        }
        Ok(FinitaryGamble {
            grid,
            cells,
            retained: space.len(),
            repr: Repr::Automaton(automaton),
        })
    }

    /// `max_i 1{X_{t_i} = target}` over the grid, as a two-state automaton.
    pub fn hitting(grid: TimeGrid, space: &StateSpace, target: usize) -> Result<Self> {
        if target >= space.len() {
            return Err(Error::InvalidGamble(format!(
                "target {target} is not a retained state"
            )));
        }
        let cells = space.cells();
        let hit = |acc: usize, x: usize| usize::from(acc == 1 || x == target);
        let table: Vec<usize> = (0..2)
            .flat_map(|a| (0..cells).map(move |x| hit(a, x)))
            .collect();
        let automaton = Automaton {
            n_acc: 2,
            init: 0,
            steps: vec![table.clone(); grid.len() - 1],
            terminal: table.iter().map(|v| *v as f64).collect(),
        };
        Self::from_automaton(grid, space, automaton)
    }

    pub fn constant(grid: TimeGrid, space: &StateSpace, c: f64) -> Result<Self> {
        Self::from_expr(grid, space, Expr::Const(c))
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn cells(&self) -> usize {
        self.cells
    }

    pub fn expr(&self) -> Option<&Expr> {
        match &self.repr {
            Repr::Expr(e) => Some(e),
            _ => None,
        }
    }

    pub fn is_table(&self) -> bool {
        matches!(self.repr, Repr::Table(_))
    }

    /// Value on a tuple of cells, one per grid time.
    pub fn eval(&self, tuple: &[usize]) -> f64 {
        debug_assert_eq!(tuple.len(), self.grid.len());
        match &self.repr {
            Repr::Table(d) => d[self.flat_index(tuple)],
            Repr::Expr(e) => e.eval(tuple),
            Repr::Automaton(a) => {
                let c = self.cells;
                let mut acc = a.init;
                for (step, x) in a.steps.iter().zip(tuple) {
                    acc = step[acc * c + x];
                }
                a.terminal[acc * c + tuple[tuple.len() - 1]]
            }
        }
    }

    fn flat_index(&self, tuple: &[usize]) -> usize {
        tuple.iter().fold(0, |i, x| i * self.cells + x)
    }

    fn same_shape(&self, space_cells: usize, grid: TimeGrid, repr: Repr) -> FinitaryGamble {
        FinitaryGamble {
            grid,
            cells: space_cells,
            retained: self.retained,
            repr,
        }
    }

    pub fn neg(&self) -> FinitaryGamble {
        self.affine(-1.0, 0.0)
    }

    pub fn scale(&self, mu: f64) -> FinitaryGamble {
        self.affine(mu, 0.0)
    }

    /// `mu * f + c`.
    pub fn affine(&self, mu: f64, c: f64) -> FinitaryGamble {
        let repr = match &self.repr {
            Repr::Table(d) => Repr::Table(d.iter().map(|v| mu * v + c).collect()),
            Repr::Expr(e) => {
                let scaled = if mu == -1.0 {
                    Expr::Neg(Box::new(e.clone()))
                } else {
                    Expr::Scale(mu, Box::new(e.clone()))
                };
                Repr::Expr(if c == 0.0 {
                    scaled
                } else {
                    Expr::Add(Box::new(scaled), Box::new(Expr::Const(c)))
                })
            }
            Repr::Automaton(a) => Repr::Automaton(Automaton {
                terminal: a.terminal.iter().map(|v| mu * v + c).collect(),
                ..a.clone()
            }),
        };
        self.same_shape(self.cells, self.grid.clone(), repr)
    }

    /// Dense-table copy of any representation.
    pub fn to_table(&self) -> Result<FinitaryGamble> {
        if let Repr::Table(_) = self.repr {
            return Ok(self.clone());
        }
        let size = table_size(self.cells, self.grid.len());
        if size > TABLE_CAP {
            return Err(Error::TableTooLarge(size));
        }
        let mut tuple = vec![0usize; self.grid.len()];
        let mut data = Vec::with_capacity(size as usize);
        loop {
            data.push(self.eval(&tuple));
            if !advance(&mut tuple, self.cells) {
                break;
            }
        }
        Ok(self.same_shape(self.cells, self.grid.clone(), Repr::Table(data)))
    }

    /// Pointwise combination of two gambles on the same grid, as a table.
    pub fn zip_with(
        &self,
        other: &FinitaryGamble,
        f: impl Fn(f64, f64) -> f64,
    ) -> Result<FinitaryGamble> {
        if self.grid != other.grid || self.cells != other.cells {
            return Err(Error::GridMismatch(
                "gambles live on different grids".into(),
            ));
        }
        let a = self.to_table()?;
        let b = other.to_table()?;
        let (Repr::Table(x), Repr::Table(y)) = (&a.repr, &b.repr) else {
            unreachable!()
        };
        let data = x.iter().zip(y).map(|(p, q)| f(*p, *q)).collect();
        Ok(self.same_shape(self.cells, self.grid.clone(), Repr::Table(data)))
    }

    pub fn add(&self, other: &FinitaryGamble) -> Result<FinitaryGamble> {
        self.zip_with(other, |a, b| a + b)
    }

    /// The cylinder extension `f o pi` to a finer grid `v` containing this
    /// gamble's grid; the new coordinates are ignored.
    pub fn lift(&self, v: &TimeGrid) -> Result<FinitaryGamble> {
        if !self.grid.is_subset_of(v) {
            return Err(Error::GridMismatch(
                "target grid does not contain the gamble's grid".into(),
            ));
        }
        if *v == self.grid {
            return Ok(self.clone());
        }
        let positions: Vec<usize> = self
            .grid
            .points()
            .iter()
            .map(|t| v.position(*t).expect("subset"))
            .collect();
        let repr = match &self.repr {
            Repr::Expr(e) => Repr::Expr(e.remap(&positions)),
            Repr::Table(_) => {
                let size = table_size(self.cells, v.len());
                if size > TABLE_CAP {
                    return Err(Error::TableTooLarge(size));
                }
                let mut tuple = vec![0usize; v.len()];
                let mut sub = vec![0usize; positions.len()];
                let mut data = Vec::with_capacity(size as usize);
                loop {
                    for (s, p) in sub.iter_mut().zip(&positions) {
                        *s = tuple[*p];
                    }
                    data.push(self.eval(&sub));
                    if !advance(&mut tuple, self.cells) {
                        break;
                    }
                }
                Repr::Table(data)
            }
            Repr::Automaton(a) => {
                Repr::Automaton(lift_automaton(a, self.cells, &positions, v.len()))
            }
        };
        Ok(self.same_shape(self.cells, v.clone(), repr))
    }
}

/// Re-targets an automaton to a finer grid. Inserted coordinates leave the
/// accumulator alone. If points are appended past the original last one, the
/// accumulator additionally remembers the original last cell, stored as
/// `n_acc + acc * cells + x`.
fn lift_automaton(a: &Automaton, cells: usize, positions: &[usize], new_len: usize) -> Automaton {
    let last_orig = *positions.last().expect("nonempty grid");
    let identity = |n_acc: usize| -> Vec<usize> {
        (0..n_acc)
            .flat_map(|acc| std::iter::repeat_n(acc, cells))
            .collect()
    };
    if last_orig == new_len - 1 {
        let mut steps = vec![identity(a.n_acc); new_len - 1];
        for (k, p) in positions[..positions.len() - 1].iter().enumerate() {
            steps[*p] = a.steps[k].clone();
        }
        return Automaton {
            n_acc: a.n_acc,
            init: a.init,
            steps,
            terminal: a.terminal.clone(),
        };
    }
    let n_acc = a.n_acc + a.n_acc * cells;
    let pad = |s: &Vec<usize>| -> Vec<usize> {
        let mut t = s.clone();
        t.extend((a.n_acc..n_acc).flat_map(|acc| std::iter::repeat_n(acc, cells)));
        t
    };
    let mut steps = vec![identity(n_acc); new_len - 1];
    for (k, p) in positions[..positions.len() - 1].iter().enumerate() {
        steps[*p] = pad(&a.steps[k]);
    }
    let mut remember = identity(n_acc);
    for acc in 0..a.n_acc {
        for x in 0..cells {
            remember[acc * cells + x] = a.n_acc + acc * cells + x;
        }
    }
    steps[last_orig] = remember;
    let mut terminal = vec![0.0; n_acc * cells];
    for code in 0..a.n_acc * cells {
        let v = a.terminal[code];
        for x in 0..cells {
            terminal[(a.n_acc + code) * cells + x] = v;
        }
    }
    Automaton {
        n_acc,
        init: a.init,
        steps,
        terminal,
    }
}

/// Odometer over cell tuples, last coordinate fastest. Returns false after
/// the final tuple.
pub(crate) fn advance(tuple: &mut [usize], cells: usize) -> bool {
    for x in tuple.iter_mut().rev() {
        *x += 1;
        if *x < cells {
            return true;
        }
        *x = 0;
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two() -> StateSpace {
        StateSpace::indexed(2).unwrap()
    }

    #[test]
    fn table_and_expr_agree() {
        let grid = TimeGrid::new(vec![0.0, 0.5]).unwrap();
        let e = FinitaryGamble::from_expr(grid.clone(), &two(), Expr::jump(0, 1)).unwrap();
        let t = e.to_table().unwrap();
        for tuple in [[0, 0], [0, 1], [1, 0], [1, 1]] {
            assert_eq!(e.eval(&tuple), t.eval(&tuple));
        }
        assert!(FinitaryGamble::from_table(grid, &two(), vec![0.0; 3]).is_err());
    }

    #[test]
    fn table_cap() {
        let space = StateSpace::truncated(99).unwrap();
        let grid = TimeGrid::new(vec![0.0, 1.0, 2.0, 3.0]).unwrap();
        assert!(matches!(
            FinitaryGamble::tabulate(grid, &space, |_| 0.0),
            Err(Error::TableTooLarge(_))
        ));
    }

    #[test]
    fn hitting_automaton() {
        let grid = TimeGrid::new(vec![0.0, 0.1, 0.2]).unwrap();
        let h = FinitaryGamble::hitting(grid, &two(), 1).unwrap();
        assert_eq!(h.eval(&[0, 0, 0]), 0.0);
        assert_eq!(h.eval(&[0, 1, 0]), 1.0);
        assert_eq!(h.eval(&[0, 0, 1]), 1.0);
    }

    #[test]
    fn lifts_preserve_values() {
        let space = StateSpace::indexed(3).unwrap();
        let u = TimeGrid::new(vec![0.2, 0.5]).unwrap();
        let v = TimeGrid::new(vec![0.0, 0.2, 0.3, 0.5, 0.9]).unwrap();
        let f =
            FinitaryGamble::tabulate(u.clone(), &space, |x| (x[0] * 3 + x[1]) as f64 * 0.1 - 0.2)
                .unwrap();
        let h = FinitaryGamble::hitting(u.clone(), &space, 2).unwrap();
        let e =
            FinitaryGamble::from_expr(u, &space, Expr::parse("coord(1) - 2 * coord(0)").unwrap())
                .unwrap();
        for g in [f, h, e] {
            let lifted = g.lift(&v).unwrap();
            let mut tuple = vec![0usize; v.len()];
            loop {
                assert_eq!(lifted.eval(&tuple), g.eval(&[tuple[1], tuple[3]]));
                if !advance(&mut tuple, 3) {
                    break;
                }
            }
        }
    }

    #[test]
    fn affine_on_all_forms() {
        let grid = TimeGrid::new(vec![0.0, 1.0]).unwrap();
        let h = FinitaryGamble::hitting(grid.clone(), &two(), 1).unwrap();
        let e = FinitaryGamble::from_expr(grid, &two(), Expr::jump(0, 1)).unwrap();
        for g in [h, e] {
            let a = g.affine(-2.0, 0.5);
            assert_eq!(a.eval(&[0, 1]), -2.0 * g.eval(&[0, 1]) + 0.5);
            assert_eq!(g.neg().eval(&[0, 1]), -g.eval(&[0, 1]));
        }
    }
}
