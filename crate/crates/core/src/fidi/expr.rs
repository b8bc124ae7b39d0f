// SPDX-License-Identifier: Apache-2.0

//! Path-functional expressions.
//!
//! ```text
//! expr    := term (('+' | '-') term)*
//! term    := unary ('*' unary)*          one factor must be constant
//! unary   := '-' unary | primary
//! primary := number | '(' expr ')' | coord(i)
//!          | indicator(operand ('==' | '!=') operand)
//!          | min(expr, expr, ...) | max(expr, expr, ...)
//! operand := coord(i) | number
//! ```
//!
//! `coord(i)` is the numeric code of the state at the `i`-th grid time: the
//! label index on finite spaces, the integer itself on truncated spaces, with
//! every state past the truncation reading as the truncation level.

use std::fmt;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum Operand {
    Coord(usize),
    Const(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Const(f64),
    Coord(usize),
    Indicator {
        lhs: Operand,
        rhs: Operand,
        equal: bool,
    },
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Scale(f64, Box<Expr>),
    Neg(Box<Expr>),
    Min(Vec<Expr>),
    Max(Vec<Expr>),
}

impl Expr {
    pub fn parse(src: &str) -> Result<Expr> {
        let tokens = tokenize(src)?;
        let mut p = Parser { tokens, pos: 0 };
        let e = p.expr()?;
        if p.pos != p.tokens.len() {
            return Err(Error::Expression(format!(
                "unexpected {} after expression",
                p.tokens[p.pos]
            )));
        }
        Ok(e)
    }

    /// `1{coord(i) != coord(j)}`.
    pub fn jump(i: usize, j: usize) -> Expr {
        Expr::Indicator {
            lhs: Operand::Coord(i),
            rhs: Operand::Coord(j),
            equal: false,
        }
    }

    pub fn eval(&self, cells: &[usize]) -> f64 {
        let operand = |o: &Operand| match o {
            Operand::Coord(i) => cells[*i] as f64,
            Operand::Const(c) => *c,
        };
        match self {
            Expr::Const(c) => *c,
            Expr::Coord(i) => cells[*i] as f64,
            Expr::Indicator { lhs, rhs, equal } => {
                f64::from((operand(lhs) == operand(rhs)) == *equal)
            }
            Expr::Add(a, b) => a.eval(cells) + b.eval(cells),
            Expr::Sub(a, b) => a.eval(cells) - b.eval(cells),
            Expr::Scale(c, a) => c * a.eval(cells),
            Expr::Neg(a) => -a.eval(cells),
            Expr::Min(xs) => xs
                .iter()
                .map(|x| x.eval(cells))
                .fold(f64::INFINITY, f64::min),
            Expr::Max(xs) => xs
                .iter()
                .map(|x| x.eval(cells))
                .fold(f64::NEG_INFINITY, f64::max),
        }
    }

    fn visit_operands(&self, f: &mut impl FnMut(&Operand)) {
        match self {
            Expr::Const(_) => {}
            Expr::Coord(i) => f(&Operand::Coord(*i)),
            Expr::Indicator { lhs, rhs, .. } => {
                f(lhs);
                f(rhs);
            }
            Expr::Add(a, b) | Expr::Sub(a, b) => {
                a.visit_operands(f);
                b.visit_operands(f);
            }
            Expr::Scale(_, a) | Expr::Neg(a) => a.visit_operands(f),
            Expr::Min(xs) | Expr::Max(xs) => xs.iter().for_each(|x| x.visit_operands(f)),
        }
    }

    /// Checks coordinate indices against the grid length and indicator
    /// constants against the retained states.
    pub fn validate(&self, grid_len: usize, retained: usize) -> Result<()> {
        let mut err = None;
        self.visit_operands(&mut |o| {
            if err.is_some() {
                return;
            }
            match o {
                Operand::Coord(i) if *i >= grid_len => {
                    err = Some(format!(
                        "coord({i}) out of range for a grid of {grid_len} times"
                    ));
                }
                _ => {}
            }
        });
        let mut check_ind = |e: &Expr| {
            if let Expr::Indicator { lhs, rhs, .. } = e {
                for o in [lhs, rhs] {
                    if let Operand::Const(c) = o {
                        if c.fract() != 0.0 || *c < 0.0 || *c >= retained as f64 {
                            err.get_or_insert(format!(
                                "indicator constant {c} is not a retained state"
                            ));
                        }
                    }
                }
            }
        };
        self.walk(&mut check_ind);
        match err {
            Some(e) => Err(Error::Expression(e)),
            None => Ok(()),
        }
    }

    fn walk(&self, f: &mut impl FnMut(&Expr)) {
        f(self);
        match self {
            Expr::Add(a, b) | Expr::Sub(a, b) => {
                a.walk(f);
                b.walk(f);
            }
            Expr::Scale(_, a) | Expr::Neg(a) => a.walk(f),
            Expr::Min(xs) | Expr::Max(xs) => xs.iter().for_each(|x| x.walk(f)),
            _ => {}
        }
    }

    /// Renames coordinate `i` to `map[i]`.
    pub fn remap(&self, map: &[usize]) -> Expr {
        let op = |o: &Operand| match o {
            Operand::Coord(i) => Operand::Coord(map[*i]),
            Operand::Const(c) => Operand::Const(*c),
        };
        match self {
            Expr::Const(c) => Expr::Const(*c),
            Expr::Coord(i) => Expr::Coord(map[*i]),
            Expr::Indicator { lhs, rhs, equal } => Expr::Indicator {
                lhs: op(lhs),
                rhs: op(rhs),
                equal: *equal,
            },
            Expr::Add(a, b) => Expr::Add(Box::new(a.remap(map)), Box::new(b.remap(map))),
            Expr::Sub(a, b) => Expr::Sub(Box::new(a.remap(map)), Box::new(b.remap(map))),
            Expr::Scale(c, a) => Expr::Scale(*c, Box::new(a.remap(map))),
            Expr::Neg(a) => Expr::Neg(Box::new(a.remap(map))),
            Expr::Min(xs) => Expr::Min(xs.iter().map(|x| x.remap(map)).collect()),
            Expr::Max(xs) => Expr::Max(xs.iter().map(|x| x.remap(map)).collect()),
        }
    }

    fn as_const(&self) -> Option<f64> {
        match self {
            Expr::Const(c) => Some(*c),
            _ => None,
        }
    }
}

impl fmt::Display for Operand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Operand::Coord(i) => write!(f, "coord({i})"),
            Operand::Const(c) => write!(f, "{c:?}"),
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let list = |f: &mut fmt::Formatter<'_>, name: &str, xs: &[Expr]| {
            write!(f, "{name}(")?;
            for (k, x) in xs.iter().enumerate() {
                if k > 0 {
                    write!(f, ", ")?;
                }
                write!(f, "{x}")?;
            }
            write!(f, ")")
        };
        match self {
            Expr::Const(c) if *c < 0.0 => write!(f, "({c:?})"),
            Expr::Const(c) => write!(f, "{c:?}"),
            Expr::Coord(i) => write!(f, "coord({i})"),
            Expr::Indicator { lhs, rhs, equal } => {
                write!(
                    f,
                    "indicator({lhs} {} {rhs})",
                    if *equal { "==" } else { "!=" }
                )
            }
            Expr::Add(a, b) => write!(f, "({a} + {b})"),
            Expr::Sub(a, b) => write!(f, "({a} - {b})"),
            Expr::Scale(c, a) => write!(f, "({c:?} * {a})"),
            Expr::Neg(a) => write!(f, "(-{a})"),
            Expr::Min(xs) => list(f, "min", xs),
            Expr::Max(xs) => list(f, "max", xs),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Num(f64),
    Ident(String),
    LParen,
    RParen,
    Comma,
    Plus,
    Minus,
    Star,
    EqEq,
    NotEq,
}

impl fmt::Display for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Token::Num(v) => write!(f, "number {v}"),
            Token::Ident(s) => write!(f, "`{s}`"),
            Token::LParen => write!(f, "`(`"),
            Token::RParen => write!(f, "`)`"),
            Token::Comma => write!(f, "`,`"),
            Token::Plus => write!(f, "`+`"),
            Token::Minus => write!(f, "`-`"),
            Token::Star => write!(f, "`*`"),
            Token::EqEq => write!(f, "`==`"),
            Token::NotEq => write!(f, "`!=`"),
        }
    }
}

fn tokenize(src: &str) -> Result<Vec<Token>> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        match c {
            ' ' | '\t' | '\n' | '\r' => i += 1,
            '(' => {
                out.push(Token::LParen);
                i += 1;
            }
            ')' => {
                out.push(Token::RParen);
                i += 1;
            }
            ',' => {
                out.push(Token::Comma);
                i += 1;
            }
            '+' => {
                out.push(Token::Plus);
                i += 1;
            }
            '-' => {
                out.push(Token::Minus);
                i += 1;
            }
            '*' => {
                out.push(Token::Star);
                i += 1;
            }
            '=' | '!' if chars.get(i + 1) == Some(&'=') => {
                out.push(if c == '=' { Token::EqEq } else { Token::NotEq });
                i += 2;
            }
            c if c.is_ascii_digit() || c == '.' => {
                let start = i;
                while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                    i += 1;
                }
                if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                    i += 1;
                    if i < chars.len() && (chars[i] == '+' || chars[i] == '-') {
                        i += 1;
                    }
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        i += 1;
                    }
                }
                let s: String = chars[start..i].iter().collect();
                let v = s
                    .parse::<f64>()
                    .map_err(|_| Error::Expression(format!("bad number `{s}`")))?;
                out.push(Token::Num(v));
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let start = i;
                while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                    i += 1;
                }
                out.push(Token::Ident(chars[start..i].iter().collect()));
            }
            other => return Err(Error::Expression(format!("unexpected character `{other}`"))),
        }
    }
    Ok(out)
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn next(&mut self) -> Result<Token> {
        let t = self
            .tokens
            .get(self.pos)
            .cloned()
            .ok_or_else(|| Error::Expression("unexpected end".into()))?;
        self.pos += 1;
        Ok(t)
    }

    fn expect(&mut self, want: Token) -> Result<()> {
        let got = self.next()?;
        if got == want {
            Ok(())
        } else {
            Err(Error::Expression(format!("expected {want}, found {got}")))
        }
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        loop {
            match self.peek() {
                Some(Token::Plus) => {
                    self.pos += 1;
                    let rhs = self.term()?;
                    lhs = match (lhs.as_const(), rhs.as_const()) {
                        (Some(a), Some(b)) => Expr::Const(a + b),
                        _ => Expr::Add(Box::new(lhs), Box::new(rhs)),
                    };
                }
                Some(Token::Minus) => {
                    self.pos += 1;
                    let rhs = self.term()?;
                    lhs = match (lhs.as_const(), rhs.as_const()) {
                        (Some(a), Some(b)) => Expr::Const(a - b),
                        _ => Expr::Sub(Box::new(lhs), Box::new(rhs)),
                    };
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.unary()?;
        while let Some(Token::Star) = self.peek() {
            self.pos += 1;
            let rhs = self.unary()?;
            lhs = match (lhs.as_const(), rhs.as_const()) {
                (Some(a), Some(b)) => Expr::Const(a * b),
                (Some(a), None) => Expr::Scale(a, Box::new(rhs)),
                (None, Some(b)) => Expr::Scale(b, Box::new(lhs)),
                (None, None) => {
                    return Err(Error::Expression("`*` needs a constant factor".into()));
                }
            };
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr> {
        if let Some(Token::Minus) = self.peek() {
            self.pos += 1;
            let e = self.unary()?;
            return Ok(match e.as_const() {
                Some(c) => Expr::Const(-c),
                None => Expr::Neg(Box::new(e)),
            });
        }
        self.primary()
    }

    fn index(&mut self) -> Result<usize> {
        self.expect(Token::LParen)?;
        let i = match self.next()? {
            Token::Num(v) if v >= 0.0 && v.fract() == 0.0 => v as usize,
            other => {
                return Err(Error::Expression(format!(
                    "expected coordinate index, found {other}"
                )))
            }
        };
        self.expect(Token::RParen)?;
        Ok(i)
    }

    fn operand(&mut self) -> Result<Operand> {
        match self.next()? {
            Token::Ident(s) if s == "coord" => Ok(Operand::Coord(self.index()?)),
            Token::Num(v) => Ok(Operand::Const(v)),
            Token::Minus => match self.next()? {
                Token::Num(v) => Ok(Operand::Const(-v)),
                other => Err(Error::Expression(format!("expected number, found {other}"))),
            },
            other => Err(Error::Expression(format!(
                "expected coord(i) or a number, found {other}"
            ))),
        }
    }

    fn primary(&mut self) -> Result<Expr> {
        match self.next()? {
            Token::Num(v) => Ok(Expr::Const(v)),
            Token::LParen => {
                let e = self.expr()?;
                self.expect(Token::RParen)?;
                Ok(e)
            }
            Token::Ident(name) => match name.as_str() {
                "coord" => Ok(Expr::Coord(self.index()?)),
                "indicator" => {
                    self.expect(Token::LParen)?;
                    let lhs = self.operand()?;
                    let equal = match self.next()? {
                        Token::EqEq => true,
                        Token::NotEq => false,
                        other => {
                            return Err(Error::Expression(format!(
                                "expected `==` or `!=`, found {other}"
                            )))
                        }
                    };
                    let rhs = self.operand()?;
                    self.expect(Token::RParen)?;
                    Ok(Expr::Indicator { lhs, rhs, equal })
                }
                "min" | "max" => {
                    self.expect(Token::LParen)?;
                    let mut args = vec![self.expr()?];
                    loop {
                        match self.next()? {
                            Token::Comma => args.push(self.expr()?),
                            Token::RParen => break,
                            other => {
                                return Err(Error::Expression(format!(
                                    "expected `,` or `)`, found {other}"
                                )))
                            }
                        }
                    }
                    if args.len() < 2 {
                        return Err(Error::Expression(format!(
                            "{name} needs at least two arguments"
                        )));
                    }
                    Ok(if name == "min" {
                        Expr::Min(args)
                    } else {
                        Expr::Max(args)
                    })
                }
                other => Err(Error::Expression(format!("unknown function `{other}`"))),
            },
            other => Err(Error::Expression(format!("unexpected {other}"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_jump_and_hitting() {
        let e = Expr::parse("indicator(coord(0) != coord(1))").unwrap();
        assert_eq!(e, Expr::jump(0, 1));
        assert_eq!(e.eval(&[2, 2]), 0.0);
        assert_eq!(e.eval(&[2, 3]), 1.0);
        let h = Expr::parse(
            "max(indicator(coord(0) == 1), indicator(coord(1) == 1), indicator(coord(2) == 1))",
        )
        .unwrap();
        assert_eq!(h.eval(&[0, 0, 1]), 1.0);
        assert_eq!(h.eval(&[0, 0, 0]), 0.0);
    }

    #[test]
    fn arithmetic_and_threshold() {
        let e = Expr::parse("2 * coord(0) - coord(1) + 0.5").unwrap();
        assert_eq!(e.eval(&[3, 1]), 5.5);
        let tail = Expr::parse("min(1, max(0, coord(0) - 19))").unwrap();
        assert_eq!(tail.eval(&[19]), 0.0);
        assert_eq!(tail.eval(&[20]), 1.0);
        assert_eq!(tail.eval(&[45]), 1.0);
        assert_eq!(Expr::parse("-(3 * 2)").unwrap(), Expr::Const(-6.0));
    }

    #[test]
    fn rejects_bad_input() {
        assert!(Expr::parse("coord(0) * coord(1)").is_err());
        assert!(Expr::parse("foo(1)").is_err());
        assert!(Expr::parse("max(1)").is_err());
        assert!(Expr::parse("coord(0) +").is_err());
        assert!(Expr::parse("indicator(coord(0) < 1)").is_err());
        assert!(Expr::parse("1 2").is_err());
    }

    #[test]
    fn validation() {
        let e = Expr::parse("indicator(coord(2) == 1)").unwrap();
        assert!(e.validate(2, 5).is_err());
        assert!(e.validate(3, 5).is_ok());
        let e = Expr::parse("indicator(coord(0) == 7)").unwrap();
        assert!(e.validate(1, 5).is_err());
    }

    #[test]
    fn display_reparses() {
        for src in [
            "indicator(coord(0) != coord(1))",
            "min(1, max(0, coord(0) - 19))",
            "-coord(1) + 0.25 * max(coord(0), -2, indicator(coord(1) == 0))",
        ] {
            let e = Expr::parse(src).unwrap();
            let again = Expr::parse(&e.to_string()).unwrap();
            assert_eq!(e, again, "{src}");
        }
    }
}
