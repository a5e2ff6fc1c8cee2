//! Scalar expressions over `x1..xn`.
//!
//! Grammar (lowest to highest precedence):
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := unary (('*' | '/') unary)*
//! unary  := '-' unary | power
//! power  := atom ('^' unary)?          // right-associative
//! atom   := number | xK | abs(expr) | min(expr, expr) | max(expr, expr) | '(' expr ')'
//! ```
//!
//! Exponents must fold to a rational constant such as `2`, `(3/2)` or
//! `(-1/3)`. A negative base is only allowed with an integer exponent;
//! write `abs(x1)^(3/2)` for the even extension.

use std::fmt;

use crate::error::{Error, Result};

/// Reduced fraction `num / den` with `den > 0`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Rational {
    pub num: i64,
    pub den: i64,
}

impl Rational {
    pub fn new(num: i64, den: i64) -> Option<Self> {
        if den == 0 {
            return None;
        }
        let g = gcd(num.unsigned_abs(), den.unsigned_abs()) as i64;
        let s = if den < 0 { -1 } else { 1 };
        Some(Self {
            num: s * num / g.max(1),
            den: s * den / g.max(1),
        })
    }

    pub fn integer(n: i64) -> Self {
        Self { num: n, den: 1 }
    }

    pub fn is_integer(&self) -> bool {
        self.den == 1
    }

    pub fn value(&self) -> f64 {
        self.num as f64 / self.den as f64
    }

    fn checked_add(self, o: Self) -> Option<Self> {
        let n = self.num.checked_mul(o.den)?.checked_add(o.num.checked_mul(self.den)?)?;
        Self::new(n, self.den.checked_mul(o.den)?)
    }

    fn checked_mul(self, o: Self) -> Option<Self> {
        Self::new(self.num.checked_mul(o.num)?, self.den.checked_mul(o.den)?)
    }

    fn checked_div(self, o: Self) -> Option<Self> {
        Self::new(self.num.checked_mul(o.den)?, self.den.checked_mul(o.num)?)
    }

    fn checked_powi(self, e: i64) -> Option<Self> {
        let e32 = u32::try_from(e.unsigned_abs()).ok()?;
        let (n, d) = (self.num.checked_pow(e32)?, self.den.checked_pow(e32)?);
        if e >= 0 {
            Self::new(n, d)
        } else {
            Self::new(d, n)
        }
    }
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Parsed expression tree. Variables are stored zero-based.
#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Num(f64),
    Var(usize),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, Rational),
    Abs(Box<Expr>),
    Min(Box<Expr>, Box<Expr>),
    Max(Box<Expr>, Box<Expr>),
}

impl Expr {
    /// Number of non-leaf nodes.
    pub fn internal_nodes(&self) -> usize {
        match self {
            Expr::Num(_) | Expr::Var(_) => 0,
            Expr::Neg(a) | Expr::Pow(a, _) | Expr::Abs(a) => 1 + a.internal_nodes(),
            Expr::Add(a, b)
            | Expr::Sub(a, b)
            | Expr::Mul(a, b)
            | Expr::Div(a, b)
            | Expr::Min(a, b)
            | Expr::Max(a, b) => 1 + a.internal_nodes() + b.internal_nodes(),
        }
    }

    /// Smallest dimension the expression can be evaluated in.
    pub fn arity(&self) -> usize {
        match self {
            Expr::Num(_) => 0,
            Expr::Var(i) => i + 1,
            Expr::Neg(a) | Expr::Pow(a, _) | Expr::Abs(a) => a.arity(),
            Expr::Add(a, b)
            | Expr::Sub(a, b)
            | Expr::Mul(a, b)
            | Expr::Div(a, b)
            | Expr::Min(a, b)
            | Expr::Max(a, b) => a.arity().max(b.arity()),
        }
    }

    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        let v = match self {
            Expr::Num(c) => *c,
            Expr::Var(i) => *x.get(*i).ok_or(Error::DimensionMismatch {
                expected: i + 1,
                got: x.len(),
            })?,
            Expr::Neg(a) => -a.eval(x)?,
            Expr::Add(a, b) => a.eval(x)? + b.eval(x)?,
            Expr::Sub(a, b) => a.eval(x)? - b.eval(x)?,
            Expr::Mul(a, b) => a.eval(x)? * b.eval(x)?,
            Expr::Div(a, b) => {
                let d = b.eval(x)?;
                if d == 0.0 {
                    return Err(Error::Evaluation("division by zero".into()));
                }
                a.eval(x)? / d
            }
            Expr::Pow(a, r) => pow_rational(a.eval(x)?, *r)?,
            Expr::Abs(a) => a.eval(x)?.abs(),
            Expr::Min(a, b) => a.eval(x)?.min(b.eval(x)?),
            Expr::Max(a, b) => a.eval(x)?.max(b.eval(x)?),
        };
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::Evaluation(format!("non-finite value in `{self}`")))
        }
    }

    fn precedence(&self) -> u8 {
        match self {
            Expr::Add(..) | Expr::Sub(..) => 1,
            Expr::Mul(..) | Expr::Div(..) => 2,
            Expr::Neg(_) => 3,
            Expr::Pow(..) => 4,
            _ => 5,
        }
    }

    fn write_at(&self, f: &mut fmt::Formatter<'_>, min_prec: u8) -> fmt::Result {
        if self.precedence() < min_prec {
            write!(f, "(")?;
            self.write_at(f, 0)?;
            return write!(f, ")");
        }
        match self {
            Expr::Num(c) => write!(f, "{c}"),
            Expr::Var(i) => write!(f, "x{}", i + 1),
            Expr::Neg(a) => {
                write!(f, "-")?;
                a.write_at(f, 3)
            }
            Expr::Add(a, b) => bin(f, a, " + ", b, 1, 2),
            Expr::Sub(a, b) => bin(f, a, " - ", b, 1, 2),
            Expr::Mul(a, b) => bin(f, a, "*", b, 2, 3),
            Expr::Div(a, b) => bin(f, a, "/", b, 2, 3),
            Expr::Pow(a, r) => {
                a.write_at(f, 5)?;
                if r.is_integer() && r.num >= 0 {
                    write!(f, "^{}", r.num)
                } else if r.is_integer() {
                    write!(f, "^({})", r.num)
                } else {
                    write!(f, "^({}/{})", r.num, r.den)
                }
            }
            Expr::Abs(a) => {
                write!(f, "abs(")?;
                a.write_at(f, 0)?;
                write!(f, ")")
            }
            Expr::Min(a, b) => call2(f, "min", a, b),
            Expr::Max(a, b) => call2(f, "max", a, b),
        }
    }
}

fn bin(f: &mut fmt::Formatter<'_>, a: &Expr, op: &str, b: &Expr, pa: u8, pb: u8) -> fmt::Result {
    a.write_at(f, pa)?;
    write!(f, "{op}")?;
    b.write_at(f, pb)
}

fn call2(f: &mut fmt::Formatter<'_>, name: &str, a: &Expr, b: &Expr) -> fmt::Result {
    write!(f, "{name}(")?;
    a.write_at(f, 0)?;
    write!(f, ", ")?;
    b.write_at(f, 0)?;
    write!(f, ")")
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.write_at(f, 0)
    }
}

pub(crate) fn pow_rational(base: f64, r: Rational) -> Result<f64> {
    if r.is_integer() {
        if base == 0.0 && r.num < 0 {
            return Err(Error::Evaluation("zero raised to a negative power".into()));
        }
        return Ok(match i32::try_from(r.num) {
            Ok(e) => base.powi(e),
            Err(_) => base.powf(r.num as f64),
        });
    }
    if base < 0.0 {
        return Err(Error::Evaluation(format!(
            "negative base {base} with non-integer exponent {}/{}; use abs()",
            r.num, r.den
        )));
    }
    if base == 0.0 && r.num < 0 {
        return Err(Error::Evaluation("zero raised to a negative power".into()));
    }
    Ok(base.powf(r.value()))
}

/// Parses `src` into an expression tree.
pub fn parse_expr(src: &str) -> Result<Expr> {
    let mut p = Parser { src: src.as_bytes(), pos: 0 };
    p.skip_ws();
    if p.pos >= p.src.len() {
        return Err(Error::Syntax {
            pos: 0,
            msg: "empty expression".into(),
        });
    }
    let e = p.expr()?;
    p.skip_ws();
    if p.pos < p.src.len() {
        return Err(p.error(format!("unexpected `{}`", p.src[p.pos] as char)));
    }
    Ok(e)
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl Parser<'_> {
    fn error(&self, msg: String) -> Error {
        Error::Syntax { pos: self.pos, msg }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn eat(&mut self, c: u8) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: u8) -> Result<()> {
        if self.eat(c) {
            Ok(())
        } else {
            Err(self.error(format!("expected `{}`", c as char)))
        }
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        loop {
            if self.eat(b'+') {
                lhs = Expr::Add(Box::new(lhs), Box::new(self.term()?));
            } else if self.eat(b'-') {
                lhs = Expr::Sub(Box::new(lhs), Box::new(self.term()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.unary()?;
        loop {
            if self.eat(b'*') {
                lhs = Expr::Mul(Box::new(lhs), Box::new(self.unary()?));
            } else if self.eat(b'/') {
                lhs = Expr::Div(Box::new(lhs), Box::new(self.unary()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn unary(&mut self) -> Result<Expr> {
        if self.eat(b'-') {
            Ok(Expr::Neg(Box::new(self.unary()?)))
        } else {
            self.power()
        }
    }

    fn power(&mut self) -> Result<Expr> {
        let base = self.atom()?;
        if !self.eat(b'^') {
            return Ok(base);
        }
        let start = self.pos;
        let exponent = self.unary()?;
        let r = fold_rational(&exponent).ok_or(Error::Syntax {
            pos: start,
            msg: format!("exponent `{exponent}` is not a rational constant"),
        })?;
        Ok(Expr::Pow(Box::new(base), r))
    }

    fn atom(&mut self) -> Result<Expr> {
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let e = self.expr()?;
                self.expect(b')')?;
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() => self.identifier(),
            Some(c) => Err(self.error(format!("unexpected `{}`", c as char))),
            None => Err(self.error("unexpected end of input".into())),
        }
    }

    fn number(&mut self) -> Result<Expr> {
        let start = self.pos;
        let digits = |p: &mut Self| {
            while p.pos < p.src.len() && p.src[p.pos].is_ascii_digit() {
                p.pos += 1;
            }
        };
        digits(self);
        if self.src.get(self.pos) == Some(&b'.') {
            self.pos += 1;
            digits(self);
        }
        if matches!(self.src.get(self.pos), Some(b'e') | Some(b'E')) {
            let save = self.pos;
            self.pos += 1;
            if matches!(self.src.get(self.pos), Some(b'+') | Some(b'-')) {
                self.pos += 1;
            }
            let exp_start = self.pos;
            digits(self);
            if self.pos == exp_start {
                self.pos = save;
            }
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii");
        text.parse::<f64>().map(Expr::Num).map_err(|_| Error::Syntax {
            pos: start,
            msg: format!("malformed number `{text}`"),
        })
    }

    fn identifier(&mut self) -> Result<Expr> {
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_alphanumeric() {
            self.pos += 1;
        }
        let name = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii");
        match name {
            "abs" => {
                self.expect(b'(')?;
                let a = self.expr()?;
                self.expect(b')')?;
                Ok(Expr::Abs(Box::new(a)))
            }
            "min" | "max" => {
                self.expect(b'(')?;
                let a = self.expr()?;
                self.expect(b',')?;
                let b = self.expr()?;
                self.expect(b')')?;
                let (a, b) = (Box::new(a), Box::new(b));
                Ok(if name == "min" { Expr::Min(a, b) } else { Expr::Max(a, b) })
            }
            _ => match name.strip_prefix('x').and_then(|d| d.parse::<usize>().ok()) {
                Some(k) if k >= 1 && !name[1..].starts_with('0') => Ok(Expr::Var(k - 1)),
                _ => Err(Error::UnknownIdentifier {
                    name: name.to_string(),
                    pos: start,
                }),
            },
        }
    }
}

fn fold_rational(e: &Expr) -> Option<Rational> {
    match e {
        Expr::Num(c) => {
            if c.fract() == 0.0 && c.abs() < 1e15 {
                Some(Rational::integer(*c as i64))
            } else {
                None
            }
        }
        Expr::Neg(a) => fold_rational(a).map(|r| Rational { num: -r.num, den: r.den }),
        Expr::Add(a, b) => fold_rational(a)?.checked_add(fold_rational(b)?),
        Expr::Sub(a, b) => {
            let b = fold_rational(b)?;
            fold_rational(a)?.checked_add(Rational { num: -b.num, den: b.den })
        }
        Expr::Mul(a, b) => fold_rational(a)?.checked_mul(fold_rational(b)?),
        Expr::Div(a, b) => fold_rational(a)?.checked_div(fold_rational(b)?),
        Expr::Pow(a, r) if r.is_integer() => fold_rational(a)?.checked_powi(r.num),
        _ => None,
    }
}
