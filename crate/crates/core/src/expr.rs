//! Minimal arithmetic expressions for level-set fronts and radial fields.
//!
//! Grammar: numbers, `+ - * / ^`, parentheses, the variables `t`, `x1..xn`
//! (with `x`, `y`, `z` as aliases for the first three coordinates when they
//! are not followed by a digit), `r` and `|x|` for the Euclidean norm of the
//! position, `|e|` for absolute values, and the functions
//! `sqrt abs exp log sin cos`. Expressions are differentiated symbolically so
//! fronts built from them get analytic gradients.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sqrt,
    Abs,
    Exp,
    Log,
    Sin,
    Cos,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    Time,
    Coord(usize),
    /// Euclidean norm of the position.
    Norm,
    Neg(Arc<Expr>),
    Add(Arc<Expr>, Arc<Expr>),
    Sub(Arc<Expr>, Arc<Expr>),
    Mul(Arc<Expr>, Arc<Expr>),
    Div(Arc<Expr>, Arc<Expr>),
    Pow(Arc<Expr>, Arc<Expr>),
    Call(Func, Arc<Expr>),
}

/// Differentiation variable.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Var {
    Time,
    Coord(usize),
}

impl Expr {
    pub fn parse(src: &str) -> Result<Expr> {
        let tokens = tokenize(src)?;
        let mut p = Parser { tokens, pos: 0 };
        let e = p.expr()?;
        if p.pos != p.tokens.len() {
            return Err(Error::Expression(format!("unexpected trailing input in `{src}`")));
        }
        Ok(e)
    }

    /// Highest coordinate index referenced plus one (0 if none).
    pub fn max_coord(&self) -> usize {
        match self {
            Expr::Coord(k) => k + 1,
            Expr::Num(_) | Expr::Time | Expr::Norm => 0,
            Expr::Neg(a) | Expr::Call(_, a) => a.max_coord(),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) | Expr::Pow(a, b) => a.max_coord().max(b.max_coord()),
        }
    }

    pub fn eval(&self, x: &[f64], t: f64) -> f64 {
        match self {
            Expr::Num(v) => *v,
            Expr::Time => t,
            Expr::Coord(k) => x.get(*k).copied().unwrap_or(0.0),
            Expr::Norm => x.iter().map(|v| v * v).sum::<f64>().sqrt(),
            Expr::Neg(a) => -a.eval(x, t),
            Expr::Add(a, b) => a.eval(x, t) + b.eval(x, t),
            Expr::Sub(a, b) => a.eval(x, t) - b.eval(x, t),
            Expr::Mul(a, b) => a.eval(x, t) * b.eval(x, t),
            Expr::Div(a, b) => a.eval(x, t) / b.eval(x, t),
            Expr::Pow(a, b) => {
                let base = a.eval(x, t);
                match b.as_ref() {
                    Expr::Num(e) if e.fract() == 0.0 && e.abs() < 64.0 => base.powi(*e as i32),
                    _ => base.powf(b.eval(x, t)),
                }
            }
            Expr::Call(f, a) => {
                let v = a.eval(x, t);
                match f {
                    Func::Sqrt => v.sqrt(),
                    Func::Abs => v.abs(),
                    Func::Exp => v.exp(),
                    Func::Log => v.ln(),
                    Func::Sin => v.sin(),
                    Func::Cos => v.cos(),
                }
            }
        }
    }

    /// Symbolic partial derivative.
    pub fn diff(&self, var: Var) -> Expr {
        use Expr::*;
        match self {
            Num(_) => Num(0.0),
            Time => Num(if var == Var::Time { 1.0 } else { 0.0 }),
            Coord(k) => Num(if var == Var::Coord(*k) { 1.0 } else { 0.0 }),
            Norm => match var {
                Var::Time => Num(0.0),
                Var::Coord(k) => div(Coord(k), Norm),
            },
            Neg(a) => neg(a.diff(var)),
            Add(a, b) => add(a.diff(var), b.diff(var)),
            Sub(a, b) => sub(a.diff(var), b.diff(var)),
            Mul(a, b) => add(mul(a.diff(var), (**b).clone()), mul((**a).clone(), b.diff(var))),
            Div(a, b) => div(sub(mul(a.diff(var), (**b).clone()), mul((**a).clone(), b.diff(var))), pow((**b).clone(), Num(2.0))),
            Pow(a, b) => {
                if let Num(e) = b.as_ref() {
                    mul(mul(Num(*e), pow((**a).clone(), Num(e - 1.0))), a.diff(var))
                } else {
                    // d(a^b) = a^b (b' ln a + b a'/a)
                    mul(
                        self.clone(),
                        add(mul(b.diff(var), call(Func::Log, (**a).clone())), div(mul((**b).clone(), a.diff(var)), (**a).clone())),
                    )
                }
            }
            Call(f, a) => {
                let inner = a.diff(var);
                let outer = match f {
                    Func::Sqrt => div(Num(0.5), call(Func::Sqrt, (**a).clone())),
                    Func::Abs => div((**a).clone(), call(Func::Abs, (**a).clone())),
                    Func::Exp => call(Func::Exp, (**a).clone()),
                    Func::Log => div(Num(1.0), (**a).clone()),
                    Func::Sin => call(Func::Cos, (**a).clone()),
                    Func::Cos => neg(call(Func::Sin, (**a).clone())),
                };
                mul(outer, inner)
            }
        }
    }
}

fn is_zero(e: &Expr) -> bool {
    matches!(e, Expr::Num(v) if *v == 0.0)
}

fn is_one(e: &Expr) -> bool {
    matches!(e, Expr::Num(v) if *v == 1.0)
}

fn neg(a: Expr) -> Expr {
    match a {
        Expr::Num(v) => Expr::Num(-v),
        a => Expr::Neg(Arc::new(a)),
    }
}

fn add(a: Expr, b: Expr) -> Expr {
    match (&a, &b) {
        (Expr::Num(x), Expr::Num(y)) => Expr::Num(x + y),
        _ if is_zero(&a) => b,
        _ if is_zero(&b) => a,
        _ => Expr::Add(Arc::new(a), Arc::new(b)),
    }
}

fn sub(a: Expr, b: Expr) -> Expr {
    match (&a, &b) {
        (Expr::Num(x), Expr::Num(y)) => Expr::Num(x - y),
        _ if is_zero(&b) => a,
        _ if is_zero(&a) => neg(b),
        _ => Expr::Sub(Arc::new(a), Arc::new(b)),
    }
}

fn mul(a: Expr, b: Expr) -> Expr {
    match (&a, &b) {
        (Expr::Num(x), Expr::Num(y)) => Expr::Num(x * y),
        _ if is_zero(&a) || is_zero(&b) => Expr::Num(0.0),
        _ if is_one(&a) => b,
        _ if is_one(&b) => a,
        _ => Expr::Mul(Arc::new(a), Arc::new(b)),
    }
}

fn div(a: Expr, b: Expr) -> Expr {
    if is_zero(&a) {
        return Expr::Num(0.0);
    }
    if is_one(&b) {
        return a;
    }
    Expr::Div(Arc::new(a), Arc::new(b))
}

fn pow(a: Expr, b: Expr) -> Expr {
    if is_one(&b) {
        return a;
    }
    if is_zero(&b) {
        return Expr::Num(1.0);
    }
    Expr::Pow(Arc::new(a), Arc::new(b))
}

fn call(f: Func, a: Expr) -> Expr {
    Expr::Call(f, Arc::new(a))
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(v) => write!(f, "{v}"),
            Expr::Time => write!(f, "t"),
            Expr::Coord(k) => write!(f, "x{}", k + 1),
            Expr::Norm => write!(f, "|x|"),
            Expr::Neg(a) => write!(f, "(-{a})"),
            Expr::Add(a, b) => write!(f, "({a} + {b})"),
            Expr::Sub(a, b) => write!(f, "({a} - {b})"),
            Expr::Mul(a, b) => write!(f, "({a} * {b})"),
            Expr::Div(a, b) => write!(f, "({a} / {b})"),
            Expr::Pow(a, b) => write!(f, "({a} ^ {b})"),
            Expr::Call(func, a) => {
                let name = match func {
                    Func::Sqrt => "sqrt",
                    Func::Abs => "abs",
                    Func::Exp => "exp",
                    Func::Log => "log",
                    Func::Sin => "sin",
                    Func::Cos => "cos",
                };
                write!(f, "{name}({a})")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Op(char),
}

fn tokenize(src: &str) -> Result<Vec<Tok>> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() || c == '.' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                i += 1;
            }
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                let mut j = i + 1;
                if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                    j += 1;
                }
                if j < chars.len() && chars[j].is_ascii_digit() {
                    i = j;
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            let text: String = chars[start..i].iter().collect();
            let v: f64 = text.parse().map_err(|_| Error::Expression(format!("bad number `{text}`")))?;
            out.push(Tok::Num(v));
        } else if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            out.push(Tok::Ident(chars[start..i].iter().collect()));
        } else if "+-*/^()|".contains(c) || c == '\u{2212}' {
            out.push(Tok::Op(if c == '\u{2212}' { '-' } else { c }));
            i += 1;
        } else {
            return Err(Error::Expression(format!("unexpected character `{c}`")));
        }
    }
    Ok(out)
}

struct Parser {
    tokens: Vec<Tok>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.tokens.get(self.pos)
    }

    fn eat_op(&mut self, op: char) -> bool {
        if self.peek() == Some(&Tok::Op(op)) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect_op(&mut self, op: char) -> Result<()> {
        if self.eat_op(op) {
            Ok(())
        } else {
            Err(Error::Expression(format!("expected `{op}`")))
        }
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        loop {
            if self.eat_op('+') {
                lhs = Expr::Add(Arc::new(lhs), Arc::new(self.term()?));
            } else if self.eat_op('-') {
                lhs = Expr::Sub(Arc::new(lhs), Arc::new(self.term()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.unary()?;
        loop {
            if self.eat_op('*') {
                lhs = Expr::Mul(Arc::new(lhs), Arc::new(self.unary()?));
            } else if self.eat_op('/') {
                lhs = Expr::Div(Arc::new(lhs), Arc::new(self.unary()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn unary(&mut self) -> Result<Expr> {
        if self.eat_op('-') {
            return Ok(Expr::Neg(Arc::new(self.unary()?)));
        }
        if self.eat_op('+') {
            return self.unary();
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr> {
        let base = self.atom()?;
        if self.eat_op('^') {
            let exp = self.unary()?;
            return Ok(Expr::Pow(Arc::new(base), Arc::new(exp)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr> {
        match self.tokens.get(self.pos).cloned() {
            Some(Tok::Num(v)) => {
                self.pos += 1;
                Ok(Expr::Num(v))
            }
            Some(Tok::Op('(')) => {
                self.pos += 1;
                let e = self.expr()?;
                self.expect_op(')')?;
                Ok(e)
            }
            Some(Tok::Op('|')) => {
                self.pos += 1;
                if self.tokens.get(self.pos) == Some(&Tok::Ident("x".into())) && self.tokens.get(self.pos + 1) == Some(&Tok::Op('|')) {
                    self.pos += 2;
                    return Ok(Expr::Norm);
                }
                let e = self.expr()?;
                self.expect_op('|')?;
                Ok(Expr::Call(Func::Abs, Arc::new(e)))
            }
            Some(Tok::Ident(name)) => {
                self.pos += 1;
                if self.peek() == Some(&Tok::Op('(')) {
                    let func = match name.as_str() {
                        "sqrt" => Func::Sqrt,
                        "abs" => Func::Abs,
                        "exp" => Func::Exp,
                        "log" | "ln" => Func::Log,
                        "sin" => Func::Sin,
                        "cos" => Func::Cos,
                        other => return Err(Error::Expression(format!("unknown function `{other}`"))),
                    };
                    self.pos += 1;
                    let arg = self.expr()?;
                    self.expect_op(')')?;
                    return Ok(Expr::Call(func, Arc::new(arg)));
                }
                variable(&name)
            }
            Some(Tok::Op(c)) => Err(Error::Expression(format!("unexpected `{c}`"))),
            None => Err(Error::Expression("unexpected end of expression".into())),
        }
    }
}

fn variable(name: &str) -> Result<Expr> {
    match name {
        "t" => Ok(Expr::Time),
        "r" => Ok(Expr::Norm),
        "x" => Ok(Expr::Coord(0)),
        "y" => Ok(Expr::Coord(1)),
        "z" => Ok(Expr::Coord(2)),
        "pi" => Ok(Expr::Num(std::f64::consts::PI)),
        _ => {
            if let Some(idx) = name.strip_prefix('x') {
                if let Ok(k) = idx.parse::<usize>() {
                    if k >= 1 {
                        return Ok(Expr::Coord(k - 1));
                    }
                }
            }
            Err(Error::Expression(format!("unknown variable `{name}`")))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ev(src: &str, x: &[f64], t: f64) -> f64 {
        Expr::parse(src).unwrap().eval(x, t)
    }

    #[test]
    fn precedence_and_variables() {
        assert_eq!(ev("1 + 2 * 3", &[], 0.0), 7.0);
        assert_eq!(ev("-2^2", &[], 0.0), -4.0);
        assert_eq!(ev("2^3^2", &[], 0.0), 512.0);
        assert_eq!(ev("x1 - 3*t", &[5.0], 1.0), 2.0);
        assert_eq!(ev("|x| - 1", &[3.0, 4.0], 0.0), 4.0);
        assert_eq!(ev("r", &[3.0, 4.0], 0.0), 5.0);
        assert_eq!(ev("|x2 - 7|", &[0.0, 4.0], 0.0), 3.0);
        assert_eq!(ev("sqrt(x^2 + y^2 + z^2)", &[2.0, 3.0, 6.0], 0.0), 7.0);
        assert!((ev("1.5e-1 * 2", &[], 0.0) - 0.3).abs() < 1e-15);
    }

    #[test]
    fn rejects_malformed() {
        assert!(Expr::parse("1 +").is_err());
        assert!(Expr::parse("foo(1)").is_err());
        assert!(Expr::parse("q").is_err());
        assert!(Expr::parse("(1").is_err());
        assert!(Expr::parse("1 $ 2").is_err());
    }

    #[test]
    fn symbolic_derivatives_match_finite_differences() {
        let cases = [
            "|x| - (1 + 0.5*t)",
            "x1^2 * x2 - sin(t) * x3",
            "sqrt(x1^2 + 2*x2^2) / (1 + t^2)",
            "exp(-x1) * cos(x2 * t) + |x3 - 0.1|",
            "x1 ^ (1 + t)",
        ];
        let x = [0.7, -0.4, 0.9];
        let t = 0.3;
        let h = 1e-6;
        for src in cases {
            let e = Expr::parse(src).unwrap();
            for k in 0..3 {
                let d = e.diff(Var::Coord(k)).eval(&x, t);
                let mut xp = x;
                let mut xm = x;
                xp[k] += h;
                xm[k] -= h;
                let fd = (e.eval(&xp, t) - e.eval(&xm, t)) / (2.0 * h);
                assert!((d - fd).abs() < 1e-7, "{src} d/dx{k}: {d} vs {fd}");
            }
            let dt = e.diff(Var::Time).eval(&x, t);
            let fd = (e.eval(&x, t + h) - e.eval(&x, t - h)) / (2.0 * h);
            assert!((dt - fd).abs() < 1e-7, "{src} d/dt: {dt} vs {fd}");
        }
    }

    #[test]
    fn max_coord_counts_dimensions() {
        assert_eq!(Expr::parse("x3 + t").unwrap().max_coord(), 3);
        assert_eq!(Expr::parse("|x| - 1").unwrap().max_coord(), 0);
    }
}
