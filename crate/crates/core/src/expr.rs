//! Closed-form expressions for coefficients and potentials.
//!
//! Grammar: `+ - * / ^`, unary minus, parentheses, numeric literals, the
//! constant `pi`, variables `x1..xd` (plus `x` when d = 1), the semiclassical
//! parameter `eps`, and the functions `exp log sqrt sin cos tan sinh cosh tanh abs`.

use std::fmt;
use std::sync::Arc;

use crate::poly::{Poly, PolyRing};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Func {
    Exp,
    Log,
    Sqrt,
    Sin,
    Cos,
    Tan,
    Sinh,
    Cosh,
    Tanh,
    Abs,
    Sign,
}

impl Func {
    fn from_name(s: &str) -> Option<Func> {
        Some(match s {
            "exp" => Func::Exp,
            "log" | "ln" => Func::Log,
            "sqrt" => Func::Sqrt,
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "tan" => Func::Tan,
            "sinh" => Func::Sinh,
            "cosh" => Func::Cosh,
            "tanh" => Func::Tanh,
            "abs" => Func::Abs,
            "sign" => Func::Sign,
            _ => return None,
        })
    }

    fn name(self) -> &'static str {
        match self {
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sqrt => "sqrt",
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Tan => "tan",
            Func::Sinh => "sinh",
            Func::Cosh => "cosh",
            Func::Tanh => "tanh",
            Func::Abs => "abs",
            Func::Sign => "sign",
        }
    }

    fn apply(self, v: f64) -> f64 {
        match self {
            Func::Exp => v.exp(),
            Func::Log => v.ln(),
            Func::Sqrt => v.sqrt(),
            Func::Sin => v.sin(),
            Func::Cos => v.cos(),
            Func::Tan => v.tan(),
            Func::Sinh => v.sinh(),
            Func::Cosh => v.cosh(),
            Func::Tanh => v.tanh(),
            Func::Abs => v.abs(),
            Func::Sign => {
                if v > 0.0 {
                    1.0
                } else if v < 0.0 {
                    -1.0
                } else {
                    0.0
                }
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Const(f64),
    Var(usize),
    Eps,
    Neg(Arc<Expr>),
    Add(Arc<Expr>, Arc<Expr>),
    Sub(Arc<Expr>, Arc<Expr>),
    Mul(Arc<Expr>, Arc<Expr>),
    Div(Arc<Expr>, Arc<Expr>),
    Pow(Arc<Expr>, Arc<Expr>),
    Call(Func, Arc<Expr>),
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ExprError {
    #[error("parse error at byte {pos}: {msg}")]
    Parse { pos: usize, msg: String },
    #[error("expression is not analytic at the expansion point: {0}")]
    NotAnalytic(String),
}

impl Expr {
    pub fn parse(src: &str, dim: usize) -> Result<Expr, ExprError> {
        let mut p = Parser {
            src: src.as_bytes(),
            pos: 0,
            dim,
        };
        let e = p.expr()?;
        p.skip_ws();
        if p.pos != p.src.len() {
            return Err(p.err("trailing input"));
        }
        Ok(e)
    }

    pub fn constant(c: f64) -> Expr {
        Expr::Const(c)
    }

    pub fn as_const(&self) -> Option<f64> {
        match self {
            Expr::Const(c) => Some(*c),
            _ => None,
        }
    }

    /// True when the expression depends on neither `x` nor `eps`.
    pub fn is_constant(&self) -> bool {
        match self {
            Expr::Const(_) => true,
            Expr::Var(_) | Expr::Eps => false,
            Expr::Neg(a) | Expr::Call(_, a) => a.is_constant(),
            Expr::Add(a, b)
            | Expr::Sub(a, b)
            | Expr::Mul(a, b)
            | Expr::Div(a, b)
            | Expr::Pow(a, b) => a.is_constant() && b.is_constant(),
        }
    }

    pub fn uses_eps(&self) -> bool {
        match self {
            Expr::Eps => true,
            Expr::Const(_) | Expr::Var(_) => false,
            Expr::Neg(a) | Expr::Call(_, a) => a.uses_eps(),
            Expr::Add(a, b)
            | Expr::Sub(a, b)
            | Expr::Mul(a, b)
            | Expr::Div(a, b)
            | Expr::Pow(a, b) => a.uses_eps() || b.uses_eps(),
        }
    }

    pub fn eval(&self, x: &[f64], eps: f64) -> f64 {
        match self {
            Expr::Const(c) => *c,
            Expr::Var(i) => x[*i],
            Expr::Eps => eps,
            Expr::Neg(a) => -a.eval(x, eps),
            Expr::Add(a, b) => a.eval(x, eps) + b.eval(x, eps),
            Expr::Sub(a, b) => a.eval(x, eps) - b.eval(x, eps),
            Expr::Mul(a, b) => a.eval(x, eps) * b.eval(x, eps),
            Expr::Div(a, b) => a.eval(x, eps) / b.eval(x, eps),
            Expr::Pow(a, b) => {
                let base = a.eval(x, eps);
                match b.as_const() {
                    Some(n) if n.fract() == 0.0 && n.abs() < 1024.0 => base.powi(n as i32),
                    _ => base.powf(b.eval(x, eps)),
                }
            }
            Expr::Call(f, a) => f.apply(a.eval(x, eps)),
        }
    }

    /// Symbolic partial derivative in variable `var`.
    pub fn diff(&self, var: usize) -> Expr {
        use Expr::*;
        match self {
            Const(_) | Eps => Const(0.0),
            Var(i) => Const(if *i == var { 1.0 } else { 0.0 }),
            Neg(a) => neg(a.diff(var)),
            Add(a, b) => add(a.diff(var), b.diff(var)),
            Sub(a, b) => sub(a.diff(var), b.diff(var)),
            Mul(a, b) => add(
                mul(a.diff(var), (**b).clone()),
                mul((**a).clone(), b.diff(var)),
            ),
            Div(a, b) => div(
                sub(
                    mul(a.diff(var), (**b).clone()),
                    mul((**a).clone(), b.diff(var)),
                ),
                pow((**b).clone(), Const(2.0)),
            ),
            Pow(a, b) => {
                if b.is_constant() && !b.uses_eps() {
                    let n = b.eval(&[], 0.0);
                    mul(
                        mul(Const(n), pow((**a).clone(), Const(n - 1.0))),
                        a.diff(var),
                    )
                } else {
                    // d(a^b) = a^b (b' ln a + b a'/a)
                    mul(
                        self.clone(),
                        add(
                            mul(b.diff(var), call(Func::Log, (**a).clone())),
                            div(mul((**b).clone(), a.diff(var)), (**a).clone()),
                        ),
                    )
                }
            }
            Call(f, a) => {
                let inner = (**a).clone();
                let outer = match f {
                    Func::Exp => call(Func::Exp, inner),
                    Func::Log => div(Const(1.0), inner),
                    Func::Sqrt => div(Const(0.5), call(Func::Sqrt, inner)),
                    Func::Sin => call(Func::Cos, inner),
                    Func::Cos => neg(call(Func::Sin, inner)),
                    Func::Tan => div(Const(1.0), pow(call(Func::Cos, inner), Const(2.0))),
                    Func::Sinh => call(Func::Cosh, inner),
                    Func::Cosh => call(Func::Sinh, inner),
                    Func::Tanh => sub(Const(1.0), pow(call(Func::Tanh, inner), Const(2.0))),
                    Func::Abs => call(Func::Sign, inner),
                    Func::Sign => Const(0.0),
                };
                mul(outer, a.diff(var))
            }
        }
    }

    /// Replaces every variable `x_i` by `f(i)`.
    pub fn substitute(&self, f: &dyn Fn(usize) -> Expr) -> Expr {
        use Expr::*;
        match self {
            Const(_) | Eps => self.clone(),
            Var(i) => f(*i),
            Neg(a) => neg(a.substitute(f)),
            Add(a, b) => add(a.substitute(f), b.substitute(f)),
            Sub(a, b) => sub(a.substitute(f), b.substitute(f)),
            Mul(a, b) => mul(a.substitute(f), b.substitute(f)),
            Div(a, b) => div(a.substitute(f), b.substitute(f)),
            Pow(a, b) => pow(a.substitute(f), b.substitute(f)),
            Call(g, a) => call(*g, a.substitute(f)),
        }
    }

    /// Taylor expansion at x = 0 in the truncated ring, with `eps` frozen.
    pub fn taylor(&self, ring: &Arc<PolyRing>, eps: f64) -> Result<Poly, ExprError> {
        use Expr::*;
        let na = |what: &str| ExprError::NotAnalytic(format!("{what} in `{self}`"));
        Ok(match self {
            Const(c) => Poly::constant(ring, *c),
            Eps => Poly::constant(ring, eps),
            Var(i) => Poly::var(ring, *i),
            Neg(a) => a.taylor(ring, eps)?.scale(-1.0),
            Add(a, b) => a.taylor(ring, eps)?.add(&b.taylor(ring, eps)?),
            Sub(a, b) => a.taylor(ring, eps)?.sub(&b.taylor(ring, eps)?),
            Mul(a, b) => a.taylor(ring, eps)?.mul(&b.taylor(ring, eps)?),
            Div(a, b) => {
                let d = b
                    .taylor(ring, eps)?
                    .recip()
                    .ok_or_else(|| na("division by zero"))?;
                a.taylor(ring, eps)?.mul(&d)
            }
            Pow(a, b) => {
                let base = a.taylor(ring, eps)?;
                if b.is_constant() {
                    base.powf(b.eval(&[], eps))
                        .ok_or_else(|| na("power of nonpositive base"))?
                } else {
                    let lb = base.ln().ok_or_else(|| na("log of nonpositive base"))?;
                    lb.mul(&b.taylor(ring, eps)?).exp()
                }
            }
            Call(f, a) => {
                let p = a.taylor(ring, eps)?;
                match f {
                    Func::Exp => p.exp(),
                    Func::Log => p.ln().ok_or_else(|| na("log of nonpositive value"))?,
                    Func::Sqrt => p.powf(0.5).ok_or_else(|| na("sqrt at zero"))?,
                    Func::Sin => p.sin(),
                    Func::Cos => p.cos(),
                    Func::Tan => p.sin().mul(&p.cos().recip().ok_or_else(|| na("tan pole"))?),
                    Func::Sinh => p.sinh(),
                    Func::Cosh => p.cosh(),
                    Func::Tanh => p.sinh().mul(&p.cosh().recip().expect("cosh is positive")),
                    Func::Abs => {
                        let c = p.constant_term();
                        if c == 0.0 {
                            return Err(na("abs at zero"));
                        }
                        p.scale(c.signum())
                    }
                    Func::Sign => {
                        let c = p.constant_term();
                        if c == 0.0 {
                            return Err(na("sign at zero"));
                        }
                        Poly::constant(ring, c.signum())
                    }
                }
            }
        })
    }
}

fn is_zero(e: &Expr) -> bool {
    e.as_const() == Some(0.0)
}

fn is_one(e: &Expr) -> bool {
    e.as_const() == Some(1.0)
}

pub fn neg(a: Expr) -> Expr {
    match a {
        Expr::Const(c) => Expr::Const(-c),
        Expr::Neg(inner) => (*inner).clone(),
        other => Expr::Neg(Arc::new(other)),
    }
}

pub fn add(a: Expr, b: Expr) -> Expr {
    match (a.as_const(), b.as_const()) {
        (Some(x), Some(y)) => Expr::Const(x + y),
        _ if is_zero(&a) => b,
        _ if is_zero(&b) => a,
        _ => Expr::Add(Arc::new(a), Arc::new(b)),
    }
}

pub fn sub(a: Expr, b: Expr) -> Expr {
    match (a.as_const(), b.as_const()) {
        (Some(x), Some(y)) => Expr::Const(x - y),
        _ if is_zero(&b) => a,
        _ if is_zero(&a) => neg(b),
        _ => Expr::Sub(Arc::new(a), Arc::new(b)),
    }
}

pub fn mul(a: Expr, b: Expr) -> Expr {
    match (a.as_const(), b.as_const()) {
        (Some(x), Some(y)) => Expr::Const(x * y),
        _ if is_zero(&a) || is_zero(&b) => Expr::Const(0.0),
        _ if is_one(&a) => b,
        _ if is_one(&b) => a,
        _ => Expr::Mul(Arc::new(a), Arc::new(b)),
    }
}

pub fn div(a: Expr, b: Expr) -> Expr {
    match (a.as_const(), b.as_const()) {
        (Some(x), Some(y)) if y != 0.0 => Expr::Const(x / y),
        _ if is_zero(&a) => Expr::Const(0.0),
        _ if is_one(&b) => a,
        _ => Expr::Div(Arc::new(a), Arc::new(b)),
    }
}

pub fn pow(a: Expr, b: Expr) -> Expr {
    match (a.as_const(), b.as_const()) {
        (Some(x), Some(y)) => Expr::Const(x.powf(y)),
        (_, Some(y)) if y == 0.0 => Expr::Const(1.0),
        (_, Some(y)) if y == 1.0 => a,
        _ => Expr::Pow(Arc::new(a), Arc::new(b)),
    }
}

pub fn call(f: Func, a: Expr) -> Expr {
    match a.as_const() {
        Some(c) => Expr::Const(f.apply(c)),
        None => Expr::Call(f, Arc::new(a)),
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Const(c) => {
                if *c < 0.0 {
                    write!(f, "({c:?})")
                } else {
                    write!(f, "{c:?}")
                }
            }
            Expr::Var(i) => write!(f, "x{}", i + 1),
            Expr::Eps => write!(f, "eps"),
            Expr::Neg(a) => write!(f, "(-{a})"),
            Expr::Add(a, b) => write!(f, "({a} + {b})"),
            Expr::Sub(a, b) => write!(f, "({a} - {b})"),
            Expr::Mul(a, b) => write!(f, "({a} * {b})"),
            Expr::Div(a, b) => write!(f, "({a} / {b})"),
            Expr::Pow(a, b) => write!(f, "({a} ^ {b})"),
            Expr::Call(g, a) => write!(f, "{}({a})", g.name()),
        }
    }
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
    dim: usize,
}

impl Parser<'_> {
    fn err(&self, msg: &str) -> ExprError {
        ExprError::Parse {
            pos: self.pos,
            msg: msg.to_string(),
        }
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

    fn expr(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.term()?;
        loop {
            match self.peek() {
                Some(b'+') => {
                    self.pos += 1;
                    lhs = Expr::Add(Arc::new(lhs), Arc::new(self.term()?));
                }
                Some(b'-') => {
                    self.pos += 1;
                    lhs = Expr::Sub(Arc::new(lhs), Arc::new(self.term()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.unary()?;
        loop {
            match self.peek() {
                Some(b'*') => {
                    self.pos += 1;
                    lhs = Expr::Mul(Arc::new(lhs), Arc::new(self.unary()?));
                }
                Some(b'/') => {
                    self.pos += 1;
                    lhs = Expr::Div(Arc::new(lhs), Arc::new(self.unary()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn unary(&mut self) -> Result<Expr, ExprError> {
        match self.peek() {
            Some(b'-') => {
                self.pos += 1;
                Ok(Expr::Neg(Arc::new(self.unary()?)))
            }
            Some(b'+') => {
                self.pos += 1;
                self.unary()
            }
            _ => self.power(),
        }
    }

    fn power(&mut self) -> Result<Expr, ExprError> {
        let base = self.atom()?;
        if self.peek() == Some(b'^') {
            self.pos += 1;
            let exp = self.unary()?;
            return Ok(Expr::Pow(Arc::new(base), Arc::new(exp)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr, ExprError> {
        match self.peek() {
            None => Err(self.err("unexpected end of input")),
            Some(b'(') => {
                self.pos += 1;
                let e = self.expr()?;
                if self.peek() != Some(b')') {
                    return Err(self.err("expected `)`"));
                }
                self.pos += 1;
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() || c == b'_' => self.ident(),
            Some(_) => Err(self.err("unexpected character")),
        }
    }

    fn number(&mut self) -> Result<Expr, ExprError> {
        let start = self.pos;
        while self.pos < self.src.len()
            && (self.src[self.pos].is_ascii_digit() || self.src[self.pos] == b'.')
        {
            self.pos += 1;
        }
        if self.pos < self.src.len() && (self.src[self.pos] == b'e' || self.src[self.pos] == b'E') {
            let save = self.pos;
            self.pos += 1;
            if self.pos < self.src.len()
                && (self.src[self.pos] == b'+' || self.src[self.pos] == b'-')
            {
                self.pos += 1;
            }
            if self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
                while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
                    self.pos += 1;
                }
            } else {
                self.pos = save;
            }
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii");
        text.parse::<f64>()
            .map(Expr::Const)
            .map_err(|_| ExprError::Parse {
                pos: start,
                msg: format!("bad number `{text}`"),
            })
    }

    fn ident(&mut self) -> Result<Expr, ExprError> {
        let start = self.pos;
        while self.pos < self.src.len()
            && (self.src[self.pos].is_ascii_alphanumeric() || self.src[self.pos] == b'_')
        {
            self.pos += 1;
        }
        let name = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii");
        if let Some(f) = Func::from_name(name) {
            if self.peek() != Some(b'(') {
                return Err(self.err("expected `(` after function name"));
            }
            self.pos += 1;
            let arg = self.expr()?;
            if self.peek() != Some(b')') {
                return Err(self.err("expected `)`"));
            }
            self.pos += 1;
            return Ok(Expr::Call(f, Arc::new(arg)));
        }
        match name {
            "eps" => Ok(Expr::Eps),
            "pi" => Ok(Expr::Const(std::f64::consts::PI)),
            "x" if self.dim == 1 => Ok(Expr::Var(0)),
            _ => {
                if let Some(rest) = name.strip_prefix('x') {
                    if let Ok(k) = rest.parse::<usize>() {
                        if k >= 1 && k <= self.dim {
                            return Ok(Expr::Var(k - 1));
                        }
                        return Err(ExprError::Parse {
                            pos: start,
                            msg: format!(
                                "variable `{name}` out of range for dimension {}",
                                self.dim
                            ),
                        });
                    }
                }
                Err(ExprError::Parse {
                    pos: start,
                    msg: format!("unknown identifier `{name}`"),
                })
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn p(s: &str, d: usize) -> Expr {
        Expr::parse(s, d).unwrap()
    }

    #[test]
    fn precedence_and_associativity() {
        assert_eq!(p("1 + 2 * 3", 1).eval(&[0.0], 0.0), 7.0);
        assert_eq!(p("2 ^ 3 ^ 2", 1).eval(&[0.0], 0.0), 512.0);
        assert_eq!(p("-2 ^ 2", 1).eval(&[0.0], 0.0), -4.0);
        assert_eq!(p("8 / 4 / 2", 1).eval(&[0.0], 0.0), 1.0);
        assert_eq!(p("1.5e-1 * 2", 1).eval(&[0.0], 0.0), 0.3);
    }

    #[test]
    fn variables_and_eps() {
        let e = p("x1^2 + 3*x2 - eps", 2);
        assert_eq!(e.eval(&[2.0, 1.0], 0.5), 6.5);
        assert_eq!(p("x/2", 1).eval(&[3.0], 0.0), 1.5);
        assert!(Expr::parse("x3", 2).is_err());
        assert!(Expr::parse("x", 2).is_err());
        assert!(Expr::parse("foo(1)", 1).is_err());
        assert!(Expr::parse("1 +", 1).is_err());
        assert!(Expr::parse("(1", 1).is_err());
    }

    #[test]
    fn display_roundtrip() {
        let e = p("cosh(x1) * -0.25 + exp(-x2^2/2) / (1 + x1)", 2);
        let back = Expr::parse(&e.to_string(), 2).unwrap();
        let x = [0.3, -0.7];
        assert!((e.eval(&x, 0.0) - back.eval(&x, 0.0)).abs() < 1e-15);
    }

    #[test]
    fn taylor_of_cosh_potential() {
        let ring = PolyRing::new(1, 6);
        let t = p("cosh(x) - 1", 1).taylor(&ring, 0.0).unwrap();
        assert!((t.coef[2] - 0.5).abs() < 1e-15);
        assert!((t.coef[4] - 1.0 / 24.0).abs() < 1e-15);
        assert!(p("abs(x)", 1).taylor(&ring, 0.0).is_err());
    }

    proptest! {
        #[test]
        fn symbolic_derivative_matches_central_difference(
            x1 in -1.0f64..1.0, x2 in -1.0f64..1.0
        ) {
            let e = p("exp(-x1^2) * cos(2*x2) + x1^3*x2 / (2 + x2^2) + sqrt(1 + x1^2) + tanh(x2)", 2);
            let x = [x1, x2];
            for var in 0..2 {
                let h = 1e-5;
                let mut xp = x; xp[var] += h;
                let mut xm = x; xm[var] -= h;
                let fd = (e.eval(&xp, 0.0) - e.eval(&xm, 0.0)) / (2.0 * h);
                let an = e.diff(var).eval(&x, 0.0);
                prop_assert!((fd - an).abs() < 1e-8 * (1.0 + an.abs()));
            }
        }

        #[test]
        fn taylor_agrees_with_evaluation_near_zero(x1 in -0.05f64..0.05, x2 in -0.05f64..0.05) {
            let e = p("exp(x1 - x2) * cosh(x1*x2 + 0.3) + log(2 + x1) / (1 + x2^2)", 2);
            let ring = PolyRing::new(2, 8);
            let t = e.taylor(&ring, 0.0).unwrap();
            let x = [x1, x2];
            prop_assert!((t.eval(&x) - e.eval(&x, 0.0)).abs() < 1e-11);
        }
    }
}
