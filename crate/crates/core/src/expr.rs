//! A small expression language for symbol profiles.
//!
//! ```text
//! expr  := term (('+' | '-') term)*
//! term  := unary (('*' | '/') unary)*
//! unary := ('-' | '+') unary | power
//! power := atom ('^' unary)?
//! atom  := number | constant | variable | func '(' expr ')' | '(' expr ')'
//! ```
//!
//! Variables are `r1..rm` (group radii), `s1..sk` (moduli inside a group) and
//! `t1..tk` (unit-modulus phases). Constants are `pi` and `i`. Functions are
//! `exp`, `conj`, `abs`, `sqrt`, `sin`, `cos`, `re` and `im`. `^` is right
//! associative and binds tighter than unary minus, so `-x^2 = -(x^2)`.

use std::fmt;

use crate::{Error, Result, C64};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum VarKind {
    R,
    S,
    T,
    /// Block coordinates `k1..km` of a diagonal coefficient.
    K,
}

/// A variable reference; `index` is zero-based (`s1` has index 0).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Var {
    pub kind: VarKind,
    pub index: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Exp,
    Conj,
    Abs,
    Sqrt,
    Sin,
    Cos,
    Re,
    Im,
}

impl Func {
    fn from_name(name: &str) -> Option<Func> {
        Some(match name {
            "exp" => Func::Exp,
            "conj" => Func::Conj,
            "abs" => Func::Abs,
            "sqrt" => Func::Sqrt,
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "re" => Func::Re,
            "im" => Func::Im,
            _ => return None,
        })
    }

    fn name(self) -> &'static str {
        match self {
            Func::Exp => "exp",
            Func::Conj => "conj",
            Func::Abs => "abs",
            Func::Sqrt => "sqrt",
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Re => "re",
            Func::Im => "im",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

/// Parsed syntax tree.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(C64),
    Var(Var),
    Neg(Box<Expr>),
    Bin(BinOp, Box<Expr>, Box<Expr>),
    Call(Func, Box<Expr>),
}

/// Variable bindings for evaluation. Unset slices leave their variables
/// unbound.
#[derive(Debug, Clone, Copy, Default)]
pub struct Env<'a> {
    pub r: &'a [f64],
    pub s: &'a [f64],
    pub t: &'a [C64],
    pub k: &'a [f64],
}

impl Expr {
    pub fn eval(&self, env: &Env) -> Result<C64> {
        Ok(match self {
            Expr::Num(v) => *v,
            Expr::Var(v) => {
                let found = match v.kind {
                    VarKind::R => env.r.get(v.index).map(|&x| C64::new(x, 0.0)),
                    VarKind::S => env.s.get(v.index).map(|&x| C64::new(x, 0.0)),
                    VarKind::T => env.t.get(v.index).copied(),
                    VarKind::K => env.k.get(v.index).map(|&x| C64::new(x, 0.0)),
                };
                found.ok_or_else(|| Error::UnboundVariable(v.to_string()))?
            }
            Expr::Neg(e) => -e.eval(env)?,
            Expr::Bin(op, a, b) => {
                let x = a.eval(env)?;
                let y = b.eval(env)?;
                match op {
                    BinOp::Add => x + y,
                    BinOp::Sub => x - y,
                    BinOp::Mul => x * y,
                    BinOp::Div => x / y,
                    BinOp::Pow => pow(x, y),
                }
            }
            Expr::Call(f, e) => {
                let x = e.eval(env)?;
                match f {
                    Func::Exp => x.exp(),
                    Func::Conj => x.conj(),
                    Func::Abs => C64::new(x.norm(), 0.0),
                    Func::Sqrt => {
                        if x.im == 0.0 && x.re >= 0.0 {
                            C64::new(x.re.sqrt(), 0.0)
                        } else {
                            x.sqrt()
                        }
                    }
                    Func::Sin => x.sin(),
                    Func::Cos => x.cos(),
                    Func::Re => C64::new(x.re, 0.0),
                    Func::Im => C64::new(x.im, 0.0),
                }
            }
        })
    }

    /// Collects every variable referenced, sorted and deduplicated.
    pub fn variables(&self) -> Vec<Var> {
        let mut out = Vec::new();
        self.collect_vars(&mut out);
        out.sort();
        out.dedup();
        out
    }

    fn collect_vars(&self, out: &mut Vec<Var>) {
        match self {
            Expr::Num(_) => {}
            Expr::Var(v) => out.push(*v),
            Expr::Neg(e) | Expr::Call(_, e) => e.collect_vars(out),
            Expr::Bin(_, a, b) => {
                a.collect_vars(out);
                b.collect_vars(out);
            }
        }
    }

    pub fn uses_kind(&self, kind: VarKind) -> bool {
        self.variables().iter().any(|v| v.kind == kind)
    }
}

fn pow(x: C64, y: C64) -> C64 {
    if y.im == 0.0 {
        let e = y.re;
        if e.fract() == 0.0 && e.abs() <= i32::MAX as f64 {
            return x.powi(e as i32);
        }
        if x.im == 0.0 && x.re >= 0.0 {
            return C64::new(x.re.powf(e), 0.0);
        }
        return x.powf(e);
    }
    x.powc(y)
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let c = match self.kind {
            VarKind::R => 'r',
            VarKind::S => 's',
            VarKind::T => 't',
            VarKind::K => 'k',
        };
        write!(f, "{c}{}", self.index + 1)
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(v) if v.im == 0.0 => write!(f, "{}", v.re),
            Expr::Num(v) => write!(f, "({}+{}*i)", v.re, v.im),
            Expr::Var(v) => write!(f, "{v}"),
            Expr::Neg(e) => write!(f, "(-{e})"),
            Expr::Bin(op, a, b) => {
                let s = match op {
                    BinOp::Add => "+",
                    BinOp::Sub => "-",
                    BinOp::Mul => "*",
                    BinOp::Div => "/",
                    BinOp::Pow => "^",
                };
                write!(f, "({a}{s}{b})")
            }
            Expr::Call(func, e) => write!(f, "{}({e})", func.name()),
        }
    }
}

/// Parses `text` into a syntax tree.
pub fn parse(text: &str) -> Result<Expr> {
    let mut p = Parser { src: text.as_bytes(), pos: 0 };
    p.skip_ws();
    if p.pos == p.src.len() {
        return Err(Error::Syntax { offset: 0, message: "empty expression".into() });
    }
    let e = p.expr()?;
    p.skip_ws();
    if p.pos != p.src.len() {
        return Err(p.error("unexpected trailing input"));
    }
    Ok(e)
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl Parser<'_> {
    fn error(&self, message: &str) -> Error {
        Error::Syntax { offset: self.pos, message: message.into() }
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

    fn expect(&mut self, c: u8) -> Result<()> {
        if self.peek() == Some(c) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.error(&format!("expected `{}`", c as char)))
        }
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        while let Some(c @ (b'+' | b'-')) = self.peek() {
            self.pos += 1;
            let rhs = self.term()?;
            let op = if c == b'+' { BinOp::Add } else { BinOp::Sub };
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.unary()?;
        while let Some(c @ (b'*' | b'/')) = self.peek() {
            self.pos += 1;
            let rhs = self.unary()?;
            let op = if c == b'*' { BinOp::Mul } else { BinOp::Div };
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr> {
        match self.peek() {
            Some(b'-') => {
                self.pos += 1;
                Ok(Expr::Neg(Box::new(self.unary()?)))
            }
            Some(b'+') => {
                self.pos += 1;
                self.unary()
            }
            _ => self.power(),
        }
    }

    fn power(&mut self) -> Result<Expr> {
        let base = self.atom()?;
        if self.peek() == Some(b'^') {
            self.pos += 1;
            let exp = self.unary()?;
            return Ok(Expr::Bin(BinOp::Pow, Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr> {
        match self.peek() {
            None => Err(self.error("unexpected end of input")),
            Some(b'(') => {
                self.pos += 1;
                let e = self.expr()?;
                self.expect(b')')?;
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() => self.identifier(),
            Some(_) => Err(self.error("unexpected character")),
        }
    }

    fn number(&mut self) -> Result<Expr> {
        let start = self.pos;
        while self.pos < self.src.len() && (self.src[self.pos].is_ascii_digit() || self.src[self.pos] == b'.') {
            self.pos += 1;
        }
        if self.pos < self.src.len() && matches!(self.src[self.pos], b'e' | b'E') {
            let save = self.pos;
            self.pos += 1;
            if self.pos < self.src.len() && matches!(self.src[self.pos], b'+' | b'-') {
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
            .map(|v| Expr::Num(C64::new(v, 0.0)))
            .map_err(|_| Error::Syntax { offset: start, message: format!("malformed number `{text}`") })
    }

    fn identifier(&mut self) -> Result<Expr> {
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_alphanumeric() {
            self.pos += 1;
        }
        let name = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii");
        match name {
            "pi" => return Ok(Expr::Num(C64::new(std::f64::consts::PI, 0.0))),
            "i" => return Ok(Expr::Num(C64::new(0.0, 1.0))),
            _ => {}
        }
        if let Some(f) = Func::from_name(name) {
            if self.peek() != Some(b'(') {
                return Err(self.error(&format!("expected `(` after `{name}`")));
            }
            self.pos += 1;
            let arg = self.expr()?;
            self.expect(b')')?;
            return Ok(Expr::Call(f, Box::new(arg)));
        }
        let unknown = || Error::UnknownIdentifier { name: name.to_string(), offset: start };
        let kind = match name.as_bytes()[0] {
            b'r' => VarKind::R,
            b's' => VarKind::S,
            b't' => VarKind::T,
            b'k' => VarKind::K,
            _ => return Err(unknown()),
        };
        let digits = &name[1..];
        if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) || digits.starts_with('0') {
            return Err(unknown());
        }
        let index: usize = digits.parse().map_err(|_| unknown())?;
        Ok(Expr::Var(Var { kind, index: index - 1 }))
    }
}
