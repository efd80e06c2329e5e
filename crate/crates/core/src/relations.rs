//! Weingarten relations: parsing, canonical forms and evaluation of r₂ = F(r₁).

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ext::ExtReal;
use crate::numeric::root::bisect;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Var {
    R1,
    R2,
    K1,
    K2,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Func {
    Sin,
    Cos,
    Ln,
    Exp,
    Abs,
    Sqrt,
}

impl Func {
    fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Ln => "ln",
            Func::Exp => "exp",
            Func::Abs => "abs",
            Func::Sqrt => "sqrt",
        }
    }

    fn from_name(s: &str) -> Option<Func> {
        Some(match s {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "ln" => Func::Ln,
            "exp" => Func::Exp,
            "abs" => Func::Abs,
            "sqrt" => Func::Sqrt,
            _ => return None,
        })
    }

    fn apply(self, x: f64) -> f64 {
        match self {
            Func::Sin => x.sin(),
            Func::Cos => x.cos(),
            Func::Ln => x.ln(),
            Func::Exp => x.exp(),
            Func::Abs => x.abs(),
            Func::Sqrt => x.sqrt(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
}

/// Expression tree. Relations of the explicit family use only `Var::R1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Expr {
    Num(f64),
    Var(Var),
    Neg(Box<Expr>),
    Bin(BinOp, Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, f64),
    Call(Func, Box<Expr>),
}

fn bin(op: BinOp, a: Expr, b: Expr) -> Expr {
    Expr::Bin(op, Box::new(a), Box::new(b))
}

impl Expr {
    /// IEEE evaluation; infinities propagate, NaN is reported by callers.
    pub fn eval_raw(&self, u: f64) -> f64 {
        match self {
            Expr::Num(c) => *c,
            Expr::Var(_) => u,
            Expr::Neg(a) => -a.eval_raw(u),
            Expr::Bin(op, a, b) => {
                let (x, y) = (a.eval_raw(u), b.eval_raw(u));
                match op {
                    BinOp::Add => x + y,
                    BinOp::Sub => x - y,
                    BinOp::Mul => x * y,
                    BinOp::Div => x / y,
                }
            }
            Expr::Pow(a, e) => a.eval_raw(u).powf(*e),
            Expr::Call(f, a) => f.apply(a.eval_raw(u)),
        }
    }

    /// Value at `u`; NaN becomes a domain error, ±∞ the point at infinity.
    pub fn eval(&self, u: f64) -> Result<ExtReal> {
        let v = self.eval_raw(u);
        if v.is_nan() {
            return Err(Error::Domain(format!("expression undefined at r1 = {u}")));
        }
        Ok(ExtReal::from(v))
    }

    /// Symbolic derivative with respect to the (single) variable.
    pub fn derivative(&self) -> Expr {
        use Expr::*;
        match self {
            Num(_) => Num(0.0),
            Var(_) => Num(1.0),
            Neg(a) => Neg(Box::new(a.derivative())),
            Bin(op, a, b) => {
                let (da, db) = (a.derivative(), b.derivative());
                match op {
                    BinOp::Add => bin(BinOp::Add, da, db),
                    BinOp::Sub => bin(BinOp::Sub, da, db),
                    BinOp::Mul => bin(BinOp::Add, bin(BinOp::Mul, da, (**b).clone()), bin(BinOp::Mul, (**a).clone(), db)),
                    BinOp::Div => bin(
                        BinOp::Div,
                        bin(BinOp::Sub, bin(BinOp::Mul, da, (**b).clone()), bin(BinOp::Mul, (**a).clone(), db)),
                        Pow(b.clone(), 2.0),
                    ),
                }
            }
            Pow(a, e) => bin(BinOp::Mul, bin(BinOp::Mul, Num(*e), Pow(a.clone(), e - 1.0)), a.derivative()),
            Call(f, a) => {
                let inner = (**a).clone();
                let outer = match f {
                    Func::Sin => Call(Func::Cos, a.clone()),
                    Func::Cos => Neg(Box::new(Call(Func::Sin, a.clone()))),
                    Func::Ln => bin(BinOp::Div, Num(1.0), inner),
                    Func::Exp => Call(Func::Exp, a.clone()),
                    Func::Abs => bin(BinOp::Div, inner.clone(), Call(Func::Abs, a.clone())),
                    Func::Sqrt => bin(BinOp::Div, Num(0.5), Call(Func::Sqrt, a.clone())),
                };
                bin(BinOp::Mul, outer, a.derivative())
            }
        }
    }

    fn vars(&self, out: &mut Vec<Var>) {
        match self {
            Expr::Num(_) => {}
            Expr::Var(v) => {
                if !out.contains(v) {
                    out.push(*v)
                }
            }
            Expr::Neg(a) | Expr::Pow(a, _) | Expr::Call(_, a) => a.vars(out),
            Expr::Bin(_, a, b) => {
                a.vars(out);
                b.vars(out);
            }
        }
    }

    fn only(&self, v: Var) -> bool {
        let mut vs = Vec::new();
        self.vars(&mut vs);
        vs.iter().all(|x| *x == v)
    }

    pub fn substitute(&self, v: Var, with: &Expr) -> Expr {
        match self {
            Expr::Var(x) if *x == v => with.clone(),
            Expr::Num(_) | Expr::Var(_) => self.clone(),
            Expr::Neg(a) => Expr::Neg(Box::new(a.substitute(v, with))),
            Expr::Pow(a, e) => Expr::Pow(Box::new(a.substitute(v, with)), *e),
            Expr::Call(f, a) => Expr::Call(*f, Box::new(a.substitute(v, with))),
            Expr::Bin(op, a, b) => bin(*op, a.substitute(v, with), b.substitute(v, with)),
        }
    }

    fn prec(&self) -> u8 {
        match self {
            Expr::Bin(BinOp::Add | BinOp::Sub, ..) => 1,
            Expr::Bin(..) => 2,
            Expr::Neg(_) => 3,
            Expr::Pow(..) => 4,
            _ => 5,
        }
    }
}

fn write_child(f: &mut fmt::Formatter<'_>, e: &Expr, min_prec: u8) -> fmt::Result {
    if e.prec() < min_prec {
        write!(f, "({e})")
    } else {
        write!(f, "{e}")
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(c) if *c < 0.0 || (*c == 0.0 && c.is_sign_negative()) => write!(f, "(-{})", -c),
            Expr::Num(c) => write!(f, "{c}"),
            Expr::Var(v) => write!(f, "{}", var_name(*v)),
            Expr::Neg(a) => {
                write!(f, "-")?;
                write_child(f, a, 3)
            }
            Expr::Bin(op, a, b) => {
                let (sym, p) = match op {
                    BinOp::Add => ("+", 1),
                    BinOp::Sub => ("-", 1),
                    BinOp::Mul => ("*", 2),
                    BinOp::Div => ("/", 2),
                };
                write_child(f, a, p)?;
                write!(f, " {sym} ")?;
                write_child(f, b, p + 1)
            }
            Expr::Pow(a, e) => {
                write_child(f, a, 5)?;
                write!(f, "^{e}")
            }
            Expr::Call(func, a) => write!(f, "{}({a})", func.name()),
        }
    }
}

fn var_name(v: Var) -> &'static str {
    match v {
        Var::R1 => "r1",
        Var::R2 => "r2",
        Var::K1 => "k1",
        Var::K2 => "k2",
    }
}

// ---------------------------------------------------------------- parser

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Sym(char),
}

fn lex(text: &str) -> Result<Vec<(usize, Tok)>> {
    let chars: Vec<char> = text.chars().collect();
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
            let s: String = chars[start..i].iter().collect();
            let v = s.parse().map_err(|_| Error::Syntax { pos: start, msg: format!("bad number '{s}'") })?;
            out.push((start, Tok::Num(v)));
        } else if c.is_ascii_alphabetic() {
            let start = i;
            while i < chars.len() && chars[i].is_ascii_alphanumeric() {
                i += 1;
            }
            out.push((start, Tok::Ident(chars[start..i].iter().collect())));
        } else if "+-*/^()=".contains(c) {
            out.push((i, Tok::Sym(c)));
            i += 1;
        } else {
            return Err(Error::Syntax { pos: i, msg: format!("unexpected character '{c}'") });
        }
    }
    Ok(out)
}

struct Parser {
    toks: Vec<(usize, Tok)>,
    at: usize,
    end: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.at).map(|t| &t.1)
    }

    fn pos(&self) -> usize {
        self.toks.get(self.at).map_or(self.end, |t| t.0)
    }

    fn fail<T>(&self, msg: &str) -> Result<T> {
        Err(Error::Syntax { pos: self.pos(), msg: msg.into() })
    }

    fn eat(&mut self, c: char) -> bool {
        if self.peek() == Some(&Tok::Sym(c)) {
            self.at += 1;
            true
        } else {
            false
        }
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        loop {
            if self.eat('+') {
                lhs = bin(BinOp::Add, lhs, self.term()?);
            } else if self.eat('-') {
                lhs = bin(BinOp::Sub, lhs, self.term()?);
            } else {
                return Ok(lhs);
            }
        }
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.unary()?;
        loop {
            if self.eat('*') {
                lhs = bin(BinOp::Mul, lhs, self.unary()?);
            } else if self.eat('/') {
                lhs = bin(BinOp::Div, lhs, self.unary()?);
            } else {
                return Ok(lhs);
            }
        }
    }

    fn unary(&mut self) -> Result<Expr> {
        if self.eat('-') {
            return Ok(match self.unary()? {
                Expr::Num(c) => Expr::Num(-c),
                e => Expr::Neg(Box::new(e)),
            });
        }
        if self.eat('+') {
            return self.unary();
        }
        self.factor()
    }

    fn factor(&mut self) -> Result<Expr> {
        let base = self.base()?;
        if self.eat('^') {
            let neg = self.eat('-');
            match self.peek() {
                Some(Tok::Num(v)) => {
                    let v = if neg { -*v } else { *v };
                    self.at += 1;
                    return Ok(Expr::Pow(Box::new(base), v));
                }
                _ => return self.fail("exponent must be a number"),
            }
        }
        Ok(base)
    }

    fn base(&mut self) -> Result<Expr> {
        let tok = self.peek().cloned();
        match tok {
            Some(Tok::Num(v)) => {
                self.at += 1;
                Ok(Expr::Num(v))
            }
            Some(Tok::Sym('(')) => {
                self.at += 1;
                let e = self.expr()?;
                if !self.eat(')') {
                    return self.fail("expected ')'");
                }
                Ok(e)
            }
            Some(Tok::Ident(name)) => {
                let k = |v| Expr::Var(v);
                let e = match name.as_str() {
                    "r1" => k(Var::R1),
                    "r2" => k(Var::R2),
                    "k1" => k(Var::K1),
                    "k2" => k(Var::K2),
                    "H" => bin(BinOp::Div, bin(BinOp::Add, k(Var::K1), k(Var::K2)), Expr::Num(2.0)),
                    "K" => bin(BinOp::Mul, k(Var::K1), k(Var::K2)),
                    _ => {
                        let Some(func) = Func::from_name(&name) else {
                            return self.fail(&format!("unknown name '{name}'"));
                        };
                        self.at += 1;
                        if !self.eat('(') {
                            return self.fail("expected '(' after function name");
                        }
                        let arg = self.expr()?;
                        if !self.eat(')') {
                            return self.fail("expected ')'");
                        }
                        return Ok(Expr::Call(func, Box::new(arg)));
                    }
                };
                self.at += 1;
                Ok(e)
            }
            _ => self.fail("expected a number, variable, function or '('"),
        }
    }
}

/// Parses `side = side` into its two expression trees.
pub fn parse_equation(text: &str) -> Result<(Expr, Expr)> {
    let toks = lex(text)?;
    let mut p = Parser { toks, at: 0, end: text.chars().count() };
    let lhs = p.expr()?;
    if !p.eat('=') {
        return p.fail("expected '='");
    }
    let rhs = p.expr()?;
    if p.peek().is_some() {
        return p.fail("unexpected trailing input");
    }
    Ok((lhs, rhs))
}

/// Parses a single expression in r1.
pub fn parse_expr(text: &str) -> Result<Expr> {
    let toks = lex(text)?;
    let mut p = Parser { toks, at: 0, end: text.chars().count() };
    let e = p.expr()?;
    if p.peek().is_some() {
        return p.fail("unexpected trailing input");
    }
    Ok(e)
}

// ------------------------------------------------- rational normal form

/// Polynomial in (x, y) with exponents as keys.
type Poly = BTreeMap<(u32, u32), f64>;

const MAX_DEGREE: u32 = 12;

fn p_const(c: f64) -> Poly {
    let mut p = Poly::new();
    if c != 0.0 {
        p.insert((0, 0), c);
    }
    p
}

fn p_add(a: &Poly, b: &Poly, sign: f64) -> Poly {
    let mut out = a.clone();
    for (k, v) in b {
        let e = out.entry(*k).or_insert(0.0);
        *e += sign * v;
    }
    out.retain(|_, v| *v != 0.0);
    out
}

fn p_mul(a: &Poly, b: &Poly) -> Option<Poly> {
    let mut out = Poly::new();
    for ((i, j), u) in a {
        for ((k, l), v) in b {
            if i + k > MAX_DEGREE || j + l > MAX_DEGREE {
                return None;
            }
            *out.entry((i + k, j + l)).or_insert(0.0) += u * v;
        }
    }
    out.retain(|_, v| *v != 0.0);
    Some(out)
}

/// Numerator and denominator of an expression built from + − * / and integer powers.
fn rational(e: &Expr, x: Var, y: Var) -> Option<(Poly, Poly)> {
    let one = p_const(1.0);
    Some(match e {
        Expr::Num(c) => (p_const(*c), one),
        Expr::Var(v) if *v == x => (Poly::from([((1, 0), 1.0)]), one),
        Expr::Var(v) if *v == y => (Poly::from([((0, 1), 1.0)]), one),
        Expr::Var(_) => return None,
        Expr::Neg(a) => {
            let (n, d) = rational(a, x, y)?;
            (p_add(&Poly::new(), &n, -1.0), d)
        }
        Expr::Bin(op, a, b) => {
            let (n1, d1) = rational(a, x, y)?;
            let (n2, d2) = rational(b, x, y)?;
            match op {
                BinOp::Add | BinOp::Sub => {
                    let s = if *op == BinOp::Add { 1.0 } else { -1.0 };
                    if d1 == d2 {
                        (p_add(&n1, &n2, s), d1)
                    } else {
                        (p_add(&p_mul(&n1, &d2)?, &p_mul(&n2, &d1)?, s), p_mul(&d1, &d2)?)
                    }
                }
                BinOp::Mul => (p_mul(&n1, &n2)?, p_mul(&d1, &d2)?),
                BinOp::Div => {
                    if n2.is_empty() {
                        return None;
                    }
                    (p_mul(&n1, &d2)?, p_mul(&d1, &n2)?)
                }
            }
        }
        Expr::Pow(a, e) => {
            if e.fract() != 0.0 || e.abs() > MAX_DEGREE as f64 {
                return None;
            }
            let (n, d) = rational(a, x, y)?;
            let (mut pn, mut pd) = (one.clone(), one);
            for _ in 0..e.abs() as u32 {
                pn = p_mul(&pn, &n)?;
                pd = p_mul(&pd, &d)?;
            }
            if *e < 0.0 {
                if pn.is_empty() {
                    return None;
                }
                (pd, pn)
            } else {
                (pn, pd)
            }
        }
        Expr::Call(..) => return None,
    })
}

fn degrees(p: &Poly) -> (u32, u32) {
    p.keys().fold((0, 0), |(a, b), (i, j)| (a.max(*i), b.max(*j)))
}

fn coeff(p: &Poly, i: u32, j: u32) -> f64 {
    p.get(&(i, j)).copied().unwrap_or(0.0)
}

/// Expression Σ cᵢ xⁱ for a polynomial in x alone.
fn poly_expr(terms: &[(u32, f64)], x: &Expr) -> Expr {
    let mut acc: Option<Expr> = None;
    for &(i, c) in terms {
        let t = match i {
            0 => Expr::Num(c),
            1 => bin(BinOp::Mul, Expr::Num(c), x.clone()),
            _ => bin(BinOp::Mul, Expr::Num(c), Expr::Pow(Box::new(x.clone()), i as f64)),
        };
        acc = Some(match acc {
            None => t,
            Some(a) => bin(BinOp::Add, a, t),
        });
    }
    acc.unwrap_or(Expr::Num(0.0))
}

// ------------------------------------------------------------- relation

/// A Weingarten relation, canonically stored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum WeingartenRelation {
    /// r₂ = λ r₁ + C.
    LinearHopf { lambda: f64, c: f64 },
    /// k₂ = λ k₁.
    PureKLinear { lambda: f64 },
    /// α k₁k₂ + β k₁ + γ k₂ + δ = 0.
    SemiQuadratic { alpha: f64, beta: f64, gamma: f64, delta: f64 },
    /// r₂ = γ² r₁³.
    CubicRoC { gamma: f64 },
    /// r₂ = expr(r₁).
    ExplicitF { expr: Expr },
}

use WeingartenRelation as W;

pub fn parse_relation(text: &str) -> Result<WeingartenRelation> {
    let (lhs, rhs) = parse_equation(text)?;
    let mut vs = Vec::new();
    lhs.vars(&mut vs);
    rhs.vars(&mut vs);
    let has_r = vs.iter().any(|v| matches!(v, Var::R1 | Var::R2));
    let has_k = vs.iter().any(|v| matches!(v, Var::K1 | Var::K2));
    if has_r && has_k {
        return Err(Error::Ambiguous("relation mixes radii and curvatures".into()));
    }
    let (x, y) = if has_k { (Var::K1, Var::K2) } else { (Var::R1, Var::R2) };
    let diff = bin(BinOp::Sub, lhs.clone(), rhs.clone());
    let poly = rational(&diff, x, y).map(|(n, _)| n);

    if let Some(n) = &poly {
        if let Some(rel) = classify_poly(n, has_k) {
            return Ok(rel);
        }
    }
    // explicit r2 = expr(r1), either way round
    for (a, b) in [(&lhs, &rhs), (&rhs, &lhs)] {
        if *a == Expr::Var(y) && b.only(x) {
            let expr = if has_k {
                let inv = bin(BinOp::Div, Expr::Num(1.0), Expr::Var(Var::R1));
                bin(BinOp::Div, Expr::Num(1.0), b.substitute(Var::K1, &inv))
            } else {
                b.clone()
            };
            return Ok(W::ExplicitF { expr });
        }
    }
    if let Some(n) = &poly {
        if let Some(rel) = solve_linear_in_y(n, has_k) {
            return Ok(rel);
        }
    }
    Err(Error::Ambiguous(format!("cannot solve '{text}' for r2")))
}

fn classify_poly(n: &Poly, k_form: bool) -> Option<WeingartenRelation> {
    let (dx, dy) = degrees(n);
    if dy == 0 {
        return None;
    }
    if dx <= 1 && dy <= 1 {
        let (a, b, c, d) = (coeff(n, 1, 1), coeff(n, 1, 0), coeff(n, 0, 1), coeff(n, 0, 0));
        if k_form {
            if a == 0.0 && d == 0.0 && c != 0.0 {
                return Some(W::PureKLinear { lambda: -b / c });
            }
            return Some(W::SemiQuadratic { alpha: a, beta: b, gamma: c, delta: d });
        }
        if a == 0.0 {
            let (lambda, cc) = (-b / c, -d / c);
            if lambda == 1.0 && cc == 0.0 {
                return Some(W::PureKLinear { lambda: 1.0 });
            }
            return Some(W::LinearHopf { lambda, c: cc });
        }
        return Some(W::SemiQuadratic { alpha: d, beta: c, gamma: b, delta: a });
    }
    if !k_form && n.len() == 2 && dy == 1 {
        let (c, e) = (coeff(n, 0, 1), coeff(n, 3, 0));
        if c != 0.0 && e != 0.0 && -e / c > 0.0 {
            return Some(W::CubicRoC { gamma: (-e / c).sqrt() });
        }
    }
    None
}

/// P(x)·y + Q(x) = 0 with P ≢ 0 gives y = −Q/P.
fn solve_linear_in_y(n: &Poly, k_form: bool) -> Option<WeingartenRelation> {
    if degrees(n).1 != 1 {
        return None;
    }
    let p: Vec<(u32, f64)> = n.iter().filter(|((_, j), _)| *j == 1).map(|((i, _), c)| (*i, *c)).collect();
    let q: Vec<(u32, f64)> = n.iter().filter(|((_, j), _)| *j == 0).map(|((i, _), c)| (*i, -*c)).collect();
    let r1 = Expr::Var(Var::R1);
    let expr = if k_form {
        let x = bin(BinOp::Div, Expr::Num(1.0), r1);
        bin(BinOp::Div, poly_expr(&p, &x), poly_expr(&q, &x))
    } else {
        bin(BinOp::Div, poly_expr(&q, &r1), poly_expr(&p, &r1))
    };
    Some(W::ExplicitF { expr })
}

fn num(x: f64) -> String {
    format!("{x}")
}

/// `+ x` or `- |x|` for a term with coefficient `x`.
fn signed(x: f64, tail: &str) -> String {
    if x < 0.0 || (x == 0.0 && x.is_sign_negative()) {
        format!(" - {}{tail}", num(-x))
    } else {
        format!(" + {}{tail}", num(x))
    }
}

impl WeingartenRelation {
    pub fn linear_hopf(lambda: f64, c: f64) -> Self {
        W::LinearHopf { lambda, c }
    }

    pub fn semi_quadratic(alpha: f64, beta: f64, gamma: f64, delta: f64) -> Result<Self> {
        if alpha == 0.0 && beta == 0.0 && gamma == 0.0 && delta == 0.0 {
            return Err(Error::Invalid("all four coefficients vanish".into()));
        }
        Ok(W::SemiQuadratic { alpha, beta, gamma, delta })
    }

    /// Linear Hopf with λ = 1 has no closed-form family.
    pub fn is_degenerate_hopf(&self) -> bool {
        matches!(self, W::LinearHopf { lambda, .. } if *lambda == 1.0)
    }

    /// Canonical text form; `parse_relation` reads it back to the same data.
    pub fn render(&self) -> String {
        match self {
            W::LinearHopf { lambda, c } if *c == 0.0 => format!("r2 = {}*r1", num(*lambda)),
            W::LinearHopf { lambda, c } => format!("r2 = {}*r1{}", num(*lambda), signed(*c, "")),
            W::PureKLinear { lambda } => format!("k2 = {}*k1", num(*lambda)),
            W::SemiQuadratic { alpha, beta, gamma, delta } => {
                let terms = [(*alpha, "*k1*k2"), (*beta, "*k1"), (*gamma, "*k2"), (*delta, "")];
                let mut out = String::new();
                for (x, tail) in terms.into_iter().filter(|t| t.0 != 0.0) {
                    if out.is_empty() {
                        out = format!("{}{tail}", num(x));
                    } else {
                        out += &signed(x, tail);
                    }
                }
                if out.is_empty() {
                    out.push('0');
                }
                format!("{out} = 0")
            }
            W::CubicRoC { gamma } => format!("r2 = {}^2*r1^3", num(gamma.abs())),
            W::ExplicitF { expr } => format!("r2 = {expr}"),
        }
    }

    /// Curvature coefficients (α, β, γ, δ) where the relation is semi-quadratic.
    pub fn k_coefficients(&self) -> Option<[f64; 4]> {
        match self {
            W::LinearHopf { lambda, c } => Some([*c, -1.0, *lambda, 0.0]),
            W::PureKLinear { lambda } => Some([0.0, *lambda, -1.0, 0.0]),
            W::SemiQuadratic { alpha, beta, gamma, delta } => Some([*alpha, *beta, *gamma, *delta]),
            _ => None,
        }
    }

    /// r₂ = F(r₁).
    pub fn eval_f(&self, r1: ExtReal) -> Result<ExtReal> {
        match self {
            W::LinearHopf { lambda, c } => Ok(match r1 {
                ExtReal::Infinity if *lambda == 0.0 => ExtReal::Finite(*c),
                ExtReal::Infinity => ExtReal::Infinity,
                ExtReal::Finite(u) => ExtReal::from(lambda * u + c),
            }),
            W::PureKLinear { lambda } => Ok(match r1 {
                ExtReal::Infinity => ExtReal::Infinity,
                ExtReal::Finite(u) if *lambda == 0.0 => {
                    if u == 0.0 {
                        return Err(Error::Domain("0/0 in k2 = 0*k1 at r1 = 0".into()));
                    }
                    ExtReal::Infinity
                }
                ExtReal::Finite(u) => ExtReal::Finite(u / lambda),
            }),
            W::SemiQuadratic { alpha, beta, gamma, delta } => {
                // r₂(β + δ r₁) = −(α + γ r₁)
                match r1 {
                    ExtReal::Infinity => {
                        if *delta != 0.0 {
                            Ok(ExtReal::Finite(-gamma / delta))
                        } else if *gamma != 0.0 {
                            Ok(ExtReal::Infinity)
                        } else if *beta != 0.0 {
                            Ok(ExtReal::Finite(-alpha / beta))
                        } else {
                            Err(Error::Domain("relation places no condition on r2".into()))
                        }
                    }
                    ExtReal::Finite(u) => {
                        let n = -(alpha + gamma * u);
                        let d = beta + delta * u;
                        if d == 0.0 {
                            if n == 0.0 {
                                return Err(Error::Domain(format!("0/0 at r1 = {u}")));
                            }
                            return Ok(ExtReal::Infinity);
                        }
                        Ok(ExtReal::from(n / d))
                    }
                }
            }
            W::CubicRoC { gamma } => Ok(match r1 {
                ExtReal::Infinity if *gamma == 0.0 => ExtReal::Finite(0.0),
                ExtReal::Infinity => ExtReal::Infinity,
                ExtReal::Finite(u) => ExtReal::from(gamma * gamma * u * u * u),
            }),
            W::ExplicitF { expr } => match r1 {
                ExtReal::Infinity => Err(Error::Domain("explicit relation evaluated at infinity".into())),
                ExtReal::Finite(u) => expr.eval(u),
            },
        }
    }

    /// F on finite input as an `f64` (+∞ for the point at infinity).
    pub fn f(&self, u: f64) -> Result<f64> {
        Ok(self.eval_f(ExtReal::Finite(u))?.to_f64())
    }

    /// dF/dr₁ at a finite r₁.
    pub fn eval_f_prime(&self, r1: ExtReal) -> Result<f64> {
        let u = r1.finite().ok_or_else(|| Error::Domain("derivative at infinity".into()))?;
        self.eval_f(r1)?;
        Ok(match self {
            W::LinearHopf { lambda, .. } => *lambda,
            W::PureKLinear { lambda } => 1.0 / lambda,
            W::SemiQuadratic { alpha, beta, gamma, delta } => {
                let d = beta + delta * u;
                (alpha * delta - beta * gamma) / (d * d)
            }
            W::CubicRoC { gamma } => 3.0 * gamma * gamma * u * u,
            W::ExplicitF { expr } => {
                let v = expr.derivative().eval_raw(u);
                if v.is_nan() {
                    return Err(Error::Domain(format!("derivative undefined at r1 = {u}")));
                }
                v
            }
        })
    }

    pub fn f_prime(&self, u: f64) -> Result<f64> {
        self.eval_f_prime(ExtReal::Finite(u))
    }

    /// F(u₀ + w) − F(u₀), accurate relative to w when w is small.
    pub fn f_increment(&self, u0: f64, w: f64) -> Result<f64> {
        Ok(match self {
            W::LinearHopf { lambda, .. } => lambda * w,
            W::PureKLinear { lambda } => {
                if *lambda == 0.0 {
                    return Err(Error::FlatPoint(f64::NAN));
                }
                w / lambda
            }
            W::SemiQuadratic { alpha, beta, gamma, delta } => {
                let d0 = beta + delta * u0;
                let d1 = beta + delta * (u0 + w);
                (alpha * delta - beta * gamma) * w / (d0 * d1)
            }
            W::CubicRoC { gamma } => gamma * gamma * w * (3.0 * u0 * u0 + 3.0 * u0 * w + w * w),
            W::ExplicitF { .. } => {
                if w.abs() <= 1e-3 * (1.0 + u0.abs()) {
                    // Simpson on F′
                    let d = |u: f64| self.f_prime(u);
                    w * (d(u0)? + 4.0 * d(u0 + 0.5 * w)? + d(u0 + w)?) / 6.0
                } else {
                    self.f(u0 + w)? - self.f(u0)?
                }
            }
        })
    }

    /// Umbilic radii in `[a, b]`: sign changes of F(u) − u refined by bisection.
    pub fn fixed_points(&self, a: f64, b: f64) -> Vec<f64> {
        const CELLS: usize = 512;
        let g = |u: f64| -> Option<f64> {
            let v = self.f(u).ok()? - u;
            v.is_finite().then_some(v)
        };
        let mut roots: Vec<f64> = Vec::new();
        let push = |roots: &mut Vec<f64>, r: f64| {
            if !roots.iter().any(|x| (x - r).abs() <= 1e-10 * (1.0 + r.abs())) {
                roots.push(r);
            }
        };
        let xs: Vec<f64> = (0..=CELLS).map(|i| if i == CELLS { b } else { a + (b - a) * i as f64 / CELLS as f64 }).collect();
        let vals: Vec<Option<f64>> = xs.iter().map(|&u| g(u)).collect();
        for i in 0..CELLS {
            let (Some(g0), Some(g1)) = (vals[i], vals[i + 1]) else { continue };
            if g0 == 0.0 {
                push(&mut roots, xs[i]);
                continue;
            }
            if g1 == 0.0 {
                push(&mut roots, xs[i + 1]);
                continue;
            }
            if g0.signum() == g1.signum() {
                continue;
            }
            let Ok(r) = bisect(|u| g(u).ok_or_else(|| Error::Domain("".into())), xs[i], xs[i + 1], 1e-12) else { continue };
            // a pole of F also changes sign; its residual is not small
            if g(r).is_some_and(|v| v.abs() <= 1e-6 * (1.0 + r.abs())) {
                push(&mut roots, r);
            }
        }
        roots.sort_by(f64::total_cmp);
        roots
    }
}

impl fmt::Display for WeingartenRelation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render())
    }
}

impl std::str::FromStr for WeingartenRelation {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        parse_relation(s)
    }
}
