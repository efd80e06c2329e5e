//! SL₂(ℝ) acting on radii of curvature, and the surfaces it induces in E³.

use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ext::{ExtReal, Pole, RoCPoint};
use crate::integrator::{umbilic_slope_estimate, PoleCurve};
use crate::numeric::interp::{nodal_first_derivative, Sampled};
use crate::numeric::quad::adaptive_simpson;
use crate::relations::{BinOp, Expr, Var, WeingartenRelation};
use crate::roc_core::{PoleValues, ProfileCurve3D, RoCProfile};
use crate::semiquadratic::{invariants_of, normalize_coeffs, push_forward};

/// Unimodular matrix (a b; c d).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(into = "[f64; 4]", try_from = "[f64; 4]")]
pub struct MoebiusElement {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl From<MoebiusElement> for [f64; 4] {
    fn from(m: MoebiusElement) -> Self {
        [m.a, m.b, m.c, m.d]
    }
}

impl TryFrom<[f64; 4]> for MoebiusElement {
    type Error = Error;
    fn try_from(v: [f64; 4]) -> Result<Self> {
        MoebiusElement::new(v[0], v[1], v[2], v[3])
    }
}

impl MoebiusElement {
    /// Scales by 1/√det. Non-positive determinants are rejected.
    pub fn new(a: f64, b: f64, c: f64, d: f64) -> Result<Self> {
        if ![a, b, c, d].iter().all(|x| x.is_finite()) {
            return Err(Error::Invalid("matrix entries must be finite".into()));
        }
        let det = a * d - b * c;
        if det <= 0.0 {
            return Err(Error::Invalid(format!("determinant {det} is not positive")));
        }
        let s = det.sqrt();
        Ok(MoebiusElement { a: a / s, b: b / s, c: c / s, d: d / s })
    }

    /// Accepts only matrices already of determinant one (to 1e-12).
    pub fn strict(a: f64, b: f64, c: f64, d: f64) -> Result<Self> {
        let det = a * d - b * c;
        if (det - 1.0).abs() > 1e-12 {
            return Err(Error::Invalid(format!("determinant {det} is not 1")));
        }
        Self::new(a, b, c, d)
    }

    pub fn identity() -> Self {
        MoebiusElement { a: 1.0, b: 0.0, c: 0.0, d: 1.0 }
    }

    /// N(v): parallel translation by v.
    pub fn translation(v: f64) -> Self {
        MoebiusElement { a: 1.0, b: v, c: 0.0, d: 1.0 }
    }

    /// A(ω) = diag(ω, 1/ω).
    pub fn homothety(omega: f64) -> Result<Self> {
        if omega == 0.0 || !omega.is_finite() {
            return Err(Error::Invalid("homothety parameter must be finite and nonzero".into()));
        }
        Ok(MoebiusElement { a: omega, b: 0.0, c: 0.0, d: 1.0 / omega })
    }

    /// Q = (0 −1; 1 0).
    pub fn reciprocal() -> Self {
        MoebiusElement { a: 0.0, b: -1.0, c: 1.0, d: 0.0 }
    }

    pub fn det(&self) -> f64 {
        self.a * self.d - self.b * self.c
    }

    pub fn inverse(&self) -> Self {
        MoebiusElement { a: self.d, b: -self.b, c: -self.c, d: self.a }
    }

    /// Matrix product self·rhs (rhs acts first).
    pub fn compose(&self, rhs: &Self) -> Self {
        MoebiusElement {
            a: self.a * rhs.a + self.b * rhs.c,
            b: self.a * rhs.b + self.b * rhs.d,
            c: self.c * rhs.a + self.d * rhs.c,
            d: self.c * rhs.b + self.d * rhs.d,
        }
    }

    pub fn frobenius(&self) -> f64 {
        (self.a * self.a + self.b * self.b + self.c * self.c + self.d * self.d).sqrt()
    }

    pub fn max_diff(&self, other: &Self) -> f64 {
        [self.a - other.a, self.b - other.b, self.c - other.c, self.d - other.d]
            .iter()
            .fold(0.0, |m, x| m.max(x.abs()))
    }

    pub fn apply(&self, r: ExtReal) -> ExtReal {
        r.mobius(self.a, self.b, self.c, self.d)
    }

    /// The induced action on curvatures, k ↦ (dk + c)/(bk + a).
    pub fn apply_k(&self, k: ExtReal) -> ExtReal {
        k.mobius(self.d, self.c, self.b, self.a)
    }
}

impl fmt::Display for MoebiusElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}, {}, {}]", self.a, self.b, self.c, self.d)
    }
}

pub fn apply_roc(m: &MoebiusElement, p: RoCPoint) -> RoCPoint {
    RoCPoint { r1: m.apply(p.r1), r2: m.apply(p.r2) }
}

pub fn apply_curvature(m: &MoebiusElement, k: (ExtReal, ExtReal)) -> (ExtReal, ExtReal) {
    (m.apply_k(k.0), m.apply_k(k.1))
}

// ------------------------------------------------------------ factors

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", content = "parameter", rename_all = "snake_case")]
pub enum Factor {
    ParallelTranslation(f64),
    Homothety(f64),
    Reciprocal,
}

impl Factor {
    pub fn matrix(&self) -> MoebiusElement {
        match *self {
            Factor::ParallelTranslation(v) => MoebiusElement::translation(v),
            Factor::Homothety(w) => MoebiusElement { a: w, b: 0.0, c: 0.0, d: 1.0 / w },
            Factor::Reciprocal => MoebiusElement::reciprocal(),
        }
    }
}

impl fmt::Display for Factor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Factor::ParallelTranslation(v) => write!(f, "N({v})"),
            Factor::Homothety(w) => write!(f, "A({w})"),
            Factor::Reciprocal => write!(f, "Q"),
        }
    }
}

/// Factors listed left to right as in the matrix product; the rightmost acts first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FactorList(pub Vec<Factor>);

impl FactorList {
    pub fn product(&self) -> MoebiusElement {
        self.0.iter().fold(MoebiusElement::identity(), |acc, f| acc.compose(&f.matrix()))
    }

    /// Applies the factors one at a time, rightmost first.
    pub fn apply_roc(&self, p: RoCPoint) -> RoCPoint {
        self.0.iter().rev().fold(p, |q, f| apply_roc(&f.matrix(), q))
    }
}

impl fmt::Display for FactorList {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|x| x.to_string()).collect();
        write!(f, "[{}]", parts.join(", "))
    }
}

pub fn decompose(m: &MoebiusElement) -> FactorList {
    let MoebiusElement { a, b, c, d } = *m;
    if c == 0.0 {
        FactorList(vec![Factor::ParallelTranslation(b * a), Factor::Homothety(a)])
    } else {
        FactorList(vec![
            Factor::ParallelTranslation(a / c),
            Factor::Homothety(1.0 / c),
            Factor::Reciprocal,
            Factor::ParallelTranslation(d / c),
        ])
    }
}

// ------------------------------------------------------ reparameterisation

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CalibrationChoice {
    Fixed(f64),
    Auto,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    #[default]
    Standard,
    Reversed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Reparameterization {
    pub calibration: f64,
    /// θ̃ per source sample, NaN where inadmissible.
    pub theta_tilde: Vec<f64>,
    pub admissible: Vec<bool>,
    /// Longest contiguous admissible run on which θ̃ is strictly monotone.
    pub domain: std::ops::Range<usize>,
}

fn scale_of(v: &[f64]) -> f64 {
    v.iter().filter(|x| x.is_finite()).fold(1.0f64, |m, x| m.max(x.abs()))
}

/// Signed c·ρ + d·sin θ of largest modulus, refined by a parabola through
/// the three samples around the discrete maximum.
fn peak(grid: &[f64], g: &[f64]) -> f64 {
    let i = (0..g.len()).max_by(|&i, &j| g[i].abs().total_cmp(&g[j].abs())).unwrap();
    if i == 0 || i + 1 == g.len() {
        return g[i];
    }
    let (x0, x1, x2) = (grid[i - 1], grid[i], grid[i + 1]);
    let (y0, y1, y2) = (g[i - 1], g[i], g[i + 1]);
    let d01 = (y1 - y0) / (x1 - x0);
    let d12 = (y2 - y1) / (x2 - x1);
    let c2 = (d12 - d01) / (x2 - x0);
    if c2 == 0.0 {
        return g[i];
    }
    let c1 = d01 - c2 * (x0 + x1);
    let xv = (-c1 / (2.0 * c2)).clamp(x0, x2);
    let v = y0 + d01 * (xv - x0) + c2 * (xv - x0) * (xv - x1);
    if v.abs() > y1.abs() { v } else { y1 }
}

fn branch_angle(theta: f64, s: f64, branch: Branch) -> f64 {
    let base = s.clamp(0.0, 1.0).asin();
    let north = theta <= FRAC_PI_2;
    match (branch, north) {
        (Branch::Standard, true) | (Branch::Reversed, false) => base,
        _ => PI - base,
    }
}

/// sin θ̃ = 𝒜 sin θ (c r₁ + d).
pub fn reparameterize(m: &MoebiusElement, p: &RoCProfile, cal: CalibrationChoice, branch: Branch) -> Result<Reparameterization> {
    if let Some(i) = p.points.iter().position(|q| q.r1.is_infinite()) {
        return Err(Error::Invalid(format!("r1 infinite at theta = {}", p.grid[i])));
    }
    let r1 = p.r1();
    let g: Vec<f64> = p.grid.iter().zip(&r1).map(|(t, r)| t.sin() * (m.c * r + m.d)).collect();
    let scale = scale_of(&r1) * (m.c.abs() + m.d.abs());
    if g.iter().all(|x| x.abs() <= 1e-12 * scale.max(1.0)) {
        return Err(Error::Degenerate("r1 is identically -d/c: the image is a plane".into()));
    }
    let calibration = match cal {
        CalibrationChoice::Fixed(a) if a == 0.0 || !a.is_finite() => {
            return Err(Error::Invalid("calibration constant must be finite and nonzero".into()))
        }
        CalibrationChoice::Fixed(a) => a,
        CalibrationChoice::Auto => 1.0 / peak(&p.grid, &g),
    };
    let mut theta_tilde = Vec::with_capacity(g.len());
    let mut admissible = Vec::with_capacity(g.len());
    for (t, gi) in p.grid.iter().zip(&g) {
        let s = calibration * gi;
        // sin θ̃ must lie in [0, 1] for θ̃ to be a Gauss angle
        let ok = (-1e-14..=1.0 + 1e-12).contains(&s);
        admissible.push(ok);
        theta_tilde.push(if ok { branch_angle(*t, s, branch) } else { f64::NAN });
    }
    let mut best = 0..0;
    let mut i = 0;
    while i < g.len() {
        if !admissible[i] {
            i += 1;
            continue;
        }
        let start = i;
        let mut dir = 0.0;
        i += 1;
        while i < g.len() && admissible[i] {
            let step = theta_tilde[i] - theta_tilde[i - 1];
            if step == 0.0 || (dir != 0.0 && step.signum() != dir) {
                break;
            }
            dir = step.signum();
            i += 1;
        }
        if i - start > best.len() {
            best = start..i;
        }
        if i < g.len() && admissible[i] && i > start + 1 {
            // restart the run at the turning sample
            i -= 1;
        }
    }
    if best.len() < 2 {
        return Err(Error::EmptyDomain);
    }
    Ok(Reparameterization { calibration, theta_tilde, admissible, domain: best })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SurfaceKind {
    Regular,
    Plane,
    Cone { theta: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InducedSurface {
    pub kind: SurfaceKind,
    pub calibration: f64,
    pub profile: Option<RoCProfile>,
    pub curve: Option<ProfileCurve3D>,
    /// Source sample behind each output sample.
    pub source_index: Vec<usize>,
}

fn map_poles(m: &MoebiusElement, pv: &PoleValues, grid: &[f64]) -> PoleValues {
    let mut out = PoleValues::default();
    let has = |a: f64| grid.first() == Some(&a) || grid.last() == Some(&a);
    if has(0.0) {
        out.north = pv.north.map(|p| apply_roc(m, p));
    }
    if has(PI) {
        out.south = pv.south.map(|p| apply_roc(m, p));
    }
    out
}

/// Surface whose RoC profile is M applied to the source, reparameterised by θ̃.
/// `source_h` is the source height function on the same grid when known.
pub fn induced_surface(
    m: &MoebiusElement,
    p: &RoCProfile,
    source_h: Option<&[f64]>,
    cal: CalibrationChoice,
    branch: Branch,
) -> Result<InducedSurface> {
    let r1 = p.r1();
    let scale = scale_of(&r1).max(1.0) * (m.c.abs() + m.d.abs());
    let on_line = |r: ExtReal| match r {
        ExtReal::Finite(x) => (m.c * x + m.d).abs() <= 1e-12 * scale,
        ExtReal::Infinity => m.c == 0.0,
    };
    if !p.points.is_empty() && p.points.iter().all(|q| on_line(q.r1)) {
        return Ok(InducedSurface {
            kind: SurfaceKind::Plane,
            calibration: f64::NAN,
            profile: None,
            curve: None,
            source_index: Vec::new(),
        });
    }
    let rep = reparameterize(m, p, cal, branch)?;
    if p.points.iter().all(|q| on_line(q.r2)) {
        let i = rep.domain.start;
        return Ok(InducedSurface {
            kind: SurfaceKind::Cone { theta: rep.theta_tilde[i] },
            calibration: rep.calibration,
            profile: None,
            curve: None,
            source_index: Vec::new(),
        });
    }
    let mut idx: Vec<usize> = rep.domain.clone().collect();
    if rep.theta_tilde[idx[1]] < rep.theta_tilde[idx[0]] {
        idx.reverse();
    }
    let grid: Vec<f64> = idx.iter().map(|&i| rep.theta_tilde[i]).collect();
    let points: Vec<RoCPoint> = idx.iter().map(|&i| apply_roc(m, p.points[i])).collect();
    let mut profile = RoCProfile::new(grid.clone(), points)?;
    profile.tolerance = p.tolerance;
    let src_grid: Vec<f64> = idx.iter().map(|&i| p.grid[i]).collect();
    profile.pole_values = map_poles(m, &p.pole_values, &src_grid);

    let a = rep.calibration;
    let rho: Vec<f64> = idx
        .iter()
        .map(|&i| {
            let t = p.grid[i];
            a * (m.a * r1[i] * t.sin() + m.b * t.sin())
        })
        .collect();
    let curve = if profile.all_finite() {
        let integrand: Vec<f64> = profile.points.iter().zip(&grid).map(|(q, t)| -q.r2.to_f64() * t.sin()).collect();
        let cum = Sampled::new(grid.clone(), integrand)?.cumulative_integral();
        // anchor at the first source sample of the run
        let k = idx.iter().position(|&i| i == rep.domain.start).unwrap();
        let i0 = rep.domain.start;
        let h0 = source_h.map_or(0.0, |h| h[i0]);
        let anchor = a * (m.a * h0 + m.b * p.grid[i0].cos());
        let h = cum.iter().map(|c| c - cum[k] + anchor).collect();
        Some(ProfileCurve3D { grid: grid.clone(), rho, h })
    } else {
        None
    };
    Ok(InducedSurface { kind: SurfaceKind::Regular, calibration: a, profile: Some(profile), curve, source_index: idx })
}

/// Half-width of the patch around the equator where the height integrand is
/// replaced by its linearisation.
const EQUATOR_PATCH: f64 = 5e-4;

/// Reciprocal image Q of a closed strictly convex surface with 𝒜 = 1/ρ(π/2).
pub fn reciprocal_transform_closed(p: &RoCProfile) -> Result<InducedSurface> {
    let closed = p.grid.first() == Some(&0.0)
        && p.grid.last() == Some(&PI)
        && p.pole_values.north.is_some_and(|q| q.finite().is_some())
        && p.pole_values.south.is_some_and(|q| q.finite().is_some());
    if !closed {
        return Err(Error::Invalid("surface is not closed: need samples and finite limits at both poles".into()));
    }
    if !p.points.iter().all(|q| q.finite().is_some_and(|(x, y)| x > 0.0 && y > 0.0)) {
        return Err(Error::Invalid("surface is not strictly convex".into()));
    }
    let r1s = p.r1_interp()?;
    let r2s = p.r2_interp()?;
    let rho = |t: f64| r1s.value(t) * t.sin();
    let rho_m = r1s.value(FRAC_PI_2);
    let q = MoebiusElement::reciprocal();
    let a = 1.0 / rho_m;

    let g = |t: f64| {
        let r = rho(t);
        let root = ((rho_m - r) * (rho_m + r)).max(0.0).sqrt();
        let sg = if t < FRAC_PI_2 { 1.0 } else { -1.0 };
        sg * r * t.cos() / (rho_m * root)
    };
    let g0 = 1.0 / (r1s.value(FRAC_PI_2) * r2s.value(FRAC_PI_2)).sqrt();
    let g1 = (g(FRAC_PI_2 + EQUATOR_PATCH) - g(FRAC_PI_2 - EQUATOR_PATCH)) / (2.0 * EQUATOR_PATCH);
    let lin = |u: f64, v: f64| {
        let (x, y) = (u - FRAC_PI_2, v - FRAC_PI_2);
        g0 * (y - x) + 0.5 * g1 * (y * y - x * x)
    };
    let (pl, ph) = (FRAC_PI_2 - EQUATOR_PATCH, FRAC_PI_2 + EQUATOR_PATCH);
    let piece = |u: f64, v: f64| -> Result<f64> {
        let mut acc = 0.0;
        let outer = [(u, v.min(pl)), (u.max(ph), v)];
        for (x, y) in outer {
            if y > x {
                acc += adaptive_simpson(g, x, y, 1e-13, 1e-11)?;
            }
        }
        let (x, y) = (u.max(pl), v.min(ph));
        if y > x {
            acc += lin(x, y);
        }
        Ok(acc)
    };

    let n = p.len();
    let mut h = vec![-a; n];
    for i in 1..n {
        h[i] = h[i - 1] + piece(p.grid[i - 1], p.grid[i])?;
    }
    let grid: Vec<f64> = p.grid.iter().map(|&t| branch_angle(t, rho(t) * a, Branch::Standard)).collect();
    let points: Vec<RoCPoint> = p.points.iter().map(|&x| apply_roc(&q, x)).collect();
    let mut profile = RoCProfile::new(grid.clone(), points)?;
    profile.tolerance = p.tolerance;
    profile.pole_values = map_poles(&q, &p.pole_values, &p.grid);
    let rho_t = p.grid.iter().map(|t| -a * t.sin()).collect();
    Ok(InducedSurface {
        kind: SurfaceKind::Regular,
        calibration: a,
        profile: Some(profile),
        curve: Some(ProfileCurve3D { grid, rho: rho_t, h }),
        source_index: (0..n).collect(),
    })
}

// ------------------------------------------------------------ relations

fn clean(c: [f64; 4]) -> [f64; 4] {
    let s = c.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    c.map(|x| if x.abs() <= 1e-14 * s { 0.0 } else { x })
}

fn mobius_expr(a: f64, b: f64, c: f64, d: f64, x: Expr) -> Expr {
    let lin = |p: f64, q: f64| {
        Expr::Bin(
            BinOp::Add,
            Box::new(Expr::Bin(BinOp::Mul, Box::new(Expr::Num(p)), Box::new(x.clone()))),
            Box::new(Expr::Num(q)),
        )
    };
    Expr::Bin(BinOp::Div, Box::new(lin(a, b)), Box::new(lin(c, d)))
}

/// Relation satisfied by the image surface: F̃ = M ∘ F ∘ M⁻¹.
pub fn transform_relation(m: &MoebiusElement, rel: &WeingartenRelation) -> Result<WeingartenRelation> {
    use WeingartenRelation as W;
    let Some(c) = rel.k_coefficients() else {
        let f = match rel {
            W::CubicRoC { gamma } => Expr::Bin(
                BinOp::Mul,
                Box::new(Expr::Num(gamma * gamma)),
                Box::new(Expr::Pow(Box::new(Expr::Var(Var::R1)), 3.0)),
            ),
            W::ExplicitF { expr } => expr.clone(),
            _ => unreachable!(),
        };
        let inv = m.inverse();
        let pre = mobius_expr(inv.a, inv.b, inv.c, inv.d, Expr::Var(Var::R1));
        let expr = mobius_expr(m.a, m.b, m.c, m.d, f.substitute(Var::R1, &pre));
        return Ok(W::ExplicitF { expr });
    };
    let mut img = clean(push_forward(m, &c));
    if img.iter().all(|x| *x == 0.0) {
        return Err(Error::Degenerate("image coefficients all vanish".into()));
    }
    if invariants_of(&img).lambda2 > 0.0 {
        img = clean(normalize_coeffs(&img)?);
    }
    let [alpha, beta, gamma, delta] = img;
    let linear = matches!(rel, W::LinearHopf { .. } | W::PureKLinear { .. });
    Ok(if linear && alpha == 0.0 && delta == 0.0 && gamma != 0.0 {
        W::PureKLinear { lambda: -beta / gamma }
    } else if linear && delta == 0.0 && beta != 0.0 {
        W::LinearHopf { lambda: -gamma / beta, c: -alpha / beta }
    } else {
        W::SemiQuadratic { alpha, beta, gamma, delta }
    })
}

// ------------------------------------------------------- property checks

/// A pole curve seen through M.
pub struct MappedCurve<'a> {
    pub inner: &'a dyn PoleCurve,
    pub m: MoebiusElement,
}

impl PoleCurve for MappedCurve<'_> {
    fn pole(&self) -> Pole {
        self.inner.pole()
    }
    fn limit(&self) -> ExtReal {
        self.m.apply(self.inner.limit())
    }
    fn min_offset(&self) -> f64 {
        self.inner.min_offset()
    }
    fn offsets(&self, t: &[f64]) -> Result<Vec<(f64, f64, f64)>> {
        let MoebiusElement { a, b, c, d } = self.m;
        let rows = self.inner.offsets(t)?;
        let out = match self.inner.limit() {
            ExtReal::Finite(r0) => {
                let e0 = c * r0 + d;
                if e0 == 0.0 {
                    // the image limit is ∞: report the radii themselves
                    let img = |w: f64| (a * (r0 + w) + b) / (c * w);
                    rows.into_iter().map(|(x, w1, w2)| (x, img(w1), img(w2))).collect()
                } else {
                    // M(r₀ + w) − M(r₀) = w / ((c(r₀+w) + d)(c r₀ + d))
                    let off = |w: f64| w / ((c * (r0 + w) + d) * e0);
                    rows.into_iter().map(|(x, w1, w2)| (x, off(w1), off(w2))).collect()
                }
            }
            ExtReal::Infinity => {
                if c == 0.0 {
                    let img = |r: f64| (a * r + b) / d;
                    rows.into_iter().map(|(x, r1, r2)| (x, img(r1), img(r2))).collect()
                } else {
                    // M(r) − a/c = −1/(c(cr + d))
                    let off = |r: f64| -1.0 / (c * (c * r + d));
                    rows.into_iter().map(|(x, r1, r2)| (x, off(r1), off(r2))).collect()
                }
            }
        };
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransformCheck {
    pub umbilic_samples: usize,
    pub umbilics_correspond: bool,
    /// Sign of (∂W/∂k₁)(∂W/∂k₂) = −sign(dr₂/dr₁), before and after.
    pub ellipticity_sign: (i8, i8),
    pub ellipticity_preserved: bool,
    pub slope_source: Option<f64>,
    pub slope_image: Option<f64>,
    /// |μ̃ − μ| and |μ̃ − 1/μ|.
    pub slope_distances: Option<(f64, f64)>,
    pub slope_in_set: Option<bool>,
}

pub const SLOPE_SET_TOL: f64 = 5e-2;

fn ellipticity(grid: &[f64], pts: &[RoCPoint]) -> Result<i8> {
    let runs = {
        let p = RoCProfile::new(grid.to_vec(), pts.to_vec())?;
        p.finite_runs()
    };
    let mut sign = 0i8;
    for run in runs {
        if run.len() < 8 {
            continue;
        }
        let t = &grid[run.clone()];
        let r1: Vec<f64> = pts[run.clone()].iter().map(|q| q.r1.to_f64()).collect();
        let r2: Vec<f64> = pts[run.clone()].iter().map(|q| q.r2.to_f64()).collect();
        let d1 = nodal_first_derivative(t, &r1)?;
        let d2 = nodal_first_derivative(t, &r2)?;
        let (s1, s2) = (scale_of(&d1), scale_of(&d2));
        for i in 0..t.len() {
            if d1[i].abs() <= 1e-6 * s1 || d2[i].abs() <= 1e-6 * s2 {
                continue;
            }
            let s = if d1[i] * d2[i] > 0.0 { -1 } else { 1 };
            if sign != 0 && s != sign {
                return Ok(0);
            }
            sign = s;
        }
    }
    Ok(sign)
}

/// Checks that M takes umbilics to umbilics, keeps the ellipticity sign and
/// sends the umbilic slope μ into {μ, 1/μ}.
pub fn verify_transform_properties(m: &MoebiusElement, source: &RoCProfile, curve: Option<&dyn PoleCurve>) -> Result<TransformCheck> {
    const UMB_TOL: f64 = 1e-9;
    let image: Vec<RoCPoint> = source.points.iter().map(|&q| apply_roc(m, q)).collect();
    let mut umbilic_samples = 0;
    let mut umbilics_correspond = true;
    for (q, qi) in source.points.iter().zip(&image) {
        let u = q.is_umbilic_tol(UMB_TOL) || (q.r1.is_infinite() && q.r2.is_infinite());
        let ui = qi.is_umbilic_tol(UMB_TOL) || (qi.r1.is_infinite() && qi.r2.is_infinite());
        umbilic_samples += u as usize;
        umbilics_correspond &= u == ui;
    }
    let before = ellipticity(&source.grid, &source.points)?;
    let after = ellipticity(&source.grid, &image)?;
    let (mut slope_source, mut slope_image, mut slope_distances, mut slope_in_set) = (None, None, None, None);
    if let Some(c) = curve {
        if let Ok(s) = umbilic_slope_estimate(c) {
            slope_source = Some(s.slope_estimate);
            let mc = MappedCurve { inner: c, m: *m };
            if let Ok(t) = umbilic_slope_estimate(&mc) {
                let d = ((t.slope_estimate - s.slope_estimate).abs(), (t.slope_estimate - 1.0 / s.slope_estimate).abs());
                slope_image = Some(t.slope_estimate);
                slope_in_set = Some(d.0.min(d.1) <= SLOPE_SET_TOL);
                slope_distances = Some(d);
            }
        }
    }
    Ok(TransformCheck {
        umbilic_samples,
        umbilics_correspond,
        ellipticity_sign: (before, after),
        ellipticity_preserved: before == after,
        slope_source,
        slope_image,
        slope_distances,
        slope_in_set,
    })
}

// ---------------------------------------------------------- AdS geodesics

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdsInvariants {
    pub theta: Vec<f64>,
    pub lambda1: Vec<f64>,
    pub lambda2: Vec<f64>,
    pub lambda3: Vec<f64>,
    /// (max − min)/max(|mean|, 1) of each.
    pub drift: [f64; 3],
    pub skipped: usize,
    pub warnings: Vec<String>,
}

fn drift(v: &[f64]) -> f64 {
    if v.is_empty() {
        return 0.0;
    }
    let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mean = v.iter().sum::<f64>() / v.len() as f64;
    (hi - lo) / mean.abs().max(1.0)
}

/// λ₁, λ₂, λ₃ along the profile in the half-plane (ψ, s), ψ = (r₁+r₂)/2,
/// s = (r₂−r₁)/2, with the curve taken at unit speed for ds² = (dψ² − ds²)/s².
pub fn ads_invariants(p: &RoCProfile) -> Result<AdsInvariants> {
    let run = p
        .finite_runs()
        .into_iter()
        .max_by_key(|r| r.len())
        .filter(|r| r.len() >= 8)
        .ok_or_else(|| Error::Invalid("profile needs at least 8 consecutive finite samples".into()))?;
    let t = &p.grid[run.clone()];
    let (psi, s): (Vec<f64>, Vec<f64>) = p.points[run]
        .iter()
        .map(|q| {
            let (a, b) = q.finite().unwrap();
            ((a + b) / 2.0, (b - a) / 2.0)
        })
        .unzip();
    let dpsi = nodal_first_derivative(t, &psi)?;
    let ds = nodal_first_derivative(t, &s)?;
    let mut out = AdsInvariants {
        theta: Vec::new(),
        lambda1: Vec::new(),
        lambda2: Vec::new(),
        lambda3: Vec::new(),
        drift: [0.0; 3],
        skipped: 0,
        warnings: Vec::new(),
    };
    // turning points of the RoC curve (θ-velocity ≈ 0) carry no direction
    let vel: Vec<f64> = (0..t.len()).map(|i| dpsi[i].hypot(ds[i])).collect();
    let still = 1e-6 * vel.iter().copied().fold(0.0, f64::max);
    let mut prev: Option<(f64, f64)> = None;
    for i in 0..t.len() {
        let (x, y) = (psi[i], s[i]);
        let speed = (dpsi[i] * dpsi[i] - ds[i] * ds[i]).abs().sqrt() / y.abs();
        if y.abs() <= 1e-12 * (1.0 + x.abs()) || vel[i] <= still || speed == 0.0 || !speed.is_finite() {
            out.skipped += 1;
            continue;
        }
        let (mut xd, mut yd) = (dpsi[i] / speed, ds[i] / speed);
        if let Some((px, py)) = prev {
            if px * xd + py * yd < 0.0 {
                xd = -xd;
                yd = -yd;
            }
        }
        prev = Some((xd, yd));
        out.theta.push(t[i]);
        out.lambda1.push((x * x + y * y) / (y * y) * xd - 2.0 * x / y * yd);
        out.lambda2.push(x * xd / (y * y) - yd / y);
        out.lambda3.push(xd / (y * y));
    }
    if out.skipped > 0 {
        out.warnings.push(format!("skipped {} samples on the umbilic line, at turning points or with null tangent", out.skipped));
    }
    out.drift = [drift(&out.lambda1), drift(&out.lambda2), drift(&out.lambda3)];
    Ok(out)
}
