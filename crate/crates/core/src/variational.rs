//! Lagrangians whose Euler–Lagrange equation is r̈ + r − F(ṙ cot θ + r) = 0
//! up to a multiplier, the first integrals 𝓘 and 𝓠, and second variations.

use std::f64::consts::{FRAC_PI_2, PI};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::interp::nodal_first_derivative;
use crate::numeric::quad::gauss_kronrod;
use crate::numeric::root::newton_bracketed;
use crate::relations::WeingartenRelation;
use crate::roc_core::SupportProfile;

const QUAD_ABS: f64 = 1e-12;
const QUAD_REL: f64 = 1e-11;
/// Integrands that are themselves finite differences carry noise near
/// ε/h² and cannot be integrated more tightly than this.
const QUAD_FD: f64 = 1e-8;

/// (θ, r, ṙ) with θ strictly inside (0, π).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VariationalState {
    pub theta: f64,
    pub r: f64,
    pub rdot: f64,
}

impl VariationalState {
    pub fn new(theta: f64, r: f64, rdot: f64) -> Result<Self> {
        if !(theta > 0.0 && theta < PI) {
            return Err(Error::Invalid(format!("state angle {theta} is not interior")));
        }
        Ok(VariationalState { theta, r, rdot })
    }

    pub fn r1(&self) -> f64 {
        self.rdot * self.theta.cos() / self.theta.sin() + self.r
    }
}

/// (state, r̈) along a support function.
pub fn states_along(s: &SupportProfile, thetas: &[f64]) -> Result<Vec<(VariationalState, f64)>> {
    thetas
        .iter()
        .map(|&t| {
            let (r, rd, rdd) = s.eval(t);
            Ok((VariationalState::new(t, r, rd)?, rdd))
        })
        .collect()
}

// ------------------------------------------------------------ multiplier

#[derive(Debug, Clone, PartialEq)]
enum LogE {
    /// r-form α + βr₂ + γr₁ + δr₁r₂ = 0.
    SemiQ([f64; 4]),
    Cubic(f64),
    Numeric,
}

/// E(u) = exp ∫^u dξ/(ξ − F(ξ)), from which Φ₀ = E/|u − F| and 𝓘 = 1/(E sin θ).
/// Semi-quadratic and cubic relations use the closed-form antiderivative;
/// others integrate from `base_point`.
#[derive(Debug, Clone, PartialEq)]
pub struct Multiplier {
    pub rel: WeingartenRelation,
    pub base_point: f64,
    form: LogE,
}

impl Multiplier {
    pub fn new(rel: &WeingartenRelation, base_point: f64) -> Result<Self> {
        let form = match rel {
            WeingartenRelation::CubicRoC { gamma } => LogE::Cubic(*gamma),
            WeingartenRelation::ExplicitF { .. } => LogE::Numeric,
            _ => {
                let c = rel.k_coefficients().unwrap();
                if c[3] == 0.0 && c[1] + c[2] == 0.0 && c[0] == 0.0 {
                    return Err(Error::Degenerate("F(u) = u has no multiplier".into()));
                }
                LogE::SemiQ(c)
            }
        };
        if form == LogE::Numeric {
            let fb = rel.f(base_point)?;
            if !fb.is_finite() || fb == base_point {
                return Err(Error::Domain(format!("base point {base_point} is singular")));
            }
        }
        Ok(Multiplier { rel: rel.clone(), base_point, form })
    }

    fn fixed_point(&self, u: f64) -> Error {
        Error::Domain(format!("multiplier singular at the fixed point r1 = {u}"))
    }

    pub fn ln_e(&self, u: f64) -> Result<f64> {
        match &self.form {
            LogE::SemiQ([al, be, ga, de]) => {
                let q = de * u * u + (be + ga) * u + al;
                if q == 0.0 {
                    return Err(self.fixed_point(u));
                }
                if *de != 0.0 {
                    let l1 = be - ga;
                    let d = (be + ga) * (be + ga) - 4.0 * al * de;
                    let s = 2.0 * de * u + be + ga;
                    let j = if d > 0.0 {
                        let sd = d.sqrt();
                        ((s - sd) / (s + sd)).abs().ln() / sd
                    } else if d < 0.0 {
                        let sd = (-d).sqrt();
                        2.0 / sd * (s / sd).atan()
                    } else {
                        -2.0 / s
                    };
                    Ok(0.5 * q.abs().ln() + 0.5 * l1 * j)
                } else if be + ga != 0.0 {
                    Ok(be / (be + ga) * q.abs().ln())
                } else {
                    Ok(be * u / al)
                }
            }
            LogE::Cubic(g) => {
                let w = 1.0 - g * g * u * u;
                if u == 0.0 || w == 0.0 {
                    return Err(self.fixed_point(u));
                }
                Ok(u.abs().ln() - 0.5 * w.abs().ln())
            }
            LogE::Numeric => {
                let (a, b) = (self.base_point.min(u), self.base_point.max(u));
                if let Some(x) = self.rel.fixed_points(a, b).first() {
                    return Err(self.fixed_point(*x));
                }
                let mut err = None;
                let v = gauss_kronrod(
                    |x| match self.rel.f(x) {
                        Ok(fx) => 1.0 / (x - fx),
                        Err(e) => {
                            err.get_or_insert(e);
                            f64::NAN
                        }
                    },
                    self.base_point,
                    u,
                    QUAD_ABS,
                    QUAD_REL,
                );
                if let Some(e) = err {
                    return Err(e);
                }
                v
            }
        }
    }

    fn gap(&self, u: f64) -> Result<f64> {
        let g = u - self.rel.f(u)?;
        if g == 0.0 {
            return Err(self.fixed_point(u));
        }
        Ok(g)
    }

    /// Φ₀(u) = E(u)/|u − F(u)|.
    pub fn phi0(&self, u: f64) -> Result<f64> {
        let g = self.gap(u)?;
        if g.is_infinite() {
            return Ok(0.0);
        }
        Ok(self.ln_e(u)?.exp() / g.abs())
    }

    /// P(u) = (u − F)Φ₀, the antiderivative of Φ₀ that makes 𝓛₀ work.
    pub fn inner(&self, u: f64) -> Result<f64> {
        Ok(self.gap(u)?.signum() * self.ln_e(u)?.exp())
    }

    /// G with G′ = P.
    pub fn outer(&self, u: f64) -> Result<f64> {
        match &self.rel {
            WeingartenRelation::LinearHopf { lambda, c } => Ok(hopf_outer(*lambda, *c, u)),
            WeingartenRelation::PureKLinear { lambda } if *lambda != 0.0 => Ok(hopf_outer(1.0 / lambda, 0.0, u)),
            WeingartenRelation::CubicRoC { gamma } if *gamma != 0.0 => {
                Ok(-(1.0 - gamma * gamma * u * u).abs().sqrt() / (gamma * gamma))
            }
            WeingartenRelation::CubicRoC { .. } => Ok(0.5 * u * u),
            _ => {
                let mut err = None;
                let v = gauss_kronrod(
                    |x| match self.inner(x) {
                        Ok(p) => p,
                        Err(e) => {
                            err.get_or_insert(e);
                            f64::NAN
                        }
                    },
                    self.base_point,
                    u,
                    QUAD_ABS,
                    QUAD_REL,
                );
                if let Some(e) = err {
                    return Err(e);
                }
                v
            }
        }
    }

    /// 𝓘 = exp(∫^{r₁} du/(F(u) − u))/sin θ.
    pub fn first_integral_i(&self, s: &VariationalState) -> Result<f64> {
        Ok((-self.ln_e(s.r1())?).exp() / s.theta.sin())
    }

    /// The r₁ with 𝓘(θ, r₁) = c, found from `guess` without crossing a fixed point.
    pub fn r1_for(&self, c: f64, theta: f64, guess: f64) -> Result<f64> {
        if c <= 0.0 {
            return Err(Error::Domain("first integral must be positive".into()));
        }
        let target = -(c * theta.sin()).ln();
        let h = |r: f64| -> Result<(f64, f64)> { Ok((self.ln_e(r)? - target, 1.0 / self.gap(r)?)) };
        let (h0, d0) = h(guess)?;
        if h0 == 0.0 {
            return Ok(guess);
        }
        let dir = if h0 * d0 > 0.0 { -1.0 } else { 1.0 };
        let mut step = 1e-3 * (1.0 + guess.abs());
        let mut a = guess;
        for _ in 0..400 {
            let b = a + dir * step;
            match h(b) {
                Ok((hb, db)) if hb.is_finite() && db.signum() == d0.signum() => {
                    if hb.signum() != h0.signum() {
                        return newton_bracketed(h, a, b, 0.5 * (a + b), 1e-15);
                    }
                    a = b;
                    step *= 2.0;
                }
                _ => {
                    step *= 0.5;
                    if step < 1e-15 * (1.0 + a.abs()) {
                        break;
                    }
                }
            }
        }
        Err(Error::Numeric(format!("could not bracket r1 for C = {c} at theta = {theta}")))
    }

    /// 𝓠 = r/cos θ − ∫_{θa}^{θ} r₁(𝓘, u) sin u/cos²u du.
    pub fn first_integral_q(&self, s: &VariationalState, theta_a: f64) -> Result<f64> {
        let (lo, hi) = (theta_a.min(s.theta), theta_a.max(s.theta));
        if lo < FRAC_PI_2 && hi >= FRAC_PI_2 || (s.theta - FRAC_PI_2).abs() < 1e-12 {
            return Err(Error::Singular(FRAC_PI_2));
        }
        let c = self.first_integral_i(s)?;
        let mut last = s.r1();
        let mut err = None;
        let j = gauss_kronrod(
            |u| match self.r1_for(c, u, last) {
                Ok(r) => {
                    last = r;
                    r * u.sin() / (u.cos() * u.cos())
                }
                Err(e) => {
                    err.get_or_insert(e);
                    f64::NAN
                }
            },
            theta_a,
            s.theta,
            QUAD_ABS,
            QUAD_REL,
        );
        if let Some(e) = err {
            return Err(e);
        }
        Ok(s.r / s.theta.cos() - j?)
    }
}

fn hopf_outer(lambda: f64, c: f64, u: f64) -> f64 {
    let g = c - (1.0 - lambda) * u;
    if (1.0 - lambda).abs() == 0.0 {
        // F = u + C: P = sgn(−C) e^{−u/C}
        return c.abs() * (-u / c).exp();
    }
    if (2.0 - lambda).abs() <= 1e-9 {
        return -g.abs().ln();
    }
    g.abs().powf((2.0 - lambda) / (1.0 - lambda)) / (2.0 - lambda)
}

/// Φ₀ with the closed-form (natural) anchor, or `base_point` for explicit relations.
pub fn phi0(rel: &WeingartenRelation, u: f64) -> Result<f64> {
    Multiplier::new(rel, u)?.phi0(u)
}

// ------------------------------------------------------------- lagrangians

/// f(𝓘, 𝓠) = coeff · 𝓘^i_pow · 𝓠^q_pow.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FSpec {
    pub coeff: f64,
    pub i_pow: f64,
    #[serde(default)]
    pub q_pow: f64,
    /// Lower limit of the integral inside 𝓠.
    #[serde(default)]
    pub q_anchor: f64,
}

impl FSpec {
    pub fn one() -> Self {
        FSpec { coeff: 1.0, i_pow: 0.0, q_pow: 0.0, q_anchor: 0.0 }
    }

    pub fn i_power(p: f64) -> Self {
        FSpec { i_pow: p, ..Self::one() }
    }

    fn is_one(&self) -> bool {
        self.coeff == 1.0 && self.i_pow == 0.0 && self.q_pow == 0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum LagrangianSpec {
    L0,
    HopfL1 { lambda: f64, c: f64 },
    CubicL1 { gamma: f64 },
    /// ∫₀^ṙ (ṙ − u) f(𝓘,𝓠)Φ₀ du with g₁ = g₂ = 0.
    General { f: FSpec },
}

impl LagrangianSpec {
    pub fn name(&self) -> &'static str {
        match self {
            LagrangianSpec::L0 => "L0",
            LagrangianSpec::HopfL1 { .. } => "HopfL1",
            LagrangianSpec::CubicL1 { .. } => "CubicL1",
            LagrangianSpec::General { .. } => "General",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hessian {
    pub rr: f64,
    pub r_rdot: f64,
    pub rdot_rdot: f64,
    pub theta_rdot: f64,
}

/// A Lagrangian together with the multiplier it is built on.
#[derive(Debug, Clone)]
pub struct Lagrangian {
    pub spec: LagrangianSpec,
    pub mult: Multiplier,
}

const FD_REL: f64 = 1e-5;

/// Central difference with one Richardson level.
fn diff<F: FnMut(f64) -> Result<f64>>(mut g: F, x: f64) -> Result<f64> {
    let h = FD_REL * (1.0 + x.abs());
    let mut d = |h: f64| -> Result<f64> { Ok((g(x + h)? - g(x - h)?) / (2.0 * h)) };
    let (d1, d2) = (d(h)?, d(0.5 * h)?);
    Ok((4.0 * d2 - d1) / 3.0)
}

impl Lagrangian {
    pub fn new(spec: LagrangianSpec, rel: &WeingartenRelation, base_point: f64) -> Result<Self> {
        match spec {
            LagrangianSpec::HopfL1 { lambda, .. } if lambda == 1.0 => {
                return Err(Error::Degenerate("HopfL1 needs lambda != 1".into()))
            }
            LagrangianSpec::CubicL1 { gamma } if gamma == 0.0 => {
                return Err(Error::Degenerate("CubicL1 needs gamma != 0".into()))
            }
            _ => {}
        }
        Ok(Lagrangian { spec, mult: Multiplier::new(rel, base_point)? })
    }

    fn check_l0(&self, s: &VariationalState) -> Result<()> {
        if matches!(self.spec, LagrangianSpec::L0) && (s.theta - FRAC_PI_2).abs() < 1e-9 {
            return Err(Error::Singular(s.theta));
        }
        Ok(())
    }

    /// f(𝓘, 𝓠) for the general kind.
    fn f_factor(&self, f: &FSpec, s: &VariationalState) -> Result<f64> {
        let mut v = f.coeff;
        if f.i_pow != 0.0 {
            v *= self.mult.first_integral_i(s)?.powf(f.i_pow);
        }
        if f.q_pow != 0.0 {
            v *= self.mult.first_integral_q(s, f.q_anchor)?.powf(f.q_pow);
        }
        Ok(v)
    }

    /// The multiplier Φ = ∂²𝓛/∂ṙ² the Euler–Lagrange equation carries.
    pub fn phi(&self, s: &VariationalState) -> Result<f64> {
        match self.spec {
            LagrangianSpec::L0 => self.mult.phi0(s.r1()),
            LagrangianSpec::HopfL1 { lambda, .. } => Ok(s.theta.sin().powf(-lambda)),
            LagrangianSpec::CubicL1 { .. } => {
                let w = s.rdot * s.theta.cos() + s.r * s.theta.sin();
                Ok(w.abs().powi(-3))
            }
            LagrangianSpec::General { f } => Ok(self.f_factor(&f, s)? * self.mult.phi0(s.r1())?),
        }
    }

    fn general_integral(
        &self,
        s: &VariationalState,
        weight: impl Fn(f64) -> f64,
        field: impl Fn(&VariationalState) -> Result<f64>,
        tol: f64,
    ) -> Result<f64> {
        let mut err = None;
        let v = gauss_kronrod(
            |u| {
                let st = VariationalState { rdot: u, ..*s };
                match field(&st) {
                    Ok(p) => weight(u) * p,
                    Err(e) => {
                        err.get_or_insert(e);
                        f64::NAN
                    }
                }
            },
            0.0,
            s.rdot,
            tol * QUAD_ABS / QUAD_REL,
            tol,
        );
        if let Some(e) = err {
            return Err(e);
        }
        v
    }

    pub fn value(&self, s: &VariationalState) -> Result<f64> {
        self.check_l0(s)?;
        let (t, r, rd) = (s.theta, s.r, s.rdot);
        match self.spec {
            LagrangianSpec::L0 => Ok(t.tan().powi(2) * self.mult.outer(s.r1())?),
            LagrangianSpec::HopfL1 { lambda, c } => {
                Ok((2.0 * c * r - (1.0 - lambda) * r * r + rd * rd) / (2.0 * t.sin().powf(lambda)))
            }
            LagrangianSpec::CubicL1 { gamma } => {
                let w = rd * t.cos() + r * t.sin();
                Ok(w.signum() * (1.0 / (2.0 * t.cos().powi(2) * w) + gamma * gamma * r / t.sin().powi(3)))
            }
            LagrangianSpec::General { .. } => self.general_integral(s, |u| rd - u, |x| self.phi(x), QUAD_REL),
        }
    }

    /// (∂𝓛/∂r, ∂𝓛/∂ṙ).
    pub fn grad(&self, s: &VariationalState) -> Result<(f64, f64)> {
        self.check_l0(s)?;
        let (t, r, rd) = (s.theta, s.r, s.rdot);
        match self.spec {
            LagrangianSpec::L0 => {
                let p = self.mult.inner(s.r1())?;
                Ok((t.tan().powi(2) * p, t.tan() * p))
            }
            LagrangianSpec::HopfL1 { lambda, c } => {
                let sl = t.sin().powf(lambda);
                Ok(((c - (1.0 - lambda) * r) / sl, rd / sl))
            }
            LagrangianSpec::CubicL1 { gamma } => {
                let w = rd * t.cos() + r * t.sin();
                let sg = w.signum();
                Ok((
                    sg * (-t.sin() / (2.0 * t.cos().powi(2) * w * w) + gamma * gamma / t.sin().powi(3)),
                    sg * (-1.0 / (2.0 * t.cos() * w * w)),
                ))
            }
            LagrangianSpec::General { .. } => {
                let lr = diff(|x| self.value(&VariationalState { r: x, ..*s }), r)?;
                let lrd = self.general_integral(s, |_| 1.0, |x| self.phi(x), QUAD_REL)?;
                Ok((lr, lrd))
            }
        }
    }

    pub fn hessian(&self, s: &VariationalState) -> Result<Hessian> {
        if let LagrangianSpec::General { .. } = self.spec {
            let d_r = |x: &VariationalState| diff(|v| self.phi(&VariationalState { r: v, ..*x }), x.r);
            let d_t = |x: &VariationalState| diff(|v| self.phi(&VariationalState { theta: v, ..*x }), x.theta);
            let d_rr = |x: &VariationalState| {
                diff(|v| diff(|w| self.phi(&VariationalState { r: w, ..*x }), v), x.r)
            };
            return Ok(Hessian {
                rr: self.general_integral(s, |u| s.rdot - u, d_rr, QUAD_FD)?,
                r_rdot: self.general_integral(s, |_| 1.0, d_r, QUAD_FD)?,
                rdot_rdot: self.phi(s)?,
                theta_rdot: self.general_integral(s, |_| 1.0, d_t, QUAD_FD)?,
            });
        }
        let lrd = |x: VariationalState| Ok(self.grad(&x)?.1);
        Ok(Hessian {
            rr: diff(|v| Ok(self.grad(&VariationalState { r: v, ..*s })?.0), s.r)?,
            r_rdot: diff(|v| lrd(VariationalState { r: v, ..*s }), s.r)?,
            rdot_rdot: diff(|v| lrd(VariationalState { rdot: v, ..*s }), s.rdot)?,
            theta_rdot: diff(|v| lrd(VariationalState { theta: v, ..*s }), s.theta)?,
        })
    }

    /// ∇EL𝓛 in the expanded form 𝓛_ṙṙ r̈ + 𝓛_rṙ ṙ + 𝓛_θṙ − 𝓛_r.
    pub fn euler_lagrange(&self, s: &VariationalState, rddot: f64) -> Result<f64> {
        let h = self.hessian(s)?;
        let lr = if let LagrangianSpec::General { .. } = self.spec {
            let dr = |x: &VariationalState| diff(|v| self.phi(&VariationalState { r: v, ..*x }), x.r);
            self.general_integral(s, |u| s.rdot - u, dr, QUAD_FD)?
        } else {
            self.grad(s)?.0
        };
        Ok(h.rdot_rdot * rddot + h.r_rdot * s.rdot + h.theta_rdot - lr)
    }

    /// Φ·(r̈ + r − F(r₁)).
    pub fn multiplier_form(&self, s: &VariationalState, rddot: f64) -> Result<f64> {
        Ok(self.phi(s)? * (rddot + s.r - self.mult.rel.f(s.r1())?))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ElSample {
    pub theta: f64,
    pub euler_lagrange: f64,
    pub multiplier_form: f64,
    pub difference: f64,
    /// Singular state; the values are NaN.
    pub skipped: bool,
}

pub fn euler_lagrange_residual(lag: &Lagrangian, trajectory: &SupportProfile, thetas: &[f64]) -> Result<Vec<ElSample>> {
    let mut out = Vec::with_capacity(thetas.len());
    for (s, rdd) in states_along(trajectory, thetas)? {
        let el = lag.euler_lagrange(&s, rdd);
        let mf = lag.multiplier_form(&s, rdd);
        out.push(match (el, mf) {
            (Ok(a), Ok(b)) if a.is_finite() && b.is_finite() => {
                ElSample { theta: s.theta, euler_lagrange: a, multiplier_form: b, difference: a - b, skipped: false }
            }
            (Err(e @ (Error::Numeric(_) | Error::Invalid(_))), _) | (_, Err(e @ (Error::Numeric(_) | Error::Invalid(_)))) => {
                return Err(e)
            }
            _ => ElSample {
                theta: s.theta,
                euler_lagrange: f64::NAN,
                multiplier_form: f64::NAN,
                difference: f64::NAN,
                skipped: true,
            },
        });
    }
    Ok(out)
}

/// d/dθ(∂E/∂r̈) − ∂E/∂ṙ for E = Φ·(r̈ + r − F(r₁)), which reduces to
/// Φ_θ + ṙΦ_r + (F − r)Φ_ṙ + Φ F′(r₁) cot θ.
pub fn helmholtz_residual(
    rel: &WeingartenRelation,
    phi: &dyn Fn(&VariationalState) -> Result<f64>,
    states: &[VariationalState],
) -> Result<Vec<f64>> {
    states
        .iter()
        .map(|s| {
            let p = phi(s)?;
            let pt = diff(|v| phi(&VariationalState { theta: v, ..*s }), s.theta)?;
            let pr = diff(|v| phi(&VariationalState { r: v, ..*s }), s.r)?;
            let prd = diff(|v| phi(&VariationalState { rdot: v, ..*s }), s.rdot)?;
            let r1 = s.r1();
            let cot = s.theta.cos() / s.theta.sin();
            Ok(pt + s.rdot * pr + (rel.f(r1)? - s.r) * prd + p * rel.f_prime(r1)? * cot)
        })
        .collect()
}

/// Largest |d/dθ log(Φa/Φb)| along the states (ordered by θ).
pub fn jlm_ratio_check(
    phi_a: &dyn Fn(&VariationalState) -> Result<f64>,
    phi_b: &dyn Fn(&VariationalState) -> Result<f64>,
    states: &[VariationalState],
) -> Result<f64> {
    let t: Vec<f64> = states.iter().map(|s| s.theta).collect();
    let lr = states
        .iter()
        .map(|s| Ok((phi_a(s)? / phi_b(s)?).abs().ln()))
        .collect::<Result<Vec<f64>>>()?;
    let d = nodal_first_derivative(&t, &lr)?;
    Ok(d.iter().fold(0.0, |m, x| m.max(x.abs())))
}

/// (max − min)/max(|mean|, 1).
pub fn relative_drift(v: &[f64]) -> f64 {
    if v.is_empty() {
        return 0.0;
    }
    let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mean = v.iter().sum::<f64>() / v.len() as f64;
    (hi - lo) / mean.abs().max(1.0)
}

pub fn i_drift(m: &Multiplier, states: &[VariationalState]) -> Result<f64> {
    let v = states.iter().map(|s| m.first_integral_i(s)).collect::<Result<Vec<_>>>()?;
    Ok(relative_drift(&v))
}

/// 𝓠 drift on each side of the equator, each side anchored at its sample
/// furthest from π/2 and skipping samples within `margin` of it.
pub fn q_drift(m: &Multiplier, states: &[VariationalState], margin: f64) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for north in [true, false] {
        let side: Vec<&VariationalState> = states
            .iter()
            .filter(|s| (s.theta < FRAC_PI_2) == north && (s.theta - FRAC_PI_2).abs() > margin)
            .collect();
        let Some(anchor) = side.iter().map(|s| s.theta).min_by(|a, b| (a - FRAC_PI_2).abs().total_cmp(&(b - FRAC_PI_2).abs()).reverse()) else {
            continue;
        };
        let v = side.iter().map(|s| m.first_integral_q(s, anchor)).collect::<Result<Vec<_>>>()?;
        worst = worst.max(relative_drift(&v));
    }
    Ok(worst)
}

// ------------------------------------------------------ second variation

/// Σ cₙ sin(nπ(θ − θ₁)/(θ₂ − θ₁)), vanishing at both ends.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Perturbation {
    pub coeffs: Vec<f64>,
    pub interval: (f64, f64),
}

pub const BASIS_SIZE: usize = 10;

impl Perturbation {
    pub fn basis(n: usize, interval: (f64, f64)) -> Self {
        let mut coeffs = vec![0.0; n];
        coeffs[n - 1] = 1.0;
        Perturbation { coeffs, interval }
    }

    /// (v, v̇).
    pub fn eval(&self, theta: f64) -> (f64, f64) {
        let (a, b) = self.interval;
        let k = PI / (b - a);
        let x = theta - a;
        self.coeffs.iter().enumerate().fold((0.0, 0.0), |(v, d), (i, c)| {
            let w = k * (i + 1) as f64;
            (v + c * (w * x).sin(), d + c * w * (w * x).cos())
        })
    }
}

fn straddles(a: f64, b: f64) -> bool {
    a.min(b) <= FRAC_PI_2 && a.max(b) >= FRAC_PI_2
}

/// δ²S = ∫ f₁v² + 2f₂vv̇ + f₃v̇² with fᵢ the second partials of 𝓛 on r*.
pub fn second_variation(lag: &Lagrangian, r_star: &SupportProfile, v: &Perturbation) -> Result<f64> {
    let (a, b) = v.interval;
    if matches!(lag.spec, LagrangianSpec::L0) && straddles(a, b) {
        return Err(Error::Inadmissible("L0 interval must not contain pi/2".into()));
    }
    if !(a > 0.0 && b < PI && a < b) || a < r_star.lo() || b > r_star.hi() {
        return Err(Error::Invalid(format!("interval [{a}, {b}] outside the trajectory")));
    }
    let mut err = None;
    let val = gauss_kronrod(
        |t| {
            let (r, rd, _) = r_star.eval(t);
            let s = VariationalState { theta: t, r, rdot: rd };
            let (x, dx) = v.eval(t);
            match lag.hessian(&s) {
                Ok(h) => h.rr * x * x + 2.0 * h.r_rdot * x * dx + h.rdot_rdot * dx * dx,
                Err(e) => {
                    err.get_or_insert(e);
                    f64::NAN
                }
            }
        },
        a,
        b,
        1e-13,
        1e-11,
    );
    if let Some(e) = err {
        return Err(e);
    }
    val
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StabilitySummary {
    pub min: f64,
    /// 0..BASIS_SIZE are the pure modes n = 1..=10; later indices are the
    /// supplied combinations in order.
    pub argmin_basis_index: usize,
}

pub fn stability_scan(lag: &Lagrangian, r_star: &SupportProfile, interval: (f64, f64), combos: &[Vec<f64>]) -> Result<(StabilitySummary, Vec<f64>)> {
    let mut fields: Vec<Perturbation> = (1..=BASIS_SIZE).map(|n| Perturbation::basis(n, interval)).collect();
    fields.extend(combos.iter().map(|c| Perturbation { coeffs: c.clone(), interval }));
    let vals = fields.iter().map(|v| second_variation(lag, r_star, v)).collect::<Result<Vec<_>>>()?;
    let (i, m) = vals.iter().enumerate().fold((0, f64::INFINITY), |acc, (i, &x)| if x < acc.1 { (i, x) } else { acc });
    Ok((StabilitySummary { min: m, argmin_basis_index: i }, vals))
}

// ------------------------------------------------- general construction

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneralLagrangian {
    pub spec: LagrangianSpec,
    /// Largest Helmholtz residual of Φ = f(𝓘,𝓠)Φ₀ over the states.
    pub pde_residual_max: f64,
    /// Largest |∇EL𝓛 − Φ(r̈ + r − F)| with the registered (g₁, g₂).
    pub el_residual_max: Option<f64>,
    /// Range of ∇EL𝓛 − Φ(r̈ + r − F) when no (g₁, g₂) is registered; this is
    /// the ∂g₁/∂θ − ∂g₂/∂r that a completing pair would have to supply.
    pub defect_range: Option<(f64, f64)>,
}

pub const PDE_TOL: f64 = 1e-6;

/// Builds Φ = f(𝓘,𝓠)Φ₀, checks it is a last multiplier, and picks the
/// registered closed form when one exists.
pub fn general_lagrangian(
    rel: &WeingartenRelation,
    f: FSpec,
    base_point: f64,
    states: &[(VariationalState, f64)],
) -> Result<GeneralLagrangian> {
    let general = Lagrangian::new(LagrangianSpec::General { f }, rel, base_point)?;
    let plain: Vec<VariationalState> = states.iter().map(|s| s.0).collect();
    let res = helmholtz_residual(rel, &|s| general.phi(s), &plain)?;
    let scale = plain.iter().map(|s| general.phi(s)).collect::<Result<Vec<_>>>()?.iter().fold(1.0f64, |m, x| m.max(x.abs()));
    let pde_residual_max = res.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if pde_residual_max > PDE_TOL * scale {
        return Err(Error::Numeric(format!(
            "f(I, Q) Phi0 is not a Jacobi last multiplier (residual {pde_residual_max:e})"
        )));
    }
    let registered = match (rel, f) {
        _ if f.is_one() => Some(LagrangianSpec::L0),
        (WeingartenRelation::LinearHopf { lambda, c }, f) if f.coeff == 1.0 && f.q_pow == 0.0 && f.i_pow == *lambda => {
            Some(LagrangianSpec::HopfL1 { lambda: *lambda, c: *c })
        }
        (WeingartenRelation::CubicRoC { gamma }, f) if f.coeff == 1.0 && f.q_pow == 0.0 && f.i_pow == 3.0 => {
            Some(LagrangianSpec::CubicL1 { gamma: *gamma })
        }
        _ => None,
    };
    let check = |lag: &Lagrangian| -> Result<Vec<f64>> {
        states
            .iter()
            .filter(|(s, _)| !(matches!(lag.spec, LagrangianSpec::L0) && (s.theta - FRAC_PI_2).abs() < 1e-6))
            .map(|(s, rdd)| Ok(lag.euler_lagrange(s, *rdd)? - lag.multiplier_form(s, *rdd)?))
            .collect()
    };
    match registered {
        Some(spec) => {
            let lag = Lagrangian::new(spec, rel, base_point)?;
            let d = check(&lag)?;
            Ok(GeneralLagrangian {
                spec,
                pde_residual_max,
                el_residual_max: Some(d.iter().fold(0.0f64, |m, x| m.max(x.abs()))),
                defect_range: None,
            })
        }
        None => {
            let d = check(&general)?;
            let lo = d.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = d.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            Ok(GeneralLagrangian { spec: general.spec, pde_residual_max, el_residual_max: None, defect_range: Some((lo, hi)) })
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariationalReport {
    pub lagrangian_kind: String,
    pub el_residual_max: f64,
    pub helmholtz_residual_max: f64,
    /// None where the multiplier is singular along the trajectory (r₁ at a
    /// fixed point of F, as on the sphere members).
    #[serde(rename = "I_drift")]
    pub i_drift: Option<f64>,
    #[serde(rename = "Q_drift")]
    pub q_drift: Option<f64>,
    pub second_variation: StabilitySummary,
}

/// Drift, or None when the multiplier is singular: r₁ at a fixed point of F
/// somewhere on the trajectory, where 𝓘 and 𝓠 are undefined.
fn unless_singular(rel: &WeingartenRelation, states: &[VariationalState], v: impl FnOnce() -> Result<f64>) -> Result<Option<f64>> {
    let at_fixed_point = states.iter().any(|s| {
        let u = s.r1();
        rel.f(u).is_ok_and(|f| (u - f).abs() <= 1e-8 * (1.0 + u.abs()))
    });
    if at_fixed_point {
        return Ok(None);
    }
    match v() {
        Ok(x) => Ok(Some(x)),
        Err(Error::Domain(_)) => Ok(None),
        Err(e) => Err(e),
    }
}

/// Runs every check for one Lagrangian along one CM trajectory, restricted
/// to `interval` (which must avoid π/2 for L0).
pub fn report(lag: &Lagrangian, trajectory: &SupportProfile, interval: (f64, f64), samples: usize, combos: &[Vec<f64>]) -> Result<VariationalReport> {
    let (a, b) = interval;
    if matches!(lag.spec, LagrangianSpec::L0) && straddles(a, b) {
        return Err(Error::Inadmissible("L0 interval must not contain pi/2".into()));
    }
    let thetas: Vec<f64> = (0..=samples).map(|i| a + (b - a) * i as f64 / samples as f64).collect();
    let el = euler_lagrange_residual(lag, trajectory, &thetas)?;
    let el_residual_max = el.iter().filter(|s| !s.skipped).fold(0.0f64, |m, s| m.max(s.difference.abs()));
    let states: Vec<VariationalState> = states_along(trajectory, &thetas)?.into_iter().map(|s| s.0).collect();
    let h = helmholtz_residual(&lag.mult.rel, &|s| lag.phi(s), &states)?;
    let helmholtz_residual_max = h.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let (second_variation, _) = stability_scan(lag, trajectory, interval, combos)?;
    Ok(VariationalReport {
        lagrangian_kind: lag.spec.name().to_string(),
        el_residual_max,
        helmholtz_residual_max,
        i_drift: unless_singular(&lag.mult.rel, &states, || i_drift(&lag.mult, &states))?,
        q_drift: unless_singular(&lag.mult.rel, &states, || q_drift(&lag.mult, &states, 0.05))?,
        second_variation,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::interp::linspace;
    use std::sync::Arc;
    use WeingartenRelation as W;

    fn hopf(lambda: f64, c: f64) -> W {
        W::LinearHopf { lambda, c }
    }

    fn two_u_support(k: f64) -> SupportProfile {
        SupportProfile::analytic(
            linspace(0.05, PI - 0.05, 200),
            Arc::new(move |t: f64| {
                let (s, c) = t.sin_cos();
                (s - t * c + k * c, t * s - k * s, s + t * c - k * c)
            }),
        )
        .unwrap()
    }

    #[test]
    fn phi0_closed_forms() {
        assert!((phi0(&hopf(2.0, 0.0), 1.5).unwrap() - 1.0 / 2.25).abs() < 1e-15);
        let (l, c, u) = (-0.5, 1.0, 0.7);
        let want = (c + (l - 1.0) * u as f64).abs().powf(l / (1.0 - l));
        assert!((phi0(&hopf(l, c), u).unwrap() - want).abs() < 1e-14);
        let want = (1.0f64 - 0.64).powf(-1.5);
        assert!((phi0(&W::CubicRoC { gamma: 1.0 }, 0.8).unwrap() - want).abs() < 1e-13);
        assert!(phi0(&hopf(2.0, 0.0), 0.0).is_err());
    }

    #[test]
    fn numeric_multiplier_matches_closed_form_up_to_scale() {
        let expr = crate::relations::parse_expr("3*r1 - 1").unwrap();
        let num = Multiplier::new(&W::ExplicitF { expr }, 2.0).unwrap();
        let closed = Multiplier::new(&hopf(3.0, -1.0), 0.0).unwrap();
        let r: Vec<f64> = [1.0, 1.5, 2.5].iter().map(|&u| num.phi0(u).unwrap() / closed.phi0(u).unwrap()).collect();
        assert!((r[0] - r[1]).abs() < 1e-10 && (r[1] - r[2]).abs() < 1e-10, "{r:?}");
        // across the fixed point u = 0.5
        assert!(num.phi0(0.2).is_err());
    }

    #[test]
    fn semi_quadratic_log_e_differentiates_correctly() {
        let rel = W::SemiQuadratic { alpha: 0.3, beta: 1.0, gamma: 0.5, delta: -2.0 };
        let m = Multiplier::new(&rel, 0.0).unwrap();
        for u in [0.9, 1.7, -0.4] {
            let h = 1e-6;
            let d = (m.ln_e(u + h).unwrap() - m.ln_e(u - h).unwrap()) / (2.0 * h);
            assert!((d - 1.0 / (u - rel.f(u).unwrap())).abs() < 1e-7, "{u}");
        }
    }

    #[test]
    fn hopf_l1_value() {
        let (l, c) = (0.5, 0.3);
        let lag = Lagrangian::new(LagrangianSpec::HopfL1 { lambda: l, c }, &hopf(l, c), 0.0).unwrap();
        let s = VariationalState::new(PI / 4.0, 1.0, 0.0).unwrap();
        let want = (2.0 * c - (1.0 - l)) / (2.0 * (PI / 4.0).sin().powf(l));
        assert!((lag.value(&s).unwrap() - want).abs() < 1e-15);
    }

    #[test]
    fn l0_multiplier_identity() {
        let rel = hopf(2.0, 0.0);
        let lag = Lagrangian::new(LagrangianSpec::L0, &rel, 1.0).unwrap();
        let sol = two_u_support(0.0);
        let t = linspace(0.3, 1.4, 20);
        for e in euler_lagrange_residual(&lag, &sol, &t).unwrap() {
            assert!(e.difference.abs() < 1e-6 && e.multiplier_form.abs() < 1e-8);
        }
        let non = SupportProfile::analytic(
            linspace(0.1, 3.0, 50),
            Arc::new(|t: f64| (1.0 + 0.1 * (2.0 * t).sin(), 0.2 * (2.0 * t).cos(), -0.4 * (2.0 * t).sin())),
        )
        .unwrap();
        for e in euler_lagrange_residual(&lag, &non, &t).unwrap() {
            assert!(e.difference.abs() < 1e-6);
            assert!(e.multiplier_form.abs() > 1e-3);
        }
    }

    #[test]
    fn sphere_hopf_l1() {
        // r₂ = 1 − r₁ holds on the sphere of radius 1/2
        let rel = hopf(-1.0, 1.0);
        let lag = Lagrangian::new(LagrangianSpec::HopfL1 { lambda: -1.0, c: 1.0 }, &rel, 0.0).unwrap();
        let sphere = SupportProfile::analytic(linspace(0.2, 3.0, 20), Arc::new(|_| (0.5, 0.0, 0.0))).unwrap();
        for e in euler_lagrange_residual(&lag, &sphere, &linspace(0.3, 2.9, 30)).unwrap() {
            assert!(e.difference.abs() < 1e-8);
        }
    }

    #[test]
    fn helmholtz_examples() {
        let rel = hopf(2.0, 0.0);
        let states: Vec<VariationalState> =
            [(0.4, 1.0, 0.3), (1.1, 0.7, -0.2), (2.2, 0.9, 0.5)].iter().map(|&(t, r, d)| VariationalState::new(t, r, d).unwrap()).collect();
        let raw = helmholtz_residual(&rel, &|_| Ok(1.0), &states).unwrap();
        for (s, v) in states.iter().zip(&raw) {
            assert!((v - 2.0 / s.theta.tan()).abs() < 1e-12);
        }
        let m = Multiplier::new(&rel, 1.0).unwrap();
        let with = helmholtz_residual(&rel, &|s| m.phi0(s.r1()), &states).unwrap();
        assert!(with.iter().all(|v| v.abs() < 1e-6));
        let shift = hopf(1.0, 0.4);
        let flat = helmholtz_residual(&shift, &|s| Ok(1.0 / s.theta.sin()), &states).unwrap();
        assert!(flat.iter().all(|v| v.abs() < 1e-9));
    }

    #[test]
    fn first_integrals_for_two_u() {
        let rel = hopf(2.0, 0.0);
        let m = Multiplier::new(&rel, 1.0).unwrap();
        for k in [-1.0, 0.0, 2.0] {
            let sol = two_u_support(k);
            for t in [0.3, 0.8, 1.3] {
                let (s, _) = states_along(&sol, &[t]).unwrap()[0];
                assert!((m.first_integral_i(&s).unwrap() - 1.0).abs() < 1e-12);
                assert!((m.first_integral_q(&s, 0.0).unwrap() - k).abs() < 1e-8, "{k} {t}");
            }
        }
    }

    #[test]
    fn jlm_ratios() {
        let rel = hopf(2.0, 0.0);
        let m = Multiplier::new(&rel, 1.0).unwrap();
        let sol = two_u_support(0.0);
        let states: Vec<_> = states_along(&sol, &linspace(0.3, 1.3, 40)).unwrap().into_iter().map(|s| s.0).collect();
        let p0 = |s: &VariationalState| m.phi0(s.r1());
        assert_eq!(jlm_ratio_check(&p0, &p0, &states).unwrap(), 0.0);
        let p1 = |s: &VariationalState| Ok(m.first_integral_i(s)?.powf(2.0) * m.phi0(s.r1())?);
        assert!(jlm_ratio_check(&p0, &p1, &states).unwrap() < 1e-6);
        assert!(jlm_ratio_check(&p0, &|_| Ok(1.0), &states).unwrap() > 0.1);
    }

    #[test]
    fn second_variation_l0_integrand() {
        let rel = hopf(2.0, 0.0);
        let lag = Lagrangian::new(LagrangianSpec::L0, &rel, 1.0).unwrap();
        let sol = two_u_support(0.0);
        let v = Perturbation { coeffs: vec![1.0, -0.3, 0.2], interval: (0.3, 1.2) };
        let got = second_variation(&lag, &sol, &v).unwrap();
        let m = &lag.mult;
        let want = gauss_kronrod(
            |t| {
                let (r, rd, _) = sol.eval(t);
                let s = VariationalState { theta: t, r, rdot: rd };
                let (x, dx) = v.eval(t);
                m.phi0(s.r1()).unwrap() * (t.tan() * x + dx).powi(2)
            },
            0.3,
            1.2,
            1e-14,
            1e-12,
        )
        .unwrap();
        assert!(got > 0.0 && (got - want).abs() < 1e-8 * want.max(1.0));
        let zero = Perturbation { coeffs: vec![0.0], interval: (0.3, 1.2) };
        assert_eq!(second_variation(&lag, &sol, &zero).unwrap(), 0.0);
        let bad = Perturbation { coeffs: vec![1.0], interval: (1.0, 2.0) };
        assert!(matches!(second_variation(&lag, &sol, &bad), Err(Error::Inadmissible(_))));
    }

    #[test]
    fn hopf_l1_second_variation() {
        let (l, c) = (0.5, 0.2);
        let rel = hopf(l, c);
        let lag = Lagrangian::new(LagrangianSpec::HopfL1 { lambda: l, c }, &rel, 0.0).unwrap();
        let sol = two_u_support(0.0);
        let v = Perturbation::basis(2, (0.3, 1.2));
        let got = second_variation(&lag, &sol, &v).unwrap();
        // f₁ = −(1 − λ)/sin^λ, f₂ = 0, f₃ = 1/sin^λ
        let want = gauss_kronrod(
            |t| {
                let (x, dx) = v.eval(t);
                (dx * dx - (1.0 - l) * x * x) / t.sin().powf(l)
            },
            0.3,
            1.2,
            1e-14,
            1e-12,
        )
        .unwrap();
        assert!((got - want).abs() < 1e-8, "{got} {want}");
    }

    #[test]
    fn general_construction() {
        let rel = hopf(3.0, -3.0);
        let states: Vec<(VariationalState, f64)> = [(0.5, 1.2, 0.1, 0.3), (0.9, 1.0, -0.2, 0.1), (1.2, 1.3, 0.05, -0.2)]
            .iter()
            .map(|&(t, r, d, dd)| (VariationalState::new(t, r, d).unwrap(), dd))
            .collect();
        let g = general_lagrangian(&rel, FSpec::one(), 0.0, &states).unwrap();
        assert_eq!(g.spec, LagrangianSpec::L0);
        assert!(g.el_residual_max.unwrap() < 1e-6);
        let g = general_lagrangian(&rel, FSpec::i_power(3.0), 0.0, &states).unwrap();
        assert_eq!(g.spec, LagrangianSpec::HopfL1 { lambda: 3.0, c: -3.0 });
        assert!(g.el_residual_max.unwrap() < 1e-6);
        let cubic = W::CubicRoC { gamma: 1.0 };
        let cs: Vec<(VariationalState, f64)> = [(0.5, 0.5, 0.1, 0.3), (0.9, 0.4, -0.05, 0.1)]
            .iter()
            .map(|&(t, r, d, dd)| (VariationalState::new(t, r, d).unwrap(), dd))
            .collect();
        let g = general_lagrangian(&cubic, FSpec::i_power(3.0), 0.0, &cs).unwrap();
        assert_eq!(g.spec, LagrangianSpec::CubicL1 { gamma: 1.0 });
        assert!(g.el_residual_max.unwrap() < 1e-6);
        let g = general_lagrangian(&rel, FSpec::i_power(1.0), 0.0, &states).unwrap();
        assert!(g.defect_range.is_some());
    }
}
