//! Codazzi–Mainardi integration for r₂ = F(r₁) and umbilic analysis at the poles.

use std::f64::consts::{FRAC_PI_2, PI};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ext::{ExtReal, Pole, RoCPoint};
use crate::numeric::extrap::{extrapolate, ratio_divergence, Limit, Scheme};
use crate::numeric::interp::linspace;
use crate::numeric::quad::gauss_kronrod;
use crate::numeric::rk::{run, RkStop, RkTol};
use crate::relations::WeingartenRelation;
use crate::roc_core::{cm_residual, PoleValues, RoCProfile};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct StepControl {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub eps_pole: f64,
    /// |r₁| beyond which the run stops as a blow-up.
    pub blowup: f64,
    /// Number of output intervals on the target interval.
    pub intervals: usize,
    /// Coefficient c₁ of the seed r₀ + c₁ sin^{F′(r₀)−1} θ for pole starts.
    pub pole_seed: f64,
}

impl Default for StepControl {
    fn default() -> Self {
        StepControl { rel_tol: 1e-10, abs_tol: 1e-12, eps_pole: crate::ext::EPS_POLE, blowup: 1e12, intervals: 2048, pole_seed: 0.0 }
    }
}

impl StepControl {
    fn tol(&self) -> RkTol {
        RkTol { rel: self.rel_tol, abs: self.abs_tol }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "reason", rename_all = "snake_case")]
pub enum StopReason {
    Completed,
    PoleApproach { theta: f64 },
    BlowUp { theta: f64 },
    FlatPoint { theta: f64 },
    DomainExit { theta: f64, detail: String },
}

#[derive(Debug, Clone)]
pub struct CmRun {
    pub profile: RoCProfile,
    /// Stop reasons toward smaller and larger θ.
    pub stop_low: StopReason,
    pub stop_high: StopReason,
    pub accepted: usize,
    pub rejected: usize,
    /// Accepted steps as (θ, r₁, dr₁/dθ).
    pub steps: Vec<(f64, f64, f64)>,
}

fn cm_rhs(rel: &WeingartenRelation, t: f64, r: f64) -> Result<f64> {
    let f = rel.eval_f(ExtReal::Finite(r))?;
    match f {
        ExtReal::Infinity => Err(Error::FlatPoint(t)),
        ExtReal::Finite(v) => Ok((v - r) * t.cos() / t.sin()),
    }
}

struct Side {
    nodes: Vec<(f64, f64)>,
    stop: StopReason,
    end: (f64, f64),
    accepted: usize,
    rejected: usize,
    steps: Vec<(f64, f64, f64)>,
}

/// State variable of a run: r₁ itself, or the offset w = r₁ − r₀ from an
/// umbilic radius r₀ (keeps r₁ − r₀ to full relative precision near a pole).
#[derive(Debug, Clone, Copy)]
enum Frame {
    Plain,
    Offset(f64),
}

impl Frame {
    fn radius(self, y: f64) -> f64 {
        match self {
            Frame::Plain => y,
            Frame::Offset(r0) => r0 + y,
        }
    }
}

fn frame_rhs(rel: &WeingartenRelation, frame: Frame, t: f64, y: f64) -> Result<f64> {
    match frame {
        Frame::Plain => cm_rhs(rel, t, y),
        Frame::Offset(r0) => {
            let inc = rel.f_increment(r0, y).map_err(|e| match e {
                Error::FlatPoint(_) => Error::FlatPoint(t),
                e => e,
            })?;
            if !inc.is_finite() {
                return Err(Error::FlatPoint(t));
            }
            Ok((inc - y) * t.cos() / t.sin())
        }
    }
}

/// One direction of travel; `t_end` already kept ε_pole away from the poles.
/// Node values are in the state variable of `frame`.
fn run_side(rel: &WeingartenRelation, frame: Frame, t0: f64, y0: f64, t_end: f64, nodes: &[f64], ctrl: &StepControl) -> Result<Side> {
    let blowup = ctrl.blowup;
    let tol = match frame {
        Frame::Plain => ctrl.tol(),
        Frame::Offset(_) if y0 == 0.0 => ctrl.tol(),
        Frame::Offset(_) => RkTol { rel: ctrl.rel_tol, abs: ctrl.abs_tol * y0.abs().min(1.0) },
    };
    let res = run(
        |t, y| frame_rhs(rel, frame, t, y),
        t0,
        y0,
        t_end,
        nodes,
        tol,
        |_, y| (frame.radius(y).abs() > blowup).then(|| "blow-up".to_string()),
    );
    let (t, y) = res.end;
    let r = frame.radius(y);
    let near_pole = t_end < ctrl.eps_pole * 1.5 || t_end > PI - ctrl.eps_pole * 1.5;
    let stop = match res.stop {
        RkStop::Target if near_pole => StopReason::PoleApproach { theta: t },
        RkStop::Target => StopReason::Completed,
        RkStop::Event(_) => StopReason::BlowUp { theta: t },
        RkStop::Rhs(Error::FlatPoint(_)) => StopReason::FlatPoint { theta: t },
        RkStop::Rhs(e) => StopReason::DomainExit { theta: t, detail: e.to_string() },
        RkStop::Underflow => {
            // steps collapse when F(r₁) runs off to infinity
            let f = rel.f(r).unwrap_or(f64::INFINITY);
            if !f.is_finite() || f.abs() > 1e4 * (1.0 + r.abs()) {
                StopReason::FlatPoint { theta: t }
            } else {
                return Err(Error::Numeric(format!("step size underflow at theta = {t}")));
            }
        }
    };
    Ok(Side { nodes: res.nodes, stop, end: (t, r), accepted: res.accepted, rejected: res.rejected, steps: res.steps })
}

/// Limit of r₁ at a pole given the last integrated value.
fn pole_limit(rel: &WeingartenRelation, frame: Frame, r_end: f64, r_ref: f64) -> Option<ExtReal> {
    let d = 1e-6 * r_end.abs().max(1.0);
    if let Frame::Offset(r0) = frame {
        if (r_end - r0).abs() <= d {
            return Some(ExtReal::Finite(r0));
        }
    }
    let fps = rel.fixed_points(r_end - d, r_end + d);
    if let Some(r0) = fps.iter().copied().min_by(|a, b| (a - r_end).abs().total_cmp(&(b - r_end).abs())) {
        return Some(ExtReal::Finite(r0));
    }
    (r_end.abs() > 1e4 * (1.0 + r_ref.abs())).then_some(ExtReal::Infinity)
}

fn point(rel: &WeingartenRelation, r: ExtReal) -> Result<RoCPoint> {
    Ok(RoCPoint { r1: r, r2: rel.eval_f(r)? })
}

/// Solves dr₁/dθ = (F(r₁) − r₁) cot θ from (θ₀, r₁₀) across `interval`.
///
/// Output samples sit on a uniform grid over `interval` (so a symmetric
/// interval with an even count has a node at π/2). Grid nodes on a pole get
/// the limit value when it can be identified.
pub fn integrate_cm(rel: &WeingartenRelation, theta0: f64, r1_0: f64, interval: (f64, f64), ctrl: &StepControl) -> Result<CmRun> {
    let (a, b) = interval;
    if !(0.0..=PI).contains(&a) || !(0.0..=PI).contains(&b) || a >= b {
        return Err(Error::Invalid("target interval must be an increasing range inside [0, pi]".into()));
    }
    if theta0 < a || theta0 > b {
        return Err(Error::Invalid("start angle outside the target interval".into()));
    }
    if !r1_0.is_finite() {
        return Err(Error::Invalid("start radius must be finite".into()));
    }
    let eps = ctrl.eps_pole;
    let mut grid = linspace(a, b, ctrl.intervals.max(2));
    // a node within rounding of the start is the start
    for g in grid.iter_mut() {
        if (*g - theta0).abs() < 1e-12 {
            *g = theta0;
        }
    }
    let mut pv = PoleValues::default();
    let mut start_node: Option<(f64, RoCPoint)> = None;

    // launch point, moved off the pole when starting on the axis
    let mut frame = Frame::Plain;
    let (ts, rs) = if theta0 < eps || theta0 > PI - eps {
        let f0 = rel.f(r1_0)?;
        if (f0 - r1_0).abs() > 1e-10 * r1_0.abs().max(1.0) {
            return Err(Error::Invalid(format!("pole start needs an umbilic: F({r1_0}) = {f0}")));
        }
        let fp = rel.f_prime(r1_0)?;
        if fp <= 1.0 && ctrl.pole_seed != 0.0 {
            return Err(Error::Invalid("seeded pole start needs F'(r0) > 1".into()));
        }
        let pole = if theta0 < FRAC_PI_2 { Pole::North } else { Pole::South };
        let at = RoCPoint::new(r1_0, r1_0);
        match pole {
            Pole::North => pv.north = Some(at),
            Pole::South => pv.south = Some(at),
        }
        start_node = Some((pole.angle(), at));
        let seed = if ctrl.pole_seed == 0.0 { 0.0 } else { ctrl.pole_seed * eps.sin().powf(fp - 1.0) };
        frame = Frame::Offset(r1_0);
        (pole.offset(eps), seed)
    } else {
        (theta0, r1_0)
    };

    let lo_end = a.max(eps);
    let hi_end = b.min(PI - eps);
    let hi_nodes: Vec<f64> = grid.iter().copied().filter(|&t| t >= ts && t <= hi_end).collect();
    let lo_nodes: Vec<f64> = grid.iter().rev().copied().filter(|&t| t < ts && t >= lo_end).collect();
    let hi = if ts < hi_end { Some(run_side(rel, frame, ts, rs, hi_end, &hi_nodes, ctrl)?) } else { None };
    let lo = if ts > lo_end { Some(run_side(rel, frame, ts, rs, lo_end, &lo_nodes, ctrl)?) } else { None };
    let r_ref = frame.radius(rs);

    let mut samples: Vec<(f64, RoCPoint)> = Vec::with_capacity(grid.len());
    if let Some((t, p)) = start_node {
        if grid.contains(&t) {
            samples.push((t, p));
        }
    }
    let mut steps = Vec::new();
    let (mut accepted, mut rejected) = (0, 0);
    let mut stops = [StopReason::Completed, StopReason::Completed];
    for (k, side) in [lo, hi].into_iter().enumerate() {
        let Some(side) = side else { continue };
        for &(t, y) in &side.nodes {
            samples.push((t, point(rel, ExtReal::Finite(frame.radius(y)))?));
        }
        // grid node on the pole this side runs into
        if let StopReason::PoleApproach { .. } = side.stop {
            let pole_t = if k == 0 { 0.0 } else { PI };
            if grid.contains(&pole_t) && start_node.is_none_or(|(t, _)| t != pole_t) {
                if let Some(lim) = pole_limit(rel, frame, side.end.1, r_ref) {
                    let p = point(rel, lim)?;
                    samples.push((pole_t, p));
                    if k == 0 {
                        pv.north = Some(p);
                    } else {
                        pv.south = Some(p);
                    }
                }
            }
        }
        accepted += side.accepted;
        rejected += side.rejected;
        steps.extend(side.steps.iter().map(|&(t, y, d)| (t, frame.radius(y), d)));
        stops[k] = side.stop;
    }
    samples.sort_by(|x, y| x.0.total_cmp(&y.0));
    samples.dedup_by(|x, y| x.0 == y.0);
    if samples.len() < 3 {
        return Err(Error::Numeric("integration produced fewer than three samples".into()));
    }
    let mut profile = RoCProfile::new(samples.iter().map(|s| s.0).collect(), samples.iter().map(|s| s.1).collect())?;
    profile.pole_values = pv;
    profile.tolerance = 10.0 * ctrl.rel_tol;
    let [stop_low, stop_high] = stops;
    Ok(CmRun { profile, stop_low, stop_high, accepted, rejected, steps })
}

/// Linear Hopf family r₂ = λ r₁ + C: r₁ and the support with anchor at π/2,
/// r = r₁ + A₀ cos θ ∫_{π/2}^{θ} sin^{λ−2}u du.
pub fn hopf_closed_form(lambda: f64, c: f64, a0: f64, theta: f64) -> Result<(f64, f64)> {
    if lambda == 1.0 {
        return Err(Error::Degenerate("lambda = 1 has no closed-form family".into()));
    }
    let s = theta.sin();
    let r1 = (c + a0 * s.powf(lambda - 1.0)) / (1.0 - lambda);
    let r = if a0 == 0.0 {
        r1
    } else {
        r1 + a0 * theta.cos() * gauss_kronrod(|u| u.sin().powf(lambda - 2.0), FRAC_PI_2, theta, 1e-14, 1e-13)?
    };
    Ok((r1, r))
}

/// The constant A₀ of the Hopf family through (θ, r₁).
pub fn hopf_amplitude(lambda: f64, c: f64, theta: f64, r1: f64) -> f64 {
    ((1.0 - lambda) * r1 - c) / theta.sin().powf(lambda - 1.0)
}

// ------------------------------------------------------------ poles

/// A curve in RoC space approaching a pole.
pub trait PoleCurve {
    fn pole(&self) -> Pole;
    /// Common limit r₀ of both radii.
    fn limit(&self) -> ExtReal;
    /// Smallest usable distance from the pole.
    fn min_offset(&self) -> f64 {
        crate::ext::EPS_POLE
    }
    /// For each requested pole distance t (decreasing), the distance actually
    /// used and (r₁ − r₀, r₂ − r₀), or (r₁, r₂) when r₀ = ∞.
    fn offsets(&self, t: &[f64]) -> Result<Vec<(f64, f64, f64)>>;
}

/// Closed-form offsets (r₁ − r₀, r₂ − r₀) as functions of the distance to the pole.
pub struct FnCurve<F: Fn(f64) -> (f64, f64)> {
    pub pole: Pole,
    pub r0: ExtReal,
    pub f: F,
}

impl<F: Fn(f64) -> (f64, f64)> PoleCurve for FnCurve<F> {
    fn pole(&self) -> Pole {
        self.pole
    }
    fn limit(&self) -> ExtReal {
        self.r0
    }
    fn min_offset(&self) -> f64 {
        0.0
    }
    fn offsets(&self, t: &[f64]) -> Result<Vec<(f64, f64, f64)>> {
        Ok(t.iter().map(|&x| {
            let (a, b) = (self.f)(x);
            (x, a, b)
        }).collect())
    }
}

/// Trajectory of the CM equation, re-integrated to hit each ladder level.
pub struct IntegratedCurve<'a> {
    pub rel: &'a WeingartenRelation,
    pub theta: f64,
    pub r1: f64,
    pub pole: Pole,
    pub ctrl: StepControl,
}

impl IntegratedCurve<'_> {
    fn end_radius(&self) -> Result<f64> {
        let t_end = self.pole.offset(self.ctrl.eps_pole);
        let side = run_side(self.rel, Frame::Plain, self.theta, self.r1, t_end, &[], &self.ctrl)?;
        if !matches!(side.stop, StopReason::PoleApproach { .. }) {
            return Err(Error::Numeric(format!("trajectory does not reach the pole: {:?}", side.stop)));
        }
        Ok(side.end.1)
    }
}

impl PoleCurve for IntegratedCurve<'_> {
    fn pole(&self) -> Pole {
        self.pole
    }
    fn limit(&self) -> ExtReal {
        match self.end_radius() {
            Ok(r) => pole_limit(self.rel, Frame::Plain, r, self.r1).unwrap_or(ExtReal::Finite(f64::NAN)),
            Err(_) => ExtReal::Finite(f64::NAN),
        }
    }
    fn offsets(&self, t: &[f64]) -> Result<Vec<(f64, f64, f64)>> {
        let start = (self.theta - self.pole.angle()).abs();
        let usable: Vec<f64> = t.iter().copied().filter(|&x| x < start && x >= self.ctrl.eps_pole).collect();
        let nodes: Vec<f64> = usable.iter().map(|&x| self.pole.offset(x)).collect();
        let Some(&last) = nodes.last() else { return Ok(Vec::new()) };
        let r0 = self.limit();
        let frame = match r0 {
            ExtReal::Finite(r0) if r0.is_nan() => return Err(Error::Numeric("pole limit not identified".into())),
            ExtReal::Finite(r0) => Frame::Offset(r0),
            ExtReal::Infinity => Frame::Plain,
        };
        let y0 = match frame {
            Frame::Offset(r0) => self.r1 - r0,
            Frame::Plain => self.r1,
        };
        let side = run_side(self.rel, frame, self.theta, y0, last, &nodes, &self.ctrl)?;
        let mut out = Vec::new();
        for (x, (_, y)) in usable.iter().zip(side.nodes) {
            out.push(match frame {
                Frame::Offset(r0) => (*x, y, self.rel.f_increment(r0, y)?),
                Frame::Plain => (*x, y, self.rel.f(y)?),
            });
        }
        Ok(out)
    }
}

/// Profile samples nearest to the ladder levels.
pub struct SampledCurve<'a> {
    pub profile: &'a RoCProfile,
    pub pole: Pole,
}

impl PoleCurve for SampledCurve<'_> {
    fn pole(&self) -> Pole {
        self.pole
    }
    fn limit(&self) -> ExtReal {
        let v = match self.pole {
            Pole::North => self.profile.pole_values.north,
            Pole::South => self.profile.pole_values.south,
        };
        v.map_or(ExtReal::Finite(f64::NAN), |p| p.r1)
    }
    fn offsets(&self, t: &[f64]) -> Result<Vec<(f64, f64, f64)>> {
        let r0 = self.limit();
        if r0.finite().is_some_and(f64::is_nan) {
            return Err(Error::Invalid("profile carries no limit at this pole".into()));
        }
        let dist: Vec<f64> = self.profile.grid.iter().map(|g| (g - self.pole.angle()).abs()).collect();
        let mut used: Vec<usize> = Vec::new();
        let mut out = Vec::new();
        for &x in t {
            let best = (0..dist.len())
                .filter(|&i| dist[i] >= self.min_offset() && self.profile.points[i].finite().is_some())
                .min_by(|&i, &j| (dist[i] / x).ln().abs().total_cmp(&(dist[j] / x).ln().abs()));
            let Some(i) = best else { continue };
            if (dist[i] / x).ln().abs() > std::f64::consts::LN_2 / 2.0 || used.contains(&i) {
                continue;
            }
            used.push(i);
            let (a, b) = self.profile.points[i].finite().unwrap();
            out.push(match r0 {
                ExtReal::Finite(r0) => (dist[i], a - r0, b - r0),
                ExtReal::Infinity => (dist[i], a, b),
            });
        }
        Ok(out)
    }
}

/// How (r₂ − r₁)/sin^α θ behaves at the pole.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum VanishingRate {
    Zero,
    Finite { value: f64, uncertainty: f64 },
    Divergent,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UmbilicAnalysis {
    pub side: Pole,
    pub r0: ExtReal,
    pub slope_estimate: f64,
    pub slope_ci: f64,
    pub slope_scheme: Scheme,
    /// α with r₂ − r₁ ~ sin^α θ; not defined at a flat umbilic.
    pub vanishing_exponent: Option<f64>,
    pub vanishing_coefficient: Option<VanishingRate>,
    pub levels: usize,
}

/// Ladder of pole distances 0.5·2^{−k}, k = 0..=20.
pub fn ladder() -> Vec<f64> {
    (0..=20).map(|k| 0.5 * 2f64.powi(-k)).collect()
}

struct Levels {
    t: Vec<f64>,
    x: Vec<f64>,
    d1: Vec<f64>,
    d2: Vec<f64>,
    s: Vec<f64>,
}

fn levels(c: &dyn PoleCurve) -> Result<Levels> {
    let r0 = c.limit();
    if r0.finite().is_some_and(f64::is_nan) {
        return Err(Error::Invalid("pole limit unavailable".into()));
    }
    let scale = r0.finite().map_or(1.0, |r| r.abs().max(1.0));
    let raw = c.offsets(&ladder().into_iter().filter(|&t| t >= c.min_offset()).collect::<Vec<_>>())?;
    let mut lv = Levels { t: vec![], x: vec![], d1: vec![], d2: vec![], s: vec![] };
    let mut any_split = false;
    for (t, a, b) in raw {
        let s = b - a;
        if s.abs() > 1e-13 * scale.max(a.abs()) {
            any_split = true;
        }
        if r0.finite().is_some() && a.abs() < 1e-11 * scale {
            continue;
        }
        lv.t.push(t);
        lv.x.push(-t.sin().ln());
        lv.d1.push(a);
        lv.d2.push(b);
        lv.s.push(s);
    }
    if !any_split {
        return Err(Error::UndefinedSlope("totally umbilic near the pole".into()));
    }
    for i in 1..lv.s.len() {
        if lv.s[i] != 0.0 && lv.s[i - 1] != 0.0 && lv.s[i].signum() != lv.s[i - 1].signum() {
            return Err(Error::UnboundedSlope(c.pole().offset(lv.t[i])));
        }
    }
    if lv.t.len() < 3 {
        return Err(Error::Numeric("too few usable levels near the pole".into()));
    }
    Ok(lv)
}

/// Local exponents ln(s_k/s_{k+1}) / ln(sin θ_k / sin θ_{k+1}) at midpoints.
fn exponents(lv: &Levels) -> (Vec<f64>, Vec<f64>) {
    let mut x = Vec::new();
    let mut a = Vec::new();
    for k in 0..lv.t.len() - 1 {
        let (s0, s1) = (lv.s[k], lv.s[k + 1]);
        if s0 == 0.0 || s1 == 0.0 {
            continue;
        }
        a.push((s0 / s1).ln() / (lv.t[k].sin() / lv.t[k + 1].sin()).ln());
        x.push(0.5 * (lv.x[k] + lv.x[k + 1]));
    }
    (x, a)
}

/// Limiting slope at which the RoC curve meets the diagonal (at a flat
/// umbilic the limit of r₂/r₁), with α and γ where they apply.
pub fn umbilic_slope_estimate(c: &dyn PoleCurve) -> Result<UmbilicAnalysis> {
    let lv = levels(c)?;
    let slopes: Vec<f64> = lv.d1.iter().zip(&lv.d2).map(|(a, b)| b / a).collect();
    let mu = extrapolate(&lv.x, &slopes).ok_or_else(|| Error::Numeric("slope sequence too short".into()))?;
    let r0 = c.limit();
    let (alpha, gamma, d_alpha) = if r0.is_infinite() {
        (None, None, 0.0)
    } else {
        let (x, a) = exponents(&lv);
        match extrapolate(&x, &a) {
            Some(al) => (Some(al.value), Some(rate_from_levels(&lv, al.value)), al.uncertainty),
            None => (None, None, 0.0),
        }
    };
    Ok(UmbilicAnalysis {
        side: c.pole(),
        r0,
        slope_estimate: mu.value,
        slope_ci: 2.0 * (mu.uncertainty + d_alpha) + 1e-9 * (1.0 + mu.value.abs()),
        slope_scheme: mu.scheme,
        vanishing_exponent: alpha,
        vanishing_coefficient: gamma,
        levels: lv.t.len(),
    })
}

fn rate_from_levels(lv: &Levels, alpha: f64) -> VanishingRate {
    let g: Vec<f64> = lv.s.iter().zip(&lv.t).map(|(s, t)| s / t.sin().powf(alpha)).collect();
    classify_rate(&lv.x, &g)
}

fn classify_rate(x: &[f64], g: &[f64]) -> VanishingRate {
    let max_g = g.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let lim: Option<Limit> = extrapolate(x, g);
    if ratio_divergence(g) {
        return VanishingRate::Divergent;
    }
    if let Some(l) = lim {
        if l.value.abs() <= 1e-3 * max_g {
            return VanishingRate::Zero;
        }
    }
    let inv: Vec<f64> = g.iter().map(|v| 1.0 / v).collect();
    let max_inv = inv.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if let Some(l) = extrapolate(x, &inv) {
        if l.value.abs() <= 1e-3 * max_inv {
            return VanishingRate::Divergent;
        }
    }
    match lim {
        Some(l) => VanishingRate::Finite { value: l.value, uncertainty: l.uncertainty },
        None => VanishingRate::Finite { value: *g.last().unwrap_or(&f64::NAN), uncertainty: f64::INFINITY },
    }
}

/// Limit of (r₂ − r₁)/sin^α θ at the pole.
pub fn vanishing_rate_estimate(c: &dyn PoleCurve, alpha: f64) -> Result<VanishingRate> {
    match levels(c) {
        Ok(lv) => Ok(rate_from_levels(&lv, alpha)),
        Err(Error::UndefinedSlope(_)) => Ok(VanishingRate::Zero),
        Err(e) => Err(e),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlopeReport {
    pub pass: bool,
    /// Totally umbilic near the pole: nothing to check.
    pub vacuous: bool,
    pub analysis: Option<UmbilicAnalysis>,
    pub slope_at_least_one: Option<bool>,
    /// |μ − (α + 1)| within tolerance, checked when γ is finite and nonzero.
    pub equality: Option<bool>,
    /// γ diverges: α + 1 only bounds μ from below.
    pub alpha_lower_bound_only: bool,
}

/// Tolerance for the μ = α + 1 comparison.
pub const SLOPE_EQUALITY_TOL: f64 = 5e-2;

pub fn slope_theorem_check(c: &dyn PoleCurve) -> Result<SlopeReport> {
    let a = match umbilic_slope_estimate(c) {
        Ok(a) => a,
        Err(Error::UndefinedSlope(_)) => {
            return Ok(SlopeReport {
                pass: true,
                vacuous: true,
                analysis: None,
                slope_at_least_one: None,
                equality: None,
                alpha_lower_bound_only: false,
            })
        }
        Err(e) => return Err(e),
    };
    let lemma = a.r0.is_infinite() || a.slope_estimate >= 1.0 - a.slope_ci;
    let (mut equality, mut lower_only) = (None, false);
    if let (Some(alpha), Some(rate)) = (a.vanishing_exponent, a.vanishing_coefficient) {
        match rate {
            VanishingRate::Finite { .. } => {
                equality = Some((a.slope_estimate - (alpha + 1.0)).abs() <= SLOPE_EQUALITY_TOL.max(a.slope_ci))
            }
            VanishingRate::Divergent => lower_only = true,
            VanishingRate::Zero => {}
        }
    }
    let lower_ok = !lower_only || a.slope_estimate >= a.vanishing_exponent.unwrap_or(0.0) + 1.0 - SLOPE_EQUALITY_TOL;
    Ok(SlopeReport {
        pass: lemma && equality.unwrap_or(true) && lower_ok,
        vacuous: false,
        slope_at_least_one: Some(lemma),
        equality,
        alpha_lower_bound_only: lower_only,
        analysis: Some(a),
    })
}

// ------------------------------------------------------------ report

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridStats {
    pub samples: usize,
    pub theta_min: f64,
    pub theta_max: f64,
    pub accepted_steps: usize,
    pub rejected_steps: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UmbilicSummary {
    pub pole: Pole,
    pub slope: f64,
    pub ci: f64,
    pub alpha: Option<f64>,
    pub gamma: Option<VanishingRate>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StopSummary {
    pub low: StopReason,
    pub high: StopReason,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StartSummary {
    pub theta: f64,
    pub r1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub schema: u32,
    pub relation: String,
    pub start: StartSummary,
    pub stop_reason: StopSummary,
    pub grid_stats: GridStats,
    pub umbilic: Vec<UmbilicSummary>,
    pub residual_max: f64,
}

impl RunReport {
    /// Report for a run; umbilic analysis is attempted at every pole the run reached.
    pub fn new(rel: &WeingartenRelation, theta0: f64, r1_0: f64, run: &CmRun, ctrl: &StepControl) -> Result<Self> {
        let p = &run.profile;
        let mut umbilic = Vec::new();
        for (pole, stop) in [(Pole::North, &run.stop_low), (Pole::South, &run.stop_high)] {
            if !matches!(stop, StopReason::PoleApproach { .. }) {
                continue;
            }
            let start = if theta0 > ctrl.eps_pole && theta0 < PI - ctrl.eps_pole { theta0 } else { FRAC_PI_2 };
            let r_start = if start == theta0 { r1_0 } else { sample_near(p, start) };
            let curve = IntegratedCurve { rel, theta: start, r1: r_start, pole, ctrl: *ctrl };
            if let Ok(a) = umbilic_slope_estimate(&curve) {
                umbilic.push(UmbilicSummary {
                    pole,
                    slope: a.slope_estimate,
                    ci: a.slope_ci,
                    alpha: a.vanishing_exponent,
                    gamma: a.vanishing_coefficient,
                });
            }
        }
        Ok(RunReport {
            schema: 1,
            relation: rel.render(),
            start: StartSummary { theta: theta0, r1: r1_0 },
            stop_reason: StopSummary { low: run.stop_low.clone(), high: run.stop_high.clone() },
            grid_stats: GridStats {
                samples: p.len(),
                theta_min: p.grid[0],
                theta_max: *p.grid.last().unwrap(),
                accepted_steps: run.accepted,
                rejected_steps: run.rejected,
            },
            umbilic,
            residual_max: cm_residual(p)?.max_abs(),
        })
    }
}

fn sample_near(p: &RoCProfile, t: f64) -> f64 {
    let i = p.grid.partition_point(|&g| g < t).min(p.len() - 1);
    p.points[i].r1.to_f64()
}
