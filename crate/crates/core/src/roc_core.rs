//! Support function, radii of curvature and the meridian curve.

use std::f64::consts::{FRAC_PI_2, PI};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ext::{ExtReal, RoCPoint, EPS_POLE};
use crate::numeric::interp::{check_grid, nodal_derivatives, nodal_first_derivative, Sampled};
use crate::numeric::quad::adaptive_simpson;

pub const QUAD_ABS: f64 = 1e-10;
pub const QUAD_REL: f64 = 1e-8;

/// Closed-form support callback returning (r, ṙ, r̈).
pub type SupportFn = Arc<dyn Fn(f64) -> (f64, f64, f64) + Send + Sync>;

#[derive(Clone)]
pub enum DerivativeSource {
    Analytic(SupportFn),
    Interpolated(Sampled),
}

impl std::fmt::Debug for DerivativeSource {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            DerivativeSource::Analytic(_) => write!(f, "Analytic"),
            DerivativeSource::Interpolated(_) => write!(f, "Interpolated"),
        }
    }
}

/// Sampled support function r(θ).
#[derive(Debug, Clone)]
pub struct SupportProfile {
    pub grid: Vec<f64>,
    pub r: Vec<f64>,
    pub source: DerivativeSource,
    /// Radii at the poles, when the grid reaches them.
    pub pole_values: PoleValues,
}

impl SupportProfile {
    pub fn analytic(grid: Vec<f64>, f: SupportFn) -> Result<Self> {
        check_angles(&grid)?;
        let r = grid.iter().map(|&t| f(t).0).collect();
        Ok(SupportProfile { grid, r, source: DerivativeSource::Analytic(f), pole_values: PoleValues::default() })
    }

    /// Samples only; derivatives from the interpolant.
    pub fn sampled(grid: Vec<f64>, r: Vec<f64>) -> Result<Self> {
        check_angles(&grid)?;
        let s = Sampled::new(grid.clone(), r.clone())?;
        Ok(SupportProfile { grid, r, source: DerivativeSource::Interpolated(s), pole_values: PoleValues::default() })
    }

    /// Samples with known nodal derivatives.
    pub fn with_derivatives(grid: Vec<f64>, r: Vec<f64>, rd: Vec<f64>, rdd: Vec<f64>) -> Result<Self> {
        check_angles(&grid)?;
        let s = Sampled::with_derivatives(grid.clone(), r.clone(), rd, rdd)?;
        Ok(SupportProfile { grid, r, source: DerivativeSource::Interpolated(s), pole_values: PoleValues::default() })
    }

    /// (r, ṙ, r̈) at any θ in range.
    pub fn eval(&self, theta: f64) -> (f64, f64, f64) {
        match &self.source {
            DerivativeSource::Analytic(f) => f(theta),
            DerivativeSource::Interpolated(s) => s.eval(theta),
        }
    }

    pub fn lo(&self) -> f64 {
        self.grid[0]
    }

    pub fn hi(&self) -> f64 {
        *self.grid.last().unwrap()
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct PoleValues {
    pub north: Option<RoCPoint>,
    pub south: Option<RoCPoint>,
}

/// Sampled curve θ ↦ (r₁, r₂).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoCProfile {
    pub grid: Vec<f64>,
    pub points: Vec<RoCPoint>,
    pub pole_values: PoleValues,
    /// Construction tolerance the CM residual is held to.
    pub tolerance: f64,
}

impl RoCProfile {
    pub fn new(grid: Vec<f64>, points: Vec<RoCPoint>) -> Result<Self> {
        check_angles(&grid)?;
        if grid.len() != points.len() {
            return Err(Error::Invalid("grid and points differ in length".into()));
        }
        Ok(RoCProfile { grid, points, pole_values: PoleValues::default(), tolerance: 1e-8 })
    }

    pub fn from_fn(grid: Vec<f64>, f: impl Fn(f64) -> (f64, f64)) -> Result<Self> {
        let points = grid.iter().map(|&t| {
            let (a, b) = f(t);
            RoCPoint::new(a, b)
        });
        Self::new(grid.clone(), points.collect())
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    pub fn r1(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.r1.to_f64()).collect()
    }

    pub fn r2(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.r2.to_f64()).collect()
    }

    pub fn all_finite(&self) -> bool {
        self.points.iter().all(|p| p.finite().is_some())
    }

    /// Maximal index ranges where both radii are finite.
    pub fn finite_runs(&self) -> Vec<std::ops::Range<usize>> {
        let mut runs = Vec::new();
        let mut start = None;
        for (i, p) in self.points.iter().enumerate() {
            match (p.finite().is_some(), start) {
                (true, None) => start = Some(i),
                (false, Some(s)) => {
                    runs.push(s..i);
                    start = None;
                }
                _ => {}
            }
        }
        if let Some(s) = start {
            runs.push(s..self.points.len());
        }
        runs
    }

    /// Interpolant of r₁ over the whole grid (all samples finite).
    pub fn r1_interp(&self) -> Result<Sampled> {
        self.require_finite_r1()?;
        Sampled::new(self.grid.clone(), self.r1())
    }

    pub fn r2_interp(&self) -> Result<Sampled> {
        if let Some(i) = self.points.iter().position(|p| p.r2.is_infinite()) {
            return Err(Error::FlatPoint(self.grid[i]));
        }
        Sampled::new(self.grid.clone(), self.r2())
    }

    fn require_finite_r1(&self) -> Result<()> {
        if let Some(i) = self.points.iter().position(|p| p.r1.is_infinite()) {
            return Err(Error::Invalid(format!("r1 infinite at theta = {}", self.grid[i])));
        }
        Ok(())
    }

    /// Samples restricted to `[a, b]`.
    pub fn restrict(&self, a: f64, b: f64) -> Result<RoCProfile> {
        let idx: Vec<usize> = (0..self.len()).filter(|&i| self.grid[i] >= a && self.grid[i] <= b).collect();
        let mut out = RoCProfile::new(
            idx.iter().map(|&i| self.grid[i]).collect(),
            idx.iter().map(|&i| self.points[i]).collect(),
        )?;
        out.tolerance = self.tolerance;
        if a <= 0.0 {
            out.pole_values.north = self.pole_values.north;
        }
        if b >= PI {
            out.pole_values.south = self.pole_values.south;
        }
        Ok(out)
    }
}

/// Meridian curve in cylindrical coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileCurve3D {
    pub grid: Vec<f64>,
    pub rho: Vec<f64>,
    pub h: Vec<f64>,
}

impl ProfileCurve3D {
    /// Largest |cos θ·dh/dθ + sin θ·dρ/dθ|, the slope law dh/dρ = −tan θ with
    /// the cos θ factor cleared so it stays finite at the equator.
    pub fn slope_defect(&self) -> Result<f64> {
        let dr = nodal_first_derivative(&self.grid, &self.rho)?;
        let dh = nodal_first_derivative(&self.grid, &self.h)?;
        Ok((0..self.grid.len())
            .map(|i| (self.grid[i].cos() * dh[i] + self.grid[i].sin() * dr[i]).abs())
            .fold(0.0, f64::max))
    }
}

fn check_angles(grid: &[f64]) -> Result<()> {
    check_grid(grid)?;
    if grid[0] < 0.0 || *grid.last().unwrap() > PI {
        return Err(Error::Invalid("grid leaves [0, pi]".into()));
    }
    Ok(())
}

fn at_pole(t: f64) -> bool {
    t < EPS_POLE || t > PI - EPS_POLE
}

/// r₁ = r + ṙ cot θ, r₂ = r + r̈.
pub fn curvatures_from_support(s: &SupportProfile) -> Result<RoCProfile> {
    let mut points = Vec::with_capacity(s.grid.len());
    for &t in &s.grid {
        if at_pole(t) {
            let lim = if t < FRAC_PI_2 { s.pole_values.north } else { s.pole_values.south };
            points.push(lim.ok_or(Error::Singular(t))?);
            continue;
        }
        let (r, rd, rdd) = s.eval(t);
        points.push(RoCPoint::new(r + rd * t.cos() / t.sin(), r + rdd));
    }
    let mut p = RoCProfile::new(s.grid.clone(), points)?;
    p.pole_values = s.pole_values;
    Ok(p)
}

/// r₁′(u)/cos u, replaced by its limit −r₁″/sin u next to the equator.
fn r1p_over_cos(r1: &Sampled, u: f64) -> f64 {
    let (_, d1, d2) = r1.eval(u);
    let c = u.cos();
    if c.abs() < 1e-6 {
        -d2 / u.sin()
    } else {
        d1 / c
    }
}

/// Support with the homogeneous coefficient `k` given directly:
/// r = r₁ − cos θ ∫_{θ₀}^{θ} r₁′/cos u du + k cos θ.
///
/// This is the integration-by-parts form of r = cos θ[∫ r₁ sin u/cos²u du + const],
/// bounded through the equator whenever r₁′(π/2) = 0.
pub fn support_with_constant(p: &RoCProfile, theta0: f64, k: f64) -> Result<SupportProfile> {
    let r1 = p.r1_interp()?;
    let g = &p.grid;
    let n = g.len();
    if theta0 < g[0] || theta0 > g[n - 1] {
        return Err(Error::Invalid("anchor angle outside the grid".into()));
    }
    let span = g[n - 1] - g[0];
    let integrate = |a: f64, b: f64| -> Result<f64> {
        let tol = QUAD_ABS * ((b - a).abs() / span).max(1e-3);
        adaptive_simpson(|u| r1p_over_cos(&r1, u), a, b, tol, QUAD_REL)
    };
    let mut big_i = vec![0.0; n];
    let split = g.partition_point(|&t| t < theta0);
    let mut acc = 0.0;
    let mut prev = theta0;
    for i in split..n {
        acc += integrate(prev, g[i])?;
        big_i[i] = acc;
        prev = g[i];
    }
    acc = 0.0;
    prev = theta0;
    for i in (0..split).rev() {
        acc += integrate(prev, g[i])?;
        big_i[i] = acc;
        prev = g[i];
    }
    let mut r = Vec::with_capacity(n);
    let mut rd = Vec::with_capacity(n);
    let mut rdd = Vec::with_capacity(n);
    for i in 0..n {
        let t = g[i];
        let (c, s) = (t.cos(), t.sin());
        r.push(r1.y[i] - c * big_i[i] + k * c);
        rd.push(s * (big_i[i] - k));
        rdd.push(c * (big_i[i] - k) + s * r1p_over_cos(&r1, t));
    }
    let mut out = SupportProfile::with_derivatives(g.clone(), r, rd, rdd)?;
    out.pole_values = pole_values_from(p);
    Ok(out)
}

fn pole_values_from(p: &RoCProfile) -> PoleValues {
    let mut pv = p.pole_values;
    if pv.north.is_none() && p.grid[0] == 0.0 {
        pv.north = Some(p.points[0]);
    }
    if pv.south.is_none() && *p.grid.last().unwrap() == PI {
        pv.south = p.points.last().copied();
    }
    pv
}

/// Particular support solution with r(θ₀) = `anchor_value`.
pub fn support_from_r1(p: &RoCProfile, anchor_angle: f64, anchor_value: f64) -> Result<SupportProfile> {
    if at_pole(anchor_angle) {
        return Err(Error::Invalid("anchor angle must be interior".into()));
    }
    let c0 = anchor_angle.cos();
    if c0.abs() < 1e-12 {
        return Err(Error::Invalid("anchor angle must avoid pi/2".into()));
    }
    let r1 = p.r1_interp()?;
    let k = (anchor_value - r1.value(anchor_angle)) / c0;
    support_with_constant(p, anchor_angle, k)
}

/// ρ = r₁ sin θ and h = h_anchor − ∫ r₂ sin θ dθ from the first sample.
pub fn embed_profile(p: &RoCProfile, h_anchor: f64) -> Result<ProfileCurve3D> {
    for (i, q) in p.points.iter().enumerate() {
        if q.r2.is_infinite() {
            return Err(Error::FlatPoint(p.grid[i]));
        }
        if q.r1.is_infinite() {
            return Err(Error::Invalid(format!("r1 infinite at theta = {}", p.grid[i])));
        }
    }
    let rho: Vec<f64> = p.grid.iter().zip(&p.points).map(|(t, q)| q.r1.to_f64() * t.sin()).collect();
    let integrand: Vec<f64> = p.grid.iter().zip(&p.points).map(|(t, q)| q.r2.to_f64() * t.sin()).collect();
    let cum = Sampled::new(p.grid.clone(), integrand)?.cumulative_integral();
    let h = cum.iter().map(|c| h_anchor - c).collect();
    Ok(ProfileCurve3D { grid: p.grid.clone(), rho, h })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CmResidual {
    pub theta: Vec<f64>,
    pub residual: Vec<f64>,
}

impl CmResidual {
    pub fn max_abs(&self) -> f64 {
        self.residual.iter().fold(0.0, |m, r| m.max(r.abs()))
    }
}

/// dr₁/dθ − (r₂ − r₁) cot θ at interior samples of each finite run.
pub fn cm_residual(p: &RoCProfile) -> Result<CmResidual> {
    let mut out = CmResidual { theta: Vec::new(), residual: Vec::new() };
    for run in p.finite_runs() {
        if run.len() < 3 {
            continue;
        }
        let x = &p.grid[run.clone()];
        let r1: Vec<f64> = p.points[run.clone()].iter().map(|q| q.r1.to_f64()).collect();
        let r2: Vec<f64> = p.points[run.clone()].iter().map(|q| q.r2.to_f64()).collect();
        let (d1, _) = nodal_derivatives(x, &r1)?;
        for i in 0..x.len() {
            if at_pole(x[i]) {
                continue;
            }
            out.theta.push(x[i]);
            out.residual.push(d1[i] - (r2[i] - r1[i]) * x[i].cos() / x[i].sin());
        }
    }
    Ok(out)
}

/// r₁(b) − r₁(a) − ∫ₐᵇ (r₂ − r₁) cot τ dτ.
pub fn integrated_cm_check(p: &RoCProfile, a: f64, b: f64) -> Result<f64> {
    if at_pole(a) || at_pole(b) {
        return Err(Error::Singular(if at_pole(a) { a } else { b }));
    }
    let r1 = p.r1_interp()?;
    let r2 = p.r2_interp()?;
    let integral = adaptive_simpson(|t| (r2.value(t) - r1.value(t)) * t.cos() / t.sin(), a, b, QUAD_ABS, QUAD_REL)?;
    Ok(r1.value(b) - r1.value(a) - integral)
}

/// 17-significant-digit rendering used by every file format.
pub fn fmt17(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{x:.16e}")
    }
}

pub fn parse_float(s: &str) -> Result<f64> {
    match s.trim() {
        "inf" | "+inf" | "Infinity" => Ok(f64::INFINITY),
        "-inf" | "-Infinity" => Ok(f64::NEG_INFINITY),
        "nan" | "NaN" => Ok(f64::NAN),
        t => t.parse().map_err(|_| Error::Invalid(format!("bad number '{t}'"))),
    }
}

/// Profile table as stored on disk.
#[derive(Debug, Clone, PartialEq)]
pub struct ProfileTable {
    pub meta: Vec<(String, String)>,
    pub theta: Vec<f64>,
    pub r: Vec<f64>,
    pub r1: Vec<f64>,
    pub r2: Vec<f64>,
    pub rho: Vec<f64>,
    pub h: Vec<f64>,
}

pub const CSV_COLUMNS: [&str; 6] = ["theta", "r", "r1", "r2", "rho", "h"];

impl ProfileTable {
    /// Table for a profile; support and embedding columns are filled where
    /// they can be computed and left as nan otherwise.
    pub fn from_profile(p: &RoCProfile, meta: Vec<(String, String)>) -> Self {
        let n = p.len();
        let mut r = vec![f64::NAN; n];
        let mut rho = vec![f64::NAN; n];
        let mut h = vec![f64::NAN; n];
        if p.all_finite() && p.len() >= 3 {
            // homogeneous term fixed by r = r₁ at the middle sample
            let mid = p.grid[n / 2];
            if let Ok(s) = support_with_constant(p, mid, 0.0) {
                r = s.r.clone();
            }
            if let Ok(e) = embed_profile(p, 0.0) {
                rho = e.rho;
                h = e.h;
            }
        } else {
            for i in 0..n {
                if let Some(a) = p.points[i].r1.finite() {
                    rho[i] = a * p.grid[i].sin();
                }
            }
        }
        ProfileTable { meta, theta: p.grid.clone(), r, r1: p.r1(), r2: p.r2(), rho, h }
    }

    pub fn to_profile(&self) -> Result<RoCProfile> {
        let points = self
            .r1
            .iter()
            .zip(&self.r2)
            .map(|(&a, &b)| Ok(RoCPoint { r1: ExtReal::from_f64(a)?, r2: ExtReal::from_f64(b)? }))
            .collect::<Result<Vec<_>>>()?;
        let mut p = RoCProfile::new(self.theta.clone(), points)?;
        if let Some(t) = self.meta_value("tolerance").and_then(|v| v.parse().ok()) {
            p.tolerance = t;
        }
        Ok(p)
    }

    pub fn meta_value(&self, key: &str) -> Option<&str> {
        self.meta.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        for (k, v) in &self.meta {
            s.push_str(&format!("# {k}: {v}\n"));
        }
        s.push_str(&CSV_COLUMNS.join(","));
        s.push('\n');
        for i in 0..self.theta.len() {
            let row = [self.theta[i], self.r[i], self.r1[i], self.r2[i], self.rho[i], self.h[i]];
            s.push_str(&row.iter().map(|&x| fmt17(x)).collect::<Vec<_>>().join(","));
            s.push('\n');
        }
        s
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut meta = Vec::new();
        for line in text.lines() {
            if let Some(rest) = line.strip_prefix('#') {
                if let Some((k, v)) = rest.split_once(':') {
                    meta.push((k.trim().to_string(), v.trim().to_string()));
                }
            }
        }
        let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).trim(csv::Trim::All).from_reader(text.as_bytes());
        let headers = rdr.headers().map_err(|e| Error::Invalid(e.to_string()))?.clone();
        let col = |name: &str| headers.iter().position(|h| h == name);
        let idx: Vec<Option<usize>> = CSV_COLUMNS.iter().map(|c| col(c)).collect();
        if idx[0].is_none() || idx[2].is_none() || idx[3].is_none() {
            return Err(Error::Invalid("CSV needs theta, r1 and r2 columns".into()));
        }
        let mut cols: Vec<Vec<f64>> = vec![Vec::new(); 6];
        for rec in rdr.records() {
            let rec = rec.map_err(|e| Error::Invalid(e.to_string()))?;
            for (c, i) in idx.iter().enumerate() {
                let v = match i {
                    Some(i) => parse_float(rec.get(*i).unwrap_or("nan"))?,
                    None => f64::NAN,
                };
                cols[c].push(v);
            }
        }
        if cols[0].is_empty() {
            return Err(Error::Invalid("profile has no rows".into()));
        }
        let mut it = cols.into_iter();
        Ok(ProfileTable {
            meta,
            theta: it.next().unwrap(),
            r: it.next().unwrap(),
            r1: it.next().unwrap(),
            r2: it.next().unwrap(),
            rho: it.next().unwrap(),
            h: it.next().unwrap(),
        })
    }
}
