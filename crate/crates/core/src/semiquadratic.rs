//! Invariants, normal forms and SL₂ orbits of αk₁k₂ + βk₁ + γk₂ + δ = 0.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ext::RoCPoint;
use crate::mobius::MoebiusElement;
use crate::relations::WeingartenRelation;

pub type Coeffs = [f64; 4];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum QwClass {
    Elliptic,
    Hyperbolic,
    Parabolic,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SemiQuadraticInvariants {
    pub lambda1: f64,
    pub lambda2: f64,
    pub ratio: Option<f64>,
    pub class: QwClass,
}

pub fn coefficients(rel: &WeingartenRelation) -> Result<Coeffs> {
    let c = rel.k_coefficients().ok_or_else(|| Error::Invalid("not semi-quadratic".into()))?;
    if c.iter().all(|x| *x == 0.0) {
        return Err(Error::Invalid("all four coefficients vanish".into()));
    }
    Ok(c)
}

fn is_parabolic(l1: f64, l2: f64) -> bool {
    (l2 - l1 * l1).abs() <= 1e-12 * (l1 * l1).max(1.0)
}

pub fn invariants_of(c: &Coeffs) -> SemiQuadraticInvariants {
    let [a, b, g, d] = *c;
    let lambda1 = b - g;
    let lambda2 = (b + g) * (b + g) - 4.0 * a * d;
    let class = if is_parabolic(lambda1, lambda2) {
        QwClass::Parabolic
    } else if lambda2 > lambda1 * lambda1 {
        QwClass::Elliptic
    } else {
        QwClass::Hyperbolic
    };
    SemiQuadraticInvariants { lambda1, lambda2, ratio: (lambda2 != 0.0).then(|| lambda1 * lambda1 / lambda2), class }
}

pub fn invariants(rel: &WeingartenRelation) -> Result<SemiQuadraticInvariants> {
    Ok(invariants_of(&coefficients(rel)?))
}

pub fn normalize_coeffs(c: &Coeffs) -> Result<Coeffs> {
    let l2 = invariants_of(c).lambda2;
    if l2 <= 0.0 {
        return Err(Error::Invalid(format!("normalisation needs Lambda2 > 0, got {l2}")));
    }
    let s = l2.sqrt();
    Ok(c.map(|x| x / s))
}

/// Divides through by √Λ₂.
pub fn normalize(rel: &WeingartenRelation) -> Result<WeingartenRelation> {
    let [alpha, beta, gamma, delta] = normalize_coeffs(&coefficients(rel)?)?;
    Ok(WeingartenRelation::SemiQuadratic { alpha, beta, gamma, delta })
}

/// Coefficients of the relation satisfied by r̃ when r = N(r̃) solves `c`.
pub fn pullback(n: &MoebiusElement, c: &Coeffs) -> Coeffs {
    let (a, b, cc, d) = (n.a, n.b, n.c, n.d);
    let [al, be, ga, de] = *c;
    [
        al * d * d + (be + ga) * b * d + de * b * b,
        al * cc * d + be * a * d + ga * b * cc + de * a * b,
        al * cc * d + be * b * cc + ga * a * d + de * a * b,
        al * cc * cc + (be + ga) * a * cc + de * a * a,
    ]
}

/// Image coefficients under r ↦ M(r).
pub fn push_forward(m: &MoebiusElement, c: &Coeffs) -> Coeffs {
    pullback(&m.inverse(), c)
}

/// Umbilic curvatures: roots of αk² + (β+γ)k + δ = 0.
pub fn umbilic_curvatures_of(c: &Coeffs) -> Vec<f64> {
    let [a, b, g, d] = *c;
    let inv = invariants_of(c);
    if a != 0.0 {
        if inv.lambda2 < 0.0 {
            return Vec::new();
        }
        let s = inv.lambda2.sqrt();
        let mut v = vec![(-(b + g) + s) / (2.0 * a), (-(b + g) - s) / (2.0 * a)];
        v.dedup();
        v
    } else if b + g != 0.0 {
        vec![-d / (b + g)]
    } else {
        Vec::new()
    }
}

pub fn umbilic_curvatures(rel: &WeingartenRelation) -> Result<Vec<f64>> {
    Ok(umbilic_curvatures_of(&coefficients(rel)?))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlopePair {
    pub plus: Option<f64>,
    pub minus: Option<f64>,
}

/// μ± = (Λ₁ ± √Λ₂)/(Λ₁ ∓ √Λ₂); a vanishing denominator leaves that value undefined.
pub fn umbilic_slope_formula(rel: &WeingartenRelation) -> Result<SlopePair> {
    let inv = invariants(rel)?;
    if inv.lambda2 < 0.0 {
        return Err(Error::Invalid("no umbilics when Lambda2 < 0".into()));
    }
    let s = inv.lambda2.sqrt();
    let l = inv.lambda1;
    let q = |n: f64, d: f64| if is_parabolic(l, inv.lambda2) && d.abs() <= 1e-12 * s.max(1.0) { None } else { Some(n / d) };
    Ok(SlopePair { plus: q(l + s, l - s), minus: q(l - s, l + s) })
}

fn close(x: &Coeffs, y: &Coeffs, tol: f64) -> bool {
    let scale = y.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    x.iter().zip(y).all(|(a, b)| (a - b).abs() <= tol * scale)
}

fn matrix(a: f64, b: f64, c: f64, d: f64) -> Option<MoebiusElement> {
    if ![a, b, c, d].iter().all(|v| v.is_finite()) {
        return None;
    }
    MoebiusElement::new(a, b, c, d).ok()
}

/// Candidate matrices N with pullback(N, from) = to, following the case split
/// on which of δ, δ′ vanish.
fn candidates(from: &Coeffs, to: &Coeffs) -> Result<Vec<MoebiusElement>> {
    let [al, _be, ga, de] = *from;
    let [al2, _be2, ga2, de2] = *to;
    let l1 = from[1] - from[2];
    let s = l1 + 2.0 * ga;
    let mut out = Vec::new();
    if de != 0.0 && de2 != 0.0 {
        let mut c = 1.0;
        while c * c + 4.0 * de * de2 < 1.0 {
            c *= 2.0;
        }
        let disc = (c * c + 4.0 * de * de2).sqrt();
        for sign in [1.0, -1.0] {
            let a = (-s * c + sign * disc) / (2.0 * de);
            let d = (c * ga2 + de * a + (l1 + ga) * c) / de2;
            let b = (a * d - 1.0) / c;
            out.extend(matrix(a, b, c, d));
        }
    } else if de == 0.0 && de2 != 0.0 {
        if s == 0.0 {
            return Err(Error::Degenerate("Lambda1 + 2 gamma vanishes".into()));
        }
        let mut c = 1.0;
        for _ in 0..8 {
            let a = (de2 - al * c * c) / (c * s);
            let d = c * (l1 + ga + ga2) / de2;
            let b = (a * d - 1.0) / c;
            out.extend(matrix(a, b, c, d));
            c *= 2.0;
        }
    } else if de != 0.0 && de2 == 0.0 {
        for n in candidates(to, from)? {
            out.push(n.inverse());
        }
    } else if ga2 == ga {
        // c = 0: N = (1/d, b; 0, d)
        if s == 0.0 {
            return Err(Error::Degenerate("Lambda1 + 2 gamma vanishes".into()));
        }
        if al == 0.0 && al2 == 0.0 {
            out.push(MoebiusElement::identity());
        } else if al == 0.0 {
            let b = 1.0;
            let d = al2 / (b * s);
            out.extend(matrix(1.0 / d, b, 0.0, d));
        } else {
            let mut b: f64 = 1.0;
            while b * b + 4.0 * al * al2 < 1.0 {
                b *= 2.0;
            }
            let disc = (b * b + 4.0 * al * al2).sqrt();
            for sign in [1.0, -1.0] {
                let d = (-s * b + sign * disc) / (2.0 * al);
                out.extend(matrix(1.0 / d, b, 0.0, d));
            }
        }
    } else {
        if s == 0.0 {
            return Err(Error::Degenerate("Lambda1 + 2 gamma vanishes".into()));
        }
        let c = 1.0;
        let a = -al * c / s;
        let d = -al2 * c / s;
        let b = (a * d - 1.0) / c;
        out.extend(matrix(a, b, c, d));
    }
    Ok(out)
}

/// M with transform_relation(M, from) = to, both normalised with equal Λ₁².
pub fn transitivity_solve(from: &WeingartenRelation, to: &WeingartenRelation) -> Result<MoebiusElement> {
    transitivity_solve_coeffs(&coefficients(from)?, &coefficients(to)?)
}

pub fn transitivity_solve_coeffs(from: &Coeffs, to: &Coeffs) -> Result<MoebiusElement> {
    let (fi, ti) = (invariants_of(from), invariants_of(to));
    for (name, inv) in [("source", fi), ("target", ti)] {
        if (inv.lambda2 - 1.0).abs() > 1e-10 {
            return Err(Error::Invalid(format!("{name} is not normalised (Lambda2 = {})", inv.lambda2)));
        }
    }
    if (fi.lambda1 * fi.lambda1 - ti.lambda1 * ti.lambda1).abs() > 1e-10 {
        return Err(Error::Invalid("Lambda1 squared differs".into()));
    }
    if close(from, to, 1e-14) {
        return Ok(MoebiusElement::identity());
    }
    // Λ₁ is invariant, not just Λ₁²; flip the target's overall sign to match
    let target = if fi.lambda1 * ti.lambda1 < 0.0 { to.map(|x| -x) } else { *to };
    let mut best: Option<(f64, MoebiusElement)> = None;
    for n in candidates(from, &target)? {
        if !close(&pullback(&n, from), &target, 1e-9) {
            continue;
        }
        let norm = n.frobenius();
        if best.map_or(true, |(m, _)| norm < m) {
            best = Some((norm, n));
        }
    }
    let (_, n) = best.ok_or_else(|| Error::Numeric("no candidate matrix reproduces the target".into()))?;
    Ok(n.inverse())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Reduction {
    pub matrix: MoebiusElement,
    pub lambda: f64,
}

/// Moves a Λ₂ > 0 relation onto k₂ = λk₁ with λ = (Λ₁+1)/(Λ₁−1).
pub fn reduce_to_pure_linear(rel: &WeingartenRelation) -> Result<Reduction> {
    let c = normalize_coeffs(&coefficients(rel)?)?;
    let l1 = invariants_of(&c).lambda1;
    if is_parabolic(l1, 1.0) {
        return Err(Error::Degenerate("parabolic relation: classify as a canal surface instead".into()));
    }
    let target = [0.0, (l1 + 1.0) / 2.0, (1.0 - l1) / 2.0, 0.0];
    let matrix = transitivity_solve_coeffs(&c, &target)?;
    Ok(Reduction { matrix, lambda: (l1 + 1.0) / (l1 - 1.0) })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CanalClass {
    RoundSphere,
    Torus,
    Plane,
    Cone,
    Cylinder,
}

/// Which of the parabolic surfaces the samples describe, decided by which
/// principal curvature is constant.
pub fn canal_classify(rel: &WeingartenRelation, samples: &[RoCPoint]) -> Result<CanalClass> {
    let inv = invariants(rel)?;
    if inv.class != QwClass::Parabolic {
        return Err(Error::Invalid("relation is not parabolic".into()));
    }
    if samples.is_empty() {
        return Err(Error::Invalid("no samples".into()));
    }
    const TOL: f64 = 1e-6;
    let ks: Vec<(f64, f64)> = samples
        .iter()
        .map(|p| {
            let (k1, k2) = p.curvatures();
            (k1.to_f64(), k2.to_f64())
        })
        .collect();
    let stats = |v: Vec<f64>| -> (bool, f64) {
        let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mean = 0.5 * (lo + hi);
        (hi - lo <= TOL * mean.abs().max(1.0), mean)
    };
    let (k1_const, k1) = stats(ks.iter().map(|k| k.0).collect());
    let (k2_const, k2) = stats(ks.iter().map(|k| k.1).collect());
    let zero = |k: f64| k.abs() <= TOL;
    let class = if k2_const && zero(k2) {
        if k1_const && zero(k1) {
            CanalClass::Plane
        } else if k1_const {
            CanalClass::Cylinder
        } else {
            CanalClass::Cone
        }
    } else if k1_const && k2_const && (k1 - k2).abs() <= TOL * k1.abs().max(1.0) {
        CanalClass::RoundSphere
    } else if k2_const {
        CanalClass::Torus
    } else {
        return Err(Error::Numeric(format!(
            "samples fit no parabolic class (k1 constant: {k1_const}, k2 constant: {k2_const})"
        )));
    };
    Ok(class)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassificationReport {
    pub schema: u32,
    pub coefficients: Coeffs,
    pub lambda1: f64,
    pub lambda2: f64,
    pub ratio: Option<f64>,
    pub class: QwClass,
    pub umbilic_k: Vec<f64>,
    pub slopes: Option<SlopePair>,
    pub reduction: Option<Reduction>,
}

pub fn classify(rel: &WeingartenRelation) -> Result<ClassificationReport> {
    let c = coefficients(rel)?;
    let inv = invariants_of(&c);
    Ok(ClassificationReport {
        schema: 1,
        coefficients: c,
        lambda1: inv.lambda1,
        lambda2: inv.lambda2,
        ratio: inv.ratio,
        class: inv.class,
        umbilic_k: umbilic_curvatures_of(&c),
        slopes: umbilic_slope_formula(rel).ok(),
        reduction: if inv.lambda2 > 0.0 { reduce_to_pure_linear(rel).ok() } else { None },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use WeingartenRelation as W;

    fn sq(a: f64, b: f64, g: f64, d: f64) -> W {
        W::SemiQuadratic { alpha: a, beta: b, gamma: g, delta: d }
    }

    #[test]
    fn invariant_examples() {
        let i = invariants(&sq(0.0, 1.0, 1.0, -4.0)).unwrap();
        assert_eq!((i.lambda1, i.lambda2, i.class), (0.0, 4.0, QwClass::Elliptic));
        let i = invariants(&W::LinearHopf { lambda: 3.0, c: -3.0 }).unwrap();
        assert_eq!((i.lambda1, i.lambda2), (-4.0, 4.0));
        assert_eq!(invariants(&sq(0.0, 1.0, -1.0, 0.0)).unwrap().class, QwClass::Hyperbolic);
        assert_eq!(invariants(&sq(0.0, 0.0, 1.0, -0.5)).unwrap().class, QwClass::Parabolic);
        assert!(invariants(&W::CubicRoC { gamma: 1.0 }).is_err());
    }

    #[test]
    fn normalisation() {
        assert_eq!(normalize(&sq(0.0, 1.0, 1.0, -4.0)).unwrap(), sq(0.0, 0.5, 0.5, -2.0));
        assert_eq!(normalize(&sq(0.0, 0.5, 0.5, -2.0)).unwrap(), sq(0.0, 0.5, 0.5, -2.0));
        assert!(normalize(&sq(1.0, 0.0, 0.0, 1.0)).is_err());
    }

    #[test]
    fn umbilics() {
        assert_eq!(umbilic_curvatures(&sq(0.0, 1.0, 1.0, -4.0)).unwrap(), vec![2.0]);
        assert!(umbilic_curvatures(&sq(1.0, 0.0, 0.0, 1.0)).unwrap().is_empty());
        assert_eq!(umbilic_curvatures(&W::PureKLinear { lambda: 3.0 }).unwrap(), vec![0.0]);
    }

    #[test]
    fn slope_formula() {
        let s = umbilic_slope_formula(&sq(0.0, 0.5, 0.5, -2.0)).unwrap();
        assert_eq!((s.plus, s.minus), (Some(-1.0), Some(-1.0)));
        let s = umbilic_slope_formula(&W::LinearHopf { lambda: 3.0, c: -3.0 }).unwrap();
        assert!((s.plus.unwrap() - 1.0 / 3.0).abs() < 1e-15 && (s.minus.unwrap() - 3.0).abs() < 1e-15);
        let s = umbilic_slope_formula(&sq(0.0, 0.0, 1.0, -0.5)).unwrap();
        assert_eq!(s.plus, Some(0.0));
        assert_eq!(s.minus, None);
    }

    #[test]
    fn transitivity_examples() {
        let from = sq(0.0, 0.5, 0.5, -2.0);
        let m = transitivity_solve(&from, &from).unwrap();
        assert_eq!(m, MoebiusElement::identity());
        let to = sq(0.0, 0.5, 0.5, -1.0);
        let m = transitivity_solve(&from, &to).unwrap();
        assert!((m.det() - 1.0).abs() < 1e-12);
        let img = push_forward(&m, &coefficients(&from).unwrap());
        assert!(close(&img, &coefficients(&to).unwrap(), 1e-9), "{img:?}");
    }

    #[test]
    fn reductions() {
        let r = reduce_to_pure_linear(&sq(0.0, 1.0, 1.0, -4.0)).unwrap();
        assert_eq!(r.lambda, -1.0);
        let img = push_forward(&r.matrix, &normalize_coeffs(&[0.0, 1.0, 1.0, -4.0]).unwrap());
        assert!(close(&img, &[0.0, 0.5, 0.5, 0.0], 1e-9), "{img:?}");
        // Λ₁ = 2, Λ₂ = 1
        let r = reduce_to_pure_linear(&sq(0.0, 1.5, -0.5, 0.0)).unwrap();
        assert_eq!(r.lambda, 3.0);
        let r = reduce_to_pure_linear(&sq(0.0, -0.5, 1.5, 0.0)).unwrap();
        assert!((r.lambda - 1.0 / 3.0).abs() < 1e-15);
        assert!(matches!(reduce_to_pure_linear(&sq(0.0, 1.0, 0.0, 0.0)), Err(Error::Degenerate(_))));
    }

    #[test]
    fn canal_classes() {
        let torus_rel = sq(0.0, 0.0, 1.0, -0.5);
        let torus: Vec<RoCPoint> = (1..20).map(|i| {
            let t = i as f64 * 0.15;
            RoCPoint::new(2.0 + 0.7 / t.sin(), 2.0)
        }).collect();
        assert_eq!(canal_classify(&torus_rel, &torus).unwrap(), CanalClass::Torus);
        let sphere = vec![RoCPoint::new(2.0, 2.0); 5];
        assert_eq!(canal_classify(&torus_rel, &sphere).unwrap(), CanalClass::RoundSphere);
        let cyl = vec![RoCPoint::new(2.0, f64::INFINITY); 5];
        assert_eq!(canal_classify(&torus_rel, &cyl).unwrap(), CanalClass::Cylinder);
        let cone: Vec<RoCPoint> = (1..5).map(|i| RoCPoint::new(i as f64, f64::INFINITY)).collect();
        assert_eq!(canal_classify(&torus_rel, &cone).unwrap(), CanalClass::Cone);
        let plane = vec![RoCPoint::new(f64::INFINITY, f64::INFINITY); 3];
        assert_eq!(canal_classify(&torus_rel, &plane).unwrap(), CanalClass::Plane);
        let junk: Vec<RoCPoint> = (1..5).map(|i| RoCPoint::new(i as f64, 1.0 + i as f64)).collect();
        assert!(canal_classify(&torus_rel, &junk).is_err());
    }
}
