//! Limits of sequences sampled on a geometric ladder.
//!
//! Three extrapolants run side by side: the raw tail, Aitken's Δ² (exact for
//! geometric convergence) and a three-point fit of `μ + c/(x + b)` in
//! `x = ln(1/sin θ)` (logarithmic convergence). The scheme whose successive
//! extrapolates agree best wins and that disagreement is the uncertainty.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    Raw,
    Aitken,
    LogRational,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Limit {
    pub value: f64,
    pub uncertainty: f64,
    pub scheme: Scheme,
}

fn aitken(y: [f64; 3]) -> f64 {
    let den = y[2] - 2.0 * y[1] + y[0];
    if den == 0.0 {
        return y[2];
    }
    y[2] - (y[2] - y[1]).powi(2) / den
}

fn log_rational(x: [f64; 3], y: [f64; 3]) -> f64 {
    let d1 = y[1] - y[0];
    let d2 = y[2] - y[1];
    let h1 = x[1] - x[0];
    let h2 = x[2] - x[1];
    let den = d1 * h2 - d2 * h1;
    if den == 0.0 || d1 == 0.0 {
        return y[2];
    }
    let b = (d2 * h1 * x[2] - d1 * h2 * x[0]) / den;
    let c = -d1 * (x[0] + b) * (x[1] + b) / h1;
    y[2] - c / (x[2] + b)
}

fn sequence(scheme: Scheme, x: &[f64], y: &[f64]) -> Vec<f64> {
    match scheme {
        Scheme::Raw => y.to_vec(),
        Scheme::Aitken => y.windows(3).map(|w| aitken([w[0], w[1], w[2]])).collect(),
        Scheme::LogRational => (0..y.len().saturating_sub(2))
            .map(|i| log_rational([x[i], x[i + 1], x[i + 2]], [y[i], y[i + 1], y[i + 2]]))
            .collect(),
    }
}

/// Best (value, spread) over the tail half of an extrapolate sequence.
fn best_tail(e: &[f64]) -> Option<(f64, f64)> {
    if e.len() < 3 {
        return None;
    }
    let start = (e.len() / 2).max(2);
    let mut best: Option<(f64, f64)> = None;
    for j in start.min(e.len() - 1)..e.len() {
        let spread = (e[j] - e[j - 1]).abs().max((e[j - 1] - e[j - 2]).abs());
        if !spread.is_finite() || !e[j].is_finite() {
            continue;
        }
        if best.map_or(true, |b| spread < b.1) {
            best = Some((e[j], spread));
        }
    }
    best
}

/// Extrapolated limit of `y` as `x → ∞`; `x` increasing.
pub fn extrapolate(x: &[f64], y: &[f64]) -> Option<Limit> {
    let n = x.len().min(y.len());
    if n < 3 {
        return None;
    }
    let (x, y) = (&x[..n], &y[..n]);
    let mut out: Option<Limit> = None;
    for scheme in [Scheme::Raw, Scheme::Aitken, Scheme::LogRational] {
        if let Some((value, spread)) = best_tail(&sequence(scheme, x, y)) {
            if out.map_or(true, |o| spread < o.uncertainty) {
                out = Some(Limit { value, uncertainty: spread, scheme });
            }
        }
    }
    out
}

/// True when |y| more than doubles for three consecutive steps.
pub fn ratio_divergence(y: &[f64]) -> bool {
    let mut run = 0;
    for w in y.windows(2) {
        if w[0] != 0.0 && (w[1] / w[0]).abs() > 2.0 {
            run += 1;
            if run >= 3 {
                return true;
            }
        } else {
            run = 0;
        }
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ladder(n: usize) -> (Vec<f64>, Vec<f64>) {
        let th: Vec<f64> = (0..n).map(|k| 0.5 * 2f64.powi(-(k as i32))).collect();
        let x = th.iter().map(|t| -(t.sin().ln())).collect();
        (th, x)
    }

    #[test]
    fn geometric_convergence() {
        let (th, x) = ladder(16);
        let y: Vec<f64> = th.iter().map(|t| 3.0 + 0.7 * t.sin().powi(2)).collect();
        let l = extrapolate(&x, &y).unwrap();
        assert!((l.value - 3.0).abs() < 1e-9, "{l:?}");
    }

    #[test]
    fn logarithmic_convergence() {
        let (th, x) = ladder(20);
        let y: Vec<f64> = th.iter().map(|t| 2.5 + 1.0 / (2.0 / t.sin()).ln()).collect();
        let l = extrapolate(&x, &y).unwrap();
        assert!((l.value - 2.5).abs() < 1e-3, "{l:?}");
        assert_eq!(l.scheme, Scheme::LogRational);
    }

    #[test]
    fn doubling_detected() {
        assert!(ratio_divergence(&[1.0, 3.0, 7.0, 15.0]));
        assert!(!ratio_divergence(&[1.0, 1.5, 2.0, 2.5, 3.0]));
    }
}
