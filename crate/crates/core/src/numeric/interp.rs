//! Local polynomial derivatives on arbitrary grids and a C² quintic Hermite interpolant.
//!
//! Nodal derivatives come from the Lagrange polynomial through the seven
//! nearest samples (Fornberg weights). On a uniform grid this is the centred
//! sixth-order difference formula.

use crate::error::{Error, Result};

pub const STENCIL: usize = 7;

/// Fornberg's recursion: weights `w[m][j]` for the m-th derivative at `z`.
pub fn fornberg(z: f64, x: &[f64], m: usize) -> Vec<Vec<f64>> {
    let n = x.len();
    let mut c = vec![vec![0.0; n]; m + 1];
    c[0][0] = 1.0;
    let mut c1 = 1.0;
    let mut c4 = x[0] - z;
    for i in 1..n {
        let mn = i.min(m);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = x[i] - z;
        for j in 0..i {
            let c3 = x[i] - x[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[k][i] = c1 * (k as f64 * c[k - 1][i - 1] - c5 * c[k][i - 1]) / c2;
                }
                c[0][i] = -c1 * c5 * c[0][i - 1] / c2;
            }
            for k in (1..=mn).rev() {
                c[k][j] = (c4 * c[k][j] - k as f64 * c[k - 1][j]) / c3;
            }
            c[0][j] = c4 * c[0][j] / c3;
        }
        c1 = c2;
    }
    c
}

fn window(i: usize, n: usize, w: usize) -> usize {
    let half = w / 2;
    i.saturating_sub(half).min(n - w)
}

/// First and second derivatives at every node.
pub fn nodal_derivatives(x: &[f64], y: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = x.len();
    if n < 3 || y.len() != n {
        return Err(Error::Invalid("need at least three samples".into()));
    }
    let w = STENCIL.min(n);
    let mut d1 = vec![0.0; n];
    let mut d2 = vec![0.0; n];
    for i in 0..n {
        let s = window(i, n, w);
        let c = fornberg(x[i], &x[s..s + w], 2);
        for j in 0..w {
            d1[i] += c[1][j] * y[s + j];
            d2[i] += c[2][j] * y[s + j];
        }
    }
    Ok((d1, d2))
}

/// First derivative only.
pub fn nodal_first_derivative(x: &[f64], y: &[f64]) -> Result<Vec<f64>> {
    Ok(nodal_derivatives(x, y)?.0)
}

/// Piecewise quintic Hermite through nodal values and first two derivatives.
#[derive(Debug, Clone)]
pub struct Sampled {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub d1: Vec<f64>,
    pub d2: Vec<f64>,
}

impl Sampled {
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        check_grid(&x)?;
        let (d1, d2) = nodal_derivatives(&x, &y)?;
        Ok(Sampled { x, y, d1, d2 })
    }

    pub fn with_derivatives(x: Vec<f64>, y: Vec<f64>, d1: Vec<f64>, d2: Vec<f64>) -> Result<Self> {
        check_grid(&x)?;
        if y.len() != x.len() || d1.len() != x.len() || d2.len() != x.len() {
            return Err(Error::Invalid("sample arrays differ in length".into()));
        }
        Ok(Sampled { x, y, d1, d2 })
    }

    pub fn lo(&self) -> f64 {
        self.x[0]
    }

    pub fn hi(&self) -> f64 {
        *self.x.last().unwrap()
    }

    fn segment(&self, t: f64) -> usize {
        match self.x.binary_search_by(|v| v.total_cmp(&t)) {
            Ok(i) => i.min(self.x.len() - 2),
            Err(i) => i.clamp(1, self.x.len() - 1) - 1,
        }
    }

    /// Value, first and second derivative at `t` (extrapolates at the ends).
    pub fn eval(&self, t: f64) -> (f64, f64, f64) {
        let i = self.segment(t);
        let h = self.x[i + 1] - self.x[i];
        let s = (t - self.x[i]) / h;
        let (f0, g0, k0) = (self.y[i], self.d1[i] * h, self.d2[i] * h * h);
        let (f1, g1, k1) = (self.y[i + 1], self.d1[i + 1] * h, self.d2[i + 1] * h * h);
        let s2 = s * s;
        let s3 = s2 * s;
        let s4 = s3 * s;
        let s5 = s4 * s;
        let h0 = [1.0 - 10.0 * s3 + 15.0 * s4 - 6.0 * s5, -30.0 * s2 + 60.0 * s3 - 30.0 * s4, -60.0 * s + 180.0 * s2 - 120.0 * s3];
        let h1 = [s - 6.0 * s3 + 8.0 * s4 - 3.0 * s5, 1.0 - 18.0 * s2 + 32.0 * s3 - 15.0 * s4, -36.0 * s + 96.0 * s2 - 60.0 * s3];
        let h2 = [
            0.5 * (s2 - 3.0 * s3 + 3.0 * s4 - s5),
            0.5 * (2.0 * s - 9.0 * s2 + 12.0 * s3 - 5.0 * s4),
            0.5 * (2.0 - 18.0 * s + 36.0 * s2 - 20.0 * s3),
        ];
        let h3 = [0.5 * (s3 - 2.0 * s4 + s5), 0.5 * (3.0 * s2 - 8.0 * s3 + 5.0 * s4), 0.5 * (6.0 * s - 24.0 * s2 + 20.0 * s3)];
        let h4 = [-4.0 * s3 + 7.0 * s4 - 3.0 * s5, -12.0 * s2 + 28.0 * s3 - 15.0 * s4, -24.0 * s + 84.0 * s2 - 60.0 * s3];
        let h5 = [10.0 * s3 - 15.0 * s4 + 6.0 * s5, 30.0 * s2 - 60.0 * s3 + 30.0 * s4, 60.0 * s - 180.0 * s2 + 120.0 * s3];
        let mut out = [0.0; 3];
        for (k, o) in out.iter_mut().enumerate() {
            *o = f0 * h0[k] + g0 * h1[k] + k0 * h2[k] + k1 * h3[k] + g1 * h4[k] + f1 * h5[k];
        }
        (out[0], out[1] / h, out[2] / (h * h))
    }

    pub fn value(&self, t: f64) -> f64 {
        self.eval(t).0
    }

    /// Running integral from the first node, exact for the interpolant.
    pub fn cumulative_integral(&self) -> Vec<f64> {
        let mut acc = vec![0.0; self.x.len()];
        for i in 0..self.x.len() - 1 {
            let h = self.x[i + 1] - self.x[i];
            let seg = h * (self.y[i] + self.y[i + 1]) / 2.0
                + h * h * (self.d1[i] - self.d1[i + 1]) / 10.0
                + h * h * h * (self.d2[i] + self.d2[i + 1]) / 120.0;
            acc[i + 1] = acc[i] + seg;
        }
        acc
    }
}

pub fn check_grid(x: &[f64]) -> Result<()> {
    if x.len() < 3 {
        return Err(Error::Invalid("grid needs at least three samples".into()));
    }
    if x.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::Invalid("grid is not strictly increasing".into()));
    }
    Ok(())
}

/// Uniform grid with `n` intervals on [a, b], endpoints exact.
pub fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..=n)
        .map(|i| if i == n { b } else { a + (b - a) * i as f64 / n as f64 })
        .collect()
}
