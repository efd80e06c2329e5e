//! Dormand–Prince 5(4) for scalar ODEs with steps clipped onto output nodes.

use crate::error::Error;

#[derive(Debug, Clone, Copy)]
pub struct RkTol {
    pub rel: f64,
    pub abs: f64,
}

#[derive(Debug, Clone)]
pub enum RkStop {
    /// Reached the end of the requested range.
    Target,
    /// Right-hand side could not be evaluated.
    Rhs(Error),
    /// Step size fell below the representable minimum.
    Underflow,
    /// Caller-supplied event.
    Event(String),
}

#[derive(Debug, Clone)]
pub struct RkRun {
    /// (t, y) at every requested node that was reached.
    pub nodes: Vec<(f64, f64)>,
    pub end: (f64, f64),
    pub stop: RkStop,
    pub accepted: usize,
    pub rejected: usize,
    /// Accepted step end points (t, y, y'), for monotonicity checks.
    pub steps: Vec<(f64, f64, f64)>,
}

const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

/// One trial step; returns (y_new, error estimate, f(t+h, y_new)).
fn step<F>(f: &mut F, t: f64, y: f64, h: f64, k1: f64) -> Result<(f64, f64, f64), Error>
where
    F: FnMut(f64, f64) -> Result<f64, Error>,
{
    let mut k = [0.0; 7];
    k[0] = k1;
    for s in 1..7 {
        let mut acc = y;
        for j in 0..s {
            acc += h * A[s][j] * k[j];
        }
        k[s] = f(t + C[s] * h, acc)?;
        if !k[s].is_finite() {
            return Err(Error::Numeric(format!("non-finite slope at t = {}", t + C[s] * h)));
        }
    }
    let mut y_new = y;
    for j in 0..6 {
        y_new += h * A[6][j] * k[j];
    }
    let err: f64 = (0..7).map(|j| E[j] * k[j]).sum::<f64>() * h;
    Ok((y_new, err, k[6]))
}

/// Integrates from `t0` toward `t_end`, landing exactly on each of `nodes`
/// (which must lie between them, ordered in the direction of travel).
pub fn run<F, W>(
    mut f: F,
    t0: f64,
    y0: f64,
    t_end: f64,
    nodes: &[f64],
    tol: RkTol,
    mut event: W,
) -> RkRun
where
    F: FnMut(f64, f64) -> Result<f64, Error>,
    W: FnMut(f64, f64) -> Option<String>,
{
    let dir = if t_end >= t0 { 1.0 } else { -1.0 };
    let mut out = RkRun {
        nodes: Vec::new(),
        end: (t0, y0),
        stop: RkStop::Target,
        accepted: 0,
        rejected: 0,
        steps: Vec::new(),
    };
    let mut t = t0;
    let mut y = y0;
    let mut k1 = match f(t, y) {
        Ok(v) => v,
        Err(e) => {
            out.stop = RkStop::Rhs(e);
            return out;
        }
    };
    out.steps.push((t, y, k1));
    let mut next = 0;
    while next < nodes.len() && (nodes[next] - t) * dir <= 0.0 {
        if nodes[next] == t {
            out.nodes.push((t, y));
        }
        next += 1;
    }
    let span = (t_end - t0).abs();
    let mut h = (1e-3 * span).max(1e-8) * dir;
    loop {
        if (t_end - t) * dir <= 0.0 {
            break;
        }
        let target = if next < nodes.len() { nodes[next] } else { t_end };
        let mut clipped = false;
        if (t + h - target) * dir >= 0.0 {
            h = target - t;
            clipped = true;
        }
        let h_min = 1e-14 * t.abs().max(1.0);
        if h.abs() < h_min {
            out.stop = RkStop::Underflow;
            break;
        }
        match step(&mut f, t, y, h, k1) {
            Ok((y_new, err, k_new)) => {
                let sc = tol.abs + tol.rel * y.abs().max(y_new.abs());
                let en = err.abs() / sc;
                if en <= 1.0 {
                    t = if clipped { target } else { t + h };
                    y = y_new;
                    k1 = k_new;
                    out.accepted += 1;
                    out.steps.push((t, y, k1));
                    if clipped && next < nodes.len() && t == nodes[next] {
                        out.nodes.push((t, y));
                        next += 1;
                    }
                    if let Some(reason) = event(t, y) {
                        out.stop = RkStop::Event(reason);
                        break;
                    }
                    let fac = if en == 0.0 { 5.0 } else { (0.9 * en.powf(-0.2)).clamp(0.2, 5.0) };
                    h *= fac;
                } else {
                    out.rejected += 1;
                    h *= (0.9 * en.powf(-0.25)).clamp(0.1, 0.9);
                }
            }
            Err(e) => {
                out.rejected += 1;
                h *= 0.25;
                if h.abs() < h_min {
                    out.stop = RkStop::Rhs(e);
                    break;
                }
            }
        }
    }
    out.end = (t, y);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_decay_hits_nodes() {
        let nodes = [0.25, 0.5, 1.0];
        let run = run(|_, y| Ok(-y), 0.0, 1.0, 1.0, &nodes, RkTol { rel: 1e-12, abs: 1e-14 }, |_, _| None);
        assert_eq!(run.nodes.len(), 3);
        for (t, y) in run.nodes {
            assert!((y - (-t).exp()).abs() < 1e-11);
        }
    }

    #[test]
    fn backward_direction() {
        let nodes = [1.5, 1.0];
        let run = run(|t, _| Ok(t.cos()), 2.0, 2f64.sin(), 1.0, &nodes, RkTol { rel: 1e-12, abs: 1e-14 }, |_, _| None);
        assert!((run.end.1 - 1f64.sin()).abs() < 1e-11);
    }

    #[test]
    fn event_stops() {
        let run = run(|_, y| Ok(y * y), 0.0, 1.0, 2.0, &[], RkTol { rel: 1e-10, abs: 1e-12 }, |_, y| {
            (y > 1e6).then(|| "blow-up".to_string())
        });
        assert!(matches!(run.stop, RkStop::Event(_)));
        assert!(run.end.0 < 1.0);
    }
}
