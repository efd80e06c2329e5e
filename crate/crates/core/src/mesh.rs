//! Triangle meshes of surfaces of revolution about the +z axis, with OBJ output.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::roc_core::{fmt17, ProfileTable};

#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    pub vertices: Vec<[f64; 3]>,
    /// One normal per vertex.
    pub normals: Vec<[f64; 3]>,
    pub triangles: Vec<[usize; 3]>,
    pub warnings: Vec<String>,
}

enum Row {
    Point(usize),
    Ring(usize),
}

/// Revolves the meridian (ρ(θ), h(θ)) with `segments` angular steps. Rows
/// with ρ ≈ 0 collapse to one vertex on the axis; non-finite rows are skipped.
pub fn revolve(theta: &[f64], rho: &[f64], h: &[f64], segments: usize) -> Result<Mesh> {
    if segments < 3 {
        return Err(Error::Invalid("at least 3 segments are needed".into()));
    }
    if theta.len() != rho.len() || theta.len() != h.len() {
        return Err(Error::Invalid("profile columns differ in length".into()));
    }
    let mut warnings = Vec::new();
    let rows: Vec<usize> = (0..theta.len())
        .filter(|&i| {
            let ok = theta[i].is_finite() && rho[i].is_finite() && h[i].is_finite();
            if !ok {
                warnings.push(format!("row {i} (theta = {}) skipped: not finite", theta[i]));
            }
            ok
        })
        .collect();
    if rows.len() < 2 {
        return Err(Error::Invalid("profile needs at least two finite rows".into()));
    }
    let scale = rows.iter().map(|&i| rho[i].abs()).fold(1.0, f64::max);
    let mut mesh = Mesh { vertices: Vec::new(), normals: Vec::new(), triangles: Vec::new(), warnings };
    let mut layout: Vec<Row> = Vec::new();
    for &i in &rows {
        let (st, ct) = theta[i].sin_cos();
        if rho[i].abs() <= 1e-9 * scale {
            if matches!(layout.last(), Some(Row::Point(_))) {
                mesh.warnings.push(format!("row {i} (theta = {}) merged into the previous axis vertex", theta[i]));
                continue;
            }
            layout.push(Row::Point(mesh.vertices.len()));
            mesh.vertices.push([0.0, 0.0, h[i]]);
            mesh.normals.push([0.0, 0.0, ct.signum()]);
        } else {
            layout.push(Row::Ring(mesh.vertices.len()));
            for j in 0..segments {
                let (sp, cp) = (2.0 * PI * j as f64 / segments as f64).sin_cos();
                mesh.vertices.push([rho[i] * cp, rho[i] * sp, h[i]]);
                mesh.normals.push([st * cp, st * sp, ct]);
            }
        }
    }
    let next = |j: usize| (j + 1) % segments;
    for w in layout.windows(2) {
        match (&w[0], &w[1]) {
            (Row::Ring(a), Row::Ring(b)) => {
                for j in 0..segments {
                    let (p, q, r, s) = (a + j, b + j, b + next(j), a + next(j));
                    mesh.triangles.push([p, q, r]);
                    mesh.triangles.push([p, r, s]);
                }
            }
            (Row::Point(p), Row::Ring(b)) => {
                for j in 0..segments {
                    mesh.triangles.push([*p, b + j, b + next(j)]);
                }
            }
            (Row::Ring(a), Row::Point(p)) => {
                for j in 0..segments {
                    mesh.triangles.push([a + j, *p, a + next(j)]);
                }
            }
            (Row::Point(_), Row::Point(_)) => unreachable!(),
        }
    }
    if mesh.triangles.is_empty() {
        return Err(Error::Invalid("profile spans no surface".into()));
    }
    Ok(mesh)
}

pub fn revolve_table(t: &ProfileTable, segments: usize) -> Result<Mesh> {
    revolve(&t.theta, &t.rho, &t.h, segments)
}

impl Mesh {
    fn edge_counts(&self) -> HashMap<(usize, usize), usize> {
        let mut m = HashMap::new();
        for t in &self.triangles {
            for k in 0..3 {
                let (a, b) = (t[k], t[(k + 1) % 3]);
                *m.entry((a.min(b), a.max(b))).or_insert(0) += 1;
            }
        }
        m
    }

    /// V − E + F over the vertices used by some triangle.
    pub fn euler_characteristic(&self) -> i64 {
        let mut used = vec![false; self.vertices.len()];
        for t in &self.triangles {
            for &v in t {
                used[v] = true;
            }
        }
        let v = used.iter().filter(|&&u| u).count() as i64;
        v - self.edge_counts().len() as i64 + self.triangles.len() as i64
    }

    /// Every edge shared by exactly two triangles.
    pub fn is_watertight(&self) -> bool {
        self.edge_counts().values().all(|&c| c == 2)
    }

    /// Number of closed loops formed by edges that belong to one triangle.
    pub fn boundary_loops(&self) -> usize {
        let edges: Vec<(usize, usize)> = self.edge_counts().into_iter().filter(|e| e.1 == 1).map(|e| e.0).collect();
        let mut parent: HashMap<usize, usize> = HashMap::new();
        fn find(p: &mut HashMap<usize, usize>, x: usize) -> usize {
            let up = *p.entry(x).or_insert(x);
            if up == x {
                return x;
            }
            let r = find(p, up);
            p.insert(x, r);
            r
        }
        for &(a, b) in &edges {
            let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
            if ra != rb {
                parent.insert(ra, rb);
            }
        }
        let keys: Vec<usize> = parent.keys().copied().collect();
        let mut roots: Vec<usize> = keys.into_iter().map(|k| find(&mut parent, k)).collect();
        roots.sort_unstable();
        roots.dedup();
        roots.len()
    }

    pub fn to_obj(&self) -> String {
        let mut s = String::from("# surface of revolution, axis +z\n");
        for v in &self.vertices {
            let _ = writeln!(s, "v {} {} {}", fmt17(v[0]), fmt17(v[1]), fmt17(v[2]));
        }
        for n in &self.normals {
            let _ = writeln!(s, "vn {} {} {}", fmt17(n[0]), fmt17(n[1]), fmt17(n[2]));
        }
        for t in &self.triangles {
            let _ = writeln!(s, "f {0}//{0} {1}//{1} {2}//{2}", t[0] + 1, t[1] + 1, t[2] + 1);
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::interp::linspace;

    fn sphere(n: usize, a: f64, b: f64) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        let t = linspace(a, b, n);
        let rho = t.iter().map(|x| x.sin()).collect();
        let h = t.iter().map(|x| x.cos()).collect();
        (t, rho, h)
    }

    #[test]
    fn closed_sphere() {
        let (t, r, h) = sphere(40, 0.0, PI);
        let m = revolve(&t, &r, &h, 64).unwrap();
        assert_eq!(m.euler_characteristic(), 2);
        assert!(m.is_watertight());
        assert_eq!(m.boundary_loops(), 0);
        assert_eq!(m.vertices.len(), 39 * 64 + 2);
    }

    #[test]
    fn open_band() {
        let (t, r, h) = sphere(20, 0.3, 2.5);
        let m = revolve(&t, &r, &h, 16).unwrap();
        assert_eq!(m.boundary_loops(), 2);
        assert_eq!(m.euler_characteristic(), 0);
    }

    #[test]
    fn outward_orientation() {
        let (t, r, h) = sphere(10, 0.0, PI);
        let m = revolve(&t, &r, &h, 12).unwrap();
        for tri in &m.triangles {
            let [a, b, c] = tri.map(|i| m.vertices[i]);
            let u = [b[0] - a[0], b[1] - a[1], b[2] - a[2]];
            let v = [c[0] - a[0], c[1] - a[1], c[2] - a[2]];
            let n = [u[1] * v[2] - u[2] * v[1], u[2] * v[0] - u[0] * v[2], u[0] * v[1] - u[1] * v[0]];
            let ctr: Vec<f64> = (0..3).map(|k| a[k] + b[k] + c[k]).collect();
            assert!(n[0] * ctr[0] + n[1] * ctr[1] + n[2] * ctr[2] > 0.0);
        }
    }

    #[test]
    fn nan_rows_skipped_and_empty_rejected() {
        let (t, mut r, h) = sphere(10, 0.2, 2.0);
        r[4] = f64::NAN;
        let m = revolve(&t, &r, &h, 8).unwrap();
        assert_eq!(m.warnings.len(), 1);
        assert!(revolve(&[], &[], &[], 8).is_err());
        assert!(revolve(&t, &r, &h, 2).is_err());
    }

    #[test]
    fn obj_counts() {
        let (t, r, h) = sphere(4, 0.0, PI);
        let m = revolve(&t, &r, &h, 8).unwrap();
        let obj = m.to_obj();
        assert_eq!(obj.lines().filter(|l| l.starts_with("v ")).count(), m.vertices.len());
        assert_eq!(obj.lines().filter(|l| l.starts_with("f ")).count(), m.triangles.len());
    }
}
