//! Triangulations of the disc B(2) built from concentric rings.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;
use num_traits::Float;

use crate::conductivity::DOMAIN_RADIUS;
use crate::error::{Error, Result};

/// One ring of nodes at a fixed radius.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Ring {
    pub radius: f64,
    /// Index of the first node of the ring.
    pub start: usize,
    pub count: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TriMesh {
    pub vertices: Vec<[f64; 2]>,
    pub triangles: Vec<[usize; 3]>,
    /// Boundary nodes ordered by angle.
    pub boundary: Vec<usize>,
    /// Ring layout when the mesh was built by [`TriMesh::rings`]; empty for imported meshes.
    pub rings: Vec<Ring>,
}

impl TriMesh {
    /// Mesh with rings at `radii` (increasing, the last one = 2) carrying `counts`
    /// nodes each; every count equals or doubles the previous one. A centre node
    /// and a fan are added when the first radius is positive.
    pub fn rings(radii: &[f64], counts: &[usize]) -> Result<Self> {
        if radii.is_empty() || radii.len() != counts.len() {
            return Err(Error::shape("ring radii and counts differ in length"));
        }
        if (radii[radii.len() - 1] - DOMAIN_RADIUS).abs() > 1e-12 {
            return Err(Error::domain("outermost ring must have radius 2"));
        }
        for w in radii.windows(2) {
            if !(w[1] > w[0]) {
                return Err(Error::domain("ring radii must increase"));
            }
        }
        for (i, w) in counts.windows(2).enumerate() {
            if w[1] != w[0] && w[1] != 2 * w[0] {
                return Err(Error::domain(format!("ring {} count must equal or double the previous", i + 1)));
            }
        }
        if counts.iter().any(|c| *c < 3) || !(radii[0] >= 0.0) {
            return Err(Error::domain("rings need at least three nodes and nonnegative radii"));
        }
        let mut vertices = Vec::new();
        let mut triangles = Vec::new();
        let mut rings = Vec::new();
        let center = radii[0] > 0.0;
        if center {
            vertices.push([0.0, 0.0]);
        }
        for (r, n) in radii.iter().zip(counts) {
            let start = vertices.len();
            for k in 0..*n {
                let th = 2.0 * PI * k as f64 / *n as f64;
                vertices.push([r * th.cos(), r * th.sin()]);
            }
            rings.push(Ring { radius: *r, start, count: *n });
        }
        if center {
            let g = rings[0];
            for k in 0..g.count {
                triangles.push([0, g.start + k, g.start + (k + 1) % g.count]);
            }
        }
        for w in rings.windows(2) {
            let (inn, out) = (w[0], w[1]);
            let ii = |k: usize| inn.start + k % inn.count;
            let oo = |k: usize| out.start + k % out.count;
            if out.count == inn.count {
                for k in 0..inn.count {
                    let (a, b, c, d) = (ii(k), ii(k + 1), oo(k), oo(k + 1));
                    triangles.push([a, c, d]);
                    triangles.push([a, d, b]);
                }
            } else {
                for k in 0..inn.count {
                    let (a, b) = (ii(k), ii(k + 1));
                    let (c, d, e) = (oo(2 * k), oo(2 * k + 1), oo(2 * k + 2));
                    triangles.push([a, c, d]);
                    triangles.push([a, d, b]);
                    triangles.push([b, d, e]);
                }
            }
        }
        let last = rings[rings.len() - 1];
        let boundary = (last.start..last.start + last.count).collect();
        let mesh = TriMesh { vertices, triangles, boundary, rings };
        mesh.validate()?;
        Ok(mesh)
    }

    /// Uniformly refined disc: `level` sets the outer count 8·2^level and about
    /// as many rings as needed for unit aspect.
    pub fn uniform_disc(level: u32) -> Result<Self> {
        let n_out = 8usize << level;
        let h = 2.0 * PI * DOMAIN_RADIUS / n_out as f64;
        let m = (DOMAIN_RADIUS / h).ceil() as usize;
        let radii: Vec<f64> = (1..=m).map(|i| DOMAIN_RADIUS * i as f64 / m as f64).collect();
        let counts = counts_for(&radii, n_out, 6, 1.0);
        TriMesh::rings(&radii, &counts)
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    /// Signed area of a triangle.
    pub fn area(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangles[t];
        let (p, q, r) = (self.vertices[a], self.vertices[b], self.vertices[c]);
        0.5 * ((q[0] - p[0]) * (r[1] - p[1]) - (q[1] - p[1]) * (r[0] - p[0]))
    }

    pub fn centroid(&self, t: usize) -> [f64; 2] {
        let [a, b, c] = self.triangles[t];
        let (p, q, r) = (self.vertices[a], self.vertices[b], self.vertices[c]);
        [(p[0] + q[0] + r[0]) / 3.0, (p[1] + q[1] + r[1]) / 3.0]
    }

    /// Longest boundary edge.
    pub fn h_boundary(&self) -> f64 {
        let n = self.boundary.len();
        (0..n)
            .map(|i| {
                let p = self.vertices[self.boundary[i]];
                let q = self.vertices[self.boundary[(i + 1) % n]];
                (p[0] - q[0]).hypot(p[1] - q[1])
            })
            .fold(0.0, f64::max)
    }

    /// Checks index ranges, orientation and edge conformity.
    pub fn validate(&self) -> Result<()> {
        let nv = self.vertices.len();
        for (t, tri) in self.triangles.iter().enumerate() {
            if tri.iter().any(|v| *v >= nv) {
                return Err(Error::shape(format!("triangle {t} references a missing vertex")));
            }
            if !(self.area(t) > 0.0) {
                return Err(Error::domain(format!("triangle {t} is not positively oriented")));
            }
        }
        let mut edges: Vec<(usize, usize, i32)> = Vec::with_capacity(3 * self.triangles.len());
        for tri in &self.triangles {
            for k in 0..3 {
                let (a, b) = (tri[k], tri[(k + 1) % 3]);
                edges.push((a.min(b), a.max(b), if a < b { 1 } else { -1 }));
            }
        }
        edges.sort_unstable();
        let mut on_boundary = vec![false; nv];
        let mut i = 0;
        while i < edges.len() {
            let mut j = i;
            let mut s = 0;
            while j < edges.len() && edges[j].0 == edges[i].0 && edges[j].1 == edges[i].1 {
                s += edges[j].2;
                j += 1;
            }
            match j - i {
                1 => {
                    on_boundary[edges[i].0] = true;
                    on_boundary[edges[i].1] = true;
                }
                2 if s == 0 => {}
                _ => return Err(Error::domain("mesh is not conforming")),
            }
            i = j;
        }
        let mut listed = vec![false; nv];
        for b in &self.boundary {
            listed[*b] = true;
        }
        if on_boundary != listed {
            return Err(Error::domain("boundary list does not match the boundary edges"));
        }
        Ok(())
    }
}

/// Node counts for rings: start from `n_out` at the outside and halve inward
/// while the tangential spacing after halving stays below `aspect` times the
/// boundary spacing, never below `n_min`.
pub fn counts_for(radii: &[f64], n_out: usize, n_min: usize, aspect: f64) -> Vec<usize> {
    let m = radii.len();
    let mut counts = vec![n_out; m];
    let h_out = 2.0 * PI * DOMAIN_RADIUS / n_out as f64;
    for j in (0..m.saturating_sub(1)).rev() {
        let mut n = counts[j + 1];
        if n % 2 == 0 && n / 2 >= n_min && 2.0 * PI * radii[j] / (n / 2) as f64 <= aspect * h_out {
            n /= 2;
        }
        counts[j] = n;
    }
    counts
}

/// Radii with spacing growing geometrically (factor `1/ratio` per ring) away
/// from `focus`, capped at `h_max`, on `[focus + h_min, 2]`; every entry of
/// `anchors` is inserted exactly.
pub fn graded_radii(focus: f64, h_min: f64, ratio: f64, h_max: f64, anchors: &[f64]) -> Result<Vec<f64>> {
    if !(h_min > 0.0 && ratio > 0.0 && ratio < 1.0 && h_max >= h_min && focus >= 0.0 && focus < DOMAIN_RADIUS) {
        return Err(Error::domain("invalid grading parameters"));
    }
    let mut out = vec![focus + h_min];
    let mut h = h_min;
    loop {
        h = (h / ratio).min(h_max);
        let next = out[out.len() - 1] + h;
        if next >= DOMAIN_RADIUS - 0.5 * h {
            break;
        }
        out.push(next);
    }
    out.push(DOMAIN_RADIUS);
    insert_anchors(&mut out, anchors);
    Ok(out)
}

/// Inserts radii, dropping neighbours that would come closer than a third of
/// the local spacing.
pub fn insert_anchors(radii: &mut Vec<f64>, anchors: &[f64]) {
    for &a in anchors {
        if radii.iter().any(|r| (r - a).abs() <= 1e-14 * a.max(1e-300)) {
            continue;
        }
        let pos = radii.partition_point(|r| *r < a);
        radii.insert(pos, a);
        let spacing = |v: &Vec<f64>, i: usize| {
            let lo = if i > 0 { v[i] - v[i - 1] } else { v[i] };
            let hi = if i + 1 < v.len() { v[i + 1] - v[i] } else { lo };
            (lo, hi)
        };
        let (lo, hi) = spacing(radii, pos);
        let prev_gap = if pos >= 2 { radii[pos - 1] - radii[pos - 2] } else { f64::INFINITY };
        let next_gap = if pos + 2 < radii.len() { radii[pos + 2] - radii[pos + 1] } else { f64::INFINITY };
        if pos + 1 < radii.len() - 1 && hi < next_gap / 3.0 && !anchors.contains(&radii[pos + 1]) {
            radii.remove(pos + 1);
        }
        if pos >= 1 && lo < prev_gap / 3.0 && !anchors.contains(&radii[pos - 1]) {
            radii.remove(pos - 1);
        }
    }
}

/// Rings uniform in log(1/s): `per_unit` rings per unit of log between `s_min` and `s_max`.
pub fn log_radii(s_min: f64, s_max: f64, per_unit: f64) -> Vec<f64> {
    let (a, b) = (s_min.ln(), s_max.ln());
    let n = ((b - a) * per_unit).ceil().max(1.0) as usize;
    (0..=n).map(|i| (a + (b - a) * i as f64 / n as f64).exp()).collect()
}

/// Mesh for an excision ladder around the circle |z| = `focus`: rings uniform
/// in log r from 0.05 up to the focus, then graded outward as in
/// [`graded_radii`] with the hole radii as exact rings.
pub fn focused_mesh(focus: f64, holes: &[f64], h_min: f64, ratio: f64, h_max: f64, n_out: usize) -> Result<TriMesh> {
    let mut rr = log_radii(0.05, focus, 20.0);
    rr.pop();
    rr.extend(graded_radii(focus, h_min, ratio, h_max, holes)?);
    TriMesh::rings(&rr, &counts_for(&rr, n_out, 16, 1.0))
}

/// Rings uniform in log r from `inner` to 2 with the hole radii inserted.
pub fn log_mesh(inner: f64, holes: &[f64], per_unit: f64, n_out: usize, n_min: usize) -> Result<TriMesh> {
    if !(inner > 0.0 && inner < DOMAIN_RADIUS) {
        return Err(Error::domain("inner radius must lie in (0, 2)"));
    }
    let mut rr = log_radii(inner, DOMAIN_RADIUS, per_unit);
    insert_anchors(&mut rr, holes);
    TriMesh::rings(&rr, &counts_for(&rr, n_out, n_min, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_disc_is_valid() {
        let m = TriMesh::uniform_disc(3).unwrap();
        m.validate().unwrap();
        let area: f64 = (0..m.triangles.len()).map(|t| m.area(t)).sum();
        // inscribed polygon area
        let n = m.boundary.len() as f64;
        let poly = 0.5 * n * 4.0 * (2.0 * PI / n).sin();
        assert!((area - poly).abs() < 1e-10);
    }

    #[test]
    fn doubling_rings() {
        let m = TriMesh::rings(&[0.5, 1.0, 2.0], &[8, 16, 16]).unwrap();
        assert_eq!(m.triangles.len(), 8 + 24 + 32);
    }

    #[test]
    fn rejects_bad_counts() {
        assert!(TriMesh::rings(&[1.0, 2.0], &[8, 12]).is_err());
        assert!(TriMesh::rings(&[1.0, 1.5], &[8, 8]).is_err());
    }
}
