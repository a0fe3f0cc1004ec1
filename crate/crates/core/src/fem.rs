//! P1 finite elements for ∇·σ∇u = 0 on B(2): Dirichlet solves, DN forms and
//! matrices, the excision ladder for degenerate cores, conjugate fields,
//! current lines and the σ-Hilbert transform.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;
use num_complex::Complex64;
use num_traits::Float;

use crate::coeffs::beltrami_from_sigma;
use crate::conductivity::{ConductivityField, Degeneracy, DOMAIN_RADIUS};
use crate::error::{Error, Result};
use crate::mat2::Sym2;
use crate::mesh::TriMesh;
use crate::quad::neville_at_zero;
use crate::sparse::{rcm, Envelope};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum QuadratureRule {
    /// Centroid.
    #[default]
    OnePoint,
    /// Edge midpoints (exact for quadratic σ).
    ThreePoint,
    /// Midpoint of the edge closest to the radial direction. For strongly
    /// anisotropic radial fields on ring meshes this keeps the element frame
    /// aligned with the radial edge, so purely angular data has no radial flux.
    RadialEdge,
}

/// h(θ) = Σ aₙ cos nθ + bₙ sin nθ on |z| = 2.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct DirichletData {
    pub terms: Vec<(u32, f64, f64)>,
}

impl DirichletData {
    pub fn cos(n: u32) -> Self {
        DirichletData { terms: vec![(n, 1.0, 0.0)] }
    }

    pub fn sin(n: u32) -> Self {
        DirichletData { terms: vec![(n, 0.0, 1.0)] }
    }

    pub fn constant(c: f64) -> Self {
        DirichletData { terms: vec![(0, c, 0.0)] }
    }

    pub fn eval(&self, theta: f64) -> f64 {
        self.terms.iter().map(|(n, a, b)| {
            let (s, c) = (*n as f64 * theta).sin_cos();
            a * c + b * s
        }).sum()
    }

    pub fn validate(&self) -> Result<()> {
        if self.terms.iter().any(|(_, a, b)| !a.is_finite() || !b.is_finite()) {
            return Err(Error::domain("non-finite Dirichlet coefficient"));
        }
        Ok(())
    }

    /// Coefficients on the basis {1, cos θ, sin θ, …, cos nθ, sin nθ}.
    pub fn basis_coefficients(&self, n_max: u32) -> Result<Vec<f64>> {
        let mut c = vec![0.0; 2 * n_max as usize + 1];
        for (n, a, b) in &self.terms {
            if *n > n_max {
                return Err(Error::domain(format!("mode {n} exceeds the DN matrix size")));
            }
            if *n == 0 {
                c[0] += a;
            } else {
                c[2 * *n as usize - 1] += a;
                c[2 * *n as usize] += b;
            }
        }
        Ok(c)
    }
}

/// Element-mean conductivities; `None` marks an excised (σ = 0) element.
pub fn element_sigmas<F: ConductivityField + ?Sized>(field: &F, mesh: &TriMesh, rule: QuadratureRule) -> Result<Vec<Option<Sym2>>> {
    let mut out = Vec::with_capacity(mesh.triangles.len());
    for (t, tri) in mesh.triangles.iter().enumerate() {
        out.push(element_sigma(field, mesh, t, tri, rule)?);
    }
    Ok(out)
}

fn element_sigma<F: ConductivityField + ?Sized>(field: &F, mesh: &TriMesh, t: usize, tri: &[usize; 3], rule: QuadratureRule) -> Result<Option<Sym2>> {
    let pts: Vec<[f64; 2]> = match rule {
        QuadratureRule::OnePoint => vec![mesh.centroid(t)],
        QuadratureRule::ThreePoint => (0..3)
            .map(|k| {
                let p = mesh.vertices[tri[k]];
                let q = mesh.vertices[tri[(k + 1) % 3]];
                [0.5 * (p[0] + q[0]), 0.5 * (p[1] + q[1])]
            })
            .collect(),
        QuadratureRule::RadialEdge => {
            let mut best = (f64::NEG_INFINITY, [0.0; 2]);
            for k in 0..3 {
                let p = mesh.vertices[tri[k]];
                let q = mesh.vertices[tri[(k + 1) % 3]];
                let m = [0.5 * (p[0] + q[0]), 0.5 * (p[1] + q[1])];
                let e = [q[0] - p[0], q[1] - p[1]];
                let align = (e[0] * m[0] + e[1] * m[1]).abs() / (e[0].hypot(e[1]) * m[0].hypot(m[1])).max(1e-300);
                if align > best.0 {
                    best = (align, m);
                }
            }
            vec![best.1]
        }
    };
    let mut acc = Sym2::ZERO;
    for p in &pts {
        let s = field.eval(Complex64::new(p[0], p[1])).map_err(|e| match e.root() {
            Error::Domain(m) => Error::degenerate(format!(
                "triangle {t}: {m}; excise the core with regularized_dn_form"
            )),
            _ => e.at("element conductivity"),
        })?;
        match s.mask {
            Degeneracy::None => acc = acc.add(&s.sigma),
            Degeneracy::Zero => return Ok(None),
            Degeneracy::Infinite | Degeneracy::Undefined => {
                return Err(Error::degenerate(format!(
                    "conductivity is degenerate inside triangle {t}; excise the core with regularized_dn_form"
                )))
            }
        }
    }
    Ok(Some(acc.scale(1.0 / pts.len() as f64)))
}

/// Gradients of the three barycentric basis functions and the area.
fn basis_gradients(mesh: &TriMesh, tri: &[usize; 3]) -> ([[f64; 2]; 3], f64) {
    let p = [mesh.vertices[tri[0]], mesh.vertices[tri[1]], mesh.vertices[tri[2]]];
    let area = 0.5 * ((p[1][0] - p[0][0]) * (p[2][1] - p[0][1]) - (p[1][1] - p[0][1]) * (p[2][0] - p[0][0]));
    let mut g = [[0.0; 2]; 3];
    for k in 0..3 {
        let a = p[(k + 1) % 3];
        let b = p[(k + 2) % 3];
        g[k] = [(a[1] - b[1]) / (2.0 * area), (b[0] - a[0]) / (2.0 * area)];
    }
    (g, area)
}

/// Ring meshes keep their natural (ring by ring) numbering, whose profile is
/// the ring size; imported meshes get RCM.
fn ordering(mesh: &TriMesh, adj: &[Vec<usize>]) -> Vec<usize> {
    if mesh.rings.is_empty() {
        rcm(adj.len(), adj)
    } else {
        (0..adj.len()).collect()
    }
}

/// Stiffness matrix on the free nodes, factored once and reused for many data.
pub struct FemSystem<'m> {
    pub mesh: &'m TriMesh,
    pub sigmas: Vec<Option<Sym2>>,
    /// Unknown index per node (interior nodes touching an active element).
    dof: Vec<Option<usize>>,
    is_boundary: Vec<bool>,
    k_ii: Envelope,
    /// Coupling rows: (unknown, boundary node, value).
    k_ib: Vec<(usize, usize, f64)>,
}

impl<'m> FemSystem<'m> {
    pub fn new(mesh: &'m TriMesh, sigmas: Vec<Option<Sym2>>) -> Result<Self> {
        if sigmas.len() != mesh.triangles.len() {
            return Err(Error::shape("one conductivity per triangle expected"));
        }
        let nv = mesh.n_vertices();
        let mut is_boundary = vec![false; nv];
        for b in &mesh.boundary {
            is_boundary[*b] = true;
        }
        let mut touched = vec![false; nv];
        for (tri, s) in mesh.triangles.iter().zip(&sigmas) {
            if s.is_some() {
                for v in tri {
                    touched[*v] = true;
                }
            }
        }
        let free: Vec<usize> = (0..nv).filter(|v| touched[*v] && !is_boundary[*v]).collect();
        let mut local = vec![usize::MAX; nv];
        for (i, v) in free.iter().enumerate() {
            local[*v] = i;
        }
        let mut adj: Vec<Vec<usize>> = vec![Vec::new(); free.len()];
        for (tri, s) in mesh.triangles.iter().zip(&sigmas) {
            if s.is_none() {
                continue;
            }
            for a in 0..3 {
                for b in 0..3 {
                    let (ia, ib) = (local[tri[a]], local[tri[b]]);
                    if a != b && ia != usize::MAX && ib != usize::MAX {
                        adj[ia].push(ib);
                    }
                }
            }
        }
        for l in adj.iter_mut() {
            l.sort_unstable();
            l.dedup();
        }
        let perm = ordering(mesh, &adj);
        let mut dof = vec![None; nv];
        for (new, old) in perm.iter().enumerate() {
            dof[free[*old]] = Some(new);
        }
        let mut inv = vec![0usize; free.len()];
        for (new, old) in perm.iter().enumerate() {
            inv[*old] = new;
        }
        let pattern: Vec<(usize, usize)> =
            adj.iter().enumerate().flat_map(|(i, l)| l.iter().map(move |j| (i, *j))).map(|(i, j)| (inv[i], inv[j])).collect();
        let mut k_ii = Envelope::from_pattern(free.len(), pattern.into_iter());
        let mut k_ib = Vec::new();
        for (tri, s) in mesh.triangles.iter().zip(&sigmas) {
            let Some(s) = s else { continue };
            let (g, area) = basis_gradients(mesh, tri);
            for a in 0..3 {
                let sa = s.apply(g[a]);
                for b in 0..3 {
                    let v = area * (sa[0] * g[b][0] + sa[1] * g[b][1]);
                    match (dof[tri[a]], dof[tri[b]]) {
                        (Some(i), Some(j)) => {
                            if i >= j {
                                k_ii.add(i, j, v);
                            }
                        }
                        (Some(i), None) if is_boundary[tri[b]] => k_ib.push((i, tri[b], v)),
                        _ => {}
                    }
                }
            }
        }
        k_ii.factor().map_err(|e| {
            Error::degenerate(format!("stiffness matrix is singular ({e}); degenerate cores need regularized_dn_form"))
        })?;
        Ok(FemSystem { mesh, sigmas, dof, is_boundary, k_ii, k_ib })
    }

    /// Solves with nodal boundary values `hb[k]` at `mesh.boundary[k]`.
    pub fn solve_nodal(&self, hb: &[f64]) -> Result<FemSolution> {
        let mesh = self.mesh;
        let nv = mesh.n_vertices();
        let mut u = vec![0.0; nv];
        for (k, b) in mesh.boundary.iter().enumerate() {
            u[*b] = hb[k];
        }
        let mut rhs = vec![0.0; self.k_ii.n()];
        for (i, b, v) in &self.k_ib {
            rhs[*i] -= v * u[*b];
        }
        let x = self.k_ii.solve(&rhs)?;
        for v in 0..nv {
            if let Some(i) = self.dof[v] {
                u[v] = x[i];
            }
        }
        let mut gradients = vec![[0.0; 2]; mesh.triangles.len()];
        let mut energy = 0.0;
        for (t, tri) in mesh.triangles.iter().enumerate() {
            let Some(s) = self.sigmas[t] else { continue };
            let (g, area) = basis_gradients(mesh, tri);
            let mut gu = [0.0; 2];
            for k in 0..3 {
                gu[0] += u[tri[k]] * g[k][0];
                gu[1] += u[tri[k]] * g[k][1];
            }
            gradients[t] = gu;
            energy += area * s.quad(gu);
        }
        Ok(FemSolution { u, gradients, energy, active: self.sigmas.iter().map(|s| s.is_some()).collect(), regularization: None })
    }

    pub fn solve(&self, h: &DirichletData) -> Result<FemSolution> {
        h.validate()?;
        let hb: Vec<f64> = self.mesh.boundary.iter().map(|b| {
            let p = self.mesh.vertices[*b];
            h.eval(p[1].atan2(p[0]))
        }).collect();
        self.solve_nodal(&hb)
    }

    pub fn is_boundary(&self, v: usize) -> bool {
        self.is_boundary[v]
    }
}

#[derive(Clone, Debug)]
pub struct FemSolution {
    pub u: Vec<f64>,
    /// Constant gradient per triangle (zero on excised elements).
    pub gradients: Vec<[f64; 2]>,
    /// Σ over active elements of ∫σ∇u·∇u.
    pub energy: f64,
    pub active: Vec<bool>,
    pub regularization: Option<f64>,
}

/// Galerkin solution of ∇·σ∇u = 0 with u = h on ∂B(2).
pub fn solve_dirichlet<F: ConductivityField + ?Sized>(field: &F, h: &DirichletData, mesh: &TriMesh, rule: QuadratureRule) -> Result<FemSolution> {
    let sys = FemSystem::new(mesh, element_sigmas(field, mesh, rule)?)?;
    sys.solve(h)
}

/// Q_σ[h], the energy of the Dirichlet solve.
pub fn dn_form<F: ConductivityField + ?Sized>(field: &F, h: &DirichletData, mesh: &TriMesh, rule: QuadratureRule) -> Result<f64> {
    Ok(solve_dirichlet(field, h, mesh, rule)?.energy)
}

/// Bilinear DN form on the basis {1, cos nθ, sin nθ}: entry (i, j) = ∫ bᵢ Λ bⱼ dS.
#[derive(Clone, Debug, PartialEq)]
pub struct DnMatrix {
    pub n_max: u32,
    pub data: Vec<f64>,
}

impl DnMatrix {
    pub fn dim(&self) -> usize {
        2 * self.n_max as usize + 1
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.dim() + j]
    }

    /// Q[h] = aᵀMa for h with coefficients a.
    pub fn quadratic_form(&self, h: &DirichletData) -> Result<f64> {
        let a = h.basis_coefficients(self.n_max)?;
        let d = self.dim();
        let mut q = 0.0;
        for i in 0..d {
            for j in 0..d {
                q += a[i] * self.get(i, j) * a[j];
            }
        }
        Ok(q)
    }

    pub fn basis_label(i: usize) -> String {
        if i == 0 {
            String::from("1")
        } else if i % 2 == 1 {
            format!("cos{}", (i + 1) / 2)
        } else {
            format!("sin{}", i / 2)
        }
    }
}

fn basis_fn(i: usize, theta: f64) -> f64 {
    if i == 0 {
        1.0
    } else {
        let n = ((i + 1) / 2) as f64;
        if i % 2 == 1 {
            (n * theta).cos()
        } else {
            (n * theta).sin()
        }
    }
}

/// DN matrix by polarization: M_ij = ½(Q[bᵢ + bⱼ] − Q[bᵢ] − Q[bⱼ]), one factorization.
pub fn dn_map_matrix<F: ConductivityField + ?Sized>(field: &F, mesh: &TriMesh, n_max: u32, rule: QuadratureRule) -> Result<DnMatrix> {
    let sys = FemSystem::new(mesh, element_sigmas(field, mesh, rule)?)?;
    dn_matrix_from_system(&sys, n_max)
}

pub fn dn_matrix_from_system(sys: &FemSystem, n_max: u32) -> Result<DnMatrix> {
    let d = 2 * n_max as usize + 1;
    let angles: Vec<f64> = sys.mesh.boundary.iter().map(|b| {
        let p = sys.mesh.vertices[*b];
        p[1].atan2(p[0])
    }).collect();
    let sols: Vec<Vec<f64>> = (0..d)
        .map(|i| {
            let hb: Vec<f64> = angles.iter().map(|t| basis_fn(i, *t)).collect();
            sys.solve_nodal(&hb).map(|s| s.u)
        })
        .collect::<Result<_>>()?;
    let energy = |u: &[f64]| -> f64 {
        let mut e = 0.0;
        for (tri, s) in sys.mesh.triangles.iter().zip(&sys.sigmas) {
            let Some(s) = s else { continue };
            let (g, area) = basis_gradients(sys.mesh, tri);
            let mut gu = [0.0; 2];
            for k in 0..3 {
                gu[0] += u[tri[k]] * g[k][0];
                gu[1] += u[tri[k]] * g[k][1];
            }
            e += area * s.quad(gu);
        }
        e
    };
    let q: Vec<f64> = sols.iter().map(|u| energy(u)).collect();
    let mut data = vec![0.0; d * d];
    for i in 0..d {
        data[i * d + i] = q[i];
        for j in 0..i {
            let sum: Vec<f64> = sols[i].iter().zip(&sols[j]).map(|(a, b)| a + b).collect();
            let v = 0.5 * (energy(&sum) - q[i] - q[j]);
            data[i * d + j] = v;
            data[j * d + i] = v;
        }
    }
    Ok(DnMatrix { n_max, data })
}

/// Boundary function ℋ_σh(θ) = ∫₀^θ Λ_σh ds (ds = 2dθ), in closed form per mode.
#[derive(Clone, Debug, PartialEq)]
pub struct HilbertTransform {
    /// Coefficients of Λ_σh on the basis {1, cos nθ, sin nθ}.
    pub flux: Vec<f64>,
}

impl HilbertTransform {
    pub fn eval(&self, theta: f64) -> f64 {
        let mut v = 2.0 * self.flux[0] * theta;
        for i in 1..self.flux.len() {
            let n = ((i + 1) / 2) as f64;
            let c = self.flux[i];
            if i % 2 == 1 {
                v += 2.0 * c * (n * theta).sin() / n;
            } else {
                v += 2.0 * c * (1.0 - (n * theta).cos()) / n;
            }
        }
        v
    }
}

/// The σ-Hilbert transform of h from a DN matrix (defined modulo constants, fixed at θ = 0).
pub fn hilbert_transform_sigma(dn: &DnMatrix, h: &DirichletData) -> Result<HilbertTransform> {
    let a = h.basis_coefficients(dn.n_max)?;
    let d = dn.dim();
    // Gram matrix on ∂B(2) is diagonal: 4π for 1, 2π for the trigonometric modes
    let flux = (0..d)
        .map(|i| {
            let m: f64 = (0..d).map(|j| dn.get(i, j) * a[j]).sum();
            m / if i == 0 { 4.0 * PI } else { 2.0 * PI }
        })
        .collect();
    Ok(HilbertTransform { flux })
}

/// How hole radii of the excision ladder are placed and which abscissa the
/// extrapolation to a vanishing hole uses.
#[derive(Clone, Debug, PartialEq)]
pub enum HoleModel {
    /// Hole of radius r; abscissa r² (fields equal to a constant near the hole).
    Dipole,
    /// Hole at physical radius 1 + r/2 (preimage radius r under the cloak map); abscissa r².
    Cloak,
    /// Hole of radius r; caller-supplied abscissae (e.g. ρ(r) − 1 for a hologram).
    Preimage { abscissae: Vec<f64> },
    /// Hole of radius r; abscissa 1/log(1/r).
    LogCapacity,
}

impl HoleModel {
    pub fn name(&self) -> &'static str {
        match self {
            HoleModel::Dipole => "dipole: Q_r = Q + c1 r^2 + ...",
            HoleModel::Cloak => "cloak preimage: Q_r = Q + c1 r^2 + ...",
            HoleModel::Preimage { .. } => "preimage radius: Q = Q + c1 d + c2 d^2 + ...",
            HoleModel::LogCapacity => "capacity: Q_r = Q - c/log(1/r) + ...",
        }
    }

    pub fn hole_radius(&self, r: f64) -> f64 {
        match self {
            HoleModel::Cloak => 1.0 + 0.5 * r,
            _ => r,
        }
    }

    fn abscissa(&self, k: usize, r: f64) -> f64 {
        match self {
            HoleModel::Dipole | HoleModel::Cloak => r * r,
            HoleModel::Preimage { abscissae } => abscissae[k],
            HoleModel::LogCapacity => 1.0 / (1.0 / r).ln(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct RegularizedDn {
    /// `(r, hole radius, Q_r)`.
    pub ladder: Vec<(f64, f64, f64)>,
    pub extrapolated: f64,
    /// Q_r nondecreasing as r decreases.
    pub monotone: bool,
    pub model: &'static str,
}

/// Q for σ_r (σ outside the hole, 0 inside) along a decreasing ladder, with
/// extrapolation to a vanishing hole. Holes should coincide with mesh rings.
pub fn regularized_dn_form<F: ConductivityField + ?Sized>(
    field: &F,
    h: &DirichletData,
    mesh: &TriMesh,
    r_ladder: &[f64],
    model: &HoleModel,
    rule: QuadratureRule,
) -> Result<RegularizedDn> {
    if r_ladder.is_empty() || r_ladder.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(Error::domain("r-ladder must be strictly decreasing"));
    }
    if let HoleModel::Preimage { abscissae } = model {
        if abscissae.len() != r_ladder.len() {
            return Err(Error::shape("one abscissa per ladder entry expected"));
        }
    }
    let smallest = model.hole_radius(r_ladder[r_ladder.len() - 1]);
    let rad = |t: usize| {
        let c = mesh.centroid(t);
        c[0].hypot(c[1])
    };
    // evaluate σ only where some rung keeps the element
    let mut base: Vec<Option<Sym2>> = Vec::with_capacity(mesh.triangles.len());
    for (t, tri) in mesh.triangles.iter().enumerate() {
        if rad(t) <= smallest {
            base.push(None);
        } else {
            base.push(element_sigma(field, mesh, t, tri, rule)?);
        }
    }
    let mut ladder = Vec::with_capacity(r_ladder.len());
    for &r in r_ladder {
        let hole = model.hole_radius(r);
        let sig: Vec<Option<Sym2>> = base.iter().enumerate().map(|(t, s)| if rad(t) <= hole { None } else { *s }).collect();
        let sys = FemSystem::new(mesh, sig)?;
        let q = sys.solve(h)?.energy;
        ladder.push((r, hole, q));
    }
    let xs: Vec<f64> = r_ladder.iter().enumerate().map(|(k, r)| model.abscissa(k, *r)).collect();
    let ys: Vec<f64> = ladder.iter().map(|p| p.2).collect();
    let extrapolated = neville_at_zero(&xs, &ys);
    let monotone = ys.windows(2).all(|w| w[1] >= w[0] * (1.0 - 1e-12));
    Ok(RegularizedDn { ladder, extrapolated, monotone, model: model.name() })
}

#[derive(Clone, Debug)]
pub struct ConjugateField {
    /// Nodal values of v, pinned to 0 at one node.
    pub v: Vec<f64>,
    /// ‖∇v_h − *σ∇u_h‖ / ‖*σ∇u_h‖ over active elements.
    pub curl_residual: f64,
    /// ‖∂̄f − μ∂f − ν·conj(∂f)‖ / ‖∂f‖ for f = u + iv, L² over active elements.
    pub beltrami_residual: f64,
}

/// Least-squares P1 field v with ∇v ≈ *σ∇u, * the rotation by π/2.
pub fn conjugate_field(mesh: &TriMesh, sol: &FemSolution, sigmas: &[Option<Sym2>]) -> Result<ConjugateField> {
    let nv = mesh.n_vertices();
    let mut touched = vec![false; nv];
    for (tri, s) in mesh.triangles.iter().zip(sigmas) {
        if s.is_some() {
            tri.iter().for_each(|v| touched[*v] = true);
        }
    }
    let nodes: Vec<usize> = (0..nv).filter(|v| touched[*v]).collect();
    if nodes.is_empty() {
        return Err(Error::domain("no active elements"));
    }
    let pin = nodes[0];
    let free: Vec<usize> = nodes[1..].to_vec();
    let mut local = vec![usize::MAX; nv];
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); free.len()];
    for (i, v) in free.iter().enumerate() {
        local[*v] = i;
    }
    for (tri, s) in mesh.triangles.iter().zip(sigmas) {
        if s.is_none() {
            continue;
        }
        for a in 0..3 {
            for b in 0..3 {
                let (i, j) = (local[tri[a]], local[tri[b]]);
                if a != b && i != usize::MAX && j != usize::MAX {
                    adj[i].push(j);
                }
            }
        }
    }
    for l in adj.iter_mut() {
        l.sort_unstable();
        l.dedup();
    }
    let perm = ordering(mesh, &adj);
    let mut inv = vec![0usize; free.len()];
    for (new, old) in perm.iter().enumerate() {
        inv[*old] = new;
    }
    let pattern: Vec<(usize, usize)> = adj.iter().enumerate().flat_map(|(i, l)| l.iter().map(move |j| (i, *j))).map(|(i, j)| (inv[i], inv[j])).collect();
    let mut k = Envelope::from_pattern(free.len(), pattern.into_iter());
    let mut rhs = vec![0.0; free.len()];
    let rot = |g: [f64; 2]| [-g[1], g[0]];
    for (t, tri) in mesh.triangles.iter().enumerate() {
        let Some(s) = sigmas[t] else { continue };
        let (g, area) = basis_gradients(mesh, tri);
        let flux = rot(s.apply(sol.gradients[t]));
        for a in 0..3 {
            let ia = local[tri[a]];
            if ia == usize::MAX {
                continue;
            }
            let ia = inv[ia];
            rhs[ia] += area * (g[a][0] * flux[0] + g[a][1] * flux[1]);
            for b in 0..3 {
                let ib = local[tri[b]];
                if ib == usize::MAX {
                    continue;
                }
                let ib = inv[ib];
                if ia >= ib {
                    k.add(ia, ib, area * (g[a][0] * g[b][0] + g[a][1] * g[b][1]));
                }
            }
        }
    }
    k.factor()?;
    let x = k.solve(&rhs)?;
    let mut v = vec![0.0; nv];
    for (i, node) in free.iter().enumerate() {
        v[*node] = x[inv[i]];
    }
    v[pin] = 0.0;
    let (mut num, mut den, mut bnum, mut bden) = (0.0, 0.0, 0.0, 0.0);
    for (t, tri) in mesh.triangles.iter().enumerate() {
        let Some(s) = sigmas[t] else { continue };
        let (g, area) = basis_gradients(mesh, tri);
        let mut gv = [0.0; 2];
        for kk in 0..3 {
            gv[0] += v[tri[kk]] * g[kk][0];
            gv[1] += v[tri[kk]] * g[kk][1];
        }
        let gu = sol.gradients[t];
        let flux = rot(s.apply(gu));
        num += area * ((gv[0] - flux[0]).powi(2) + (gv[1] - flux[1]).powi(2));
        den += area * (flux[0] * flux[0] + flux[1] * flux[1]);
        let fx = Complex64::new(gu[0], gv[0]);
        let fy = Complex64::new(gu[1], gv[1]);
        let i = Complex64::new(0.0, 1.0);
        let dbar = (fx + i * fy) * 0.5;
        let d = (fx - i * fy) * 0.5;
        let (mu, nu) = beltrami_from_sigma(&s)?;
        let r = dbar - mu * d - nu * d.conj();
        bnum += area * r.norm_sqr();
        bden += area * d.norm_sqr();
    }
    let ratio = |a: f64, b: f64| if b > 0.0 { (a / b).sqrt() } else { 0.0 };
    Ok(ConjugateField { v, curl_residual: ratio(num, den), beltrami_residual: ratio(bnum, bden) })
}

/// Bucket grid over [−2, 2]² for point location.
pub struct Locator<'m> {
    mesh: &'m TriMesh,
    n: usize,
    buckets: Vec<Vec<usize>>,
}

impl<'m> Locator<'m> {
    pub fn new(mesh: &'m TriMesh) -> Self {
        let n = ((mesh.triangles.len() as f64).sqrt() as usize).clamp(8, 1024);
        let mut buckets = vec![Vec::new(); n * n];
        let cell = |x: f64| (((x + DOMAIN_RADIUS) / (2.0 * DOMAIN_RADIUS) * n as f64).floor().max(0.0) as usize).min(n - 1);
        for (t, tri) in mesh.triangles.iter().enumerate() {
            let ps = tri.map(|v| mesh.vertices[v]);
            let (x0, x1) = (ps.iter().map(|p| p[0]).fold(f64::INFINITY, f64::min), ps.iter().map(|p| p[0]).fold(f64::NEG_INFINITY, f64::max));
            let (y0, y1) = (ps.iter().map(|p| p[1]).fold(f64::INFINITY, f64::min), ps.iter().map(|p| p[1]).fold(f64::NEG_INFINITY, f64::max));
            for i in cell(y0)..=cell(y1) {
                for j in cell(x0)..=cell(x1) {
                    buckets[i * n + j].push(t);
                }
            }
        }
        Locator { mesh, n, buckets }
    }

    /// Triangle containing p and its barycentric coordinates.
    pub fn locate(&self, p: [f64; 2]) -> Option<(usize, [f64; 3])> {
        let n = self.n;
        let cell = |x: f64| ((x + DOMAIN_RADIUS) / (2.0 * DOMAIN_RADIUS) * n as f64).floor();
        let (cx, cy) = (cell(p[0]), cell(p[1]));
        if cx < 0.0 || cy < 0.0 || cx >= n as f64 || cy >= n as f64 {
            return None;
        }
        for &t in &self.buckets[cy as usize * n + cx as usize] {
            let [a, b, c] = self.mesh.triangles[t];
            let (pa, pb, pc) = (self.mesh.vertices[a], self.mesh.vertices[b], self.mesh.vertices[c]);
            let det = (pb[0] - pa[0]) * (pc[1] - pa[1]) - (pb[1] - pa[1]) * (pc[0] - pa[0]);
            let l1 = ((p[0] - pa[0]) * (pc[1] - pa[1]) - (p[1] - pa[1]) * (pc[0] - pa[0])) / det;
            let l2 = ((pb[0] - pa[0]) * (p[1] - pa[1]) - (pb[1] - pa[1]) * (p[0] - pa[0])) / det;
            let l0 = 1.0 - l1 - l2;
            let eps = -1e-12;
            if l0 >= eps && l1 >= eps && l2 >= eps {
                return Some((t, [l0, l1, l2]));
            }
        }
        None
    }
}

#[derive(Clone, Copy, Debug)]
pub struct StreamlineOptions {
    pub step: f64,
    pub max_steps: usize,
}

impl Default for StreamlineOptions {
    fn default() -> Self {
        StreamlineOptions { step: 0.01, max_steps: 2000 }
    }
}

/// Integral curves of the current −σ∇u (RK4 on the nodally averaged field),
/// traced both ways from each seed; each line ends on ∂B(2), at an excised
/// element, or after `max_steps`.
pub fn current_lines(mesh: &TriMesh, sol: &FemSolution, sigmas: &[Option<Sym2>], seeds: &[[f64; 2]], opts: &StreamlineOptions) -> Result<Vec<Vec<[f64; 2]>>> {
    for s in seeds {
        if s[0].hypot(s[1]) >= DOMAIN_RADIUS {
            return Err(Error::domain("streamline seed outside B(2)"));
        }
    }
    let nv = mesh.n_vertices();
    let mut field = vec![[0.0; 2]; nv];
    let mut weight = vec![0.0; nv];
    for (t, tri) in mesh.triangles.iter().enumerate() {
        let Some(s) = sigmas[t] else { continue };
        let j = s.apply(sol.gradients[t]);
        let a = mesh.area(t);
        for v in tri {
            field[*v][0] -= a * j[0];
            field[*v][1] -= a * j[1];
            weight[*v] += a;
        }
    }
    for v in 0..nv {
        if weight[v] > 0.0 {
            field[v][0] /= weight[v];
            field[v][1] /= weight[v];
        }
    }
    let loc = Locator::new(mesh);
    let scale = field.iter().map(|f| f[0].hypot(f[1])).fold(0.0, f64::max);
    let at = |p: [f64; 2]| -> Option<[f64; 2]> {
        let (t, l) = loc.locate(p)?;
        sigmas[t]?;
        let tri = mesh.triangles[t];
        let mut f = [0.0; 2];
        for k in 0..3 {
            f[0] += l[k] * field[tri[k]][0];
            f[1] += l[k] * field[tri[k]][1];
        }
        Some(f)
    };
    let dir = |p: [f64; 2], sgn: f64| -> Option<[f64; 2]> {
        let f = at(p)?;
        let m = f[0].hypot(f[1]);
        if m <= 1e-12 * scale.max(1e-300) {
            return None;
        }
        Some([sgn * f[0] / m, sgn * f[1] / m])
    };
    let mut lines = Vec::with_capacity(seeds.len());
    for seed in seeds {
        if dir(*seed, 1.0).is_none() {
            lines.push(Vec::new());
            continue;
        }
        let mut halves: [Vec<[f64; 2]>; 2] = [Vec::new(), Vec::new()];
        for (hi, sgn) in [(0usize, -1.0), (1usize, 1.0)] {
            let mut p = *seed;
            for _ in 0..opts.max_steps {
                let h = opts.step;
                let Some(k1) = dir(p, sgn) else { break };
                let Some(k2) = dir([p[0] + 0.5 * h * k1[0], p[1] + 0.5 * h * k1[1]], sgn) else { break };
                let Some(k3) = dir([p[0] + 0.5 * h * k2[0], p[1] + 0.5 * h * k2[1]], sgn) else { break };
                let Some(k4) = dir([p[0] + h * k3[0], p[1] + h * k3[1]], sgn) else { break };
                let q = [
                    p[0] + h / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]),
                    p[1] + h / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]),
                ];
                halves[hi].push(q);
                if q[0].hypot(q[1]) >= DOMAIN_RADIUS {
                    break;
                }
                p = q;
            }
        }
        let [mut back, fwd] = halves;
        back.reverse();
        back.push(*seed);
        back.extend(fwd);
        lines.push(back);
    }
    Ok(lines)
}
