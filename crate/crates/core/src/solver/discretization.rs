//! Weighted least-squares quadratic reconstruction on 2-ring stencils, and the pointwise
//! mean curvature operator built from it.

use nalgebra::{SMatrix, SVector};

use crate::domain::{Mesh, ScalarField};
use crate::error::{Error, Result};
use crate::geometry;

/// `[∂₁u, ∂₂u, ∂₁₁u, ∂₁₂u, ∂₂₂u]`
pub type Jet = [f64; 5];

const MIN_USABLE: usize = 6;

/// Reconstruction weights: `jet(u) = Σ_j coef[j] (u[nbrs[j]] − u[center])`.
#[derive(Debug, Clone)]
pub struct Stencil {
    pub nbrs: Vec<usize>,
    pub coef: Vec<Jet>,
}

/// Metric data frozen at a vertex.
#[derive(Debug, Clone, Copy)]
struct Geo {
    sigma: [[f64; 2]; 2],
    sinv: [[f64; 2]; 2],
    /// `gamma[k][i][j] = Γ^k_ij`
    gamma: [[[f64; 2]; 2]; 2],
}

/// Mesh-bound reconstruction operators and per-vertex metric caches.
#[derive(Debug, Clone)]
pub struct Discretization<'m> {
    mesh: &'m Mesh,
    stencils: Vec<Stencil>,
    geo: Vec<Geo>,
}

fn build_stencil(mesh: &Mesh, v: usize) -> Result<Stencil> {
    let x = mesh.vertex(v);
    let nbrs = mesh.two_ring(v);
    let offsets: Vec<[f64; 2]> = nbrs
        .iter()
        .map(|&w| {
            let p = mesh.vertex(w);
            [p[0] - x[0], p[1] - x[1]]
        })
        .collect();
    let usable = offsets.iter().filter(|d| d[0] != 0.0 || d[1] != 0.0).count();
    if usable < MIN_USABLE {
        return Err(Error::DegenerateStencil { vertex: v, usable });
    }
    let scale = offsets.iter().map(|d| d[0].hypot(d[1])).sum::<f64>() / offsets.len() as f64;
    let rows: Vec<SVector<f64, 5>> = offsets
        .iter()
        .map(|d| {
            let (a, b) = (d[0] / scale, d[1] / scale);
            SVector::<f64, 5>::new(a, b, 0.5 * a * a, a * b, 0.5 * b * b)
        })
        .collect();
    let weights: Vec<f64> = offsets
        .iter()
        .map(|d| scale * scale / (d[0] * d[0] + d[1] * d[1]))
        .collect();
    let mut normal = SMatrix::<f64, 5, 5>::zeros();
    for (r, w) in rows.iter().zip(&weights) {
        normal += *w * r * r.transpose();
    }
    let eig = normal.symmetric_eigenvalues();
    let (lo, hi) = (eig.min(), eig.max());
    if !(lo > 1e-10 * hi) {
        return Err(Error::DegenerateStencil { vertex: v, usable });
    }
    let inv = normal
        .try_inverse()
        .ok_or(Error::DegenerateStencil { vertex: v, usable })?;
    let unscale = [scale, scale, scale * scale, scale * scale, scale * scale];
    let coef = rows
        .iter()
        .zip(&weights)
        .map(|(r, w)| {
            let c = inv * r * *w;
            std::array::from_fn(|k| c[k] / unscale[k])
        })
        .collect();
    Ok(Stencil { nbrs, coef })
}

impl<'m> Discretization<'m> {
    pub fn new(mesh: &'m Mesh) -> Result<Self> {
        let model = mesh.model();
        let mut stencils = Vec::with_capacity(mesh.num_vertices());
        let mut geo = Vec::with_capacity(mesh.num_vertices());
        for v in 0..mesh.num_vertices() {
            stencils.push(build_stencil(mesh, v)?);
            let x = mesh.vertex(v);
            let m = geometry::metric_at(model, &x)?;
            let g = geometry::christoffels_at(model, &x)?;
            geo.push(Geo {
                sigma: std::array::from_fn(|i| std::array::from_fn(|j| m.sigma[(i, j)])),
                sinv: std::array::from_fn(|i| std::array::from_fn(|j| m.sigma_inv[(i, j)])),
                gamma: std::array::from_fn(|k| {
                    std::array::from_fn(|i| std::array::from_fn(|j| g.get(k, i, j)))
                }),
            });
        }
        Ok(Discretization {
            mesh,
            stencils,
            geo,
        })
    }

    pub fn mesh(&self) -> &'m Mesh {
        self.mesh
    }

    pub fn stencil(&self, v: usize) -> &Stencil {
        &self.stencils[v]
    }

    /// Reconstructed first and second chart derivatives of `u` at `v`.
    pub fn jet(&self, v: usize, u: &[f64]) -> Jet {
        let st = &self.stencils[v];
        let mut out = [0.0; 5];
        for (c, &w) in st.coef.iter().zip(&st.nbrs) {
            let du = u[w] - u[v];
            for k in 0..5 {
                out[k] += c[k] * du;
            }
        }
        out
    }

    /// Model norm `‖∇u‖` at `v`.
    pub fn gradient_norm(&self, v: usize, u: &[f64]) -> f64 {
        let j = self.jet(v, u);
        let s = &self.geo[v].sinv;
        (s[0][0] * j[0] * j[0] + 2.0 * s[0][1] * j[0] * j[1] + s[1][1] * j[1] * j[1]).sqrt()
    }

    /// `ℳu` at `v` from a jet.
    pub fn mc_from_jet(&self, v: usize, jet: &Jet) -> f64 {
        self.mc_and_derivative(v, jet).0
    }

    /// `ℳu` at `v`, using only the stencil values.
    pub fn mc_at(&self, v: usize, u: &[f64]) -> f64 {
        self.mc_from_jet(v, &self.jet(v, u))
    }

    /// `ℳ` and its partial derivatives with respect to the five jet entries.
    pub fn mc_and_derivative(&self, v: usize, jet: &Jet) -> (f64, Jet) {
        let g = &self.geo[v];
        let si = &g.sinv;
        let p = [jet[0], jet[1]];
        let hs_raw = [[jet[2], jet[3]], [jet[3], jet[4]]];
        // covariant Hessian ∂_ij u − Γ^k_ij ∂_k u
        let mut hs = hs_raw;
        for (i, row) in hs.iter_mut().enumerate() {
            for (j, e) in row.iter_mut().enumerate() {
                *e -= g.gamma[0][i][j] * p[0] + g.gamma[1][i][j] * p[1];
            }
        }
        let up = [si[0][0] * p[0] + si[0][1] * p[1], si[1][0] * p[0] + si[1][1] * p[1]];
        let grad2 = up[0] * p[0] + up[1] * p[1];
        let w2 = 1.0 + grad2;
        let w = w2.sqrt();
        let a: [[f64; 2]; 2] =
            std::array::from_fn(|i| std::array::from_fn(|j| si[i][j] - up[i] * up[j] / w2));
        let mut t = 0.0;
        for i in 0..2 {
            for j in 0..2 {
                t += a[i][j] * hs[i][j];
            }
        }
        let m = t / w;

        // ∂T/∂p_k = −2(Σ Hs u)_k / W² + 2 u_k (uᵀ Hs u) / W⁴ − Σ_ij A_ij Γ^k_ij
        let hu = [
            hs[0][0] * up[0] + hs[0][1] * up[1],
            hs[1][0] * up[0] + hs[1][1] * up[1],
        ];
        let uhu = up[0] * hu[0] + up[1] * hu[1];
        let shu = [si[0][0] * hu[0] + si[0][1] * hu[1], si[1][0] * hu[0] + si[1][1] * hu[1]];
        let mut dm = [0.0; 5];
        for k in 0..2 {
            let mut ag = 0.0;
            for i in 0..2 {
                for j in 0..2 {
                    ag += a[i][j] * g.gamma[k][i][j];
                }
            }
            let dt = -2.0 * shu[k] / w2 + 2.0 * up[k] * uhu / (w2 * w2) - ag;
            dm[k] = dt / w - t * up[k] / (w2 * w);
        }
        dm[2] = a[0][0] / w;
        dm[3] = 2.0 * a[0][1] / w;
        dm[4] = a[1][1] / w;
        (m, dm)
    }

    /// Chart metric `σ_ij` at `v`.
    pub fn metric(&self, v: usize) -> [[f64; 2]; 2] {
        self.geo[v].sigma
    }
}

/// `ℳu` at every vertex; boundary entries are zero.
pub fn mc_operator(mesh: &Mesh, u: &ScalarField) -> Result<ScalarField> {
    check_len(mesh, u)?;
    let disc = Discretization::new(mesh)?;
    let mut out = vec![0.0; mesh.num_vertices()];
    for &v in mesh.interior() {
        out[v] = disc.mc_at(v, u.values());
    }
    ScalarField::new(mesh, out)
}

/// `𝔔u = ℳu − nH(x, u)` at every vertex; boundary entries are zero.
pub fn q_operator(mesh: &Mesh, h: &super::PrescribedH, u: &ScalarField) -> Result<ScalarField> {
    let n = mesh.model().dim() as f64;
    let mut out = mc_operator(mesh, u)?.into_values();
    for &v in mesh.interior() {
        out[v] -= n * h.eval(mesh.vertex(v), u[v]);
    }
    ScalarField::new(mesh, out)
}

fn check_len(mesh: &Mesh, u: &ScalarField) -> Result<()> {
    if u.len() != mesh.num_vertices() {
        return Err(Error::FieldLength {
            expected: mesh.num_vertices(),
            got: u.len(),
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{mesh_domain, DomainSpec};
    use crate::geometry::ManifoldModel;
    use crate::solver::PrescribedH;

    fn disc_mesh(model: ManifoldModel, r: f64, h: f64) -> Mesh {
        mesh_domain(&DomainSpec::disc(model, [0.0, 0.0], r).unwrap(), h).unwrap()
    }

    #[test]
    fn quadratics_reconstructed_exactly() {
        let mesh = disc_mesh(ManifoldModel::euclidean(2).unwrap(), 1.0, 0.1);
        let disc = Discretization::new(&mesh).unwrap();
        let q = |x: [f64; 2]| 0.3 + 1.5 * x[0] - 0.7 * x[1] + 0.9 * x[0] * x[0] - 0.4 * x[0] * x[1] + 2.0 * x[1] * x[1];
        let u: Vec<f64> = mesh.vertices().iter().map(|&x| q(x)).collect();
        for v in 0..mesh.num_vertices() {
            let x = mesh.vertex(v);
            let j = disc.jet(v, &u);
            let exact = [
                1.5 + 1.8 * x[0] - 0.4 * x[1],
                -0.7 - 0.4 * x[0] + 4.0 * x[1],
                1.8,
                -0.4,
                4.0,
            ];
            for k in 0..5 {
                assert!((j[k] - exact[k]).abs() < 1e-9, "vertex {v} entry {k}: {} vs {}", j[k], exact[k]);
            }
        }
    }

    #[test]
    fn affine_is_minimal() {
        let mesh = disc_mesh(ManifoldModel::euclidean(2).unwrap(), 1.0, 0.1);
        let u = ScalarField::from_fn(&mesh, |x| 2.0 * x[0] - 3.0 * x[1] + 1.0).unwrap();
        let m = mc_operator(&mesh, &u).unwrap();
        assert!(m.values().iter().all(|v| v.abs() < 1e-9));
    }

    #[test]
    fn cap_has_constant_mean_curvature() {
        let r = 2.5f64;
        for h in [0.1, 0.05] {
            let mesh = disc_mesh(ManifoldModel::euclidean(2).unwrap(), 1.0, h);
            let u = ScalarField::from_fn(&mesh, |x| -(r * r - x[0] * x[0] - x[1] * x[1]).sqrt())
                .unwrap();
            let m = mc_operator(&mesh, &u).unwrap();
            for &v in mesh.interior() {
                assert!((m[v] - 2.0 / r).abs() < 0.5 * h, "{} at h = {h}", m[v]);
            }
            let q = q_operator(&mesh, &PrescribedH::constant(0.4), &u).unwrap();
            for &v in mesh.interior() {
                assert!(q[v].abs() < 0.5 * h);
            }
        }
    }

    #[test]
    fn constants_are_minimal_in_hyperbolic_chart() {
        let mesh = disc_mesh(ManifoldModel::hyperbolic(-1.0, 2).unwrap(), 0.5, 0.04);
        let u = ScalarField::from_fn(&mesh, |_| 3.0).unwrap();
        assert!(mc_operator(&mesh, &u).unwrap().values().iter().all(|v| v.abs() < 1e-12));
        let q = q_operator(&mesh, &PrescribedH::constant(0.4), &ScalarField::from_fn(&mesh, |_| 0.0).unwrap()).unwrap();
        for &v in mesh.interior() {
            assert!((q[v] + 0.8).abs() < 1e-15);
        }
    }

    #[test]
    fn analytic_derivative_matches_differences() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for model in [
            ManifoldModel::euclidean(2).unwrap(),
            ManifoldModel::hyperbolic(-1.0, 2).unwrap(),
            ManifoldModel::sphere(1.0, 2).unwrap(),
        ] {
            let mesh = disc_mesh(model, 0.5, 0.05);
            let disc = Discretization::new(&mesh).unwrap();
            for _ in 0..20 {
                let v = mesh.interior()[rng.gen_range(0..mesh.interior().len())];
                let jet: Jet = std::array::from_fn(|_| rng.gen_range(-2.0..2.0));
                let (_, dm) = disc.mc_and_derivative(v, &jet);
                for k in 0..5 {
                    let e = 1e-6;
                    let (mut jp, mut jm) = (jet, jet);
                    jp[k] += e;
                    jm[k] -= e;
                    let fd = (disc.mc_from_jet(v, &jp) - disc.mc_from_jet(v, &jm)) / (2.0 * e);
                    assert!((fd - dm[k]).abs() < 1e-6 * (1.0 + fd.abs()), "{model:?} k={k}");
                }
            }
        }
    }
}
