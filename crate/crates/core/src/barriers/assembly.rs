//! Barrier fields on the mesh and the pointwise check of `𝔔 < 0`.

use serde::Serialize;

use crate::domain::{BoundaryDistanceField, Mesh, ScalarField};
use crate::error::{Error, Result};
use crate::solver::{Discretization, PrescribedH};

use super::profiles::{PhiProfile, PsiProfile};

/// A field defined on part of the mesh.
///
/// `defined` marks vertices carrying a value; `region` marks the vertices where the
/// supersolution inequality is claimed (a subset of `defined`).
#[derive(Debug, Clone, PartialEq)]
pub struct RegionField {
    pub values: Vec<f64>,
    pub defined: Vec<bool>,
    pub region: Vec<bool>,
}

impl RegionField {
    pub fn region_len(&self) -> usize {
        self.region.iter().filter(|&&r| r).count()
    }

    pub fn get(&self, v: usize) -> Option<f64> {
        self.defined[v].then(|| self.values[v])
    }
}

fn check_len(mesh: &Mesh, got: usize) -> Result<()> {
    if got != mesh.num_vertices() {
        return Err(Error::FieldLength {
            expected: mesh.num_vertices(),
            got,
        });
    }
    Ok(())
}

/// `v = max{k, sup_ring} + φ∘d` on `Ω_ε = B_a(y₀) ∩ Σ_τ ∩ {d > ε}`.
///
/// `φ` is continued past `a`, so `v` is also defined on valid vertices just outside
/// `B_a(y₀)`; this keeps stencils near `∂B_a` complete.
pub fn assemble_v(
    mesh: &Mesh,
    k: f64,
    sup_ring: f64,
    profile: &PhiProfile,
    d: &BoundaryDistanceField,
    rho: &ScalarField,
) -> Result<RegionField> {
    check_len(mesh, d.field.len())?;
    check_len(mesh, rho.len())?;
    let base = k.max(sup_ring);
    let nv = mesh.num_vertices();
    let mut values = vec![0.0; nv];
    let mut defined = vec![false; nv];
    let mut region = vec![false; nv];
    for v in 0..nv {
        let t = d.field[v];
        if d.valid[v] && t > profile.eps {
            values[v] = base + profile.eval_continued(t).0;
            defined[v] = true;
            region[v] = rho[v] < profile.a && !mesh.is_boundary(v);
        }
    }
    if !region.iter().any(|&r| r) {
        return Err(Error::EmptyRegion(format!(
            "no interior vertex with d > ε = {} inside B_a, a = {}",
            profile.eps, profile.a
        )));
    }
    Ok(RegionField {
        values,
        defined,
        region,
    })
}

/// `w = sup_outer + ψ∘ρ` on `Ω ∖ B_a(y₀)`.
pub fn assemble_w(mesh: &Mesh, sup_outer: f64, profile: &PsiProfile, rho: &ScalarField) -> Result<RegionField> {
    check_len(mesh, rho.len())?;
    let nv = mesh.num_vertices();
    let mut values = vec![0.0; nv];
    let mut defined = vec![false; nv];
    let mut region = vec![false; nv];
    for v in 0..nv {
        if rho[v] > profile.a {
            values[v] = sup_outer + profile.eval_continued(rho[v]).0;
            defined[v] = true;
            region[v] = !mesh.is_boundary(v);
        }
    }
    if !region.iter().any(|&r| r) {
        return Err(Error::EmptyRegion(format!(
            "no interior vertex outside B_a, a = {}",
            profile.a
        )));
    }
    Ok(RegionField {
        values,
        defined,
        region,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SupersolutionCheck {
    pub max_q: f64,
    pub argmax: usize,
    pub argmax_point: [f64; 2],
    /// region vertices where `𝔔` was evaluated
    pub evaluated: usize,
    /// region vertices skipped because their stencil leaves the defined set
    pub skipped: usize,
}

impl SupersolutionCheck {
    pub fn holds(&self) -> bool {
        self.max_q < 0.0
    }
}

/// Maximum of `𝔔 = ℳ − nH` over the region vertices whose whole stencil is defined.
pub fn verify_supersolution(disc: &Discretization<'_>, h: &PrescribedH, field: &RegionField) -> Result<SupersolutionCheck> {
    let mesh = disc.mesh();
    check_len(mesh, field.values.len())?;
    let n = mesh.model().dim() as f64;
    let mut best = (f64::NEG_INFINITY, usize::MAX);
    let (mut evaluated, mut skipped) = (0, 0);
    for v in 0..mesh.num_vertices() {
        if !field.region[v] {
            continue;
        }
        if !disc.stencil(v).nbrs.iter().all(|&w| field.defined[w]) {
            skipped += 1;
            continue;
        }
        evaluated += 1;
        let q = disc.mc_at(v, &field.values) - n * h.eval(mesh.vertex(v), field.values[v]);
        if q > best.0 {
            best = (q, v);
        }
    }
    if evaluated == 0 {
        return Err(Error::EmptyRegion(format!(
            "all {skipped} region vertices have stencils leaving the barrier's domain"
        )));
    }
    Ok(SupersolutionCheck {
        max_q: best.0,
        argmax: best.1,
        argmax_point: mesh.vertex(best.1),
        evaluated,
        skipped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{distance_to_boundary_field, distance_to_point_field, mesh_domain, BoundaryWindow, DomainSpec};
    use crate::geometry::ManifoldModel;
    use rand::{Rng, SeedableRng};

    fn annulus_mesh() -> (DomainSpec, Mesh) {
        let spec = DomainSpec::annulus(ManifoldModel::euclidean(2).unwrap(), 0.5, 1.0).unwrap();
        let mesh = mesh_domain(&spec, 0.05).unwrap();
        (spec, mesh)
    }

    #[test]
    fn w_composition_and_bounds() {
        let (_, mesh) = annulus_mesh();
        let y0 = [1.0, 0.0];
        let rho = distance_to_point_field(&mesh, y0).unwrap();
        let psi = PsiProfile::new(1.0, 0.1, 2.0).unwrap();
        let w = assemble_w(&mesh, 0.7, &psi, &rho).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let defined: Vec<usize> = (0..mesh.num_vertices()).filter(|&v| w.defined[v]).collect();
        for _ in 0..20 {
            let v = defined[rng.gen_range(0..defined.len())];
            let expect = 0.7 + psi.eval(rho[v]).unwrap().0;
            assert!((w.values[v] - expect).abs() < 1e-14);
            assert!(w.values[v] >= 0.7);
        }
        assert!(w.get(mesh.nearest_vertex(y0)).is_none());
    }

    #[test]
    fn v_plug_in() {
        let spec = DomainSpec::disc(ManifoldModel::euclidean(2).unwrap(), [0.0, 0.0], 1.0).unwrap();
        let mesh = mesh_domain(&spec, 0.05).unwrap();
        let y0 = [1.0, 0.0];
        let d = distance_to_boundary_field(&mesh, &spec, BoundaryWindow::around(0, 0.0, 0.5)).unwrap();
        let rho = distance_to_point_field(&mesh, y0).unwrap();
        let phi = PhiProfile::new(1.0, 0.2, 0.01).unwrap();
        let v = assemble_v(&mesh, 0.0, 1.0, &phi, &d, &rho).unwrap();
        for i in 0..mesh.num_vertices() {
            if let Some(val) = v.get(i) {
                let t = d.field[i];
                let (p, _, _) = phi.eval_continued(t);
                assert!((val - (1.0 + p)).abs() < 1e-14);
            }
        }
        // direct substitution at d = 0.05
        let expect = 1.0 + 2f64.sqrt() * (0.19f64.sqrt() - 0.04f64.sqrt());
        let phi2 = PhiProfile::new(1.0, 0.1, 0.01).unwrap();
        assert!((1.0 + phi2.eval(0.05).unwrap().0 - (1.0 + 2f64.sqrt() * (0.09f64.sqrt() - 0.04f64.sqrt()))).abs() < 1e-15);
        assert!(expect > 1.0);
    }

    #[test]
    fn annulus_w_is_supersolution_and_negation_is_not() {
        let (_, mesh) = annulus_mesh();
        let disc = Discretization::new(&mesh).unwrap();
        let rho = distance_to_point_field(&mesh, [1.0, 0.0]).unwrap();
        let psi = PsiProfile::new(1.0, 0.1, 2.0).unwrap();
        let w = assemble_w(&mesh, 0.0, &psi, &rho).unwrap();
        let h = PrescribedH::constant(0.0);
        let check = verify_supersolution(&disc, &h, &w).unwrap();
        assert!(check.holds(), "{check:?}");
        let neg = RegionField {
            values: w.values.iter().map(|x| -x).collect(),
            ..w.clone()
        };
        assert!(verify_supersolution(&disc, &h, &neg).unwrap().max_q > 0.0);
    }
}
