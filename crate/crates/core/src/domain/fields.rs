//! Per-vertex scalar fields and the two distance functions used by the barriers.

use crate::error::{Error, Result};
use crate::geometry::{self, ManifoldModel};

use super::{DomainSpec, Mesh};

/// One finite value per mesh vertex.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    values: Vec<f64>,
}

impl ScalarField {
    pub fn new(mesh: &Mesh, values: Vec<f64>) -> Result<Self> {
        if values.len() != mesh.num_vertices() {
            return Err(Error::FieldLength {
                expected: mesh.num_vertices(),
                got: values.len(),
            });
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "non-finite field value {} at vertex {i}",
                values[i]
            )));
        }
        Ok(ScalarField { values })
    }

    pub fn from_fn(mesh: &Mesh, f: impl Fn([f64; 2]) -> f64) -> Result<Self> {
        ScalarField::new(mesh, mesh.vertices().iter().map(|&x| f(x)).collect())
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

impl std::ops::Index<usize> for ScalarField {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.values[i]
    }
}

/// `ρ(x) = dist(x, y₀)` at every vertex.
pub fn distance_to_point_field(mesh: &Mesh, y0: [f64; 2]) -> Result<ScalarField> {
    let model = mesh.model();
    let values = mesh
        .vertices()
        .iter()
        .map(|x| geometry::distance(model, x, &y0))
        .collect::<Result<Vec<_>>>()?;
    ScalarField::new(mesh, values)
}

/// An arc `[center − half_width, center + half_width]` of one boundary component, playing
/// the role of the hypersurface `S`. A half-width of at least half the length means the
/// whole closed curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryWindow {
    pub component: usize,
    pub center: f64,
    pub half_width: f64,
}

impl BoundaryWindow {
    pub fn full(component: usize) -> Self {
        BoundaryWindow {
            component,
            center: 0.0,
            half_width: f64::INFINITY,
        }
    }

    pub fn around(component: usize, center: f64, half_width: f64) -> Self {
        BoundaryWindow {
            component,
            center,
            half_width,
        }
    }

    fn is_full(&self, len: f64) -> bool {
        2.0 * self.half_width >= len
    }

    /// Arc-length range actually searched.
    fn range(&self, len: f64) -> (f64, f64) {
        if self.is_full(len) {
            (0.0, len)
        } else {
            (self.center - self.half_width, self.center + self.half_width)
        }
    }

    /// Whether the arc length `s` lies strictly inside the window.
    pub fn contains_arc(&self, spec: &DomainSpec, s: f64) -> bool {
        let Ok(comp) = spec.component(self.component) else {
            return false;
        };
        let len = comp.length();
        if self.is_full(len) {
            return true;
        }
        let off = (s - self.center + 0.5 * len).rem_euclid(len) - 0.5 * len;
        off.abs() < self.half_width
    }
}

/// Result of a foot-point search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FootPoint {
    pub distance: f64,
    /// arc length of the foot on the window's component
    pub s: f64,
    /// false when the minimiser sits on a window end
    pub interior: bool,
}

/// Nearest point of the window arc to `x`, by model distance.
///
/// 64 coarse samples select a bracket (first minimum wins ties), then three Newton steps on
/// `½ dist²` polish the parameter.
pub fn foot_point(spec: &DomainSpec, window: &BoundaryWindow, x: [f64; 2]) -> Result<FootPoint> {
    let comp = spec.component(window.component)?;
    let model = spec.model();
    let len = comp.length();
    let full = window.is_full(len);
    let (lo, hi) = window.range(len);
    const COARSE: usize = 64;
    let n = if full { COARSE } else { COARSE - 1 };
    let step = (hi - lo) / n as f64;
    let g = |s: f64| -> Result<f64> {
        let d = geometry::distance(model, &x, &comp.point_at(s))?;
        Ok(0.5 * d * d)
    };
    let mut best = (lo, f64::INFINITY);
    for i in 0..COARSE {
        let s = lo + step * i as f64;
        let v = g(s)?;
        if v < best.1 {
            best = (s, v);
        }
    }
    let clamp = |s: f64| if full { s } else { s.clamp(lo, hi) };
    let eta = step * 1e-3;
    let (mut s, mut gs) = best;
    for _ in 0..3 {
        let (gm, gp) = (g(s - eta)?, g(s + eta)?);
        let d1 = (gp - gm) / (2.0 * eta);
        let d2 = (gp - 2.0 * gs + gm) / (eta * eta);
        let trial = if d2 > 0.0 {
            s - (d1 / d2).clamp(-step, step)
        } else {
            s - 0.5 * step * d1.signum()
        };
        let trial = clamp(trial);
        let gt = g(trial)?;
        if gt <= gs {
            s = trial;
            gs = gt;
        } else {
            break;
        }
    }
    let edge_tol = 1e-9 * len;
    let interior = full || (s - lo > edge_tol && hi - s > edge_tol);
    Ok(FootPoint {
        distance: (2.0 * gs).sqrt(),
        s: s.rem_euclid(len),
        interior,
    })
}

/// `d(x) = dist(x, S)` on the mesh with a validity mask.
///
/// Values are filled in for every vertex; a vertex is valid when its foot is interior to
/// the window and `d < τ`, with `τ` the smallest focal distance of the window's normals.
#[derive(Debug, Clone)]
pub struct BoundaryDistanceField {
    pub field: ScalarField,
    pub valid: Vec<bool>,
    /// foot arc length per vertex
    pub feet: Vec<f64>,
    /// focal distance of the window (`∞` when the normals never focus)
    pub tau: f64,
    pub window: BoundaryWindow,
}

impl BoundaryDistanceField {
    pub fn values(&self) -> &[f64] {
        self.field.values()
    }
}

/// Smallest focal distance of inward normals along the window.
pub fn window_focal_distance(spec: &DomainSpec, window: &BoundaryWindow) -> Result<f64> {
    let comp = spec.component(window.component)?;
    let len = comp.length();
    let (lo, hi) = window.range(len);
    let horizon = 4.0 * spec.diameter().max(1e-3);
    let mut tau = f64::INFINITY;
    for i in 0..=64 {
        let s = lo + (hi - lo) * i as f64 / 64.0;
        let kappa = spec.boundary_mean_curvature(window.component, s)?;
        if let Some(t) = geometry::focal_distance(spec.model(), kappa, horizon) {
            tau = tau.min(t);
        }
    }
    Ok(tau)
}

pub fn distance_to_boundary_field(
    mesh: &Mesh,
    spec: &DomainSpec,
    window: BoundaryWindow,
) -> Result<BoundaryDistanceField> {
    let tau = window_focal_distance(spec, &window)?;
    let nv = mesh.num_vertices();
    let mut values = Vec::with_capacity(nv);
    let mut valid = Vec::with_capacity(nv);
    let mut feet = Vec::with_capacity(nv);
    for (v, &x) in mesh.vertices().iter().enumerate() {
        let on_s = mesh
            .boundary_vertex(v)
            .filter(|b| b.component == window.component && window.contains_arc(spec, b.s));
        let foot = match on_s {
            Some(b) => FootPoint {
                distance: 0.0,
                s: b.s,
                interior: true,
            },
            None => foot_point(spec, &window, x)?,
        };
        values.push(foot.distance);
        valid.push(foot.interior && foot.distance < tau);
        feet.push(foot.s);
    }
    Ok(BoundaryDistanceField {
        field: ScalarField::new(mesh, values)?,
        valid,
        feet,
        tau,
        window,
    })
}

/// Model norm of a chart covector at `x`.
pub fn covector_norm(model: &ManifoldModel, x: [f64; 2], p: [f64; 2]) -> Result<f64> {
    let m = geometry::metric_at(model, &x)?;
    let si = &m.sigma_inv;
    let mut acc = 0.0;
    for i in 0..2 {
        for j in 0..2 {
            acc += si[(i, j)] * p[i] * p[j];
        }
    }
    Ok(acc.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{mesh_domain, Curve, Shape};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn unit_disc() -> DomainSpec {
        DomainSpec::disc(ManifoldModel::euclidean(2).unwrap(), [0.0, 0.0], 1.0).unwrap()
    }

    #[test]
    fn point_distance_examples() {
        let spec = unit_disc();
        let mesh = mesh_domain(&spec, 0.1).unwrap();
        let f = distance_to_point_field(&mesh, [1.0, 0.0]).unwrap();
        let centre = mesh
            .vertices()
            .iter()
            .position(|p| p[0].hypot(p[1]) < 1e-12);
        if let Some(c) = centre {
            assert!((f[c] - 1.0).abs() < 1e-14);
        }
        let y0 = mesh
            .boundary()
            .iter()
            .find(|b| b.s.abs() < 1e-12)
            .expect("vertex at s = 0")
            .vertex;
        assert!(f[y0].abs() < 1e-14);
    }

    #[test]
    fn boundary_distance_on_disc() {
        let spec = unit_disc();
        let mesh = mesh_domain(&spec, 0.1).unwrap();
        let d = distance_to_boundary_field(&mesh, &spec, BoundaryWindow::full(0)).unwrap();
        assert!((d.tau - 1.0).abs() < 1e-6);
        for (v, x) in mesh.vertices().iter().enumerate() {
            let r = x[0].hypot(x[1]);
            assert!((d.values()[v] + r - 1.0).abs() < 1e-8, "vertex {v}");
        }
        for b in mesh.boundary() {
            assert_eq!(d.values()[b.vertex], 0.0);
        }
        let centre = foot_point(&spec, &BoundaryWindow::full(0), [0.0, 0.0]).unwrap();
        assert!((centre.distance - 1.0).abs() < 1e-14);
    }

    #[test]
    fn window_ends_are_invalid() {
        let spec = unit_disc();
        let w = BoundaryWindow::around(0, 0.0, 0.5);
        let inside = foot_point(&spec, &w, [0.5, 0.1]).unwrap();
        assert!(inside.interior);
        let outside = foot_point(&spec, &w, [-0.5, 0.0]).unwrap();
        assert!(!outside.interior);
    }

    fn eikonal(spec: &DomainSpec, window: BoundaryWindow, seed: u64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let tau = window_focal_distance(spec, &window).unwrap();
        let (lo, hi) = spec.bounding_box();
        let d = |x: [f64; 2]| foot_point(spec, &window, x).unwrap();
        let mut checked = 0;
        while checked < 40 {
            let x = [rng.gen_range(lo[0]..hi[0]), rng.gen_range(lo[1]..hi[1])];
            if !spec.contains(x) {
                continue;
            }
            let f = d(x);
            if !f.interior || f.distance > 0.8 * tau.min(1e9) || f.distance < 1e-3 {
                continue;
            }
            let e = 1e-6;
            let gx = (d([x[0] + e, x[1]]).distance - d([x[0] - e, x[1]]).distance) / (2.0 * e);
            let gy = (d([x[0], x[1] + e]).distance - d([x[0], x[1] - e]).distance) / (2.0 * e);
            let norm = covector_norm(spec.model(), x, [gx, gy]).unwrap();
            assert!((norm - 1.0).abs() < 1e-3, "|∇d| = {norm} at {x:?}");
            checked += 1;
        }
    }

    #[test]
    fn eikonal_property() {
        let e = ManifoldModel::euclidean(2).unwrap();
        let ell = DomainSpec::new(e, vec![Curve::new(Shape::Ellipse { a: 1.0, b: 0.6 }).unwrap()], "e")
            .unwrap();
        eikonal(&ell, BoundaryWindow::around(0, 0.0, 0.6), 1);
        let h = ManifoldModel::hyperbolic(-1.0, 2).unwrap();
        eikonal(&DomainSpec::geodesic_disc(h, 1.0).unwrap(), BoundaryWindow::full(0), 2);
        let s = ManifoldModel::sphere(1.0, 2).unwrap();
        eikonal(&DomainSpec::geodesic_disc(s, 0.6).unwrap(), BoundaryWindow::around(0, 1.0, 0.8), 3);
    }

    #[test]
    fn field_length_checked() {
        let mesh = mesh_domain(&unit_disc(), 0.2).unwrap();
        assert!(matches!(
            ScalarField::new(&mesh, vec![0.0; 3]),
            Err(Error::FieldLength { .. })
        ));
        let mut v = vec![0.0; mesh.num_vertices()];
        v[0] = f64::NAN;
        assert!(ScalarField::new(&mesh, v).is_err());
    }
}
