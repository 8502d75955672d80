//! Bounded chart domains with C² boundary curves, their meshes, and the distance fields
//! the barrier constructions consume.

mod curve;
mod fields;
mod mesh;
mod spatial;

pub use curve::{Curve, CurvePoint, Shape};
pub use fields::{
    covector_norm, distance_to_boundary_field, distance_to_point_field, foot_point,
    window_focal_distance, BoundaryDistanceField, BoundaryWindow, FootPoint, ScalarField,
};
pub use mesh::{mesh_domain, mesh_with_sizing, BoundaryVertex, Mesh, MeshSizing, Refinement};

use std::f64::consts::TAU;

use crate::error::{Error, Result};
use crate::geometry::{self, ManifoldModel};
use spatial::SegmentIndex;

const TABLE_SEGMENTS: usize = 4096;

// Gauss–Legendre 5-point rule on [-1, 1].
const GL_X: [f64; 5] = [
    -0.906_179_845_938_664,
    -0.538_469_310_105_683_1,
    0.0,
    0.538_469_310_105_683_1,
    0.906_179_845_938_664,
];
const GL_W: [f64; 5] = [
    0.236_926_885_056_189_1,
    0.478_628_670_499_366_5,
    0.568_888_888_888_888_9,
    0.478_628_670_499_366_5,
    0.236_926_885_056_189_1,
];

/// One closed boundary curve with a chart arc-length table.
#[derive(Debug, Clone)]
pub struct BoundaryComponent {
    curve: Curve,
    /// cumulative chart arc length at `t_i = 2π i / TABLE_SEGMENTS`, with a closing entry
    cumulative: Vec<f64>,
}

fn speed(c: &Curve, t: f64) -> f64 {
    let d = c.eval(t).d1;
    d[0].hypot(d[1])
}

fn gl_length(c: &Curve, a: f64, b: f64) -> f64 {
    let (m, r) = (0.5 * (a + b), 0.5 * (b - a));
    GL_X.iter()
        .zip(GL_W)
        .map(|(x, w)| w * speed(c, m + r * x))
        .sum::<f64>()
        * r
}

impl BoundaryComponent {
    fn new(curve: Curve) -> Self {
        let dt = TAU / TABLE_SEGMENTS as f64;
        let mut cumulative = Vec::with_capacity(TABLE_SEGMENTS + 1);
        let mut acc = 0.0;
        cumulative.push(0.0);
        for i in 0..TABLE_SEGMENTS {
            acc += gl_length(&curve, i as f64 * dt, (i + 1) as f64 * dt);
            cumulative.push(acc);
        }
        BoundaryComponent { curve, cumulative }
    }

    pub fn curve(&self) -> &Curve {
        &self.curve
    }

    /// Total chart arc length.
    pub fn length(&self) -> f64 {
        self.cumulative[TABLE_SEGMENTS]
    }

    /// Curve parameter at chart arc length `s` (taken modulo the length).
    pub fn t_of_s(&self, s: f64) -> f64 {
        let len = self.length();
        let s = s.rem_euclid(len);
        let i = match self
            .cumulative
            .binary_search_by(|v| v.partial_cmp(&s).unwrap())
        {
            Ok(i) => return TAU * i as f64 / TABLE_SEGMENTS as f64,
            Err(i) => i - 1,
        };
        let dt = TAU / TABLE_SEGMENTS as f64;
        let t0 = i as f64 * dt;
        let frac = (s - self.cumulative[i]) / (self.cumulative[i + 1] - self.cumulative[i]);
        let mut t = t0 + frac * dt;
        for _ in 0..3 {
            let f = self.cumulative[i] + gl_length(&self.curve, t0, t) - s;
            t -= f / speed(&self.curve, t);
        }
        t
    }

    /// Chart arc length at curve parameter `t ∈ [0, 2π)`.
    pub fn s_of_t(&self, t: f64) -> f64 {
        let t = t.rem_euclid(TAU);
        let dt = TAU / TABLE_SEGMENTS as f64;
        let i = ((t / dt) as usize).min(TABLE_SEGMENTS - 1);
        self.cumulative[i] + gl_length(&self.curve, i as f64 * dt, t)
    }

    pub fn point_at(&self, s: f64) -> [f64; 2] {
        self.curve.eval(self.t_of_s(s)).p
    }

    pub fn eval_at(&self, s: f64) -> CurvePoint {
        self.curve.eval(self.t_of_s(s))
    }

    pub(crate) fn table_points(&self) -> Vec<[f64; 2]> {
        curve::sample(&self.curve, TABLE_SEGMENTS)
    }

    pub(crate) fn table_arclength(&self) -> &[f64] {
        &self.cumulative
    }
}

/// A bounded domain in a model chart, given by its boundary curves.
#[derive(Debug, Clone)]
pub struct DomainSpec {
    model: ManifoldModel,
    components: Vec<BoundaryComponent>,
    label: String,
    index: SegmentIndex,
}

fn segments_cross(a: [f64; 2], b: [f64; 2], c: [f64; 2], d: [f64; 2]) -> bool {
    let orient = |p: [f64; 2], q: [f64; 2], r: [f64; 2]| {
        (q[0] - p[0]) * (r[1] - p[1]) - (q[1] - p[1]) * (r[0] - p[0])
    };
    let (o1, o2) = (orient(a, b, c), orient(a, b, d));
    let (o3, o4) = (orient(c, d, a), orient(c, d, b));
    o1 * o2 < 0.0 && o3 * o4 < 0.0
}

impl DomainSpec {
    pub fn new(model: ManifoldModel, curves: Vec<Curve>, label: impl Into<String>) -> Result<Self> {
        if model.dim() != 2 {
            return Err(Error::InvalidDomain(format!(
                "domains are planar charts; model has n = {}",
                model.dim()
            )));
        }
        if curves.is_empty() {
            return Err(Error::InvalidDomain("no boundary curves".into()));
        }
        for c in &curves {
            c.shape.validate()?;
        }
        let components: Vec<_> = curves.into_iter().map(BoundaryComponent::new).collect();
        let polylines: Vec<Vec<[f64; 2]>> =
            components.iter().map(|c| c.table_points()).collect();
        let index = SegmentIndex::new(&polylines);
        let spec = DomainSpec {
            model,
            components,
            label: label.into(),
            index,
        };
        spec.validate()?;
        Ok(spec)
    }

    fn validate(&self) -> Result<()> {
        let limit = 0.999 * self.model.chart_radius();
        let coarse: Vec<Vec<[f64; 2]>> = self
            .components
            .iter()
            .map(|c| curve::sample(&c.curve, 512))
            .collect();
        for (i, poly) in coarse.iter().enumerate() {
            if poly.iter().any(|p| p[0].hypot(p[1]) >= limit) {
                return Err(Error::InvalidDomain(format!(
                    "boundary component {i} leaves the chart domain"
                )));
            }
        }
        // simplicity and disjointness
        let segs: Vec<([f64; 2], [f64; 2], usize, usize)> = coarse
            .iter()
            .enumerate()
            .flat_map(|(c, poly)| {
                (0..poly.len()).map(move |k| (poly[k], poly[(k + 1) % poly.len()], c, k))
            })
            .collect();
        for (a, sa) in segs.iter().enumerate() {
            for sb in &segs[a + 1..] {
                if sa.2 == sb.2 {
                    let n = coarse[sa.2].len();
                    let gap = (sa.3 as isize - sb.3 as isize).unsigned_abs();
                    if gap <= 1 || gap == n - 1 {
                        continue;
                    }
                }
                if segments_cross(sa.0, sa.1, sb.0, sb.1) {
                    return Err(Error::InvalidDomain(if sa.2 == sb.2 {
                        format!("boundary component {} intersects itself", sa.2)
                    } else {
                        format!("boundary components {} and {} intersect", sa.2, sb.2)
                    }));
                }
            }
        }
        // the domain must lie to the left of every curve
        for (i, comp) in self.components.iter().enumerate() {
            let cp = comp.curve.eval(0.3);
            let sp = cp.d1[0].hypot(cp.d1[1]);
            let delta = 1e-4 * comp.length();
            let left = [cp.p[0] - delta * cp.d1[1] / sp, cp.p[1] + delta * cp.d1[0] / sp];
            let right = [cp.p[0] + delta * cp.d1[1] / sp, cp.p[1] - delta * cp.d1[0] / sp];
            if !self.contains(left) || self.contains(right) {
                return Err(Error::InvalidDomain(format!(
                    "boundary component {i} is oriented with the domain on its right"
                )));
            }
        }
        if self.model.curvature() > 0.0 {
            let bound = std::f64::consts::FRAC_PI_2 / self.model.curvature().sqrt();
            let diam = self.boundary_diameter(96)?;
            if diam >= bound {
                return Err(Error::InvalidDomain(format!(
                    "intrinsic diameter {diam} violates the bound π/(2√K) = {bound}"
                )));
            }
        }
        Ok(())
    }

    fn boundary_diameter(&self, per_component: usize) -> Result<f64> {
        let pts: Vec<[f64; 2]> = self
            .components
            .iter()
            .flat_map(|c| curve::sample(&c.curve, per_component))
            .collect();
        let mut diam: f64 = 0.0;
        for (i, p) in pts.iter().enumerate() {
            for q in &pts[i + 1..] {
                diam = diam.max(geometry::distance(&self.model, p, q)?);
            }
        }
        Ok(diam)
    }

    /// Disc of chart radius `radius` about `center`.
    pub fn disc(model: ManifoldModel, center: [f64; 2], radius: f64) -> Result<Self> {
        DomainSpec::new(model, vec![Curve::circle(center, radius)?], "disc")
    }

    /// Geodesic disc of intrinsic radius `r` about the chart origin.
    pub fn geodesic_disc(model: ManifoldModel, r: f64) -> Result<Self> {
        DomainSpec::new(
            model,
            vec![Curve::circle([0.0, 0.0], geodesic_chart_radius(&model, r))?],
            "geodesic-disc",
        )
    }

    /// Annulus `inner < |x| < outer` (chart radii), hole traversed clockwise.
    pub fn annulus(model: ManifoldModel, inner: f64, outer: f64) -> Result<Self> {
        if !(inner < outer) {
            return Err(Error::InvalidDomain(format!(
                "annulus radii {inner} ≥ {outer}"
            )));
        }
        DomainSpec::new(
            model,
            vec![
                Curve::circle([0.0, 0.0], outer)?,
                Curve::circle([0.0, 0.0], inner)?.reversed(),
            ],
            "annulus",
        )
    }

    pub fn model(&self) -> &ManifoldModel {
        &self.model
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn components(&self) -> &[BoundaryComponent] {
        &self.components
    }

    pub fn component(&self, id: usize) -> Result<&BoundaryComponent> {
        self.components.get(id).ok_or_else(|| {
            Error::InvalidArgument(format!("no boundary component {id}"))
        })
    }

    /// Point-in-domain test against the sampled boundary (chord error ≈ 3e-7 on unit curves).
    pub fn contains(&self, x: [f64; 2]) -> bool {
        self.index.contains(x)
    }

    /// Chart distance from `x` to the sampled boundary, searched up to `radius`.
    pub fn chart_distance_to_boundary(&self, x: [f64; 2], radius: f64) -> f64 {
        self.index.distance(x, radius)
    }

    pub fn bounding_box(&self) -> ([f64; 2], [f64; 2]) {
        self.index.bounding_box()
    }

    /// Intrinsic diameter estimated from boundary samples.
    pub fn diameter(&self) -> f64 {
        self.boundary_diameter(256).unwrap_or(f64::NAN)
    }

    /// Geodesic curvature of component `component` at arc length `s`, with respect to
    /// the inner normal (positive where the boundary is convex toward the domain).
    pub fn boundary_mean_curvature(&self, component: usize, s: f64) -> Result<f64> {
        let cp = self.component(component)?.eval_at(s);
        geodesic_curvature(&self.model, &cp)
    }

    /// Signed sample of the boundary curvature at `samples` equally spaced arc lengths.
    pub fn curvature_samples(&self, component: usize, samples: usize) -> Result<Vec<(f64, f64)>> {
        let len = self.component(component)?.length();
        (0..samples)
            .map(|i| {
                let s = len * i as f64 / samples as f64;
                Ok((s, self.boundary_mean_curvature(component, s)?))
            })
            .collect()
    }

    /// Nearest boundary location `(component, s)` to a chart point, by chart distance.
    pub fn nearest_boundary_point(&self, x: [f64; 2]) -> (usize, f64) {
        let mut best = (0, 0.0, f64::INFINITY);
        for (c, comp) in self.components.iter().enumerate() {
            let len = comp.length();
            let n = 512;
            for i in 0..n {
                let s = len * i as f64 / n as f64;
                let p = comp.point_at(s);
                let d = (p[0] - x[0]).hypot(p[1] - x[1]);
                if d < best.2 {
                    best = (c, s, d);
                }
            }
        }
        let comp = &self.components[best.0];
        let f = |s: f64| {
            let p = comp.point_at(s);
            (p[0] - x[0]).powi(2) + (p[1] - x[1]).powi(2)
        };
        let s = golden_min(f, best.1 - comp.length() / 512.0, best.1 + comp.length() / 512.0);
        (best.0, s.rem_euclid(comp.length()))
    }
}

pub(crate) fn golden_min<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64) -> f64 {
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..80 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

/// Chart radius of the geodesic circle of intrinsic radius `r` about the chart origin.
pub fn geodesic_chart_radius(model: &ManifoldModel, r: f64) -> f64 {
    match model.chart() {
        geometry::Chart::EuclideanCartesian | geometry::Chart::SpherePolar => r,
        geometry::Chart::PoincareDisk => (0.5 * (-model.curvature()).sqrt() * r).tanh(),
    }
}

/// Geodesic curvature of a chart curve, signed with respect to its left normal.
pub fn geodesic_curvature(model: &ManifoldModel, cp: &CurvePoint) -> Result<f64> {
    let metric = geometry::metric_at(model, &cp.p)?;
    let gamma = geometry::christoffels_at(model, &cp.p)?;
    let s = &metric.sigma;
    let inner = |a: [f64; 2], b: [f64; 2]| {
        let mut acc = 0.0;
        for i in 0..2 {
            for j in 0..2 {
                acc += s[(i, j)] * a[i] * b[j];
            }
        }
        acc
    };
    let v = cp.d1;
    let mut acc = cp.d2;
    for (k, a) in acc.iter_mut().enumerate() {
        for i in 0..2 {
            for j in 0..2 {
                *a += gamma.get(k, i, j) * v[i] * v[j];
            }
        }
    }
    let v2 = inner(v, v);
    let e = [-v[1], v[0]];
    let proj = inner(e, v) / v2;
    let mut n = [e[0] - proj * v[0], e[1] - proj * v[1]];
    let nn = inner(n, n).sqrt();
    n = [n[0] / nn, n[1] / nn];
    Ok(inner(acc, n) / v2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn euclid() -> ManifoldModel {
        ManifoldModel::euclidean(2).unwrap()
    }

    #[test]
    fn arclength_table_of_circle() {
        let d = DomainSpec::disc(euclid(), [0.0, 0.0], 2.0).unwrap();
        let c = &d.components()[0];
        assert_relative_eq!(c.length(), 4.0 * std::f64::consts::PI, epsilon = 1e-12);
        for s in [0.0, 0.3, 1.7, 6.0, 12.5] {
            assert_relative_eq!(c.t_of_s(s), s / 2.0, epsilon = 1e-12);
            assert_relative_eq!(c.s_of_t(s / 2.0), s, epsilon = 1e-12);
        }
    }

    #[test]
    fn arclength_inverse_on_ellipse() {
        let curve = Curve::new(Shape::Ellipse { a: 1.0, b: 0.3 }).unwrap();
        let d = DomainSpec::new(euclid(), vec![curve], "ellipse").unwrap();
        let c = &d.components()[0];
        for i in 0..20 {
            let s = c.length() * i as f64 / 20.0;
            assert!((c.s_of_t(c.t_of_s(s)) - s).abs() < 1e-11);
        }
    }

    #[test]
    fn containment_and_orientation() {
        let ann = DomainSpec::annulus(euclid(), 0.4, 1.0).unwrap();
        assert!(ann.contains([0.7, 0.0]));
        assert!(!ann.contains([0.1, 0.1]));
        assert!(!ann.contains([1.1, 0.0]));
        // clockwise outer boundary puts the domain outside
        let bad = DomainSpec::new(
            euclid(),
            vec![Curve::circle([0.0, 0.0], 1.0).unwrap().reversed()],
            "bad",
        );
        assert!(bad.is_err());
    }

    #[test]
    fn intersecting_boundaries_are_rejected() {
        let r = DomainSpec::new(
            euclid(),
            vec![
                Curve::circle([0.0, 0.0], 1.0).unwrap(),
                Curve::circle([0.9, 0.0], 0.3).unwrap().reversed(),
            ],
            "overlap",
        );
        assert!(matches!(r, Err(Error::InvalidDomain(_))));
    }

    #[test]
    fn sphere_diameter_bound_enforced() {
        let s = ManifoldModel::sphere(1.0, 2).unwrap();
        assert!(DomainSpec::geodesic_disc(s, 0.6).is_ok());
        assert!(DomainSpec::geodesic_disc(s, 0.8).is_err());
    }

    #[test]
    fn curvature_of_circles() {
        let d = DomainSpec::disc(euclid(), [0.2, -0.1], 1.0).unwrap();
        for s in [0.0, 1.0, 2.5] {
            assert_relative_eq!(d.boundary_mean_curvature(0, s).unwrap(), 1.0, epsilon = 1e-12);
        }
        let ann = DomainSpec::annulus(euclid(), 0.4, 1.0).unwrap();
        assert_relative_eq!(ann.boundary_mean_curvature(1, 0.3).unwrap(), -2.5, epsilon = 1e-12);

        let h = ManifoldModel::hyperbolic(-1.0, 2).unwrap();
        let r: f64 = 1.0;
        let d = DomainSpec::geodesic_disc(h, r).unwrap();
        assert_relative_eq!(
            d.boundary_mean_curvature(0, 0.4).unwrap(),
            1.0 / r.tanh(),
            epsilon = 1e-6
        );
        let s = ManifoldModel::sphere(1.0, 2).unwrap();
        let d = DomainSpec::geodesic_disc(s, 0.6).unwrap();
        assert_relative_eq!(
            d.boundary_mean_curvature(0, 1.1).unwrap(),
            1.0 / 0.6f64.tan(),
            epsilon = 1e-6
        );
    }

    #[test]
    fn nearest_boundary_point_on_circle() {
        let d = DomainSpec::disc(euclid(), [0.0, 0.0], 1.0).unwrap();
        let (c, s) = d.nearest_boundary_point([0.0, 0.5]);
        assert_eq!(c, 0);
        assert!((s - std::f64::consts::FRAC_PI_2).abs() < 1e-8);
    }
}
