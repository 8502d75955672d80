//! The strong Serrin condition along `∂Ω` and the solvability criteria built on it.

use serde::Serialize;

use crate::domain::{covector_norm, DomainSpec, Mesh};
use crate::error::{Error, Result};
use crate::geometry::{self, ManifoldModel};
use crate::solver::{HSign, PrescribedH};

/// `(n − 1)ℋ(γ(s)) − n sup_z |H(γ(s), z)|` at arc length `s` of a boundary component.
pub fn serrin_margin(spec: &DomainSpec, h: &PrescribedH, component: usize, s: f64) -> Result<f64> {
    let n = spec.model().dim() as f64;
    let p = spec.component(component)?.point_at(s);
    let curv = spec.boundary_mean_curvature(component, s)?;
    Ok((n - 1.0) * curv - n * h.sup_abs_over_z(p))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MarginSample {
    pub component: usize,
    pub s: f64,
    pub point: [f64; 2],
    pub curvature: f64,
    pub margin: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Verdict {
    StrongSerrinHolds,
    ViolatedAt { component: usize, s: f64, point: [f64; 2] },
    Indeterminate,
}

/// The solvability statements checked by [`classify`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Criterion {
    /// `H ≡ 0` on a nonpositively curved space: solvable for all data iff mean convex.
    MinimalMeanConvex,
    /// constant `H`, positive curvature, `diam Ω < π/(2√K)`
    ConstantPositiveCurvature,
    /// `∂_z H ≥ 0` and `0 ≤ H ≤ (n − 1)√|K|/n` in hyperbolic space
    HyperbolicBoundedH,
    /// constant `H` in hyperbolic space
    HyperbolicConstant,
    /// Ricci-type bound on `H` with a sign; Hadamard or small domain in positive curvature
    RicciCharacterization,
    /// Ricci-type bound and `∂_z H ≥ 0`: the condition is sufficient
    RicciExistence,
    /// violation at a point with the radial-curvature hypotheses: failing data exist
    LocalNonexistence,
    /// the nonpositive-curvature corollary of the local statement
    NonexistenceHadamard,
    /// the positive-curvature corollary with `diam Ω < π/(2√K)`
    NonexistencePositiveCurvature,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Direction {
    /// condition holds iff the problem is solvable for all data
    Characterization,
    /// condition implies solvability
    Existence,
    /// failure of the condition implies some data are not attained
    Nonexistence,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HypothesisCheck {
    pub name: &'static str,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CriterionCheck {
    pub criterion: Criterion,
    pub direction: Direction,
    pub hypotheses: Vec<HypothesisCheck>,
    pub applies: bool,
}

impl CriterionCheck {
    fn new(criterion: Criterion, direction: Direction, hypotheses: &[(&'static str, bool)]) -> Self {
        CriterionCheck {
            criterion,
            direction,
            applies: hypotheses.iter().all(|h| h.1),
            hypotheses: hypotheses
                .iter()
                .map(|&(name, holds)| HypothesisCheck { name, holds })
                .collect(),
        }
    }

    fn gives_existence(&self) -> bool {
        self.applies && self.direction != Direction::Nonexistence
    }

    fn gives_nonexistence(&self) -> bool {
        self.applies && self.direction != Direction::Existence
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RicciCheck {
    pub holds: bool,
    pub worst_point: [f64; 2],
    /// `min_x (Ric − n sup‖∇ₓH‖ + n²/(n−1) inf H²)`
    pub slack: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SerrinReport {
    pub samples: Vec<MarginSample>,
    pub min_margin: f64,
    pub argmin: MarginSample,
    pub verdict: Verdict,
    pub criteria: Vec<CriterionCheck>,
    /// margin samples per boundary component
    pub resolution: usize,
    /// margins in `[−tolerance, 0)` are treated as unresolved
    pub tolerance: f64,
    pub h_sign: HSign,
    pub h_monotone: bool,
    pub h_constant: Option<f64>,
    pub z_range: (f64, f64),
    pub diameter: f64,
    pub ricci: RicciCheck,
}

impl SerrinReport {
    pub fn applicable(&self) -> impl Iterator<Item = Criterion> + '_ {
        self.criteria.iter().filter(|c| c.applies).map(|c| c.criterion)
    }
}

/// Checks the Ricci-type bound `Ric ≥ n sup_z‖∇ₓH‖ − n²/(n−1) inf_z H²` at each point.
///
/// On a space form `Ric = (n − 1)K` in every unit direction.
pub fn ricci_condition_check(model: &ManifoldModel, h: &PrescribedH, points: &[[f64; 2]]) -> Result<RicciCheck> {
    let n = model.dim() as f64;
    let ric = model.ricci();
    let mut worst = RicciCheck {
        holds: true,
        worst_point: [f64::NAN; 2],
        slack: f64::INFINITY,
    };
    let zs = h.z_grid();
    for &x in points {
        let grad = if h.as_constant().is_some() {
            0.0
        } else {
            zs.iter()
                .map(|&z| covector_norm(model, x, h.grad_x(x, z)))
                .try_fold(0.0f64, |m, g| g.map(|g| m.max(g)))?
        };
        let slack = ric - n * grad + n * n / (n - 1.0) * h.inf_sq_over_z(x);
        if slack < worst.slack {
            worst = RicciCheck {
                holds: slack >= 0.0,
                worst_point: x,
                slack,
            };
        }
    }
    Ok(worst)
}

/// `ricci_condition_check` over the vertices of a mesh.
pub fn ricci_condition_on_mesh(h: &PrescribedH, mesh: &Mesh) -> Result<RicciCheck> {
    ricci_condition_check(mesh.model(), h, mesh.vertices())
}

/// Interior probe points: a 48 × 48 chart lattice clipped to the domain, plus boundary samples.
fn probe_points(spec: &DomainSpec) -> Vec<[f64; 2]> {
    let (lo, hi) = spec.bounding_box();
    let m = 48;
    let mut out = Vec::new();
    for i in 0..=m {
        for j in 0..=m {
            let p = [
                lo[0] + (hi[0] - lo[0]) * i as f64 / m as f64,
                lo[1] + (hi[1] - lo[1]) * j as f64 / m as f64,
            ];
            if spec.contains(p) {
                out.push(p);
            }
        }
    }
    for comp in spec.components() {
        let len = comp.length();
        out.extend((0..128).map(|k| comp.point_at(len * k as f64 / 128.0)));
    }
    out
}

/// Evaluates the margin at `resolution` points per component and checks every criterion.
///
/// The verdict is only `StrongSerrinHolds` or `ViolatedAt` when some applicable criterion
/// turns the margin sign into a solvability statement; otherwise it is `Indeterminate`.
pub fn classify(spec: &DomainSpec, h: &PrescribedH, resolution: usize) -> Result<SerrinReport> {
    if resolution < 8 {
        return Err(Error::InvalidArgument(format!(
            "margin resolution {resolution} below 8 samples per component"
        )));
    }
    let model = *spec.model();
    let n = model.dim() as f64;
    let k = model.curvature();

    let mut samples = Vec::with_capacity(resolution * spec.components().len());
    for (c, comp) in spec.components().iter().enumerate() {
        let len = comp.length();
        for i in 0..resolution {
            let s = len * i as f64 / resolution as f64;
            let curvature = spec.boundary_mean_curvature(c, s)?;
            let point = comp.point_at(s);
            samples.push(MarginSample {
                component: c,
                s,
                point,
                curvature,
                margin: (n - 1.0) * curvature - n * h.sup_abs_over_z(point),
            });
        }
    }
    let argmin = *samples
        .iter()
        .min_by(|a, b| a.margin.total_cmp(&b.margin))
        .expect("at least one sample");
    let scale = samples
        .iter()
        .map(|m| m.curvature.abs())
        .fold(1.0, f64::max);
    let tolerance = 1e-9 * scale;

    let probes = probe_points(spec);
    let h_sign = h.sign(&probes);
    let h_monotone = h.declared_monotone() && h.check_contract(&probes).is_ok();
    let h_constant = h.as_constant();
    let diameter = spec.diameter();
    let ricci = ricci_condition_check(&model, h, &probes)?;

    let signed = h_sign != HSign::Mixed;
    let nonpositive_curv = k <= 0.0;
    let hyperbolic = k < 0.0;
    let half = if k > 0.0 {
        std::f64::consts::FRAC_PI_2 / k.sqrt()
    } else {
        f64::INFINITY
    };
    let small = k > 0.0 && diameter < half;
    let far_from_y0 = samples
        .iter()
        .map(|m| geometry::distance(&model, &m.point, &argmin.point))
        .try_fold(0.0f64, |acc, d| d.map(|d| acc.max(d)))?;
    let hyperbolic_cap = (n - 1.0) * k.abs().sqrt() / n;
    let h_in_range = {
        let zs = h.z_grid();
        probes
            .iter()
            .all(|&x| zs.iter().all(|&z| (0.0..=hyperbolic_cap).contains(&h.eval(x, z))))
    };

    use Criterion::*;
    use Direction::*;
    let criteria = vec![
        CriterionCheck::new(
            MinimalMeanConvex,
            Characterization,
            &[("K ≤ 0", nonpositive_curv), ("H ≡ 0", h_constant == Some(0.0))],
        ),
        CriterionCheck::new(
            ConstantPositiveCurvature,
            Characterization,
            &[
                ("K > 0", k > 0.0),
                ("H constant", h_constant.is_some()),
                ("diam Ω < π/(2√K)", small),
            ],
        ),
        CriterionCheck::new(
            HyperbolicBoundedH,
            Characterization,
            &[
                ("K < 0", hyperbolic),
                ("∂_z H ≥ 0", h_monotone),
                ("0 ≤ H ≤ (n−1)√|K|/n", h_in_range),
            ],
        ),
        CriterionCheck::new(
            HyperbolicConstant,
            Characterization,
            &[("K < 0", hyperbolic), ("H constant", h_constant.is_some())],
        ),
        CriterionCheck::new(
            RicciCharacterization,
            Characterization,
            &[
                ("H has a sign", signed),
                ("∂_z H ≥ 0", h_monotone),
                ("Ricci bound on H", ricci.holds),
                ("K ≤ 0, or K > 0 with diam Ω < π/(2√K)", nonpositive_curv || small),
            ],
        ),
        CriterionCheck::new(
            RicciExistence,
            Existence,
            &[("∂_z H ≥ 0", h_monotone), ("Ricci bound on H", ricci.holds)],
        ),
        CriterionCheck::new(
            LocalNonexistence,
            Nonexistence,
            &[
                ("H has a sign", signed),
                ("∂_z H ≥ 0", h_monotone),
                (
                    "K ≤ 0, or dist(y₀, Ω̄) < π/(2√K)",
                    nonpositive_curv || far_from_y0 < half,
                ),
            ],
        ),
        CriterionCheck::new(
            NonexistenceHadamard,
            Nonexistence,
            &[("K ≤ 0", nonpositive_curv), ("H has a sign", signed), ("∂_z H ≥ 0", h_monotone)],
        ),
        CriterionCheck::new(
            NonexistencePositiveCurvature,
            Nonexistence,
            &[
                ("K > 0", k > 0.0),
                ("diam Ω < π/(2√K)", small),
                ("H has a sign", signed),
                ("∂_z H ≥ 0", h_monotone),
            ],
        ),
    ];

    let verdict = if argmin.margin < -tolerance {
        if criteria.iter().any(CriterionCheck::gives_nonexistence) {
            Verdict::ViolatedAt {
                component: argmin.component,
                s: argmin.s,
                point: argmin.point,
            }
        } else {
            Verdict::Indeterminate
        }
    } else if argmin.margin >= 0.0 && criteria.iter().any(CriterionCheck::gives_existence) {
        Verdict::StrongSerrinHolds
    } else {
        Verdict::Indeterminate
    };

    Ok(SerrinReport {
        min_margin: argmin.margin,
        argmin,
        samples,
        verdict,
        criteria,
        resolution,
        tolerance,
        h_sign,
        h_monotone,
        h_constant,
        z_range: h.z_range(),
        diameter,
        ricci,
    })
}

/// [`classify`] at four times the mesh's boundary resolution.
pub fn classify_for_mesh(spec: &DomainSpec, h: &PrescribedH, mesh: &Mesh) -> Result<SerrinReport> {
    let per_component = mesh.boundary().len() / spec.components().len().max(1);
    classify(spec, h, 4 * per_component.max(2))
}

/// `χ(r) = exp(1 − 1/(1 − (r/a)²))` for `r < a`, zero beyond: smooth, `χ(0) = 1`.
pub fn bump(r: f64, a: f64) -> f64 {
    let q = r / a;
    if q.abs() >= 1.0 {
        0.0
    } else {
        (1.0 - 1.0 / (1.0 - q * q)).exp()
    }
}

/// Boundary data `k + eps·χ(dist(·, y₀))`, one value per entry of `mesh.boundary()`.
///
/// This equals `k` off `B_a(y₀)` and `k + eps` at `y₀`.
pub fn generate_failing_data(mesh: &Mesh, y0: [f64; 2], a: f64, k: f64, eps: f64) -> Result<Vec<f64>> {
    if !(a > 0.0 && eps > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "failing data need a > 0 and eps > 0, got a = {a}, eps = {eps}"
        )));
    }
    let mut inside = 0;
    let values = mesh
        .boundary()
        .iter()
        .map(|b| {
            let r = geometry::distance(mesh.model(), &mesh.vertex(b.vertex), &y0)?;
            if r < a {
                inside += 1;
            }
            Ok(k + eps * bump(r, a))
        })
        .collect::<Result<Vec<f64>>>()?;
    if inside == 0 {
        return Err(Error::MeshTooCoarse(format!(
            "no boundary vertex within a = {a} of y₀ = {y0:?}"
        )));
    }
    Ok(values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::mesh_domain;

    fn euclid() -> ManifoldModel {
        ManifoldModel::euclidean(2).unwrap()
    }

    #[test]
    fn unit_circle_margin() {
        let spec = DomainSpec::disc(euclid(), [0.0, 0.0], 1.0).unwrap();
        let m = serrin_margin(&spec, &PrescribedH::constant(0.4), 0, 1.3).unwrap();
        assert!((m - 0.2).abs() < 1e-9);
        let rep = classify(&spec, &PrescribedH::constant(0.4), 64).unwrap();
        assert_eq!(rep.verdict, Verdict::StrongSerrinHolds);
        let spread = rep.samples.iter().map(|m| m.margin).fold(f64::NEG_INFINITY, f64::max) - rep.min_margin;
        assert!(spread < 1e-9);
        assert!(rep.applicable().any(|c| c == Criterion::RicciCharacterization));
    }

    #[test]
    fn annulus_inner_boundary_is_concave() {
        let spec = DomainSpec::annulus(euclid(), 0.5, 1.0).unwrap();
        let inner = serrin_margin(&spec, &PrescribedH::constant(0.0), 1, 0.4).unwrap();
        assert!((inner + 2.0).abs() < 1e-8);
        let rep = classify(&spec, &PrescribedH::constant(0.0), 64).unwrap();
        match rep.verdict {
            Verdict::ViolatedAt { component, .. } => assert_eq!(component, 1),
            v => panic!("{v:?}"),
        }
    }

    #[test]
    fn hyperbolic_disc_minimal() {
        let spec = DomainSpec::geodesic_disc(ManifoldModel::hyperbolic(-1.0, 2).unwrap(), 1.0).unwrap();
        let rep = classify(&spec, &PrescribedH::constant(0.0), 64).unwrap();
        let coth1 = 1.0 / 1f64.tanh();
        assert!((rep.min_margin - coth1).abs() < 1e-6);
        assert_eq!(rep.verdict, Verdict::StrongSerrinHolds);
        assert!(rep.applicable().any(|c| c == Criterion::MinimalMeanConvex));
        let half = classify(&spec, &PrescribedH::constant(0.5), 64).unwrap();
        assert!(half.applicable().any(|c| c == Criterion::HyperbolicBoundedH));
        let over = classify(&spec, &PrescribedH::constant(0.51), 64).unwrap();
        assert!(!over.applicable().any(|c| c == Criterion::HyperbolicBoundedH));
    }

    #[test]
    fn spherical_cap_violation() {
        let spec = DomainSpec::geodesic_disc(ManifoldModel::sphere(1.0, 2).unwrap(), 0.6).unwrap();
        let cot = 1.0 / 0.6f64.tan();
        let rep = classify(&spec, &PrescribedH::constant(0.5 * cot + 0.1), 64).unwrap();
        assert!(matches!(rep.verdict, Verdict::ViolatedAt { .. }));
        assert!(rep.applicable().any(|c| c == Criterion::NonexistencePositiveCurvature));
        assert!((rep.min_margin - (cot - cot - 0.2)).abs() < 1e-6);
    }

    #[test]
    fn mixed_sign_without_theorem_is_indeterminate() {
        let spec = DomainSpec::disc(euclid(), [0.0, 0.0], 1.0).unwrap();
        // mixed sign and decreasing in z: no criterion applies in either direction
        let h = PrescribedH::general(|x, z| 2.0 * x[0] - 0.1 * z, (-1.0, 1.0), false);
        let rep = classify(&spec, &h, 64).unwrap();
        assert!(rep.min_margin < 0.0);
        assert_eq!(rep.verdict, Verdict::Indeterminate);
    }

    #[test]
    fn ricci_examples() {
        let hyp = ManifoldModel::hyperbolic(-1.0, 2).unwrap();
        let r = ricci_condition_check(&hyp, &PrescribedH::constant(0.8), &[[0.1, 0.2]]).unwrap();
        assert!(r.holds);
        assert!((r.slack - 1.56).abs() < 1e-12);
        let r0 = ricci_condition_check(&hyp, &PrescribedH::constant(0.0), &[[0.1, 0.2]]).unwrap();
        assert!(!r0.holds);
        let e = ricci_condition_check(&euclid(), &PrescribedH::constant(0.3), &[[5.0, 1.0]]).unwrap();
        assert!(e.holds);
    }

    #[test]
    fn failing_data_shape() {
        let spec = DomainSpec::disc(euclid(), [0.0, 0.0], 1.0).unwrap();
        let mesh = mesh_domain(&spec, 0.05).unwrap();
        let y0 = mesh.vertex(mesh.boundary()[0].vertex);
        let data = generate_failing_data(&mesh, y0, 0.3, 2.0, 0.5).unwrap();
        assert!((data[0] - 2.5).abs() < 1e-15);
        for (b, v) in mesh.boundary().iter().zip(&data) {
            let r = geometry::distance(&euclid(), &mesh.vertex(b.vertex), &y0).unwrap();
            if r >= 0.3 {
                assert_eq!(*v, 2.0);
            }
        }
        assert!(matches!(
            generate_failing_data(&mesh, [0.0, 0.0], 0.3, 0.0, 1.0),
            Err(Error::MeshTooCoarse(_))
        ));
    }
}
