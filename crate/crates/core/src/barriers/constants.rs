//! Selection of `ν`, `R₁`, `R₂` and `a` around a boundary point where the strong Serrin
//! condition fails.

use serde::Serialize;

use crate::domain::{foot_point, window_focal_distance, BoundaryWindow, DomainSpec, Mesh};
use crate::error::{Error, Result};
use crate::geometry::{self, ManifoldModel};
use crate::solver::PrescribedH;

use super::profiles::PsiProfile;

/// A boundary point given by component and arc length.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundaryPoint {
    pub component: usize,
    pub s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LemmaConstants {
    pub nu: f64,
    pub r1: f64,
    pub r2: f64,
    pub a: f64,
    pub k: f64,
    /// `κ` with `dist(x, y₀) ≤ π/(2√K₀) − κ`; only for positive curvature
    pub kappa_margin: Option<f64>,
    /// `n − 1`, or `(n − 1)C` for positive curvature
    pub c: f64,
    /// intrinsic diameter estimate `δ`
    pub delta: f64,
    /// focal distance of the arc `S`
    pub tau: f64,
    /// `nH(y₀, k) − (n − 1)ℋ(y₀)`
    pub margin: f64,
    /// `ℋ(y₀)`
    pub boundary_curvature: f64,
    pub y0: [f64; 2],
    pub y0_boundary: BoundaryPoint,
    /// the arc of `∂Ω` used as `S`
    #[serde(skip)]
    pub window: BoundaryWindow,
}

impl LemmaConstants {
    pub fn psi(&self) -> Result<PsiProfile> {
        PsiProfile::new(self.c, self.a, self.delta)
    }

    /// `ε(a) = ψ(a) + √(2a/ν)`.
    pub fn eps_of_a(&self) -> Result<f64> {
        Ok(self.psi()?.value_at_a() + (2.0 * self.a / self.nu).sqrt())
    }

    /// Same constants with a smaller radius `a`.
    pub fn with_a(&self, a: f64) -> Result<Self> {
        if !(a > 0.0 && a < self.r2) {
            return Err(Error::InvalidArgument(format!(
                "a = {a} must lie in (0, R₂ = {})",
                self.r2
            )));
        }
        Ok(LemmaConstants { a, ..self.clone() })
    }
}

/// Ratio between consecutive radii of the sample cloud.
const RING_RATIO: f64 = 1.025;

/// Chart sample cloud around `y0`: geometric radii times uniform angles, kept if inside.
fn sample_cloud(spec: &DomainSpec, y0: [f64; 2]) -> Vec<[f64; 2]> {
    let (lo, hi) = spec.bounding_box();
    let extent = (hi[0] - lo[0]).hypot(hi[1] - lo[1]);
    let angles = 160;
    let mut out = Vec::new();
    let mut r = 1e-5 * extent;
    while r < extent * RING_RATIO {
        for j in 0..angles {
            let th = std::f64::consts::TAU * (j as f64 + 0.5) / angles as f64;
            let p = [y0[0] + r * th.cos(), y0[1] + r * th.sin()];
            if spec.contains(p) {
                out.push(p);
            }
        }
        r *= RING_RATIO;
    }
    out
}

/// Radius below which every sample passes `ok`, capped at `cap`.
///
/// On failure this backs off one ring so that the returned radius does not overshoot the
/// first failing sample by the ring spacing.
fn first_failure(samples: &[(f64, [f64; 2])], cap: f64, mut ok: impl FnMut([f64; 2]) -> Result<Option<bool>>) -> Result<f64> {
    for &(rho, p) in samples {
        if rho >= cap {
            break;
        }
        if ok(p)? == Some(false) {
            return Ok(rho / RING_RATIO);
        }
    }
    Ok(cap)
}

/// Whether `∂B_a(y₀) ∩ Ω` is a single arc, tested on 720 rays from `y₀`.
pub fn sphere_trace_connected(spec: &DomainSpec, y0: [f64; 2], a: f64) -> Result<bool> {
    let model = spec.model();
    let rays = 720;
    let mut inside = Vec::with_capacity(rays);
    for j in 0..rays {
        let th = std::f64::consts::TAU * j as f64 / rays as f64;
        let dir = [th.cos(), th.sin()];
        // bracket the chart radius where ρ = a
        let at = |r: f64| [y0[0] + r * dir[0], y0[1] + r * dir[1]];
        let (mut lo, mut hi) = (0.0, a);
        let limit = model.chart_radius();
        while geometry::distance(model, &at(hi), &y0)? < a {
            lo = hi;
            hi *= 2.0;
            if at(hi)[0].hypot(at(hi)[1]) >= limit {
                break;
            }
        }
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if !model.contains(&at(mid)) || geometry::distance(model, &at(mid), &y0)? >= a {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        inside.push(spec.contains(at(0.5 * (lo + hi))));
    }
    let changes = (0..rays).filter(|&j| inside[j] != inside[(j + 1) % rays]).count();
    Ok(inside.iter().any(|&b| b) && changes <= 2)
}

/// Chooses the constants for a violation at `y0` with height `k`.
///
/// `ν` is an eighth of the violation margin. `R₁` and `R₂` are the first sampled radii at
/// which the continuity window for `H(·, k)` or the `Δd` window fails, and `a = R₂/2`,
/// halved until the trace of `∂B_a(y₀)` on `Ω` is one arc.
pub fn compute_constants(
    spec: &DomainSpec,
    h: &PrescribedH,
    y0: BoundaryPoint,
    k: f64,
    probes: Option<&Mesh>,
) -> Result<LemmaConstants> {
    let model: ManifoldModel = *spec.model();
    let n = model.dim() as f64;
    let comp = spec.component(y0.component)?;
    let y0p = comp.point_at(y0.s);
    let hcurv = spec.boundary_mean_curvature(y0.component, y0.s)?;
    let h0 = h.eval(y0p, k);
    let margin = n * h0 - (n - 1.0) * hcurv;
    if !(margin > 0.0) {
        return Err(Error::LemmaInapplicable(format!(
            "Serrin condition holds at y₀ with k = {k}: nH(y₀,k) − (n−1)ℋ = {margin}"
        )));
    }
    let probe_points: Vec<[f64; 2]> = match probes {
        Some(m) => m.vertices().to_vec(),
        None => comp.table_points(),
    };
    if h.sign(&probe_points) != crate::solver::HSign::Nonnegative {
        return Err(Error::LemmaInapplicable("H takes negative values".into()));
    }
    h.check_contract(&probe_points)
        .map_err(|e| Error::LemmaInapplicable(e.to_string()))?;
    let nu = margin / 8.0;
    let delta = spec.diameter();

    let mut samples: Vec<(f64, [f64; 2])> = sample_cloud(spec, y0p)
        .into_iter()
        .map(|p| Ok((geometry::distance(&model, &p, &y0p)?, p)))
        .collect::<Result<_>>()?;
    samples.sort_by(|x, y| x.0.total_cmp(&y.0));

    let r1 = first_failure(&samples, delta, |p| {
        Ok(Some((h.eval(p, k) - h0).abs() < nu / n))
    })?;

    let window = BoundaryWindow::around(y0.component, y0.s, 0.25 * comp.length());
    let tau = window_focal_distance(spec, &window)?;
    let lap0 = -(n - 1.0) * hcurv;
    let cap = r1.min(tau);
    let r2_raw = first_failure(&samples, cap, |p| {
        let foot = foot_point(spec, &window, p)?;
        if !foot.interior || foot.distance >= tau {
            return Ok(None);
        }
        let kappa = spec.boundary_mean_curvature(y0.component, foot.s)?;
        let lap = match geometry::riccati_laplacian_d(&model, kappa, foot.distance) {
            Ok(v) => v,
            Err(Error::Focal { .. }) => return Ok(None),
            Err(e) => return Err(e),
        };
        Ok(Some((lap - lap0).abs() < nu))
    })?;
    let r2 = if r2_raw >= cap { 0.999 * cap } else { r2_raw };

    let mut a = 0.5 * r2;
    let mut tries = 0;
    while !sphere_trace_connected(spec, y0p, a)? {
        a *= 0.5;
        tries += 1;
        if tries > 30 {
            return Err(Error::LemmaInapplicable(
                "could not find a radius with connected trace ∂B_a ∩ Ω".into(),
            ));
        }
    }

    let (kappa_margin, c) = if model.curvature() > 0.0 {
        let sk = model.curvature().sqrt();
        let half = std::f64::consts::FRAC_PI_2 / sk;
        let far = comp_max_distance(spec, y0p)?;
        let kappa = half - far;
        if !(kappa > 0.0) {
            return Err(Error::LemmaInapplicable(format!(
                "points of Ω̄ lie at distance {far} ≥ π/(2√K₀) from y₀"
            )));
        }
        let arg = sk * (half - kappa);
        let cc = arg / arg.tan();
        (Some(kappa), (n - 1.0) * cc)
    } else {
        (None, n - 1.0)
    };

    Ok(LemmaConstants {
        nu,
        r1,
        r2,
        a,
        k,
        kappa_margin,
        c,
        delta,
        tau,
        margin,
        boundary_curvature: hcurv,
        y0: y0p,
        y0_boundary: y0,
        window,
    })
}

/// `max_{x ∈ ∂Ω} dist(y₀, x)`, which bounds the distance over `Ω̄`.
fn comp_max_distance(spec: &DomainSpec, y0: [f64; 2]) -> Result<f64> {
    let mut far: f64 = 0.0;
    for comp in spec.components() {
        for p in comp.table_points() {
            far = far.max(geometry::distance(spec.model(), &p, &y0)?);
        }
    }
    Ok(far)
}

/// Final height estimate `max{k, sup_outer} + ψ(a) + √(2a/ν)`, with `ε(a)` alongside.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HeightBound {
    pub bound: f64,
    pub eps_of_a: f64,
    pub psi_a: f64,
    pub phi_term: f64,
}

pub fn height_bound(constants: &LemmaConstants, psi: &PsiProfile, k: f64, sup_outer: f64) -> HeightBound {
    let psi_a = psi.value_at_a();
    let phi_term = (2.0 * constants.a / constants.nu).sqrt();
    HeightBound {
        bound: k.max(sup_outer) + psi_a + phi_term,
        eps_of_a: psi_a + phi_term,
        psi_a,
        phi_term,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_disc() -> DomainSpec {
        DomainSpec::disc(ManifoldModel::euclidean(2).unwrap(), [0.0, 0.0], 1.0).unwrap()
    }

    #[test]
    fn disc_constants() {
        let spec = unit_disc();
        let c = compute_constants(
            &spec,
            &PrescribedH::constant(0.6),
            BoundaryPoint { component: 0, s: 0.0 },
            0.0,
            None,
        )
        .unwrap();
        assert!((c.margin - 0.2).abs() < 1e-12);
        assert!((c.nu - 0.025).abs() < 1e-12);
        // constant H: R₁ is the largest probed radius
        assert!((c.r1 - c.delta).abs() < 1e-12);
        assert!((c.delta - 2.0).abs() < 1e-4);
        // |Δd − Δd(y₀)| = d/(1 − d) < ν along the inward normal gives R₂ ≈ ν/(1 + ν)
        let r2 = 0.025 / 1.025;
        assert!(c.r2 <= r2 && c.r2 > 0.95 * r2, "{}", c.r2);
        assert!((c.a - 0.5 * c.r2).abs() < 1e-15);
        assert_eq!(c.c, 1.0);
        assert!(c.kappa_margin.is_none());
    }

    #[test]
    fn satisfied_serrin_is_inapplicable() {
        let r = compute_constants(
            &unit_disc(),
            &PrescribedH::constant(0.4),
            BoundaryPoint { component: 0, s: 0.0 },
            0.0,
            None,
        );
        assert!(matches!(r, Err(Error::LemmaInapplicable(_))));
    }

    #[test]
    fn sphere_constants() {
        let s = ManifoldModel::sphere(1.0, 2).unwrap();
        let spec = DomainSpec::geodesic_disc(s, 0.6).unwrap();
        let c = compute_constants(
            &spec,
            &PrescribedH::constant(0.9),
            BoundaryPoint { component: 0, s: 0.0 },
            0.0,
            None,
        )
        .unwrap();
        let kappa = c.kappa_margin.unwrap();
        assert!((kappa - (std::f64::consts::FRAC_PI_2 - 1.2)).abs() < 1e-4);
        assert!((c.c - 1.2 / 1.2f64.tan()).abs() < 1e-4);
    }

    #[test]
    fn trace_connectivity() {
        let spec = unit_disc();
        assert!(sphere_trace_connected(&spec, [1.0, 0.0], 0.3).unwrap());
        // a dumbbell neck: a ball around a lobe tip that reaches across the waist
        let db = DomainSpec::new(
            ManifoldModel::euclidean(2).unwrap(),
            vec![crate::domain::Curve::new(crate::domain::Shape::Dumbbell {
                half_length: 1.0,
                waist: 0.2,
            })
            .unwrap()],
            "dumbbell",
        )
        .unwrap();
        let top = db.components()[0].point_at(db.components()[0].length() * 0.25);
        assert!(sphere_trace_connected(&db, top, 0.05).unwrap());
        assert!(!sphere_trace_connected(&db, top, 0.7).unwrap());
    }

    #[test]
    fn height_bound_arithmetic() {
        let c = LemmaConstants {
            nu: 0.025,
            r1: 1.0,
            r2: 0.05,
            a: 0.02,
            k: 3.0,
            kappa_margin: None,
            c: 1.0,
            delta: 2.0,
            tau: 1.0,
            margin: 0.2,
            boundary_curvature: 1.0,
            y0: [1.0, 0.0],
            y0_boundary: BoundaryPoint { component: 0, s: 0.0 },
            window: BoundaryWindow::full(0),
        };
        let psi = c.psi().unwrap();
        let hb = height_bound(&c, &psi, 3.0, -2.0);
        assert!((hb.phi_term - 1.6f64.sqrt()).abs() < 1e-15);
        assert!((hb.bound - (3.0 + hb.eps_of_a)).abs() < 1e-15);
    }
}
