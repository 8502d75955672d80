//! Constant-curvature model spaces and their charts.
//!
//! Three charts are supported:
//!
//! * `EuclideanCartesian` for `K = 0`, the identity metric;
//! * `PoincareDisk` for `K < 0`, the conformal metric `4 / (|K| (1 - |x|²)²) δ` on the unit ball;
//! * `SpherePolar` for `K > 0`, geodesic polar coordinates about a pole written in Cartesian
//!   form (the azimuthal equidistant chart), valid for `|x| < π/√K`.
//!
//! Every chart accepts points of the model's dimension, so the formulas here carry general
//! `n` even though meshing and solving happen in two dimensions.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ode;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Chart {
    EuclideanCartesian,
    PoincareDisk,
    SpherePolar,
}

/// A simply connected space form of sectional curvature `K` with a fixed chart.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ManifoldModel {
    curvature: f64,
    dim: usize,
    chart: Chart,
}

impl ManifoldModel {
    pub fn new(curvature: f64, dim: usize, chart: Chart) -> Result<Self> {
        if dim < 2 {
            return Err(Error::InvalidModel(format!("dimension {dim} < 2")));
        }
        if !curvature.is_finite() {
            return Err(Error::InvalidModel("curvature must be finite".into()));
        }
        let ok = match chart {
            Chart::EuclideanCartesian => curvature == 0.0,
            Chart::PoincareDisk => curvature < 0.0,
            Chart::SpherePolar => curvature > 0.0,
        };
        if !ok {
            return Err(Error::InvalidModel(format!(
                "chart {chart:?} cannot carry curvature {curvature}"
            )));
        }
        Ok(ManifoldModel {
            curvature,
            dim,
            chart,
        })
    }

    pub fn euclidean(dim: usize) -> Result<Self> {
        Self::new(0.0, dim, Chart::EuclideanCartesian)
    }

    pub fn hyperbolic(curvature: f64, dim: usize) -> Result<Self> {
        Self::new(curvature, dim, Chart::PoincareDisk)
    }

    pub fn sphere(curvature: f64, dim: usize) -> Result<Self> {
        Self::new(curvature, dim, Chart::SpherePolar)
    }

    pub fn curvature(&self) -> f64 {
        self.curvature
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn chart(&self) -> Chart {
        self.chart
    }

    /// Ricci curvature in any unit direction, `(n - 1) K`.
    pub fn ricci(&self) -> f64 {
        (self.dim as f64 - 1.0) * self.curvature
    }

    /// Euclidean radius of the chart domain (infinite for the flat chart).
    pub fn chart_radius(&self) -> f64 {
        match self.chart {
            Chart::EuclideanCartesian => f64::INFINITY,
            Chart::PoincareDisk => 1.0,
            Chart::SpherePolar => std::f64::consts::PI / self.curvature.sqrt(),
        }
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim && x.iter().all(|c| c.is_finite()) && norm(x) < self.chart_radius()
    }

    fn check(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim {
            return Err(Error::InvalidArgument(format!(
                "point has {} coordinates, model dimension is {}",
                x.len(),
                self.dim
            )));
        }
        if !self.contains(x) {
            return Err(Error::OutsideChart { point: x.to_vec() });
        }
        Ok(())
    }
}

/// Metric tensor at a chart point together with its inverse and volume factor.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricData {
    pub sigma: DMatrix<f64>,
    pub sigma_inv: DMatrix<f64>,
    pub sqrt_det: f64,
}

/// Christoffel symbols `Γ^k_ij`, stored with `k` outermost.
#[derive(Debug, Clone, PartialEq)]
pub struct Christoffels {
    dim: usize,
    data: Vec<f64>,
}

impl Christoffels {
    fn zeros(dim: usize) -> Self {
        Christoffels {
            dim,
            data: vec![0.0; dim * dim * dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `Γ^k_ij`
    pub fn get(&self, k: usize, i: usize, j: usize) -> f64 {
        self.data[(k * self.dim + i) * self.dim + j]
    }

    fn set(&mut self, k: usize, i: usize, j: usize, v: f64) {
        let n = self.dim;
        self.data[(k * n + i) * n + j] = v;
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

fn norm_sq(x: &[f64]) -> f64 {
    x.iter().map(|c| c * c).sum()
}

fn norm(x: &[f64]) -> f64 {
    norm_sq(x).sqrt()
}

// Power series for the sphere chart. With w = K |x|²,
//   S(w) = sin²(√w) / w,      T(w) = (1 - S(w)) / w,
// both entire in w, so the series is used everywhere on the chart (|w| < π²).
const SERIES_TERMS: usize = 32;

fn sphere_series(w: f64) -> (f64, f64, f64, f64) {
    // a_m = (-1)^m 2^(2m+1) / (2m+2)!
    let mut a = [0.0; SERIES_TERMS + 2];
    let mut fact = 2.0; // (2m+2)! at m = 0
    let mut pow2 = 2.0; // 2^(2m+1)
    for (m, am) in a.iter_mut().enumerate() {
        let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
        *am = sign * pow2 / fact;
        pow2 *= 4.0;
        fact *= ((2 * m + 3) * (2 * m + 4)) as f64;
    }
    let (mut s, mut ds, mut t, mut dt) = (0.0, 0.0, 0.0, 0.0);
    let mut wp = 1.0; // w^m
    let mut wpm1 = 0.0; // w^(m-1)
    for m in 0..=SERIES_TERMS {
        s += a[m] * wp;
        t -= a[m + 1] * wp;
        if m >= 1 {
            ds += m as f64 * a[m] * wpm1;
            dt -= m as f64 * a[m + 1] * wpm1;
        }
        wpm1 = wp;
        wp *= w;
    }
    (s, ds, t, dt)
}

/// Metric `σ_ij` at `x`.
fn sigma(model: &ManifoldModel, x: &[f64]) -> DMatrix<f64> {
    let n = model.dim;
    match model.chart {
        Chart::EuclideanCartesian => DMatrix::identity(n, n),
        Chart::PoincareDisk => {
            let lambda = 2.0 / ((-model.curvature).sqrt() * (1.0 - norm_sq(x)));
            DMatrix::identity(n, n) * (lambda * lambda)
        }
        Chart::SpherePolar => {
            let k = model.curvature;
            let q = norm_sq(x);
            let (s, _, t, _) = sphere_series(k * q);
            let g = k * t;
            DMatrix::from_fn(n, n, |i, j| {
                let delta = if i == j { s } else { 0.0 };
                delta + g * x[i] * x[j]
            })
        }
    }
}

/// Returns `σ`, `σ⁻¹` and `√det σ` at a chart point.
pub fn metric_at(model: &ManifoldModel, x: &[f64]) -> Result<MetricData> {
    model.check(x)?;
    let sigma = sigma(model, x);
    let n = model.dim;
    let (sigma_inv, sqrt_det) = match model.chart {
        Chart::EuclideanCartesian => (DMatrix::identity(n, n), 1.0),
        Chart::PoincareDisk => {
            let l2 = sigma[(0, 0)];
            (DMatrix::identity(n, n) / l2, l2.powf(n as f64 / 2.0))
        }
        Chart::SpherePolar => {
            // σ = s I + g x xᵀ  ⇒  σ⁻¹ = (I - g/(s + g q) x xᵀ) / s
            let k = model.curvature;
            let q = norm_sq(x);
            let (s, _, t, _) = sphere_series(k * q);
            let g = k * t;
            let radial = s + g * q;
            let inv = DMatrix::from_fn(n, n, |i, j| {
                let delta = if i == j { 1.0 } else { 0.0 };
                (delta - g / radial * x[i] * x[j]) / s
            });
            (inv, (s.powi(n as i32 - 1) * radial).sqrt())
        }
    };
    Ok(MetricData {
        sigma,
        sigma_inv,
        sqrt_det,
    })
}

/// Partial derivatives `∂_k σ_ij`, one matrix per `k`.
pub fn metric_derivatives(model: &ManifoldModel, x: &[f64]) -> Result<Vec<DMatrix<f64>>> {
    model.check(x)?;
    let n = model.dim;
    let out = match model.chart {
        Chart::EuclideanCartesian => vec![DMatrix::zeros(n, n); n],
        Chart::PoincareDisk => {
            let one_minus = 1.0 - norm_sq(x);
            let lambda = 2.0 / ((-model.curvature).sqrt() * one_minus);
            (0..n)
                .map(|k| {
                    let dlambda = lambda * 2.0 * x[k] / one_minus;
                    DMatrix::identity(n, n) * (2.0 * lambda * dlambda)
                })
                .collect()
        }
        Chart::SpherePolar => {
            let kk = model.curvature;
            let q = norm_sq(x);
            let (_, ds, t, dt) = sphere_series(kk * q);
            let f_q = kk * ds;
            let g = kk * t;
            let g_q = kk * kk * dt;
            (0..n)
                .map(|k| {
                    DMatrix::from_fn(n, n, |i, j| {
                        let delta_ij = if i == j { 1.0 } else { 0.0 };
                        let delta_ik = if i == k { 1.0 } else { 0.0 };
                        let delta_jk = if j == k { 1.0 } else { 0.0 };
                        2.0 * x[k] * (f_q * delta_ij + g_q * x[i] * x[j])
                            + g * (delta_ik * x[j] + delta_jk * x[i])
                    })
                })
                .collect()
        }
    };
    Ok(out)
}

/// Christoffel symbols of the second kind at `x`.
pub fn christoffels_at(model: &ManifoldModel, x: &[f64]) -> Result<Christoffels> {
    let n = model.dim;
    let mut gamma = Christoffels::zeros(n);
    if model.chart == Chart::EuclideanCartesian {
        model.check(x)?;
        return Ok(gamma);
    }
    let metric = metric_at(model, x)?;
    let d = metric_derivatives(model, x)?;
    for k in 0..n {
        for i in 0..n {
            for j in i..n {
                let mut v = 0.0;
                for l in 0..n {
                    v += metric.sigma_inv[(k, l)]
                        * (d[i][(j, l)] + d[j][(i, l)] - d[l][(i, j)]);
                }
                gamma.set(k, i, j, 0.5 * v);
                gamma.set(k, j, i, 0.5 * v);
            }
        }
    }
    Ok(gamma)
}

/// Geodesic distance between two chart points.
pub fn distance(model: &ManifoldModel, x: &[f64], y: &[f64]) -> Result<f64> {
    model.check(x)?;
    model.check(y)?;
    let diff: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
    Ok(match model.chart {
        Chart::EuclideanCartesian => diff,
        Chart::PoincareDisk => {
            let denom = ((1.0 - norm_sq(x)) * (1.0 - norm_sq(y))).sqrt();
            2.0 / (-model.curvature).sqrt() * (diff / denom).asinh()
        }
        Chart::SpherePolar => {
            let c = model.curvature.sqrt();
            let p = sphere_embed(c, x);
            let q = sphere_embed(c, y);
            let minus: f64 = p.iter().zip(&q).map(|(a, b)| (a - b) * (a - b)).sum::<f64>();
            let plus: f64 = p.iter().zip(&q).map(|(a, b)| (a + b) * (a + b)).sum::<f64>();
            2.0 * minus.sqrt().atan2(plus.sqrt()) / c
        }
    })
}

fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        1.0 - x * x / 6.0
    } else {
        x.sin() / x
    }
}

// Unit-sphere embedding of a point in geodesic polar coordinates.
fn sphere_embed(c: f64, x: &[f64]) -> Vec<f64> {
    let rho = norm(x);
    let scale = c * sinc(c * rho);
    let mut p: Vec<f64> = x.iter().map(|xi| scale * xi).collect();
    p.push((c * rho).cos());
    p
}

/// `ct_K(ρ)`: the geodesic curvature of a distance circle of radius `ρ` in curvature `K`,
/// i.e. `√K cot(√K ρ)`, `1/ρ` or `√-K coth(√-K ρ)`.
pub fn ct(curvature: f64, rho: f64) -> f64 {
    let w = curvature * rho * rho;
    let c = if w.abs() < 1e-4 {
        1.0 - w / 3.0 - w * w / 45.0 - 2.0 * w * w * w / 945.0
    } else if w > 0.0 {
        let r = w.sqrt();
        r / r.tan()
    } else {
        let r = (-w).sqrt();
        r / r.tanh()
    };
    c / rho
}

/// Laplacian of `ρ = dist(·, y₀)` at distance `rho` in the space form: `(n-1) ct_K(ρ)`.
///
/// In a space form the Laplacian comparison theorem holds with equality, so this is both
/// the exact value and the comparison bound used against curvature bounds `K ≤ K₀`.
pub fn laplacian_rho(model: &ManifoldModel, rho: f64) -> Result<f64> {
    if !(rho > 0.0) {
        return Err(Error::InvalidArgument(format!("rho must be positive, got {rho}")));
    }
    let k = model.curvature;
    if k > 0.0 && rho >= std::f64::consts::PI / k.sqrt() {
        return Err(Error::InvalidArgument(format!(
            "rho = {rho} reaches the conjugate point π/√K"
        )));
    }
    Ok((model.dim as f64 - 1.0) * ct(k, rho))
}

fn riccati(model: &ManifoldModel, kappa0: f64, t: f64) -> ode::Scalar {
    let k = model.curvature;
    ode::integrate(
        |_, l| -l * l - k,
        0.0,
        -kappa0,
        t,
        ode::Tolerances::default(),
    )
}

/// Laplacian of the distance `d` to a curve at distance `t` along its inner normal.
///
/// Solves `λ' = -λ² - K`, `λ(0) = -κ₀` where `κ₀` is the geodesic curvature of the curve
/// with respect to the inner normal. Only surfaces (`n = 2`) are supported.
pub fn riccati_laplacian_d(model: &ManifoldModel, kappa0: f64, t: f64) -> Result<f64> {
    if model.dim != 2 {
        return Err(Error::InvalidArgument(format!(
            "parallel-curve Riccati equation needs n = 2, model has n = {}",
            model.dim
        )));
    }
    if !(t >= 0.0) || !kappa0.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "need finite κ₀ and t ≥ 0, got κ₀ = {kappa0}, t = {t}"
        )));
    }
    match riccati(model, kappa0, t) {
        ode::Scalar::Reached(l) => Ok(l),
        ode::Scalar::BlowUp(tb) => Err(Error::Focal {
            focal_distance: tb,
            requested: t,
        }),
    }
}

/// Numerically detected focal distance of parallel curves with initial curvature `kappa0`,
/// searched up to `horizon`; `None` if the Riccati solution stays bounded.
pub fn focal_distance(model: &ManifoldModel, kappa0: f64, horizon: f64) -> Option<f64> {
    match riccati(model, kappa0, horizon) {
        ode::Scalar::Reached(_) => None,
        ode::Scalar::BlowUp(tb) => Some(tb),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn disk() -> ManifoldModel {
        ManifoldModel::hyperbolic(-1.0, 2).unwrap()
    }

    #[test]
    fn chart_curvature_mismatch_is_rejected() {
        assert!(ManifoldModel::new(-1.0, 2, Chart::SpherePolar).is_err());
        assert!(ManifoldModel::new(1.0, 2, Chart::PoincareDisk).is_err());
        assert!(ManifoldModel::new(0.5, 2, Chart::EuclideanCartesian).is_err());
        assert!(ManifoldModel::new(0.0, 1, Chart::EuclideanCartesian).is_err());
    }

    #[test]
    fn euclidean_metric_is_identity() {
        let m = ManifoldModel::euclidean(2).unwrap();
        let g = metric_at(&m, &[0.3, 0.7]).unwrap();
        assert_eq!(g.sigma, DMatrix::identity(2, 2));
        assert_eq!(g.sqrt_det, 1.0);
    }

    #[test]
    fn poincare_metric_values() {
        let g = metric_at(&disk(), &[0.0, 0.0]).unwrap();
        assert_relative_eq!(g.sigma, DMatrix::identity(2, 2) * 4.0, epsilon = 1e-15);
        let g = metric_at(&disk(), &[0.5, 0.0]).unwrap();
        assert_relative_eq!(g.sigma, DMatrix::identity(2, 2) * (64.0 / 9.0), epsilon = 1e-13);
        assert_relative_eq!(g.sqrt_det, 64.0 / 9.0, epsilon = 1e-13);
    }

    #[test]
    fn outside_chart_is_an_error() {
        assert!(matches!(
            metric_at(&disk(), &[1.0, 0.1]),
            Err(Error::OutsideChart { .. })
        ));
        let s = ManifoldModel::sphere(1.0, 2).unwrap();
        assert!(metric_at(&s, &[3.2, 0.0]).is_err());
        assert!(distance(&disk(), &[0.0, 0.0], &[0.0, 1.5]).is_err());
    }

    #[test]
    fn sphere_metric_is_polar_form() {
        let s = ManifoldModel::sphere(1.0, 2).unwrap();
        let r: f64 = 0.9;
        let x = [r * 0.6, r * 0.8];
        let g = metric_at(&s, &x).unwrap();
        let radial = [0.6, 0.8];
        let tangential = [-0.8, 0.6];
        let quad = |v: [f64; 2]| {
            let mut acc = 0.0;
            for i in 0..2 {
                for j in 0..2 {
                    acc += g.sigma[(i, j)] * v[i] * v[j];
                }
            }
            acc
        };
        assert_relative_eq!(quad(radial), 1.0, epsilon = 1e-14);
        assert_relative_eq!(quad(tangential), (r.sin() / r).powi(2), epsilon = 1e-14);
        let prod = &g.sigma * &g.sigma_inv;
        assert_relative_eq!(prod, DMatrix::identity(2, 2), epsilon = 1e-12);
        assert_relative_eq!(g.sqrt_det, r.sin() / r, epsilon = 1e-14);
    }

    #[test]
    fn christoffels_vanish_where_expected() {
        let e = ManifoldModel::euclidean(3).unwrap();
        assert_eq!(christoffels_at(&e, &[1.0, -2.0, 0.5]).unwrap().max_abs(), 0.0);
        assert!(christoffels_at(&disk(), &[0.0, 0.0]).unwrap().max_abs() < 1e-15);
        let s = ManifoldModel::sphere(2.0, 2).unwrap();
        assert!(christoffels_at(&s, &[0.0, 0.0]).unwrap().max_abs() < 1e-15);
    }

    #[test]
    fn christoffels_are_symmetric() {
        let s = ManifoldModel::sphere(1.0, 3).unwrap();
        let g = christoffels_at(&s, &[0.3, -0.4, 0.2]).unwrap();
        for k in 0..3 {
            for i in 0..3 {
                for j in 0..3 {
                    assert_eq!(g.get(k, i, j), g.get(k, j, i));
                }
            }
        }
    }

    #[test]
    fn distances() {
        let e = ManifoldModel::euclidean(2).unwrap();
        assert_eq!(distance(&e, &[0.0, 0.0], &[3.0, 4.0]).unwrap(), 5.0);
        // d = 2 artanh(0.5) = ln 3 from the origin
        let d = distance(&disk(), &[0.0, 0.0], &[0.5, 0.0]).unwrap();
        assert_relative_eq!(d, 3f64.ln(), epsilon = 1e-14);
        let s = ManifoldModel::sphere(1.0, 2).unwrap();
        let d = distance(&s, &[0.2, 0.0], &[0.9, 0.0]).unwrap();
        assert_relative_eq!(d, 0.7, epsilon = 1e-14);
        // through the pole
        let d = distance(&s, &[0.2, 0.0], &[-0.5, 0.0]).unwrap();
        assert_relative_eq!(d, 0.7, epsilon = 1e-14);
    }

    #[test]
    fn laplacian_rho_examples() {
        let e = ManifoldModel::euclidean(2).unwrap();
        assert_relative_eq!(laplacian_rho(&e, 0.5).unwrap(), 2.0, epsilon = 1e-15);
        let s = ManifoldModel::sphere(1.0, 2).unwrap();
        assert_relative_eq!(
            laplacian_rho(&s, std::f64::consts::FRAC_PI_4).unwrap(),
            1.0,
            epsilon = 1e-14
        );
        assert_relative_eq!(
            laplacian_rho(&disk(), 1.0).unwrap(),
            1.0 / 1f64.tanh(),
            epsilon = 1e-14
        );
        assert!(laplacian_rho(&e, 0.0).is_err());
        assert!(laplacian_rho(&s, 3.2).is_err());
    }

    #[test]
    fn laplacian_rho_is_continuous_in_curvature() {
        for i in 0..=9 {
            let rho = 0.1 + 0.1 * i as f64;
            for k in [1e-8, -1e-8] {
                let m = if k > 0.0 {
                    ManifoldModel::sphere(k, 2).unwrap()
                } else {
                    ManifoldModel::hyperbolic(k, 2).unwrap()
                };
                let v = laplacian_rho(&m, rho).unwrap();
                assert!((v - 1.0 / rho).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn ricatti_examples() {
        let e = ManifoldModel::euclidean(2).unwrap();
        assert_relative_eq!(riccati_laplacian_d(&e, 1.0, 0.5).unwrap(), -2.0, epsilon = 1e-9);
        assert_eq!(riccati_laplacian_d(&e, 0.0, 3.0).unwrap(), 0.0);
        let r: f64 = 1.3;
        let got = riccati_laplacian_d(&disk(), 1.0 / r.tanh(), r / 2.0).unwrap();
        assert_relative_eq!(got, -1.0 / (r / 2.0).tanh(), epsilon = 1e-8);
    }

    #[test]
    fn ricatti_reports_focal_distance() {
        let e = ManifoldModel::euclidean(2).unwrap();
        match riccati_laplacian_d(&e, 2.0, 0.7) {
            Err(Error::Focal { focal_distance, .. }) => {
                assert!((focal_distance - 0.5).abs() < 1e-5)
            }
            other => panic!("{other:?}"),
        }
        assert!(focal_distance(&disk(), 0.5, 50.0).is_none());
        let s = ManifoldModel::sphere(1.0, 2).unwrap();
        // a great circle focalises at π/2
        let f = focal_distance(&s, 0.0, 10.0).unwrap();
        assert!((f - std::f64::consts::FRAC_PI_2).abs() < 1e-5);
    }

    #[test]
    fn riccati_needs_surfaces() {
        let e = ManifoldModel::euclidean(3).unwrap();
        assert!(riccati_laplacian_d(&e, 1.0, 0.1).is_err());
    }
}
