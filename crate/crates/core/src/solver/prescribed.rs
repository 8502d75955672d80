//! The prescribed mean curvature function `H(x, z)`.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

type Evaluator = Arc<dyn Fn([f64; 2], f64) -> f64 + Send + Sync>;

#[derive(Clone)]
enum Kind {
    Constant(f64),
    /// `c0 + cx·x + cz·z`
    Affine { c0: f64, cx: [f64; 2], cz: f64 },
    General(Evaluator),
}

impl fmt::Debug for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Kind::Constant(c) => write!(f, "Constant({c})"),
            Kind::Affine { c0, cx, cz } => write!(f, "Affine({c0} + {cx:?}·x + {cz}·z)"),
            Kind::General(_) => f.write_str("General(..)"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum HSign {
    Nonnegative,
    Nonpositive,
    Mixed,
}

/// `H(x, z)` together with the contract the existence theory needs: continuity and
/// monotonicity in `z`. Sup/inf over `z` are taken on the sampled range `z_range`.
#[derive(Debug, Clone)]
pub struct PrescribedH {
    kind: Kind,
    amplitude: f64,
    z_range: (f64, f64),
    monotone: bool,
}

const Z_SAMPLES: usize = 65;

impl PrescribedH {
    pub fn constant(h: f64) -> Self {
        PrescribedH {
            kind: Kind::Constant(h),
            amplitude: 1.0,
            z_range: (-10.0, 10.0),
            monotone: true,
        }
    }

    pub fn affine(c0: f64, cx: [f64; 2], cz: f64) -> Self {
        PrescribedH {
            kind: Kind::Affine { c0, cx, cz },
            amplitude: 1.0,
            z_range: (-10.0, 10.0),
            monotone: cz >= 0.0,
        }
    }

    /// Arbitrary evaluator; the caller declares z-monotonicity, which [`Self::check_contract`]
    /// spot-checks.
    pub fn general(
        f: impl Fn([f64; 2], f64) -> f64 + Send + Sync + 'static,
        z_range: (f64, f64),
        monotone: bool,
    ) -> Self {
        PrescribedH {
            kind: Kind::General(Arc::new(f)),
            amplitude: 1.0,
            z_range,
            monotone,
        }
    }

    pub fn with_z_range(mut self, lo: f64, hi: f64) -> Self {
        self.z_range = (lo, hi);
        self
    }

    /// `λ H`.
    pub fn scaled(&self, lambda: f64) -> Self {
        let mut out = self.clone();
        out.amplitude *= lambda;
        out
    }

    pub fn z_range(&self) -> (f64, f64) {
        self.z_range
    }

    pub fn declared_monotone(&self) -> bool {
        self.monotone
    }

    /// Returns `Some(c)` when `H ≡ c`.
    pub fn as_constant(&self) -> Option<f64> {
        match self.kind {
            Kind::Constant(c) => Some(self.amplitude * c),
            _ => None,
        }
    }

    pub fn eval(&self, x: [f64; 2], z: f64) -> f64 {
        self.amplitude
            * match &self.kind {
                Kind::Constant(c) => *c,
                Kind::Affine { c0, cx, cz } => c0 + cx[0] * x[0] + cx[1] * x[1] + cz * z,
                Kind::General(f) => f(x, z),
            }
    }

    /// `∂H/∂z`.
    pub fn dz(&self, x: [f64; 2], z: f64) -> f64 {
        match &self.kind {
            Kind::Constant(_) => 0.0,
            Kind::Affine { cz, .. } => self.amplitude * cz,
            Kind::General(_) => {
                let e = 1e-6 * z.abs().max(1.0);
                (self.eval(x, z + e) - self.eval(x, z - e)) / (2.0 * e)
            }
        }
    }

    fn z_samples(&self) -> impl Iterator<Item = f64> + '_ {
        let (lo, hi) = self.z_range;
        (0..Z_SAMPLES).map(move |i| lo + (hi - lo) * i as f64 / (Z_SAMPLES - 1) as f64)
    }

    /// `sup_z |H(x, z)|` over the sampled range.
    pub fn sup_abs_over_z(&self, x: [f64; 2]) -> f64 {
        match &self.kind {
            Kind::Constant(c) => (self.amplitude * c).abs(),
            Kind::Affine { .. } => {
                let (lo, hi) = self.z_range;
                self.eval(x, lo).abs().max(self.eval(x, hi).abs())
            }
            Kind::General(_) => self
                .z_samples()
                .map(|z| self.eval(x, z).abs())
                .fold(0.0, f64::max),
        }
    }

    /// `inf_z H(x, z)²` over the sampled range.
    pub fn inf_sq_over_z(&self, x: [f64; 2]) -> f64 {
        match &self.kind {
            Kind::Constant(c) => (self.amplitude * c).powi(2),
            _ => {
                let (lo, hi) = self.z_range;
                let (a, b) = (self.eval(x, lo), self.eval(x, hi));
                let endpoints = if matches!(self.kind, Kind::Affine { .. }) && a * b <= 0.0 {
                    0.0
                } else {
                    f64::INFINITY
                };
                self.z_samples()
                    .map(|z| self.eval(x, z).powi(2))
                    .fold(endpoints, f64::min)
            }
        }
    }

    /// Chart gradient `∂ₓH(x, z)` (central differences unless affine).
    pub fn grad_x(&self, x: [f64; 2], z: f64) -> [f64; 2] {
        match &self.kind {
            Kind::Constant(_) => [0.0, 0.0],
            Kind::Affine { cx, .. } => [self.amplitude * cx[0], self.amplitude * cx[1]],
            Kind::General(_) => {
                let e = 1e-6;
                [
                    (self.eval([x[0] + e, x[1]], z) - self.eval([x[0] - e, x[1]], z)) / (2.0 * e),
                    (self.eval([x[0], x[1] + e], z) - self.eval([x[0], x[1] - e], z)) / (2.0 * e),
                ]
            }
        }
    }

    /// Chart z-samples used for sup/inf over `z`.
    pub fn z_grid(&self) -> Vec<f64> {
        self.z_samples().collect()
    }

    /// `sup_z |∇ₓH(x, z)|` in chart coordinates.
    pub fn grad_x_sup_norm(&self, x: [f64; 2]) -> f64 {
        match &self.kind {
            Kind::Constant(_) => 0.0,
            Kind::Affine { .. } => {
                let g = self.grad_x(x, 0.0);
                g[0].hypot(g[1])
            }
            Kind::General(_) => self
                .z_samples()
                .map(|z| {
                    let g = self.grad_x(x, z);
                    g[0].hypot(g[1])
                })
                .fold(0.0, f64::max),
        }
    }

    /// Sign of `H` over the probes and the sampled z-range.
    pub fn sign(&self, probes: &[[f64; 2]]) -> HSign {
        let (mut pos, mut neg) = (false, false);
        for &x in probes {
            for z in self.z_samples() {
                let v = self.eval(x, z);
                pos |= v > 0.0;
                neg |= v < 0.0;
            }
        }
        match (pos, neg) {
            (_, false) => HSign::Nonnegative,
            (false, true) => HSign::Nonpositive,
            (true, true) => HSign::Mixed,
        }
    }

    /// Spot-checks finiteness and, when declared, `H(x, z₁) ≤ H(x, z₂)` for `z₁ < z₂`.
    pub fn check_contract(&self, probes: &[[f64; 2]]) -> Result<()> {
        for &x in probes {
            let vals: Vec<f64> = self.z_samples().map(|z| self.eval(x, z)).collect();
            if let Some(v) = vals.iter().find(|v| !v.is_finite()) {
                return Err(Error::InvalidArgument(format!("H({x:?}, ·) = {v}")));
            }
            if self.monotone {
                let zs: Vec<f64> = self.z_samples().collect();
                for i in 0..vals.len() - 1 {
                    if vals[i + 1] < vals[i] - 1e-12 * vals[i].abs().max(1.0) {
                        return Err(Error::InvalidArgument(format!(
                            "H is declared non-decreasing in z but H({x:?}, {}) = {} > H({x:?}, {}) = {}",
                            zs[i],
                            vals[i],
                            zs[i + 1],
                            vals[i + 1]
                        )));
                    }
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_summaries() {
        let h = PrescribedH::constant(-0.4);
        assert_eq!(h.sup_abs_over_z([0.3, 0.1]), 0.4);
        assert!((h.inf_sq_over_z([0.0, 0.0]) - 0.16).abs() < 1e-15);
        assert_eq!(h.grad_x_sup_norm([0.0, 0.0]), 0.0);
        assert_eq!(h.sign(&[[0.0, 0.0]]), HSign::Nonpositive);
        assert_eq!(h.scaled(0.5).as_constant(), Some(-0.2));
    }

    #[test]
    fn affine_summaries() {
        let h = PrescribedH::affine(0.1, [0.0, 0.0], 0.1).with_z_range(-2.0, 2.0);
        assert!((h.sup_abs_over_z([0.0, 0.0]) - 0.3).abs() < 1e-15);
        assert_eq!(h.inf_sq_over_z([0.0, 0.0]), 0.0);
        assert_eq!(h.sign(&[[0.0, 0.0]]), HSign::Mixed);
        assert_eq!(h.dz([0.0, 0.0], 1.0), 0.1);
        assert!(h.check_contract(&[[0.0, 0.0]]).is_ok());
    }

    #[test]
    fn monotonicity_violation_detected() {
        let h = PrescribedH::general(|_, z| -z, (-1.0, 1.0), true);
        assert!(h.check_contract(&[[0.0, 0.0]]).is_err());
        let ok = PrescribedH::general(|x, z| x[0] + z.tanh(), (-1.0, 1.0), true);
        assert!(ok.check_contract(&[[0.0, 0.0], [0.5, 0.5]]).is_ok());
        assert!((ok.dz([0.0, 0.0], 0.0) - 1.0).abs() < 1e-9);
        assert!((ok.grad_x_sup_norm([0.2, 0.0]) - 1.0).abs() < 1e-8);
    }
}
