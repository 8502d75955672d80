//! The one-dimensional profiles `φ` and `ψ` composed with distance functions.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::quad;

/// `φ(t) = √(2/ν) ((a − ε)^{1/2} − (t − ε)^{1/2})` on `(ε, a]`.
///
/// Decreasing and convex, vanishes at `a`, vertical at `ε`, and solves `νφ'³ + φ'' = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PhiProfile {
    pub nu: f64,
    pub a: f64,
    pub eps: f64,
}

/// Value and first two derivatives.
pub type Triple = (f64, f64, f64);

impl PhiProfile {
    pub fn new(nu: f64, a: f64, eps: f64) -> Result<Self> {
        if !(nu > 0.0 && a > 0.0 && eps >= 0.0 && eps < a) {
            return Err(Error::InvalidArgument(format!(
                "φ profile needs ν > 0 and 0 ≤ ε < a, got ν = {nu}, a = {a}, ε = {eps}"
            )));
        }
        Ok(PhiProfile { nu, a, eps })
    }

    pub fn eval(&self, t: f64) -> Result<Triple> {
        if !(t > self.eps && t <= self.a) {
            return Err(Error::InvalidArgument(format!(
                "φ is defined on ({}, {}], got t = {t}",
                self.eps, self.a
            )));
        }
        Ok(self.eval_continued(t))
    }

    /// The closed form for any `t > ε`, including `t > a` where `φ < 0`.
    pub fn eval_continued(&self, t: f64) -> Triple {
        let k = (2.0 / self.nu).sqrt();
        let s = (t - self.eps).sqrt();
        let phi = k * ((self.a - self.eps).sqrt() - s);
        let d1 = -0.5 * k / s;
        let d2 = 0.25 * k / (s * s * s);
        (phi, d1, d2)
    }

    /// `φ(ε⁺) = √(2(a − ε)/ν)`.
    pub fn value_at_eps(&self) -> f64 {
        (2.0 * (self.a - self.eps) / self.nu).sqrt()
    }
}

/// `ψ(t) = (2/c)^{1/2} ∫_t^δ (log r/a)^{-1/2} dr` on `(a, δ]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PsiProfile {
    pub c: f64,
    pub a: f64,
    pub delta: f64,
}

impl PsiProfile {
    pub fn new(c: f64, a: f64, delta: f64) -> Result<Self> {
        if !(c > 0.0 && a > 0.0 && delta > a) {
            return Err(Error::InvalidArgument(format!(
                "ψ profile needs c > 0 and 0 < a < δ, got c = {c}, a = {a}, δ = {delta}"
            )));
        }
        Ok(PsiProfile { c, a, delta })
    }

    pub fn eval(&self, t: f64) -> Result<Triple> {
        if !(t > self.a && t <= self.delta) {
            return Err(Error::InvalidArgument(format!(
                "ψ is defined on ({}, {}], got t = {t}",
                self.a, self.delta
            )));
        }
        Ok(self.eval_continued(t))
    }

    /// Value and derivatives for any `t > a` (the integral runs backwards past `δ`).
    pub fn eval_continued(&self, t: f64) -> Triple {
        let k = (2.0 / self.c).sqrt();
        let l = (t / self.a).ln();
        (self.value(t), -k / l.sqrt(), 0.5 * k / (l * l.sqrt() * t))
    }

    /// `ψ(t)` for `t ≥ a`.
    ///
    /// With `r = a e^{w²}` the integrand `(log r/a)^{-1/2} dr` becomes `2a e^{w²} dw`, which
    /// is smooth down to `w = 0`, so `ψ(a)` is an ordinary integral.
    pub fn value(&self, t: f64) -> f64 {
        let w = |r: f64| (r / self.a).ln().max(0.0).sqrt();
        let (lo, hi) = (w(t), w(self.delta));
        let scale = 2.0 * self.a * hi.max(lo).powi(2).exp();
        let integral = quad::integrate(|x| 2.0 * self.a * (x * x).exp(), lo, hi, 1e-15 * scale);
        (2.0 / self.c).sqrt() * integral
    }

    /// `ψ(a⁺)`.
    pub fn value_at_a(&self) -> f64 {
        self.value(self.a)
    }
}

/// `(c/t) ψ'³ + ψ''`, negative on `(a, δ)`.
pub fn psi_defect(p: &PsiProfile, t: f64) -> f64 {
    let (_, d1, d2) = p.eval_continued(t);
    p.c / t * d1.powi(3) + d2
}

/// `ν φ'³ + φ''`, zero on `(ε, a)`.
pub fn phi_defect(p: &PhiProfile, t: f64) -> f64 {
    let (_, d1, d2) = p.eval_continued(t);
    p.nu * d1.powi(3) + d2
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// erfi(x) = 2/√π Σ x^{2k+1} / (k! (2k+1)), fine for the moderate arguments used here.
    fn erfi(x: f64) -> f64 {
        let mut term = x;
        let mut sum = x;
        for k in 1..200 {
            term *= x * x / k as f64;
            let add = term / (2 * k + 1) as f64;
            sum += add;
            if add.abs() < 1e-18 * sum.abs() {
                break;
            }
        }
        2.0 / std::f64::consts::PI.sqrt() * sum
    }

    fn psi_oracle(c: f64, a: f64, delta: f64, t: f64) -> f64 {
        let w = |r: f64| (r / a).ln().sqrt();
        (2.0 / c).sqrt() * a * std::f64::consts::PI.sqrt() * (erfi(w(delta)) - erfi(w(t)))
    }

    #[test]
    fn phi_examples() {
        let p = PhiProfile::new(1.0, 0.1, 0.0).unwrap();
        assert_eq!(p.eval(0.1).unwrap().0, 0.0);
        assert!((p.value_at_eps() - 0.2f64.sqrt()).abs() < 1e-15);
        assert!(p.eval(0.0).is_err());
        assert!(p.eval(0.2).is_err());
        let q = PhiProfile::new(1.0, 0.1, 0.01).unwrap();
        let expect = 2f64.sqrt() * (0.09f64.sqrt() - 0.04f64.sqrt());
        assert!((q.eval(0.05).unwrap().0 - expect).abs() < 1e-15);
    }

    #[test]
    fn psi_examples() {
        let e = std::f64::consts::E;
        let p = PsiProfile::new(1.0, 1.0, e).unwrap();
        assert_eq!(p.eval(e).unwrap().0, 0.0);
        let v = p.eval(1.0001).unwrap().0;
        assert!((v - psi_oracle(1.0, 1.0, e, 1.0001)).abs() < 1e-8);
        assert!(p.eval(1.0).is_err());
        let at_a = p.value_at_a();
        assert!((at_a - psi_oracle(1.0, 1.0, e, 1.0)).abs() < 1e-12);
        assert!(p.value(1.0 + 1e-8).is_finite());
    }

    #[test]
    fn psi_derivative_matches_quadrature() {
        let p = PsiProfile::new(1.3, 0.05, 2.0).unwrap();
        for t in [0.06, 0.1, 0.5, 1.5] {
            let e = 1e-6 * t;
            let fd = (p.value(t + e) - p.value(t - e)) / (2.0 * e);
            let (_, d1, d2) = p.eval(t).unwrap();
            assert!((fd - d1).abs() < 1e-6 * d1.abs());
            let fd2 = (p.eval(t + e).unwrap().1 - p.eval(t - e).unwrap().1) / (2.0 * e);
            assert!((fd2 - d2).abs() < 1e-5 * d2.abs());
        }
    }

    #[test]
    fn eps_of_a_decreases() {
        for (a0, a1) in [(0.1, 0.05), (0.05, 0.025)] {
            let p0 = PsiProfile::new(1.0, a0, 2.0).unwrap().value_at_a();
            let p1 = PsiProfile::new(1.0, a1, 2.0).unwrap().value_at_a();
            assert!(p1 < p0);
        }
    }

    proptest! {
        #[test]
        fn phi_identity_and_shape(nu in 0.01f64..5.0, a in 0.01f64..1.0, ef in 0.0f64..0.9, tf in 0.001f64..1.0) {
            let eps = ef * a;
            let t = eps + tf * (a - eps);
            let p = PhiProfile::new(nu, a, eps).unwrap();
            let (phi, d1, d2) = p.eval(t).unwrap();
            prop_assert!((nu * d1.powi(3) + d2).abs() <= 1e-12 * d2.abs().max(1.0));
            prop_assert!(phi >= 0.0 && d1 < 0.0 && d2 > 0.0);
        }

        #[test]
        fn psi_inequality(c in 0.05f64..3.0, a in 0.001f64..0.5, span in 1.01f64..20.0, tf in 1e-6f64..1.0) {
            let delta = a * span;
            let t = a + tf * (delta - a);
            let p = PsiProfile::new(c, a, delta).unwrap();
            prop_assert!(psi_defect(&p, t) < 0.0);
            let (v, d1, d2) = p.eval(t).unwrap();
            prop_assert!(v >= 0.0 && d1 < 0.0 && d2 > 0.0);
        }
    }

    #[test]
    fn phi_slope_blows_up_at_eps() {
        let p = PhiProfile::new(0.5, 0.1, 0.02).unwrap();
        let slopes: Vec<f64> = (2..10).map(|k| p.eval(0.02 + 10f64.powi(-k)).unwrap().1).collect();
        assert!(slopes.windows(2).all(|w| w[1] < w[0]));
        assert!(slopes.last().unwrap() < &-1e4);
    }
}
