//! Closed parametric chart curves `t ↦ γ(t)`, `t ∈ [0, 2π)`.

use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

use crate::error::{Error, Result};

/// Position and first two parameter derivatives.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvePoint {
    pub p: [f64; 2],
    pub d1: [f64; 2],
    pub d2: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Shape {
    Circle {
        radius: f64,
    },
    Ellipse {
        a: f64,
        b: f64,
    },
    /// `|x/a|^p + |y/b|^p = 1` with an even integer exponent: a smooth rounded rectangle.
    #[serde(alias = "rounded-rectangle")]
    Superellipse {
        a: f64,
        b: f64,
        exponent: u32,
    },
    /// Peanut `r(θ) = L (1 − (1 − w) sin²θ)`: lobes at `±L` on the x-axis, waist `wL`.
    Dumbbell {
        half_length: f64,
        waist: f64,
    },
    /// Star-shaped curve `r(θ) = a0 + Σ_k cos[k-1] cos kθ + sin[k-1] sin kθ`.
    Fourier {
        a0: f64,
        #[serde(default)]
        cos: Vec<f64>,
        #[serde(default)]
        sin: Vec<f64>,
    },
}

/// A shape placed in the chart by a rigid motion, optionally traversed clockwise.
///
/// Orientation matters: the domain lies to the left of every boundary curve, so outer
/// boundaries run counter-clockwise and holes clockwise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Curve {
    pub shape: Shape,
    #[serde(default)]
    pub center: [f64; 2],
    #[serde(default)]
    pub rotation: f64,
    #[serde(default)]
    pub reversed: bool,
}

impl Curve {
    pub fn new(shape: Shape) -> Result<Self> {
        shape.validate()?;
        Ok(Curve {
            shape,
            center: [0.0, 0.0],
            rotation: 0.0,
            reversed: false,
        })
    }

    pub fn circle(center: [f64; 2], radius: f64) -> Result<Self> {
        Ok(Curve::new(Shape::Circle { radius })?.translated(center))
    }

    pub fn translated(mut self, by: [f64; 2]) -> Self {
        self.center = [self.center[0] + by[0], self.center[1] + by[1]];
        self
    }

    /// Rotates the curve about the chart origin.
    pub fn rotated(mut self, angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        self.center = [
            c * self.center[0] - s * self.center[1],
            s * self.center[0] + c * self.center[1],
        ];
        self.rotation += angle;
        self
    }

    pub fn reversed(mut self) -> Self {
        self.reversed = !self.reversed;
        self
    }

    pub fn eval(&self, t: f64) -> CurvePoint {
        let (tt, sign) = if self.reversed { (-t, -1.0) } else { (t, 1.0) };
        let local = self.shape.eval(tt);
        let (s, c) = self.rotation.sin_cos();
        let rot = |v: [f64; 2]| [c * v[0] - s * v[1], s * v[0] + c * v[1]];
        let p = rot(local.p);
        let d1 = rot(local.d1);
        CurvePoint {
            p: [p[0] + self.center[0], p[1] + self.center[1]],
            d1: [sign * d1[0], sign * d1[1]],
            d2: rot(local.d2),
        }
    }
}

impl Shape {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidDomain(m));
        match self {
            Shape::Circle { radius } if !(*radius > 0.0) => bad(format!("circle radius {radius}")),
            Shape::Ellipse { a, b } if !(*a > 0.0 && *b > 0.0) => {
                bad(format!("ellipse semi-axes {a}, {b}"))
            }
            Shape::Superellipse { a, b, exponent } => {
                if !(*a > 0.0 && *b > 0.0) {
                    bad(format!("superellipse semi-axes {a}, {b}"))
                } else if *exponent < 2 || exponent % 2 == 1 {
                    bad(format!("superellipse exponent {exponent} must be even and ≥ 2"))
                } else {
                    Ok(())
                }
            }
            Shape::Dumbbell { half_length, waist } => {
                if !(*half_length > 0.0 && *waist > 0.0 && *waist <= 1.0) {
                    bad(format!("dumbbell half-length {half_length}, waist {waist}"))
                } else {
                    Ok(())
                }
            }
            Shape::Fourier { a0, cos, sin } => {
                let wiggle: f64 = cos.iter().chain(sin).map(|c| c.abs()).sum();
                if !(*a0 > wiggle) {
                    bad(format!("Fourier radius a0 = {a0} must exceed Σ|coefficients| = {wiggle}"))
                } else {
                    Ok(())
                }
            }
            _ => Ok(()),
        }
    }

    fn eval(&self, t: f64) -> CurvePoint {
        match self {
            Shape::Circle { radius } => {
                let (s, c) = t.sin_cos();
                CurvePoint {
                    p: [radius * c, radius * s],
                    d1: [-radius * s, radius * c],
                    d2: [-radius * c, -radius * s],
                }
            }
            Shape::Ellipse { a, b } => {
                let (s, c) = t.sin_cos();
                CurvePoint {
                    p: [a * c, b * s],
                    d1: [-a * s, b * c],
                    d2: [-a * c, -b * s],
                }
            }
            Shape::Superellipse { a, b, exponent } => {
                let p = *exponent as i32;
                let pf = p as f64;
                let (s, c) = t.sin_cos();
                let (u, v) = (c / a, s / b);
                // F(θ) = u^p + v^p,  r = F^(-1/p)
                let f = u.powi(p) + v.powi(p);
                let du = -s / a;
                let dv = c / b;
                let f1 = pf * (u.powi(p - 1) * du + v.powi(p - 1) * dv);
                let f2 = pf * (pf - 1.0) * (u.powi(p - 2) * du * du + v.powi(p - 2) * dv * dv)
                    - pf * (u.powi(p - 1) * u + v.powi(p - 1) * v);
                let e = -1.0 / pf;
                let r = f.powf(e);
                let r1 = e * f.powf(e - 1.0) * f1;
                let r2 = e * (e - 1.0) * f.powf(e - 2.0) * f1 * f1 + e * f.powf(e - 1.0) * f2;
                polar(t, r, r1, r2)
            }
            Shape::Dumbbell { half_length, waist } => {
                let k = half_length * (1.0 - waist);
                let (s2, c2) = (2.0 * t).sin_cos();
                let r = half_length - 0.5 * k * (1.0 - c2);
                polar(t, r, -k * s2, -2.0 * k * c2)
            }
            Shape::Fourier { a0, cos, sin } => {
                let (mut r, mut r1, mut r2) = (*a0, 0.0, 0.0);
                for (k, ck) in cos.iter().enumerate() {
                    let kf = (k + 1) as f64;
                    let (s, c) = (kf * t).sin_cos();
                    r += ck * c;
                    r1 -= ck * kf * s;
                    r2 -= ck * kf * kf * c;
                }
                for (k, sk) in sin.iter().enumerate() {
                    let kf = (k + 1) as f64;
                    let (s, c) = (kf * t).sin_cos();
                    r += sk * s;
                    r1 += sk * kf * c;
                    r2 -= sk * kf * kf * s;
                }
                polar(t, r, r1, r2)
            }
        }
    }
}

fn polar(t: f64, r: f64, r1: f64, r2: f64) -> CurvePoint {
    let (s, c) = t.sin_cos();
    CurvePoint {
        p: [r * c, r * s],
        d1: [r1 * c - r * s, r1 * s + r * c],
        d2: [r2 * c - 2.0 * r1 * s - r * c, r2 * s + 2.0 * r1 * c - r * s],
    }
}

/// Uniformly spaced parameter samples, as a closed polyline.
pub(crate) fn sample(curve: &Curve, n: usize) -> Vec<[f64; 2]> {
    (0..n)
        .map(|i| curve.eval(TAU * i as f64 / n as f64).p)
        .collect()
}
