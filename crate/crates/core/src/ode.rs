//! Adaptive Dormand–Prince 5(4) integration of scalar ODEs.

/// Outcome of a scalar integration that may blow up.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Scalar {
    /// Reached the end point with this value.
    Reached(f64),
    /// `|y|` exceeded the blow-up bound at this time.
    BlowUp(f64),
}

#[derive(Debug, Clone, Copy)]
pub struct Tolerances {
    pub rtol: f64,
    pub atol: f64,
    /// `|y|` above this counts as blow-up.
    pub blowup: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            rtol: 1e-12,
            atol: 1e-14,
            blowup: 1e6,
        }
    }
}

// Dormand–Prince tableau.
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
// b - b* (difference between the 5th and embedded 4th order weights)
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

/// Integrates `y' = f(t, y)` from `(t0, y0)` to `t1 >= t0`.
///
/// Steps are rejected and shrunk when the embedded error estimate is too large, so the
/// step size collapses automatically as the solution approaches a pole.
pub fn integrate<F>(f: F, t0: f64, y0: f64, t1: f64, tol: Tolerances) -> Scalar
where
    F: Fn(f64, f64) -> f64,
{
    if t1 <= t0 {
        return Scalar::Reached(y0);
    }
    let mut t = t0;
    let mut y = y0;
    let mut h = ((t1 - t0) * 1e-3).max(1e-12);
    let mut k1 = f(t, y);
    let min_step = (t1 - t0).abs() * 1e-15;

    loop {
        if y.abs() > tol.blowup || !y.is_finite() {
            return Scalar::BlowUp(t);
        }
        if t >= t1 {
            return Scalar::Reached(y);
        }
        let step = h.min(t1 - t);
        let k2 = f(t + C2 * step, y + step * A21 * k1);
        let k3 = f(t + C3 * step, y + step * (A31 * k1 + A32 * k2));
        let k4 = f(t + C4 * step, y + step * (A41 * k1 + A42 * k2 + A43 * k3));
        let k5 = f(
            t + C5 * step,
            y + step * (A51 * k1 + A52 * k2 + A53 * k3 + A54 * k4),
        );
        let k6 = f(
            t + step,
            y + step * (A61 * k1 + A62 * k2 + A63 * k3 + A64 * k4 + A65 * k5),
        );
        let y_new = y + step * (B1 * k1 + B3 * k3 + B4 * k4 + B5 * k5 + B6 * k6);
        let k7 = f(t + step, y_new);
        let err = step * (E1 * k1 + E3 * k3 + E4 * k4 + E5 * k5 + E6 * k6 + E7 * k7);
        let scale = tol.atol + tol.rtol * y.abs().max(y_new.abs());
        let ratio = if y_new.is_finite() {
            (err / scale).abs()
        } else {
            f64::INFINITY
        };

        if ratio <= 1.0 {
            t += step;
            y = y_new;
            k1 = k7;
            let grow = if ratio == 0.0 {
                5.0
            } else {
                (0.9 * ratio.powf(-0.2)).clamp(0.2, 5.0)
            };
            h = step * grow;
        } else {
            let shrink = if ratio.is_finite() {
                (0.9 * ratio.powf(-0.25)).clamp(0.1, 0.9)
            } else {
                0.1
            };
            h = step * shrink;
            if h < min_step {
                // Step size underflow only happens at a genuine singularity.
                return Scalar::BlowUp(t);
            }
        }
    }
}
