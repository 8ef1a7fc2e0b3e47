//! Adaptive Dormand–Prince 5(4) integrator for small autonomous-or-not
//! systems, reporting the state at caller-chosen output times.

use crate::error::{Error, Result};

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

// 5th-order weights (also row 7 of the tableau, FSAL).
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;

// Difference between 5th- and embedded 4th-order weights.
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

#[derive(Debug, Clone, Copy)]
pub struct Tolerances<const N: usize> {
    pub rtol: f64,
    pub atol: [f64; N],
    pub max_steps: usize,
}

/// Integrates `dy/dt = f(t, y)` from `outputs[0]` and returns `y` at every
/// output time. `outputs` must be non-decreasing.
pub fn integrate<const N: usize>(
    f: impl Fn(f64, &[f64; N]) -> [f64; N],
    y0: [f64; N],
    outputs: &[f64],
    tol: &Tolerances<N>,
) -> Result<Vec<[f64; N]>> {
    let Some(&t0) = outputs.first() else {
        return Ok(Vec::new());
    };
    let mut out = Vec::with_capacity(outputs.len());
    out.push(y0);

    let mut t = t0;
    let mut y = y0;
    let mut k1 = f(t, &y);
    let span = outputs.last().copied().unwrap_or(t0) - t0;
    let mut h = if span > 0.0 { span * 1e-4 } else { 0.0 };
    let mut steps = 0usize;

    for &t_out in &outputs[1..] {
        if t_out < t {
            return Err(Error::domain("output times must be non-decreasing"));
        }
        while t < t_out {
            steps += 1;
            if steps > tol.max_steps {
                return Err(Error::Integration {
                    t,
                    msg: format!("exceeded {} steps", tol.max_steps),
                });
            }
            let last = h >= t_out - t;
            let step = if last { t_out - t } else { h };

            let stage = |coef: &[(f64, &[f64; N])]| {
                let mut s = y;
                for (c, k) in coef {
                    for i in 0..N {
                        s[i] += step * c * k[i];
                    }
                }
                s
            };
            let k2 = f(t + C2 * step, &stage(&[(A21, &k1)]));
            let k3 = f(t + C3 * step, &stage(&[(A31, &k1), (A32, &k2)]));
            let k4 = f(t + C4 * step, &stage(&[(A41, &k1), (A42, &k2), (A43, &k3)]));
            let k5 = f(
                t + C5 * step,
                &stage(&[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]),
            );
            let k6 = f(
                t + step,
                &stage(&[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]),
            );
            let y_new = stage(&[(B1, &k1), (B3, &k3), (B4, &k4), (B5, &k5), (B6, &k6)]);
            let k7 = f(t + step, &y_new);

            let mut err = 0.0f64;
            for i in 0..N {
                let e = step
                    * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
                let scale = tol.atol[i] + tol.rtol * y[i].abs().max(y_new[i].abs());
                err = err.max((e / scale).abs());
            }
            if !err.is_finite() {
                h = step * 0.1;
                if h < f64::EPSILON * t.abs().max(1.0) {
                    return Err(Error::Integration {
                        t,
                        msg: "non-finite derivative".into(),
                    });
                }
                continue;
            }

            if err <= 1.0 {
                t = if last { t_out } else { t + step };
                y = y_new;
                k1 = k7;
            }
            let factor = if err == 0.0 {
                5.0
            } else {
                (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
            };
            let proposed = step * factor;
            // Keep the previous step size when only shortened to hit an output.
            h = if last && err <= 1.0 { h.max(proposed) } else { proposed };
            if h < f64::EPSILON * t.abs().max(1.0) {
                return Err(Error::Integration {
                    t,
                    msg: "step size underflow".into(),
                });
            }
        }
        out.push(y);
    }
    Ok(out)
}
