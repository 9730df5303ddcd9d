//! Embedded Dormand–Prince 5(4) integrator for small fixed-size systems.
//!
//! All radial ODE work in this crate (profiles, eigenmodes) is two-dimensional
//! and non-stiff away from the singular endpoints, so a plain adaptive explicit
//! pair with mixed absolute/relative error control is enough. The integrator can
//! land exactly on a list of output abscissae, which is how the uniform sample
//! tables are produced.

use crate::error::{Error, Result};

/// Mixed error tolerance: a component is accepted when
/// `|err_i| <= abs + rel * max(|y_i|, |y_new_i|)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance {
    pub abs: f64,
    pub rel: f64,
}

impl Tolerance {
    pub const fn new(abs: f64, rel: f64) -> Self {
        Self { abs, rel }
    }

    pub fn scaled(self, factor: f64) -> Self {
        Self {
            abs: self.abs * factor,
            rel: self.rel * factor,
        }
    }
}

impl Default for Tolerance {
    fn default() -> Self {
        Self::new(1e-10, 1e-10)
    }
}

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
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

// 5th-order weights minus the embedded 4th-order weights.
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

/// Adaptive Dormand–Prince 5(4) with FSAL and a PI-free classic controller.
#[derive(Debug, Clone)]
pub struct Dopri5 {
    pub tol: Tolerance,
    pub max_steps: usize,
    pub h_min: f64,
}

impl Dopri5 {
    pub fn new(tol: Tolerance) -> Self {
        Self {
            tol,
            max_steps: 200_000,
            h_min: 1e-14,
        }
    }

    /// Integrate from `t0` to `t1` (either direction) and return the end state.
    pub fn solve<const N: usize, F>(&self, rhs: F, t0: f64, y0: [f64; N], t1: f64) -> Result<[f64; N]>
    where
        F: Fn(f64, &[f64; N]) -> [f64; N],
    {
        let (end, _) = self.solve_dense(rhs, t0, y0, t1, &[])?;
        Ok(end)
    }

    /// Integrate from `t0` to `t1`, returning the end state together with the
    /// solution at each abscissa of `outputs`. Outputs must lie in the closed
    /// interval between `t0` and `t1` and be ordered in the direction of
    /// integration; the integrator steps exactly onto each of them.
    pub fn solve_dense<const N: usize, F>(
        &self,
        rhs: F,
        t0: f64,
        y0: [f64; N],
        t1: f64,
        outputs: &[f64],
    ) -> Result<([f64; N], Vec<[f64; N]>)>
    where
        F: Fn(f64, &[f64; N]) -> [f64; N],
    {
        let dir = if t1 >= t0 { 1.0 } else { -1.0 };
        for w in outputs.windows(2) {
            if (w[1] - w[0]) * dir < 0.0 {
                return Err(Error::Integrator {
                    t: w[0],
                    reason: "output abscissae not ordered along integration direction".into(),
                });
            }
        }
        let mut samples = Vec::with_capacity(outputs.len());
        let mut t = t0;
        let mut y = y0;
        let mut k1 = rhs(t, &y);
        check_finite(t, &k1)?;
        let span = (t1 - t0).abs();
        if span == 0.0 {
            samples.extend(outputs.iter().map(|_| y));
            return Ok((y, samples));
        }
        let mut h = self.initial_step(&rhs, t, &y, &k1, dir, span);
        let mut next_out = 0usize;
        while next_out < outputs.len() && (outputs[next_out] - t) * dir <= 0.0 {
            samples.push(y);
            next_out += 1;
        }

        let mut steps = 0usize;
        while (t1 - t) * dir > 0.0 {
            steps += 1;
            if steps > self.max_steps {
                return Err(Error::Integrator {
                    t,
                    reason: format!("exceeded {} steps", self.max_steps),
                });
            }
            let target = if next_out < outputs.len() { outputs[next_out] } else { t1 };
            let mut landing = false;
            let h_nominal = h;
            if (t + h - target) * dir >= 0.0 {
                h = target - t;
                landing = true;
            }
            if h.abs() < self.h_min * t.abs().max(1.0) && !landing {
                return Err(Error::Integrator {
                    t,
                    reason: format!("step size underflow (h = {h:e})"),
                });
            }

            let (y_new, k7, err) = self.attempt(&rhs, t, &y, &k1, h);
            let err = err.max(f64::MIN_POSITIVE);
            if err <= 1.0 && y_new.iter().all(|v| v.is_finite()) {
                t = if landing { target } else { t + h };
                y = y_new;
                k1 = k7;
                check_finite(t, &k1)?;
                while next_out < outputs.len() && (outputs[next_out] - t) * dir <= 0.0 {
                    samples.push(y);
                    next_out += 1;
                }
                let factor = (0.9 * err.powf(-0.2)).clamp(0.2, 5.0);
                // a landing step may have been artificially short
                let h_next = if landing { h_nominal.abs().max(h.abs() * factor) } else { h.abs() * factor };
                h = dir * h_next.min(span);
            } else {
                let factor = if err.is_finite() { (0.9 * err.powf(-0.25)).clamp(0.1, 0.9) } else { 0.1 };
                h *= factor;
            }
        }
        while samples.len() < outputs.len() {
            samples.push(y);
        }
        Ok((y, samples))
    }

    fn initial_step<const N: usize, F>(&self, rhs: &F, t: f64, y: &[f64; N], f0: &[f64; N], dir: f64, span: f64) -> f64
    where
        F: Fn(f64, &[f64; N]) -> [f64; N],
    {
        let mut d0 = 0.0f64;
        let mut d1 = 0.0f64;
        for i in 0..N {
            let sc = self.tol.abs + self.tol.rel * y[i].abs();
            d0 = d0.max((y[i] / sc).abs());
            d1 = d1.max((f0[i] / sc).abs());
        }
        let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
        let h0 = h0.min(span);
        let mut y1 = *y;
        for i in 0..N {
            y1[i] += dir * h0 * f0[i];
        }
        let f1 = rhs(t + dir * h0, &y1);
        let mut d2 = 0.0f64;
        for i in 0..N {
            let sc = self.tol.abs + self.tol.rel * y[i].abs();
            d2 = d2.max(((f1[i] - f0[i]) / sc).abs() / h0);
        }
        let h1 = if d1.max(d2) <= 1e-15 {
            (h0 * 1e-3).max(1e-6)
        } else {
            (0.01 / d1.max(d2)).powf(0.2)
        };
        dir * (100.0 * h0).min(h1).min(span)
    }

    fn attempt<const N: usize, F>(&self, rhs: &F, t: f64, y: &[f64; N], k1: &[f64; N], h: f64) -> ([f64; N], [f64; N], f64)
    where
        F: Fn(f64, &[f64; N]) -> [f64; N],
    {
        let stage = |coeffs: &[(f64, &[f64; N])]| {
            let mut out = *y;
            for (c, k) in coeffs {
                for i in 0..N {
                    out[i] += h * c * k[i];
                }
            }
            out
        };
        let k2 = rhs(t + C2 * h, &stage(&[(A21, k1)]));
        let k3 = rhs(t + C3 * h, &stage(&[(A31, k1), (A32, &k2)]));
        let k4 = rhs(t + C4 * h, &stage(&[(A41, k1), (A42, &k2), (A43, &k3)]));
        let k5 = rhs(t + C5 * h, &stage(&[(A51, k1), (A52, &k2), (A53, &k3), (A54, &k4)]));
        let k6 = rhs(t + h, &stage(&[(A61, k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]));
        let y_new = stage(&[(A71, k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)]);
        let k7 = rhs(t + h, &y_new);
        let mut err = 0.0f64;
        for i in 0..N {
            let e = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
            let sc = self.tol.abs + self.tol.rel * y[i].abs().max(y_new[i].abs());
            err = err.max((e / sc).abs());
        }
        if !err.is_finite() {
            err = f64::INFINITY;
        }
        (y_new, k7, err)
    }
}

fn check_finite<const N: usize>(t: f64, k: &[f64; N]) -> Result<()> {
    if k.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::Integrator {
            t,
            reason: "non-finite derivative".into(),
        })
    }
}
