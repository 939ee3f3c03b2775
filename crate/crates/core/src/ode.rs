//! Dormand–Prince 5(4) integrator for small linear systems with real or
//! complex state.

use std::fmt::Debug;
use std::ops::{Add, Div, Mul, Neg, Sub};

use crate::error::{Error, Result};

pub use num_complex::Complex64;

/// Field element the integrator can carry: `f64` or `Complex64`.
pub trait Scalar:
    Copy
    + Send
    + Sync
    + Debug
    + PartialEq
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + Mul<f64, Output = Self>
{
    fn from_real(x: f64) -> Self;
    fn modulus(self) -> f64;
    fn is_finite(self) -> bool;
    fn zero() -> Self {
        Self::from_real(0.0)
    }
}

impl Scalar for f64 {
    #[inline]
    fn from_real(x: f64) -> Self {
        x
    }
    #[inline]
    fn modulus(self) -> f64 {
        self.abs()
    }
    #[inline]
    fn is_finite(self) -> bool {
        f64::is_finite(self)
    }
}

impl Scalar for Complex64 {
    #[inline]
    fn from_real(x: f64) -> Self {
        Complex64::new(x, 0.0)
    }
    #[inline]
    fn modulus(self) -> f64 {
        self.norm()
    }
    #[inline]
    fn is_finite(self) -> bool {
        Complex64::is_finite(self)
    }
}

/// Tolerances and limits for [`Dopri5`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dopri5 {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
}

impl Default for Dopri5 {
    fn default() -> Self {
        Dopri5 {
            rtol: 1e-10,
            atol: 1e-12,
            max_steps: 2_000_000,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Stats {
    pub accepted: usize,
    pub rejected: usize,
    pub evaluations: usize,
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
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const SAFETY: f64 = 0.9;
const FAC_MIN: f64 = 0.2;
const FAC_MAX: f64 = 10.0;

impl Dopri5 {
    pub fn with_tolerances(rtol: f64, atol: f64) -> Self {
        Dopri5 {
            rtol,
            atol,
            ..Self::default()
        }
    }

    fn error_norm<S: Scalar>(&self, err: &[S], y0: &[S], y1: &[S]) -> f64 {
        let mut acc = 0.0;
        for i in 0..err.len() {
            let sc = self.atol + self.rtol * y0[i].modulus().max(y1[i].modulus());
            let e = err[i].modulus() / sc;
            acc += e * e;
        }
        (acc / err.len() as f64).sqrt()
    }

    /// Integrates `y' = rhs(t, y)` from `t0` to `t1` (either direction),
    /// overwriting `y` with the final state.
    ///
    /// Every point of `landings` (ordered along the integration direction,
    /// strictly inside `(t0, t1]`) is hit exactly; `on_landing(i, y)` fires
    /// there. `on_step(t, y)` fires after every accepted step.
    pub fn integrate<S, F>(
        &self,
        mut rhs: F,
        t0: f64,
        t1: f64,
        y: &mut [S],
        landings: &[f64],
        mut on_landing: impl FnMut(usize, &[S]),
        mut on_step: impl FnMut(f64, &[S]),
    ) -> Result<Stats>
    where
        S: Scalar,
        F: FnMut(f64, &[S], &mut [S]),
    {
        let n = y.len();
        let mut stats = Stats::default();
        if t0 == t1 {
            return Ok(stats);
        }
        let dir = (t1 - t0).signum();
        let span = (t1 - t0).abs();
        let zero = S::zero();
        let mut k1 = vec![zero; n];
        let mut k2 = vec![zero; n];
        let mut k3 = vec![zero; n];
        let mut k4 = vec![zero; n];
        let mut k5 = vec![zero; n];
        let mut k6 = vec![zero; n];
        let mut k7 = vec![zero; n];
        let mut tmp = vec![zero; n];
        let mut ynew = vec![zero; n];
        let mut err = vec![zero; n];

        rhs(t0, y, &mut k1);
        stats.evaluations += 1;
        let mut h = self.initial_step(&mut rhs, t0, y, &k1, dir, span, &mut tmp, &mut k2);
        stats.evaluations += 1;

        let mut t = t0;
        let mut next_landing = 0usize;
        let mut last_rejected = false;
        let hmin = 1e-14 * span.max(t0.abs()).max(1.0);

        loop {
            if stats.accepted + stats.rejected > self.max_steps {
                return Err(Error::Numeric(format!(
                    "integrator exceeded {} steps at t = {t}",
                    self.max_steps
                )));
            }
            let target = landings.get(next_landing).copied().unwrap_or(t1);
            let remaining = (target - t) * dir;
            let mut landing = false;
            if h.abs() >= remaining * (1.0 - 1e-12) {
                h = remaining * dir;
                landing = true;
            } else if h.abs() > 0.5 * remaining && !landing {
                // avoid leaving a sliver before the landing point
                h = 0.5 * remaining * dir;
            }
            if h.abs() < hmin {
                if landing && remaining <= hmin {
                    // degenerate landing point coinciding with t
                    if next_landing < landings.len() {
                        on_landing(next_landing, y);
                        next_landing += 1;
                        continue;
                    }
                    return Ok(stats);
                }
                return Err(Error::Numeric(format!("step size underflow at t = {t}")));
            }

            for i in 0..n {
                tmp[i] = y[i] + k1[i] * (h * A21);
            }
            rhs(t + C2 * h, &tmp, &mut k2);
            for i in 0..n {
                tmp[i] = y[i] + (k1[i] * A31 + k2[i] * A32) * h;
            }
            rhs(t + C3 * h, &tmp, &mut k3);
            for i in 0..n {
                tmp[i] = y[i] + (k1[i] * A41 + k2[i] * A42 + k3[i] * A43) * h;
            }
            rhs(t + C4 * h, &tmp, &mut k4);
            for i in 0..n {
                tmp[i] = y[i] + (k1[i] * A51 + k2[i] * A52 + k3[i] * A53 + k4[i] * A54) * h;
            }
            rhs(t + C5 * h, &tmp, &mut k5);
            for i in 0..n {
                tmp[i] = y[i]
                    + (k1[i] * A61 + k2[i] * A62 + k3[i] * A63 + k4[i] * A64 + k5[i] * A65) * h;
            }
            let t_new = if landing { target } else { t + h };
            rhs(t_new, &tmp, &mut k6);
            for i in 0..n {
                ynew[i] = y[i]
                    + (k1[i] * A71 + k3[i] * A73 + k4[i] * A74 + k5[i] * A75 + k6[i] * A76) * h;
            }
            rhs(t_new, &ynew, &mut k7);
            stats.evaluations += 6;
            for i in 0..n {
                err[i] = (k1[i] * E1 + k3[i] * E3 + k4[i] * E4 + k5[i] * E5 + k6[i] * E6 + k7[i] * E7)
                    * h;
            }
            let e = self.error_norm(&err, y, &ynew);
            if !e.is_finite() {
                return Err(Error::Numeric(format!("non-finite state near t = {t}")));
            }

            if e <= 1.0 {
                stats.accepted += 1;
                t = t_new;
                y.copy_from_slice(&ynew);
                std::mem::swap(&mut k1, &mut k7);
                on_step(t, y);
                if landing {
                    if next_landing < landings.len() {
                        on_landing(next_landing, y);
                        next_landing += 1;
                    } else {
                        return Ok(stats);
                    }
                }
                let mut fac = SAFETY * e.max(1e-10).powf(-0.2);
                fac = fac.clamp(FAC_MIN, if last_rejected { 1.0 } else { FAC_MAX });
                // keep the unclipped step proposal when we only shortened to land
                h *= fac;
                last_rejected = false;
            } else {
                stats.rejected += 1;
                let fac = (SAFETY * e.powf(-0.2)).clamp(FAC_MIN, 1.0);
                h *= fac;
                last_rejected = true;
            }
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn initial_step<S: Scalar, F: FnMut(f64, &[S], &mut [S])>(
        &self,
        rhs: &mut F,
        t0: f64,
        y0: &[S],
        f0: &[S],
        dir: f64,
        span: f64,
        tmp: &mut [S],
        f1: &mut [S],
    ) -> f64 {
        let n = y0.len() as f64;
        let mut d0 = 0.0;
        let mut d1 = 0.0;
        for i in 0..y0.len() {
            let sc = self.atol + self.rtol * y0[i].modulus();
            d0 += (y0[i].modulus() / sc).powi(2);
            d1 += (f0[i].modulus() / sc).powi(2);
        }
        let (d0, d1) = ((d0 / n).sqrt(), (d1 / n).sqrt());
        let mut h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
        h0 = h0.min(span);
        for i in 0..y0.len() {
            tmp[i] = y0[i] + f0[i] * (dir * h0);
        }
        rhs(t0 + dir * h0, tmp, f1);
        let mut d2 = 0.0;
        for i in 0..y0.len() {
            let sc = self.atol + self.rtol * y0[i].modulus();
            d2 += ((f1[i] - f0[i]).modulus() / sc).powi(2);
        }
        let d2 = (d2 / n).sqrt() / h0;
        let h1 = if d1.max(d2) <= 1e-15 {
            (h0 * 1e-3).max(1e-6)
        } else {
            (0.01 / d1.max(d2)).powf(0.2)
        };
        dir * (100.0 * h0).min(h1).min(span)
    }
}
