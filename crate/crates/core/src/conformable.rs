//! Conformable fractional calculus primitives.
//!
//! For a differentiable `f` the conformable derivative of order `alpha` is
//! `x^(1-alpha) f'(x)`, and the conformable integral carries the weight
//! `t^(alpha-1)`. Under the substitution `t = x^alpha / alpha` the derivative
//! becomes an ordinary `d/dt`, which is how the forward solver works.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::integrate_adaptive;
use crate::spline::{CubicSpline, EndCondition};

/// Offset at which the right limit of the derivative at `x = 0` is taken.
pub const ZERO_LIMIT_OFFSET: f64 = 1e-8;

const QUADRATURE_TOL: f64 = 1e-13;

/// Fractional order `alpha` in (0, 1].
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Order(f64);

impl Order {
    pub fn new(alpha: f64) -> Result<Self> {
        if alpha.is_finite() && alpha > 0.0 && alpha <= 1.0 {
            Ok(Order(alpha))
        } else {
            Err(Error::Domain(format!("alpha out of (0,1]: {alpha}")))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }

    /// Length of the interval `[0, pi]` in t-coordinates, `pi^alpha / alpha`.
    pub fn t_end(self) -> f64 {
        PI.powf(self.0) / self.0
    }

    /// `x^alpha / alpha` without the sign check.
    #[inline]
    pub(crate) fn t_of(self, x: f64) -> f64 {
        if self.0 == 1.0 {
            x
        } else {
            x.powf(self.0) / self.0
        }
    }

    /// `(alpha t)^(1/alpha)` without the sign check.
    #[inline]
    pub(crate) fn x_of(self, t: f64) -> f64 {
        if self.0 == 1.0 {
            t
        } else {
            (self.0 * t).powf(1.0 / self.0)
        }
    }
}

impl TryFrom<f64> for Order {
    type Error = Error;
    fn try_from(v: f64) -> Result<Self> {
        Order::new(v)
    }
}

impl From<Order> for f64 {
    fn from(o: Order) -> f64 {
        o.0
    }
}

impl fmt::Display for Order {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Maps `x >= 0` to `t = x^alpha / alpha`.
pub fn to_t(x: f64, order: Order) -> Result<f64> {
    if !(x >= 0.0) {
        return Err(Error::Domain(format!("to_t needs x >= 0, got {x}")));
    }
    Ok(order.t_of(x))
}

/// Inverse of [`to_t`]: `x = (alpha t)^(1/alpha)`.
pub fn to_x(t: f64, order: Order) -> Result<f64> {
    if !(t >= 0.0) {
        return Err(Error::Domain(format!("to_x needs t >= 0, got {t}")));
    }
    Ok(order.x_of(t))
}

/// Which coordinate a sampled function is expressed in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Coordinate {
    X,
    T,
}

pub type RealFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Clone)]
enum Samples {
    Callable(RealFn),
    Grid {
        values: Vec<f64>,
        step: f64,
        spline: CubicSpline,
    },
}

/// A real function on a closed interval, either callable or sampled on a
/// uniform grid (cubic-spline interpolated between samples).
#[derive(Clone)]
pub struct SampledFunction {
    lower: f64,
    upper: f64,
    coordinate: Coordinate,
    samples: Samples,
}

impl fmt::Debug for SampledFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match &self.samples {
            Samples::Callable(_) => "callable".to_string(),
            Samples::Grid { values, .. } => format!("grid[{}]", values.len()),
        };
        f.debug_struct("SampledFunction")
            .field("domain", &(self.lower, self.upper))
            .field("coordinate", &self.coordinate)
            .field("samples", &kind)
            .finish()
    }
}

fn check_domain(lower: f64, upper: f64) -> Result<()> {
    if !(lower >= 0.0 && upper > lower && upper.is_finite()) {
        return Err(Error::Domain(format!(
            "sampled function domain must satisfy 0 <= a < b, got [{lower}, {upper}]"
        )));
    }
    Ok(())
}

impl SampledFunction {
    pub fn callable(
        lower: f64,
        upper: f64,
        coordinate: Coordinate,
        f: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Result<Self> {
        check_domain(lower, upper)?;
        Ok(SampledFunction {
            lower,
            upper,
            coordinate,
            samples: Samples::Callable(Arc::new(f)),
        })
    }

    /// Uniform-grid samples `values[i] = f(lower + i * step)`.
    ///
    /// The interpolating spline is clamped with fourth-order one-sided
    /// difference slopes at both ends.
    pub fn grid(lower: f64, upper: f64, coordinate: Coordinate, values: Vec<f64>) -> Result<Self> {
        check_domain(lower, upper)?;
        if values.len() < 5 {
            return Err(Error::Usage(format!(
                "grid needs at least 5 samples, got {}",
                values.len()
            )));
        }
        let n = values.len();
        let step = (upper - lower) / (n - 1) as f64;
        let knots: Vec<f64> = (0..n).map(|i| lower + i as f64 * step).collect();
        let d0 = forward_stencil(&values[..5], step);
        let dn = -forward_stencil(
            &[values[n - 1], values[n - 2], values[n - 3], values[n - 4], values[n - 5]],
            step,
        );
        let spline = CubicSpline::new(knots, values.clone(), EndCondition::Clamped(d0, dn))?;
        Ok(SampledFunction {
            lower,
            upper,
            coordinate,
            samples: Samples::Grid {
                values,
                step,
                spline,
            },
        })
    }

    /// Samples `f` on `count` uniform nodes of `[lower, upper]`.
    pub fn sample(
        lower: f64,
        upper: f64,
        coordinate: Coordinate,
        count: usize,
        f: impl Fn(f64) -> f64,
    ) -> Result<Self> {
        if count < 5 {
            return Err(Error::Usage("grid needs at least 5 samples".into()));
        }
        let step = (upper - lower) / (count - 1) as f64;
        let values = (0..count)
            .map(|i| {
                let x = if i + 1 == count { upper } else { lower + i as f64 * step };
                f(x)
            })
            .collect();
        Self::grid(lower, upper, coordinate, values)
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.lower, self.upper)
    }

    pub fn coordinate(&self) -> Coordinate {
        self.coordinate
    }

    /// Grid samples, if this function is sampled.
    pub fn grid_values(&self) -> Option<&[f64]> {
        match &self.samples {
            Samples::Grid { values, .. } => Some(values),
            Samples::Callable(_) => None,
        }
    }

    /// Evaluates without a domain check (splines extrapolate).
    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        match &self.samples {
            Samples::Callable(f) => f(x),
            Samples::Grid { spline, .. } => spline.eval(x),
        }
    }

    pub fn eval_checked(&self, x: f64) -> Result<f64> {
        self.contains(x)?;
        Ok(self.eval(x))
    }

    fn contains(&self, x: f64) -> Result<()> {
        let slack = 1e-12 * (self.upper - self.lower);
        if !(x >= self.lower - slack && x <= self.upper + slack) {
            return Err(Error::Domain(format!(
                "x = {x} outside [{}, {}]",
                self.lower, self.upper
            )));
        }
        Ok(())
    }

    /// Ordinary first derivative: fourth-order central differences in the
    /// interior, one-sided near the ends. Off-node points of a grid use the
    /// spline derivative.
    pub fn derivative(&self, x: f64) -> Result<f64> {
        self.contains(x)?;
        let d = match &self.samples {
            Samples::Callable(f) => {
                let h = (1e-3 * x.abs().max(ZERO_LIMIT_OFFSET)).min((self.upper - self.lower) / 8.0);
                stencil_derivative(&**f, x, h, self.lower, self.upper)
            }
            Samples::Grid {
                values,
                step,
                spline,
            } => {
                let pos = (x - self.lower) / step;
                let i = pos.round();
                if (pos - i).abs() < 1e-9 {
                    grid_stencil(values, i as usize, *step)
                } else {
                    spline.derivative(x)
                }
            }
        };
        if d.is_finite() {
            Ok(d)
        } else {
            Err(Error::Numeric(format!("non-finite derivative at x = {x}")))
        }
    }
}

// f'(x0) from f(x0), f(x0+h), ..., f(x0+4h).
fn forward_stencil(v: &[f64], h: f64) -> f64 {
    (-25.0 * v[0] + 48.0 * v[1] - 36.0 * v[2] + 16.0 * v[3] - 3.0 * v[4]) / (12.0 * h)
}

fn central_stencil(m2: f64, m1: f64, p1: f64, p2: f64, h: f64) -> f64 {
    (m2 - 8.0 * m1 + 8.0 * p1 - p2) / (12.0 * h)
}

fn stencil_derivative(f: &dyn Fn(f64) -> f64, x: f64, h: f64, lower: f64, upper: f64) -> f64 {
    if x - 2.0 * h >= lower && x + 2.0 * h <= upper {
        central_stencil(f(x - 2.0 * h), f(x - h), f(x + h), f(x + 2.0 * h), h)
    } else if x + 4.0 * h <= upper {
        forward_stencil(&[f(x), f(x + h), f(x + 2.0 * h), f(x + 3.0 * h), f(x + 4.0 * h)], h)
    } else {
        -forward_stencil(&[f(x), f(x - h), f(x - 2.0 * h), f(x - 3.0 * h), f(x - 4.0 * h)], h)
    }
}

fn grid_stencil(v: &[f64], i: usize, h: f64) -> f64 {
    let n = v.len();
    if i >= 2 && i + 2 < n {
        central_stencil(v[i - 2], v[i - 1], v[i + 1], v[i + 2], h)
    } else if i + 4 < n {
        forward_stencil(&v[i..i + 5], h)
    } else {
        -forward_stencil(&[v[i], v[i - 1], v[i - 2], v[i - 3], v[i - 4]], h)
    }
}

/// Conformable derivative `x^(1-alpha) f'(x)`; at `x = 0` the right limit is
/// taken at [`ZERO_LIMIT_OFFSET`].
pub fn conformable_derivative(f: &SampledFunction, x: f64, order: Order) -> Result<f64> {
    f.contains(x)?;
    let at = if x == 0.0 { ZERO_LIMIT_OFFSET } else { x };
    let d = at.powf(1.0 - order.value()) * f.derivative(at)?;
    if d.is_finite() {
        Ok(d)
    } else {
        Err(Error::Numeric(format!("non-finite conformable derivative at x = {x}")))
    }
}

/// Conformable integral `int_0^b t^(alpha-1) f(t) dt`, evaluated in the
/// variable `s = t^alpha / alpha` where the weight disappears.
pub fn conformable_integral(f: &SampledFunction, b: f64, order: Order) -> Result<f64> {
    if !(b >= 0.0) {
        return Err(Error::Domain(format!("integral upper limit must be >= 0, got {b}")));
    }
    if f.lower != 0.0 {
        return Err(Error::Domain("conformable integral starts at 0".into()));
    }
    f.contains(b)?;
    let s_end = order.t_of(b);
    let v = integrate_adaptive(0.0, s_end, QUADRATURE_TOL, &|s: f64| f.eval(order.x_of(s)));
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::Numeric("non-finite conformable integral".into()))
    }
}

/// Residual of the conformable chain rule for `f(g(x))`:
/// `|D(f o g)(x) - (D f)(g(x)) (D g)(x) g(x)^(alpha-1)|`.
pub fn chain_rule_check(
    f: impl Fn(f64) -> f64 + Send + Sync + 'static + Clone,
    g: impl Fn(f64) -> f64 + Send + Sync + 'static + Clone,
    x: f64,
    order: Order,
) -> Result<f64> {
    if !(x > 0.0) {
        return Err(Error::Domain(format!("chain rule needs x > 0, got {x}")));
    }
    let gx = g(x);
    if !(gx > 0.0) {
        return Err(Error::Domain(format!("chain rule needs g(x) > 0, got {gx}")));
    }
    let upper = 4.0 * x.max(gx) + 1.0;
    let (fc, gc) = (f.clone(), g.clone());
    let composite = SampledFunction::callable(0.0, upper, Coordinate::X, move |s| fc(gc(s)))?;
    let outer = SampledFunction::callable(0.0, upper, Coordinate::X, f)?;
    let inner = SampledFunction::callable(0.0, upper, Coordinate::X, g)?;
    let lhs = conformable_derivative(&composite, x, order)?;
    let rhs = conformable_derivative(&outer, gx, order)?
        * conformable_derivative(&inner, x, order)?
        * gx.powf(order.value() - 1.0);
    Ok((lhs - rhs).abs())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn alpha(a: f64) -> Order {
        Order::new(a).unwrap()
    }

    #[test]
    fn order_bounds() {
        assert!(Order::new(0.0).is_err());
        assert!(Order::new(1.5).is_err());
        assert!(Order::new(f64::NAN).is_err());
        assert!(Order::new(1.0).is_ok());
    }

    #[test]
    fn power_rule() {
        let f = SampledFunction::callable(0.0, 4.0, Coordinate::X, |x| x * x).unwrap();
        let d = conformable_derivative(&f, 1.0, alpha(0.5)).unwrap();
        assert!((d - 2.0).abs() < 1e-10);
    }

    #[test]
    fn constants_have_zero_derivative() {
        let f = SampledFunction::callable(0.0, 4.0, Coordinate::X, |_| 3.5).unwrap();
        for a in [0.2, 0.5, 1.0] {
            for x in [0.0, 0.3, 2.0, 4.0] {
                assert_eq!(conformable_derivative(&f, x, alpha(a)).unwrap(), 0.0);
            }
        }
    }

    #[test]
    fn derivative_matches_limit_quotient() {
        let a = 0.5;
        let x: f64 = 4.0;
        let f = SampledFunction::callable(0.0, 10.0, Coordinate::X, f64::sin).unwrap();
        let d = conformable_derivative(&f, x, alpha(a)).unwrap();
        let h = 1e-6;
        let quotient = ((x + h * x.powf(1.0 - a)).sin() - x.sin()) / h;
        assert!((d - 2.0 * 4f64.cos()).abs() < 1e-10);
        assert!((d - quotient).abs() < 1e-5);
    }

    #[test]
    fn derivative_at_zero_is_right_limit() {
        // D^a x^a = a for every x > 0, so the limit at 0 is a.
        let a = 0.4;
        let f = SampledFunction::callable(0.0, 1.0, Coordinate::X, move |x: f64| x.powf(a)).unwrap();
        let d = conformable_derivative(&f, 0.0, alpha(a)).unwrap();
        assert!((d - a).abs() < 1e-6, "{d}");
    }

    #[test]
    fn derivative_outside_domain_is_rejected() {
        let f = SampledFunction::callable(0.0, 1.0, Coordinate::X, |x| x).unwrap();
        assert!(matches!(
            conformable_derivative(&f, 1.5, alpha(0.5)),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn grid_derivative_uses_stencils() {
        let f = SampledFunction::sample(0.0, PI, Coordinate::X, 401, f64::sin).unwrap();
        let step = PI / 400.0;
        for i in [0usize, 1, 57, 399, 400] {
            let x = i as f64 * step;
            let d = f.derivative(x).unwrap();
            assert!((d - x.cos()).abs() < 1e-8, "i={i}: {d} vs {}", x.cos());
        }
        assert!((f.derivative(1.2345).unwrap() - 1.2345f64.cos()).abs() < 1e-6);
    }

    #[test]
    fn integral_closed_forms() {
        let one = SampledFunction::callable(0.0, PI, Coordinate::X, |_| 1.0).unwrap();
        for a in [0.3, 0.5, 0.8, 1.0] {
            let v = conformable_integral(&one, PI, alpha(a)).unwrap();
            assert!((v - PI.powf(a) / a).abs() < 1e-12);
        }
        assert!((conformable_integral(&one, PI, alpha(1.0)).unwrap() - PI).abs() < 1e-14);
        let id = SampledFunction::callable(0.0, 1.0, Coordinate::X, |t| t).unwrap();
        let v = conformable_integral(&id, 1.0, alpha(0.5)).unwrap();
        assert!((v - 2.0 / 3.0).abs() < 1e-13);
    }

    #[test]
    fn integral_rejects_negative_limit() {
        let one = SampledFunction::callable(0.0, 1.0, Coordinate::X, |_| 1.0).unwrap();
        assert!(matches!(
            conformable_integral(&one, -0.1, alpha(0.5)),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn coordinate_transform() {
        assert_eq!(to_t(PI, alpha(1.0)).unwrap(), PI);
        assert!((to_t(PI, alpha(0.5)).unwrap() - 2.0 * PI.sqrt()).abs() < 1e-14);
        for x in [0.1, 1.0, 3.0] {
            let back = to_x(to_t(x, alpha(0.3)).unwrap(), alpha(0.3)).unwrap();
            assert!((back - x).abs() < 1e-12);
        }
        assert!(to_t(-1.0, alpha(0.5)).is_err());
        assert!(to_x(-1.0, alpha(0.5)).is_err());
    }

    #[test]
    fn chain_rule_examples() {
        let r = chain_rule_check(|u| u, |x| x, 1.7, alpha(0.6)).unwrap();
        assert!(r < 1e-12);
        let r = chain_rule_check(|u| u * u, |x| x + 1.0, 1.0, alpha(0.5)).unwrap();
        assert!(r < 1e-8, "{r}");
        let a = 0.7;
        let r = chain_rule_check(f64::sin, move |x: f64| x.powf(a) / a, 2.0, alpha(a)).unwrap();
        assert!(r < 1e-8, "{r}");
        assert!(matches!(
            chain_rule_check(|u| u, |x| x - 1.0, 1.0, alpha(0.5)),
            Err(Error::Domain(_))
        ));
    }
}
