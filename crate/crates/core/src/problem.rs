//! The boundary value problem: order, potential and the two Robin
//! coefficients, plus its JSON form.

use std::f64::consts::PI;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::conformable::{Coordinate, Order, SampledFunction};
use crate::error::{Error, Result};
use crate::json;
use crate::quadrature::integrate_adaptive;

/// Number of uniform x-nodes used when a non-grid potential is written out.
pub const EXPORT_GRID_NODES: usize = 1025;

/// `sum_k c_k cos(k pi t / span)` on `[0, span]`.
#[derive(Debug, Clone, PartialEq)]
pub struct CosineSeries {
    coeffs: Vec<f64>,
    span: f64,
}

impl CosineSeries {
    pub fn new(coeffs: Vec<f64>, span: f64) -> Self {
        CosineSeries { coeffs, span }
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn span(&self) -> f64 {
        self.span
    }

    #[inline]
    pub fn eval(&self, t: f64) -> f64 {
        let theta = PI * t / self.span;
        let c1 = theta.cos();
        let (mut prev, mut cur) = (c1, 1.0);
        let mut acc = 0.0;
        for &c in &self.coeffs {
            acc += c * cur;
            let next = 2.0 * c1 * cur - prev;
            prev = cur;
            cur = next;
        }
        acc
    }

    /// Fills `out[k] = cos(k pi t / span)`.
    #[inline]
    pub fn basis(span: f64, t: f64, out: &mut [f64]) {
        let theta = PI * t / span;
        let c1 = theta.cos();
        let (mut prev, mut cur) = (c1, 1.0);
        for o in out.iter_mut() {
            *o = cur;
            let next = 2.0 * c1 * cur - prev;
            prev = cur;
            cur = next;
        }
    }
}

/// Potential on `[0, pi/2]` assembled from a frozen tail on `[pi/2, pi]`:
/// a linear C¹ match to the tail at the midpoint plus cosine modes
/// `cos(k pi t / t_mid) - (-1)^k`, `k = 1..=M`, which vanish to first order
/// at `t_mid`.
#[derive(Debug, Clone)]
pub struct HalfPotential {
    coeffs: Vec<f64>,
    t_mid: f64,
    anchor_value: f64,
    anchor_slope: f64,
    tail: SampledFunction,
}

impl HalfPotential {
    /// `tail` must be an x-coordinate function on exactly `[pi/2, pi]`.
    pub fn new(order: Order, coeffs: Vec<f64>, tail: SampledFunction) -> Result<Self> {
        let (a, b) = tail.domain();
        if tail.coordinate() != Coordinate::X
            || (a - PI / 2.0).abs() > 1e-12
            || (b - PI).abs() > 1e-12
        {
            return Err(Error::Usage(
                "frozen tail must be given in x-coordinates on [pi/2, pi]".into(),
            ));
        }
        let x_mid = PI / 2.0;
        let t_mid = order.t_of(x_mid);
        let anchor_value = tail.eval(x_mid);
        // dq/dt = x^(1-alpha) dq/dx
        let anchor_slope = x_mid.powf(1.0 - order.value()) * tail.derivative(x_mid)?;
        Ok(HalfPotential {
            coeffs,
            t_mid,
            anchor_value,
            anchor_slope,
            tail,
        })
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn tail(&self) -> &SampledFunction {
        &self.tail
    }

    pub fn t_mid(&self) -> f64 {
        self.t_mid
    }

    pub fn with_coeffs(&self, coeffs: Vec<f64>) -> Self {
        HalfPotential {
            coeffs,
            ..self.clone()
        }
    }

    /// Fills `out[k-1] = cos(k pi t / t_mid) - (-1)^k` for `t < t_mid`, zero beyond.
    #[inline]
    pub fn basis(t_mid: f64, t: f64, out: &mut [f64]) {
        if t >= t_mid {
            out.iter_mut().for_each(|o| *o = 0.0);
            return;
        }
        let theta = PI * t / t_mid;
        let c1 = theta.cos();
        let (mut prev, mut cur) = (1.0, c1);
        let mut sign = -1.0;
        for o in out.iter_mut() {
            *o = cur - sign;
            let next = 2.0 * c1 * cur - prev;
            prev = cur;
            cur = next;
            sign = -sign;
        }
    }

    #[inline]
    fn eval_t(&self, t: f64, order: Order) -> f64 {
        if t >= self.t_mid {
            return self.tail.eval(order.x_of(t));
        }
        let theta = PI * t / self.t_mid;
        let c1 = theta.cos();
        let (mut prev, mut cur) = (1.0, c1);
        let mut sign = -1.0;
        let mut acc = self.anchor_value + self.anchor_slope * (t - self.t_mid);
        for &c in &self.coeffs {
            acc += c * (cur - sign);
            let next = 2.0 * c1 * cur - prev;
            prev = cur;
            cur = next;
            sign = -sign;
        }
        acc
    }
}

/// The potential `q`, stored in whichever form it was supplied.
#[derive(Debug, Clone)]
pub enum Potential {
    /// Cosine series in t-coordinates over `[0, pi^alpha / alpha]`.
    Cosine(CosineSeries),
    /// A function of `x` (or of `t`, per its coordinate tag).
    Sampled(SampledFunction),
    /// Free half plus frozen tail.
    Half(HalfPotential),
}

impl Potential {
    pub fn zero(order: Order) -> Self {
        Potential::Cosine(CosineSeries::new(vec![], order.t_end()))
    }

    pub fn constant(order: Order, c: f64) -> Self {
        Potential::Cosine(CosineSeries::new(vec![c], order.t_end()))
    }

    pub fn cosine(order: Order, coeffs: Vec<f64>) -> Self {
        Potential::Cosine(CosineSeries::new(coeffs, order.t_end()))
    }

    /// A callable `q(x)` on `[0, pi]`.
    pub fn from_fn(f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Potential::Sampled(
            SampledFunction::callable(0.0, PI, Coordinate::X, f).expect("[0, pi] is a valid domain"),
        )
    }

    /// Uniform x-grid samples on `[0, pi]`.
    pub fn grid(values: Vec<f64>) -> Result<Self> {
        Ok(Potential::Sampled(SampledFunction::grid(0.0, PI, Coordinate::X, values)?))
    }

    /// `q` in t-coordinates.
    #[inline]
    pub fn eval_t(&self, t: f64, order: Order) -> f64 {
        match self {
            Potential::Cosine(s) => s.eval(t),
            Potential::Sampled(f) => match f.coordinate() {
                Coordinate::X => f.eval(order.x_of(t)),
                Coordinate::T => f.eval(t),
            },
            Potential::Half(h) => h.eval_t(t, order),
        }
    }

    /// `q` in x-coordinates.
    pub fn eval_x(&self, x: f64, order: Order) -> f64 {
        match self {
            Potential::Sampled(f) if f.coordinate() == Coordinate::X => f.eval(x),
            Potential::Half(h) if x >= PI / 2.0 => h.tail.eval(x),
            _ => self.eval_t(order.t_of(x), order),
        }
    }

    /// Points in t where the potential is only finitely smooth.
    pub fn breakpoints(&self) -> Vec<f64> {
        match self {
            Potential::Half(h) => vec![h.t_mid],
            _ => vec![],
        }
    }

    /// `int_0^pi q d_alpha x`, i.e. the plain integral of `q` over `[0, T]` in t.
    pub fn conformable_mean_integral(&self, order: Order) -> f64 {
        match self {
            Potential::Cosine(s) => s.coeffs.first().copied().unwrap_or(0.0) * s.span,
            _ => {
                let t_end = order.t_end();
                let mut cuts = vec![0.0];
                cuts.extend(self.breakpoints());
                cuts.push(t_end);
                cuts.windows(2)
                    .map(|w| integrate_adaptive(w[0], w[1], 1e-13, &|t| self.eval_t(t, order)))
                    .sum()
            }
        }
    }

    fn check(&self, order: Order) -> Result<()> {
        match self {
            Potential::Cosine(s) => {
                if (s.span - order.t_end()).abs() > 1e-12 * order.t_end() {
                    return Err(Error::Usage(
                        "cosine potential span does not match pi^alpha/alpha".into(),
                    ));
                }
                if s.coeffs.iter().any(|c| !c.is_finite()) {
                    return Err(Error::Numeric("non-finite cosine coefficient".into()));
                }
            }
            Potential::Sampled(f) => {
                let (a, b) = f.domain();
                let (lo, hi) = match f.coordinate() {
                    Coordinate::X => (0.0, PI),
                    Coordinate::T => (0.0, order.t_end()),
                };
                if (a - lo).abs() > 1e-12 || (b - hi).abs() > 1e-12 * hi.max(1.0) {
                    return Err(Error::Usage(format!(
                        "potential must be defined on [{lo}, {hi}], got [{a}, {b}]"
                    )));
                }
            }
            Potential::Half(h) => {
                if (h.t_mid - order.t_of(PI / 2.0)).abs() > 1e-12 {
                    return Err(Error::Usage("half potential built for a different alpha".into()));
                }
            }
        }
        Ok(())
    }
}

/// `L_alpha(q, h, H)`: `-D D y + q y = lambda y` on `(0, pi)` with
/// `D y(0) - h y(0) = 0` and `D y(pi) + H y(pi) = 0`.
#[derive(Debug, Clone)]
pub struct Problem {
    pub order: Order,
    pub q: Potential,
    pub h: f64,
    pub big_h: f64,
}

impl Problem {
    pub fn new(order: Order, q: Potential, h: f64, big_h: f64) -> Result<Self> {
        if !h.is_finite() || !big_h.is_finite() {
            return Err(Error::Domain("boundary coefficients must be finite".into()));
        }
        q.check(order)?;
        Ok(Problem { order, q, h, big_h })
    }

    /// `q = 0`, `h = H = 0`.
    pub fn trivial(alpha: f64) -> Result<Self> {
        let order = Order::new(alpha)?;
        Self::new(order, Potential::zero(order), 0.0, 0.0)
    }

    pub fn from_fn(
        alpha: f64,
        q: impl Fn(f64) -> f64 + Send + Sync + 'static,
        h: f64,
        big_h: f64,
    ) -> Result<Self> {
        Self::new(Order::new(alpha)?, Potential::from_fn(q), h, big_h)
    }

    /// A smooth potential with a few random cosine modes in t-coordinates,
    /// amplitudes decaying like `1/(1+k^2)`.
    pub fn random_smooth(seed: u64, alpha: f64, modes: usize, h: f64, big_h: f64) -> Result<Self> {
        let order = Order::new(alpha)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let coeffs = (0..modes)
            .map(|k| rng.random_range(-1.0..1.0) / (1.0 + (k * k) as f64))
            .collect();
        Self::new(order, Potential::cosine(order, coeffs), h, big_h)
    }

    /// Length of the interval in t-coordinates.
    pub fn t_end(&self) -> f64 {
        self.order.t_end()
    }

    pub fn with_potential(&self, q: Potential) -> Result<Self> {
        Self::new(self.order, q, self.h, self.big_h)
    }

    /// `omega = h + H + (1/2) int_0^pi q d_alpha t`, the first spectral moment.
    pub fn omega(&self) -> f64 {
        self.h + self.big_h + 0.5 * self.q.conformable_mean_integral(self.order)
    }

    /// JSON value `{"alpha", "h", "H", "q": {"kind", "nodes"|"coeffs"}}`.
    /// Non-cosine potentials are written as a uniform x-grid.
    pub fn to_json(&self) -> Value {
        let q = match &self.q {
            Potential::Cosine(s) => json!({"kind": "cosine", "coeffs": s.coeffs}),
            Potential::Sampled(f)
                if f.coordinate() == Coordinate::X && f.domain() == (0.0, PI) && f.grid_values().is_some() =>
            {
                json!({"kind": "grid", "nodes": f.grid_values().unwrap()})
            }
            other => {
                let n = EXPORT_GRID_NODES;
                let nodes: Vec<f64> = (0..n)
                    .map(|i| {
                        let x = if i + 1 == n { PI } else { PI * i as f64 / (n - 1) as f64 };
                        other.eval_x(x, self.order)
                    })
                    .collect();
                json!({"kind": "grid", "nodes": nodes})
            }
        };
        json!({"alpha": self.order.value(), "h": self.h, "H": self.big_h, "q": q})
    }

    pub fn from_json(value: &Value) -> Result<Self> {
        let obj = json::object(value, "problem")?;
        let alpha = json::get_f64(obj, "alpha")?;
        let order = Order::new(alpha).map_err(|_| Error::parse("alpha", "alpha out of (0,1]"))?;
        let h = json::get_f64(obj, "h")?;
        let big_h = json::get_f64(obj, "H")?;
        let q = json::object(json::get(obj, "q")?, "q")?;
        let potential = match json::get_str(q, "kind").map_err(|_| Error::parse("q.kind", "missing or not a string"))? {
            "cosine" => {
                let coeffs = json::get_f64_list(q, "coeffs")
                    .map_err(|e| prefix_field(e, "q."))?;
                Potential::cosine(order, coeffs)
            }
            "grid" => {
                let nodes = json::get_f64_list(q, "nodes").map_err(|e| prefix_field(e, "q."))?;
                if nodes.len() < 5 {
                    return Err(Error::parse("q.nodes", "need at least 5 grid nodes"));
                }
                Potential::grid(nodes)?
            }
            other => {
                return Err(Error::parse(
                    "q.kind",
                    format!("unknown potential kind `{other}` (expected grid or cosine)"),
                ))
            }
        };
        Problem::new(order, potential, h, big_h)
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let value: Value = serde_json::from_str(&text)
            .map_err(|e| Error::parse("problem", format!("malformed JSON: {e}")))?;
        Self::from_json(&value)
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, json::to_string_full(&self.to_json())?)?;
        Ok(())
    }
}

pub(crate) fn prefix_field(e: Error, prefix: &str) -> Error {
    match e {
        Error::Parse { field, message } => Error::Parse {
            field: format!("{prefix}{field}"),
            message,
        },
        other => other,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cosine_recurrence_matches_direct_sum() {
        let s = CosineSeries::new(vec![0.3, -1.0, 0.5, 0.25, 2.0], 2.7);
        for t in [0.0, 0.4, 1.9, 2.7] {
            let direct: f64 = s
                .coeffs()
                .iter()
                .enumerate()
                .map(|(k, c)| c * (k as f64 * PI * t / 2.7).cos())
                .sum();
            assert!((s.eval(t) - direct).abs() < 1e-13);
        }
    }

    #[test]
    fn half_basis_vanishes_to_first_order_at_midpoint() {
        let t_mid = 1.3;
        let mut at = [0.0; 6];
        let mut near = [0.0; 6];
        HalfPotential::basis(t_mid, t_mid * (1.0 - 1e-12), &mut at);
        HalfPotential::basis(t_mid, t_mid - 1e-4, &mut near);
        for k in 0..6 {
            assert!(at[k].abs() < 1e-10);
            // quadratic contact: |b_k| <= (k pi / t_mid)^2 eps^2 / 2
            let w = (k + 1) as f64 * PI / t_mid;
            assert!(near[k].abs() <= 0.5 * w * w * 1e-8 * (1.0 + 1e-6));
        }
    }

    #[test]
    fn half_potential_is_c1_and_keeps_tail() {
        let order = Order::new(0.7).unwrap();
        let tail = SampledFunction::sample(PI / 2.0, PI, Coordinate::X, 257, |x| x * (PI - x) / 4.0)
            .unwrap();
        let half = HalfPotential::new(order, vec![0.1, -0.2, 0.05], tail.clone()).unwrap();
        let q = Potential::Half(half);
        let tm = order.t_of(PI / 2.0);
        let eps = 1e-7;
        let left = q.eval_t(tm - eps, order);
        let right = q.eval_t(tm + eps, order);
        assert!((left - right).abs() < 1e-8);
        let dl = (q.eval_t(tm - eps, order) - q.eval_t(tm - 2.0 * eps, order)) / eps;
        let dr = (q.eval_t(tm + 2.0 * eps, order) - q.eval_t(tm + eps, order)) / eps;
        assert!((dl - dr).abs() < 1e-4, "{dl} vs {dr}");
        let step = (PI / 2.0) / 256.0;
        for i in 0..=256 {
            let x = PI / 2.0 + i as f64 * step;
            assert_eq!(q.eval_x(x, order), tail.eval(x));
        }
    }

    #[test]
    fn json_round_trip_and_errors() {
        let p = Problem::random_smooth(3, 0.6, 4, 0.5, -0.25).unwrap();
        let text = json::to_string_full(&p.to_json()).unwrap();
        let back = Problem::from_json(&serde_json::from_str(&text).unwrap()).unwrap();
        assert_eq!(back.h, p.h);
        assert_eq!(back.big_h, p.big_h);
        for t in [0.0, 0.7, 1.5] {
            assert_eq!(back.q.eval_t(t, back.order), p.q.eval_t(t, p.order));
        }

        let bad = json!({"alpha": 1.5, "h": 0.0, "H": 0.0, "q": {"kind": "cosine", "coeffs": []}});
        match Problem::from_json(&bad) {
            Err(Error::Parse { field, message }) => {
                assert_eq!(field, "alpha");
                assert!(message.contains("alpha out of (0,1]"));
            }
            other => panic!("{other:?}"),
        }
        let bad = json!({"alpha": 1.0, "h": 0.0, "H": 0.0, "q": {"kind": "spline"}});
        assert!(matches!(Problem::from_json(&bad), Err(Error::Parse { field, .. }) if field == "q.kind"));
    }

    #[test]
    fn omega_of_constant_potential() {
        let order = Order::new(1.0).unwrap();
        let p = Problem::new(order, Potential::constant(order, 2.0), 0.0, 0.0).unwrap();
        assert!((p.omega() - PI).abs() < 1e-14);
        let f = Problem::from_fn(1.0, |_| 2.0, 0.0, 0.0).unwrap();
        assert!((f.omega() - PI).abs() < 1e-12);
    }
}
