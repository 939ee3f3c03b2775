use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::conformable::{Coordinate, Order, SampledFunction};
use crate::data::TAIL_NODES;
use crate::error::{Error, Result};
use crate::json;
use crate::problem::{CosineSeries, HalfPotential, Potential, Problem};

/// Finite-dimensional unknown for the inverse problem.
///
/// Without a frozen tail `q(x(t)) = sum c_k cos(k pi t / T)`, `k = 0..M`.
/// With a tail on `[pi/2, pi]` the coefficients shape only `[0, pi/2]`
/// through the modes of [`HalfPotential`].
#[derive(Debug, Clone)]
pub struct PotentialModel {
    pub order: Order,
    pub coeffs: Vec<f64>,
    pub h: f64,
    pub solve_h: bool,
    pub big_h: f64,
    pub solve_big_h: bool,
    pub tail: Option<SampledFunction>,
}

impl PotentialModel {
    /// All-zero cosine model with `h` and `H` unknown.
    pub fn cosine(order: Order, size: usize) -> Result<Self> {
        if size == 0 {
            return Err(Error::Usage("basis size must be at least 1".into()));
        }
        Ok(PotentialModel {
            order,
            coeffs: vec![0.0; size],
            h: 0.0,
            solve_h: true,
            big_h: 0.0,
            solve_big_h: true,
            tail: None,
        })
    }

    /// Zero free-half model with frozen `tail` and known `H`; `h` unknown.
    pub fn half(order: Order, size: usize, tail: SampledFunction, big_h: f64) -> Result<Self> {
        if size == 0 {
            return Err(Error::Usage("basis size must be at least 1".into()));
        }
        let model = PotentialModel {
            order,
            coeffs: vec![0.0; size],
            h: 0.0,
            solve_h: true,
            big_h,
            solve_big_h: false,
            tail: Some(tail),
        };
        model.problem()?;
        Ok(model)
    }

    pub fn potential(&self) -> Result<Potential> {
        Ok(match &self.tail {
            None => Potential::cosine(self.order, self.coeffs.clone()),
            Some(tail) => {
                Potential::Half(HalfPotential::new(self.order, self.coeffs.clone(), tail.clone())?)
            }
        })
    }

    pub fn problem(&self) -> Result<Problem> {
        Problem::new(self.order, self.potential()?, self.h, self.big_h)
    }

    /// Number of solved-for scalars.
    pub fn unknowns(&self) -> usize {
        self.coeffs.len() + usize::from(self.solve_h) + usize::from(self.solve_big_h)
    }

    pub fn parameters(&self) -> Vec<f64> {
        let mut v = self.coeffs.clone();
        if self.solve_h {
            v.push(self.h);
        }
        if self.solve_big_h {
            v.push(self.big_h);
        }
        v
    }

    pub fn with_parameters(&self, theta: &[f64]) -> Self {
        let m = self.coeffs.len();
        let mut out = self.clone();
        out.coeffs.copy_from_slice(&theta[..m]);
        let mut i = m;
        if self.solve_h {
            out.h = theta[i];
            i += 1;
        }
        if self.solve_big_h {
            out.big_h = theta[i];
        }
        out
    }

    pub fn parameter_names(&self) -> Vec<String> {
        let first = usize::from(self.tail.is_some());
        let mut names: Vec<String> = (0..self.coeffs.len())
            .map(|k| format!("c{}", k + first))
            .collect();
        if self.solve_h {
            names.push("h".into());
        }
        if self.solve_big_h {
            names.push("H".into());
        }
        names
    }

    /// Wave number of coefficient `i`, used by the smoothness penalty.
    pub(crate) fn wave_number(&self, i: usize) -> f64 {
        (i + usize::from(self.tail.is_some())) as f64
    }

    /// `q` as seen by the coefficient at index `i`: fills the basis at `t`.
    pub(crate) fn basis(&self) -> impl Fn(f64, &mut [f64]) + Sync {
        let span = self.order.t_end();
        let t_mid = self.order.t_of(PI / 2.0);
        let half = self.tail.is_some();
        move |t, out| {
            if half {
                HalfPotential::basis(t_mid, t, out)
            } else {
                CosineSeries::basis(span, t, out)
            }
        }
    }

    pub fn to_json(&self) -> Value {
        let mut v = json!({
            "alpha": self.order.value(),
            "basis": if self.tail.is_some() { "half" } else { "cosine" },
            "coeffs": self.coeffs,
            "h": self.h,
            "solve_h": self.solve_h,
            "H": self.big_h,
            "solve_H": self.solve_big_h,
        });
        if let Some(tail) = &self.tail {
            let nodes: Vec<f64> = match tail.grid_values() {
                Some(values) => values.to_vec(),
                None => (0..TAIL_NODES)
                    .map(|i| {
                        let x = if i + 1 == TAIL_NODES {
                            PI
                        } else {
                            PI / 2.0 + (PI / 2.0) * i as f64 / (TAIL_NODES - 1) as f64
                        };
                        tail.eval(x)
                    })
                    .collect(),
            };
            v["tail"] = json!(nodes);
        }
        v
    }

    pub fn from_json(value: &Value) -> Result<Self> {
        let obj = json::object(value, "model")?;
        let order = Order::new(json::get_f64(obj, "alpha")?)
            .map_err(|_| Error::parse("alpha", "alpha out of (0,1]"))?;
        let flag = |name: &str| -> Result<bool> {
            json::get(obj, name)?
                .as_bool()
                .ok_or_else(|| Error::parse(name, "expected a boolean"))
        };
        let tail = match json::get_str(obj, "basis")? {
            "cosine" => None,
            "half" => Some(SampledFunction::grid(
                PI / 2.0,
                PI,
                Coordinate::X,
                json::get_f64_list(obj, "tail")?,
            )?),
            other => return Err(Error::parse("basis", format!("unknown basis `{other}`"))),
        };
        let model = PotentialModel {
            order,
            coeffs: json::get_f64_list(obj, "coeffs")?,
            h: json::get_f64(obj, "h")?,
            solve_h: flag("solve_h")?,
            big_h: json::get_f64(obj, "H")?,
            solve_big_h: flag("solve_H")?,
            tail,
        };
        if model.coeffs.is_empty() {
            return Err(Error::parse("coeffs", "basis size must be at least 1"));
        }
        model.problem()?;
        Ok(model)
    }
}

/// Starting point of the fit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Init {
    /// All coefficients and unknown scalars zero.
    Zero,
    /// Mean of `q` from the eigenvalue asymptotics, everything else zero.
    Omega,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InverseConfig {
    /// Number of basis coefficients `M`; half the data count when absent.
    pub basis_size: Option<usize>,
    /// Leading data entries used per list; all when absent.
    pub data_count: Option<usize>,
    /// Initial Levenberg-Marquardt damping relative to the scaled normal matrix.
    pub damping: f64,
    /// Weight `tau` of `tau * sum k^2 c_k^2`; `TIKHONOV_SCALE * |weighted data|` when absent.
    pub tikhonov: Option<f64>,
    pub max_iterations: usize,
    /// Relative step size below which the fit is considered stationary.
    pub step_tol: f64,
    /// Weighted data residual norm at which the fit stops.
    pub residual_tol: f64,
    pub init: Init,
    /// Fixes `h` instead of solving for it.
    pub known_h: Option<f64>,
    /// Fixes `H` instead of solving for it (MixedHalf data always carry `H`).
    #[serde(rename = "known_H")]
    pub known_big_h: Option<f64>,
}

impl Default for InverseConfig {
    fn default() -> Self {
        InverseConfig {
            basis_size: None,
            data_count: None,
            damping: 1e-3,
            tikhonov: None,
            max_iterations: 100,
            step_tol: 1e-10,
            residual_tol: 1e-9,
            init: Init::Omega,
            known_h: None,
            known_big_h: None,
        }
    }
}

impl InverseConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::parse(name, "must be positive"))
            }
        };
        positive("damping", self.damping)?;
        positive("step_tol", self.step_tol)?;
        positive("residual_tol", self.residual_tol)?;
        if let Some(t) = self.tikhonov {
            if !(t >= 0.0 && t.is_finite()) {
                return Err(Error::parse("tikhonov", "must be non-negative"));
            }
        }
        if self.basis_size == Some(0) {
            return Err(Error::parse("basis_size", "must be at least 1"));
        }
        if self.data_count == Some(0) {
            return Err(Error::parse("data_count", "must be at least 1"));
        }
        if self.max_iterations == 0 {
            return Err(Error::parse("max_iterations", "must be at least 1"));
        }
        Ok(())
    }

    pub fn from_json(value: &Value) -> Result<Self> {
        let cfg: InverseConfig = serde_json::from_value(value.clone())
            .map_err(|e| Error::parse("config", e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn read(path: impl AsRef<std::path::Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let value: Value = serde_json::from_str(&text)
            .map_err(|e| Error::parse("config", format!("malformed JSON: {e}")))?;
        Self::from_json(&value)
    }
}
