use log::{debug, warn};
use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::Result;

pub(crate) trait LeastSquares {
    /// Residual vector; the first `data_rows()` entries are data mismatch,
    /// any further rows are penalty terms.
    fn residual(&self, x: &DVector<f64>) -> Result<DVector<f64>>;
    fn jacobian(&self, x: &DVector<f64>, r: &DVector<f64>) -> Result<DMatrix<f64>>;
    fn data_rows(&self) -> usize;
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct Settings {
    pub damping: f64,
    pub max_iterations: usize,
    pub step_tol: f64,
    pub residual_tol: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HistoryEntry {
    pub iteration: usize,
    /// Norm of the weighted data residual.
    pub residual: f64,
    /// `|r|^2 / 2` including the penalty rows.
    pub objective: f64,
    pub damping: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    ResidualTolerance,
    StepTolerance,
    MaxIterations,
    DampingOverflow,
}

pub(crate) struct Outcome {
    pub x: DVector<f64>,
    pub r: DVector<f64>,
    pub jacobian: DMatrix<f64>,
    pub history: Vec<HistoryEntry>,
    pub iterations: usize,
    pub stop: StopReason,
}

impl StopReason {
    pub fn converged(self) -> bool {
        matches!(self, StopReason::ResidualTolerance | StopReason::StepTolerance)
    }
}

fn data_norm(r: &DVector<f64>, rows: usize) -> f64 {
    r.rows(0, rows).norm()
}

/// Levenberg-Marquardt with Marquardt's diagonal scaling and Nielsen's
/// damping update. Trial points whose residual cannot be evaluated are
/// rejected like uphill steps.
pub(crate) fn minimize(problem: &impl LeastSquares, x0: DVector<f64>, s: Settings) -> Result<Outcome> {
    let rows = problem.data_rows();
    let mut x = x0;
    let mut r = problem.residual(&x)?;
    let mut cost = 0.5 * r.norm_squared();
    let mut history = vec![HistoryEntry {
        iteration: 0,
        residual: data_norm(&r, rows),
        objective: cost,
        damping: s.damping,
    }];
    let mut jac = problem.jacobian(&x, &r)?;
    if data_norm(&r, rows) <= s.residual_tol {
        return Ok(Outcome {
            x,
            r,
            jacobian: jac,
            history,
            iterations: 0,
            stop: StopReason::ResidualTolerance,
        });
    }

    let n = x.len();
    let mut scale = DVector::from_element(n, 0.0f64);
    let mut mu = s.damping;
    let mut nu = 2.0;
    let mut stop = StopReason::MaxIterations;
    let mut iterations = 0;
    while iterations < s.max_iterations {
        iterations += 1;
        let jtj = jac.transpose() * &jac;
        let grad = jac.transpose() * &r;
        let dmax = jtj.diagonal().max().max(f64::MIN_POSITIVE);
        for i in 0..n {
            scale[i] = scale[i].max(jtj[(i, i)]).max(1e-12 * dmax);
        }
        let mut lhs = jtj.clone();
        for i in 0..n {
            lhs[(i, i)] += mu * scale[i];
        }
        let step = match lhs.clone().cholesky() {
            Some(ch) => ch.solve(&(-&grad)),
            None => lhs
                .svd(true, true)
                .solve(&(-&grad), 1e-15)
                .unwrap_or_else(|_| DVector::zeros(n)),
        };
        let small = step.norm() <= s.step_tol * (x.norm() + s.step_tol);
        let trial = &x + &step;
        let predicted = 0.5 * step.dot(&(step.component_mul(&scale) * mu - &grad));
        let outcome = problem.residual(&trial);
        let accepted = match outcome {
            Ok(rt) => {
                let cost_t = 0.5 * rt.norm_squared();
                let rho = if predicted > 0.0 { (cost - cost_t) / predicted } else { -1.0 };
                if rho > 0.0 && cost_t.is_finite() {
                    x = trial;
                    r = rt;
                    cost = cost_t;
                    mu *= (1.0 / 3.0f64).max(1.0 - (2.0 * rho - 1.0).powi(3));
                    nu = 2.0;
                    true
                } else {
                    false
                }
            }
            Err(e) => {
                debug!("trial point rejected: {e}");
                false
            }
        };
        if accepted {
            let res = data_norm(&r, rows);
            debug!("iteration {iterations}: |r| = {res:e}, mu = {mu:e}");
            history.push(HistoryEntry {
                iteration: iterations,
                residual: res,
                objective: cost,
                damping: mu,
            });
            jac = problem.jacobian(&x, &r)?;
            if res <= s.residual_tol {
                stop = StopReason::ResidualTolerance;
                break;
            }
            if small {
                stop = StopReason::StepTolerance;
                break;
            }
        } else {
            if small {
                stop = StopReason::StepTolerance;
                break;
            }
            mu *= nu;
            nu *= 2.0;
            if mu > 1e20 {
                warn!("damping overflow after {iterations} iterations");
                stop = StopReason::DampingOverflow;
                break;
            }
        }
    }
    Ok(Outcome {
        x,
        r,
        jacobian: jac,
        history,
        iterations,
        stop,
    })
}
