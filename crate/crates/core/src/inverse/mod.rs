//! Reconstruction of `(q, h, H)` from spectral data by damped Gauss-Newton
//! fitting of a finite cosine model.
//!
//! Eigenvalue rows of the Jacobian use the first-order perturbation
//! formulas `d lambda = int u^2 dq / int u^2`, `d lambda / dh = u(0)^2 / int u^2`
//! and `d lambda / dH = u(T)^2 / int u^2`; norming-constant and Weyl rows are
//! central differences with re-located eigenvalues.

mod lm;
mod model;

use std::f64::consts::PI;
use std::fmt::Write as _;

use log::{info, warn};
use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::conformable::Order;
use crate::data::{estimate_omega, Payload, SpectralDataset};
use crate::error::{Error, Result};
use crate::forward::weyl_function_with;
use crate::ode::Dopri5;
use crate::problem::{Potential, Problem};
use crate::quadrature::GAUSS_LEGENDRE_32;
use crate::spectrum::{
    eigen_integrals, norming_constants_with, spectrum, spectrum_near, SpectrumKind,
};

pub use lm::{HistoryEntry, StopReason};
pub use model::{Init, InverseConfig, PotentialModel};

/// Relative step of the finite-difference Jacobian columns.
pub const FD_STEP: f64 = 1e-4;
/// Relative step of the independent full finite-difference Jacobian.
pub const CHECK_STEP: f64 = 1e-3;
/// Allowed relative column deviation in the gradient check.
pub const GRADIENT_CHECK_TOL: f64 = 1e-4;
/// Default Tikhonov weight relative to the weighted data norm.
pub const TIKHONOV_SCALE: f64 = 1e-9;
/// Jacobian condition number above which a warning is attached.
pub const ILL_POSED_CONDITION: f64 = 1e12;

fn fd_ode() -> Dopri5 {
    Dopri5::with_tolerances(1e-12, 1e-14)
}

/// The dataset restricted to the leading `count` entries of each list.
pub fn truncate(ds: &SpectralDataset, count: usize) -> SpectralDataset {
    let cut = |v: &Vec<f64>| v[..count.min(v.len())].to_vec();
    let payload = match &ds.payload {
        Payload::WeylSamples { lambdas, values } => Payload::WeylSamples {
            lambdas: cut(lambdas),
            values: cut(values),
        },
        Payload::TwoSpectra { lambdas, xis } => Payload::TwoSpectra {
            lambdas: cut(lambdas),
            xis: cut(xis),
        },
        Payload::SpectrumWithNorms { lambdas, norms } => Payload::SpectrumWithNorms {
            lambdas: cut(lambdas),
            norms: cut(norms),
        },
        Payload::MixedHalf {
            lambdas,
            big_h,
            tail,
        } => Payload::MixedHalf {
            lambdas: cut(lambdas),
            big_h: *big_h,
            tail: tail.clone(),
        },
    };
    SpectralDataset {
        order: ds.order,
        payload,
    }
}

/// Data vector in residual layout: norming constants enter as logarithms.
fn targets(ds: &SpectralDataset) -> Vec<f64> {
    match &ds.payload {
        Payload::WeylSamples { values, .. } => values.clone(),
        Payload::TwoSpectra { lambdas, xis } => lambdas.iter().chain(xis).copied().collect(),
        Payload::SpectrumWithNorms { lambdas, norms } => lambdas
            .iter()
            .copied()
            .chain(norms.iter().map(|a| a.ln()))
            .collect(),
        Payload::MixedHalf { lambdas, .. } => lambdas.clone(),
    }
}

/// Row weights applied in the fit: `1 / (1 + n)` on eigenvalue rows, one elsewhere.
pub fn residual_weights(ds: &SpectralDataset) -> Vec<f64> {
    let eig = |len: usize| (0..len).map(|n| 1.0 / (1 + n) as f64);
    match &ds.payload {
        Payload::WeylSamples { lambdas, .. } => vec![1.0; lambdas.len()],
        Payload::TwoSpectra { lambdas, xis } => eig(lambdas.len()).chain(eig(xis.len())).collect(),
        Payload::SpectrumWithNorms { lambdas, norms } => eig(lambdas.len())
            .chain(std::iter::repeat(1.0).take(norms.len()))
            .collect(),
        Payload::MixedHalf { lambdas, .. } => eig(lambdas.len()).collect(),
    }
}

/// Model data in residual layout. With `near`, eigenvalues are re-located
/// next to the values in that layout instead of searched from scratch.
fn forward(p: &Problem, ds: &SpectralDataset, ode: &Dopri5, near: Option<&[f64]>) -> Result<Vec<f64>> {
    let eigs = |kind: SpectrumKind, count: usize, offset: usize| match near {
        Some(seeds) => spectrum_near(p, kind, &seeds[offset..offset + count], ode),
        None => spectrum(p, kind, count, ode),
    };
    Ok(match &ds.payload {
        Payload::WeylSamples { lambdas, .. } => lambdas
            .par_iter()
            .map(|&l| weyl_function_with(p, l, ode))
            .collect::<Result<_>>()?,
        Payload::TwoSpectra { lambdas, xis } => {
            let (a, b) = rayon::join(
                || eigs(SpectrumKind::Robin, lambdas.len(), 0),
                || eigs(SpectrumKind::Dirichlet, xis.len(), lambdas.len()),
            );
            let mut v = a?;
            v.extend(b?);
            v
        }
        Payload::SpectrumWithNorms { lambdas, .. } => {
            let mut v = eigs(SpectrumKind::Robin, lambdas.len(), 0)?;
            let recs = norming_constants_with(p, &v, ode)?;
            v.extend(recs.iter().map(|r| r.norming.ln()));
            v
        }
        Payload::MixedHalf { lambdas, .. } => eigs(SpectrumKind::Robin, lambdas.len(), 0)?,
    })
}

fn check_compatible(model: &PotentialModel, ds: &SpectralDataset) -> Result<()> {
    if model.order != ds.order {
        return Err(Error::Usage(format!(
            "model order {} differs from dataset order {}",
            model.order.value(),
            ds.order.value()
        )));
    }
    if matches!(ds.payload, Payload::MixedHalf { .. }) != model.tail.is_some() {
        return Err(Error::Usage(
            "MixedHalf data need a model with a frozen tail, and only they do".into(),
        ));
    }
    Ok(())
}

/// Unweighted mismatch between model data and the dataset:
/// `model - data` for eigenvalues and Weyl samples, `ln(alpha_n / alpha_n*)`
/// for norming constants.
pub fn residual(model: &PotentialModel, ds: &SpectralDataset) -> Result<Vec<f64>> {
    check_compatible(model, ds)?;
    let values = forward(&model.problem()?, ds, &Dopri5::default(), None)?;
    Ok(values.iter().zip(targets(ds)).map(|(f, d)| f - d).collect())
}

/// Jacobian of [`residual`] with respect to [`PotentialModel::parameters`].
pub fn jacobian(model: &PotentialModel, ds: &SpectralDataset) -> Result<DMatrix<f64>> {
    check_compatible(model, ds)?;
    let base = forward(&model.problem()?, ds, &Dopri5::default(), None)?;
    jacobian_at(model, ds, &base)
}

/// Perturbation-formula rows for one spectrum.
fn eigen_rows(
    model: &PotentialModel,
    p: &Problem,
    kind: SpectrumKind,
    eigs: &[f64],
    ode: &Dopri5,
) -> Result<Vec<Vec<f64>>> {
    let m = model.coeffs.len();
    let basis = model.basis();
    eigs.par_iter()
        .enumerate()
        .map(|(n, &lambda)| {
            let (norm, end_sq, ints) = eigen_integrals(p, kind, lambda, &basis, m, ode)?;
            if !(norm > 0.0) {
                return Err(Error::Degenerate {
                    index: n,
                    reason: "non-positive norming constant".into(),
                });
            }
            let mut row: Vec<f64> = ints.iter().map(|b| b / norm).collect();
            if model.solve_h {
                row.push(match kind {
                    SpectrumKind::Robin => 1.0 / norm,
                    SpectrumKind::Dirichlet => 0.0,
                });
            }
            if model.solve_big_h {
                row.push(end_sq / norm);
            }
            Ok(row)
        })
        .collect()
}

/// Central-difference columns of the full residual.
fn fd_jacobian(model: &PotentialModel, ds: &SpectralDataset, base: &[f64], rel_step: f64) -> Result<DMatrix<f64>> {
    let theta = model.parameters();
    let ode = fd_ode();
    let cols: Vec<Vec<f64>> = (0..theta.len())
        .into_par_iter()
        .map(|k| {
            let step = rel_step * theta[k].abs().max(1.0);
            let eval = |sign: f64| {
                let mut th = theta.clone();
                th[k] += sign * step;
                forward(&model.with_parameters(&th).problem()?, ds, &ode, Some(base))
            };
            let (plus, minus) = rayon::join(|| eval(1.0), || eval(-1.0));
            let (plus, minus) = (plus?, minus?);
            Ok(plus.iter().zip(&minus).map(|(a, b)| (a - b) / (2.0 * step)).collect())
        })
        .collect::<Result<_>>()?;
    Ok(DMatrix::from_fn(base.len(), theta.len(), |i, k| cols[k][i]))
}

fn jacobian_at(model: &PotentialModel, ds: &SpectralDataset, base: &[f64]) -> Result<DMatrix<f64>> {
    let p = model.problem()?;
    let ode = Dopri5::default();
    let cols = model.unknowns();
    let rows: Vec<Vec<f64>> = match &ds.payload {
        Payload::WeylSamples { .. } => return fd_jacobian(model, ds, base, FD_STEP),
        Payload::TwoSpectra { lambdas, .. } => {
            let nl = lambdas.len();
            let mut rows = eigen_rows(model, &p, SpectrumKind::Robin, &base[..nl], &ode)?;
            rows.extend(eigen_rows(model, &p, SpectrumKind::Dirichlet, &base[nl..], &ode)?);
            rows
        }
        Payload::SpectrumWithNorms { lambdas, .. } => {
            let nl = lambdas.len();
            let fd = fd_jacobian(model, ds, base, FD_STEP)?;
            let mut rows = eigen_rows(model, &p, SpectrumKind::Robin, &base[..nl], &ode)?;
            rows.extend((nl..base.len()).map(|i| fd.row(i).iter().copied().collect()));
            rows
        }
        Payload::MixedHalf { .. } => eigen_rows(model, &p, SpectrumKind::Robin, base, &ode)?,
    };
    Ok(DMatrix::from_fn(rows.len(), cols, |i, k| rows[i][k]))
}

/// Agreement between the Jacobian used by the fit and an independent
/// full finite-difference Jacobian.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GradientCheck {
    /// `max_i |J_ik - F_ik| / max_i |F_ik|` per column.
    pub columns: Vec<f64>,
    pub max_relative_deviation: f64,
    pub tolerance: f64,
    pub passed: bool,
}

pub fn gradient_check(model: &PotentialModel, ds: &SpectralDataset) -> Result<GradientCheck> {
    check_compatible(model, ds)?;
    let base = forward(&model.problem()?, ds, &Dopri5::default(), None)?;
    gradient_check_at(model, ds, &base)
}

fn gradient_check_at(model: &PotentialModel, ds: &SpectralDataset, base: &[f64]) -> Result<GradientCheck> {
    let used = jacobian_at(model, ds, base)?;
    let full = fd_jacobian(model, ds, base, CHECK_STEP)?;
    let overall = full.amax().max(f64::MIN_POSITIVE);
    let columns: Vec<f64> = (0..full.ncols())
        .map(|k| {
            let scale = full.column(k).amax().max(1e-8 * overall);
            (used.column(k) - full.column(k)).amax() / scale
        })
        .collect();
    let max = columns.iter().copied().fold(0.0, f64::max);
    Ok(GradientCheck {
        columns,
        max_relative_deviation: max,
        tolerance: GRADIENT_CHECK_TOL,
        passed: max < GRADIENT_CHECK_TOL,
    })
}

/// Spread of one unknown at the solution.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UnknownDiagnostic {
    pub name: String,
    pub value: f64,
    /// `sqrt(s^2 (J^T J)^-1_ii)` with `s^2` the residual variance; NaN for
    /// exactly determined fits.
    pub std_error: f64,
}

#[derive(Debug, Clone)]
pub struct InverseReport {
    pub model: PotentialModel,
    pub converged: bool,
    pub stop_reason: StopReason,
    pub iterations: usize,
    pub history: Vec<HistoryEntry>,
    /// Weighted data residual norm at the returned model.
    pub final_residual: f64,
    pub tikhonov: f64,
    pub condition_number: f64,
    pub gradient_check: GradientCheck,
    pub diagnostics: Vec<UnknownDiagnostic>,
    pub warnings: Vec<String>,
}

impl InverseReport {
    pub fn to_json(&self) -> Value {
        json!({
            "model": self.model.to_json(),
            "converged": self.converged,
            "stop_reason": self.stop_reason,
            "iterations": self.iterations,
            "final_residual": self.final_residual,
            "tikhonov": self.tikhonov,
            "condition_number": self.condition_number,
            "gradient_check": self.gradient_check,
            "diagnostics": self.diagnostics,
            "warnings": self.warnings,
            "history": self.history,
        })
    }

    pub fn history_csv(&self) -> String {
        let mut out = String::from("iteration,residual,objective,damping\n");
        for h in &self.history {
            let _ = writeln!(
                out,
                "{},{:.16e},{:.16e},{:.16e}",
                h.iteration, h.residual, h.objective, h.damping
            );
        }
        out
    }
}

struct Fit<'a> {
    model: &'a PotentialModel,
    ds: &'a SpectralDataset,
    targets: Vec<f64>,
    weights: Vec<f64>,
    /// `(parameter index, sqrt(tau) k)` for each penalty row.
    penalty: Vec<(usize, f64)>,
}

impl lm::LeastSquares for Fit<'_> {
    fn residual(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        let p = self.model.with_parameters(x.as_slice()).problem()?;
        let f = forward(&p, self.ds, &Dopri5::default(), None)?;
        let mut r: Vec<f64> = f
            .iter()
            .zip(&self.targets)
            .zip(&self.weights)
            .map(|((f, d), w)| w * (f - d))
            .collect();
        r.extend(self.penalty.iter().map(|&(i, s)| s * x[i]));
        Ok(DVector::from_vec(r))
    }

    fn jacobian(&self, x: &DVector<f64>, r: &DVector<f64>) -> Result<DMatrix<f64>> {
        let model = self.model.with_parameters(x.as_slice());
        let n = self.targets.len();
        let base: Vec<f64> = (0..n).map(|i| self.targets[i] + r[i] / self.weights[i]).collect();
        let raw = jacobian_at(&model, self.ds, &base)?;
        let mut jac = DMatrix::zeros(n + self.penalty.len(), x.len());
        for i in 0..n {
            for k in 0..x.len() {
                jac[(i, k)] = self.weights[i] * raw[(i, k)];
            }
        }
        for (row, &(k, s)) in self.penalty.iter().enumerate() {
            jac[(n + row, k)] = s;
        }
        Ok(jac)
    }

    fn data_rows(&self) -> usize {
        self.targets.len()
    }
}

/// Initial model dictated by the dataset kind and the configuration.
pub fn initial_model(ds: &SpectralDataset, cfg: &InverseConfig) -> Result<PotentialModel> {
    let size = cfg.basis_size.unwrap_or((ds.len() / 2).max(1));
    let mut model = match &ds.payload {
        Payload::MixedHalf { big_h, .. } => {
            let tail = ds.tail_function().expect("MixedHalf carries a tail")?;
            PotentialModel::half(ds.order, size, tail, *big_h)?
        }
        _ => PotentialModel::cosine(ds.order, size)?,
    };
    if let Some(h) = cfg.known_h {
        model.h = h;
        model.solve_h = false;
    }
    if let (Some(big_h), None) = (cfg.known_big_h, &model.tail) {
        model.big_h = big_h;
        model.solve_big_h = false;
    }
    if cfg.init == Init::Omega && model.tail.is_none() {
        if let Some(eigs) = ds.eigenvalues().filter(|e| e.len() >= 10) {
            let omega = estimate_omega(eigs, ds.order)?.omega;
            model.coeffs[0] = 2.0 * (omega - model.h - model.big_h) / ds.order.t_end();
        }
    }
    Ok(model)
}

/// Fits a model to `dataset` from the configured starting point.
pub fn reconstruct(dataset: &SpectralDataset, cfg: &InverseConfig) -> Result<InverseReport> {
    cfg.validate()?;
    let ds = match cfg.data_count {
        Some(n) => truncate(dataset, n),
        None => dataset.clone(),
    };
    let model = initial_model(&ds, cfg)?;
    reconstruct_from(&ds, cfg, model)
}

/// Fits a model to `ds` starting from `initial`. `cfg.data_count` is ignored.
pub fn reconstruct_from(ds: &SpectralDataset, cfg: &InverseConfig, initial: PotentialModel) -> Result<InverseReport> {
    cfg.validate()?;
    ds.validate()?;
    check_compatible(&initial, ds)?;
    if ds.len() < initial.unknowns() {
        return Err(Error::Usage(format!(
            "underdetermined: {} data for {} unknowns",
            ds.len(),
            initial.unknowns()
        )));
    }
    let targets = targets(ds);
    let weights = residual_weights(ds);
    let data_scale = targets
        .iter()
        .zip(&weights)
        .map(|(d, w)| (d * w).powi(2))
        .sum::<f64>()
        .sqrt();
    let tau = cfg.tikhonov.unwrap_or(TIKHONOV_SCALE * data_scale);
    let penalty: Vec<(usize, f64)> = (0..initial.coeffs.len())
        .map(|i| (i, tau.sqrt() * initial.wave_number(i)))
        .filter(|&(_, s)| s > 0.0)
        .collect();
    let fit = Fit {
        model: &initial,
        ds,
        targets,
        weights,
        penalty,
    };
    let out = lm::minimize(
        &fit,
        DVector::from_vec(initial.parameters()),
        lm::Settings {
            damping: cfg.damping,
            max_iterations: cfg.max_iterations,
            step_tol: cfg.step_tol,
            residual_tol: cfg.residual_tol,
        },
    )?;
    let model = initial.with_parameters(out.x.as_slice());
    let n = fit.targets.len();
    let final_residual = out.r.rows(0, n).norm();
    let data_jac = out.jacobian.rows(0, n).into_owned();

    let base: Vec<f64> = (0..n).map(|i| fit.targets[i] + out.r[i] / fit.weights[i]).collect();
    let check = gradient_check_at(&model, ds, &base)?;

    let svd = data_jac.clone().svd(false, false);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    let condition_number = if smin > 0.0 { smax / smin } else { f64::INFINITY };

    let mut warnings = Vec::new();
    if condition_number > ILL_POSED_CONDITION {
        warnings.push(format!(
            "ill-posed: Jacobian condition number {condition_number:.3e} exceeds 1e12"
        ));
    }
    if !check.passed {
        warnings.push(format!(
            "gradient check deviation {:.3e} exceeds {:e}",
            check.max_relative_deviation, GRADIENT_CHECK_TOL
        ));
    }
    if !out.stop.converged() {
        warnings.push(format!("no convergence: stopped by {:?}", out.stop));
    }
    for w in &warnings {
        warn!("{w}");
    }

    let dof = n as f64 - model.unknowns() as f64;
    let variance = if dof > 0.0 { final_residual.powi(2) / dof } else { f64::NAN };
    let normal = data_jac.transpose() * &data_jac;
    let inverse = normal
        .clone()
        .pseudo_inverse(1e-14 * normal.amax())
        .unwrap_or_else(|_| DMatrix::from_element(normal.nrows(), normal.ncols(), f64::NAN));
    let diagnostics = model
        .parameter_names()
        .into_iter()
        .zip(model.parameters())
        .enumerate()
        .map(|(i, (name, value))| UnknownDiagnostic {
            name,
            value,
            std_error: (variance * inverse[(i, i)]).sqrt(),
        })
        .collect();

    info!(
        "reconstruction: {:?} after {} iterations, residual {:e}",
        out.stop, out.iterations, final_residual
    );
    Ok(InverseReport {
        model,
        converged: out.stop.converged(),
        stop_reason: out.stop,
        iterations: out.iterations,
        history: out.history,
        final_residual,
        tikhonov: tau,
        condition_number,
        gradient_check: check,
        diagnostics,
        warnings,
    })
}

/// Largest difference between the two spectra of `p1` and `p2` over the
/// first `count` indices.
pub fn uniqueness_probe(p1: &Problem, p2: &Problem, count: usize) -> Result<f64> {
    if p1.order != p2.order {
        return Err(Error::Usage("problems must share alpha".into()));
    }
    let ode = Dopri5::default();
    let both = |p: &Problem| -> Result<(Vec<f64>, Vec<f64>)> {
        let (a, b) = rayon::join(
            || spectrum(p, SpectrumKind::Robin, count, &ode),
            || spectrum(p, SpectrumKind::Dirichlet, count, &ode),
        );
        Ok((a?, b?))
    };
    let ((l1, x1), (l2, x2)) = (both(p1)?, both(p2)?);
    Ok(l1
        .iter()
        .zip(&l2)
        .chain(x1.iter().zip(&x2))
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max))
}

/// `|q_est - q_true|_2 / |q_true|_2` in `L^2(d_alpha x)` over `[x_lo, x_hi]`.
pub fn relative_l2_error(estimate: &Potential, truth: &Potential, order: Order, x_lo: f64, x_hi: f64) -> f64 {
    const PANELS: usize = 64;
    let (t_lo, t_hi) = (order.t_of(x_lo), order.t_of(x_hi));
    let mut cuts: Vec<f64> = (0..=PANELS)
        .map(|i| t_lo + (t_hi - t_lo) * i as f64 / PANELS as f64)
        .chain(estimate.breakpoints())
        .chain(truth.breakpoints())
        .filter(|t| *t >= t_lo && *t <= t_hi)
        .collect();
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let (mut num, mut den) = (0.0, 0.0);
    for w in cuts.windows(2) {
        num += GAUSS_LEGENDRE_32.integrate(w[0], w[1], |t| {
            (estimate.eval_t(t, order) - truth.eval_t(t, order)).powi(2)
        });
        den += GAUSS_LEGENDRE_32.integrate(w[0], w[1], |t| truth.eval_t(t, order).powi(2));
    }
    (num / den).sqrt()
}

/// Midpoint of `[0, pi]` where MixedHalf data switch from unknown to frozen.
pub const HALF_POINT: f64 = PI / 2.0;
