//! Eigenvalues of the Robin problem (zeros of `Delta`) and of the problem
//! with `y(0) = 0` (zeros of `Delta_1`), plus norming constants.
//!
//! Each eigenvalue is located by its index: a scaled Prüfer angle tracked
//! along the shot counts how many eigenvalues lie below a trial `lambda`, so
//! brackets seeded from the large-`n` asymptotics can be corrected until
//! they hold exactly the wanted root. The root is then polished by Newton
//! steps on the characteristic function, safeguarded by the bracket.

use std::f64::consts::PI;

use log::debug;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forward::{shoot, Carry, Start};
use crate::ode::Dopri5;
use crate::problem::Problem;

/// Which boundary condition is imposed at `x = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SpectrumKind {
    /// `D y(0) - h y(0) = 0`: zeros of `Delta`.
    Robin,
    /// `y(0) = 0`: zeros of `Delta_1 = psi(0, .)`.
    Dirichlet,
}

impl SpectrumKind {
    pub(crate) fn start(self, p: &Problem) -> Start {
        match self {
            SpectrumKind::Robin => Start::phi(p),
            SpectrumKind::Dirichlet => Start::sine(),
        }
    }
}

/// Relative root tolerance: `|f / f'| <= ROOT_TOL * max(1, |lambda|)`.
pub const ROOT_TOL: f64 = 1e-10;

/// Characteristic function, its lambda-derivative and the unwrapped scaled
/// Prüfer angle relative to the eigenvalue branch `n`.
#[derive(Debug, Clone, Copy)]
struct Probe {
    f: f64,
    df: f64,
    /// `theta(T) - theta_B - n pi` with the scaled angle; negative below
    /// the `n`-th eigenvalue, positive above.
    g: f64,
}

fn probe(p: &Problem, kind: SpectrumKind, lambda: f64, index: usize, ode: &Dopri5) -> Result<Probe> {
    let start = kind.start(p);
    let (u0, du0) = match start {
        Start::Left { u, du } => (u, du),
        Start::Right { .. } => unreachable!("spectra are shot from the left"),
    };
    let scale = lambda.abs().max(1.0).sqrt();
    let mut wrapped = (scale * u0).atan2(du0);
    let mut theta = wrapped;
    let carry = Carry {
        variational: true,
        ..Carry::default()
    };
    let shot = shoot(p, lambda, start, &carry, ode, &mut |_, y: &[f64]| {
        let a = (scale * y[0]).atan2(y[1]);
        let mut d = a - wrapped;
        if d > PI {
            d -= 2.0 * PI;
        } else if d <= -PI {
            d += 2.0 * PI;
        }
        theta += d;
        wrapped = a;
    })?;
    let theta_b = scale.atan2(-p.big_h);
    Ok(Probe {
        f: shot.du + shot.u * p.big_h,
        df: shot.du_l + shot.u_l * p.big_h,
        g: theta - theta_b - index as f64 * PI,
    })
}

/// Asymptotic guess for the `n`-th eigenvalue.
fn predicted(p: &Problem, kind: SpectrumKind, n: usize) -> f64 {
    let t_end = p.t_end();
    let mean = p.q.conformable_mean_integral(p.order);
    match kind {
        SpectrumKind::Robin => {
            if n == 0 {
                (p.h + p.big_h + mean) / t_end
            } else {
                let omega = p.h + p.big_h + 0.5 * mean;
                let root = n as f64 * PI / t_end + omega / (n as f64 * PI);
                root * root.abs()
            }
        }
        SpectrumKind::Dirichlet => {
            let nu = n as f64 + 0.5;
            let omega = p.big_h + 0.5 * mean;
            let root = nu * PI / t_end + omega / (nu * PI);
            root * root.abs()
        }
    }
}

fn half_gap(p: &Problem, n: usize) -> f64 {
    let w = PI / p.t_end();
    0.5 * w * w * (2 * n + 1) as f64
}

/// Locates the eigenvalue with index `n`, starting from a window of
/// half-width `width` around `center`.
fn locate(
    p: &Problem,
    kind: SpectrumKind,
    n: usize,
    center: f64,
    width: f64,
    ode: &Dopri5,
) -> Result<f64> {
    let search = |reason: String| Error::Search { index: n, reason };
    let eval = |l: f64| probe(p, kind, l, n, ode);

    let mut a = center - width;
    let mut b = center + width;
    let mut pa = eval(a)?;
    let mut pb = eval(b)?;
    let mut step = width;
    let mut tries = 0;
    while pa.g >= 0.0 {
        tries += 1;
        if tries > 60 {
            return Err(search(format!("no lower bracket below {a}")));
        }
        b = a;
        pb = pa;
        step *= 2.0;
        a -= step;
        pa = eval(a)?;
    }
    step = width;
    tries = 0;
    while pb.g <= 0.0 {
        tries += 1;
        if tries > 60 {
            return Err(search(format!("no upper bracket above {b}")));
        }
        a = b;
        pa = pb;
        step *= 2.0;
        b += step;
        pb = eval(b)?;
    }

    // shrink until the bracket holds only the n-th root
    tries = 0;
    while pa.g <= -PI || pb.g >= PI {
        tries += 1;
        if tries > 200 {
            return Err(search("bracket does not isolate the root".into()));
        }
        let m = 0.5 * (a + b);
        let pm = eval(m)?;
        if pm.g < 0.0 {
            a = m;
            pa = pm;
        } else {
            b = m;
            pb = pm;
        }
    }
    if pa.f * pb.f > 0.0 {
        return Err(Error::Numeric(format!(
            "no sign change of the characteristic function around index {n}: double root suspected"
        )));
    }

    // safeguarded Newton on f
    let (mut lo, mut hi, flo) = (a, b, pa.f);
    let (mut x, mut px) = if pa.f.abs() < pb.f.abs() { (a, pa) } else { (b, pb) };
    let mut best = (x, px);
    let mut pinned = false;
    for _ in 0..100 {
        if px.f == 0.0 {
            return Ok(x);
        }
        let newton = x - px.f / px.df;
        let next = if px.df != 0.0 && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        let dx = next - x;
        x = next;
        px = eval(x)?;
        if px.f.abs() < best.1.f.abs() {
            best = (x, px);
        }
        if px.f * flo > 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        let tiny = 1e-14 * x.abs().max(1.0);
        if hi - lo <= tiny {
            pinned = true;
            break;
        }
        if dx.abs() <= tiny {
            break;
        }
    }
    let (x, px) = best;
    let scale = x.abs().max(1.0);
    if !pinned && px.f.abs() > ROOT_TOL * scale * px.df.abs() {
        return Err(search(format!(
            "root not refined: |f| = {:e} at lambda = {x}",
            px.f.abs()
        )));
    }
    Ok(x)
}

fn check_simple(values: &[f64]) -> Result<()> {
    for (i, w) in values.windows(2).enumerate() {
        if w[1] - w[0] <= 1e-6 {
            return Err(Error::Numeric(format!(
                "eigenvalues {i} and {} coincide ({} vs {})",
                i + 1,
                w[0],
                w[1]
            )));
        }
    }
    Ok(())
}

/// The first `count` eigenvalues of the chosen kind.
pub fn spectrum(p: &Problem, kind: SpectrumKind, count: usize, ode: &Dopri5) -> Result<Vec<f64>> {
    if count == 0 {
        return Err(Error::Usage("eigenvalue count must be at least 1".into()));
    }
    let values: Vec<f64> = (0..count)
        .into_par_iter()
        .map(|n| locate(p, kind, n, predicted(p, kind, n), half_gap(p, n), ode))
        .collect::<Result<_>>()?;
    check_simple(&values)?;
    debug!("{kind:?} spectrum: {count} eigenvalues, last {}", values[count - 1]);
    Ok(values)
}

/// Re-locates eigenvalues `0..seeds.len()` for a problem close to the one
/// that produced `seeds`.
pub fn spectrum_near(p: &Problem, kind: SpectrumKind, seeds: &[f64], ode: &Dopri5) -> Result<Vec<f64>> {
    let values: Vec<f64> = seeds
        .par_iter()
        .enumerate()
        .map(|(n, &s)| locate(p, kind, n, s, 1e-4 * half_gap(p, n), ode))
        .collect::<Result<_>>()?;
    check_simple(&values)?;
    Ok(values)
}

/// First `count` zeros of `Delta`.
pub fn eigenvalues(p: &Problem, count: usize) -> Result<Vec<f64>> {
    spectrum(p, SpectrumKind::Robin, count, &Dopri5::default())
}

/// First `count` zeros of `Delta_1`.
pub fn second_spectrum(p: &Problem, count: usize) -> Result<Vec<f64>> {
    spectrum(p, SpectrumKind::Dirichlet, count, &Dopri5::default())
}

/// Eigenvalue together with its norming data.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EigenRecord {
    pub n: usize,
    pub lambda: f64,
    /// `int_0^pi phi(x, lambda_n)^2 d_alpha x`.
    pub norming: f64,
    /// `phi(pi, lambda_n)`.
    pub beta: f64,
    /// `Delta'(lambda_n)`.
    pub delta_prime: f64,
}

impl EigenRecord {
    /// `|alpha_n + beta_n Delta'(lambda_n)| / alpha_n`. Since
    /// `phi(., lambda_n) = beta_n psi(., lambda_n)`, integrating the
    /// variational equation gives `Delta'(lambda_n) = -alpha_n / beta_n`.
    pub fn identity_residual(&self) -> f64 {
        (self.norming + self.beta * self.delta_prime).abs() / self.norming
    }

    /// `|beta_n alpha_n + Delta'(lambda_n)| / |Delta'(lambda_n)|`, which
    /// vanishes only when `beta_n^2 = 1`.
    pub fn product_residual(&self) -> f64 {
        (self.beta * self.norming + self.delta_prime).abs() / self.delta_prime.abs()
    }
}

/// Norming constants, `beta_n` and `Delta'(lambda_n)` for validated roots.
pub fn norming_constants(p: &Problem, eigs: &[f64]) -> Result<Vec<EigenRecord>> {
    norming_constants_with(p, eigs, &Dopri5::default())
}

pub fn norming_constants_with(p: &Problem, eigs: &[f64], ode: &Dopri5) -> Result<Vec<EigenRecord>> {
    eigs.par_iter()
        .enumerate()
        .map(|(n, &lambda)| {
            let carry = Carry {
                variational: true,
                norm: true,
                ..Carry::default()
            };
            let s = shoot(p, lambda, Start::phi(p), &carry, ode, &mut |_, _| {})?;
            let beta = s.u;
            if !(beta.abs() < 1e12) || beta == 0.0 {
                return Err(Error::Degenerate {
                    index: n,
                    reason: format!("|psi(0, lambda_n)| = {:e} below 1e-12", 1.0 / beta.abs()),
                });
            }
            if !(s.norm > 0.0) {
                return Err(Error::Degenerate {
                    index: n,
                    reason: "non-positive norming constant".into(),
                });
            }
            Ok(EigenRecord {
                n,
                lambda,
                norming: s.norm,
                beta,
                delta_prime: s.du_l + s.u_l * p.big_h,
            })
        })
        .collect()
}

/// Eigenfunction integrals at an eigenvalue, used by the perturbation
/// formulas: `(int u^2, u(T)^2, [int u^2 b_k])` with `u` normalized at 0 as
/// `phi` (Robin) or `S` (Dirichlet).
pub(crate) fn eigen_integrals(
    p: &Problem,
    kind: SpectrumKind,
    lambda: f64,
    basis: &(dyn Fn(f64, &mut [f64]) + Sync),
    basis_len: usize,
    ode: &Dopri5,
) -> Result<(f64, f64, Vec<f64>)> {
    let carry = Carry {
        variational: false,
        norm: true,
        basis: Some((basis, basis_len)),
    };
    let s = shoot(p, lambda, kind.start(p), &carry, ode, &mut |_, _| {})?;
    Ok((s.norm, s.u * s.u, s.basis))
}
