//! Fundamental solutions, characteristic functions and the Weyl function.
//!
//! Everything is integrated in t-coordinates, `t = x^alpha / alpha`, where the
//! equation reads `-u'' + q(x(t)) u = lambda u` on `[0, T]`, `T = pi^alpha / alpha`,
//! and `u'` equals the conformable derivative of the solution.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::ode::{Complex64, Dopri5, Scalar};
use crate::problem::Problem;

/// Integrator settings and output grid size for trajectory solves.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveOptions {
    pub ode: Dopri5,
    /// Number of uniform t-nodes on `[0, T]` (including both ends).
    pub grid_points: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            ode: Dopri5::default(),
            grid_points: 257,
        }
    }
}

impl SolveOptions {
    pub fn with_tolerances(rtol: f64, atol: f64) -> Self {
        SolveOptions {
            ode: Dopri5::with_tolerances(rtol, atol),
            ..Self::default()
        }
    }
}

/// A solution of the equation sampled on a uniform t-grid.
#[derive(Debug, Clone)]
pub struct Trajectory<S> {
    pub lambda: S,
    pub alpha: f64,
    pub t: Vec<f64>,
    /// Solution values.
    pub u: Vec<S>,
    /// t-derivative, equal to the conformable x-derivative at the matching x.
    pub du: Vec<S>,
}

impl<S: Scalar> Trajectory<S> {
    /// x-coordinates of the grid nodes.
    pub fn x(&self) -> Vec<f64> {
        self.t
            .iter()
            .map(|&t| if self.alpha == 1.0 { t } else { (self.alpha * t).powf(1.0 / self.alpha) })
            .collect()
    }

    fn same_grid(&self, other: &Self) -> bool {
        self.t.len() == other.t.len()
            && self.lambda == other.lambda
            && self.t.first() == other.t.first()
            && self.t.last() == other.t.last()
    }
}

impl Trajectory<f64> {
    /// CSV with header `t,x,u,du` and 17-digit floats.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,x,u,du\n");
        for (i, x) in self.x().iter().enumerate() {
            let _ = writeln!(
                out,
                "{:.16e},{:.16e},{:.16e},{:.16e}",
                self.t[i], x, self.u[i], self.du[i]
            );
        }
        out
    }
}

impl Trajectory<Complex64> {
    /// CSV with header `t,x,u_re,u_im,du_re,du_im`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,x,u_re,u_im,du_re,du_im\n");
        for (i, x) in self.x().iter().enumerate() {
            let _ = writeln!(
                out,
                "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
                self.t[i], x, self.u[i].re, self.u[i].im, self.du[i].re, self.du[i].im
            );
        }
        out
    }
}

/// Where the initial data is imposed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum Start {
    /// `u(0) = u`, `u'(0) = du`.
    Left { u: f64, du: f64 },
    /// `u(T) = u`, `u'(T) = du`.
    Right { u: f64, du: f64 },
}

impl Start {
    pub(crate) fn phi(p: &Problem) -> Self {
        Start::Left { u: 1.0, du: p.h }
    }
    pub(crate) fn psi(p: &Problem) -> Self {
        Start::Right {
            u: 1.0,
            du: -p.big_h,
        }
    }
    pub(crate) fn sine() -> Self {
        Start::Left { u: 0.0, du: 1.0 }
    }
}

/// Extra quantities carried along a shot.
#[derive(Default)]
pub(crate) struct Carry<'a> {
    /// Integrate `d(u, u')/d lambda`.
    pub variational: bool,
    /// Accumulate `int u^2 dt` over the traversed interval.
    pub norm: bool,
    /// Accumulate `int u^2 b_k(t) dt` for a basis filled by the closure.
    pub basis: Option<(&'a (dyn Fn(f64, &mut [f64]) + Sync), usize)>,
}

/// State at the far end of a shot. Integrals are oriented from 0 to T.
#[derive(Debug, Clone)]
pub(crate) struct Shot<S> {
    pub u: S,
    pub du: S,
    pub u_l: S,
    pub du_l: S,
    pub norm: S,
    pub basis: Vec<S>,
}

/// Integrates across the whole interval from `start`, carrying the
/// requested extras. `on_step` sees every accepted state.
pub(crate) fn shoot<S: Scalar + LambdaDisplay>(
    p: &Problem,
    lambda: S,
    start: Start,
    carry: &Carry<'_>,
    ode: &Dopri5,
    on_step: &mut dyn FnMut(f64, &[S]),
) -> Result<Shot<S>> {
    let t_end = p.t_end();
    let (t0, t1, u0, du0) = match start {
        Start::Left { u, du } => (0.0, t_end, u, du),
        Start::Right { u, du } => (t_end, 0.0, u, du),
    };
    let var_at = 2;
    let norm_at = if carry.variational { 4 } else { 2 };
    let basis_at = norm_at + usize::from(carry.norm);
    let m = carry.basis.map_or(0, |(_, m)| m);
    let n = basis_at + m;
    let mut y = vec![S::zero(); n];
    y[0] = S::from_real(u0);
    y[1] = S::from_real(du0);

    let mut landings = p.q.breakpoints();
    landings.retain(|&b| b > 0.0 && b < t_end);
    if t1 < t0 {
        landings.reverse();
    }

    let order = p.order;
    let q = &p.q;
    let mut scratch = vec![0.0; m];
    let rhs = |t: f64, y: &[S], dy: &mut [S]| {
        let k = S::from_real(q.eval_t(t, order)) - lambda;
        dy[0] = y[1];
        dy[1] = k * y[0];
        if carry.variational {
            dy[var_at] = y[var_at + 1];
            dy[var_at + 1] = k * y[var_at] - y[0];
        }
        let sq = y[0] * y[0];
        if carry.norm {
            dy[norm_at] = sq;
        }
        if let Some((fill, _)) = carry.basis {
            fill(t, &mut scratch);
            for (j, b) in scratch.iter().enumerate() {
                dy[basis_at + j] = sq * *b;
            }
        }
    };
    ode.integrate(rhs, t0, t1, &mut y, &landings, |_, _| {}, |t, y| on_step(t, y))
        .map_err(|e| Error::Integration {
            lambda: lambda.display(),
            reason: e.to_string(),
        })?;
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::Integration {
            lambda: lambda.display(),
            reason: "non-finite state".into(),
        });
    }
    let orient = if t1 < t0 { -1.0 } else { 1.0 };
    Ok(Shot {
        u: y[0],
        du: y[1],
        u_l: if carry.variational { y[var_at] } else { S::zero() },
        du_l: if carry.variational { y[var_at + 1] } else { S::zero() },
        norm: if carry.norm { y[norm_at] * orient } else { S::zero() },
        basis: y[basis_at..].iter().map(|v| *v * orient).collect(),
    })
}

/// Formats a spectral parameter for error messages.
pub trait LambdaDisplay {
    fn display(&self) -> String;
}

impl LambdaDisplay for f64 {
    fn display(&self) -> String {
        format!("{self}")
    }
}

impl LambdaDisplay for Complex64 {
    fn display(&self) -> String {
        format!("{}{:+}i", self.re, self.im)
    }
}

fn trajectory<S: Scalar + LambdaDisplay>(
    p: &Problem,
    lambda: S,
    start: Start,
    opts: &SolveOptions,
) -> Result<Trajectory<S>> {
    let n = opts.grid_points.max(2);
    let t_end = p.t_end();
    let t: Vec<f64> = (0..n)
        .map(|i| if i + 1 == n { t_end } else { t_end * i as f64 / (n - 1) as f64 })
        .collect();
    let forward = matches!(start, Start::Left { .. });
    let (u0, du0) = match start {
        Start::Left { u, du } | Start::Right { u, du } => (u, du),
    };

    // interior grid nodes plus potential breakpoints, in travel order
    let mut landings: Vec<(f64, Option<usize>)> = (1..n - 1).map(|i| (t[i], Some(i))).collect();
    for b in p.q.breakpoints() {
        if b <= 0.0 || b >= t_end {
            continue;
        }
        if !landings.iter().any(|(s, _)| (s - b).abs() <= 1e-12 * t_end) {
            landings.push((b, None));
        }
    }
    landings.sort_by(|a, b| a.0.total_cmp(&b.0));
    if !forward {
        landings.reverse();
    }
    let stops: Vec<f64> = landings.iter().map(|l| l.0).collect();

    let mut u = vec![S::zero(); n];
    let mut du = vec![S::zero(); n];
    let (first, last) = if forward { (0, n - 1) } else { (n - 1, 0) };
    u[first] = S::from_real(u0);
    du[first] = S::from_real(du0);

    let order = p.order;
    let q = &p.q;
    let rhs = |t: f64, y: &[S], dy: &mut [S]| {
        dy[0] = y[1];
        dy[1] = (S::from_real(q.eval_t(t, order)) - lambda) * y[0];
    };
    let mut y = vec![S::from_real(u0), S::from_real(du0)];
    let (t0, t1) = if forward { (0.0, t_end) } else { (t_end, 0.0) };
    opts.ode
        .integrate(
            rhs,
            t0,
            t1,
            &mut y,
            &stops,
            |i, y| {
                if let Some(k) = landings[i].1 {
                    u[k] = y[0];
                    du[k] = y[1];
                }
            },
            |_, _| {},
        )
        .map_err(|e| Error::Integration {
            lambda: lambda.display(),
            reason: e.to_string(),
        })?;
    u[last] = y[0];
    du[last] = y[1];
    if u.iter().chain(&du).any(|v| !v.is_finite()) {
        return Err(Error::Integration {
            lambda: lambda.display(),
            reason: "non-finite trajectory".into(),
        });
    }
    Ok(Trajectory {
        lambda,
        alpha: p.order.value(),
        t,
        u,
        du,
    })
}

/// `phi(x, lambda)`: `phi(0) = 1`, `D phi(0) = h`.
pub fn solve_phi<S: Scalar + LambdaDisplay>(
    p: &Problem,
    lambda: S,
    opts: &SolveOptions,
) -> Result<Trajectory<S>> {
    trajectory(p, lambda, Start::phi(p), opts)
}

/// `psi(x, lambda)`: `psi(pi) = 1`, `D psi(pi) = -H`.
pub fn solve_psi<S: Scalar + LambdaDisplay>(
    p: &Problem,
    lambda: S,
    opts: &SolveOptions,
) -> Result<Trajectory<S>> {
    trajectory(p, lambda, Start::psi(p), opts)
}

/// `S(x, lambda)` with `S(0) = 0`, `D S(0) = 1`, so that `W[phi, S] = 1`.
pub fn solve_s<S: Scalar + LambdaDisplay>(
    p: &Problem,
    lambda: S,
    opts: &SolveOptions,
) -> Result<Trajectory<S>> {
    trajectory(p, lambda, Start::sine(), opts)
}

/// Fractional Wronskian `a.u * b.du - b.u * a.du` at grid node `t`.
pub fn wronskian<S: Scalar>(a: &Trajectory<S>, b: &Trajectory<S>, t: f64) -> Result<S> {
    if !a.same_grid(b) {
        return Err(Error::Usage(
            "wronskian needs trajectories on the same grid and lambda".into(),
        ));
    }
    let t_end = *a.t.last().expect("non-empty grid");
    let step = t_end / (a.t.len() - 1) as f64;
    let pos = t / step;
    let i = pos.round();
    if !(i >= 0.0 && (i as usize) < a.t.len() && (pos - i).abs() < 1e-9) {
        return Err(Error::Usage(format!("t = {t} is not a grid node")));
    }
    let i = i as usize;
    Ok(a.u[i] * b.du[i] - b.u[i] * a.du[i])
}

/// The Wronskian at every grid node.
pub fn wronskian_profile<S: Scalar>(a: &Trajectory<S>, b: &Trajectory<S>) -> Result<Vec<S>> {
    if !a.same_grid(b) {
        return Err(Error::Usage(
            "wronskian needs trajectories on the same grid and lambda".into(),
        ));
    }
    Ok((0..a.t.len())
        .map(|i| a.u[i] * b.du[i] - b.u[i] * a.du[i])
        .collect())
}

/// `Delta(lambda) = V(phi) = D phi(pi) + H phi(pi)`.
pub fn char_delta<S: Scalar + LambdaDisplay>(p: &Problem, lambda: S) -> Result<S> {
    char_delta_with(p, lambda, &Dopri5::default())
}

pub fn char_delta_with<S: Scalar + LambdaDisplay>(p: &Problem, lambda: S, ode: &Dopri5) -> Result<S> {
    let s = shoot(p, lambda, Start::phi(p), &Carry::default(), ode, &mut |_, _| {})?;
    Ok(s.du + s.u * p.big_h)
}

/// `-U(psi) = h psi(0) - D psi(0)`, the same function as [`char_delta`]
/// computed from the other end.
pub fn char_delta_from_psi<S: Scalar + LambdaDisplay>(p: &Problem, lambda: S, ode: &Dopri5) -> Result<S> {
    let s = shoot(p, lambda, Start::psi(p), &Carry::default(), ode, &mut |_, _| {})?;
    Ok(s.u * p.h - s.du)
}

/// `Delta_1(xi) = psi(0, xi)`, whose zeros are the spectrum with `y(0) = 0`.
pub fn char_delta1<S: Scalar + LambdaDisplay>(p: &Problem, xi: S) -> Result<S> {
    char_delta1_with(p, xi, &Dopri5::default())
}

pub fn char_delta1_with<S: Scalar + LambdaDisplay>(p: &Problem, xi: S, ode: &Dopri5) -> Result<S> {
    let s = shoot(p, xi, Start::psi(p), &Carry::default(), ode, &mut |_, _| {})?;
    Ok(s.u)
}

/// Both sides of the Lagrange identity for two problems sharing `alpha`:
/// `(int_0^pi (q1 - q2) phi1 phi2 d_alpha x, [phi2 D phi1 - phi1 D phi2]_0^pi)`.
pub fn lagrange_identity(p1: &Problem, p2: &Problem, lambda: f64, ode: &Dopri5) -> Result<(f64, f64)> {
    if p1.order != p2.order {
        return Err(Error::Usage("problems must share alpha".into()));
    }
    let order = p1.order;
    let t_end = p1.t_end();
    let mut landings: Vec<f64> = p1
        .q
        .breakpoints()
        .into_iter()
        .chain(p2.q.breakpoints())
        .filter(|&b| b > 0.0 && b < t_end)
        .collect();
    landings.sort_by(f64::total_cmp);
    landings.dedup();
    let rhs = |t: f64, y: &[f64], dy: &mut [f64]| {
        let q1 = p1.q.eval_t(t, order);
        let q2 = p2.q.eval_t(t, order);
        dy[0] = y[1];
        dy[1] = (q1 - lambda) * y[0];
        dy[2] = y[3];
        dy[3] = (q2 - lambda) * y[2];
        dy[4] = (q1 - q2) * y[0] * y[2];
    };
    let mut y = [1.0, p1.h, 1.0, p2.h, 0.0];
    ode.integrate(rhs, 0.0, t_end, &mut y, &landings, |_, _| {}, |_, _| {})
        .map_err(|e| Error::Integration {
            lambda: lambda.to_string(),
            reason: e.to_string(),
        })?;
    let bracket = (y[2] * y[1] - y[0] * y[3]) - (p1.h - p2.h);
    Ok((y[4], bracket))
}

/// `d Delta / d lambda` from the variational equations.
pub fn delta_prime<S: Scalar + LambdaDisplay>(p: &Problem, lambda: S) -> Result<S> {
    delta_prime_with(p, lambda, &Dopri5::default())
}

pub fn delta_prime_with<S: Scalar + LambdaDisplay>(p: &Problem, lambda: S, ode: &Dopri5) -> Result<S> {
    let carry = Carry {
        variational: true,
        ..Carry::default()
    };
    let s = shoot(p, lambda, Start::phi(p), &carry, ode, &mut |_, _| {})?;
    Ok(s.du_l + s.u_l * p.big_h)
}

/// Relative distance below which a spectral parameter counts as a pole.
pub const POLE_TOL: f64 = 1e-10;

/// `M(lambda) = -psi(0, lambda) / Delta(lambda)`.
pub fn weyl_function<S: Scalar + LambdaDisplay>(p: &Problem, lambda: S) -> Result<S> {
    weyl_function_with(p, lambda, &Dopri5::default())
}

pub fn weyl_function_with<S: Scalar + LambdaDisplay>(p: &Problem, lambda: S, ode: &Dopri5) -> Result<S> {
    let carry = Carry {
        variational: true,
        ..Carry::default()
    };
    let s = shoot(p, lambda, Start::psi(p), &carry, ode, &mut |_, _| {})?;
    let delta = s.u * p.h - s.du;
    let delta_l = s.u_l * p.h - s.du_l;
    let scale = lambda.modulus().max(1.0);
    if delta.modulus() <= POLE_TOL * scale * delta_l.modulus() || delta.modulus() == 0.0 {
        return Err(Error::Pole {
            lambda: lambda.display(),
        });
    }
    Ok(-s.u / delta)
}

/// Truncated product for `Delta(lambda) / Delta(mu)` from leading eigenvalues:
/// `prod_n (lambda_n - lambda) / (lambda_n - mu)`.
pub fn delta_product_ratio(eigs: &[f64], lambda: f64, mu: f64) -> Result<f64> {
    if eigs.is_empty() {
        return Err(Error::Usage("need at least one eigenvalue".into()));
    }
    if lambda == mu {
        return Ok(1.0);
    }
    let mut ratio = 1.0;
    for &e in eigs {
        let den = e - mu;
        if den == 0.0 {
            return Err(Error::Pole {
                lambda: mu.to_string(),
            });
        }
        ratio *= (e - lambda) / den;
    }
    Ok(ratio)
}
