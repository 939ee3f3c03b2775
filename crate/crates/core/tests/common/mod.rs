//! Independent reference solver: second-order finite differences in t with
//! ghost-point Robin ends, symmetrized to a tridiagonal matrix whose
//! eigenvalues are counted by Sturm sequences and located by bisection.
//! Two resolutions are combined by Richardson extrapolation.

#![allow(dead_code)]

use std::f64::consts::PI;

/// `-u'' + q(t) u = lambda u` on `[0, t_end]` with `u'(0) = h u(0)` (or
/// `u(0) = 0` when `h` is `None`) and `u'(T) = -H u(T)`.
pub struct Oracle<'a> {
    pub q: &'a dyn Fn(f64) -> f64,
    pub t_end: f64,
    pub h: Option<f64>,
    pub big_h: f64,
}

struct Tridiagonal {
    diag: Vec<f64>,
    off: Vec<f64>,
}

impl Tridiagonal {
    /// Number of eigenvalues strictly below `x`.
    fn count_below(&self, x: f64) -> usize {
        let mut count = 0;
        let mut d = 1.0;
        for i in 0..self.diag.len() {
            let b2 = if i == 0 { 0.0 } else { self.off[i - 1] * self.off[i - 1] };
            d = self.diag[i] - x - if i == 0 { 0.0 } else { b2 / d };
            if d == 0.0 {
                d = -1e-300;
            }
            if d < 0.0 {
                count += 1;
            }
        }
        count
    }

    /// The `k`-th smallest eigenvalue by bisection.
    fn eigenvalue(&self, k: usize) -> f64 {
        let bound = self
            .diag
            .iter()
            .enumerate()
            .map(|(i, a)| {
                let left = if i > 0 { self.off[i - 1].abs() } else { 0.0 };
                let right = self.off.get(i).map_or(0.0, |b| b.abs());
                (a - left - right, a + left + right)
            })
            .fold((f64::INFINITY, f64::NEG_INFINITY), |acc, (lo, hi)| (acc.0.min(lo), acc.1.max(hi)));
        let (mut lo, mut hi) = bound;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if self.count_below(mid) > k {
                hi = mid;
            } else {
                lo = mid;
            }
            if hi - lo <= 1e-15 * hi.abs().max(1.0) {
                break;
            }
        }
        0.5 * (lo + hi)
    }
}

impl Oracle<'_> {
    fn matrix(&self, n: usize) -> Tridiagonal {
        let d = self.t_end / n as f64;
        let inv = 1.0 / (d * d);
        let t = |i: usize| i as f64 * d;
        // A u = lambda B u with B = diag(1/2, 1, ..., 1, 1/2) at Robin ends
        let first = if self.h.is_some() { 0 } else { 1 };
        let mut diag = Vec::new();
        let mut b = Vec::new();
        for i in first..=n {
            let (a, w) = if i == 0 {
                (inv * (1.0 + d * self.h.unwrap()) + 0.5 * (self.q)(t(0)), 0.5)
            } else if i == n {
                (inv * (1.0 + d * self.big_h) + 0.5 * (self.q)(t(n)), 0.5)
            } else {
                (2.0 * inv + (self.q)(t(i)), 1.0)
            };
            diag.push(a / w);
            b.push(w);
        }
        let off = (0..diag.len() - 1).map(|i| -inv / (b[i] * b[i + 1]).sqrt()).collect();
        Tridiagonal { diag, off }
    }

    /// First `count` eigenvalues, extrapolated from `n` and `2n` cells.
    pub fn eigenvalues(&self, count: usize, n: usize) -> Vec<f64> {
        let coarse = self.matrix(n);
        let fine = self.matrix(2 * n);
        (0..count)
            .map(|k| {
                let a = coarse.eigenvalue(k);
                let b = fine.eigenvalue(k);
                b + (b - a) / 3.0
            })
            .collect()
    }
}

pub fn t_end(alpha: f64) -> f64 {
    PI.powf(alpha) / alpha
}

pub fn x_of(t: f64, alpha: f64) -> f64 {
    (alpha * t).powf(1.0 / alpha)
}
