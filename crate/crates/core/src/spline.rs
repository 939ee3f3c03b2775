//! Cubic spline interpolation on strictly increasing knots.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EndCondition {
    Natural,
    /// First derivatives prescribed at the two ends.
    Clamped(f64, f64),
}

#[derive(Debug, Clone)]
pub struct CubicSpline {
    knots: Vec<f64>,
    values: Vec<f64>,
    // second derivatives at the knots
    curvature: Vec<f64>,
}

impl CubicSpline {
    pub fn new(knots: Vec<f64>, values: Vec<f64>, end: EndCondition) -> Result<Self> {
        let n = knots.len();
        if n < 2 || values.len() != n {
            return Err(Error::Usage(format!(
                "spline needs matching knot/value lists of length >= 2 (got {} and {})",
                n,
                values.len()
            )));
        }
        if knots.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Usage("spline knots must be strictly increasing".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numeric("non-finite spline sample".into()));
        }

        // Tridiagonal system for the second derivatives (Thomas algorithm).
        let mut sub = vec![0.0; n];
        let mut diag = vec![0.0; n];
        let mut sup = vec![0.0; n];
        let mut rhs = vec![0.0; n];
        for i in 1..n - 1 {
            let hl = knots[i] - knots[i - 1];
            let hr = knots[i + 1] - knots[i];
            sub[i] = hl / 6.0;
            diag[i] = (hl + hr) / 3.0;
            sup[i] = hr / 6.0;
            rhs[i] = (values[i + 1] - values[i]) / hr - (values[i] - values[i - 1]) / hl;
        }
        match end {
            EndCondition::Natural => {
                diag[0] = 1.0;
                diag[n - 1] = 1.0;
            }
            EndCondition::Clamped(d0, dn) => {
                let h0 = knots[1] - knots[0];
                diag[0] = h0 / 3.0;
                sup[0] = h0 / 6.0;
                rhs[0] = (values[1] - values[0]) / h0 - d0;
                let hn = knots[n - 1] - knots[n - 2];
                sub[n - 1] = hn / 6.0;
                diag[n - 1] = hn / 3.0;
                rhs[n - 1] = dn - (values[n - 1] - values[n - 2]) / hn;
            }
        }
        for i in 1..n {
            let m = sub[i] / diag[i - 1];
            diag[i] -= m * sup[i - 1];
            rhs[i] -= m * rhs[i - 1];
        }
        let mut curvature = vec![0.0; n];
        curvature[n - 1] = rhs[n - 1] / diag[n - 1];
        for i in (0..n - 1).rev() {
            curvature[i] = (rhs[i] - sup[i] * curvature[i + 1]) / diag[i];
        }
        Ok(CubicSpline {
            knots,
            values,
            curvature,
        })
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    fn segment(&self, x: f64) -> usize {
        let n = self.knots.len();
        match self.knots.binary_search_by(|k| k.total_cmp(&x)) {
            Ok(i) => i.min(n - 2),
            Err(0) => 0,
            Err(i) => (i - 1).min(n - 2),
        }
    }

    /// Value at `x`; extrapolates with the end cubic outside the knot range.
    pub fn eval(&self, x: f64) -> f64 {
        let i = self.segment(x);
        let h = self.knots[i + 1] - self.knots[i];
        let a = self.knots[i + 1] - x;
        let b = x - self.knots[i];
        if b == 0.0 {
            return self.values[i];
        }
        if a == 0.0 {
            return self.values[i + 1];
        }
        let (m0, m1) = (self.curvature[i], self.curvature[i + 1]);
        (m0 * a * a * a + m1 * b * b * b) / (6.0 * h)
            + (self.values[i] / h - m0 * h / 6.0) * a
            + (self.values[i + 1] / h - m1 * h / 6.0) * b
    }

    /// First derivative at `x`.
    pub fn derivative(&self, x: f64) -> f64 {
        let i = self.segment(x);
        let h = self.knots[i + 1] - self.knots[i];
        let a = self.knots[i + 1] - x;
        let b = x - self.knots[i];
        let (m0, m1) = (self.curvature[i], self.curvature[i + 1]);
        (-m0 * a * a + m1 * b * b) / (2.0 * h) + (self.values[i + 1] - self.values[i]) / h
            - (m1 - m0) * h / 6.0
    }
}
