//! Gauss–Legendre rules and an adaptive composite integrator built on them.

use std::sync::LazyLock;

/// Nodes per Gauss–Legendre panel.
pub const PANEL_NODES: usize = 32;

/// Nodes and weights of the `PANEL_NODES`-point rule on [-1, 1].
pub static GAUSS_LEGENDRE_32: LazyLock<GaussLegendre> =
    LazyLock::new(|| GaussLegendre::new(PANEL_NODES));

#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    /// Builds the `n`-point rule by Newton iteration on P_n.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1);
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        for i in 0..n.div_ceil(2) {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(n, x);
            dp = if d != 0.0 { d } else { dp };
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        GaussLegendre { nodes, weights }
    }

    /// Applies the rule on [a, b].
    pub fn integrate(&self, a: f64, b: f64, mut f: impl FnMut(f64) -> f64) -> f64 {
        let mid = 0.5 * (a + b);
        let half = 0.5 * (b - a);
        let mut acc = 0.0;
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            acc += w * f(mid + half * x);
        }
        acc * half
    }
}

// P_n(x) and P_n'(x) by the three-term recurrence.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Adaptive composite Gauss–Legendre quadrature with 32 nodes per panel.
///
/// Panels are bisected until the two-halves estimate agrees with the whole
/// panel to `tol` (mixed absolute/relative).
pub fn integrate_adaptive(a: f64, b: f64, tol: f64, f: &impl Fn(f64) -> f64) -> f64 {
    if a == b {
        return 0.0;
    }
    let rule = &*GAUSS_LEGENDRE_32;
    let whole = rule.integrate(a, b, f);
    refine(rule, a, b, whole, tol, f, 0)
}

fn refine(
    rule: &GaussLegendre,
    a: f64,
    b: f64,
    whole: f64,
    tol: f64,
    f: &impl Fn(f64) -> f64,
    depth: usize,
) -> f64 {
    let m = 0.5 * (a + b);
    let left = rule.integrate(a, m, f);
    let right = rule.integrate(m, b, f);
    let split = left + right;
    if depth >= 40 || (split - whole).abs() <= tol * split.abs().max(1.0) {
        return split;
    }
    refine(rule, a, m, left, 0.5 * tol, f, depth + 1)
        + refine(rule, m, b, right, 0.5 * tol, f, depth + 1)
}
