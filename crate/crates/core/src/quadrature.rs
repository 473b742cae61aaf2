//! Quadrature rules: Gauss-Legendre nodes and the product-trapezoid weights
//! for `∫_0^{t_k} (t_k - τ)^{p-1} φ(τ) dτ` on a uniform grid.

use std::f64::consts::PI;

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..(n + 1) / 2 {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 1 { x } else { p1 };
            let pnm1 = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (x * pn - pnm1) / (x * x - 1.0);
            let dx = pn / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

/// Fixed Gauss-Legendre rule mapped onto arbitrary panels.
#[derive(Debug, Clone)]
pub struct GaussRule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussRule {
    pub fn new(n: usize) -> Self {
        let (nodes, weights) = gauss_legendre(n);
        GaussRule { nodes, weights }
    }

    /// `(node, weight)` pairs for `[a, b]`.
    pub fn panel(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(x, w)| (mid + half * x, half * w))
    }

    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        self.panel(a, b).map(|(x, w)| w * f(x)).sum()
    }
}

/// `(d+1)^{q} - 2 d^{q} + (d-1)^{q}` for `d >= 1`, without the cancellation
/// of the direct form at large `d`.
fn second_difference(d: f64, q: f64) -> f64 {
    if d < 2.0 {
        return (d + 1.0).powf(q) - 2.0 * d.powf(q) + (d - 1.0).powf(q);
    }
    let up = (q * (1.0 / d).ln_1p()).exp_m1();
    let down = (q * (-1.0 / d).ln_1p()).exp_m1();
    d.powf(q) * (up + down)
}

/// Product-trapezoid weights on a uniform grid.
///
/// `∫_0^{kh} (kh - τ)^{p-1} φ(τ) dτ ≈ scale · (start(k) φ_0 + Σ_{j=1}^{k} inner(k-j) φ_j)`
/// with `scale = h^p / (p (p+1))`; exact for piecewise-linear `φ`.
#[derive(Debug, Clone)]
pub struct ProductTrapezoid {
    p: f64,
    scale: f64,
    inner: Vec<f64>,
    start: Vec<f64>,
}

impl ProductTrapezoid {
    pub fn new(p: f64, h: f64, max_k: usize) -> Self {
        let q = p + 1.0;
        let mut inner = Vec::with_capacity(max_k + 1);
        inner.push(1.0);
        for d in 1..=max_k {
            inner.push(second_difference(d as f64, q));
        }
        let mut start = Vec::with_capacity(max_k + 1);
        start.push(0.0);
        for k in 1..=max_k {
            let kf = k as f64;
            // (k-1)^{p+1} - (k-1-p) k^p = k^p [(k-1)((1 - 1/k)^p - 1) + p]
            let v = kf.powf(p) * ((kf - 1.0) * (p * (-1.0 / kf).ln_1p()).exp_m1() + p);
            start.push(v);
        }
        ProductTrapezoid {
            p,
            scale: h.powf(p) / (p * q),
            inner,
            start,
        }
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn max_k(&self) -> usize {
        self.inner.len() - 1
    }

    /// Unscaled interior weight of lag `d = k - j`, `j >= 1`.
    #[inline]
    pub fn inner(&self, d: usize) -> f64 {
        self.inner[d]
    }

    /// Unscaled weight of node `j` in the integral ending at node `k`.
    #[inline]
    pub fn weight(&self, j: usize, k: usize) -> f64 {
        debug_assert!(j <= k && k >= 1);
        if j == 0 {
            self.start[k]
        } else {
            self.inner[k - j]
        }
    }

    /// Scaled weights `w_0..=w_k` for the integral ending at node `k`.
    pub fn weights(&self, k: usize) -> Vec<f64> {
        if k == 0 {
            return vec![0.0];
        }
        (0..=k).map(|j| self.scale * self.weight(j, k)).collect()
    }
}

/// Rectangle-rule weights `b_d = (h^p/p) ((d+1)^p - d^p)` of the fractional
/// Adams-Bashforth predictor, indexed by `d = k - j`.
pub fn rectangle_weights(p: f64, h: f64, max_d: usize) -> Vec<f64> {
    let c = h.powf(p) / p;
    (0..=max_d)
        .map(|d| {
            if d == 0 {
                c
            } else {
                let df = d as f64;
                c * df.powf(p) * (p * (1.0 / df).ln_1p()).exp_m1()
            }
        })
        .collect()
}
