//! Local stable manifold through the fixed point of the operator `T_σ`.
//!
//! Everything is computed in Jordan coordinates `y = P^{-1} x` on a uniform
//! grid over `[0, horizon + tail_cut]`. Stable blocks use
//!
//! `y_s(t) = E_p(t^p J_s) σ + ∫_0^t (t-τ)^{p-1} E_{p,p}((t-τ)^p J_s) g_s(τ) dτ`.
//!
//! For unstable blocks the exponential parts of `E_p` and `E_{p,p}` cancel
//! against the tail integral, which leaves
//!
//! `y_u(t) = K_1(t) σ* + ∫_0^t (t-τ)^{p-1} R(t-τ) g_u(τ) dτ - ∫_0^∞ Q(s) g_u(t+s) ds`
//!
//! with `K_1`, `R` the algebraic remainders of `E_p` and `E_{p,p}`,
//! `Q(s) = B̃(-s)/(-s)` and `σ* = -p ∫_0^∞ Q(s) g_u(s) ds`. No term grows
//! exponentially, so late grid nodes are as accurate as early ones.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::matrix_ml::{matrix_ml_eval, psi_tilde_over_t};
use crate::mittag_leffler::{exp_root_coefficients, ml_lambda_derivative, ml_lambda_remainder, MlParams};
use crate::quadrature::{GaussRule, ProductTrapezoid};
use crate::special::gamma_real;
use crate::spectral::{CMatrix, JordanSystem};

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// Longest tail cut the envelope search will consider.
pub const MAX_TAIL_CUT: f64 = 1e4;
/// Trajectories leaving the ball of radius `DIVERGENCE_FACTOR * r` abort the iteration.
pub const DIVERGENCE_FACTOR: f64 = 1e3;
pub const MIN_GRID_INTERVALS: usize = 16;
const LIPSCHITZ_SAMPLES: usize = 1000;
const LIPSCHITZ_SEED: u64 = 0x5eed_f00d;
const TAIL_GAUSS_POINTS: usize = 8;
const MAX_STARTING_WEIGHTS: usize = 8;

/// Trajectory sampled at `t_k = k h`, stored row-major (`dim` values per node).
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryGrid {
    step: f64,
    dim: usize,
    values: Vec<f64>,
}

impl TrajectoryGrid {
    pub fn new(step: f64, dim: usize, values: Vec<f64>) -> Result<Self> {
        if !(step > 0.0 && step.is_finite()) {
            return Err(Error::InvalidInput(format!("grid step must be positive, got {step}")));
        }
        if dim == 0 || values.len() % dim != 0 {
            return Err(Error::InvalidInput("grid values do not match the dimension".into()));
        }
        if values.len() / dim < MIN_GRID_INTERVALS + 1 {
            return Err(Error::InvalidInput(format!(
                "grid needs at least {MIN_GRID_INTERVALS} intervals"
            )));
        }
        Ok(TrajectoryGrid { step, dim, values })
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.values.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn horizon(&self) -> f64 {
        (self.len() - 1) as f64 * self.step
    }

    pub fn time(&self, k: usize) -> f64 {
        k as f64 * self.step
    }

    pub fn value(&self, k: usize) -> &[f64] {
        &self.values[k * self.dim..(k + 1) * self.dim]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Largest absolute component over the whole grid.
    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

type FieldFn = dyn Fn(&[f64], &mut [f64]) + Send + Sync;

/// Nonlinearity `f` with `f(0) = 0` and a sampled Lipschitz constant on the
/// ball of radius `r`.
#[derive(Clone)]
pub struct VectorField {
    dim: usize,
    radius: f64,
    lipschitz: f64,
    f: Arc<FieldFn>,
}

impl std::fmt::Debug for VectorField {
    fn fmt(&self, fm: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        fm.debug_struct("VectorField")
            .field("dim", &self.dim)
            .field("radius", &self.radius)
            .field("lipschitz", &self.lipschitz)
            .finish()
    }
}

impl VectorField {
    pub fn new<F>(dim: usize, radius: f64, f: F) -> Result<Self>
    where
        F: Fn(&[f64], &mut [f64]) + Send + Sync + 'static,
    {
        if dim == 0 {
            return Err(Error::InvalidInput("vector field dimension must be >= 1".into()));
        }
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::InvalidInput(format!("radius must be positive, got {radius}")));
        }
        let mut out = vec![0.0; dim];
        f(&vec![0.0; dim], &mut out);
        if out.iter().any(|v| !v.is_finite() || v.abs() > 1e-12) {
            return Err(Error::InvalidInput(format!("f(0) must vanish, got {out:?}")));
        }
        let mut field = VectorField {
            dim,
            radius,
            lipschitz: 0.0,
            f: Arc::new(f),
        };
        field.lipschitz = field.sample_lipschitz(LIPSCHITZ_SAMPLES, LIPSCHITZ_SEED);
        if !field.lipschitz.is_finite() {
            return Err(Error::InvalidInput("f is not finite on the ball of radius r".into()));
        }
        Ok(field)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    /// Sampled Lipschitz constant `ε_r` on the ball of radius `r`.
    pub fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    pub fn eval_into(&self, x: &[f64], out: &mut [f64]) {
        (self.f)(x, out)
    }

    pub fn eval(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        self.eval_into(x, &mut out);
        out
    }

    /// Largest `|f(x) - f(y)| / |x - y|` over `samples` random pairs in the ball.
    pub fn sample_lipschitz(&self, samples: usize, seed: u64) -> f64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let point = |rng: &mut ChaCha8Rng| loop {
            let v: Vec<f64> = (0..self.dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let n2: f64 = v.iter().map(|a| a * a).sum();
            if n2 <= 1.0 {
                return v.into_iter().map(|a| a * self.radius).collect::<Vec<_>>();
            }
        };
        let mut best: f64 = 0.0;
        for _ in 0..samples {
            let x = point(&mut rng);
            let y = point(&mut rng);
            let dx = norm2_diff(&x, &y);
            if dx < 1e-300 {
                continue;
            }
            let df = norm2_diff(&self.eval(&x), &self.eval(&y));
            best = best.max(df / dx);
        }
        best
    }
}

fn norm2_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Grid step, reported horizon and the certified tail cut.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureSpec {
    pub step: f64,
    pub horizon: f64,
    pub tail_cut: f64,
    pub tol: f64,
}

impl QuadratureSpec {
    /// Spec whose tail cut makes the analytic tail envelope smaller than `tol`.
    pub fn certified(system: &JordanSystem, step: f64, horizon: f64, tol: f64) -> Result<Self> {
        if !(step > 0.0 && step.is_finite()) {
            return Err(Error::InvalidInput(format!("step must be positive, got {step}")));
        }
        if !(horizon.is_finite() && horizon >= MIN_GRID_INTERVALS as f64 * step) {
            return Err(Error::InvalidInput(format!(
                "horizon {horizon} must cover at least {MIN_GRID_INTERVALS} steps of {step}"
            )));
        }
        if !(tol > 0.0 && tol < 1.0) {
            return Err(Error::InvalidInput(format!("tolerance must lie in (0, 1), got {tol}")));
        }
        let tail_cut = certify_tail_cut(system, tol)?;
        Ok(QuadratureSpec {
            step,
            horizon,
            tail_cut,
            tol,
        })
    }

    /// Replaces the tail cut; it may only grow.
    pub fn with_tail_cut(mut self, tail_cut: f64) -> Result<Self> {
        if !(tail_cut.is_finite() && tail_cut >= self.tail_cut) {
            return Err(Error::InvalidInput(format!(
                "tail cut {tail_cut} is below the certified {}",
                self.tail_cut
            )));
        }
        self.tail_cut = tail_cut;
        Ok(self)
    }

    pub fn report_nodes(&self) -> usize {
        (self.horizon / self.step).round() as usize
    }

    pub fn total_nodes(&self) -> usize {
        ((self.horizon + self.tail_cut) / self.step).ceil() as usize
    }

    fn tail_nodes(&self) -> usize {
        (self.tail_cut / self.step).ceil() as usize
    }
}

/// `∫_T^∞ s^j e^{-a s} ds = e^{-aT} Σ_{r=0}^{j} j!/r! T^r / a^{j-r+1}`.
fn power_exp_tail(j: usize, a: f64, t: f64) -> f64 {
    let mut sum = 0.0;
    let mut t_pow = 1.0;
    let mut ratio = (1..=j).map(|v| v as f64).product::<f64>(); // j!/r! at r = 0
    for r in 0..=j {
        sum += ratio * t_pow / a.powi((j - r + 1) as i32);
        t_pow *= t;
        if r < j {
            ratio /= (r + 1) as f64;
        }
    }
    (-a * t).exp() * sum
}

/// Upper bound of `∫_T^∞ ‖(p/τ) B̃(-τ)‖_∞ dτ` built from the exact
/// coefficients of each `Ψ̃_m`.
pub fn tail_envelope(system: &JordanSystem, t: f64) -> f64 {
    let p = system.p().value();
    let mut worst: f64 = 0.0;
    for b in &system.blocks()[system.stable_count()..] {
        let mu = (b.lambda.ln() / p).exp();
        let ln_abs = b.lambda.norm().ln();
        let mut row = 0.0;
        let mut fact = 1.0;
        for m in 0..b.size {
            if m > 0 {
                fact *= m as f64;
            }
            let coeffs = exp_root_coefficients(p, m + 1);
            for (idx, c) in coeffs.iter().enumerate() {
                let i = idx + 1;
                let lam_pow = (ln_abs * (i as f64 / p - (m + 1) as f64)).exp();
                row += c.abs() * lam_pow * power_exp_tail(i - 1, mu.re, t) / fact;
            }
        }
        worst = worst.max(p * row);
    }
    worst
}

/// Smallest cut (to bisection accuracy) with `tail_envelope(cut) < tol`.
pub fn certify_tail_cut(system: &JordanSystem, tol: f64) -> Result<f64> {
    if system.unstable_dim() == 0 {
        return Ok(0.0);
    }
    let env = |t: f64| tail_envelope(system, t);
    if !(env(MAX_TAIL_CUT) < tol) {
        return Err(Error::TailNotDecaying {
            tol,
            max_cut: MAX_TAIL_CUT,
        });
    }
    if env(0.0) < tol {
        return Ok(0.0);
    }
    let (mut lo, mut hi) = (0.0, MAX_TAIL_CUT);
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if env(mid) < tol {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi - lo < 1e-6 * hi {
            break;
        }
    }
    Ok(hi)
}

/// Forcing of a tail integral: samples on a uniform grid (linearly
/// interpolated, zero beyond the last node) or a function of time.
pub enum Signal<'a> {
    Grid(&'a TrajectoryGrid),
    Function(&'a dyn Fn(f64) -> Vec<f64>),
}

/// Rows of `Q(s) = B̃(-s)/(-s)` for one unstable block.
fn q_row(system: &JordanSystem, lambda: Complex64, size: usize, s: f64) -> Result<Vec<Complex64>> {
    (0..size).map(|m| psi_tilde_over_t(system.p(), -s, lambda, m)).collect()
}

/// `out[i] += Σ_{j>=i} row[j-i] v[j]`: upper-triangular Toeplitz product.
#[inline]
fn toeplitz_acc(row: &[Complex64], v: &[Complex64], out: &mut [Complex64], scale: f64) {
    let n = row.len();
    if n == 1 {
        out[0] += row[0] * v[0] * scale;
        return;
    }
    for i in 0..n {
        let mut acc = ZERO;
        for j in i..n {
            acc += row[j - i] * v[j];
        }
        out[i] += acc * scale;
    }
}

fn to_jordan(system: &JordanSystem, x: &[f64], out: &mut [Complex64]) {
    if system.has_identity_transform() {
        for (o, v) in out.iter_mut().zip(x) {
            *o = Complex64::new(*v, 0.0);
        }
    } else {
        let pinv = system.transform_inv();
        for (i, o) in out.iter_mut().enumerate() {
            *o = x.iter().enumerate().map(|(j, v)| pinv[(i, j)] * v).sum();
        }
    }
}

fn to_original(system: &JordanSystem, y: &[Complex64], out: &mut [f64]) {
    if system.has_identity_transform() {
        for (o, v) in out.iter_mut().zip(y) {
            *o = v.re;
        }
    } else {
        let pm = system.transform();
        for (i, o) in out.iter_mut().enumerate() {
            *o = y.iter().enumerate().map(|(j, v)| pm[(i, j)] * v).sum::<Complex64>().re;
        }
    }
}

/// `∫_0^∞ (p/τ) B̃(-τ) g(τ) dτ` in original coordinates, truncated at the
/// certified tail cut of `spec`.
pub fn tail_integral(system: &JordanSystem, g: Signal<'_>, spec: &QuadratureSpec) -> Result<Vec<f64>> {
    let n = system.dim();
    let p = system.p().value();
    let rule = GaussRule::new(TAIL_GAUSS_POINTS);
    let offsets = system.offsets();
    let unstable: Vec<_> = (system.stable_count()..system.blocks().len())
        .map(|i| (system.blocks()[i], offsets[i]))
        .collect();
    let mut acc = vec![ZERO; n];
    let mut gj = vec![ZERO; n];
    let mut add = |tau: f64, w: f64, gx: &[f64], acc: &mut [Complex64]| -> Result<()> {
        to_jordan(system, gx, &mut gj);
        for (b, o) in &unstable {
            let row = q_row(system, b.lambda, b.size, tau)?;
            toeplitz_acc(&row, &gj[*o..o + b.size], &mut acc[*o..o + b.size], -p * w);
        }
        Ok(())
    };
    match g {
        Signal::Grid(grid) => {
            if grid.dim() != n {
                return Err(Error::InvalidInput("signal dimension does not match the system".into()));
            }
            let h = grid.step();
            let nodes = grid.len() - 1;
            let tail = (spec.tail_cut / h).ceil() as usize;
            let mut gj = vec![ZERO; grid.len() * n];
            for k in 0..grid.len() {
                to_jordan(system, grid.value(k), &mut gj[k * n..(k + 1) * n]);
            }
            for (b, o) in &unstable {
                let rule = TailRule::new(system, b.lambda, b.size, h, nodes, tail)?;
                let sz = b.size;
                rule.accumulate(0, |j| &gj[j * n + o..j * n + o + sz], &mut acc[*o..o + sz], -p);
            }
        }
        Signal::Function(f) => {
            let fastest = unstable
                .iter()
                .map(|(b, _)| (b.lambda.ln() / p).exp().norm())
                .fold(0.0, f64::max);
            let width = if fastest > 0.0 { (0.5 / fastest).min(0.25) } else { 0.25 };
            let panels = (spec.tail_cut / width).ceil() as usize;
            for k in 0..panels {
                for (tau, w) in rule.panel(k as f64 * width, (k + 1) as f64 * width) {
                    let gx = f(tau);
                    if gx.len() != n {
                        return Err(Error::InvalidInput("signal dimension does not match the system".into()));
                    }
                    add(tau, w, &gx, &mut acc)?;
                }
            }
        }
    }
    let mut out = vec![0.0; n];
    to_original(system, &acc, &mut out);
    Ok(out)
}

/// `∫_0^{t_k} (t_k - τ)^{p-1} E_{p,β}((t_k - τ)^p A) g(τ) dτ` with `g` given
/// on a grid, by product-trapezoid weights.
pub fn singular_convolution(system: &JordanSystem, beta: f64, g: &TrajectoryGrid, k: usize) -> Result<Vec<f64>> {
    let n = system.dim();
    if g.dim() != n {
        return Err(Error::InvalidInput("signal dimension does not match the system".into()));
    }
    if k >= g.len() {
        return Err(Error::InvalidInput(format!("node {k} is outside the grid")));
    }
    let mut out = vec![0.0; n];
    if k == 0 {
        return Ok(out);
    }
    let w = ProductTrapezoid::new(system.p().value(), g.step(), k);
    for j in 0..=k {
        let e: CMatrix = matrix_ml_eval(system, beta, (k - j) as f64 * g.step())?;
        let wj = w.scale() * w.weight(j, k);
        for (i, o) in out.iter_mut().enumerate() {
            let s: Complex64 = (0..n).map(|c| e[(i, c)] * g.value(j)[c]).sum();
            *o += wj * s.re;
        }
    }
    Ok(out)
}

/// Precomputed kernel rows for one Jordan block.
struct BlockKernel {
    offset: usize,
    size: usize,
    stable: bool,
    /// `E_p(t_k^p J)` (stable) or its remainder `K_1(t_k)` (unstable).
    initial: Vec<Complex64>,
    /// `E_{p,p}(s_d^p J)` (stable) or its remainder `R(s_d)` (unstable).
    conv: Vec<Complex64>,
    /// `conv` times the interior product-trapezoid weight of lag `d`.
    wconv: Vec<Complex64>,
    tail_rule: Option<TailRule>,
}

impl BlockKernel {
    #[inline]
    fn row<'a>(&self, v: &'a [Complex64], d: usize) -> &'a [Complex64] {
        &v[d * self.size..(d + 1) * self.size]
    }
}

/// Exponents `i + j p` below 2 (`i, j >= 0`), smallest first. The integer ones
/// are integrated exactly by the base rule and keep the corrections from
/// disturbing it.
fn singular_exponents(p: f64) -> Vec<f64> {
    let mut out: Vec<f64> = Vec::new();
    for i in 0..2 {
        for j in 0.. {
            let g = i as f64 + j as f64 * p;
            if g >= 2.0 {
                break;
            }
            if !out.iter().any(|v| (v - g).abs() < 1e-8) {
                out.push(g);
            }
        }
    }
    out.sort_by(|a, b| a.partial_cmp(b).unwrap());
    if out.iter().all(|g| (g - g.round()).abs() < 1e-8) {
        return Vec::new();
    }
    out.truncate(MAX_STARTING_WEIGHTS);
    out
}

/// Corrections `c_j` (Toeplitz rows) on nodes `1..=S` that make the
/// linear-interpolation tail rule at `t = 0` exact for `g(s) = s^γ`; the
/// fractional powers are the non-smooth terms of a trajectory near the origin.
#[allow(clippy::too_many_arguments)]
fn starting_weights(
    system: &JordanSystem,
    lambda: Complex64,
    size: usize,
    h: f64,
    nodes: usize,
    tail: usize,
    w0: &[Complex64],
    w1: &[Complex64],
) -> Result<Vec<Complex64>> {
    let p = system.p().value();
    let gammas = singular_exponents(p);
    let count = gammas.len().min(nodes);
    if count == 0 {
        return Ok(Vec::new());
    }
    let gammas = &gammas[..count];
    let ln_l = lambda.ln();
    let ln_mu = ln_l / p;
    // rows scaled by h^{-γ}: Σ_j j^γ c_j = (exact - discrete) / h^γ
    let v = DMatrix::from_fn(count, count, |i, j| ((j + 1) as f64).powf(gammas[i]));
    let lu = v.lu();
    let mut out = vec![ZERO; count * size];
    let mut fact = 1.0;
    for m in 0..size {
        if m > 0 {
            fact *= m as f64;
        }
        let coeffs = exp_root_coefficients(p, m + 1);
        let mut rhs_re = DVector::zeros(count);
        let mut rhs_im = DVector::zeros(count);
        for (r, &g) in gammas.iter().enumerate() {
            // ∫_0^∞ Q_m(s) s^γ ds in closed form
            let mut exact = ZERO;
            for (idx, c) in coeffs.iter().enumerate() {
                let i = idx + 1;
                let sign = if (i - 1) % 2 == 0 { 1.0 } else { -1.0 };
                let lam = (ln_l * (i as f64 / p - (m + 1) as f64)).exp();
                let mu = (-ln_mu * (i as f64 + g)).exp();
                exact += lam * mu * (sign * c * gamma_real(i as f64 + g));
            }
            exact /= fact;
            let mut discrete = ZERO;
            for d in 0..=tail {
                discrete += w0[d * size + m] * (d as f64 * h).powf(g);
                if d < nodes {
                    discrete += w1[d * size + m] * ((d + 1) as f64 * h).powf(g);
                }
            }
            let e = (exact - discrete) / h.powf(g);
            rhs_re[r] = e.re;
            rhs_im[r] = e.im;
        }
        let (re, im) = match (lu.solve(&rhs_re), lu.solve(&rhs_im)) {
            (Some(a), Some(b)) => (a, b),
            _ => return Err(Error::InvalidInput("singular starting-weight system".into())),
        };
        for j in 0..count {
            out[j * size + m] = Complex64::new(re[j], im[j]);
        }
    }
    Ok(out)
}

/// Linear-interpolation rule for `∫_0^∞ Q(s) g(t_k + s) ds` on one unstable
/// block, with `g` zero beyond node `nodes`.
struct TailRule {
    size: usize,
    nodes: usize,
    tail: usize,
    /// `∫_0^h Q(dh+u)(1-u/h) du` and `∫_0^h Q(dh+u)(u/h) du`.
    w0: Vec<Complex64>,
    w1: Vec<Complex64>,
    /// Starting corrections at `k = 0` for nodes `1..=S`.
    start: Vec<Complex64>,
}

impl TailRule {
    fn new(system: &JordanSystem, lambda: Complex64, size: usize, h: f64, nodes: usize, tail: usize) -> Result<Self> {
        let tail = tail.min(nodes);
        let rule = GaussRule::new(TAIL_GAUSS_POINTS);
        let mut w0 = vec![ZERO; (tail + 1) * size];
        let mut w1 = vec![ZERO; (tail + 1) * size];
        for d in 0..=tail {
            let a = d as f64 * h;
            for (s, w) in rule.panel(a, a + h) {
                let u = (s - a) / h;
                let q = q_row(system, lambda, size, s)?;
                for m in 0..size {
                    w0[d * size + m] += q[m] * (w * (1.0 - u));
                    w1[d * size + m] += q[m] * (w * u);
                }
            }
        }
        let start = starting_weights(system, lambda, size, h, nodes, tail, &w0, &w1)?;
        Ok(TailRule {
            size,
            nodes,
            tail,
            w0,
            w1,
            start,
        })
    }

    #[inline]
    fn row<'a>(&self, v: &'a [Complex64], d: usize) -> &'a [Complex64] {
        &v[d * self.size..(d + 1) * self.size]
    }

    /// `out += scale · ∫_0^∞ Q(s) g(t_k + s) ds`.
    fn accumulate<'g, G>(&self, k: usize, g: G, out: &mut [Complex64], scale: f64)
    where
        G: Fn(usize) -> &'g [Complex64],
    {
        for d in 0..=self.tail {
            if k + d > self.nodes {
                break;
            }
            toeplitz_acc(self.row(&self.w0, d), g(k + d), out, scale);
            if k + d < self.nodes {
                toeplitz_acc(self.row(&self.w1, d), g(k + d + 1), out, scale);
            }
        }
        if k == 0 {
            for j in 0..self.start.len() / self.size {
                toeplitz_acc(self.row(&self.start, j), g(j + 1), out, scale);
            }
        }
    }
}

/// Stopping rules for the Picard iteration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveOptions {
    pub max_iter: usize,
    pub tol: f64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions { max_iter: 50, tol: 1e-8 }
    }
}

/// Fixed point of `T_σ` and its iteration history.
#[derive(Debug, Clone, PartialEq)]
pub struct ManifoldResult {
    pub sigma_s: Vec<f64>,
    pub sigma_u: Vec<f64>,
    /// Trajectory on `[0, horizon]`.
    pub trajectory: TrajectoryGrid,
    pub iterations: usize,
    pub final_delta: f64,
    pub converged: bool,
    pub deltas: Vec<f64>,
}

/// The operator `T_σ` on a fixed grid, with all kernels tabulated once.
pub struct SigmaOperator {
    system: JordanSystem,
    field: VectorField,
    spec: QuadratureSpec,
    weights: ProductTrapezoid,
    kernels: Vec<BlockKernel>,
    nodes: usize,
}

impl SigmaOperator {
    pub fn new(system: &JordanSystem, field: &VectorField, spec: &QuadratureSpec) -> Result<Self> {
        if field.dim() != system.dim() {
            return Err(Error::InvalidInput(format!(
                "vector field has dimension {}, system has {}",
                field.dim(),
                system.dim()
            )));
        }
        let pf = system.p();
        let p = pf.value();
        let h = spec.step;
        let nodes = spec.total_nodes();
        let tail = spec.tail_nodes().min(nodes);
        let weights = ProductTrapezoid::new(p, h, nodes);
        let ep = MlParams::new(pf, 1.0)?;
        let epp = MlParams::new(pf, p)?;
        let mut kernels = Vec::with_capacity(system.blocks().len());
        for (b, offset) in system.blocks().iter().zip(system.offsets()) {
            let stable = b.is_stable();
            let mut initial = Vec::with_capacity((nodes + 1) * b.size);
            let mut conv = Vec::with_capacity((nodes + 1) * b.size);
            for k in 0..=nodes {
                let t = k as f64 * h;
                for m in 0..b.size {
                    if stable {
                        initial.push(ml_lambda_derivative(&ep, t, b.lambda, m)?);
                        conv.push(ml_lambda_derivative(&epp, t, b.lambda, m)?);
                    } else {
                        initial.push(ml_lambda_remainder(&ep, t, b.lambda, m)?);
                        conv.push(ml_lambda_remainder(&epp, t, b.lambda, m)?);
                    }
                }
            }
            let tail_rule = if stable {
                None
            } else {
                Some(TailRule::new(system, b.lambda, b.size, h, nodes, tail)?)
            };
            let wconv = conv
                .iter()
                .enumerate()
                .map(|(i, c)| c * (weights.scale() * weights.inner(i / b.size)))
                .collect();
            kernels.push(BlockKernel {
                offset,
                size: b.size,
                stable,
                initial,
                conv,
                wconv,
                tail_rule,
            });
        }
        Ok(SigmaOperator {
            system: system.clone(),
            field: field.clone(),
            spec: *spec,
            weights,
            kernels,
            nodes,
        })
    }

    pub fn system(&self) -> &JordanSystem {
        &self.system
    }

    pub fn spec(&self) -> &QuadratureSpec {
        &self.spec
    }

    /// Number of grid intervals including the tail extension.
    pub fn nodes(&self) -> usize {
        self.nodes
    }

    fn stable_coordinates(&self, sigma_s: &[f64]) -> Result<Vec<Complex64>> {
        let n = self.system.dim();
        if sigma_s.len() != n {
            return Err(Error::InvalidInput(format!(
                "sigma_s has length {}, expected {n}",
                sigma_s.len()
            )));
        }
        if sigma_s.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("sigma_s must be finite".into()));
        }
        let mut y = vec![ZERO; n];
        to_jordan(&self.system, sigma_s, &mut y);
        let scale = 1.0 + sigma_s.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let s = self.system.stable_dim();
        let leak = y[s..].iter().fold(0.0f64, |m, v| m.max(v.norm()));
        if leak > 1e-10 * scale {
            return Err(Error::InvalidInput(format!(
                "sigma_s is not in the stable subspace (unstable component {leak:e})"
            )));
        }
        for v in &mut y[s..] {
            *v = ZERO;
        }
        Ok(y)
    }

    /// Solution of the linear stable flow, `E_p(t^p A) σ`.
    pub fn linear_trajectory(&self, sigma_s: &[f64]) -> Result<Vec<f64>> {
        let sigma = self.stable_coordinates(sigma_s)?;
        let n = self.system.dim();
        let mut x = vec![0.0; (self.nodes + 1) * n];
        let mut y = vec![ZERO; n];
        for k in 0..=self.nodes {
            y.iter_mut().for_each(|v| *v = ZERO);
            for bk in self.kernels.iter().filter(|b| b.stable) {
                let o = bk.offset;
                toeplitz_acc(bk.row(&bk.initial, k), &sigma[o..o + bk.size], &mut y[o..o + bk.size], 1.0);
            }
            to_original(&self.system, &y, &mut x[k * n..(k + 1) * n]);
        }
        Ok(x)
    }

    /// One application of `T_σ` to a trajectory on the full grid.
    pub fn apply(&self, sigma_s: &[f64], x: &[f64]) -> Result<Vec<f64>> {
        let sigma = self.stable_coordinates(sigma_s)?;
        self.apply_jordan(&sigma, x)
    }

    fn apply_jordan(&self, sigma: &[Complex64], x: &[f64]) -> Result<Vec<f64>> {
        let n = self.system.dim();
        let nodes = self.nodes;
        if x.len() != (nodes + 1) * n {
            return Err(Error::InvalidInput(format!(
                "trajectory has {} values, expected {}",
                x.len(),
                (nodes + 1) * n
            )));
        }
        let p = self.system.p().value();
        let mut g = vec![ZERO; (nodes + 1) * n];
        let mut fx = vec![0.0; n];
        for k in 0..=nodes {
            self.field.eval_into(&x[k * n..(k + 1) * n], &mut fx);
            to_jordan(&self.system, &fx, &mut g[k * n..(k + 1) * n]);
        }
        let gk = |k: usize, o: usize, size: usize| &g[k * n + o..k * n + o + size];
        let mut y = vec![ZERO; (nodes + 1) * n];
        let scale = self.weights.scale();
        let mut acc = vec![ZERO; n];
        for bk in &self.kernels {
            let (o, sz) = (bk.offset, bk.size);
            let start = match &bk.tail_rule {
                None => sigma[o..o + sz].to_vec(),
                Some(rule) => {
                    // σ* = -p ∫ Q g
                    let mut s = vec![ZERO; sz];
                    rule.accumulate(0, |j| gk(j, o, sz), &mut s, -p);
                    s
                }
            };
            for k in 0..=nodes {
                let a = &mut acc[..sz];
                a.iter_mut().for_each(|v| *v = ZERO);
                toeplitz_acc(bk.row(&bk.initial, k), &start, a, 1.0);
                if k > 0 {
                    toeplitz_acc(bk.row(&bk.conv, k), gk(0, o, sz), a, scale * self.weights.weight(0, k));
                    if sz == 1 {
                        let mut sum = ZERO;
                        for (j, w) in bk.wconv[..k].iter().rev().enumerate() {
                            sum += w * g[(j + 1) * n + o];
                        }
                        a[0] += sum;
                    } else {
                        for j in 1..=k {
                            toeplitz_acc(bk.row(&bk.wconv, k - j), gk(j, o, sz), a, 1.0);
                        }
                    }
                }
                if let Some(rule) = &bk.tail_rule {
                    if k == 0 {
                        // the tail at t = 0 is -σ*/p
                        for (v, s) in a.iter_mut().zip(&start) {
                            *v += s / p;
                        }
                    } else {
                        rule.accumulate(k, |j| gk(j, o, sz), a, -1.0);
                    }
                }
                y[k * n + o..k * n + o + sz].copy_from_slice(a);
            }
        }
        let mut out = vec![0.0; (nodes + 1) * n];
        let limit = DIVERGENCE_FACTOR * self.field.radius();
        for k in 0..=nodes {
            let xk = &mut out[k * n..(k + 1) * n];
            to_original(&self.system, &y[k * n..(k + 1) * n], xk);
            let norm = xk.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            if !(norm <= limit) {
                return Err(Error::DivergedTrajectory {
                    norm,
                    time: k as f64 * self.spec.step,
                });
            }
        }
        Ok(out)
    }

    /// Picard iteration from the linear flow.
    pub fn solve(&self, sigma_s: &[f64], opts: SolveOptions) -> Result<ManifoldResult> {
        if opts.max_iter == 0 || !(opts.tol > 0.0) {
            return Err(Error::InvalidInput("need max_iter >= 1 and tol > 0".into()));
        }
        let sigma = self.stable_coordinates(sigma_s)?;
        let mut x = self.linear_trajectory(sigma_s)?;
        let mut deltas = Vec::new();
        let mut slow = 0;
        let mut converged = false;
        for it in 1..=opts.max_iter {
            let next = self.apply_jordan(&sigma, &x)?;
            let delta = next.iter().zip(&x).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
            x = next;
            if let Some(prev) = deltas.last().copied() {
                let ratio = if prev > 0.0 { delta / prev } else { 0.0 };
                if ratio > 0.95 {
                    slow += 1;
                    if slow >= 3 {
                        return Err(Error::NoContraction { ratio, iteration: it });
                    }
                } else {
                    slow = 0;
                }
            }
            deltas.push(delta);
            if delta < opts.tol {
                converged = true;
                break;
            }
        }
        let n = self.system.dim();
        let keep = self.spec.report_nodes().min(self.nodes);
        let sigma_u = x[..n].iter().zip(sigma_s).map(|(a, b)| a - b).collect();
        x.truncate((keep + 1) * n);
        Ok(ManifoldResult {
            sigma_s: sigma_s.to_vec(),
            sigma_u,
            trajectory: TrajectoryGrid::new(self.spec.step, n, x)?,
            iterations: deltas.len(),
            final_delta: *deltas.last().unwrap_or(&0.0),
            converged,
            deltas,
        })
    }

    /// Solves for every sample in parallel; failures are reported per sample.
    pub fn manifold_map(&self, samples: &[Vec<f64>], opts: SolveOptions) -> Vec<Result<ManifoldResult>> {
        samples.par_iter().map(|s| self.solve(s, opts)).collect()
    }
}

/// One-shot solve; builds the operator and runs the iteration.
pub fn solve_fixed_point(
    system: &JordanSystem,
    field: &VectorField,
    spec: &QuadratureSpec,
    sigma_s: &[f64],
    opts: SolveOptions,
) -> Result<ManifoldResult> {
    SigmaOperator::new(system, field, spec)?.solve(sigma_s, opts)
}

/// Decay of the unstable projection along a computed trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct DecayReport {
    pub peak: f64,
    pub trailing_max: f64,
    pub ratio: f64,
    /// Log-log slope of `‖π_u x(t)‖` over the second half of the horizon.
    pub trend: f64,
    pub decays: bool,
}

/// Norms `‖π_u x(t_k)‖_2` over the trajectory.
pub fn unstable_norms(system: &JordanSystem, trajectory: &TrajectoryGrid) -> Vec<f64> {
    let n = system.dim();
    let s = system.stable_dim();
    let mut y = vec![ZERO; n];
    let mut out = vec![0.0; n];
    (0..trajectory.len())
        .map(|k| {
            to_jordan(system, trajectory.value(k), &mut y);
            for v in &mut y[..s] {
                *v = ZERO;
            }
            to_original(system, &y, &mut out);
            out.iter().map(|v| v * v).sum::<f64>().sqrt()
        })
        .collect()
}

/// Passes when the maximum over the last quarter is below `0.1` times the peak.
pub fn verify_unstable_decay(system: &JordanSystem, result: &ManifoldResult) -> DecayReport {
    let norms = unstable_norms(system, &result.trajectory);
    let len = norms.len();
    let peak = norms.iter().copied().fold(0.0, f64::max);
    let trailing_max = norms[len - len / 4..].iter().copied().fold(0.0, f64::max);
    let ratio = if peak > 0.0 { trailing_max / peak } else { 0.0 };
    let half: Vec<(f64, f64)> = (len / 2..len)
        .filter(|&k| k > 0 && norms[k] > 0.0)
        .map(|k| (result.trajectory.time(k).ln(), norms[k].ln()))
        .collect();
    DecayReport {
        peak,
        trailing_max,
        ratio,
        trend: least_squares_slope(&half),
        decays: ratio < 0.1,
    }
}

/// Slope of the least-squares line through `points`; NaN for fewer than two.
pub fn least_squares_slope(points: &[(f64, f64)]) -> f64 {
    if points.len() < 2 {
        return f64::NAN;
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = points.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    sxy / sxx
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mittag_leffler::{ml_eval, FracOrder};
    use crate::spectral::{JordanBlock, Stability};
    use proptest::prelude::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn ex1(p: f64) -> (JordanSystem, VectorField) {
        let pf = FracOrder::new(p).unwrap();
        let sys = JordanSystem::new(
            pf,
            vec![
                JordanBlock::new(c(-1.0), 1, Stability::Stable).unwrap(),
                JordanBlock::new(c(2.0), 2, Stability::Unstable).unwrap(),
            ],
            None,
        )
        .unwrap();
        let f = VectorField::new(3, 0.5, |x, out| {
            out[0] = 0.0;
            out[1] = x[0] * x[0];
            out[2] = 3.0 * x[0] * x[0];
        })
        .unwrap();
        (sys, f)
    }

    fn scalar_unstable(p: f64, lambda: f64) -> JordanSystem {
        JordanSystem::from_diagonal(FracOrder::new(p).unwrap(), &[c(lambda)]).unwrap()
    }

    #[test]
    fn field_rejects_nonzero_origin() {
        let err = VectorField::new(1, 1.0, |_, out| out[0] = 1.0).unwrap_err();
        assert!(err.is_invalid_input());
    }

    #[test]
    fn lipschitz_sample_is_bounded_by_analytic_constant() {
        // f = x^2 on |x| <= 0.5 has Lipschitz constant 1
        let f = VectorField::new(1, 0.5, |x, out| out[0] = x[0] * x[0]).unwrap();
        assert!(f.lipschitz() <= 1.0 && f.lipschitz() > 0.9);
        assert_eq!(f.lipschitz(), f.sample_lipschitz(1000, LIPSCHITZ_SEED));
    }

    #[test]
    fn power_exp_tail_at_zero_is_gamma() {
        for j in 0..5 {
            let fact: f64 = (1..=j).map(|v| v as f64).product();
            let a = 6.25f64;
            assert!((power_exp_tail(j, a, 0.0) - fact / a.powi(j as i32 + 1)).abs() < 1e-15);
        }
    }

    #[test]
    fn tail_cut_certifies_envelope() {
        let (sys, _) = ex1(0.5);
        let cut = certify_tail_cut(&sys, 1e-10).unwrap();
        assert!(tail_envelope(&sys, cut) < 1e-10);
        assert!(tail_envelope(&sys, 0.99 * cut) >= 1e-10);
    }

    #[test]
    fn tail_not_decaying_for_tiny_rate() {
        let sys = scalar_unstable(0.5, 1e-3);
        assert!(matches!(certify_tail_cut(&sys, 1e-10), Err(Error::TailNotDecaying { .. })));
    }

    #[test]
    fn tail_integral_of_power_times_exponential() {
        // (p/τ) Ψ̃_0(-τ) = -λ^{1/p-1} e^{-τ α} for λ = α^p
        for alpha in [1.0f64, 6.25] {
            let p = 0.5;
            let lambda = alpha.powf(p);
            let sys = scalar_unstable(p, lambda);
            let spec = QuadratureSpec::certified(&sys, 0.01, 1.0, 1e-14).unwrap();
            for m in 0..=4 {
                let pre = -lambda.powf(1.0 / p - 1.0);
                let g = move |t: f64| vec![t.powi(m) / pre];
                let got = tail_integral(&sys, Signal::Function(&g), &spec).unwrap()[0];
                let fact: f64 = (1..=m).map(|v| v as f64).product();
                let exact = fact / alpha.powi(m + 1);
                assert!((got - exact).abs() < 1e-8 * exact.max(1.0), "alpha={alpha} m={m}: {got} vs {exact}");
            }
        }
    }

    #[test]
    fn grid_and_function_tail_agree_for_linear_signal() {
        let sys = scalar_unstable(0.7, 1.3);
        let spec = QuadratureSpec::certified(&sys, 0.05, 1.0, 1e-12).unwrap();
        let len = (spec.tail_cut / 0.05).ceil() as usize + 2;
        let grid = TrajectoryGrid::new(0.05, 1, (0..len).map(|k| 2.0 - 0.05 * k as f64).collect()).unwrap();
        let g = |t: f64| vec![2.0 - t];
        let a = tail_integral(&sys, Signal::Grid(&grid), &spec).unwrap()[0];
        let b = tail_integral(&sys, Signal::Function(&g), &spec).unwrap()[0];
        assert!((a - b).abs() < 1e-10, "{a} vs {b}");
    }

    #[test]
    fn singular_convolution_of_constant() {
        // ∫_0^t s^{p-1} E_{p,p}(s^p λ) ds = t^p E_{p,p+1}(t^p λ)
        let p = 0.6;
        let lambda = -1.5;
        let sys = JordanSystem::from_diagonal(FracOrder::new(p).unwrap(), &[c(lambda)]).unwrap();
        let h = 1e-3;
        let grid = TrajectoryGrid::new(h, 1, vec![1.0; 1001]).unwrap();
        let got = singular_convolution(&sys, p, &grid, 1000).unwrap()[0];
        let params = MlParams::new(FracOrder::new(p).unwrap(), p + 1.0).unwrap();
        let exact = ml_eval(&params, c(lambda)).unwrap().re;
        assert!((got - exact).abs() < 1e-4, "{got} vs {exact}");
    }

    #[test]
    fn linear_problem_is_a_fixed_point_of_the_first_iterate() {
        let sys = JordanSystem::from_diagonal(FracOrder::new(0.5).unwrap(), &[c(-1.0), c(2.0)]).unwrap();
        let f = VectorField::new(2, 1.0, |_, out| out.iter_mut().for_each(|v| *v = 0.0)).unwrap();
        let spec = QuadratureSpec::certified(&sys, 0.01, 1.0, 1e-10).unwrap();
        let r = solve_fixed_point(&sys, &f, &spec, &[0.1, 0.0], SolveOptions::default()).unwrap();
        assert!(r.converged);
        assert_eq!(r.iterations, 1);
        assert_eq!(r.sigma_u, vec![0.0, 0.0]);
    }

    #[test]
    fn rejects_sigma_outside_stable_subspace() {
        let (sys, f) = ex1(0.5);
        let spec = QuadratureSpec::certified(&sys, 0.05, 1.0, 1e-8).unwrap();
        let err = solve_fixed_point(&sys, &f, &spec, &[0.01, 0.1, 0.0], SolveOptions::default()).unwrap_err();
        assert!(err.is_invalid_input());
    }

    #[test]
    fn unstable_initial_value_matches_tail_integral() {
        // y_u(0) = σ* for the trajectory that solves the fixed point
        let (sys, f) = ex1(0.5);
        let spec = QuadratureSpec::certified(&sys, 0.01, 1.0, 1e-10).unwrap();
        let op = SigmaOperator::new(&sys, &f, &spec).unwrap();
        let sigma = [0.02, 0.0, 0.0];
        let x = op.linear_trajectory(&sigma).unwrap();
        let tx = op.apply(&sigma, &x).unwrap();
        let mut fx = Vec::with_capacity(x.len());
        for k in 0..=op.nodes() {
            fx.extend(f.eval(&x[3 * k..3 * k + 3]));
        }
        let fgrid = TrajectoryGrid::new(spec.step, 3, fx).unwrap();
        let star = tail_integral(&sys, Signal::Grid(&fgrid), &spec).unwrap();
        for i in 1..3 {
            assert!((tx[i] - star[i]).abs() < 1e-10 * star[i].abs().max(1e-6), "{i}: {} vs {}", tx[i], star[i]);
        }
    }

    #[test]
    fn converged_trajectory_is_a_fixed_point() {
        let sys = JordanSystem::from_diagonal(FracOrder::new(0.5).unwrap(), &[c(-2.0), c(2.0)]).unwrap();
        let f = VectorField::new(2, 0.5, |x, out| {
            out[0] = x[0] * x[0];
            out[1] = x[0] * x[0] + x[1] * x[1];
        })
        .unwrap();
        let spec = QuadratureSpec::certified(&sys, 0.02, 2.0, 1e-10).unwrap();
        let op = SigmaOperator::new(&sys, &f, &spec).unwrap();
        let sigma = [0.05, 0.0];
        let r = op.solve(&sigma, SolveOptions { max_iter: 50, tol: 1e-13 }).unwrap();
        assert!(r.converged && r.final_delta < 1e-13);
        assert!(r.deltas.windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn tail_doubling_changes_nothing() {
        let (sys, f) = ex1(0.5);
        let spec = QuadratureSpec::certified(&sys, 0.01, 1.0, 1e-10).unwrap();
        let sigma = [0.01, 0.0, 0.0];
        let opts = SolveOptions { max_iter: 50, tol: 1e-14 };
        let a = solve_fixed_point(&sys, &f, &spec, &sigma, opts).unwrap();
        let wide = spec.with_tail_cut(2.0 * spec.tail_cut).unwrap();
        let b = solve_fixed_point(&sys, &f, &wide, &sigma, opts).unwrap();
        for i in 0..3 {
            assert!((a.sigma_u[i] - b.sigma_u[i]).abs() <= 1e-6 * a.sigma_u[i].abs().max(1e-12));
        }
    }

    #[test]
    fn grid_refinement_converges() {
        let (sys, f) = ex1(0.5);
        let sigma = [0.01, 0.0, 0.0];
        let opts = SolveOptions { max_iter: 50, tol: 1e-14 };
        let s3: Vec<f64> = [0.04, 0.02, 0.01]
            .iter()
            .map(|&h| {
                let spec = QuadratureSpec::certified(&sys, h, 1.0, 1e-10).unwrap();
                solve_fixed_point(&sys, &f, &spec, &sigma, opts).unwrap().sigma_u[2]
            })
            .collect();
        let d1 = (s3[0] - s3[1]).abs();
        let d2 = (s3[1] - s3[2]).abs();
        assert!(d2 < d1, "{s3:?}");
        assert!(d2 < 1e-3 * s3[2].abs());
    }

    #[test]
    fn contraction_failure_is_reported() {
        // a large linear coupling makes T_σ expansive
        let sys = JordanSystem::from_diagonal(FracOrder::new(0.5).unwrap(), &[c(-1.0), c(2.0)]).unwrap();
        let f = VectorField::new(2, 1.0, |x, out| {
            out[0] = 30.0 * x[1];
            out[1] = 30.0 * x[0];
        })
        .unwrap();
        let spec = QuadratureSpec::certified(&sys, 0.05, 1.0, 1e-8).unwrap();
        let err = solve_fixed_point(&sys, &f, &spec, &[1e-6, 0.0], SolveOptions::default()).unwrap_err();
        assert!(
            matches!(err, Error::NoContraction { .. } | Error::DivergedTrajectory { .. }),
            "{err:?}"
        );
    }

    #[test]
    fn starting_weights_make_tail_rule_exact_for_fractional_powers() {
        for (p, lam) in [(0.5, 2.0), (0.3, 1.7), (0.8, 3.0)] {
            let sys = scalar_unstable(p, lam);
            let spec = QuadratureSpec::certified(&sys, 0.01, 1.0, 1e-14).unwrap();
            let op = SigmaOperator::new(&sys, &VectorField::new(1, 1.0, |_, o| o[0] = 0.0).unwrap(), &spec).unwrap();
            let bk = op.kernels[0].tail_rule.as_ref().unwrap();
            let h = spec.step;
            let rule = GaussRule::new(20);
            for &g in &singular_exponents(p) {
                let mut disc = ZERO;
                for d in 0..=bk.tail {
                    disc += bk.w0[d] * (d as f64 * h).powf(g);
                    if d < bk.nodes {
                        disc += bk.w1[d] * ((d + 1) as f64 * h).powf(g);
                    }
                }
                for j in 0..bk.start.len() {
                    disc += bk.start[j] * ((j + 1) as f64 * h).powf(g);
                }
                // reference: s = u^2 removes the endpoint singularity
                let mut exact = ZERO;
                let top = spec.tail_cut.sqrt();
                for k in 0..200 {
                    let (a, b) = (k as f64 * top / 200.0, (k + 1) as f64 * top / 200.0);
                    for (u, w) in rule.panel(a, b) {
                        let s = u * u;
                        exact += psi_tilde_over_t(sys.p(), -s, c(lam), 0).unwrap() * (s.powf(g) * 2.0 * u * w);
                    }
                }
                assert!((disc - exact).norm() < 1e-9 * exact.norm(), "p={p} g={g}: {disc} vs {exact}");
            }
        }
    }

    #[test]
    fn least_squares_slope_of_a_line() {
        let pts: Vec<_> = (0..10).map(|i| (i as f64, 3.0 - 2.0 * i as f64)).collect();
        assert!((least_squares_slope(&pts) + 2.0).abs() < 1e-14);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(12))]
        #[test]
        fn quadratic_scaling(s in 0.002f64..0.02) {
            let (sys, f) = ex1(0.5);
            let spec = QuadratureSpec::certified(&sys, 0.04, 1.0, 1e-10).unwrap();
            let op = SigmaOperator::new(&sys, &f, &spec).unwrap();
            let opts = SolveOptions { max_iter: 50, tol: 1e-15 };
            let a = op.solve(&[s, 0.0, 0.0], opts).unwrap();
            let b = op.solve(&[2.0 * s, 0.0, 0.0], opts).unwrap();
            for i in 1..3 {
                prop_assert!((b.sigma_u[i] / a.sigma_u[i] - 4.0).abs() < 1e-9);
            }
        }
    }
}
