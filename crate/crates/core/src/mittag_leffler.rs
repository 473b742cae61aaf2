//! One- and two-parameter Mittag-Leffler functions of complex argument.
//!
//! `E_{p,β}(z) = Σ_{k≥0} z^k / Γ(pk + β)` is evaluated by its power series
//! near the origin and by the sector asymptotic expansion
//!
//! ```text
//! E_{p,β}(z) ≈ (1/p) z^{(1-β)/p} exp(z^{1/p}) - Σ_{k≥1} z^{-k} / Γ(β - pk)
//! ```
//!
//! further out. The series is accumulated in double-double arithmetic with
//! coefficients `1/Γ(pk + β)` obtained by exact downward recurrence, so the
//! cancellation on the negative half-plane costs far fewer digits than a
//! plain `f64` sum.
//!
//! The λ-derivatives `(1/m!) ∂^m/∂λ^m E_{p,β}(t^p λ)` are what populate
//! matrix functions on Jordan blocks; they are provided together with the
//! "remainder" form that subtracts the exponential part analytically.

use crate::dd::{Dd, DdComplex};
use crate::error::{Error, Result};
use crate::special::{ln_gamma_real, rgamma_dd, rgamma_real, sin_pi};
use num_complex::Complex64;
use std::cell::RefCell;
use std::collections::HashMap;
use std::f64::consts::PI;

/// Hard cap on series terms; exceeding it is an error.
pub const SERIES_TERM_CAP: usize = 2000;

/// Default switch point expressed in `w = |z|^{1/p}`: the series is used for
/// `w <= 35` and the asymptotic expansion beyond. Both branches are good to
/// about `1e-13` relative there.
pub const DEFAULT_SWITCH_ROOT: f64 = 35.0;

/// Switch point (in `w`) for the exponential-free remainder. Below it the
/// remainder is a difference of quantities of size `e^w`, so the absolute
/// error grows like `1e-16 e^w`; above it the asymptotic error is about
/// `e^{-w}`. The two balance near `w = 18` at roughly `1e-8`.
pub const REMAINDER_SWITCH_ROOT: f64 = 18.0;

const ASYMPTOTIC_TERM_CAP: usize = 400;

/// Fractional order `p`, restricted to `(0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct FracOrder(f64);

impl FracOrder {
    pub fn new(p: f64) -> Result<Self> {
        if p.is_finite() && p > 0.0 && p <= 1.0 {
            Ok(FracOrder(p))
        } else {
            Err(Error::InvalidInput(format!(
                "fractional order must lie in (0, 1], got {p}"
            )))
        }
    }

    #[inline]
    pub fn value(self) -> f64 {
        self.0
    }

    /// Half-opening `pπ/2` of the unstable (Matignon) sector.
    #[inline]
    pub fn half_sector(self) -> f64 {
        self.0 * PI / 2.0
    }

    pub fn is_classical(self) -> bool {
        self.0 == 1.0
    }
}

/// Parameters of a Mittag-Leffler evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MlParams {
    pub p: FracOrder,
    pub beta: f64,
    /// Truncation order of the asymptotic expansions (`q >= 2`).
    pub q: usize,
    pub series_tol: f64,
    pub switch_radius: f64,
}

impl MlParams {
    pub fn new(p: FracOrder, beta: f64) -> Result<Self> {
        let params = MlParams {
            p,
            beta,
            q: 3,
            series_tol: 1e-17,
            switch_radius: DEFAULT_SWITCH_ROOT.powf(p.value()),
        };
        params.validate()?;
        Ok(params)
    }

    pub fn with_q(mut self, q: usize) -> Result<Self> {
        self.q = q;
        self.validate()?;
        Ok(self)
    }

    pub fn with_switch_radius(mut self, r: f64) -> Result<Self> {
        self.switch_radius = r;
        self.validate()?;
        Ok(self)
    }

    pub fn with_series_tol(mut self, tol: f64) -> Result<Self> {
        self.series_tol = tol;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.beta.is_finite() && self.beta > 0.0) {
            return Err(Error::InvalidInput(format!("beta must be > 0, got {}", self.beta)));
        }
        if self.q < 2 {
            return Err(Error::InvalidInput(format!("q must be >= 2, got {}", self.q)));
        }
        if !(self.series_tol > 0.0 && self.series_tol < 1.0) {
            return Err(Error::InvalidInput(format!(
                "series_tol must lie in (0, 1), got {}",
                self.series_tol
            )));
        }
        if !(self.switch_radius.is_finite() && self.switch_radius > 0.0) {
            return Err(Error::InvalidInput(format!(
                "switch_radius must be > 0, got {}",
                self.switch_radius
            )));
        }
        Ok(())
    }
}

/// Which branch `ml_eval` used.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    Series,
    Asymptotic,
}

fn check_finite(z: Complex64, what: &str) -> Result<()> {
    if z.re.is_finite() && z.im.is_finite() {
        Ok(())
    } else {
        Err(Error::DomainError(format!("{what} must be finite, got {z}")))
    }
}

fn binomial_u(k: usize, m: usize) -> f64 {
    let mut c: u128 = 1;
    for i in 0..m {
        c = c * (k - i) as u128 / (i + 1) as u128;
    }
    c as f64
}

thread_local! {
    static COEFFS: RefCell<HashMap<(u64, u64), Vec<Dd>>> = RefCell::new(HashMap::new());
}

/// `1/Γ(pk + β)` for `k < n`, memoised per `(p, β)`.
fn series_coefficients(p: f64, beta: f64, n: usize) -> Vec<Dd> {
    COEFFS.with(|cell| {
        let mut map = cell.borrow_mut();
        let table = map.entry((p.to_bits(), beta.to_bits())).or_default();
        while table.len() < n {
            let k = table.len() as f64;
            table.push(rgamma_dd(Dd::product(p, k) + Dd::from_f64(beta)));
        }
        table[..n].to_vec()
    })
}

/// `Σ_{k≥m} C(k,m) z^{k-m} / Γ(pk + β)`, i.e. `(1/m!) d^m/dz^m E_{p,β}(z)`.
fn series_derivative(p: f64, beta: f64, tol: f64, z: Complex64, m: usize) -> Result<Complex64> {
    if z == Complex64::new(0.0, 0.0) {
        return Ok(Complex64::new(rgamma_real(p * m as f64 + beta), 0.0));
    }
    let zd = DdComplex::from_c64(z);
    let mut coeffs = series_coefficients(p, beta, m + 64);
    let mut zpow = DdComplex::ONE;
    let mut sum = DdComplex::ZERO;
    let mut prev_abs = f64::INFINITY;
    let mut k = m;
    let mut count = 0usize;
    loop {
        if count >= SERIES_TERM_CAP {
            return Err(Error::NonConvergence {
                terms: count,
                modulus: z.norm(),
            });
        }
        if k >= coeffs.len() {
            coeffs = series_coefficients(p, beta, 2 * coeffs.len());
        }
        let coeff = coeffs[k].mul_f64(binomial_u(k, m));
        let term = zpow.scale(coeff);
        sum = sum + term;
        let term_abs = term.norm_approx();
        let scale = tol * (1.0 + sum.norm_approx());
        if count > 2 && term_abs < prev_abs {
            let ratio = term_abs / prev_abs;
            let remainder = if ratio < 1.0 {
                term_abs * ratio / (1.0 - ratio)
            } else {
                f64::INFINITY
            };
            if term_abs <= scale && remainder <= scale {
                break;
            }
        }
        if term_abs != 0.0 {
            prev_abs = term_abs;
        }
        zpow = zpow * zd;
        k += 1;
        count += 1;
    }
    Ok(sum.to_c64())
}

/// Power series of `E_{p,β}(z)`.
///
/// Intended for `|z| <= switch_radius`; larger arguments work while the
/// term cap allows but lose accuracy on the negative half-plane.
pub fn ml_series(params: &MlParams, z: Complex64) -> Result<Complex64> {
    check_finite(z, "argument")?;
    series_derivative(params.p.value(), params.beta, params.series_tol, z, 0)
}

/// Whether the exponential term belongs to the asymptotic expansion at `arg z`.
fn exponential_term_present(p: f64, z: Complex64) -> bool {
    p >= 1.0 || z.arg().abs() < p * PI
}

/// Principal `z^a`.
#[inline]
fn cpow(z: Complex64, a: f64) -> Complex64 {
    (z.ln() * a).exp()
}

/// `∂^m/∂λ^m exp(t λ^{1/p})`, principal branch of `λ^{1/p}`.
///
/// Uses the closed form `Σ_{i=1}^{m} c_{m,i} t^i λ^{i/p - m} exp(t λ^{1/p})`
/// with `c_{1,1} = 1/p`, `c_{m+1,i} = c_{m,i} (i/p - m) + c_{m,i-1}/p`.
pub fn exp_root_derivative(p: FracOrder, t: f64, lambda: Complex64, m: usize) -> Result<Complex64> {
    check_finite(lambda, "eigenvalue")?;
    if lambda == Complex64::new(0.0, 0.0) {
        return Err(Error::DomainError(
            "exp(t lambda^{1/p}) derivatives need lambda != 0".into(),
        ));
    }
    let p = p.value();
    let ln_l = lambda.ln();
    let root = (ln_l / p).exp();
    let e = (root * t).exp();
    if m == 0 {
        return Ok(e);
    }
    let coeffs = exp_root_coefficients(p, m);
    let mut acc = Complex64::new(0.0, 0.0);
    let mut t_pow = 1.0;
    for (idx, c) in coeffs.iter().enumerate() {
        let i = idx + 1;
        t_pow *= t;
        let power = (ln_l * (i as f64 / p - m as f64)).exp();
        acc += power * (c * t_pow);
    }
    Ok(acc * e)
}

/// Row `c_{m,1..=m}` of the coefficient triangle.
pub(crate) fn exp_root_coefficients(p: f64, m: usize) -> Vec<f64> {
    let mut row = vec![1.0 / p];
    for level in 1..m {
        let mut next = vec![0.0; level + 1];
        for i in 1..=level + 1 {
            let keep = if i <= level {
                row[i - 1] * (i as f64 / p - level as f64)
            } else {
                0.0
            };
            let shift = if i >= 2 { row[i - 2] / p } else { 0.0 };
            next[i - 1] = keep + shift;
        }
        row = next;
    }
    row
}

fn generalized_binomial(a: f64, r: usize) -> f64 {
    let mut c = 1.0;
    for i in 0..r {
        c *= (a - i as f64) / (i + 1) as f64;
    }
    c
}

/// `(1/m!) d^m/dz^m [(1/p) z^{(1-β)/p} exp(z^{1/p})]`.
fn exponential_part(p: FracOrder, beta: f64, z: Complex64, m: usize) -> Result<Complex64> {
    let pv = p.value();
    let a = (1.0 - beta) / pv;
    let mut acc = Complex64::new(0.0, 0.0);
    let mut j_fact = 1.0;
    for j in 0..=m {
        if j > 0 {
            j_fact *= j as f64;
        }
        let r = m - j;
        let c = generalized_binomial(a, r);
        if c == 0.0 {
            continue;
        }
        let d = exp_root_derivative(p, 1.0, z, j)? / j_fact;
        acc += cpow(z, a - r as f64) * c * d;
    }
    Ok(acc / pv)
}

/// `(1/m!) d^m/dz^m [-Σ_{k=1}^{K} z^{-k} / Γ(β - pk)]`.
///
/// With `fixed = Some(q)` the sum stops at `K = q`. Otherwise the divergent
/// series is cut at the global minimum of the envelope
/// `C(k+m-1, m) Γ(1 - β + pk) |z|^{-k-m} / π` of its terms (the terms
/// themselves oscillate through the zeros of `1/Γ`), or earlier once the
/// envelope drops below `tol` relative to the partial sum.
fn algebraic_part(p: f64, beta: f64, z: Complex64, m: usize, fixed: Option<usize>, tol: f64) -> Complex64 {
    let ln_abs = z.norm().ln();
    let arg = z.arg();
    let sign_m = if m % 2 == 0 { 1.0 } else { -1.0 };
    let cap = fixed.unwrap_or(ASYMPTOTIC_TERM_CAP);
    let mut partial = Vec::with_capacity(cap.min(64));
    let mut sum = Complex64::new(0.0, 0.0);
    let mut best = (f64::INFINITY, 0usize);
    for k in 1..=cap {
        let x = beta - p * k as f64;
        let power = (k + m) as f64;
        let ln_comb = binomial_u(k + m - 1, m).ln();
        let s = sin_pi(x);
        if s != 0.0 {
            // 1/Γ(x) z^{-k-m} C(k+m-1, m), assembled in log form to survive any magnitude
            let ln_mag = if x > 0.0 {
                -ln_gamma_real(x)
            } else {
                ln_gamma_real(1.0 - x) + (s.abs() / PI).ln()
            } - power * ln_abs
                + ln_comb;
            let sign = if x > 0.0 { 1.0 } else { s.signum() };
            sum -= Complex64::from_polar(sign * ln_mag.exp(), -power * arg) * sign_m;
        }
        partial.push(sum);
        if fixed.is_some() {
            continue;
        }
        let ln_env = ln_gamma_real((1.0 - x).max(1.0)) - power * ln_abs + ln_comb;
        if ln_env < best.0 {
            best = (ln_env, k);
        }
        let env = ln_env.exp();
        if env < tol * sum.norm() {
            return sum;
        }
        if ln_env > best.0 + 70.0 {
            break;
        }
    }
    match fixed {
        Some(_) => sum,
        // stop just before the smallest term
        None => {
            let k = best.1.max(1);
            if k >= 2 {
                partial[k - 2]
            } else {
                Complex64::new(0.0, 0.0)
            }
        }
    }
}

/// Asymptotic expansion of `(1/m!) d^m/dz^m E_{p,β}(z)` with optimal truncation.
pub fn ml_asymptotic_derivative(params: &MlParams, z: Complex64, m: usize) -> Result<Complex64> {
    check_finite(z, "argument")?;
    let p = params.p.value();
    let mut v = algebraic_part(p, params.beta, z, m, None, params.series_tol);
    if exponential_term_present(p, z) {
        v += exponential_part(params.p, params.beta, z, m)?;
    }
    Ok(v)
}

/// Asymptotic expansion of `E_{p,β}(z)` with optimal truncation and the
/// exponential term kept throughout `|arg z| < pπ`.
pub fn ml_asymptotic(params: &MlParams, z: Complex64) -> Result<Complex64> {
    ml_asymptotic_derivative(params, z, 0)
}

fn in_unstable_sector(p: FracOrder, lambda: Complex64) -> bool {
    lambda.arg().abs() <= p.half_sector()
}

fn check_t(t: f64) -> Result<()> {
    if t.is_finite() && t > 0.0 {
        Ok(())
    } else {
        Err(Error::DomainError(format!("t must be > 0, got {t}")))
    }
}

/// q-truncated expansion of `E_{p,β}(t^p λ)` for `λ` in the unstable sector:
/// `(1/p) t^{1-β} λ^{(1-β)/p} exp(t λ^{1/p}) - Σ_{k=1}^{q} t^{-pk} λ^{-k} / Γ(β - pk)`.
pub fn ml_asymptotic_unstable(params: &MlParams, t: f64, lambda: Complex64) -> Result<Complex64> {
    check_t(t)?;
    check_finite(lambda, "eigenvalue")?;
    if !in_unstable_sector(params.p, lambda) {
        return Err(Error::SectorError {
            lambda: lambda.to_string(),
            expected: "unstable",
            p: params.p.value(),
        });
    }
    let pv = params.p.value();
    let z = lambda * t.powf(pv);
    let a = (1.0 - params.beta) / pv;
    let root = cpow(lambda, 1.0 / pv);
    let lead = cpow(lambda, a) * t.powf(1.0 - params.beta) * (root * t).exp() / pv;
    Ok(lead + algebraic_part(pv, params.beta, z, 0, Some(params.q), 0.0))
}

/// q-truncated expansion of `E_{p,β}(t^p λ)` for `λ` in the stable sector
/// (algebraic terms only).
pub fn ml_asymptotic_stable(params: &MlParams, t: f64, lambda: Complex64) -> Result<Complex64> {
    check_t(t)?;
    check_finite(lambda, "eigenvalue")?;
    if in_unstable_sector(params.p, lambda) {
        return Err(Error::SectorError {
            lambda: lambda.to_string(),
            expected: "stable",
            p: params.p.value(),
        });
    }
    let z = lambda * t.powf(params.p.value());
    Ok(algebraic_part(params.p.value(), params.beta, z, 0, Some(params.q), 0.0))
}

/// Hybrid evaluation of `E_{p,β}(z)`, reporting the branch used.
pub fn ml_eval_with_branch(params: &MlParams, z: Complex64) -> Result<(Complex64, Branch)> {
    check_finite(z, "argument")?;
    if z.norm() <= params.switch_radius {
        Ok((ml_series(params, z)?, Branch::Series))
    } else {
        Ok((ml_asymptotic(params, z)?, Branch::Asymptotic))
    }
}

/// Hybrid evaluation of `E_{p,β}(z)`.
pub fn ml_eval(params: &MlParams, z: Complex64) -> Result<Complex64> {
    ml_eval_with_branch(params, z).map(|(v, _)| v)
}

/// `(1/m!) ∂^m/∂λ^m E_{p,β}(t^p λ)` for `t >= 0`.
pub fn ml_lambda_derivative(params: &MlParams, t: f64, lambda: Complex64, m: usize) -> Result<Complex64> {
    check_finite(lambda, "eigenvalue")?;
    if !(t.is_finite() && t >= 0.0) {
        return Err(Error::DomainError(format!("t must be >= 0, got {t}")));
    }
    if t == 0.0 {
        return Ok(if m == 0 {
            Complex64::new(rgamma_real(params.beta), 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        });
    }
    let pv = params.p.value();
    let tp = t.powf(pv);
    let z = lambda * tp;
    let scale = tp.powi(m as i32);
    let v = if z.norm() <= params.switch_radius {
        series_derivative(pv, params.beta, params.series_tol, z, m)?
    } else {
        ml_asymptotic_derivative(params, z, m)?
    };
    Ok(v * scale)
}

/// Exponential part of `(1/m!) ∂^m/∂λ^m E_{p,β}(t^p λ)`:
/// `(1/m!) ∂^m/∂λ^m [(1/p) t^{1-β} λ^{(1-β)/p} exp(t λ^{1/p})]`.
pub fn ml_lambda_exponential_part(params: &MlParams, t: f64, lambda: Complex64, m: usize) -> Result<Complex64> {
    check_finite(lambda, "eigenvalue")?;
    if t == 0.0 {
        // every term carries t^{1-β} t^{...}: vanishes for β < 1, and for β = 1 only m = 0 survives
        if params.beta < 1.0 || m > 0 {
            return Ok(Complex64::new(0.0, 0.0));
        }
        return Ok(Complex64::new(1.0 / params.p.value(), 0.0));
    }
    let pv = params.p.value();
    let tp = t.powf(pv);
    let z = lambda * tp;
    Ok(exponential_part(params.p, params.beta, z, m)? * tp.powi(m as i32))
}

/// `(1/m!) ∂^m/∂λ^m [E_{p,β}(t^p λ) - exponential part]` for `λ` in the
/// unstable sector; bounded as `t → ∞` (it decays like `t^{-p}`).
///
/// Near the origin it is computed as a difference; further out directly from
/// the algebraic expansion, so no exponentially large intermediate appears.
/// Absolute accuracy is about `1e-8` around the hand-off, much better away
/// from it.
pub fn ml_lambda_remainder(params: &MlParams, t: f64, lambda: Complex64, m: usize) -> Result<Complex64> {
    check_finite(lambda, "eigenvalue")?;
    if !in_unstable_sector(params.p, lambda) {
        return Err(Error::SectorError {
            lambda: lambda.to_string(),
            expected: "unstable",
            p: params.p.value(),
        });
    }
    if !(t.is_finite() && t >= 0.0) {
        return Err(Error::DomainError(format!("t must be >= 0, got {t}")));
    }
    let pv = params.p.value();
    let tp = t.powf(pv);
    let z = lambda * tp;
    if z.norm() <= REMAINDER_SWITCH_ROOT.powf(pv) {
        let full = ml_lambda_derivative(params, t, lambda, m)?;
        Ok(full - ml_lambda_exponential_part(params, t, lambda, m)?)
    } else {
        Ok(algebraic_part(pv, params.beta, z, m, None, params.series_tol) * tp.powi(m as i32))
    }
}
