//! Matrix Mittag-Leffler functions on Jordan forms and the split
//! `E_{p,p}(t^p A) = t^{-p} B̃(t) + C̃(t)` into an exponential-carrying part
//! and an algebraically decaying part.
//!
//! A function of a Jordan block `λI + N` is the upper-triangular Toeplitz
//! matrix whose first row holds `(1/m!) ∂^m f(λ)`, `m = 0, …, n-1`. All
//! block-diagonal builders here work in Jordan coordinates; only
//! [`matrix_ml_eval`] conjugates back with the transform `P`.

use crate::error::{Error, Result};
use crate::mittag_leffler::{
    exp_root_coefficients, exp_root_derivative, ml_lambda_derivative, ml_lambda_remainder, FracOrder,
    MlParams,
};
use crate::special::rgamma_real;
use crate::spectral::{max_abs, CMatrix, JordanBlock, JordanSystem};
use num_complex::Complex64;

fn factorial(m: usize) -> f64 {
    (1..=m).map(|i| i as f64).product()
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

fn require_unstable(p: FracOrder, lambda: Complex64) -> Result<()> {
    if lambda.arg().abs() <= p.half_sector() {
        Ok(())
    } else {
        Err(Error::SectorError {
            lambda: lambda.to_string(),
            expected: "unstable",
            p: p.value(),
        })
    }
}

/// `Ψ̃_m(t, λ) = (1/m!) ∂^{m+1}/∂λ^{m+1} exp(t λ^{1/p})`.
pub fn psi_tilde(p: FracOrder, t: f64, lambda: Complex64, m: usize) -> Result<Complex64> {
    require_unstable(p, lambda)?;
    Ok(exp_root_derivative(p, t, lambda, m + 1)? / factorial(m))
}

/// `Ψ̃_m(t, λ) / t`, evaluated without the division so it is regular at `t = 0`.
pub fn psi_tilde_over_t(p: FracOrder, t: f64, lambda: Complex64, m: usize) -> Result<Complex64> {
    require_unstable(p, lambda)?;
    let pv = p.value();
    let ln_l = lambda.ln();
    let e = ((ln_l / pv).exp() * t).exp();
    let coeffs = exp_root_coefficients(pv, m + 1);
    let mut acc = Complex64::new(0.0, 0.0);
    let mut t_pow = 1.0;
    for (idx, c) in coeffs.iter().enumerate() {
        let i = idx + 1;
        let power = (ln_l * (i as f64 / pv - (m + 1) as f64)).exp();
        acc += power * (c * t_pow);
        t_pow *= t;
    }
    Ok(acc * e / factorial(m))
}

/// `Ψ_m(t, λ) = (1/m!) ∂^m/∂λ^m ((1/p) exp(t λ^{1/p}))`.
pub fn psi(p: FracOrder, t: f64, lambda: Complex64, m: usize) -> Result<Complex64> {
    require_unstable(p, lambda)?;
    Ok(exp_root_derivative(p, t, lambda, m)? / (factorial(m) * p.value()))
}

fn check_q(q: usize) -> Result<()> {
    if q < 2 {
        Err(Error::InvalidInput(format!("q must be >= 2, got {q}")))
    } else {
        Ok(())
    }
}

/// `Δ̃_m(t, λ) = (1/m!) ∂^m/∂λ^m [ -Σ_{k=1}^{q} t^{-pk} λ^{-k} / Γ(p - pk) ]`,
/// the λ-derivatives of the q-truncated algebraic part of `E_{p,p}(t^p λ)`.
/// The `k = 1` term vanishes identically (`1/Γ(0) = 0`).
pub fn delta_tilde(p: FracOrder, t: f64, lambda: Complex64, m: usize, q: usize) -> Result<Complex64> {
    check_q(q)?;
    if !(t > 0.0) {
        return Err(Error::DomainError(format!("t must be > 0, got {t}")));
    }
    let pv = p.value();
    let sign_m = if m % 2 == 0 { 1.0 } else { -1.0 };
    let mut acc = Complex64::new(0.0, 0.0);
    for k in 2..=q {
        let rg = rgamma_real(pv - pv * k as f64);
        if rg == 0.0 {
            continue;
        }
        let lam_pow = lambda.powi(-((k + m) as i32));
        acc -= lam_pow * (sign_m * binomial(k + m - 1, m) * t.powf(-pv * k as f64) * rg);
    }
    Ok(acc)
}

/// The coefficient form `(1/m!) Σ_{k=2}^{q} (-1)^{m+2} (k+m)!/(k-1)! λ^{-k-m-1} t^{-pk} / Γ(1 - pk)`.
///
/// Kept for comparison: it is not the λ-derivative of the algebraic part of
/// `E_{p,p}`, and its residual against the exact remainder decays only
/// like `t^{-2p}` rather than `t^{-p-pq}`.
pub fn delta_tilde_coefficient_form(p: FracOrder, t: f64, lambda: Complex64, m: usize, q: usize) -> Result<Complex64> {
    check_q(q)?;
    if !(t > 0.0) {
        return Err(Error::DomainError(format!("t must be > 0, got {t}")));
    }
    let pv = p.value();
    let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
    let mut acc = Complex64::new(0.0, 0.0);
    for k in 2..=q {
        let rg = rgamma_real(1.0 - pv * k as f64);
        if rg == 0.0 {
            continue;
        }
        let ratio = factorial(k + m) / factorial(k - 1);
        acc += lambda.powi(-((k + m + 1) as i32)) * (sign * ratio * t.powf(-pv * k as f64) * rg);
    }
    Ok(acc / factorial(m))
}

/// Upper-triangular Toeplitz matrix with the given first row.
pub fn toeplitz(first_row: &[Complex64]) -> CMatrix {
    let n = first_row.len();
    CMatrix::from_fn(n, n, |i, j| {
        if j >= i {
            first_row[j - i]
        } else {
            Complex64::new(0.0, 0.0)
        }
    })
}

/// Block-diagonal matrix in Jordan coordinates; `row` returns the first row
/// of a block's Toeplitz matrix or `None` for a zero block.
pub(crate) fn block_diagonal<F>(system: &JordanSystem, mut row: F) -> Result<CMatrix>
where
    F: FnMut(&JordanBlock) -> Result<Option<Vec<Complex64>>>,
{
    let n = system.dim();
    let mut out = CMatrix::zeros(n, n);
    for (b, o) in system.blocks().iter().zip(system.offsets()) {
        if let Some(r) = row(b)? {
            out.view_mut((o, o), (b.size, b.size)).copy_from(&toeplitz(&r));
        }
    }
    Ok(out)
}

fn check_nonzero_t(t: f64) -> Result<()> {
    if t == 0.0 || !t.is_finite() {
        Err(Error::DomainError(format!("t must be finite and nonzero, got {t}")))
    } else {
        Ok(())
    }
}

/// `B̃(t)`: Toeplitz rows `(Ψ̃_0, …, Ψ̃_{n_j-1})` on unstable blocks, zero on stable ones.
pub fn build_b_tilde(system: &JordanSystem, t: f64) -> Result<CMatrix> {
    check_nonzero_t(t)?;
    let p = system.p();
    block_diagonal(system, |b| {
        if b.is_stable() {
            return Ok(None);
        }
        (0..b.size).map(|m| psi_tilde(p, t, b.lambda, m)).collect::<Result<_>>().map(Some)
    })
}

/// `C̃(t)`: Toeplitz rows `(Δ̃_0, …, Δ̃_{n_j-1})` on every block.
pub fn build_c_tilde(system: &JordanSystem, t: f64, q: usize) -> Result<CMatrix> {
    let p = system.p();
    block_diagonal(system, |b| {
        (0..b.size).map(|m| delta_tilde(p, t, b.lambda, m, q)).collect::<Result<_>>().map(Some)
    })
}

/// `B(t)`: Toeplitz rows `(Ψ_0, …, Ψ_{n_j-1})` on unstable blocks, zero on stable ones.
pub fn build_b(system: &JordanSystem, t: f64) -> Result<CMatrix> {
    check_nonzero_t(t)?;
    let p = system.p();
    block_diagonal(system, |b| {
        if b.is_stable() {
            return Ok(None);
        }
        (0..b.size).map(|m| psi(p, t, b.lambda, m)).collect::<Result<_>>().map(Some)
    })
}

/// `B̃(t)`, `C̃(t)` and `B(t)` at one time.
#[derive(Debug, Clone, PartialEq)]
pub struct MlDecomposition {
    pub t: f64,
    pub q: usize,
    pub b_tilde: CMatrix,
    pub c_tilde: CMatrix,
    pub b: CMatrix,
}

pub fn decompose(system: &JordanSystem, t: f64, q: usize) -> Result<MlDecomposition> {
    Ok(MlDecomposition {
        t,
        q,
        b_tilde: build_b_tilde(system, t)?,
        c_tilde: build_c_tilde(system, t, q)?,
        b: build_b(system, t)?,
    })
}

/// `E_{p,β}(t^p J)` in Jordan coordinates.
pub fn matrix_ml_eval_jordan(system: &JordanSystem, beta: f64, t: f64) -> Result<CMatrix> {
    if !(t.is_finite() && t >= 0.0) {
        return Err(Error::DomainError(format!("t must be >= 0, got {t}")));
    }
    let params = MlParams::new(system.p(), beta)?;
    block_diagonal(system, |b| {
        (0..b.size)
            .map(|m| ml_lambda_derivative(&params, t, b.lambda, m))
            .collect::<Result<_>>()
            .map(Some)
    })
}

/// `E_{p,β}(t^p A) = P E_{p,β}(t^p J) P^{-1}`.
pub fn matrix_ml_eval(system: &JordanSystem, beta: f64, t: f64) -> Result<CMatrix> {
    Ok(system.to_original(&matrix_ml_eval_jordan(system, beta, t)?))
}

/// The exact `C̃(t) = E_{p,p}(t^p J) - t^{-p} B̃(t)` in Jordan coordinates.
///
/// On unstable blocks `t^{-p} B̃` is exactly the exponential part of
/// `E_{p,p}`, so the difference is taken analytically and never forms the
/// exponentially large terms.
pub fn residual_c(system: &JordanSystem, t: f64) -> Result<CMatrix> {
    if !(t > 0.0) {
        return Err(Error::DomainError(format!("t must be > 0, got {t}")));
    }
    let params = MlParams::new(system.p(), system.p().value())?;
    block_diagonal(system, |b| {
        (0..b.size)
            .map(|m| {
                if b.is_stable() {
                    ml_lambda_derivative(&params, t, b.lambda, m)
                } else {
                    ml_lambda_remainder(&params, t, b.lambda, m)
                }
            })
            .collect::<Result<_>>()
            .map(Some)
    })
}

/// `‖(t-τ) B(t) B̃(-τ) + (τ/p) B̃(t-τ)‖_max / max(1, ‖(τ/p) B̃(t-τ)‖_max)`.
pub fn correction_identity_residual(system: &JordanSystem, t: f64, tau: f64) -> Result<f64> {
    if !(t > 0.0 && tau > 0.0) || t == tau {
        return Err(Error::DomainError(format!(
            "need t > 0, tau > 0 and t != tau, got t = {t}, tau = {tau}"
        )));
    }
    let lhs = build_b(system, t)? * build_b_tilde(system, -tau)? * Complex64::new(t - tau, 0.0);
    let rhs = build_b_tilde(system, t - tau)? * Complex64::new(-tau / system.p().value(), 0.0);
    Ok(max_abs(&(lhs - &rhs)) / max_abs(&rhs).max(1.0))
}
