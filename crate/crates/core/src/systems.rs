//! The worked example systems and their closed-form manifold coefficients.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::Result;
use crate::manifold::VectorField;
use crate::mittag_leffler::{ml_eval, FracOrder, MlParams};
use crate::quadrature::GaussRule;
use crate::spectral::{JordanBlock, JordanSystem, Stability};

/// Default radius of the ball on which the example nonlinearities are sampled.
pub const EXAMPLE_RADIUS: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Example {
    Ex1,
    Ex2,
    Liu,
}

impl Example {
    pub fn name(self) -> &'static str {
        match self {
            Example::Ex1 => "ex1",
            Example::Ex2 => "ex2",
            Example::Liu => "liu",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "ex1" => Some(Example::Ex1),
            "ex2" => Some(Example::Ex2),
            "liu" => Some(Example::Liu),
            _ => None,
        }
    }

    pub fn build(self, p: FracOrder) -> Result<ExampleSystem> {
        match self {
            Example::Ex1 => ex1(p),
            Example::Ex2 => ex2(p),
            Example::Liu => liu(p),
        }
    }
}

/// Linear part, its Jordan form and the nonlinearity.
#[derive(Debug, Clone)]
pub struct ExampleSystem {
    pub matrix: DMatrix<f64>,
    pub system: JordanSystem,
    pub field: VectorField,
}

fn real(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

/// `A = [[-1,0,0],[0,2,1],[0,0,2]]`, `f = (0, x_1^2, 3 x_1^2)`.
pub fn ex1(p: FracOrder) -> Result<ExampleSystem> {
    let system = JordanSystem::new(
        p,
        vec![
            JordanBlock::new(real(-1.0), 1, Stability::Stable)?,
            JordanBlock::new(real(2.0), 2, Stability::Unstable)?,
        ],
        None,
    )?;
    let field = VectorField::new(3, EXAMPLE_RADIUS, |x, o| {
        o[0] = 0.0;
        o[1] = x[0] * x[0];
        o[2] = 3.0 * (x[0] * x[0]);
    })?;
    Ok(ExampleSystem {
        matrix: DMatrix::from_row_slice(3, 3, &[-1.0, 0.0, 0.0, 0.0, 2.0, 1.0, 0.0, 0.0, 2.0]),
        system,
        field,
    })
}

/// `A = diag(-2, 2)`, `f = (x_1^2, x_1^2 + x_2^2)`.
pub fn ex2(p: FracOrder) -> Result<ExampleSystem> {
    let system = JordanSystem::from_diagonal(p, &[real(-2.0), real(2.0)])?;
    let field = VectorField::new(2, EXAMPLE_RADIUS, |x, o| {
        o[0] = x[0] * x[0];
        o[1] = x[0] * x[0] + x[1] * x[1];
    })?;
    Ok(ExampleSystem {
        matrix: DMatrix::from_row_slice(2, 2, &[-2.0, 0.0, 0.0, 2.0]),
        system,
        field,
    })
}

/// Fractional Liu system linearised at the origin:
/// `A = diag(-1, 2.5, -5)`, `f = (0, -4 x_1 x_3, 0)`.
pub fn liu(p: FracOrder) -> Result<ExampleSystem> {
    let system = JordanSystem::from_diagonal(p, &[real(-1.0), real(2.5), real(-5.0)])?;
    let field = VectorField::new(3, EXAMPLE_RADIUS, |x, o| {
        o[0] = 0.0;
        o[1] = -4.0 * (x[0] * x[2]);
        o[2] = 0.0;
    })?;
    Ok(ExampleSystem {
        matrix: DMatrix::from_row_slice(3, 3, &[-1.0, 0.0, 0.0, 0.0, 2.5, 0.0, 0.0, 0.0, -5.0]),
        system,
        field,
    })
}

/// Adaptive Gauss-Legendre on `[a, b]`: a panel is accepted when one
/// 10-point rule agrees with two half-panel rules.
pub fn adaptive_integrate<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    fn recurse<F: Fn(f64) -> f64>(f: &F, rule: &GaussRule, a: f64, b: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let mid = 0.5 * (a + b);
        let left = rule.integrate(a, mid, f);
        let right = rule.integrate(mid, b, f);
        if depth == 0 || (left + right - whole).abs() <= tol {
            return left + right;
        }
        recurse(f, rule, a, mid, left, 0.5 * tol, depth - 1) + recurse(f, rule, mid, b, right, 0.5 * tol, depth - 1)
    }
    let rule = GaussRule::new(10);
    let whole = rule.integrate(a, b, f);
    recurse(f, &rule, a, b, whole, tol, 40)
}

/// `∫_0^∞ e^{-μτ} w(τ) φ(τ) dτ` with the substitution `τ = u^{1/p}` that
/// smooths the fractional powers of `φ` at the origin.
fn weighted_integral<W: Fn(f64) -> f64>(p: f64, mu: f64, w: W) -> f64 {
    let top = (60.0 / mu).powf(p);
    let g = |u: f64| {
        if u <= 0.0 {
            return 0.0;
        }
        let tau = u.powf(1.0 / p);
        let jac = tau / (p * u);
        (-mu * tau).exp() * w(tau) * jac
    };
    adaptive_integrate(&g, 0.0, top, 1e-15)
}

fn ml_real(p: FracOrder, x: f64) -> f64 {
    let params = MlParams::new(p, 1.0).expect("beta = 1 is valid");
    ml_eval(&params, real(x)).map(|v| v.re).unwrap_or(f64::NAN)
}

/// Coefficients of the closed-form map of [`ex1`]:
/// `l = ∫ e^{-τ 2^{1/p}} E_p(-τ^p)^2 dτ`,
/// `m = ∫ e^{-τ 2^{1/p}} (2^{1/p} τ - 1 + p) E_p(-τ^p)^2 dτ`.
pub fn ex1_constants(p: FracOrder) -> (f64, f64) {
    let pv = p.value();
    let mu = 2f64.powf(1.0 / pv);
    let e2 = |t: f64| ml_real(p, -t.powf(pv)).powi(2);
    let l = weighted_integral(pv, mu, e2);
    let m = weighted_integral(pv, mu, |t| (mu * t - 1.0 + pv) * e2(t));
    (l, m)
}

/// `(σ_2, σ_3)` of [`ex1`] for stable coordinate `σ_1`.
pub fn ex1_closed_form(p: FracOrder, sigma1: f64) -> (f64, f64) {
    let pv = p.value();
    let (l, m) = ex1_constants(p);
    let s2 = sigma1 * sigma1;
    let sigma3 = -3.0 * l * s2 * 2f64.powf(1.0 / pv - 1.0);
    let sigma2 = -l * s2 * 2f64.powf(1.0 / pv - 1.0) + 3.0 / pv * m * s2 * 2f64.powf(1.0 / pv - 2.0);
    (sigma2, sigma3)
}

/// `l = 4 (5/2)^{1/p-1} ∫ e^{-τ (5/2)^{1/p}} E_p(-τ^p) E_p(-5 τ^p) dτ`, the
/// coefficient of `σ_2 = l σ_1 σ_3` for [`liu`].
pub fn liu_constant(p: FracOrder) -> f64 {
    let pv = p.value();
    let mu = 2.5f64.powf(1.0 / pv);
    let prefactor = 4.0 * 2.5f64.powf(1.0 / pv - 1.0);
    prefactor
        * weighted_integral(pv, mu, |t| {
            let tp = t.powf(pv);
            ml_real(p, -tp) * ml_real(p, -5.0 * tp)
        })
}
