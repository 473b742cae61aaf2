//! Browser bindings: Mittag-Leffler evaluation, the first example's manifold
//! curve and the Liu manifold surface. Everything runs sequentially so the
//! module works without threads.

use fracmanifold::manifold::{QuadratureSpec, SigmaOperator, SolveOptions};
use fracmanifold::mittag_leffler::{ml_eval_with_branch, Branch};
use fracmanifold::systems::{ex1, ex1_closed_form, liu, ExampleSystem};
use fracmanifold::{Complex64, FracOrder, MlParams};
use wasm_bindgen::prelude::*;

const TAIL_TOL: f64 = 1e-10;
const SOLVER: SolveOptions = SolveOptions { max_iter: 50, tol: 1e-12 };
/// Keeps one request below a few seconds in the browser.
const MAX_SAMPLES: usize = 400;
const MIN_STEP: f64 = 0.002;

fn err(e: impl ToString) -> String {
    e.to_string()
}

fn check_grid(sigma_max: f64, count: usize, step: f64) -> Result<(), String> {
    if !(sigma_max > 0.0 && sigma_max <= 0.2) {
        return Err(format!("sigma range must lie in (0, 0.2], got {sigma_max}"));
    }
    if count < 2 {
        return Err("need at least 2 samples per axis".into());
    }
    if !(step >= MIN_STEP && step <= 0.05) {
        return Err(format!("step must lie in [{MIN_STEP}, 0.05], got {step}"));
    }
    Ok(())
}

fn axis(sigma_max: f64, count: usize) -> Vec<f64> {
    (0..count).map(|i| -sigma_max + 2.0 * sigma_max * i as f64 / (count - 1) as f64).collect()
}

fn operator(e: &ExampleSystem, step: f64) -> Result<SigmaOperator, String> {
    let spec = QuadratureSpec::certified(&e.system, step, 1.0, TAIL_TOL).map_err(err)?;
    SigmaOperator::new(&e.system, &e.field, &spec).map_err(err)
}

/// `E_{p,β}(z)` as `[re, im, branch]` with branch 0 for the series and 1 for
/// the asymptotic expansion.
#[wasm_bindgen]
pub fn ml_eval(p: f64, beta: f64, re: f64, im: f64) -> Result<Vec<f64>, String> {
    let params = MlParams::new(FracOrder::new(p).map_err(err)?, beta).map_err(err)?;
    let (v, branch) = ml_eval_with_branch(&params, Complex64::new(re, im)).map_err(err)?;
    Ok(vec![v.re, v.im, if branch == Branch::Series { 0.0 } else { 1.0 }])
}

/// Manifold of the first example at `p = 1/2` over `σ_1 ∈ [-max, max]`.
/// Rows of `[σ_1, σ_2, σ_3, closed-form σ_2, closed-form σ_3]`, flattened.
#[wasm_bindgen]
pub fn ex1_curve(sigma_max: f64, count: usize, step: f64) -> Result<Vec<f64>, String> {
    check_grid(sigma_max, count, step)?;
    if count > MAX_SAMPLES {
        return Err(format!("at most {MAX_SAMPLES} samples"));
    }
    let p = FracOrder::new(0.5).map_err(err)?;
    let op = operator(&ex1(p).map_err(err)?, step)?;
    let mut out = Vec::with_capacity(5 * count);
    for s1 in axis(sigma_max, count) {
        let r = op.solve(&[s1, 0.0, 0.0], SOLVER).map_err(err)?;
        let (c2, c3) = ex1_closed_form(p, s1);
        out.extend([s1, r.sigma_u[1], r.sigma_u[2], c2, c3]);
    }
    Ok(out)
}

/// `σ_2(σ_1, σ_3)` of the Liu system at `p = 1/2` on a `count × count` grid,
/// row-major with `σ_1` varying slowest.
#[wasm_bindgen]
pub fn liu_surface(sigma_max: f64, count: usize, step: f64) -> Result<Vec<f64>, String> {
    check_grid(sigma_max, count, step)?;
    if count * count > MAX_SAMPLES {
        return Err(format!("at most {MAX_SAMPLES} samples"));
    }
    let op = operator(&liu(FracOrder::new(0.5).map_err(err)?).map_err(err)?, step)?;
    let ax = axis(sigma_max, count);
    let mut out = Vec::with_capacity(count * count);
    for &s1 in &ax {
        for &s3 in &ax {
            out.push(op.solve(&[s1, 0.0, s3], SOLVER).map_err(err)?.sigma_u[1]);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ml_eval_reports_branch() {
        let v = ml_eval(1.0, 1.0, 1.0, 0.0).unwrap();
        assert!((v[0] - std::f64::consts::E).abs() < 1e-14);
        assert_eq!(v[2], 0.0);
        assert!(ml_eval(1.5, 1.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn ex1_curve_tracks_closed_form() {
        let rows = ex1_curve(0.1, 3, 0.01).unwrap();
        assert_eq!(rows.len(), 15);
        let last = &rows[10..];
        assert!((last[2] - last[4]).abs() < 5e-3 * last[4].abs(), "{last:?}");
        assert_eq!(rows[5..10][1], 0.0);
    }

    #[test]
    fn liu_surface_is_odd_in_each_axis() {
        let z = liu_surface(0.1, 3, 0.01).unwrap();
        assert_eq!(z.len(), 9);
        assert!((z[0] - z[8]).abs() < 1e-12 && (z[0] + z[2]).abs() < 1e-12);
        assert!(z[0] > 0.0);
    }

    #[test]
    fn requests_are_bounded() {
        assert!(ex1_curve(0.1, 500, 0.01).is_err());
        assert!(liu_surface(0.1, 30, 0.01).is_err());
        assert!(liu_surface(0.1, 3, 1e-4).is_err());
        assert!(ex1_curve(-0.1, 3, 0.01).is_err());
    }
}
