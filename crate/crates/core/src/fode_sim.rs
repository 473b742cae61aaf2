//! Fractional Adams predictor-corrector (PECE) for `D^p x = A x + f(x)`,
//! used as an independent check on computed manifold points.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::manifold::{unstable_norms, TrajectoryGrid, VectorField, MIN_GRID_INTERVALS};
use crate::mittag_leffler::FracOrder;
use crate::quadrature::{rectangle_weights, ProductTrapezoid};
use crate::special::rgamma_real;
use crate::spectral::JordanSystem;

/// A trajectory whose max-norm exceeds this has escaped.
pub const ESCAPE_NORM: f64 = 1e6;

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub p: FracOrder,
    pub step: f64,
    pub horizon: f64,
    pub initial: Vec<f64>,
}

impl SimConfig {
    pub fn new(p: FracOrder, step: f64, horizon: f64, initial: Vec<f64>) -> Result<Self> {
        if !(step > 0.0 && step.is_finite()) {
            return Err(Error::InvalidInput(format!("step must be positive, got {step}")));
        }
        let min_steps = MIN_GRID_INTERVALS.max(10) as f64;
        if !(horizon.is_finite() && horizon >= min_steps * step) {
            return Err(Error::InvalidInput(format!(
                "horizon {horizon} must cover at least {min_steps} steps of {step}"
            )));
        }
        if initial.is_empty() || initial.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("initial state must be a finite, non-empty vector".into()));
        }
        Ok(SimConfig {
            p,
            step,
            horizon,
            initial,
        })
    }

    pub fn steps(&self) -> usize {
        (self.horizon / self.step).round() as usize
    }
}

fn rhs(a: &DMatrix<f64>, f: &VectorField, x: &[f64], out: &mut [f64]) {
    f.eval_into(x, out);
    for (i, o) in out.iter_mut().enumerate() {
        *o += (0..x.len()).map(|j| a[(i, j)] * x[j]).sum::<f64>();
    }
}

fn check_shapes(config: &SimConfig, a: &DMatrix<f64>, f: &VectorField) -> Result<usize> {
    let n = config.initial.len();
    if a.nrows() != n || a.ncols() != n || f.dim() != n {
        return Err(Error::InvalidInput(format!(
            "dimension mismatch: state {n}, matrix {}x{}, field {}",
            a.nrows(),
            a.ncols(),
            f.dim()
        )));
    }
    Ok(n)
}

/// Shared weight tables of one run.
struct Weights {
    rg: f64,
    rect: Vec<f64>,
    trap: ProductTrapezoid,
}

impl Weights {
    fn new(config: &SimConfig) -> Self {
        let p = config.p.value();
        let steps = config.steps();
        Weights {
            rg: rgamma_real(p),
            rect: rectangle_weights(p, config.step, steps),
            trap: ProductTrapezoid::new(p, config.step, steps),
        }
    }

    /// Predictor and corrector memory sums for node `k + 1` from `F_0..=F_k`.
    fn history(&self, fh: &[f64], n: usize, k: usize, pred: &mut [f64], corr: &mut [f64]) {
        pred.iter_mut().for_each(|v| *v = 0.0);
        corr.iter_mut().for_each(|v| *v = 0.0);
        let a0 = self.trap.weight(0, k + 1);
        for i in 0..n {
            corr[i] = a0 * fh[i];
        }
        for j in 0..=k {
            let b = self.rect[k - j];
            let fj = &fh[j * n..(j + 1) * n];
            for i in 0..n {
                pred[i] += b * fj[i];
            }
            if j > 0 {
                let a = self.trap.inner(k + 1 - j);
                for i in 0..n {
                    corr[i] += a * fj[i];
                }
            }
        }
    }
}

/// Fractional Adams-Bashforth-Moulton scheme with one corrector pass.
pub fn pece_integrate(config: &SimConfig, a: &DMatrix<f64>, f: &VectorField) -> Result<TrajectoryGrid> {
    let n = check_shapes(config, a, f)?;
    let steps = config.steps();
    let w = Weights::new(config);
    let scale = w.trap.scale();
    let x0 = &config.initial;
    let mut xs = Vec::with_capacity((steps + 1) * n);
    let mut fh = Vec::with_capacity((steps + 1) * n);
    xs.extend_from_slice(x0);
    let mut fx = vec![0.0; n];
    rhs(a, f, x0, &mut fx);
    fh.extend_from_slice(&fx);
    let (mut pred, mut corr, mut xp) = (vec![0.0; n], vec![0.0; n], vec![0.0; n]);
    for k in 0..steps {
        w.history(&fh, n, k, &mut pred, &mut corr);
        for i in 0..n {
            xp[i] = x0[i] + w.rg * pred[i];
        }
        rhs(a, f, &xp, &mut fx);
        let mut next = vec![0.0; n];
        for i in 0..n {
            next[i] = x0[i] + w.rg * scale * (corr[i] + fx[i]);
        }
        let norm = next.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if !(norm <= ESCAPE_NORM) {
            return Err(Error::StepOverflow {
                norm,
                time: (k + 1) as f64 * config.step,
            });
        }
        rhs(a, f, &next, &mut fx);
        xs.extend_from_slice(&next);
        fh.extend_from_slice(&fx);
    }
    TrajectoryGrid::new(config.step, n, xs)
}

/// Recomputes node `k >= 1` of a trajectory from the stored history alone.
pub fn recompute_node(
    config: &SimConfig,
    a: &DMatrix<f64>,
    f: &VectorField,
    trajectory: &TrajectoryGrid,
    k: usize,
) -> Result<Vec<f64>> {
    let n = check_shapes(config, a, f)?;
    if k == 0 || k >= trajectory.len() {
        return Err(Error::InvalidInput(format!("node {k} cannot be recomputed")));
    }
    let w = Weights::new(config);
    let mut fh = vec![0.0; k * n];
    for j in 0..k {
        rhs(a, f, trajectory.value(j), &mut fh[j * n..(j + 1) * n]);
    }
    let (mut pred, mut corr) = (vec![0.0; n], vec![0.0; n]);
    w.history(&fh, n, k - 1, &mut pred, &mut corr);
    let x0 = trajectory.value(0);
    let xp: Vec<f64> = (0..n).map(|i| x0[i] + w.rg * pred[i]).collect();
    let mut fp = vec![0.0; n];
    rhs(a, f, &xp, &mut fp);
    Ok((0..n).map(|i| x0[i] + w.rg * w.trap.scale() * (corr[i] + fp[i])).collect())
}

/// Outcome of simulating from a manifold point and from a perturbed copy.
#[derive(Debug, Clone, PartialEq)]
pub struct AttractionReport {
    pub times: Vec<f64>,
    /// `‖π_u x(t)‖` along the on-manifold run, up to its end or escape.
    pub on_manifold: Vec<f64>,
    pub off_manifold: Vec<f64>,
    pub on_escaped: bool,
    pub off_escaped: bool,
    /// Largest `‖π_u x(t)‖ / ‖π_u x(0)‖` of the perturbed run (infinite on escape).
    pub growth: f64,
    /// Longest interval on which the on-manifold run stays at or below
    /// `fraction · ‖π_u x(0)‖`. An exact manifold point would keep it there
    /// for all later times; a computed one leaves once the unstable mode has
    /// amplified its residual error, so the interval ends in finite time.
    pub decay_window: Option<(f64, f64)>,
}

impl AttractionReport {
    pub fn decay_window_length(&self) -> f64 {
        self.decay_window.map(|(a, b)| b - a).unwrap_or(0.0)
    }

    /// Decay held for at least `min_window` and the perturbed run grew by `min_growth`.
    pub fn passes(&self, min_window: f64, min_growth: f64) -> bool {
        self.decay_window_length() >= min_window && self.growth >= min_growth
    }
}

fn longest_window(norms: &[f64], limit: f64, step: f64) -> Option<(f64, f64)> {
    let mut best: Option<(usize, usize)> = None;
    let mut start = None;
    for (k, &v) in norms.iter().enumerate() {
        if v <= limit {
            let s = *start.get_or_insert(k);
            if best.map_or(true, |(a, b)| k - s > b - a) {
                best = Some((s, k));
            }
        } else {
            start = None;
        }
    }
    best.map(|(a, b)| (a as f64 * step, b as f64 * step))
}

/// Runs PECE from `point` and from `point + δ v`, with `v` the first unstable
/// direction, and records both unstable projections.
pub fn attraction_experiment(
    system: &JordanSystem,
    f: &VectorField,
    point: &[f64],
    perturbation: f64,
    step: f64,
    horizon: f64,
    fraction: f64,
) -> Result<AttractionReport> {
    if system.unstable_dim() == 0 {
        return Err(Error::InvalidInput("system has no unstable direction to perturb".into()));
    }
    let a_c = system.matrix();
    let n = system.dim();
    let a = DMatrix::from_fn(n, n, |i, j| a_c[(i, j)].re);
    let dir: Vec<f64> = {
        let col = system.transform().column(system.stable_dim());
        let v: Vec<f64> = col.iter().map(|c| c.re).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        v.into_iter().map(|x| x / norm).collect()
    };
    let shifted: Vec<f64> = point.iter().zip(&dir).map(|(x, d)| x + perturbation * d).collect();
    let run = |x0: Vec<f64>| -> Result<(Vec<f64>, bool)> {
        let cfg = SimConfig::new(system.p(), step, horizon, x0)?;
        match pece_integrate(&cfg, &a, f) {
            Ok(traj) => Ok((unstable_norms(system, &traj), false)),
            Err(Error::StepOverflow { time, .. }) => {
                // rerun up to the last safe node to keep the history
                let safe = ((time / step).floor() as usize).saturating_sub(1);
                let cut = SimConfig::new(system.p(), step, safe.max(MIN_GRID_INTERVALS) as f64 * step, cfg.initial)?;
                let traj = pece_integrate(&cut, &a, f)?;
                Ok((unstable_norms(system, &traj), true))
            }
            Err(e) => Err(e),
        }
    };
    let (on, on_escaped) = run(point.to_vec())?;
    let (off, off_escaped) = run(shifted)?;
    let off0 = off[0].max(f64::MIN_POSITIVE);
    let growth = if off_escaped {
        f64::INFINITY
    } else {
        off.iter().copied().fold(0.0, f64::max) / off0
    };
    let len = on.len().max(off.len());
    let decay_window = longest_window(&on, fraction * on[0], step);
    Ok(AttractionReport {
        times: (0..len).map(|k| k as f64 * step).collect(),
        on_manifold: on,
        off_manifold: off,
        on_escaped,
        off_escaped,
        growth,
        decay_window,
    })
}
