//! Argument parsing and the four commands.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use fracmanifold::fode_sim::{attraction_experiment, pece_integrate, AttractionReport, SimConfig};
use fracmanifold::manifold::{
    unstable_norms, verify_unstable_decay, ManifoldResult, QuadratureSpec, SigmaOperator, SolveOptions, VectorField,
};
use fracmanifold::matrix_ml::matrix_ml_eval;
use fracmanifold::mittag_leffler::{ml_asymptotic, ml_eval_with_branch, ml_lambda_derivative, ml_series, Branch};
use fracmanifold::spectral::JordanSystem;
use fracmanifold::systems::{ex1_closed_form, ex1_constants, liu_constant, Example};
use fracmanifold::{Complex64, FracOrder, MlParams};
use nalgebra::DMatrix;

use crate::config::{self, FieldSpec, GridSpec, RunConfig};
use crate::plot::{line_svg, surface_svg, Series};
use crate::report::{out_path, write_csv, write_file, Check, Report};
use crate::CliError;

/// Relative tolerance of the closed-form comparisons.
pub const CLOSED_FORM_TOL: f64 = 1e-3;
/// Relative tolerance of the scaling-law checks.
pub const SCALING_TOL: f64 = 1e-2;
/// Trailing-window decay threshold relative to the peak.
pub const DECAY_RATIO: f64 = 0.1;
/// Minimum length of the on-manifold decay window in the simulations.
pub const MIN_DECAY_WINDOW: f64 = 0.5;
pub const MIN_GROWTH: f64 = 10.0;

const DEFAULT_P: f64 = 0.5;
const DEFAULT_TAIL_TOL: f64 = 1e-10;
const DEFAULT_SOLVER_TOL: f64 = 1e-13;
const DEFAULT_MAX_ITER: usize = 50;
const DEFAULT_GRID: GridSpec = GridSpec { min: -0.1, max: 0.1, count: 11 };

#[derive(Debug, Parser)]
#[command(name = "fracmanifold", version, about = "Local stable manifolds of fractional-order systems")]
pub struct Cli {
    /// JSON configuration file; flags override its values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory (default `out`).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads for manifold sampling (default: all cores).
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// Solver tolerance: Picard stopping threshold, or the error bound of a
    /// linear simulation.
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evaluate a Mittag-Leffler function with both branches.
    MlEval(MlEvalArgs),
    /// Run one of the worked examples end to end.
    Example(ExampleArgs),
    /// Sample the manifold map of a system given in the config file.
    Manifold(ManifoldArgs),
    /// Integrate a system with the predictor-corrector scheme.
    Simulate(SimulateArgs),
}

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
pub struct MlEvalArgs {
    /// Fractional order in (0, 1] (default 0.5).
    #[arg(long)]
    pub p: Option<f64>,
    /// Second parameter (default 1).
    #[arg(long)]
    pub beta: Option<f64>,
    /// Real part of the argument.
    #[arg(long)]
    pub z_re: Option<f64>,
    /// Imaginary part of the argument.
    #[arg(long)]
    pub z_im: Option<f64>,
    /// Truncation order of the asymptotic expansion.
    #[arg(long)]
    pub q: Option<usize>,
    /// Also print the m-th derivative in z.
    #[arg(long)]
    pub deriv: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ExampleName {
    Ex1,
    Ex2,
    Liu,
}

impl From<ExampleName> for Example {
    fn from(e: ExampleName) -> Self {
        match e {
            ExampleName::Ex1 => Example::Ex1,
            ExampleName::Ex2 => Example::Ex2,
            ExampleName::Liu => Example::Liu,
        }
    }
}

#[derive(Debug, Clone, Args)]
#[command(allow_negative_numbers = true)]
pub struct GridArgs {
    /// Lower end of the stable-coordinate grid (default -0.1).
    #[arg(long)]
    pub grid_min: Option<f64>,
    /// Upper end of the grid (default 0.1).
    #[arg(long)]
    pub grid_max: Option<f64>,
    /// Points per stable coordinate (default 11).
    #[arg(long)]
    pub grid_count: Option<usize>,
}

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
pub struct ExampleArgs {
    pub name: ExampleName,
    /// Fractional order (default 0.5).
    #[arg(long)]
    pub p: Option<f64>,
    /// First stable coordinate of the single-point checks.
    #[arg(long)]
    pub sigma1: Option<f64>,
    /// Second stable coordinate (Liu only, default 0.05).
    #[arg(long)]
    pub sigma3: Option<f64>,
    /// Grid step of the fixed-point solver.
    #[arg(long)]
    pub step: Option<f64>,
    /// Reported horizon of the fixed-point trajectory.
    #[arg(long)]
    pub horizon: Option<f64>,
    /// Step of the predictor-corrector runs.
    #[arg(long)]
    pub sim_step: Option<f64>,
    /// Final time of the predictor-corrector runs (default 20).
    #[arg(long)]
    pub sim_horizon: Option<f64>,
    /// Size of the off-manifold kick (default 1e-3).
    #[arg(long)]
    pub perturbation: Option<f64>,
    #[command(flatten)]
    pub grid: GridArgs,
}

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
pub struct ManifoldArgs {
    /// Fractional order (default 0.5).
    #[arg(long)]
    pub p: Option<f64>,
    /// Grid step of the fixed-point solver (default 0.01).
    #[arg(long)]
    pub step: Option<f64>,
    /// Reported horizon of the trajectory (default 1).
    #[arg(long)]
    pub horizon: Option<f64>,
    #[command(flatten)]
    pub grid: GridArgs,
}

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
pub struct SimulateArgs {
    /// Fractional order (default 0.5).
    #[arg(long)]
    pub p: Option<f64>,
    /// Time step (default 1e-3).
    #[arg(long)]
    pub step: Option<f64>,
    /// Final time (default 5).
    #[arg(long)]
    pub horizon: Option<f64>,
    /// Initial state, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub initial: Option<Vec<f64>>,
    /// Run the on/off-manifold pair with this unstable perturbation.
    #[arg(long)]
    pub perturbation: Option<f64>,
}

/// Parameters shared by every fixed-point computation.
#[derive(Debug, Clone, Copy)]
struct SolverSettings {
    p: FracOrder,
    step: f64,
    horizon: f64,
    tail_tol: f64,
    opts: SolveOptions,
}

impl SolverSettings {
    fn resolve(cli: &Cli, cfg: &RunConfig, p: Option<f64>, step: Option<f64>, horizon: Option<f64>, defaults: (f64, f64)) -> Result<Self, CliError> {
        let opts = SolveOptions {
            max_iter: cfg.max_iter.unwrap_or(DEFAULT_MAX_ITER),
            tol: cli.tol.or(cfg.tol).unwrap_or(DEFAULT_SOLVER_TOL),
        };
        if opts.max_iter == 0 || !(opts.tol > 0.0) {
            return Err(CliError::Invalid("need max_iter >= 1 and tol > 0".into()));
        }
        Ok(SolverSettings {
            p: config::frac_order(p.or(cfg.p).unwrap_or(DEFAULT_P))?,
            step: step.or(cfg.step).unwrap_or(defaults.0),
            horizon: horizon.or(cfg.horizon).unwrap_or(defaults.1),
            tail_tol: cfg.tail_tol.unwrap_or(DEFAULT_TAIL_TOL),
            opts,
        })
    }

    fn record(&self, r: &mut Report) {
        r.input("p", self.p.value());
        r.input("step", self.step);
        r.input("horizon", self.horizon);
        r.input("tail_tol", self.tail_tol);
        r.input("solver_tol", self.opts.tol);
        r.input("max_iter", self.opts.max_iter);
    }

    fn operator(&self, system: &JordanSystem, field: &VectorField, r: &mut Report) -> Result<SigmaOperator, CliError> {
        let spec = QuadratureSpec::certified(system, self.step, self.horizon, self.tail_tol)?;
        r.input("tail_cut", spec.tail_cut);
        r.input("lipschitz_estimate", field.lipschitz());
        Ok(SigmaOperator::new(system, field, &spec)?)
    }
}

fn grid_of(args: &GridArgs, cfg: &RunConfig) -> GridSpec {
    let base = cfg.grid.unwrap_or(DEFAULT_GRID);
    GridSpec {
        min: args.grid_min.unwrap_or(base.min),
        max: args.grid_max.unwrap_or(base.max),
        count: args.grid_count.unwrap_or(base.count),
    }
}

fn thread_pool(cli: &Cli, cfg: &RunConfig) -> Result<rayon::ThreadPool, CliError> {
    let jobs = cli.jobs.or(cfg.jobs).unwrap_or(0);
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| CliError::Invalid(format!("cannot start {jobs} worker threads: {e}")))
}

fn out_dir(cli: &Cli) -> Result<PathBuf, CliError> {
    let dir = cli.out.clone().unwrap_or_else(|| PathBuf::from("out"));
    std::fs::create_dir_all(&dir).map_err(|e| CliError::Io(format!("cannot create {}: {e}", dir.display())))?;
    Ok(dir)
}

pub fn run(cli: &Cli) -> Result<(), CliError> {
    let cfg = RunConfig::load(cli.config.as_deref())?;
    match &cli.command {
        Command::MlEval(a) => ml_eval_cmd(a, &cfg),
        Command::Example(a) => example_cmd(cli, a, &cfg),
        Command::Manifold(a) => manifold_cmd(cli, a, &cfg),
        Command::Simulate(a) => simulate_cmd(cli, a, &cfg),
    }
}

fn fmt_c(z: Complex64) -> String {
    format!("{:.16e} {:+.16e}i", z.re, z.im)
}

fn ml_eval_cmd(a: &MlEvalArgs, cfg: &RunConfig) -> Result<(), CliError> {
    let p = config::frac_order(a.p.or(cfg.p).ok_or_else(|| CliError::Invalid("--p is required".into()))?)?;
    let beta = a.beta.or(cfg.beta).unwrap_or(1.0);
    let mut params = MlParams::new(p, beta)?;
    if let Some(q) = a.q.or(cfg.q) {
        params = params.with_q(q)?;
    }
    let z = Complex64::new(a.z_re.or(cfg.z_re).unwrap_or(0.0), a.z_im.or(cfg.z_im).unwrap_or(0.0));
    let (value, branch) = ml_eval_with_branch(&params, z)?;
    println!("E_{{{},{}}}({}) = {}", p.value(), beta, fmt_c(z), fmt_c(value));
    let chosen = match branch {
        Branch::Series => "series",
        Branch::Asymptotic => "asymptotic",
    };
    let series = ml_series(&params, z);
    let asym = ml_asymptotic(&params, z);
    match &series {
        Ok(v) => println!("series:     {}", fmt_c(*v)),
        Err(e) => println!("series:     unavailable ({e})"),
    }
    match &asym {
        Ok(v) => println!("asymptotic: {}", fmt_c(*v)),
        Err(e) => println!("asymptotic: unavailable ({e})"),
    }
    if let (Ok(s), Ok(t)) = (&series, &asym) {
        let scale = s.norm().max(t.norm()).max(f64::MIN_POSITIVE);
        println!("branch difference: {:.3e} (relative {:.3e})", (s - t).norm(), (s - t).norm() / scale);
    }
    println!("branch chosen: {chosen}");
    if let Some(m) = a.deriv.or(cfg.deriv) {
        // (1/m!) d^m/dλ^m E(t^p λ) at t = 1 is E^{(m)}(z) / m!
        let d = ml_lambda_derivative(&params, 1.0, z, m)?;
        let fact: f64 = (1..=m).map(|k| k as f64).product();
        println!("d^{m}/dz^{m} E = {}", fmt_c(d * fact));
    }
    Ok(())
}

fn sample_header(n: usize) -> Vec<String> {
    let mut h = vec!["index".to_string()];
    h.extend((1..=n).map(|i| format!("sigma_s_{i}")));
    h.extend((1..=n).map(|i| format!("sigma_u_{i}")));
    h.push("iterations".into());
    h.push("final_delta".into());
    h
}

/// Solves every sample and writes `(σ_s, σ_u)` rows; failures get NaN entries
/// and a note in the report.
fn map_samples(
    op: &SigmaOperator,
    samples: &[Vec<f64>],
    opts: SolveOptions,
    pool: &rayon::ThreadPool,
    csv: &Path,
    r: &mut Report,
) -> Result<Vec<Option<ManifoldResult>>, CliError> {
    let n = op.system().dim();
    let results = pool.install(|| op.manifold_map(samples, opts));
    let mut rows = Vec::with_capacity(samples.len());
    let mut out = Vec::with_capacity(samples.len());
    let mut failed = 0usize;
    let mut worst_delta = 0.0f64;
    let mut worst_iter = 0usize;
    for (i, (s, res)) in samples.iter().zip(results).enumerate() {
        let mut row = vec![i as f64];
        row.extend(s);
        match res {
            Ok(m) => {
                row.extend(&m.sigma_u);
                row.push(m.iterations as f64);
                row.push(m.final_delta);
                if !m.converged {
                    failed += 1;
                    r.note(format!("sample {i}: no convergence within {} iterations", opts.max_iter));
                }
                worst_delta = worst_delta.max(m.final_delta);
                worst_iter = worst_iter.max(m.iterations);
                out.push(Some(m));
            }
            Err(e) => {
                if e.is_invalid_input() {
                    return Err(e.into());
                }
                failed += 1;
                r.note(format!("sample {i}: {e}"));
                row.extend(std::iter::repeat(f64::NAN).take(n));
                row.push(0.0);
                row.push(f64::NAN);
                out.push(None);
            }
        }
        rows.push(row);
    }
    write_csv(csv, &sample_header(n), &rows)?;
    r.check(Check::at_most("failed_samples", failed as f64, 0.0));
    r.check(Check::at_most("max_final_delta", worst_delta, opts.tol));
    r.check(Check::at_most("max_iterations", worst_iter as f64, opts.max_iter as f64));
    Ok(out)
}

fn example_cmd(cli: &Cli, a: &ExampleArgs, cfg: &RunConfig) -> Result<(), CliError> {
    let ex: Example = a.name.into();
    // steps chosen by refinement studies: the manifold point must be accurate
    // enough, and the simulation fine enough, for the on-manifold run to shadow
    // the decaying solution for a while before the unstable mode takes over
    let (defaults, default_sim_step) = match ex {
        Example::Ex1 => ((0.005, 1.0), 5e-4),
        Example::Ex2 => ((0.005, 20.0), 1e-3),
        Example::Liu => ((0.0025, 1.0), 1e-3),
    };
    let s = SolverSettings::resolve(cli, cfg, a.p, a.step, a.horizon, defaults)?;
    let grid = grid_of(&a.grid, cfg);
    let sim_step = a.sim_step.or(cfg.sim_step).unwrap_or(default_sim_step);
    let sim_horizon = a.sim_horizon.or(cfg.sim_horizon).unwrap_or(20.0);
    let perturbation = a.perturbation.or(cfg.perturbation).unwrap_or(1e-3);
    let sigma1 = a.sigma1.or(cfg.sigma1).unwrap_or(match ex {
        Example::Liu => 0.05,
        _ => 0.01,
    });
    let sigma3 = a.sigma3.or(cfg.sigma3).unwrap_or(0.05);
    let dir = out_dir(cli)?;
    let pool = thread_pool(cli, cfg)?;
    let name = ex.name();
    let mut r = Report::new(&format!("example {name}"));
    s.record(&mut r);
    r.input("grid", format!("[{}, {}] x {}", grid.min, grid.max, grid.count));
    r.input("sim_step", sim_step);
    r.input("sim_horizon", sim_horizon);
    r.input("perturbation", perturbation);

    let sys = ex.build(s.p)?;
    r.note(format!(
        "split: {} stable and {} unstable dimensions",
        sys.system.stable_dim(),
        sys.system.unstable_dim()
    ));
    let op = s.operator(&sys.system, &sys.field, &mut r)?;
    let basis = config::stable_basis(&sys.system);
    let samples = config::grid_samples(&basis, &grid)?;
    let mapped = map_samples(&op, &samples, s.opts, &pool, &out_path(&dir, &format!("{name}_samples.csv")), &mut r)?;

    // the worked point, its doubled copy and the on/off-manifold simulations
    let point = match ex {
        Example::Liu => vec![sigma1, 0.0, sigma3],
        Example::Ex1 => vec![sigma1, 0.0, 0.0],
        Example::Ex2 => vec![sigma1, 0.0],
    };
    r.input("sigma1", sigma1);
    if ex == Example::Liu {
        r.input("sigma3", sigma3);
    }
    let base = op.solve(&point, s.opts)?;
    let mut doubled_point = point.clone();
    doubled_point[0] *= 2.0;
    let doubled = op.solve(&doubled_point, s.opts)?;
    let law = if ex == Example::Liu { 2.0 } else { 4.0 };
    for (i, (u1, u2)) in base.sigma_u.iter().zip(&doubled.sigma_u).enumerate() {
        if u1.abs() > 0.0 {
            r.check(Check::relative(&format!("scaling_ratio_x{}", i + 1), u2 / u1, law, SCALING_TOL));
        }
    }

    match ex {
        Example::Ex1 => ex1_report(&s, &base, &samples, &mapped, &dir, &mut r)?,
        Example::Ex2 => ex2_report(&sys.system, &base, &dir, &mut r)?,
        Example::Liu => liu_report(&s, &grid, &samples, &mapped, &dir, &mut r)?,
    }

    let manifold_point: Vec<f64> = base.sigma_s.iter().zip(&base.sigma_u).map(|(a, b)| a + b).collect();
    let att = attraction_experiment(&sys.system, &sys.field, &manifold_point, perturbation, sim_step, sim_horizon, DECAY_RATIO)?;
    attraction_checks(&att, sim_step, &mut r);
    write_attraction(&dir, name, &att)?;
    if ex == Example::Ex2 {
        let fixed = unstable_norms(&sys.system, &base.trajectory);
        let svg = line_svg(
            "Example 2: unstable projection |pi_u x(t)|",
            "t",
            "|pi_u x(t)|",
            &[
                Series { name: "fixed point", points: fixed.iter().enumerate().map(|(k, &v)| (base.trajectory.time(k), v)).collect(), dashed: false },
                Series { name: "PECE on manifold", points: att.times.iter().copied().zip(att.on_manifold.iter().copied()).collect(), dashed: false },
                Series { name: "PECE perturbed", points: att.times.iter().copied().zip(att.off_manifold.iter().copied()).collect(), dashed: true },
            ],
            true,
        );
        write_file(&out_path(&dir, &format!("{name}.svg")), &svg)?;
    }
    r.write(&out_path(&dir, &format!("{name}_report.json")))?;
    r.outcome()
}

fn attraction_checks(att: &AttractionReport, step: f64, r: &mut Report) {
    r.check(Check::at_least("decay_window_length", att.decay_window_length(), MIN_DECAY_WINDOW));
    // an escaped run has unbounded growth; report the factor reached before escape
    let off0 = att.off_manifold.first().copied().unwrap_or(0.0).max(f64::MIN_POSITIVE);
    let growth = if att.growth.is_finite() {
        att.growth
    } else {
        att.off_manifold.iter().copied().fold(0.0, f64::max) / off0
    };
    r.check(Check::at_least("perturbed_growth", growth, MIN_GROWTH));
    if let Some((t0, t1)) = att.decay_window {
        r.note(format!(
            "on-manifold |pi_u x| stays below {DECAY_RATIO} x its initial value on [{t0:.4}, {t1:.4}]; afterwards the \
             unstable mode amplifies the residual error of the computed point"
        ));
    }
    if att.off_escaped {
        r.note(format!(
            "perturbed run escaped after t = {:.4}",
            att.off_manifold.len().saturating_sub(1) as f64 * step
        ));
    }
}

fn write_attraction(dir: &Path, name: &str, att: &AttractionReport) -> Result<(), CliError> {
    let header = vec!["time".to_string(), "pi_u_norm".to_string()];
    for (tag, norms) in [("on_manifold", &att.on_manifold), ("off_manifold", &att.off_manifold)] {
        let rows: Vec<Vec<f64>> = norms.iter().enumerate().map(|(k, &v)| vec![att.times[k], v]).collect();
        write_csv(&out_path(dir, &format!("{name}_{tag}.csv")), &header, &rows)?;
    }
    Ok(())
}

fn ex1_report(
    s: &SolverSettings,
    base: &ManifoldResult,
    samples: &[Vec<f64>],
    mapped: &[Option<ManifoldResult>],
    dir: &Path,
    r: &mut Report,
) -> Result<(), CliError> {
    let p = s.p;
    let sigma1 = base.sigma_s[0];
    let (l, m) = ex1_constants(p);
    r.note(format!("quadrature constants: l = {l:.15e}, m = {m:.15e}"));
    let (s2, s3) = ex1_closed_form(p, sigma1);
    r.check(Check::relative("sigma2", base.sigma_u[1], s2, CLOSED_FORM_TOL));
    r.check(Check::relative("sigma3", base.sigma_u[2], s3, CLOSED_FORM_TOL));
    // quadratic coefficients fitted over the grid
    let (c2_ref, c3_ref) = ex1_closed_form(p, 1.0);
    let (mut num2, mut num3, mut den) = (0.0, 0.0, 0.0);
    let mut curves = [Vec::new(), Vec::new(), Vec::new(), Vec::new()];
    for (x, res) in samples.iter().zip(mapped) {
        let Some(res) = res else { continue };
        let q = x[0] * x[0];
        num2 += res.sigma_u[1] * q;
        num3 += res.sigma_u[2] * q;
        den += q * q;
        curves[0].push((x[0], res.sigma_u[1]));
        curves[1].push((x[0], res.sigma_u[2]));
        curves[2].push((x[0], c2_ref * q));
        curves[3].push((x[0], c3_ref * q));
    }
    r.check(Check::relative("fitted_sigma2_coefficient", num2 / den, c2_ref, CLOSED_FORM_TOL));
    r.check(Check::relative("fitted_sigma3_coefficient", num3 / den, c3_ref, CLOSED_FORM_TOL));
    let [a, b, c, d] = curves;
    let svg = line_svg(
        "Example 1: manifold map",
        "sigma_1",
        "sigma_u",
        &[
            Series { name: "sigma_2 computed", points: a, dashed: false },
            Series { name: "sigma_3 computed", points: b, dashed: false },
            Series { name: "sigma_2 closed form", points: c, dashed: true },
            Series { name: "sigma_3 closed form", points: d, dashed: true },
        ],
        false,
    );
    write_file(&out_path(dir, "ex1.svg"), &svg)
}

fn ex2_report(system: &JordanSystem, base: &ManifoldResult, dir: &Path, r: &mut Report) -> Result<(), CliError> {
    let decay = verify_unstable_decay(system, base);
    r.check(Check::at_most("trailing_to_peak_ratio", decay.ratio, DECAY_RATIO));
    r.note(format!("log-log trend of |pi_u x| over the second half: {:.4}", decay.trend));
    let norms = unstable_norms(system, &base.trajectory);
    let rows: Vec<Vec<f64>> = (0..base.trajectory.len())
        .map(|k| {
            let mut row = vec![base.trajectory.time(k)];
            row.extend(base.trajectory.value(k));
            row.push(norms[k]);
            row
        })
        .collect();
    let mut header = vec!["time".to_string()];
    header.extend((1..=system.dim()).map(|i| format!("x_{i}")));
    header.push("pi_u_norm".into());
    write_csv(&out_path(dir, "ex2_trajectory.csv"), &header, &rows)
}

fn liu_report(
    s: &SolverSettings,
    grid: &GridSpec,
    samples: &[Vec<f64>],
    mapped: &[Option<ManifoldResult>],
    dir: &Path,
    r: &mut Report,
) -> Result<(), CliError> {
    let l = liu_constant(s.p);
    r.note(format!("quadrature constant: l = {l:.15e}"));
    let (mut num, mut den) = (0.0, 0.0);
    let mut rows = Vec::with_capacity(samples.len());
    for (i, (x, res)) in samples.iter().zip(mapped).enumerate() {
        let s2 = res.as_ref().map(|m| m.sigma_u[1]).unwrap_or(f64::NAN);
        rows.push(vec![i as f64, x[0], x[2], s2]);
        if res.is_some() {
            let b = x[0] * x[2];
            num += s2 * b;
            den += b * b;
        }
    }
    write_csv(
        &out_path(dir, "liu_surface.csv"),
        &["index".into(), "sigma1".into(), "sigma3".into(), "sigma2".into()],
        &rows,
    )?;
    r.check(Check::relative("fitted_l", num / den, l, CLOSED_FORM_TOL));
    let values = grid.values()?;
    let k = values.len();
    let z: Vec<Vec<f64>> = (0..k).map(|i| (0..k).map(|j| rows[i * k + j][3]).collect()).collect();
    let svg = surface_svg(
        "Liu system: local stable manifold sigma_2 = h(sigma_1, sigma_3)",
        ["sigma_1", "sigma_3", "sigma_2"],
        &values,
        &values,
        &z,
    );
    write_file(&out_path(dir, "liu.svg"), &svg)
}

fn manifold_cmd(cli: &Cli, a: &ManifoldArgs, cfg: &RunConfig) -> Result<(), CliError> {
    let s = SolverSettings::resolve(cli, cfg, a.p, a.step, a.horizon, (0.01, 1.0))?;
    let spec = cfg
        .system
        .as_ref()
        .ok_or_else(|| CliError::Invalid("config must define 'system'".into()))?;
    let (system, _) = config::build_system(spec, s.p)?;
    let field = config::build_field(
        cfg.field.as_ref().unwrap_or(&FieldSpec::Builtin("zero".into())),
        system.dim(),
        cfg.radius.unwrap_or_else(config::default_radius),
        s.p,
    )?;
    let dir = out_dir(cli)?;
    let pool = thread_pool(cli, cfg)?;
    let mut r = Report::new("manifold");
    s.record(&mut r);
    r.note(format!(
        "split: {} stable and {} unstable dimensions",
        system.stable_dim(),
        system.unstable_dim()
    ));
    let op = s.operator(&system, &field, &mut r)?;
    let samples = match &cfg.samples {
        Some(list) if a.grid.grid_count.is_none() && a.grid.grid_min.is_none() && a.grid.grid_max.is_none() => list.clone(),
        _ => {
            let grid = grid_of(&a.grid, cfg);
            r.input("grid", format!("[{}, {}] x {}", grid.min, grid.max, grid.count));
            config::grid_samples(&config::stable_basis(&system), &grid)?
        }
    };
    map_samples(&op, &samples, s.opts, &pool, &out_path(&dir, "manifold_samples.csv"), &mut r)?;
    r.write(&out_path(&dir, "manifold_report.json"))?;
    r.outcome()
}

fn simulate_cmd(cli: &Cli, a: &SimulateArgs, cfg: &RunConfig) -> Result<(), CliError> {
    let p = config::frac_order(a.p.or(cfg.p).unwrap_or(DEFAULT_P))?;
    let spec = cfg
        .system
        .as_ref()
        .ok_or_else(|| CliError::Invalid("config must define 'system'".into()))?;
    let (system, matrix) = config::build_system(spec, p)?;
    let n = system.dim();
    let field_spec = cfg.field.clone().unwrap_or(FieldSpec::Builtin("zero".into()));
    let field = config::build_field(&field_spec, n, cfg.radius.unwrap_or_else(config::default_radius), p)?;
    let step = a.step.or(cfg.sim_step).unwrap_or(1e-3);
    let horizon = a.horizon.or(cfg.sim_horizon).unwrap_or(5.0);
    let initial = a
        .initial
        .clone()
        .or_else(|| cfg.initial.clone())
        .ok_or_else(|| CliError::Invalid("an initial state is required (--initial or 'initial')".into()))?;
    if initial.len() != n {
        return Err(CliError::Invalid(format!("initial state has length {}, system has dimension {n}", initial.len())));
    }
    let sim = SimConfig::new(p, step, horizon, initial.clone())?;
    let dir = out_dir(cli)?;
    let mut r = Report::new("simulate");
    r.input("p", p.value());
    r.input("step", step);
    r.input("horizon", horizon);
    r.input("initial", format!("{initial:?}"));

    if let Some(delta) = a.perturbation.or(cfg.perturbation) {
        r.input("perturbation", delta);
        let att = attraction_experiment(&system, &field, &initial, delta, step, horizon, DECAY_RATIO)?;
        println!(
            "growth ratio of the perturbed run: {}{}",
            att.growth,
            if att.off_escaped { " (escaped)" } else { "" }
        );
        attraction_checks(&att, step, &mut r);
        write_attraction(&dir, "simulate", &att)?;
        let svg = line_svg(
            "Unstable projection |pi_u x(t)|",
            "t",
            "|pi_u x(t)|",
            &[
                Series { name: "from initial state", points: att.times.iter().copied().zip(att.on_manifold.iter().copied()).collect(), dashed: false },
                Series { name: "perturbed", points: att.times.iter().copied().zip(att.off_manifold.iter().copied()).collect(), dashed: true },
            ],
            true,
        );
        write_file(&out_path(&dir, "simulate.svg"), &svg)?;
    } else {
        let traj = pece_integrate(&sim, &matrix, &field)?;
        let linear = matches!(field_spec, FieldSpec::Builtin(ref s) if s == "zero");
        let mut header = vec!["time".to_string()];
        header.extend((1..=n).map(|i| format!("x_{i}")));
        if linear {
            header.extend((1..=n).map(|i| format!("exact_{i}")));
        }
        let mut rows = Vec::with_capacity(traj.len());
        let mut max_err = 0.0f64;
        let mut comps: Vec<Vec<(f64, f64)>> = vec![Vec::new(); n];
        for k in 0..traj.len() {
            let t = traj.time(k);
            let mut row = vec![t];
            row.extend(traj.value(k));
            for (i, c) in comps.iter_mut().enumerate() {
                c.push((t, traj.value(k)[i]));
            }
            if linear {
                let exact = linear_solution(&system, t, &initial)?;
                for (x, e) in traj.value(k).iter().zip(&exact) {
                    max_err = max_err.max((x - e).abs());
                }
                row.extend(exact);
            }
            rows.push(row);
        }
        write_csv(&out_path(&dir, "simulate_trajectory.csv"), &header, &rows)?;
        if linear {
            println!("max error against the exact linear solution: {max_err:.6e}");
            r.check(Check::at_most("max_abs_error", max_err, cli.tol.or(cfg.tol).unwrap_or(1e-3)));
        }
        let names: Vec<String> = (1..=n).map(|i| format!("x_{i}")).collect();
        let series: Vec<Series> = comps
            .into_iter()
            .zip(&names)
            .map(|(points, name)| Series { name, points, dashed: false })
            .collect();
        write_file(&out_path(&dir, "simulate.svg"), &line_svg("Trajectory", "t", "x", &series, false))?;
    }
    r.write(&out_path(&dir, "simulate_report.json"))?;
    r.outcome()
}

/// `E_p(t^p A) x_0`.
fn linear_solution(system: &JordanSystem, t: f64, x0: &[f64]) -> Result<Vec<f64>, CliError> {
    let e = matrix_ml_eval(system, 1.0, t)?;
    let n = x0.len();
    let x = DMatrix::from_fn(n, 1, |i, _| Complex64::new(x0[i], 0.0));
    Ok((e * x).iter().map(|c| c.re).collect())
}

/// Names of the files each example writes, for documentation and tests.
pub fn example_outputs(name: &str) -> Vec<String> {
    let mut v = vec![
        format!("{name}_samples.csv"),
        format!("{name}_report.json"),
        format!("{name}_on_manifold.csv"),
        format!("{name}_off_manifold.csv"),
        format!("{name}.svg"),
    ];
    match name {
        "ex2" => v.push("ex2_trajectory.csv".into()),
        "liu" => v.push("liu_surface.csv".into()),
        _ => {}
    }
    v
}
