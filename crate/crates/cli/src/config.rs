//! JSON run configuration. Every field is optional; command-line flags take
//! precedence over file values, which take precedence over defaults.

use std::path::Path;

use fracmanifold::manifold::VectorField;
use fracmanifold::spectral::{build_split, CMatrix, JordanBlock, JordanSystem};
use fracmanifold::systems::{Example, EXAMPLE_RADIUS};
use fracmanifold::{Complex64, FracOrder};
use nalgebra::DMatrix;
use serde::Deserialize;

use crate::CliError;

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub p: Option<f64>,
    pub q: Option<usize>,
    pub system: Option<SystemSpec>,
    pub field: Option<FieldSpec>,
    /// Ball radius on which the Lipschitz constant of `f` is sampled.
    pub radius: Option<f64>,
    pub step: Option<f64>,
    pub horizon: Option<f64>,
    pub tail_tol: Option<f64>,
    pub tol: Option<f64>,
    pub max_iter: Option<usize>,
    pub jobs: Option<usize>,
    /// Explicit stable-subspace points in state coordinates.
    pub samples: Option<Vec<Vec<f64>>>,
    pub grid: Option<GridSpec>,
    pub sigma1: Option<f64>,
    pub sigma3: Option<f64>,
    pub initial: Option<Vec<f64>>,
    pub perturbation: Option<f64>,
    pub sim_step: Option<f64>,
    pub sim_horizon: Option<f64>,
    pub beta: Option<f64>,
    pub z_re: Option<f64>,
    pub z_im: Option<f64>,
    pub deriv: Option<usize>,
}

impl RunConfig {
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let Some(path) = path else {
            return Ok(RunConfig::default());
        };
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Invalid(format!("cannot read config {}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::Invalid(format!("malformed config {}: {e}", path.display())))
    }
}

/// Uniform grid over each coordinate of the stable subspace.
#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub min: f64,
    pub max: f64,
    pub count: usize,
}

impl GridSpec {
    pub fn values(&self) -> Result<Vec<f64>, CliError> {
        if !(self.min.is_finite() && self.max.is_finite()) || self.count < 2 || self.min >= self.max {
            return Err(CliError::Invalid(format!(
                "grid needs finite min < max and count >= 2, got {self:?}"
            )));
        }
        let n = self.count - 1;
        Ok((0..=n)
            .map(|i| self.min + (self.max - self.min) * i as f64 / n as f64)
            .collect())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BlockSpec {
    pub re: f64,
    #[serde(default)]
    pub im: f64,
    #[serde(default = "one")]
    pub size: usize,
}

fn one() -> usize {
    1
}

/// The linear part: a named example, a diagonal spectrum, explicit Jordan
/// blocks with an optional transform, or a real diagonalizable matrix.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum SystemSpec {
    Example { example: String },
    Eigenvalues { eigenvalues: Vec<[f64; 2]> },
    Blocks {
        blocks: Vec<BlockSpec>,
        /// Rows of `P`, entries as `[re, im]`.
        #[serde(default)]
        transform: Option<Vec<Vec<[f64; 2]>>>,
    },
    Matrix { matrix: Vec<Vec<f64>> },
}

/// One term `coeff · Π x_i^{powers[i]}` of component `component`.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Term {
    pub component: usize,
    pub coeff: f64,
    pub powers: Vec<u32>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum FieldSpec {
    Builtin(String),
    Polynomial { polynomial: Vec<Term> },
}

pub fn frac_order(p: f64) -> Result<FracOrder, CliError> {
    Ok(FracOrder::new(p)?)
}

pub fn parse_example(name: &str) -> Result<Example, CliError> {
    Example::parse(name).ok_or_else(|| CliError::Invalid(format!("unknown example '{name}' (expected ex1, ex2 or liu)")))
}

fn c(v: [f64; 2]) -> Complex64 {
    Complex64::new(v[0], v[1])
}

/// Builds the Jordan system and the real matrix `A` it represents.
pub fn build_system(spec: &SystemSpec, p: FracOrder) -> Result<(JordanSystem, DMatrix<f64>), CliError> {
    let system = match spec {
        SystemSpec::Example { example } => parse_example(example)?.build(p)?.system,
        SystemSpec::Eigenvalues { eigenvalues } => {
            let l: Vec<Complex64> = eigenvalues.iter().copied().map(c).collect();
            JordanSystem::from_diagonal(p, &l)?
        }
        SystemSpec::Blocks { blocks, transform } => {
            let blocks = blocks
                .iter()
                .map(|b| JordanBlock::classified(Complex64::new(b.re, b.im), b.size, p))
                .collect::<fracmanifold::Result<Vec<_>>>()?;
            let transform = match transform {
                None => None,
                Some(rows) => {
                    let n = rows.len();
                    if rows.iter().any(|r| r.len() != n) {
                        return Err(CliError::Invalid("transform must be square".into()));
                    }
                    Some(CMatrix::from_fn(n, n, |i, j| c(rows[i][j])))
                }
            };
            JordanSystem::new(p, blocks, transform)?
        }
        SystemSpec::Matrix { matrix } => JordanSystem::from_diagonalizable(p, &real_matrix(matrix)?)?,
    };
    let a = system.matrix();
    let n = system.dim();
    let imag = a.iter().fold(0.0f64, |m, z| m.max(z.im.abs()));
    let scale = a.iter().fold(1.0f64, |m, z| m.max(z.norm()));
    if imag > 1e-10 * scale {
        return Err(CliError::Invalid(format!(
            "system matrix is not real (imaginary part {imag:e}); pair complex blocks with their conjugates"
        )));
    }
    let real = DMatrix::from_fn(n, n, |i, j| a[(i, j)].re);
    Ok((system, real))
}

fn real_matrix(rows: &[Vec<f64>]) -> Result<DMatrix<f64>, CliError> {
    let n = rows.len();
    if n == 0 || rows.iter().any(|r| r.len() != n) {
        return Err(CliError::Invalid("matrix must be square and non-empty".into()));
    }
    Ok(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
}

/// Evaluates a polynomial term table.
fn polynomial_field(dim: usize, radius: f64, terms: &[Term]) -> Result<VectorField, CliError> {
    for t in terms {
        if t.component >= dim || t.powers.len() != dim || !t.coeff.is_finite() {
            return Err(CliError::Invalid(format!(
                "polynomial term {t:?} does not fit a {dim}-dimensional system"
            )));
        }
        if t.powers.iter().sum::<u32>() < 2 {
            return Err(CliError::Invalid(format!(
                "polynomial term {t:?} has degree < 2; linear terms belong in the system matrix"
            )));
        }
    }
    let terms = terms.to_vec();
    Ok(VectorField::new(dim, radius, move |x, o| {
        o.iter_mut().for_each(|v| *v = 0.0);
        for t in &terms {
            let mut mono = 1.0;
            for (xi, &k) in x.iter().zip(&t.powers) {
                if k > 0 {
                    mono *= xi.powi(k as i32);
                }
            }
            o[t.component] += t.coeff * mono;
        }
    })?)
}

pub fn build_field(spec: &FieldSpec, dim: usize, radius: f64, p: FracOrder) -> Result<VectorField, CliError> {
    match spec {
        FieldSpec::Builtin(name) if name == "zero" => {
            Ok(VectorField::new(dim, radius, |_, o| o.iter_mut().for_each(|v| *v = 0.0))?)
        }
        FieldSpec::Builtin(name) => {
            let ex = parse_example(name)?;
            let field = ex.build(p)?.field;
            if field.dim() != dim {
                return Err(CliError::Invalid(format!(
                    "builtin field '{name}' has dimension {}, system has {dim}",
                    field.dim()
                )));
            }
            Ok(field)
        }
        FieldSpec::Polynomial { polynomial } => polynomial_field(dim, radius, polynomial),
    }
}

pub fn default_radius() -> f64 {
    EXAMPLE_RADIUS
}

/// Orthonormal real basis of the stable subspace, taken from the columns of
/// `π_s` in order. For coordinate-aligned splits these are unit vectors.
pub fn stable_basis(system: &JordanSystem) -> Vec<Vec<f64>> {
    let split = build_split(system);
    let n = system.dim();
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(split.stable_dim);
    for j in 0..n {
        if basis.len() == split.stable_dim {
            break;
        }
        let mut v: Vec<f64> = (0..n).map(|i| split.pi_s[(i, j)].re).collect();
        for b in &basis {
            let d: f64 = v.iter().zip(b).map(|(x, y)| x * y).sum();
            v.iter_mut().zip(b).for_each(|(x, y)| *x -= d * y);
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-10 {
            basis.push(v.into_iter().map(|x| x / norm).collect());
        }
    }
    basis
}

/// Cartesian grid over the stable-basis coefficients, first coordinate
/// varying slowest, mapped to state coordinates.
pub fn grid_samples(basis: &[Vec<f64>], grid: &GridSpec) -> Result<Vec<Vec<f64>>, CliError> {
    let values = grid.values()?;
    let k = basis.len();
    if k == 0 {
        return Err(CliError::Invalid("system has no stable directions to sample".into()));
    }
    let n = basis[0].len();
    let total = values.len().pow(k as u32);
    let mut out = Vec::with_capacity(total);
    for mut idx in 0..total {
        let mut coeffs = vec![0.0; k];
        for c in coeffs.iter_mut().rev() {
            *c = values[idx % values.len()];
            idx /= values.len();
        }
        let mut x = vec![0.0; n];
        for (c, b) in coeffs.iter().zip(basis) {
            x.iter_mut().zip(b).for_each(|(xi, bi)| *xi += c * bi);
        }
        out.push(x);
    }
    Ok(out)
}
