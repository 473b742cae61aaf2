//! Jordan-form systems, the fractional stability sector, and the
//! stable/unstable projections.

use crate::error::{Error, Result};
use crate::mittag_leffler::FracOrder;
use nalgebra::DMatrix;
use num_complex::Complex64;

pub type CMatrix = DMatrix<Complex64>;

const SECTOR_EPS: f64 = 1e-12;
const TRANSFORM_RCOND: f64 = 1e-10;
const EIGEN_GAP: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Stability {
    Stable,
    Unstable,
}

/// Matignon sector test: stable iff `|arg λ| > pπ/2`.
pub fn classify(lambda: Complex64, p: FracOrder) -> Result<Stability> {
    if !(lambda.re.is_finite() && lambda.im.is_finite()) {
        return Err(Error::DomainError(format!("eigenvalue must be finite, got {lambda}")));
    }
    let gap = lambda.arg().abs() - p.half_sector();
    if lambda == Complex64::new(0.0, 0.0) || gap.abs() <= SECTOR_EPS {
        return Err(Error::NonHyperbolic {
            lambda: lambda.to_string(),
            p: p.value(),
        });
    }
    Ok(if gap > 0.0 {
        Stability::Stable
    } else {
        Stability::Unstable
    })
}

/// Jordan block `J = λ I + N` of the given size.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JordanBlock {
    pub lambda: Complex64,
    pub size: usize,
    pub klass: Stability,
}

impl JordanBlock {
    pub fn new(lambda: Complex64, size: usize, klass: Stability) -> Result<Self> {
        if size == 0 {
            return Err(Error::InvalidInput("Jordan block size must be >= 1".into()));
        }
        if lambda == Complex64::new(0.0, 0.0) {
            return Err(Error::InvalidInput("Jordan block eigenvalue must be nonzero".into()));
        }
        Ok(JordanBlock { lambda, size, klass })
    }

    /// Block whose class is computed from the sector test.
    pub fn classified(lambda: Complex64, size: usize, p: FracOrder) -> Result<Self> {
        let klass = classify(lambda, p)?;
        JordanBlock::new(lambda, size, klass)
    }

    pub fn is_stable(&self) -> bool {
        self.klass == Stability::Stable
    }

    pub fn matrix(&self) -> CMatrix {
        let n = self.size;
        CMatrix::from_fn(n, n, |i, j| {
            if i == j {
                self.lambda
            } else if j == i + 1 {
                Complex64::new(1.0, 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
    }
}

/// `A = P · blockdiag(J_1, …, J_l) · P^{-1}` with stable blocks first.
#[derive(Debug, Clone, PartialEq)]
pub struct JordanSystem {
    p: FracOrder,
    blocks: Vec<JordanBlock>,
    stable_count: usize,
    transform: CMatrix,
    transform_inv: CMatrix,
    identity_transform: bool,
}

impl JordanSystem {
    /// Validates ordering, classes, conjugate pairing and the transform.
    /// `transform = None` means `P = I`.
    pub fn new(p: FracOrder, blocks: Vec<JordanBlock>, transform: Option<CMatrix>) -> Result<Self> {
        if blocks.is_empty() {
            return Err(Error::InvalidInput("system needs at least one Jordan block".into()));
        }
        for b in &blocks {
            let k = classify(b.lambda, p)?;
            if k != b.klass {
                return Err(Error::InvalidInput(format!(
                    "block with eigenvalue {} is labelled {:?} but the sector test at p = {} gives {:?}",
                    b.lambda,
                    b.klass,
                    p.value(),
                    k
                )));
            }
        }
        let stable_count = blocks.iter().take_while(|b| b.is_stable()).count();
        if blocks[stable_count..].iter().any(|b| b.is_stable()) {
            return Err(Error::InvalidInput("stable blocks must precede unstable blocks".into()));
        }
        check_conjugate_pairs(&blocks)?;
        let n: usize = blocks.iter().map(|b| b.size).sum();
        let (transform, identity_transform) = match transform {
            None => (CMatrix::identity(n, n), true),
            Some(t) => {
                if t.nrows() != n || t.ncols() != n {
                    return Err(Error::InvalidInput(format!(
                        "transform is {}x{}, expected {n}x{n}",
                        t.nrows(),
                        t.ncols()
                    )));
                }
                let ident = t == CMatrix::identity(n, n);
                (t, ident)
            }
        };
        let transform_inv = if identity_transform {
            transform.clone()
        } else {
            let sv = transform.clone().singular_values();
            let (smax, smin) = (sv.max(), sv.min());
            let ratio = if smax > 0.0 { smin / smax } else { 0.0 };
            if !(ratio > TRANSFORM_RCOND) {
                return Err(Error::SingularTransform { ratio });
            }
            transform
                .clone()
                .try_inverse()
                .ok_or(Error::SingularTransform { ratio })?
        };
        Ok(JordanSystem {
            p,
            blocks,
            stable_count,
            transform,
            transform_inv,
            identity_transform,
        })
    }

    /// System for `A = diag(λ_1, …, λ_n)`. Blocks are reordered stable-first
    /// and `P` is the corresponding (exact) permutation matrix.
    pub fn from_diagonal(p: FracOrder, eigenvalues: &[Complex64]) -> Result<Self> {
        let mut order: Vec<(usize, Stability)> = eigenvalues
            .iter()
            .enumerate()
            .map(|(i, &l)| classify(l, p).map(|k| (i, k)))
            .collect::<Result<_>>()?;
        order.sort_by_key(|&(i, k)| (k == Stability::Unstable, i));
        let n = eigenvalues.len();
        let mut perm = CMatrix::zeros(n, n);
        let mut blocks = Vec::with_capacity(n);
        for (col, &(i, k)) in order.iter().enumerate() {
            perm[(i, col)] = Complex64::new(1.0, 0.0);
            blocks.push(JordanBlock::new(eigenvalues[i], 1, k)?);
        }
        JordanSystem::new(p, blocks, Some(perm))
    }

    /// System for a real diagonalizable matrix with pairwise eigenvalue gaps
    /// above `1e-6`; defective or nearly defective input is rejected.
    pub fn from_diagonalizable(p: FracOrder, a: &DMatrix<f64>) -> Result<Self> {
        let n = a.nrows();
        if n == 0 || a.ncols() != n {
            return Err(Error::InvalidInput("matrix must be square and non-empty".into()));
        }
        if a.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidInput("matrix entries must be finite".into()));
        }
        let eig = a.complex_eigenvalues();
        let lambdas: Vec<Complex64> = eig.iter().copied().collect();
        for i in 0..n {
            for j in i + 1..n {
                if (lambdas[i] - lambdas[j]).norm() <= EIGEN_GAP {
                    return Err(Error::InvalidInput(format!(
                        "eigenvalues {} and {} are not separated by more than {EIGEN_GAP:e}; \
                         supply the Jordan form explicitly",
                        lambdas[i], lambdas[j]
                    )));
                }
            }
        }
        let ac = a.map(|x| Complex64::new(x, 0.0));
        let mut order: Vec<(usize, Stability)> = lambdas
            .iter()
            .enumerate()
            .map(|(i, &l)| classify(l, p).map(|k| (i, k)))
            .collect::<Result<_>>()?;
        order.sort_by_key(|&(i, k)| (k == Stability::Unstable, i));
        let mut transform = CMatrix::zeros(n, n);
        let mut blocks = Vec::with_capacity(n);
        for (col, &(i, k)) in order.iter().enumerate() {
            let shifted = &ac - CMatrix::identity(n, n) * lambdas[i];
            let svd = shifted.svd(false, true);
            let v_t = svd.v_t.expect("requested right singular vectors");
            let (idx, _) = svd
                .singular_values
                .iter()
                .enumerate()
                .min_by(|x, y| x.1.total_cmp(y.1))
                .expect("non-empty spectrum");
            let v = v_t.row(idx).map(|c| c.conj()).transpose();
            // real eigenvalues get real eigenvectors
            let v = if lambdas[i].im == 0.0 {
                let pivot = v.iter().copied().max_by(|x, y| x.norm().total_cmp(&y.norm())).unwrap();
                let phase = pivot / pivot.norm();
                v.map(|c| c / phase)
            } else {
                v
            };
            transform.set_column(col, &v);
            blocks.push(JordanBlock::new(lambdas[i], 1, k)?);
        }
        JordanSystem::new(p, blocks, Some(transform))
    }

    pub fn p(&self) -> FracOrder {
        self.p
    }

    pub fn blocks(&self) -> &[JordanBlock] {
        &self.blocks
    }

    pub fn stable_count(&self) -> usize {
        self.stable_count
    }

    pub fn dim(&self) -> usize {
        self.blocks.iter().map(|b| b.size).sum()
    }

    pub fn stable_dim(&self) -> usize {
        self.blocks[..self.stable_count].iter().map(|b| b.size).sum()
    }

    pub fn unstable_dim(&self) -> usize {
        self.dim() - self.stable_dim()
    }

    pub fn transform(&self) -> &CMatrix {
        &self.transform
    }

    pub fn transform_inv(&self) -> &CMatrix {
        &self.transform_inv
    }

    pub fn has_identity_transform(&self) -> bool {
        self.identity_transform
    }

    /// Row/column offset of each block in Jordan coordinates.
    pub fn offsets(&self) -> Vec<usize> {
        let mut acc = 0;
        self.blocks
            .iter()
            .map(|b| {
                let o = acc;
                acc += b.size;
                o
            })
            .collect()
    }

    pub fn jordan_matrix(&self) -> CMatrix {
        let n = self.dim();
        let mut j = CMatrix::zeros(n, n);
        for (b, o) in self.blocks.iter().zip(self.offsets()) {
            j.view_mut((o, o), (b.size, b.size)).copy_from(&b.matrix());
        }
        j
    }

    /// `A = P J P^{-1}`.
    pub fn matrix(&self) -> CMatrix {
        self.to_original(&self.jordan_matrix())
    }

    /// `P M P^{-1}`.
    pub fn to_original(&self, m: &CMatrix) -> CMatrix {
        if self.identity_transform {
            m.clone()
        } else {
            &self.transform * m * &self.transform_inv
        }
    }
}

fn check_conjugate_pairs(blocks: &[JordanBlock]) -> Result<()> {
    for b in blocks.iter().filter(|b| b.lambda.im != 0.0) {
        let partners = |lam: Complex64| {
            blocks
                .iter()
                .filter(|c| c.size == b.size && (c.lambda - lam).norm() <= 1e-12 * lam.norm())
                .count()
        };
        if partners(b.lambda.conj()) != partners(b.lambda) {
            return Err(Error::InvalidInput(format!(
                "eigenvalue {} has no matching conjugate block of size {}",
                b.lambda, b.size
            )));
        }
    }
    Ok(())
}

/// Stable/unstable projections and the tail decay rate.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralSplit {
    pub pi_s: CMatrix,
    pub pi_u: CMatrix,
    /// `min Re(λ^{1/p})` over unstable eigenvalues; infinite if there are none.
    pub alpha: f64,
    pub stable_dim: usize,
    pub unstable_dim: usize,
}

pub fn build_split(system: &JordanSystem) -> SpectralSplit {
    let n = system.dim();
    let s = system.stable_dim();
    let diag = CMatrix::from_fn(n, n, |i, j| {
        if i == j && i < s {
            Complex64::new(1.0, 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    });
    let pi_s = system.to_original(&diag);
    let pi_u = CMatrix::identity(n, n) - &pi_s;
    let inv_p = 1.0 / system.p().value();
    let alpha = system.blocks()[system.stable_count()..]
        .iter()
        .map(|b| (b.lambda.ln() * inv_p).exp().re)
        .fold(f64::INFINITY, f64::min);
    SpectralSplit {
        pi_s,
        pi_u,
        alpha,
        stable_dim: s,
        unstable_dim: n - s,
    }
}

/// Max absolute entry.
pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().map(|c| c.norm()).fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn half() -> FracOrder {
        FracOrder::new(0.5).unwrap()
    }

    fn example1() -> JordanSystem {
        let p = half();
        JordanSystem::new(
            p,
            vec![
                JordanBlock::classified(c(-1.0, 0.0), 1, p).unwrap(),
                JordanBlock::classified(c(2.0, 0.0), 2, p).unwrap(),
            ],
            None,
        )
        .unwrap()
    }

    #[test]
    fn classify_examples() {
        let p = half();
        assert_eq!(classify(c(-1.0, 0.0), p).unwrap(), Stability::Stable);
        assert_eq!(classify(c(2.0, 0.0), FracOrder::new(0.1).unwrap()).unwrap(), Stability::Unstable);
        assert_eq!(classify(c(0.0, 1.0), p).unwrap(), Stability::Stable);
        assert!(matches!(classify(c(1.0, 1.0), p), Err(Error::NonHyperbolic { .. })));
        assert!(matches!(classify(c(0.0, 0.0), p), Err(Error::NonHyperbolic { .. })));
    }

    #[test]
    fn ordering_and_labels_are_validated() {
        let p = half();
        let s = JordanBlock::classified(c(-1.0, 0.0), 1, p).unwrap();
        let u = JordanBlock::classified(c(2.0, 0.0), 1, p).unwrap();
        assert!(JordanSystem::new(p, vec![u, s], None).is_err());
        let mislabeled = JordanBlock::new(c(2.0, 0.0), 1, Stability::Stable).unwrap();
        assert!(JordanSystem::new(p, vec![mislabeled], None).is_err());
        assert!(JordanBlock::new(c(0.0, 0.0), 1, Stability::Stable).is_err());
        assert!(JordanBlock::new(c(1.0, 0.0), 0, Stability::Unstable).is_err());
    }

    #[test]
    fn conjugate_partner_required() {
        let p = half();
        let b = JordanBlock::classified(c(-1.0, 2.0), 1, p).unwrap();
        assert!(JordanSystem::new(p, vec![b], None).is_err());
        let bc = JordanBlock::classified(c(-1.0, -2.0), 1, p).unwrap();
        assert!(JordanSystem::new(p, vec![b, bc], None).is_ok());
    }

    #[test]
    fn singular_transform_rejected() {
        let p = half();
        let blocks = vec![
            JordanBlock::classified(c(-1.0, 0.0), 1, p).unwrap(),
            JordanBlock::classified(c(2.0, 0.0), 1, p).unwrap(),
        ];
        let t = CMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(2.0, 0.0), c(1.0, 0.0), c(2.0, 0.0)]);
        assert!(matches!(
            JordanSystem::new(p, blocks, Some(t)),
            Err(Error::SingularTransform { .. })
        ));
    }

    #[test]
    fn example1_projections() {
        let split = build_split(&example1());
        let x = nalgebra::DVector::from_vec(vec![c(1.0, 0.0), c(2.0, 0.0), c(3.0, 0.0)]);
        assert_eq!(&split.pi_u * &x, nalgebra::DVector::from_vec(vec![c(0.0, 0.0), c(2.0, 0.0), c(3.0, 0.0)]));
        assert_eq!(&split.pi_s * &x, nalgebra::DVector::from_vec(vec![c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]));
        assert_eq!(split.alpha, 4.0);
        assert_eq!((split.stable_dim, split.unstable_dim), (1, 2));
    }

    #[test]
    fn liu_projection_and_rate() {
        let sys = JordanSystem::from_diagonal(half(), &[c(-1.0, 0.0), c(2.5, 0.0), c(-5.0, 0.0)]).unwrap();
        let split = build_split(&sys);
        for i in 0..3 {
            for j in 0..3 {
                let want = if i == 1 && j == 1 { 1.0 } else { 0.0 };
                assert_eq!(split.pi_u[(i, j)], c(want, 0.0));
            }
        }
        assert!((split.alpha - 6.25).abs() < 1e-14);
        let a = sys.matrix();
        assert_eq!(a[(0, 0)], c(-1.0, 0.0));
        assert_eq!(a[(1, 1)], c(2.5, 0.0));
        assert_eq!(a[(2, 2)], c(-5.0, 0.0));
    }

    #[test]
    fn all_stable_split() {
        let sys = JordanSystem::from_diagonal(half(), &[c(-1.0, 0.0), c(-3.0, 0.0)]).unwrap();
        let split = build_split(&sys);
        assert_eq!(split.pi_s, CMatrix::identity(2, 2));
        assert_eq!(max_abs(&split.pi_u), 0.0);
        assert!(split.alpha.is_infinite());
    }

    #[test]
    fn diagonalizable_constructor_reconstructs_matrix() {
        let a = DMatrix::from_row_slice(3, 3, &[1.0, 2.0, 0.0, -1.0, -3.0, 0.5, 0.0, 1.0, 2.0]);
        let sys = JordanSystem::from_diagonalizable(half(), &a).unwrap();
        let back = sys.matrix();
        for i in 0..3 {
            for j in 0..3 {
                assert!((back[(i, j)] - c(a[(i, j)], 0.0)).norm() < 1e-10);
            }
        }
        let split = build_split(&sys);
        assert!(split.pi_u.iter().all(|z| z.im.abs() < 1e-10));
    }

    #[test]
    fn defective_matrix_rejected() {
        let a = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 0.0, 2.0]);
        assert!(matches!(
            JordanSystem::from_diagonalizable(half(), &a),
            Err(Error::InvalidInput(_))
        ));
    }

    fn random_system() -> impl Strategy<Value = JordanSystem> {
        let p = prop::sample::select(vec![0.3, 0.5, 0.8]);
        let entries = prop::collection::vec(-3.0f64..3.0, 16);
        (p, entries).prop_filter_map("needs a valid diagonalizable system", |(p, e)| {
            let a = DMatrix::from_row_slice(4, 4, &e);
            JordanSystem::from_diagonalizable(FracOrder::new(p).unwrap(), &a).ok()
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn projection_algebra(sys in random_system()) {
            let split = build_split(&sys);
            let n = sys.dim();
            let id = CMatrix::identity(n, n);
            let scale = max_abs(&split.pi_s).max(1.0);
            prop_assert!(max_abs(&(&split.pi_s + &split.pi_u - &id)) < 1e-12 * scale);
            let tol = 1e-10 * scale * scale;
            prop_assert!(max_abs(&(&split.pi_s * &split.pi_s - &split.pi_s)) < tol);
            prop_assert!(max_abs(&(&split.pi_u * &split.pi_u - &split.pi_u)) < tol);
            prop_assert!(max_abs(&(&split.pi_s * &split.pi_u)) < tol);
            let rank = split.pi_s.clone().svd(false, false).singular_values.iter().filter(|s| **s > 1e-8).count();
            prop_assert_eq!(rank, split.stable_dim);
        }

        #[test]
        fn classify_is_scale_invariant(re in -5.0f64..5.0, im in -5.0f64..5.0, s in 0.01f64..100.0,
                                       p in 0.05f64..1.0) {
            let p = FracOrder::new(p).unwrap();
            let l = c(re, im);
            if let Ok(k) = classify(l, p) {
                prop_assert_eq!(classify(l * s, p).unwrap(), k);
            }
        }
    }
}
