//! Dense linear-algebra kernels.
//!
//! Decompositions are delegated to `nalgebra`; this module pins down the
//! contracts the rest of the crate relies on (ordering, symmetrization,
//! clamping of round-off negative eigenvalues).

use nalgebra::{DMatrix, DVector, SymmetricEigen, SVD};
use num_complex::Complex64;

use crate::{Error, Result};

pub type ComplexMatrix = DMatrix<Complex64>;
pub type ComplexVector = DVector<Complex64>;

/// Relative tolerance below zero that a Gram eigenvalue may reach before the
/// matrix is rejected as not positive semidefinite.
pub const PSD_TOLERANCE: f64 = 1e-8;

const MAX_SWEEPS: usize = 10_000;

/// A real symmetric matrix. Symmetry is enforced on construction by averaging
/// the input with its transpose.
#[derive(Debug, Clone, PartialEq)]
pub struct RealSymmetricMatrix(DMatrix<f64>);

impl RealSymmetricMatrix {
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        if !m.is_square() || m.nrows() == 0 {
            return Err(Error::invalid(format!(
                "symmetric matrix must be square and non-empty, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        let sym = (&m + m.transpose()) * 0.5;
        Ok(RealSymmetricMatrix(sym))
    }

    pub fn zeros(dim: usize) -> Self {
        RealSymmetricMatrix(DMatrix::zeros(dim, dim))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_inner(self) -> DMatrix<f64> {
        self.0
    }

    /// Value of the quadratic form `xᵀ B x`.
    pub fn quadratic_value(&self, x: &DVector<f64>) -> f64 {
        x.dot(&(&self.0 * x))
    }

    /// Adds `c·(u uᵀ)` in place. Rank-one updates keep the matrix exactly
    /// symmetric, so no re-symmetrization is needed.
    pub(crate) fn add_outer(&mut self, c: f64, u: &DVector<f64>) {
        self.0.ger(c, u, u, 1.0);
    }
}

/// Eigenvalues in ascending order with orthonormal eigenvectors stored
/// column-wise in the matching order.
#[derive(Debug, Clone)]
pub struct EigenPair {
    pub values: DVector<f64>,
    pub vectors: DMatrix<f64>,
}

/// Symmetric eigendecomposition with ascending eigenvalues.
///
/// Within a degenerate eigenspace the returned basis is whatever the backing
/// solver produces; callers must not rely on a particular basis there.
pub fn eig_sym(b: &RealSymmetricMatrix) -> Result<EigenPair> {
    let m = b.as_matrix();
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("eig_sym: non-finite matrix entry"));
    }
    let eig = SymmetricEigen::try_new(m.clone(), f64::EPSILON, MAX_SWEEPS)
        .ok_or(Error::NumericalFailure { norm: m.norm() })?;

    let n = m.nrows();
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));

    let values = DVector::from_iterator(n, idx.iter().map(|&i| eig.eigenvalues[i]));
    let mut vectors = DMatrix::zeros(n, n);
    for (dst, &src) in idx.iter().enumerate() {
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    Ok(EigenPair { values, vectors })
}

/// Singular values of a complex matrix, in descending order.
pub fn singular_values(a: &ComplexMatrix) -> Result<Vec<f64>> {
    if a.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::invalid("singular_values: non-finite matrix entry"));
    }
    if a.is_empty() {
        return Ok(Vec::new());
    }
    let svd = SVD::try_new(a.clone(), false, false, f64::EPSILON, MAX_SWEEPS)
        .ok_or(Error::NumericalFailure { norm: a.norm() })?;
    let mut values: Vec<f64> = svd.singular_values.iter().map(|s| s.max(0.0)).collect();
    values.sort_by(|x, y| y.total_cmp(x));
    Ok(values)
}

/// Eigenvalues of a Hermitian matrix (lower triangle is read), ascending.
pub fn hermitian_eigenvalues(g: &ComplexMatrix) -> Result<Vec<f64>> {
    if !g.is_square() {
        return Err(Error::invalid(format!(
            "Hermitian matrix must be square, got {}x{}",
            g.nrows(),
            g.ncols()
        )));
    }
    if g.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::invalid("non-finite Hermitian matrix entry"));
    }
    let eig = SymmetricEigen::try_new(g.clone(), f64::EPSILON, MAX_SWEEPS)
        .ok_or(Error::NumericalFailure { norm: g.norm() })?;
    let mut values: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    values.sort_by(|x, y| x.total_cmp(y));
    Ok(values)
}

/// `log₂ det(I + γ G)` for a Hermitian positive semidefinite `G`, evaluated
/// through the eigenvalues of `G`.
///
/// Eigenvalues in `[-1e-8·‖G‖_F, 0)` are treated as round-off and clamped to
/// zero; anything more negative is rejected.
pub fn logdet_capacity_kernel(g: &ComplexMatrix, gamma: f64) -> Result<f64> {
    if !(gamma > 0.0) || !gamma.is_finite() {
        return Err(Error::invalid(format!(
            "capacity kernel needs a positive finite SNR factor, got {gamma}"
        )));
    }
    let eigenvalues = hermitian_eigenvalues(g)?;
    let floor = -PSD_TOLERANCE * g.norm();
    let mut total = 0.0;
    for lambda in eigenvalues {
        if lambda < floor {
            return Err(Error::invalid(format!(
                "Gram matrix is not positive semidefinite (eigenvalue {lambda:e})"
            )));
        }
        total += (gamma * lambda.max(0.0)).ln_1p();
    }
    Ok(total / std::f64::consts::LN_2)
}
