//! Pattern channels, capacity, and the subchannel Gram matrix.
//!
//! A transmit pattern sampling matrix `M` (`N_t × L`, non-negative) scales the
//! transmit steering vector of each path element-wise:
//! `H̃ = A_R Λ (A_T ⊙ M)ᴴ`. Writing column `l` of `M` as `p_l · m̂_l` with
//! `‖m̂_l‖² = N_t` splits the design into a correlation-modification part
//! (`m̂_l`) and a power part (`p_l`).

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::channel::{steering_vector, ArrayGeometry, PathSet};
use crate::numerics::{logdet_capacity_kernel, singular_values, ComplexMatrix};
use crate::{Error, Result};

/// Absolute tolerance on `‖m̂_l‖² = N_t` and on `M = M̂ diag(p)`.
pub const NORM_TOLERANCE: f64 = 1e-10;

/// Non-negative pattern sampling matrix in both raw and factored form.
#[derive(Debug, Clone, PartialEq)]
pub struct PatternMatrix {
    m: DMatrix<f64>,
    m_hat: DMatrix<f64>,
    p: DVector<f64>,
}

impl PatternMatrix {
    /// Builds `M = M̂ diag(p)` after checking the factorization invariants.
    pub fn from_parts(m_hat: DMatrix<f64>, p: DVector<f64>) -> Result<Self> {
        check_modification_matrix(&m_hat)?;
        if p.len() != m_hat.ncols() {
            return Err(Error::invalid(format!(
                "power vector has {} entries for {} paths",
                p.len(),
                m_hat.ncols()
            )));
        }
        if let Some(v) = p.iter().find(|v| !(**v >= 0.0) || !v.is_finite()) {
            return Err(Error::invalid(format!("power factor {v} is not a finite non-negative value")));
        }
        let m = &m_hat * DMatrix::from_diagonal(&p);
        Ok(PatternMatrix { m, m_hat, p })
    }

    /// The unmodified pattern: all-ones `M̂` and unit power factors, which
    /// reproduces the physical channel.
    pub fn unmodified(n_t: usize, n_paths: usize) -> Self {
        let m_hat = DMatrix::from_element(n_t, n_paths, 1.0);
        let p = DVector::from_element(n_paths, 1.0);
        PatternMatrix { m: m_hat.clone(), m_hat, p }
    }

    pub fn m(&self) -> &DMatrix<f64> {
        &self.m
    }

    pub fn m_hat(&self) -> &DMatrix<f64> {
        &self.m_hat
    }

    pub fn p(&self) -> &DVector<f64> {
        &self.p
    }

    pub fn n_t(&self) -> usize {
        self.m.nrows()
    }

    pub fn n_paths(&self) -> usize {
        self.m.ncols()
    }

    /// Largest deviation of `‖m̂_l‖²` from `N_t` over all columns.
    pub fn max_norm_deviation(&self) -> f64 {
        column_norm_deviation(&self.m_hat)
    }

    /// Smallest entry across `M`, `M̂` and `p`.
    pub fn min_entry(&self) -> f64 {
        self.m.iter().chain(self.m_hat.iter()).chain(self.p.iter()).copied().fold(f64::INFINITY, f64::min)
    }
}

fn column_norm_deviation(m_hat: &DMatrix<f64>) -> f64 {
    let n_t = m_hat.nrows() as f64;
    m_hat.column_iter().map(|c| (c.norm_squared() - n_t).abs()).fold(0.0, f64::max)
}

/// Checks that every column of `m_hat` is non-negative with squared norm `N_t`.
pub fn check_modification_matrix(m_hat: &DMatrix<f64>) -> Result<()> {
    if m_hat.nrows() == 0 || m_hat.ncols() == 0 {
        return Err(Error::invalid("correlation-modification matrix is empty"));
    }
    if let Some(v) = m_hat.iter().find(|v| !(**v >= 0.0) || !v.is_finite()) {
        return Err(Error::invalid(format!("modification entry {v} is not finite and non-negative")));
    }
    let dev = column_norm_deviation(m_hat);
    if dev > NORM_TOLERANCE {
        return Err(Error::invalid(format!(
            "modification columns must have squared norm N_t={} (deviation {dev:e})",
            m_hat.nrows()
        )));
    }
    Ok(())
}

fn check_dimensions(geometry: &ArrayGeometry, paths: &PathSet, m: &DMatrix<f64>) -> Result<()> {
    if m.nrows() != geometry.n_t() || m.ncols() != paths.len() {
        return Err(Error::invalid(format!(
            "pattern is {}x{} but geometry/paths need {}x{}",
            m.nrows(),
            m.ncols(),
            geometry.n_t(),
            paths.len()
        )));
    }
    Ok(())
}

/// `H̃ = A_R Λ (A_T ⊙ M)ᴴ`.
pub fn assemble_pattern_channel(
    geometry: &ArrayGeometry,
    paths: &PathSet,
    pattern: &PatternMatrix,
) -> Result<ComplexMatrix> {
    assemble_with_pattern(geometry, paths, pattern.m())
}

/// Same as [`assemble_pattern_channel`] for a raw, unvalidated `M`.
pub fn assemble_with_pattern(
    geometry: &ArrayGeometry,
    paths: &PathSet,
    m: &DMatrix<f64>,
) -> Result<ComplexMatrix> {
    check_dimensions(geometry, paths, m)?;
    let mut h = ComplexMatrix::zeros(geometry.n_r(), geometry.n_t());
    for l in 0..paths.len() {
        let a_r = steering_vector(geometry.n_r(), geometry.spacing_r(), paths.aoa()[l])?;
        let mut t = steering_vector(geometry.n_t(), geometry.spacing_t(), paths.aod()[l])?;
        for (z, &w) in t.iter_mut().zip(m.column(l).iter()) {
            *z *= w;
        }
        h.gerc(paths.gains()[l], &a_r, &t, Complex64::new(1.0, 0.0));
    }
    Ok(h)
}

/// Normalized modified subchannel `Ĥ_l = a_R,l (a_T,l ⊙ m̂_l)ᴴ`, unit
/// Frobenius norm when `‖m̂_l‖² = N_t`.
pub fn normalized_subchannel(
    geometry: &ArrayGeometry,
    paths: &PathSet,
    m_hat: &DMatrix<f64>,
    l: usize,
) -> Result<ComplexMatrix> {
    check_dimensions(geometry, paths, m_hat)?;
    let a_r = steering_vector(geometry.n_r(), geometry.spacing_r(), paths.aoa()[l])?;
    let mut t = steering_vector(geometry.n_t(), geometry.spacing_t(), paths.aod()[l])?;
    for (z, &w) in t.iter_mut().zip(m_hat.column(l).iter()) {
        *z *= w;
    }
    Ok(a_r * t.adjoint())
}

/// Channel capacity `log₂ det(I + ρ/N_r · H Hᴴ)` in bits/s/Hz.
pub fn capacity(h: &ComplexMatrix, snr: f64) -> Result<f64> {
    if !(snr > 0.0) || !snr.is_finite() {
        return Err(Error::invalid(format!("SNR must be positive, got {snr}")));
    }
    let gram = h * h.adjoint();
    logdet_capacity_kernel(&gram, snr / h.nrows() as f64)
}

/// Capacity through the singular values of `H`: `Σ log₂(1 + ρ/N_r · σ_i²)`.
pub fn capacity_from_singular_values(h: &ComplexMatrix, snr: f64) -> Result<f64> {
    if !(snr > 0.0) || !snr.is_finite() {
        return Err(Error::invalid(format!("SNR must be positive, got {snr}")));
    }
    let gamma = snr / h.nrows() as f64;
    let total: f64 = singular_values(h)?.iter().map(|s| (gamma * s * s).ln_1p()).sum();
    Ok(total / std::f64::consts::LN_2)
}

/// Receiver-side factor of the Gram entry `(i, j)`:
/// `(1/N_r) Σ_n exp(j2π d_R n (sin θ_i − sin θ_j))`, i.e. `a_R,iᴴ a_R,j`.
pub fn receiver_factor(geometry: &ArrayGeometry, theta_i: f64, theta_j: f64) -> Complex64 {
    let step = 2.0 * PI * geometry.spacing_r() * (theta_i.sin() - theta_j.sin());
    phase_sum(geometry.n_r(), step, |_| 1.0) / geometry.n_r() as f64
}

/// Transmit-side factor of the Gram entry `(i, j)`:
/// `(1/N_t) Σ_k m̂_i(k) m̂_j(k) exp(j2π d_T k (sin φ_j − sin φ_i))`.
pub fn transmit_factor(
    geometry: &ArrayGeometry,
    m_i: &[f64],
    m_j: &[f64],
    phi_i: f64,
    phi_j: f64,
) -> Complex64 {
    let step = 2.0 * PI * geometry.spacing_t() * (phi_j.sin() - phi_i.sin());
    phase_sum(geometry.n_t(), step, |k| m_i[k] * m_j[k]) / geometry.n_t() as f64
}

fn phase_sum(n: usize, step: f64, weight: impl Fn(usize) -> f64) -> Complex64 {
    (0..n).map(|k| Complex64::from_polar(weight(k), step * k as f64)).sum()
}

/// Closed-form Gram entry `Ĝ_{i,j} = Tr(Ĥ_iᴴ Ĥ_j)`.
pub fn gram_entry(
    geometry: &ArrayGeometry,
    paths: &PathSet,
    m_hat: &DMatrix<f64>,
    i: usize,
    j: usize,
) -> Complex64 {
    let rx = receiver_factor(geometry, paths.aoa()[i], paths.aoa()[j]);
    let tx = transmit_factor(
        geometry,
        m_hat.column(i).as_slice(),
        m_hat.column(j).as_slice(),
        paths.aod()[i],
        paths.aod()[j],
    );
    rx * tx
}

/// Gram matrix of the normalized modified subchannels and its
/// correlation-level indicator.
#[derive(Debug, Clone, PartialEq)]
pub struct SubchannelGram {
    g: ComplexMatrix,
    indicator: DVector<f64>,
}

impl SubchannelGram {
    pub fn g(&self) -> &ComplexMatrix {
        &self.g
    }

    pub fn indicator(&self) -> &DVector<f64> {
        &self.indicator
    }

    pub fn len(&self) -> usize {
        self.indicator.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indicator.is_empty()
    }

    /// Recomputes row and column `l` after column `l` of `m_hat` changed,
    /// then refreshes the indicator.
    pub(crate) fn refresh_path(
        &mut self,
        geometry: &ArrayGeometry,
        paths: &PathSet,
        m_hat: &DMatrix<f64>,
        l: usize,
    ) {
        for j in 0..self.len() {
            let v = gram_entry(geometry, paths, m_hat, l, j);
            if j == l {
                self.g[(l, l)] = Complex64::new(v.re, 0.0);
            } else {
                self.g[(l, j)] = v;
                self.g[(j, l)] = v.conj();
            }
        }
        self.indicator = correlation_indicator(&self.g);
    }
}

/// Full Gram matrix `Ĝ` over all path pairs via the closed form. The lower
/// triangle is filled by Hermitian symmetry.
pub fn subchannel_gram(
    geometry: &ArrayGeometry,
    paths: &PathSet,
    m_hat: &DMatrix<f64>,
) -> Result<SubchannelGram> {
    check_dimensions(geometry, paths, m_hat)?;
    check_modification_matrix(m_hat)?;
    let l = paths.len();
    let mut g = ComplexMatrix::zeros(l, l);
    for i in 0..l {
        g[(i, i)] = Complex64::new(gram_entry(geometry, paths, m_hat, i, i).re, 0.0);
        for j in i + 1..l {
            let v = gram_entry(geometry, paths, m_hat, i, j);
            g[(i, j)] = v;
            g[(j, i)] = v.conj();
        }
    }
    let indicator = correlation_indicator(&g);
    Ok(SubchannelGram { g, indicator })
}

/// `ĝ_l = Σ_{j≠l} |Ĝ_{l,j}|²`.
pub fn correlation_indicator(g: &ComplexMatrix) -> DVector<f64> {
    DVector::from_fn(g.nrows(), |l, _| {
        g.row(l).iter().enumerate().filter(|&(j, _)| j != l).map(|(_, z)| z.norm_sqr()).sum()
    })
}
