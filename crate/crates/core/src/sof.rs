//! Sequential optimization of the correlation-modification vectors.
//!
//! Subchannels are visited in decreasing order of correlation level. Each
//! visited subchannel gets a new modification vector that minimizes its
//! summed squared correlation with every previously visited subchannel:
//!
//! ```text
//! min  m̂ᵀ B m̂   s.t.  m̂ᵀ m̂ = N_t,  m̂ ≥ 0,   B = Σ_k real{|ρᴿ_k|² b_k* b_kᵀ}
//! ```
//!
//! The minimizer is approximated by the scaled eigenvector of the smallest
//! eigenvalue of `B`, projected onto the non-negative orthant and rescaled.
//! The first subchannel visited keeps its all-ones vector.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::channel::{ArrayGeometry, PathSet};
use crate::numerics::{eig_sym, ComplexVector, RealSymmetricMatrix};
use crate::pattern::{receiver_factor, subchannel_gram, SubchannelGram};
use crate::{Error, Result};

/// `ρᴿ_{i,k} = (1/N_r) Σ_n exp(j2π d_R n (sin θ_k − sin θ_i))`.
pub fn receiver_correlation(geometry: &ArrayGeometry, theta_i: f64, theta_k: f64) -> Complex64 {
    receiver_factor(geometry, theta_k, theta_i)
}

/// `b_{i,k}(n) = (1/N_t) m̂_k(n) exp(j2π d_T n (sin φ_i − sin φ_k))`.
///
/// With this vector, `ρᴿ_{i,k} · bᵀ m̂_i` equals the Gram entry `Ĝ_{k,i}`
/// (the conjugate of `Ĝ_{i,k}`), so `|bᵀ m̂_i|² |ρᴿ|² = |Ĝ_{i,k}|²`.
pub fn b_vector(geometry: &ArrayGeometry, m_hat_k: &[f64], phi_i: f64, phi_k: f64) -> ComplexVector {
    let n_t = geometry.n_t();
    let step = 2.0 * PI * geometry.spacing_t() * (phi_i.sin() - phi_k.sin());
    DVector::from_fn(n_t, |n, _| Complex64::from_polar(m_hat_k[n] / n_t as f64, step * n as f64))
}

/// `real{|ρ|² b* bᵀ}`.
pub fn quadratic_matrix(rho_r: Complex64, b: &ComplexVector) -> RealSymmetricMatrix {
    let mut form = QuadraticForm::new(b.len());
    form.accumulate(rho_r, b);
    form.into_matrix()
}

/// Running sum of per-subchannel coefficient matrices.
#[derive(Debug, Clone)]
pub struct QuadraticForm {
    b: RealSymmetricMatrix,
}

impl QuadraticForm {
    pub fn new(n_t: usize) -> Self {
        QuadraticForm { b: RealSymmetricMatrix::zeros(n_t) }
    }

    /// Adds `real{|ρ|² b* bᵀ} = |ρ|² (Re b Re bᵀ + Im b Im bᵀ)`.
    pub fn accumulate(&mut self, rho_r: Complex64, b: &ComplexVector) {
        let w = rho_r.norm_sqr();
        if w == 0.0 {
            return;
        }
        let re = b.map(|z| z.re);
        let im = b.map(|z| z.im);
        self.b.add_outer(w, &re);
        self.b.add_outer(w, &im);
    }

    pub fn matrix(&self) -> &RealSymmetricMatrix {
        &self.b
    }

    pub fn into_matrix(self) -> RealSymmetricMatrix {
        self.b
    }
}

/// Builds the coefficient matrix for redesigning subchannel `target` against
/// the already-visited subchannels in `previous`, using their current
/// modification vectors.
pub fn accumulate_quadratic(
    geometry: &ArrayGeometry,
    paths: &PathSet,
    m_hat: &DMatrix<f64>,
    target: usize,
    previous: &[usize],
) -> RealSymmetricMatrix {
    let mut form = QuadraticForm::new(geometry.n_t());
    for &k in previous {
        let rho = receiver_correlation(geometry, paths.aoa()[target], paths.aoa()[k]);
        let b = b_vector(geometry, m_hat.column(k).as_slice(), paths.aod()[target], paths.aod()[k]);
        form.accumulate(rho, &b);
    }
    form.into_matrix()
}

/// Feasible approximate minimizer of `m̂ᵀ B m̂` over the non-negative part
/// of the sphere `‖m̂‖² = N_t`.
///
/// The smallest-eigenvalue eigenvector `u` is only defined up to sign; the
/// sign with the larger positive mass `Σ max(±u_k, 0)` is used (ties keep
/// `+u`) so the projection `max(√N_t·u, 0)` cannot vanish.
pub fn solve_modification_vector(b_sum: &RealSymmetricMatrix, n_t: usize) -> Result<DVector<f64>> {
    if b_sum.dim() != n_t {
        return Err(Error::invalid(format!(
            "coefficient matrix is {0}x{0}, expected {n_t}x{n_t}",
            b_sum.dim()
        )));
    }
    let eig = eig_sym(b_sum)?;
    let u = eig.vectors.column(0);
    let pos: f64 = u.iter().map(|v| v.max(0.0)).sum();
    let neg: f64 = u.iter().map(|v| (-v).max(0.0)).sum();
    let sign = if neg > pos { -1.0 } else { 1.0 };

    let scale = (n_t as f64).sqrt();
    let candidate = u.map(|v| (sign * scale * v).max(0.0));
    let energy = candidate.norm_squared();
    if !(energy > 0.0) {
        return Err(Error::InvariantViolation("projected eigenvector vanished after sign selection".into()));
    }
    Ok(candidate * (n_t as f64 / energy).sqrt())
}

/// Index of the largest indicator entry among unselected paths; ties go to
/// the lowest index.
pub fn select_next(indicator: &DVector<f64>, selected: &[bool]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (l, &v) in indicator.iter().enumerate() {
        if selected[l] {
            continue;
        }
        match best {
            Some(b) if v <= indicator[b] => {}
            _ => best = Some(l),
        }
    }
    best
}

/// Result of a completed sequential optimization run.
#[derive(Debug, Clone)]
pub struct SofState {
    order: Vec<usize>,
    m_hat: DMatrix<f64>,
    gram: SubchannelGram,
    iteration: usize,
}

impl SofState {
    /// Visit order of the subchannels (path indices).
    pub fn order(&self) -> &[usize] {
        &self.order
    }

    pub fn m_hat(&self) -> &DMatrix<f64> {
        &self.m_hat
    }

    pub fn gram(&self) -> &SubchannelGram {
        &self.gram
    }

    /// Number of redesigned subchannels (`L − 1` once complete).
    pub fn iteration(&self) -> usize {
        self.iteration
    }

    pub fn into_parts(self) -> (Vec<usize>, DMatrix<f64>, SubchannelGram) {
        (self.order, self.m_hat, self.gram)
    }
}

/// Runs the full sequential optimization starting from the all-ones
/// modification matrix.
pub fn run_sof(geometry: &ArrayGeometry, paths: &PathSet) -> Result<SofState> {
    run_sof_with(geometry, paths, |_, _| {})
}

/// [`run_sof`] with a hook invoked after every redesign with the current
/// state and the coefficient matrix that produced the new column.
pub fn run_sof_with<F>(geometry: &ArrayGeometry, paths: &PathSet, mut observe: F) -> Result<SofState>
where
    F: FnMut(&SofState, &RealSymmetricMatrix),
{
    let n_t = geometry.n_t();
    let n_paths = paths.len();
    if n_paths == 0 {
        return Err(Error::invalid("no paths to optimize"));
    }
    let m_hat = DMatrix::from_element(n_t, n_paths, 1.0);
    let gram = subchannel_gram(geometry, paths, &m_hat)?;
    let mut state = SofState { order: Vec::with_capacity(n_paths), m_hat, gram, iteration: 0 };
    let mut selected = vec![false; n_paths];

    let first = select_next(state.gram.indicator(), &selected)
        .ok_or_else(|| Error::InvariantViolation("no path selectable".into()))?;
    selected[first] = true;
    state.order.push(first);

    for _ in 1..n_paths {
        let next = select_next(state.gram.indicator(), &selected)
            .ok_or_else(|| Error::InvariantViolation("ran out of paths".into()))?;
        let b = accumulate_quadratic(geometry, paths, &state.m_hat, next, &state.order);
        selected[next] = true;
        state.order.push(next);

        let column = solve_modification_vector(&b, n_t)?;
        state.m_hat.set_column(next, &column);
        state.gram.refresh_path(geometry, paths, &state.m_hat, next);
        state.iteration += 1;
        observe(&state, &b);
    }
    Ok(state)
}
