//! Closed-form power allocation (CFPA) and the end-to-end pattern design.
//!
//! Paths whose modified subchannel is less correlated with the rest receive
//! more power: `ŵ_l = max(ĝ)/ĝ_l`, `w = ŵ/Σŵ`. A common scaling `δ` brings the
//! phase-free combination `Σ w_l Ĥ_l` to the power budget `N_t·N_r`, and the
//! per-path factors follow as `p_l = w_l δ / |α_l|`.

use nalgebra::{DMatrix, DVector};

use crate::channel::{ArrayGeometry, PathSet};
use crate::numerics::ComplexMatrix;
use crate::pattern::{assemble_pattern_channel, assemble_with_pattern, normalized_subchannel, PatternMatrix};
use crate::sof::{run_sof, SofState};
use crate::{Error, Result};

/// Relative floor applied to indicator entries before inversion.
pub const INDICATOR_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct PowerAllocation {
    /// Path indices that took part in the allocation (non-zero gain).
    pub paths: Vec<usize>,
    pub w_hat: Vec<f64>,
    pub w: Vec<f64>,
    pub delta: f64,
    /// Per-path factors, aligned with `paths`.
    pub p: Vec<f64>,
}

/// Inverse-correlation weights `(ŵ, w)`.
///
/// Entries below `1e-6·max(ĝ)` are raised to that floor. An all-zero
/// indicator (fully uncorrelated subchannels) yields uniform weights.
pub fn cfpa_weights(indicator: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    if indicator.is_empty() {
        return Err(Error::invalid("empty correlation indicator"));
    }
    if let Some(v) = indicator.iter().find(|v| !(**v >= 0.0) || !v.is_finite()) {
        return Err(Error::invalid(format!("indicator entry {v} is not finite and non-negative")));
    }
    let max = indicator.iter().copied().fold(0.0, f64::max);
    let n = indicator.len();
    if max == 0.0 {
        return Ok((vec![1.0; n], vec![1.0 / n as f64; n]));
    }
    let floor = INDICATOR_FLOOR * max;
    let w_hat: Vec<f64> = indicator.iter().map(|&g| max / g.max(floor)).collect();
    let total: f64 = w_hat.iter().sum();
    let w = w_hat.iter().map(|v| v / total).collect();
    Ok((w_hat, w))
}

/// `δ = √(N_t N_r / ‖Σ w_l Ĥ_l‖_F²)`.
pub fn power_scaling(geometry: &ArrayGeometry, subchannels: &[ComplexMatrix], w: &[f64]) -> Result<f64> {
    if subchannels.len() != w.len() || w.is_empty() {
        return Err(Error::invalid(format!("{} subchannels for {} weights", subchannels.len(), w.len())));
    }
    let mut sum = ComplexMatrix::zeros(geometry.n_r(), geometry.n_t());
    for (h, &wl) in subchannels.iter().zip(w) {
        if h.shape() != sum.shape() {
            return Err(Error::invalid("subchannel shape does not match the array geometry"));
        }
        sum.zip_apply(h, |acc, z| *acc += z * wl);
    }
    let power = sum.norm_squared();
    if !(power > 0.0) {
        return Err(Error::DegenerateChannel("weighted subchannel sum cancels to zero".into()));
    }
    Ok((geometry.power_budget() / power).sqrt())
}

/// `p_l = w_l δ / |α_l|`.
pub fn power_factors(gains: &[num_complex::Complex64], w: &[f64], delta: f64) -> Result<Vec<f64>> {
    if gains.len() != w.len() {
        return Err(Error::invalid(format!("{} gains for {} weights", gains.len(), w.len())));
    }
    gains
        .iter()
        .zip(w)
        .map(|(g, &wl)| {
            let mag = g.norm();
            if mag > 0.0 {
                Ok(wl * delta / mag)
            } else {
                Err(Error::invalid("zero-gain path cannot receive a power factor"))
            }
        })
        .collect()
}

/// `M = M̂ diag(p)`.
pub fn finalize_pattern(m_hat: DMatrix<f64>, p: DVector<f64>) -> Result<PatternMatrix> {
    PatternMatrix::from_parts(m_hat, p)
}

/// Uniform factor that brings the channel built from `m_hat·diag(p)` to
/// `‖H̃‖_F² = N_t N_r`.
pub fn exact_power_scale(
    geometry: &ArrayGeometry,
    paths: &PathSet,
    m_hat: &DMatrix<f64>,
    p: &DVector<f64>,
) -> Result<f64> {
    let m = m_hat * DMatrix::from_diagonal(p);
    let power = assemble_with_pattern(geometry, paths, &m)?.norm_squared();
    if !(power > 0.0) {
        return Err(Error::DegenerateChannel("pattern channel carries no power".into()));
    }
    Ok((geometry.power_budget() / power).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DesignOptions {
    /// Rescale all power factors so the designed channel meets the power
    /// budget exactly. When off, `δ` is used as is and the budget holds only
    /// up to the cross terms introduced by the path gain phases.
    pub renormalize: bool,
}

impl Default for DesignOptions {
    fn default() -> Self {
        DesignOptions { renormalize: true }
    }
}

#[derive(Debug, Clone)]
pub struct PatternDesign {
    pub sof: SofState,
    pub allocation: PowerAllocation,
    pub pattern: PatternMatrix,
    pub channel: ComplexMatrix,
    /// Uniform renormalization factor applied to `p` (1 when disabled).
    pub power_scale: f64,
}

/// Correlation modification followed by closed-form power allocation.
/// Zero-gain paths are excluded from the allocation and get `p = 0`.
pub fn design_pattern(
    geometry: &ArrayGeometry,
    paths: &PathSet,
    options: DesignOptions,
) -> Result<PatternDesign> {
    let sof = run_sof(geometry, paths)?;
    let active: Vec<usize> = (0..paths.len()).filter(|&l| paths.gains()[l].norm() > 0.0).collect();
    if active.is_empty() {
        return Err(Error::DegenerateChannel("every path has zero gain".into()));
    }

    let indicator: Vec<f64> = active.iter().map(|&l| sof.gram().indicator()[l]).collect();
    let (w_hat, w) = cfpa_weights(&indicator)?;
    let subchannels = active
        .iter()
        .map(|&l| normalized_subchannel(geometry, paths, sof.m_hat(), l))
        .collect::<Result<Vec<_>>>()?;
    let delta = power_scaling(geometry, &subchannels, &w)?;
    let gains: Vec<_> = active.iter().map(|&l| paths.gains()[l]).collect();
    let p_active = power_factors(&gains, &w, delta)?;

    let mut p = DVector::zeros(paths.len());
    for (&l, &v) in active.iter().zip(&p_active) {
        p[l] = v;
    }
    let power_scale =
        if options.renormalize { exact_power_scale(geometry, paths, sof.m_hat(), &p)? } else { 1.0 };
    p *= power_scale;

    let pattern = finalize_pattern(sof.m_hat().clone(), p)?;
    let channel = assemble_pattern_channel(geometry, paths, &pattern)?;
    let allocation = PowerAllocation {
        p: active.iter().map(|&l| pattern.p()[l]).collect(),
        paths: active,
        w_hat,
        w,
        delta,
    };
    Ok(PatternDesign { sof, allocation, pattern, channel, power_scale })
}
