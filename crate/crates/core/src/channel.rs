//! Geometric multi-path channels for uniform linear arrays.
//!
//! A channel is the sum of `L` rank-one path contributions
//! `α_l · a_R(θ_l) · a_T(φ_l)ᴴ`, where `a_R`/`a_T` are unit-norm steering
//! vectors. Only azimuth angles are modelled.

use std::f64::consts::{FRAC_PI_2, PI};

use nalgebra::DVector;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::numerics::{ComplexMatrix, ComplexVector};
use crate::{Error, Result};

/// Antenna counts and spacings (in wavelengths) at both ends of the link.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArrayGeometry {
    n_t: usize,
    n_r: usize,
    spacing_t: f64,
    spacing_r: f64,
}

impl ArrayGeometry {
    pub fn new(n_t: usize, n_r: usize, spacing_t: f64, spacing_r: f64) -> Result<Self> {
        if n_r == 0 || n_r > n_t {
            return Err(Error::invalid(format!(
                "array sizes must satisfy 1 <= n_r <= n_t, got n_t={n_t}, n_r={n_r}"
            )));
        }
        for (name, s) in [("transmit", spacing_t), ("receive", spacing_r)] {
            if !(s > 0.0) || !s.is_finite() {
                return Err(Error::invalid(format!("{name} spacing must be positive, got {s}")));
            }
        }
        Ok(ArrayGeometry { n_t, n_r, spacing_t, spacing_r })
    }

    /// Half-wavelength spacing at both ends.
    pub fn half_wavelength(n_t: usize, n_r: usize) -> Result<Self> {
        Self::new(n_t, n_r, 0.5, 0.5)
    }

    pub fn n_t(&self) -> usize {
        self.n_t
    }

    pub fn n_r(&self) -> usize {
        self.n_r
    }

    pub fn spacing_t(&self) -> f64 {
        self.spacing_t
    }

    pub fn spacing_r(&self) -> f64 {
        self.spacing_r
    }

    /// `N_t · N_r`, the channel power budget `E‖H‖_F²`.
    pub fn power_budget(&self) -> f64 {
        (self.n_t * self.n_r) as f64
    }
}

/// Per-path complex gains and azimuth departure/arrival angles (radians).
#[derive(Debug, Clone, PartialEq)]
pub struct PathSet {
    gains: Vec<Complex64>,
    aod: Vec<f64>,
    aoa: Vec<f64>,
}

impl PathSet {
    pub fn new(gains: Vec<Complex64>, aod: Vec<f64>, aoa: Vec<f64>) -> Result<Self> {
        if gains.is_empty() || gains.len() != aod.len() || gains.len() != aoa.len() {
            return Err(Error::invalid(format!(
                "path set needs equal non-zero lengths, got gains={}, aod={}, aoa={}",
                gains.len(),
                aod.len(),
                aoa.len()
            )));
        }
        if let Some(a) = aod.iter().chain(&aoa).find(|a| !(a.abs() <= FRAC_PI_2)) {
            return Err(Error::invalid(format!("path angle {a} outside [-pi/2, pi/2]")));
        }
        if gains.iter().any(|g| !g.re.is_finite() || !g.im.is_finite()) {
            return Err(Error::invalid("non-finite path gain"));
        }
        Ok(PathSet { gains, aod, aoa })
    }

    pub fn len(&self) -> usize {
        self.gains.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gains.is_empty()
    }

    pub fn gains(&self) -> &[Complex64] {
        &self.gains
    }

    pub fn aod(&self) -> &[f64] {
        &self.aod
    }

    pub fn aoa(&self) -> &[f64] {
        &self.aoa
    }
}

/// Steering vector of an `n`-element ULA: entry `k` is
/// `exp(-j2π·spacing·k·sin(angle)) / √n`.
pub fn steering_vector(n: usize, spacing: f64, angle: f64) -> Result<ComplexVector> {
    if n == 0 {
        return Err(Error::invalid("steering vector needs at least one antenna"));
    }
    if !(spacing > 0.0) {
        return Err(Error::invalid(format!("spacing must be positive, got {spacing}")));
    }
    let scale = 1.0 / (n as f64).sqrt();
    let step = -2.0 * PI * spacing * angle.sin();
    Ok(DVector::from_fn(n, |k, _| Complex64::from_polar(scale, step * k as f64)))
}

/// Steering matrix whose columns are the steering vectors for `angles`.
pub fn steering_matrix(n: usize, spacing: f64, angles: &[f64]) -> Result<ComplexMatrix> {
    let mut a = ComplexMatrix::zeros(n, angles.len());
    for (l, &angle) in angles.iter().enumerate() {
        a.set_column(l, &steering_vector(n, spacing, angle)?);
    }
    Ok(a)
}

/// Physical channel `H = A_R Λ A_Tᴴ` together with its factors.
#[derive(Debug, Clone)]
pub struct PhysicalChannel {
    pub a_r: ComplexMatrix,
    pub a_t: ComplexMatrix,
    pub gains: ComplexVector,
    pub h: ComplexMatrix,
}

pub fn assemble_physical(geometry: &ArrayGeometry, paths: &PathSet) -> Result<PhysicalChannel> {
    let a_r = steering_matrix(geometry.n_r, geometry.spacing_r, &paths.aoa)?;
    let a_t = steering_matrix(geometry.n_t, geometry.spacing_t, &paths.aod)?;
    let gains = ComplexVector::from_column_slice(&paths.gains);

    let mut scaled = a_r.clone();
    for (l, mut col) in scaled.column_iter_mut().enumerate() {
        col *= gains[l];
    }
    let h = scaled * a_t.adjoint();
    Ok(PhysicalChannel { a_r, a_t, gains, h })
}

/// Cluster power profile for the clustered channel generator.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterProfile {
    pub n_ray: usize,
    /// Average power of each cluster's rays.
    pub sigma_sq: Vec<f64>,
    /// Standard deviation of the per-ray angle spread around the cluster mean (radians).
    pub angle_spread: f64,
}

impl ClusterProfile {
    pub fn n_cl(&self) -> usize {
        self.sigma_sq.len()
    }
}

/// Channel conditioning regimes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Condition {
    /// Cluster powers are magnitudes of standard normal draws.
    Good,
    /// Cluster powers in the ratio 100:50:50:1:…:1.
    Ill,
}

impl Condition {
    pub fn as_str(&self) -> &'static str {
        match self {
            Condition::Good => "good",
            Condition::Ill => "ill",
        }
    }
}

impl std::str::FromStr for Condition {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "good" => Ok(Condition::Good),
            "ill" => Ok(Condition::Ill),
            other => Err(Error::invalid(format!("unknown condition '{other}' (expected good|ill)"))),
        }
    }
}

/// Total cluster power `Σσ_i²` that makes `E‖H‖_F² = N_t·N_r` when every
/// cluster carries `n_ray` rays with unit-norm steering vectors.
pub fn cluster_power_sum(geometry: &ArrayGeometry, n_ray: usize) -> f64 {
    geometry.power_budget() / n_ray as f64
}

/// Builds the cluster power profile for a condition regime. Only the good
/// regime consumes randomness.
pub fn condition_profile<R: Rng + ?Sized>(
    kind: Condition,
    geometry: &ArrayGeometry,
    n_cl: usize,
    n_ray: usize,
    angle_spread: f64,
    rng: &mut R,
) -> Result<ClusterProfile> {
    if n_cl == 0 || n_ray == 0 {
        return Err(Error::invalid("cluster and ray counts must be positive"));
    }
    if !(angle_spread >= 0.0) || !angle_spread.is_finite() {
        return Err(Error::invalid(format!("angle spread must be >= 0, got {angle_spread}")));
    }
    let raw: Vec<f64> = match kind {
        Condition::Ill => {
            if n_cl < 4 {
                return Err(Error::invalid(format!(
                    "ill-conditioned profile needs at least 4 clusters, got {n_cl}"
                )));
            }
            let mut r = vec![1.0; n_cl];
            r[..3].copy_from_slice(&[100.0, 50.0, 50.0]);
            r
        }
        Condition::Good => loop {
            let draws: Vec<f64> = (0..n_cl)
                .map(|_| {
                    let x: f64 = StandardNormal.sample(rng);
                    x.abs()
                })
                .collect();
            // An exact zero has probability zero but would break positivity.
            if draws.iter().all(|&x| x > 0.0) {
                break draws;
            }
        },
    };
    let total: f64 = raw.iter().sum();
    let gamma = cluster_power_sum(geometry, n_ray);
    let sigma_sq = raw.iter().map(|r| r / total * gamma).collect();
    Ok(ClusterProfile { n_ray, sigma_sq, angle_spread })
}

/// Draws `n_cl` cluster mean angles uniformly from `[-π/2, π/2]`; returns
/// `(aod_means, aoa_means)`.
pub fn sample_cluster_means<R: Rng + ?Sized>(n_cl: usize, rng: &mut R) -> (Vec<f64>, Vec<f64>) {
    let mut aod = Vec::with_capacity(n_cl);
    let mut aoa = Vec::with_capacity(n_cl);
    for _ in 0..n_cl {
        aod.push(rng.random_range(-FRAC_PI_2..=FRAC_PI_2));
        aoa.push(rng.random_range(-FRAC_PI_2..=FRAC_PI_2));
    }
    (aod, aoa)
}

/// Samples the rays of every cluster.
///
/// Ray gains are `CN(0, σ_i²)`. Ray angles are uniform with the cluster mean
/// and standard deviation `ξ` (half-width `√3·ξ`), clipped to `[-π/2, π/2]`.
/// Rays are emitted cluster by cluster.
pub fn sample_cluster_paths<R: Rng + ?Sized>(
    profile: &ClusterProfile,
    means_aod: &[f64],
    means_aoa: &[f64],
    rng: &mut R,
) -> Result<PathSet> {
    let n_cl = profile.n_cl();
    if means_aod.len() != n_cl || means_aoa.len() != n_cl {
        return Err(Error::invalid(format!(
            "expected {n_cl} cluster means, got aod={} aoa={}",
            means_aod.len(),
            means_aoa.len()
        )));
    }
    let half_width = 3f64.sqrt() * profile.angle_spread;
    let capacity = n_cl * profile.n_ray;
    let mut gains = Vec::with_capacity(capacity);
    let mut aod = Vec::with_capacity(capacity);
    let mut aoa = Vec::with_capacity(capacity);

    for i in 0..n_cl {
        let component_std = (profile.sigma_sq[i] / 2.0).sqrt();
        for _ in 0..profile.n_ray {
            let re: f64 = StandardNormal.sample(rng);
            let im: f64 = StandardNormal.sample(rng);
            gains.push(Complex64::new(re, im) * component_std);

            let u_d: f64 = rng.random();
            let u_a: f64 = rng.random();
            aod.push(spread(means_aod[i], half_width, u_d));
            aoa.push(spread(means_aoa[i], half_width, u_a));
        }
    }
    PathSet::new(gains, aod, aoa)
}

fn spread(mean: f64, half_width: f64, u: f64) -> f64 {
    (mean + (2.0 * u - 1.0) * half_width).clamp(-FRAC_PI_2, FRAC_PI_2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn geometry_invariants() {
        assert!(ArrayGeometry::half_wavelength(8, 16).is_err());
        assert!(ArrayGeometry::half_wavelength(8, 0).is_err());
        assert!(ArrayGeometry::new(8, 2, 0.0, 0.5).is_err());
        assert!(ArrayGeometry::half_wavelength(4, 4).is_ok());
    }

    #[test]
    fn steering_broadside() {
        let a = steering_vector(4, 0.37, 0.0).unwrap();
        for z in a.iter() {
            assert!((z - c(0.5, 0.0)).norm() < 1e-15);
        }
    }

    #[test]
    fn steering_endfire_half_wavelength() {
        let a = steering_vector(2, 0.5, FRAC_PI_2).unwrap();
        let s = 1.0 / 2f64.sqrt();
        assert!((a[0] - c(s, 0.0)).norm() < 1e-15);
        assert!((a[1] - c(-s, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn steering_phase_progression() {
        let a = steering_vector(8, 0.5, PI / 6.0).unwrap();
        assert!((a.norm() - 1.0).abs() < 1e-12);
        // sin(π/6) = 1/2, so consecutive entries differ by exp(-jπ/2).
        let step = Complex64::from_polar(1.0, -PI / 2.0);
        for k in 1..8 {
            let ratio = a[k] / a[k - 1];
            assert!((ratio - step).norm() < 1e-12, "k={k} ratio={ratio}");
        }
        assert!(steering_vector(0, 0.5, 0.0).is_err());
    }

    #[test]
    fn physical_single_broadside_path() {
        let g = ArrayGeometry::half_wavelength(4, 2).unwrap();
        let p = PathSet::new(vec![c(1.0, 0.0)], vec![0.0], vec![0.0]).unwrap();
        let ch = assemble_physical(&g, &p).unwrap();
        let v = 1.0 / 8f64.sqrt();
        assert!(ch.h.iter().all(|z| (z - c(v, 0.0)).norm() < 1e-15));

        let p2 = PathSet::new(vec![c(1.0, 0.0); 2], vec![0.0; 2], vec![0.0; 2]).unwrap();
        let ch2 = assemble_physical(&g, &p2).unwrap();
        assert!((ch2.h - ch.h * c(2.0, 0.0)).camax() < 1e-15);
    }

    #[test]
    fn physical_matches_elementwise_sum() {
        let g = ArrayGeometry::new(4, 2, 0.5, 0.7).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let l = 6;
        let gains = (0..l).map(|_| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect();
        let aod = (0..l).map(|_| rng.random_range(-FRAC_PI_2..FRAC_PI_2)).collect();
        let aoa = (0..l).map(|_| rng.random_range(-FRAC_PI_2..FRAC_PI_2)).collect();
        let paths = PathSet::new(gains, aod, aoa).unwrap();
        let ch = assemble_physical(&g, &paths).unwrap();

        for n in 0..2 {
            for m in 0..4 {
                let mut acc = c(0.0, 0.0);
                for i in 0..l {
                    let phase = 2.0
                        * PI
                        * (0.5 * m as f64 * paths.aod()[i].sin() - 0.7 * n as f64 * paths.aoa()[i].sin());
                    acc += paths.gains()[i] * Complex64::from_polar(1.0 / 8f64.sqrt(), phase);
                }
                assert!((ch.h[(n, m)] - acc).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn path_set_validation() {
        assert!(PathSet::new(vec![], vec![], vec![]).is_err());
        assert!(PathSet::new(vec![c(1.0, 0.0)], vec![0.0, 0.1], vec![0.0]).is_err());
        assert!(PathSet::new(vec![c(1.0, 0.0)], vec![2.0], vec![0.0]).is_err());
    }

    #[test]
    fn ill_profile_ratios() {
        let g = ArrayGeometry::half_wavelength(32, 8).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let p = condition_profile(Condition::Ill, &g, 4, 8, 0.0, &mut rng).unwrap();
        let gamma = 32.0;
        for (s, r) in p.sigma_sq.iter().zip([100.0, 50.0, 50.0, 1.0]) {
            assert!((s - r / 201.0 * gamma).abs() < 1e-12);
        }

        let p10 = condition_profile(Condition::Ill, &g, 10, 8, 0.0, &mut rng).unwrap();
        assert!((p10.sigma_sq[0] - 100.0 / 207.0 * 32.0).abs() < 1e-12);
        assert!(condition_profile(Condition::Ill, &g, 3, 8, 0.0, &mut rng).is_err());
    }

    #[test]
    fn good_profile_positive_and_normalized() {
        let g = ArrayGeometry::half_wavelength(32, 8).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let p = condition_profile(Condition::Good, &g, 10, 8, 0.05, &mut rng).unwrap();
        assert!(p.sigma_sq.iter().all(|&s| s > 0.0));
        assert!((p.sigma_sq.iter().sum::<f64>() - 32.0).abs() < 1e-12);
    }

    #[test]
    fn zero_spread_rays_sit_on_cluster_mean() {
        let profile = ClusterProfile { n_ray: 5, sigma_sq: vec![1.0, 2.0], angle_spread: 0.0 };
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let paths = sample_cluster_paths(&profile, &[0.3, -1.0], &[0.1, 0.7], &mut rng).unwrap();
        assert_eq!(paths.len(), 10);
        for r in 0..5 {
            assert_eq!(paths.aod()[r], 0.3);
            assert_eq!(paths.aoa()[r], 0.1);
            assert_eq!(paths.aod()[5 + r], -1.0);
            assert_eq!(paths.aoa()[5 + r], 0.7);
        }
    }

    #[test]
    fn spread_stays_in_range_and_clips() {
        let profile = ClusterProfile { n_ray: 200, sigma_sq: vec![1.0], angle_spread: 0.2 };
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let paths = sample_cluster_paths(&profile, &[1.5], &[-0.2], &mut rng).unwrap();
        let hw = 3f64.sqrt() * 0.2;
        assert!(paths.aod().iter().all(|&a| a <= FRAC_PI_2 && a >= 1.5 - hw));
        assert!(paths.aod().contains(&FRAC_PI_2));
        assert!(paths.aoa().iter().all(|&a| (a + 0.2).abs() <= hw + 1e-15));
    }

    #[test]
    fn single_ray_gain_variance() {
        let s = 2.5;
        let profile = ClusterProfile { n_ray: 1, sigma_sq: vec![s], angle_spread: 0.0 };
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let n = 100_000;
        let mut acc = 0.0;
        for _ in 0..n {
            let p = sample_cluster_paths(&profile, &[0.0], &[0.0], &mut rng).unwrap();
            acc += p.gains()[0].norm_sqr();
        }
        let var = acc / n as f64;
        assert!((var - s).abs() / s < 0.03, "empirical variance {var}");
    }
}
