//! Seeded Monte Carlo campaigns over clustered channels.
//!
//! Every trial draws its own random stream from `(master_seed, trial_index)`
//! so results do not depend on how trials are scheduled across workers.
//! Aggregation always runs in trial-index order.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;

use crate::cfpa::{design_pattern, DesignOptions};
use crate::channel::{
    assemble_physical, condition_profile, sample_cluster_means, sample_cluster_paths, ArrayGeometry,
    Condition, PathSet,
};
use crate::pattern::capacity;
use crate::{Error, Result};

/// Capacity curves produced by a campaign.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Scheme {
    // Declaration order is the alphabetical order used in reports.
    Ideal,
    Pattern,
    Physical,
}

impl Scheme {
    pub const ALL: [Scheme; 3] = [Scheme::Ideal, Scheme::Pattern, Scheme::Physical];

    pub fn as_str(&self) -> &'static str {
        match self {
            Scheme::Ideal => "ideal",
            Scheme::Pattern => "pattern",
            Scheme::Physical => "physical",
        }
    }
}

impl std::str::FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ideal" => Ok(Scheme::Ideal),
            "pattern" => Ok(Scheme::Pattern),
            "physical" => Ok(Scheme::Physical),
            other => {
                Err(Error::invalid(format!("unknown scheme '{other}' (expected physical|pattern|ideal)")))
            }
        }
    }
}

/// Monte Carlo experiment definition.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub geometry: ArrayGeometry,
    pub n_cl: usize,
    pub n_ray: usize,
    pub condition: Condition,
    /// Per-ray angle standard deviation, radians.
    pub angle_spread: f64,
    pub snr_grid_db: Vec<f64>,
    pub trials: usize,
    pub master_seed: u64,
    pub schemes: Vec<Scheme>,
    pub design: DesignOptions,
    /// Fall back to the unmodified pattern whenever the designed channel
    /// loses capacity against the physical one at a given SNR.
    pub safeguard: bool,
}

impl Scenario {
    /// 32×8 half-wavelength arrays, 10 ill-conditioned clusters of 8 rays,
    /// 3° spread, SNR −10..20 dB in 5 dB steps, 1000 trials.
    pub fn reference() -> Self {
        Scenario {
            geometry: ArrayGeometry::half_wavelength(32, 8).expect("static geometry"),
            n_cl: 10,
            n_ray: 8,
            condition: Condition::Ill,
            angle_spread: 3f64.to_radians(),
            snr_grid_db: vec![-10.0, -5.0, 0.0, 5.0, 10.0, 15.0, 20.0],
            trials: 1000,
            master_seed: 1,
            schemes: Scheme::ALL.to_vec(),
            design: DesignOptions::default(),
            safeguard: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::invalid("trials must be at least 1"));
        }
        if self.snr_grid_db.is_empty() {
            return Err(Error::invalid("SNR grid is empty"));
        }
        if let Some(s) = self.snr_grid_db.iter().find(|s| !s.is_finite()) {
            return Err(Error::invalid(format!("non-finite SNR grid point {s}")));
        }
        if !(self.angle_spread >= 0.0) || !self.angle_spread.is_finite() {
            return Err(Error::invalid(format!("angle spread must be >= 0, got {}", self.angle_spread)));
        }
        if self.n_cl == 0 || self.n_ray == 0 {
            return Err(Error::invalid("cluster and ray counts must be positive"));
        }
        if self.condition == Condition::Ill && self.n_cl < 4 {
            return Err(Error::invalid("ill-conditioned scenarios need at least 4 clusters"));
        }
        if self.schemes.is_empty() {
            return Err(Error::invalid("no schemes selected"));
        }
        Ok(())
    }

    fn wants(&self, scheme: Scheme) -> bool {
        self.schemes.contains(&scheme)
    }
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Capacity of `√N_t·I_{N_r×N_t}`: `N_r log₂(1 + ρ N_t / N_r)`.
pub fn ideal_capacity(geometry: &ArrayGeometry, snr: f64) -> Result<f64> {
    if !(snr > 0.0) || !snr.is_finite() {
        return Err(Error::invalid(format!("SNR must be positive, got {snr}")));
    }
    let (n_t, n_r) = (geometry.n_t() as f64, geometry.n_r() as f64);
    Ok(n_r * (snr * n_t / n_r).ln_1p() / std::f64::consts::LN_2)
}

/// Independent random stream for one trial: the master seed keys the
/// generator and the trial index selects the ChaCha stream.
pub fn trial_rng(master_seed: u64, trial_index: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(master_seed);
    rng.set_stream(trial_index);
    rng
}

/// Draws one channel realization (cluster powers, cluster means, rays).
pub fn sample_trial_paths(scenario: &Scenario, rng: &mut ChaCha20Rng) -> Result<PathSet> {
    let profile = condition_profile(
        scenario.condition,
        &scenario.geometry,
        scenario.n_cl,
        scenario.n_ray,
        scenario.angle_spread,
        rng,
    )?;
    let (means_aod, means_aoa) = sample_cluster_means(scenario.n_cl, rng);
    sample_cluster_paths(&profile, &means_aod, &means_aoa, rng)
}

/// Feasibility summary of one designed pattern.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PatternAudit {
    /// Largest `|‖m̂_l‖² − N_t|`.
    pub max_norm_deviation: f64,
    /// Smallest entry of `M`, `M̂` and `p`.
    pub min_entry: f64,
    /// Whether the visit order is a permutation of all path indices.
    pub order_is_permutation: bool,
    /// `‖H̃‖_F²` of the designed channel.
    pub channel_power: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialOutcome {
    pub index: usize,
    /// Physical-channel capacity per SNR grid point.
    pub physical: Vec<f64>,
    /// Pattern-channel capacity per SNR grid point, when requested.
    pub pattern: Option<Vec<f64>>,
    /// Grid points at which the safeguard replaced the designed pattern.
    pub fallbacks: usize,
    pub audit: Option<PatternAudit>,
}

pub fn run_trial(scenario: &Scenario, trial_index: usize) -> Result<TrialOutcome> {
    if trial_index >= scenario.trials {
        return Err(Error::invalid(format!(
            "trial index {trial_index} out of range for {} trials",
            scenario.trials
        )));
    }
    let mut rng = trial_rng(scenario.master_seed, trial_index as u64);
    let paths = sample_trial_paths(scenario, &mut rng)?;
    let physical_h = assemble_physical(&scenario.geometry, &paths)?.h;
    let snrs: Vec<f64> = scenario.snr_grid_db.iter().map(|&d| db_to_linear(d)).collect();
    let physical = snrs.iter().map(|&s| capacity(&physical_h, s)).collect::<Result<Vec<_>>>()?;

    let mut fallbacks = 0;
    let (pattern, audit) = if scenario.wants(Scheme::Pattern) {
        let design = design_pattern(&scenario.geometry, &paths, scenario.design)?;
        let mut caps = snrs.iter().map(|&s| capacity(&design.channel, s)).collect::<Result<Vec<_>>>()?;
        if scenario.safeguard {
            for (c, &phys) in caps.iter_mut().zip(&physical) {
                if *c < phys {
                    *c = phys;
                    fallbacks += 1;
                }
            }
        }
        let mut order = design.sof.order().to_vec();
        order.sort_unstable();
        let audit = PatternAudit {
            max_norm_deviation: design.pattern.max_norm_deviation(),
            min_entry: design.pattern.min_entry(),
            order_is_permutation: order.iter().copied().eq(0..paths.len()),
            channel_power: design.channel.norm_squared(),
        };
        (Some(caps), Some(audit))
    } else {
        (None, None)
    };

    Ok(TrialOutcome { index: trial_index, physical, pattern, fallbacks, audit })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvePoint {
    pub snr_db: f64,
    pub mean: f64,
    pub std: f64,
    /// Number of trials averaged; zero for the analytic ideal curve.
    pub trials: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CapacityCurve {
    pub scheme: Scheme,
    pub points: Vec<CurvePoint>,
}

#[derive(Debug, Clone)]
pub struct CampaignReport {
    /// One curve per requested scheme, ordered by scheme name.
    pub curves: Vec<CapacityCurve>,
    /// Successful trials in index order.
    pub outcomes: Vec<TrialOutcome>,
    pub failures: Vec<(usize, Error)>,
}

impl CampaignReport {
    pub fn curve(&self, scheme: Scheme) -> Option<&CapacityCurve> {
        self.curves.iter().find(|c| c.scheme == scheme)
    }
}

/// Welford running mean / sample variance.
#[derive(Debug, Clone, Copy, Default)]
pub struct RunningStats {
    n: usize,
    mean: f64,
    m2: f64,
}

impl RunningStats {
    pub fn push(&mut self, x: f64) {
        self.n += 1;
        let delta = x - self.mean;
        self.mean += delta / self.n as f64;
        self.m2 += delta * (x - self.mean);
    }

    pub fn count(&self) -> usize {
        self.n
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Sample standard deviation; zero for fewer than two samples.
    pub fn std(&self) -> f64 {
        if self.n < 2 {
            0.0
        } else {
            (self.m2 / (self.n - 1) as f64).sqrt()
        }
    }
}

/// Runs every trial on a pool of `workers` threads (`0` = rayon default) and
/// aggregates the requested curves. More than 1% failed trials aborts the
/// campaign.
pub fn run_campaign(scenario: &Scenario, workers: usize) -> Result<CampaignReport> {
    scenario.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::invalid(format!("cannot build worker pool: {e}")))?;
    let results: Vec<Result<TrialOutcome>> =
        pool.install(|| (0..scenario.trials).into_par_iter().map(|i| run_trial(scenario, i)).collect());

    let mut outcomes = Vec::with_capacity(results.len());
    let mut failures = Vec::new();
    for (i, r) in results.into_iter().enumerate() {
        match r {
            Ok(o) => outcomes.push(o),
            Err(e) => failures.push((i, e)),
        }
    }
    if failures.len() * 100 > scenario.trials {
        return Err(Error::CampaignFailed {
            failed: failures.len(),
            trials: scenario.trials,
            first: failures[0].1.to_string(),
        });
    }

    let mut curves = Vec::new();
    for scheme in Scheme::ALL {
        if !scenario.wants(scheme) {
            continue;
        }
        let points = scenario
            .snr_grid_db
            .iter()
            .enumerate()
            .map(|(k, &snr_db)| match scheme {
                Scheme::Ideal => Ok(CurvePoint {
                    snr_db,
                    mean: ideal_capacity(&scenario.geometry, db_to_linear(snr_db))?,
                    std: 0.0,
                    trials: 0,
                }),
                Scheme::Physical | Scheme::Pattern => {
                    let mut stats = RunningStats::default();
                    for o in &outcomes {
                        let v = match scheme {
                            Scheme::Physical => o.physical[k],
                            _ => o.pattern.as_ref().expect("pattern requested")[k],
                        };
                        stats.push(v);
                    }
                    Ok(CurvePoint { snr_db, mean: stats.mean(), std: stats.std(), trials: stats.count() })
                }
            })
            .collect::<Result<Vec<_>>>()?;
        curves.push(CapacityCurve { scheme, points });
    }
    Ok(CampaignReport { curves, outcomes, failures })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::ComplexMatrix;
    use num_complex::Complex64;

    fn small() -> Scenario {
        Scenario {
            geometry: ArrayGeometry::half_wavelength(8, 4).unwrap(),
            n_cl: 4,
            n_ray: 3,
            trials: 6,
            snr_grid_db: vec![0.0, 10.0],
            ..Scenario::reference()
        }
    }

    #[test]
    fn ideal_matches_closed_form_and_general_path() {
        let g = ArrayGeometry::half_wavelength(32, 8).unwrap();
        let c = ideal_capacity(&g, 10.0).unwrap();
        assert!((c - 8.0 * 41f64.log2()).abs() < 1e-12);
        let h = ComplexMatrix::from_fn(8, 32, |i, j| {
            Complex64::new(if i == j { 32f64.sqrt() } else { 0.0 }, 0.0)
        });
        assert!((capacity(&h, 10.0).unwrap() - c).abs() <= 1e-9 * c);
        assert!(ideal_capacity(&g, 1e-12).unwrap() < 1e-9);
        assert!(ideal_capacity(&g, 0.0).is_err());
    }

    #[test]
    fn scheme_names_round_trip() {
        for s in Scheme::ALL {
            assert_eq!(s.as_str().parse::<Scheme>().unwrap(), s);
        }
        assert!("both".parse::<Scheme>().is_err());
    }

    #[test]
    fn trial_is_deterministic() {
        let s = small();
        assert_eq!(run_trial(&s, 3).unwrap(), run_trial(&s, 3).unwrap());
        assert_ne!(run_trial(&s, 3).unwrap().physical, run_trial(&s, 4).unwrap().physical);
        assert!(run_trial(&s, 6).is_err());
    }

    #[test]
    fn single_path_trial() {
        // One path: the design only rescales its gain to meet the budget, so
        // the pattern channel is the physical channel scaled to ‖H‖² = N_tN_r.
        let s = Scenario { n_cl: 1, n_ray: 1, angle_spread: 0.0, condition: Condition::Good, ..small() };
        for i in 0..s.trials {
            let mut rng = trial_rng(s.master_seed, i as u64);
            let paths = sample_trial_paths(&s, &mut rng).unwrap();
            let h = assemble_physical(&s.geometry, &paths).unwrap().h;
            let scaled = &h * Complex64::new((32.0 / h.norm_squared()).sqrt(), 0.0);
            let o = run_trial(&s, i).unwrap();
            for (k, &db) in s.snr_grid_db.iter().enumerate() {
                let expected = capacity(&scaled, db_to_linear(db)).unwrap();
                assert!((o.pattern.as_ref().unwrap()[k] - expected).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn single_trial_campaign_has_zero_std() {
        let s = Scenario { trials: 1, ..small() };
        let r = run_campaign(&s, 1).unwrap();
        let o = &r.outcomes[0];
        for p in &r.curve(Scheme::Physical).unwrap().points {
            assert_eq!(p.std, 0.0);
            assert_eq!(p.trials, 1);
        }
        assert_eq!(r.curve(Scheme::Physical).unwrap().points[1].mean, o.physical[1]);
        assert_eq!(r.curve(Scheme::Ideal).unwrap().points[0].trials, 0);
    }

    #[test]
    fn worker_count_does_not_change_results() {
        let s = small();
        let a = run_campaign(&s, 1).unwrap();
        let b = run_campaign(&s, 3).unwrap();
        assert_eq!(a.curves, b.curves);
        assert_eq!(a.outcomes, b.outcomes);
    }

    #[test]
    fn safeguard_never_loses_capacity() {
        let s = Scenario { safeguard: true, ..small() };
        let r = run_campaign(&s, 1).unwrap();
        for o in &r.outcomes {
            for (p, q) in o.pattern.as_ref().unwrap().iter().zip(&o.physical) {
                assert!(p >= q);
            }
        }
    }

    #[test]
    fn curves_follow_requested_schemes() {
        let s = Scenario { schemes: vec![Scheme::Physical, Scheme::Ideal], ..small() };
        let r = run_campaign(&s, 1).unwrap();
        let names: Vec<_> = r.curves.iter().map(|c| c.scheme).collect();
        assert_eq!(names, vec![Scheme::Ideal, Scheme::Physical]);
        assert!(r.outcomes.iter().all(|o| o.pattern.is_none()));
    }

    #[test]
    fn validate_rejects_bad_scenarios() {
        assert!(Scenario { trials: 0, ..small() }.validate().is_err());
        assert!(Scenario { snr_grid_db: vec![], ..small() }.validate().is_err());
        assert!(Scenario { angle_spread: -0.1, ..small() }.validate().is_err());
        assert!(Scenario { n_cl: 3, ..small() }.validate().is_err());
        assert!(Scenario { schemes: vec![], ..small() }.validate().is_err());
    }

    #[test]
    fn running_stats_matches_two_pass() {
        let xs = [1.5, 2.0, -0.5, 4.25, 3.0];
        let mut s = RunningStats::default();
        xs.iter().for_each(|&x| s.push(x));
        let mean = xs.iter().sum::<f64>() / 5.0;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / 4.0;
        assert!((s.mean() - mean).abs() < 1e-15);
        assert!((s.std() - var.sqrt()).abs() < 1e-15);
    }
}
