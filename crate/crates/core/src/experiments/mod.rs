//! Monte-Carlo harness.
//!
//! Each trial draws its own channels, message and noise from streams keyed
//! by `(master_seed, trial_id, role)`, so results do not depend on the order
//! trials run in or on the number of worker threads.

mod laws;
mod output;
mod regime;
pub mod stats;

use std::path::PathBuf;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use laws::{
    edge_law_experiment, fig1_experiment, lsv_law_experiment, EdgeLawReport, Fig1Report,
    LsvLawReport,
};
pub use output::{emit_csv, emit_svg_scatter, read_csv, svg_scatter, write_csv, CSV_HEADER};
pub use regime::{
    minimal_contradicting_receivers, regime_scan, MinimalRatio, RegimeRow, RegimeScan,
    DEFAULT_Y_PRIME_GRID,
};

use crate::analysis::{
    self, asymptotic_adv_svd, asymptotic_advup, correctness_noise_cap, hardness_condition,
    AdvantageStats,
};
use crate::channel::{sample_system, transmit_power_ratio, NoiseLevels, SystemParams};
use crate::error::{Error, Result};
use crate::matrix::{singular_values, svd};
use crate::precode::{legit_decode_svd, make_precoder, zf_decode_with, PrecoderKind};
use crate::rng::{sample_message, RngStream, Role};
use stats::{ks_distance, RateEstimate, Summary};

/// Default master seed when neither a flag nor `MMPLC_SEED` supplies one.
pub const DEFAULT_SEED: u64 = 0x4d4d_504c_4321;

/// Trials may fail (rank-deficient draws) up to this fraction before the
/// whole run is rejected.
pub const MAX_FAILED_FRACTION: f64 = 0.01;

/// How receiver noise is set for each trial.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NoiseMode {
    /// `m²α²` and `m²β²` from the system parameters.
    Fixed,
    /// Per trial, `m²α² = m²β² = correctness_noise_cap(n_t, epsilon, sigma_min(H))`.
    CorrectnessCap,
    /// No noise at all.
    Silent,
}

impl std::str::FromStr for NoiseMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fixed" => Ok(NoiseMode::Fixed),
            "cap" | "correctness-cap" => Ok(NoiseMode::CorrectnessCap),
            "silent" | "none" => Ok(NoiseMode::Silent),
            other => Err(Error::invalid(format!(
                "unknown noise mode '{other}' (expected fixed, cap or silent)"
            ))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SimConfig {
    pub params: SystemParams,
    pub precoder: PrecoderKind,
    pub trials: usize,
    pub master_seed: u64,
    pub epsilon: f64,
    pub epsilon_prime: f64,
    pub clamp_mode: bool,
    pub noise: NoiseMode,
    /// Worker threads; `None` uses the global rayon pool.
    pub workers: Option<usize>,
    /// When set, per-trial records are written here as CSV.
    pub output_path: Option<PathBuf>,
}

impl SimConfig {
    pub fn new(
        params: SystemParams,
        precoder: PrecoderKind,
        trials: usize,
        master_seed: u64,
    ) -> Self {
        Self {
            params,
            precoder,
            trials,
            master_seed,
            epsilon: 0.05,
            epsilon_prime: 0.01,
            clamp_mode: false,
            noise: NoiseMode::Fixed,
            workers: None,
            output_path: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        if self.trials == 0 {
            return Err(Error::invalid("trials must be at least 1"));
        }
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(Error::invalid(format!(
                "epsilon must lie in (0, 1), got {}",
                self.epsilon
            )));
        }
        if !(self.epsilon_prime > 0.0) {
            return Err(Error::invalid(format!(
                "epsilon' must be positive, got {}",
                self.epsilon_prime
            )));
        }
        if self.precoder == PrecoderKind::Inverse && self.params.n_r != self.params.n_t {
            return Err(Error::invalid(format!(
                "inverse precoder needs n_r = n_t, got n_r = {}, n_t = {}",
                self.params.n_r, self.params.n_t
            )));
        }
        if self.workers == Some(0) {
            return Err(Error::invalid("workers must be at least 1"));
        }
        Ok(())
    }

    /// Noise levels for one trial given `sigma_min(H)`.
    fn noise_levels(&self, sigma_min_h: f64) -> Result<NoiseLevels> {
        match self.noise {
            NoiseMode::Fixed => Ok(self.params.noise()),
            NoiseMode::Silent => Ok(NoiseLevels::SILENT),
            NoiseMode::CorrectnessCap => {
                let std = correctness_noise_cap(self.params.n_t, self.epsilon, sigma_min_h)?.sqrt();
                Ok(NoiseLevels {
                    std_b: std,
                    std_e: std,
                })
            }
        }
    }
}

/// One Monte-Carlo trial. Column order matches [`CSV_HEADER`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial_id: u64,
    pub sigma_min_h: f64,
    pub sigma_max_h: f64,
    pub sigma_min_g: f64,
    pub sigma_min_hp: f64,
    pub sigma_min_gp: f64,
    pub adv: f64,
    pub advup: f64,
    pub log10_adv: f64,
    pub b_success_paper: bool,
    pub b_success_symbol: bool,
    pub e_success_paper: bool,
    pub e_success_symbol: bool,
    pub power_ratio: f64,
    pub failed: bool,
}

impl TrialRecord {
    fn failed(trial_id: u64) -> Self {
        Self {
            trial_id,
            sigma_min_h: f64::NAN,
            sigma_max_h: f64::NAN,
            sigma_min_g: f64::NAN,
            sigma_min_hp: f64::NAN,
            sigma_min_gp: f64::NAN,
            adv: f64::NAN,
            advup: f64::NAN,
            log10_adv: f64::NAN,
            b_success_paper: false,
            b_success_symbol: false,
            e_success_paper: false,
            e_success_symbol: false,
            power_ratio: f64::NAN,
            failed: true,
        }
    }
}

/// Closed-form predictions evaluated for the run's parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PredictedBounds {
    /// Mean over trials of the legitimate receiver's union bound.
    pub mean_legit_error_bound: f64,
    /// Mean over trials of the eavesdropper's union bound.
    pub mean_eve_error_bound: f64,
    pub asymptotic_adv_svd: Option<f64>,
    pub asymptotic_advup: Option<f64>,
    /// `None` under per-trial noise or when no break guarantee exists.
    pub zf_break_threshold: Option<f64>,
    pub hardness_holds: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateReport {
    pub trials: usize,
    pub failed_trials: usize,
    pub b_success_paper: RateEstimate,
    pub b_success_symbol: RateEstimate,
    pub e_success_paper: RateEstimate,
    pub e_success_symbol: RateEstimate,
    pub adv: Option<Summary>,
    pub advup: Option<Summary>,
    pub log10_adv: Option<Summary>,
    pub power_ratio: Option<Summary>,
    pub predicted: PredictedBounds,
    /// KS distance of `√n · sigma_min(H)` to its limiting law, for square H.
    pub ks_lsv_h: Option<f64>,
}

impl AggregateReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

#[derive(Debug, Clone)]
pub struct MonteCarloRun {
    pub report: AggregateReport,
    pub records: Vec<TrialRecord>,
}

fn run_trial(config: &SimConfig, trial_id: u64) -> Result<TrialRecord> {
    let params = &config.params;
    let seed = config.master_seed;
    let sys = sample_system(params, seed, trial_id)?;
    let p = make_precoder(&config.precoder, &sys.h_svd, &sys.h)?;
    let x = sample_message(
        params.m,
        params.n_t,
        &RngStream::new(seed, trial_id, Role::Message),
    )?;
    let noise = config.noise_levels(sys.h_svd.sigma_min())?;
    let obs = sys.transmit_with_noise(&p, &x, noise, seed, trial_id)?;

    let gp_svd = svd(&sys.g.matmul(&p)?)?;
    let g_sigma = singular_values(&sys.g)?;

    // With P = V the legitimate equivalent channel is UΣ, whose singular
    // values are those of H; other precoders need their own factorization.
    let (b_est, sigma_min_hp) = match config.precoder {
        PrecoderKind::Svd => (
            legit_decode_svd(&obs.y_b, &sys.h_svd)?,
            sys.h_svd.sigma_min(),
        ),
        _ => {
            let hp_svd = svd(&sys.h.matmul(&p)?)?;
            (zf_decode_with(&obs.y_b, &hp_svd)?, hp_svd.sigma_min())
        }
    };
    let e_est = zf_decode_with(&obs.y_e, &gp_svd)?;
    let b = b_est.assess(&x, params.m, config.clamp_mode)?;
    let e = e_est.assess(&x, params.m, config.clamp_mode)?;

    let stats = AdvantageStats::from_singular_values(
        sigma_min_hp,
        gp_svd.sigma_min(),
        sys.h_svd.sigma_max(),
        g_sigma[g_sigma.len() - 1],
    )?;
    Ok(TrialRecord {
        trial_id,
        sigma_min_h: sys.h_svd.sigma_min(),
        sigma_max_h: stats.sigma_max_h,
        sigma_min_g: stats.sigma_min_g,
        sigma_min_hp: stats.sigma_min_hp,
        sigma_min_gp: stats.sigma_min_gp,
        adv: stats.adv,
        advup: stats.advup,
        log10_adv: stats.log10_adv(),
        b_success_paper: b.success_paper,
        b_success_symbol: b.success_symbol,
        e_success_paper: e.success_paper,
        e_success_symbol: e.success_symbol,
        power_ratio: transmit_power_ratio(&p, &x)?,
        failed: false,
    })
}

/// Evaluates `f(0..trials)` on the requested number of workers, returning
/// results in trial order.
pub(crate) fn run_parallel<T, F>(trials: usize, workers: Option<usize>, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(u64) -> T + Sync + Send,
{
    let job = || (0..trials as u64).into_par_iter().map(&f).collect();
    match workers {
        None => Ok(job()),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new().num_threads(n).build()?;
            Ok(pool.install(job))
        }
    }
}

/// Runs every trial, aggregates, and writes the CSV if an output path is
/// configured.
pub fn run_monte_carlo(config: &SimConfig) -> Result<MonteCarloRun> {
    config.validate()?;
    let records = run_parallel(config.trials, config.workers, |t| {
        run_trial(config, t).unwrap_or_else(|_| TrialRecord::failed(t))
    })?;
    let failed = records.iter().filter(|r| r.failed).count();
    if failed as f64 > MAX_FAILED_FRACTION * config.trials as f64 {
        return Err(Error::TooManyFailedTrials {
            failed,
            trials: config.trials,
        });
    }
    let report = aggregate(config, &records)?;
    if let Some(path) = &config.output_path {
        emit_csv(&records, path)?;
    }
    Ok(MonteCarloRun { report, records })
}

/// Aggregates trial records. Failed trials are excluded from every rate and
/// summary.
pub fn aggregate(config: &SimConfig, records: &[TrialRecord]) -> Result<AggregateReport> {
    let params = &config.params;
    let ok: Vec<&TrialRecord> = records.iter().filter(|r| !r.failed).collect();
    let n = ok.len();
    let rate =
        |f: fn(&TrialRecord) -> bool| RateEstimate::new(ok.iter().filter(|r| f(r)).count(), n);

    let mut legit_bound = 0.0;
    let mut eve_bound = 0.0;
    for r in &ok {
        let noise = config.noise_levels(r.sigma_min_h)?;
        legit_bound += tail_bound(params.n_t, noise.std_b, r.sigma_min_hp);
        eve_bound += tail_bound(params.n_t, noise.std_e, r.sigma_min_gp);
    }
    let denom = n.max(1) as f64;

    let (y, y_prime) = (params.y(), params.y_prime());
    let fixed_regime = match config.noise {
        NoiseMode::Fixed => Some(analysis::regime_report(
            params,
            config.epsilon,
            config.epsilon_prime,
        )?),
        _ => None,
    };
    let predicted = PredictedBounds {
        mean_legit_error_bound: legit_bound / denom,
        mean_eve_error_bound: eve_bound / denom,
        asymptotic_adv_svd: (config.precoder == PrecoderKind::Svd)
            .then(|| asymptotic_adv_svd(y, y_prime).ok())
            .flatten(),
        asymptotic_advup: asymptotic_advup(y, y_prime).ok(),
        zf_break_threshold: fixed_regime.and_then(|r| r.zf_threshold),
        hardness_holds: fixed_regime.map(|_| hardness_condition(params.m, params.beta, params.n_t)),
    };

    let ks_lsv_h = (params.n_r == params.n_t && n > 0).then(|| {
        let scale = (params.n_t as f64).sqrt();
        let xs: Vec<f64> = ok.iter().map(|r| scale * r.sigma_min_h).collect();
        ks_distance(&xs, |x| 1.0 - analysis::square_lsv_survival(x.max(0.0)))
    });

    Ok(AggregateReport {
        trials: records.len(),
        failed_trials: records.len() - n,
        b_success_paper: rate(|r| r.b_success_paper),
        b_success_symbol: rate(|r| r.b_success_symbol),
        e_success_paper: rate(|r| r.e_success_paper),
        e_success_symbol: rate(|r| r.e_success_symbol),
        adv: Summary::of(ok.iter().map(|r| r.adv)),
        advup: Summary::of(ok.iter().map(|r| r.advup)),
        log10_adv: Summary::of(ok.iter().map(|r| r.log10_adv)),
        power_ratio: Summary::of(ok.iter().map(|r| r.power_ratio)),
        predicted,
        ks_lsv_h,
    })
}

/// Union bound for a receiver with noise standard deviation `std`; zero
/// noise never errs.
fn tail_bound(n_t: usize, std: f64, sigma: f64) -> f64 {
    if std == 0.0 {
        return 0.0;
    }
    // legit_error_bound takes (m, alpha) with noise std m·alpha.
    analysis::legit_error_bound(n_t, 1, std, sigma)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(n: usize, precoder: PrecoderKind) -> SimConfig {
        SimConfig::new(
            SystemParams::new(n, n, n, 2, 0.05).unwrap(),
            precoder,
            20,
            11,
        )
    }

    #[test]
    fn noiseless_single_trial_succeeds_everywhere() {
        for kind in [
            PrecoderKind::Svd,
            PrecoderKind::Inverse,
            PrecoderKind::Identity,
        ] {
            let mut c = config(6, kind);
            c.trials = 1;
            c.noise = NoiseMode::Silent;
            let run = run_monte_carlo(&c).unwrap();
            let r = &run.report;
            for rate in [
                r.b_success_paper,
                r.b_success_symbol,
                r.e_success_paper,
                r.e_success_symbol,
            ] {
                assert_eq!(rate.rate, 1.0);
            }
            assert_eq!(r.predicted.mean_legit_error_bound, 0.0);
        }
    }

    #[test]
    fn config_validation() {
        let mut c = config(4, PrecoderKind::Svd);
        c.trials = 0;
        assert!(run_monte_carlo(&c).is_err());
        let mut c = config(4, PrecoderKind::Svd);
        c.epsilon = 1.0;
        assert!(c.validate().is_err());
        let mut c = config(4, PrecoderKind::Inverse);
        c.params = SystemParams::new(4, 6, 4, 2, 0.1).unwrap();
        assert!(c.validate().is_err());
        let mut c = config(4, PrecoderKind::Svd);
        c.workers = Some(0);
        assert!(c.validate().is_err());
    }

    #[test]
    fn records_are_consistent() {
        let run = run_monte_carlo(&config(5, PrecoderKind::Svd)).unwrap();
        assert_eq!(run.records.len(), 20);
        for (i, r) in run.records.iter().enumerate() {
            assert_eq!(r.trial_id, i as u64);
            assert!(!r.failed);
            assert!(r.adv <= r.advup + 1e-9);
            // SVD precoding preserves singular values.
            assert!((r.sigma_min_hp - r.sigma_min_h).abs() < 1e-10 * r.sigma_max_h);
            assert!((r.sigma_min_gp - r.sigma_min_g).abs() < 1e-10 * r.sigma_max_h.max(1.0));
            assert!((r.power_ratio - 1.0).abs() < 1e-10);
            assert_eq!(r.log10_adv, r.adv.log10());
        }
    }

    #[test]
    fn worker_count_does_not_change_results() {
        let mut c = config(6, PrecoderKind::Identity);
        c.noise = NoiseMode::CorrectnessCap;
        c.workers = Some(1);
        let a = run_monte_carlo(&c).unwrap();
        c.workers = Some(3);
        let b = run_monte_carlo(&c).unwrap();
        assert_eq!(a.records, b.records);
        assert_eq!(a.report, b.report);
    }

    #[test]
    fn noise_mode_parsing() {
        assert_eq!(
            "cap".parse::<NoiseMode>().unwrap(),
            NoiseMode::CorrectnessCap
        );
        assert_eq!("fixed".parse::<NoiseMode>().unwrap(), NoiseMode::Fixed);
        assert_eq!("silent".parse::<NoiseMode>().unwrap(), NoiseMode::Silent);
        assert!("loud".parse::<NoiseMode>().is_err());
    }

    #[test]
    fn predictions_follow_config() {
        let c = SimConfig::new(
            SystemParams::new(4, 8, 32, 2, 0.1).unwrap(),
            PrecoderKind::Svd,
            5,
            3,
        );
        let p = run_monte_carlo(&c).unwrap().report.predicted;
        let expected = asymptotic_adv_svd(2.0, 8.0).unwrap();
        assert_eq!(p.asymptotic_adv_svd, Some(expected));
        assert_eq!(p.hardness_holds, Some(false));
        assert!(p.zf_break_threshold.is_some());
    }
}
