use serde::{Deserialize, Serialize};

use super::stats::{empirical_survival, ks_distance};
use super::{run_monte_carlo, run_parallel, AggregateReport, NoiseMode, SimConfig, TrialRecord};
use crate::analysis::{asymptotic_edge, square_lsv_survival, Edge};
use crate::channel::SystemParams;
use crate::error::{Error, Result};
use crate::matrix::{sigma_extreme, singular_values};
use crate::precode::PrecoderKind;
use crate::rng::{gaussian_matrix, RngStream, Role};

/// Square systems under the inverse precoder.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fig1Report {
    pub n: usize,
    pub trials: usize,
    /// `log10(n²)`.
    pub reference_log10: f64,
    pub mean_log10_adv: f64,
    pub aggregate: AggregateReport,
    #[serde(skip)]
    pub records: Vec<TrialRecord>,
}

impl Fig1Report {
    /// `log10(adv)` of every completed trial, in trial order.
    pub fn log10_adv_series(&self) -> Vec<f64> {
        self.records
            .iter()
            .filter(|r| !r.failed)
            .map(|r| r.log10_adv)
            .collect()
    }

    pub fn fraction_within(&self, lo: f64, hi: f64) -> f64 {
        let s = self.log10_adv_series();
        s.iter().filter(|&&v| v >= lo && v <= hi).count() as f64 / s.len() as f64
    }
}

/// Advantage of the inverse precoder over `trials` square `n x n` systems.
/// The advantage does not depend on the noise, so trials run noiseless.
pub fn fig1_experiment(
    n: usize,
    trials: usize,
    master_seed: u64,
    workers: Option<usize>,
) -> Result<Fig1Report> {
    if n < 2 {
        return Err(Error::invalid(format!("n must be at least 2, got {n}")));
    }
    let mut config = SimConfig::new(
        SystemParams::new(n, n, n, 2, 1.0)?,
        PrecoderKind::Inverse,
        trials,
        master_seed,
    );
    config.noise = NoiseMode::Silent;
    config.workers = workers;
    let run = run_monte_carlo(&config)?;
    let mean_log10_adv = run.report.log10_adv.map_or(f64::NAN, |s| s.mean);
    Ok(Fig1Report {
        n,
        trials,
        reference_log10: 2.0 * (n as f64).log10(),
        mean_log10_adv,
        aggregate: run.report,
        records: run.records,
    })
}

/// Extreme squared singular values of `(y'·n_t) x n_t` Gaussian matrices,
/// scaled by the row count, against their almost-sure limits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeLawReport {
    pub n_t: usize,
    pub n_r_prime: usize,
    pub y_prime: f64,
    pub trials: usize,
    pub mean_min_edge: f64,
    pub mean_max_edge: f64,
    pub predicted_min: f64,
    pub predicted_max: f64,
    /// Relative deviation of the mean from the limit; `None` for the
    /// degenerate zero limit at `y' = 1`.
    pub rel_dev_min: Option<f64>,
    pub rel_dev_max: f64,
}

pub fn edge_law_experiment(
    n_t: usize,
    y_prime: f64,
    trials: usize,
    master_seed: u64,
    workers: Option<usize>,
) -> Result<EdgeLawReport> {
    if !(y_prime >= 1.0 && y_prime.is_finite()) {
        return Err(Error::invalid(format!(
            "y' must be finite and at least 1, got {y_prime}"
        )));
    }
    if n_t == 0 || trials == 0 {
        return Err(Error::invalid("n_t and trials must be positive"));
    }
    let n_r_prime = (y_prime * n_t as f64).round() as usize;
    let edges = run_parallel(trials, workers, |t| {
        let g = gaussian_matrix(
            n_r_prime,
            n_t,
            1.0,
            &RngStream::new(master_seed, t, Role::ChannelG),
        )?;
        let (hi, lo) = sigma_extreme(&g)?;
        Ok::<_, Error>((lo * lo / n_r_prime as f64, hi * hi / n_r_prime as f64))
    })?
    .into_iter()
    .collect::<Result<Vec<_>>>()?;

    let mean_min_edge = edges.iter().map(|e| e.0).sum::<f64>() / trials as f64;
    let mean_max_edge = edges.iter().map(|e| e.1).sum::<f64>() / trials as f64;
    let ratio = n_r_prime as f64 / n_t as f64;
    let predicted_min = asymptotic_edge(ratio, Edge::Min);
    let predicted_max = asymptotic_edge(ratio, Edge::Max);
    Ok(EdgeLawReport {
        n_t,
        n_r_prime,
        y_prime: ratio,
        trials,
        mean_min_edge,
        mean_max_edge,
        predicted_min,
        predicted_max,
        rel_dev_min: (predicted_min > 0.0).then(|| mean_min_edge / predicted_min - 1.0),
        rel_dev_max: mean_max_edge / predicted_max - 1.0,
    })
}

/// Distribution of `√n · sigma_n` for square Gaussian matrices against the
/// limit `P[√n·sigma_n ≥ x] = exp(-x²/2 - x)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LsvLawReport {
    pub n: usize,
    pub trials: usize,
    pub ks_distance: f64,
    pub survival_at_0: f64,
    pub survival_at_1: f64,
    pub predicted_at_1: f64,
    #[serde(skip)]
    pub samples: Vec<f64>,
}

/// Smallest size at which the limiting law is used as a prediction.
pub const LSV_MIN_N: usize = 50;

pub fn lsv_law_experiment(
    n: usize,
    trials: usize,
    master_seed: u64,
    workers: Option<usize>,
) -> Result<LsvLawReport> {
    if n < LSV_MIN_N {
        return Err(Error::invalid(format!(
            "the least-singular-value law is asymptotic; need n >= {LSV_MIN_N}, got {n}"
        )));
    }
    if trials == 0 {
        return Err(Error::invalid("trials must be positive"));
    }
    let scale = (n as f64).sqrt();
    let samples = run_parallel(trials, workers, |t| {
        let m = gaussian_matrix(n, n, 1.0, &RngStream::new(master_seed, t, Role::ChannelH))?;
        let s = singular_values(&m)?;
        Ok::<_, Error>(scale * s[n - 1])
    })?
    .into_iter()
    .collect::<Result<Vec<_>>>()?;

    Ok(LsvLawReport {
        n,
        trials,
        ks_distance: ks_distance(&samples, |x| 1.0 - square_lsv_survival(x.max(0.0))),
        survival_at_0: empirical_survival(&samples, 0.0),
        survival_at_1: empirical_survival(&samples, 1.0),
        predicted_at_1: square_lsv_survival(1.0),
        samples,
    })
}
