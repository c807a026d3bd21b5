//! Closed-form quantities: union-bound error probabilities, the hardness
//! and zero-forcing break conditions, advantage ratios and the asymptotic
//! singular-value laws of Gaussian matrices.
//!
//! All logarithms are natural. The Gaussian tail bound used throughout is
//! `P(|w| ≥ x) ≤ exp(-x²/2)` for standard `w`, so the error bounds are
//! deliberately loose.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::channel::SystemParams;
use crate::error::{Error, Result};
use crate::matrix::{sigma_extreme, Matrix, RANK_TOLERANCE};

/// `min(1, n_t · exp(-sigma² / (8 m² α²)))`.
fn union_tail_bound(n_t: usize, m: f64, alpha: f64, sigma: f64) -> f64 {
    let noise_var = m * m * alpha * alpha;
    (n_t as f64 * (-(sigma * sigma) / (8.0 * noise_var)).exp()).min(1.0)
}

/// Upper bound on the legitimate receiver's decoding error probability
/// given `sigma_min(H)` (or `sigma_min(HP)` for a general precoder).
pub fn legit_error_bound(n_t: usize, m: u32, alpha: f64, sigma_min_h: f64) -> f64 {
    union_tail_bound(n_t, f64::from(m), alpha, sigma_min_h)
}

/// Upper bound on the zero-forcing eavesdropper's error probability given
/// `sigma_min(G)` (or `sigma_min(GP)`).
pub fn eve_error_bound(n_t: usize, m: u32, alpha: f64, sigma_min_g: f64) -> f64 {
    union_tail_bound(n_t, f64::from(m), alpha, sigma_min_g)
}

/// Largest `m²α²` for which [`legit_error_bound`] is at most `epsilon`:
/// `sigma_min_h² / (8 ln(n_t / epsilon))`.
pub fn correctness_noise_cap(n_t: usize, epsilon: f64, sigma_min_h: f64) -> Result<f64> {
    if !(epsilon > 0.0 && epsilon < n_t as f64) {
        return Err(Error::invalid(format!(
            "epsilon must lie in (0, n_t = {n_t}), got {epsilon}"
        )));
    }
    Ok(sigma_min_h * sigma_min_h / (8.0 * (n_t as f64 / epsilon).ln()))
}

/// The minimum noise level `mα > √n_t` under which eavesdropper decoding
/// was conjectured hard.
pub fn hardness_condition(m: u32, alpha: f64, n_t: usize) -> bool {
    f64::from(m) * alpha > (n_t as f64).sqrt()
}

/// Largest `m²α²` at which zero-forcing provably decodes with error at most
/// `epsilon` for large `n_t`:
/// `n_r' ((1 - √(1/y'))² - epsilon') / (8 ln(2 n_t / epsilon))`.
pub fn zf_break_threshold(
    n_t: usize,
    n_r_prime: usize,
    epsilon: f64,
    epsilon_prime: f64,
) -> Result<f64> {
    if n_t == 0 || n_r_prime < n_t {
        return Err(Error::invalid(format!(
            "need n_r' >= n_t >= 1, got n_t = {n_t}, n_r' = {n_r_prime}"
        )));
    }
    if !(epsilon > 0.0 && epsilon < 2.0 * n_t as f64) {
        return Err(Error::invalid(format!(
            "epsilon must lie in (0, 2 n_t), got {epsilon}"
        )));
    }
    if !(epsilon_prime > 0.0) {
        return Err(Error::invalid(format!(
            "epsilon' must be positive, got {epsilon_prime}"
        )));
    }
    let y_prime = n_r_prime as f64 / n_t as f64;
    let factor = asymptotic_edge(y_prime, Edge::Min) - epsilon_prime;
    if factor <= 0.0 {
        return Err(Error::invalid(format!(
            "epsilon' = {epsilon_prime} leaves no margin below the edge (1 - √(1/y'))² = {:.6} at y' = {y_prime}",
            asymptotic_edge(y_prime, Edge::Min)
        )));
    }
    Ok(n_r_prime as f64 * factor / (8.0 * (2.0 * n_t as f64 / epsilon).ln()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdvantageStats {
    /// `sigma_min(HP)² / sigma_min(GP)²`.
    pub adv: f64,
    /// `sigma_max(H)² / sigma_min(G)²`, a precoder-independent upper bound.
    pub advup: f64,
    pub sigma_min_hp: f64,
    pub sigma_min_gp: f64,
    pub sigma_max_h: f64,
    pub sigma_min_g: f64,
}

impl AdvantageStats {
    pub fn from_singular_values(
        sigma_min_hp: f64,
        sigma_min_gp: f64,
        sigma_max_h: f64,
        sigma_min_g: f64,
    ) -> Result<Self> {
        for (hi, lo) in [
            (sigma_max_h, sigma_min_hp),
            (sigma_max_h, sigma_min_gp),
            (sigma_max_h, sigma_min_g),
        ] {
            if !(lo > 0.0) {
                return Err(Error::RankDeficient {
                    sigma_min: lo,
                    sigma_max: hi,
                });
            }
        }
        Ok(Self {
            adv: (sigma_min_hp / sigma_min_gp).powi(2),
            advup: (sigma_max_h / sigma_min_g).powi(2),
            sigma_min_hp,
            sigma_min_gp,
            sigma_max_h,
            sigma_min_g,
        })
    }

    /// `log10(adv)`.
    pub fn log10_adv(&self) -> f64 {
        self.adv.log10()
    }
}

/// Advantage of the legitimate receiver over a zero-forcing eavesdropper
/// when the transmitter uses precoder `p`.
pub fn advantage(h: &Matrix, g: &Matrix, p: &Matrix) -> Result<AdvantageStats> {
    let (p_max, p_min) = sigma_extreme(p)?;
    if !p.is_square() || !(p_min > RANK_TOLERANCE * p_max) {
        return Err(Error::RankDeficient {
            sigma_min: p_min,
            sigma_max: p_max,
        });
    }
    let (_, sigma_min_hp) = sigma_extreme(&h.matmul(p)?)?;
    let (_, sigma_min_gp) = sigma_extreme(&g.matmul(p)?)?;
    let (sigma_max_h, _) = sigma_extreme(h)?;
    let (_, sigma_min_g) = sigma_extreme(g)?;
    AdvantageStats::from_singular_values(sigma_min_hp, sigma_min_gp, sigma_max_h, sigma_min_g)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Edge {
    Min,
    Max,
}

/// Almost-sure limit of `sigma²/s` for the smallest or largest singular
/// value of an `s x t` Gaussian matrix with `s/t → y`: `(1 ∓ √(1/y))²`.
/// `y = ∞` is accepted.
pub fn asymptotic_edge(y: f64, which: Edge) -> f64 {
    let r = (1.0 / y).sqrt();
    match which {
        Edge::Min => (1.0 - r).powi(2),
        Edge::Max => (1.0 + r).powi(2),
    }
}

fn check_ratios(y: f64, y_prime: f64) -> Result<()> {
    if !(y >= 1.0) || !(y_prime >= 1.0) {
        return Err(Error::invalid(format!(
            "aspect ratios must be at least 1, got y = {y}, y' = {y_prime}"
        )));
    }
    if y_prime == 1.0 {
        return Err(Error::invalid(
            "y' = 1 makes the eavesdropper's smallest singular value vanish asymptotically",
        ));
    }
    Ok(())
}

/// Limit of the advantage under SVD precoding: `(√y - 1)² / (√y' - 1)²`.
/// Infinite ratios are accepted where the limit is finite.
pub fn asymptotic_adv_svd(y: f64, y_prime: f64) -> Result<f64> {
    check_ratios(y, y_prime)?;
    if y_prime.is_infinite() {
        return Ok(if y.is_infinite() { f64::NAN } else { 0.0 });
    }
    Ok(((y.sqrt() - 1.0) / (y_prime.sqrt() - 1.0)).powi(2))
}

/// Limit of `advup`: `((√y + 1) / (√y' - 1))²`.
pub fn asymptotic_advup(y: f64, y_prime: f64) -> Result<f64> {
    check_ratios(y, y_prime)?;
    if y_prime.is_infinite() {
        return Ok(if y.is_infinite() { f64::NAN } else { 0.0 });
    }
    Ok(((y.sqrt() + 1.0) / (y_prime.sqrt() - 1.0)).powi(2))
}

/// Limiting survival function of `√t · sigma_t` for a square `t x t`
/// Gaussian matrix: `exp(-x²/2 - x)`.
pub fn square_lsv_survival(x: f64) -> f64 {
    (-(x * x) / 2.0 - x).exp()
}

/// Whether a parameter point satisfies the hardness condition while
/// zero-forcing still provably decodes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegimeReport {
    pub hardness_holds: bool,
    /// `None` when `epsilon'` leaves no margin below the singular-value
    /// edge (for example `n_r' = n_t`), so no break guarantee exists.
    pub zf_threshold: Option<f64>,
    pub zf_breaks: bool,
    pub contradiction: bool,
    pub epsilon: f64,
    pub epsilon_prime: f64,
}

impl RegimeReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

impl fmt::Display for RegimeReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "hardness_holds: {}", self.hardness_holds)?;
        match self.zf_threshold {
            Some(t) => writeln!(f, "zf_threshold:   {t:.6}")?,
            None => writeln!(f, "zf_threshold:   none (epsilon' exceeds the edge)")?,
        }
        writeln!(f, "zf_breaks:      {}", self.zf_breaks)?;
        writeln!(f, "contradiction:  {}", self.contradiction)?;
        writeln!(f, "epsilon:        {}", self.epsilon)?;
        write!(f, "epsilon_prime:  {}", self.epsilon_prime)
    }
}

pub fn regime_report(
    params: &SystemParams,
    epsilon: f64,
    epsilon_prime: f64,
) -> Result<RegimeReport> {
    params.validate()?;
    let noise_var = (f64::from(params.m) * params.beta).powi(2);
    regime_report_for(
        params.n_t,
        params.n_r_prime,
        noise_var,
        hardness_condition(params.m, params.beta, params.n_t),
        epsilon,
        epsilon_prime,
    )
}

/// Regime evaluation for a raw noise power `m²α²`.
pub(crate) fn regime_report_for(
    n_t: usize,
    n_r_prime: usize,
    noise_var: f64,
    hardness_holds: bool,
    epsilon: f64,
    epsilon_prime: f64,
) -> Result<RegimeReport> {
    if !(epsilon > 0.0 && epsilon < 2.0 * n_t as f64) {
        return Err(Error::invalid(format!(
            "epsilon must lie in (0, 2 n_t), got {epsilon}"
        )));
    }
    let y_prime = n_r_prime as f64 / n_t as f64;
    let zf_threshold =
        if asymptotic_edge(y_prime, Edge::Min) - epsilon_prime <= 0.0 && epsilon_prime > 0.0 {
            None
        } else {
            Some(zf_break_threshold(n_t, n_r_prime, epsilon, epsilon_prime)?)
        };
    let zf_breaks = zf_threshold.is_some_and(|t| noise_var <= t);
    Ok(RegimeReport {
        hardness_holds,
        zf_threshold,
        zf_breaks,
        contradiction: hardness_holds && zf_breaks,
        epsilon,
        epsilon_prime,
    })
}
