//! The wiretap system: legitimate channel `H` (`n_r x n_t`), eavesdropper
//! channel `G` (`n_r' x n_t`), both with i.i.d. N(0, 1) entries, and additive
//! Gaussian receiver noise of variance `m²α²` (legitimate) and `m²β²`
//! (eavesdropper).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{svd, Matrix, SvdFactors};
use crate::rng::{gaussian_matrix, gaussian_vector, RngStream, Role};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    pub n_t: usize,
    pub n_r: usize,
    pub n_r_prime: usize,
    pub m: u32,
    pub alpha: f64,
    pub beta: f64,
}

impl SystemParams {
    /// Parameters with `beta = alpha`.
    pub fn new(n_t: usize, n_r: usize, n_r_prime: usize, m: u32, alpha: f64) -> Result<Self> {
        Self::with_beta(n_t, n_r, n_r_prime, m, alpha, alpha)
    }

    pub fn with_beta(
        n_t: usize,
        n_r: usize,
        n_r_prime: usize,
        m: u32,
        alpha: f64,
        beta: f64,
    ) -> Result<Self> {
        let p = Self {
            n_t,
            n_r,
            n_r_prime,
            m,
            alpha,
            beta,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_t == 0 || self.n_r == 0 || self.n_r_prime == 0 {
            return Err(Error::invalid("antenna counts must be positive"));
        }
        if self.n_r < self.n_t || self.n_r_prime < self.n_t {
            return Err(Error::invalid(format!(
                "receive antennas must be at least n_t = {} (got n_r = {}, n_r' = {})",
                self.n_t, self.n_r, self.n_r_prime
            )));
        }
        if self.m < 2 {
            return Err(Error::invalid(format!(
                "constellation size must be at least 2, got {}",
                self.m
            )));
        }
        for (name, v) in [("alpha", self.alpha), ("beta", self.beta)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::invalid(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }

    /// `y = n_r / n_t`.
    pub fn y(&self) -> f64 {
        self.n_r as f64 / self.n_t as f64
    }

    /// `y' = n_r' / n_t`.
    pub fn y_prime(&self) -> f64 {
        self.n_r_prime as f64 / self.n_t as f64
    }

    pub fn noise(&self) -> NoiseLevels {
        let m = f64::from(self.m);
        NoiseLevels {
            std_b: m * self.alpha,
            std_e: m * self.beta,
        }
    }
}

/// Per-receiver noise standard deviations (`mα`, `mβ`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseLevels {
    pub std_b: f64,
    pub std_e: f64,
}

impl NoiseLevels {
    pub const SILENT: NoiseLevels = NoiseLevels {
        std_b: 0.0,
        std_e: 0.0,
    };
}

#[derive(Debug, Clone)]
pub struct WiretapSystem {
    pub params: SystemParams,
    pub h: Matrix,
    pub g: Matrix,
    pub h_svd: SvdFactors,
}

impl WiretapSystem {
    /// Builds a system from explicit channels.
    pub fn from_channels(params: SystemParams, h: Matrix, g: Matrix) -> Result<Self> {
        params.validate()?;
        if h.rows() != params.n_r || h.cols() != params.n_t {
            return Err(Error::dims(format!(
                "H is {}x{}, expected {}x{}",
                h.rows(),
                h.cols(),
                params.n_r,
                params.n_t
            )));
        }
        if g.rows() != params.n_r_prime || g.cols() != params.n_t {
            return Err(Error::dims(format!(
                "G is {}x{}, expected {}x{}",
                g.rows(),
                g.cols(),
                params.n_r_prime,
                params.n_t
            )));
        }
        let h_svd = svd(&h)?;
        Ok(Self {
            params,
            h,
            g,
            h_svd,
        })
    }

    /// Sends `P·x` over both channels with the noise implied by `params`.
    pub fn transmit(
        &self,
        p: &Matrix,
        x: &[i64],
        master_seed: u64,
        trial_id: u64,
    ) -> Result<Observation> {
        self.transmit_with_noise(p, x, self.params.noise(), master_seed, trial_id)
    }

    /// Sends `P·x` with explicit noise levels. Noise is drawn from the
    /// `NoiseB` and `NoiseE` streams of the trial.
    pub fn transmit_with_noise(
        &self,
        p: &Matrix,
        x: &[i64],
        noise: NoiseLevels,
        master_seed: u64,
        trial_id: u64,
    ) -> Result<Observation> {
        let n_t = self.params.n_t;
        if p.rows() != n_t || p.cols() != n_t {
            return Err(Error::dims(format!(
                "precoder is {}x{}, expected {n_t}x{n_t}",
                p.rows(),
                p.cols()
            )));
        }
        if x.len() != n_t {
            return Err(Error::dims(format!(
                "message has {} symbols, expected {n_t}",
                x.len()
            )));
        }
        let m = i64::from(self.params.m);
        if let Some(bad) = x.iter().find(|&&v| v < 0 || v >= m) {
            return Err(Error::invalid(format!(
                "symbol {bad} outside constellation {{0..{}}}",
                m - 1
            )));
        }

        let xf: Vec<f64> = x.iter().map(|&v| v as f64).collect();
        let tx = p.matvec(&xf)?;
        let e = gaussian_vector(
            self.params.n_r,
            noise.std_b * noise.std_b,
            &RngStream::new(master_seed, trial_id, Role::NoiseB),
        )?;
        let e_prime = gaussian_vector(
            self.params.n_r_prime,
            noise.std_e * noise.std_e,
            &RngStream::new(master_seed, trial_id, Role::NoiseE),
        )?;

        let y_b = add(self.h.matvec(&tx)?, &e);
        let y_e = add(self.g.matvec(&tx)?, &e_prime);
        Ok(Observation {
            y_b,
            y_e,
            x_true: x.to_vec(),
            e_b_norm: inf_norm(&e),
            e_e_norm: inf_norm(&e_prime),
        })
    }
}

fn add(mut a: Vec<f64>, b: &[f64]) -> Vec<f64> {
    for (x, y) in a.iter_mut().zip(b) {
        *x += y;
    }
    a
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |acc, x| acc.max(x.abs()))
}

/// Received vectors for one codeword.
#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    pub y_b: Vec<f64>,
    pub y_e: Vec<f64>,
    pub x_true: Vec<i64>,
    pub e_b_norm: f64,
    pub e_e_norm: f64,
}

/// Draws fresh `H` and `G` for one trial from the `ChannelH` and `ChannelG`
/// streams.
pub fn sample_system(
    params: &SystemParams,
    master_seed: u64,
    trial_id: u64,
) -> Result<WiretapSystem> {
    params.validate()?;
    let h = gaussian_matrix(
        params.n_r,
        params.n_t,
        1.0,
        &RngStream::new(master_seed, trial_id, Role::ChannelH),
    )?;
    let g = gaussian_matrix(
        params.n_r_prime,
        params.n_t,
        1.0,
        &RngStream::new(master_seed, trial_id, Role::ChannelG),
    )?;
    WiretapSystem::from_channels(*params, h, g)
}

pub fn transmit(
    sys: &WiretapSystem,
    p: &Matrix,
    x: &[i64],
    master_seed: u64,
    trial_id: u64,
) -> Result<Observation> {
    sys.transmit(p, x, master_seed, trial_id)
}

/// `‖P·x‖² / ‖x‖²`, or 1 for the zero message.
pub fn transmit_power_ratio(p: &Matrix, x: &[i64]) -> Result<f64> {
    let xf: Vec<f64> = x.iter().map(|&v| v as f64).collect();
    let px = p.matvec(&xf)?;
    let denom: f64 = xf.iter().map(|v| v * v).sum();
    if denom == 0.0 {
        return Ok(1.0);
    }
    Ok(px.iter().map(|v| v * v).sum::<f64>() / denom)
}
