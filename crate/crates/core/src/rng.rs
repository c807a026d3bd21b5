//! Deterministic random streams keyed by `(master_seed, trial_id, role)`.
//!
//! Each stream is a ChaCha8 generator whose key is derived from the master
//! seed and whose 64-bit stream id encodes the trial and role. Streams share
//! no state, so trials can be evaluated in any order or in parallel.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Role {
    ChannelH,
    ChannelG,
    Message,
    NoiseB,
    NoiseE,
}

impl Role {
    pub const ALL: [Role; 5] = [
        Role::ChannelH,
        Role::ChannelG,
        Role::Message,
        Role::NoiseB,
        Role::NoiseE,
    ];

    fn tag(self) -> u64 {
        match self {
            Role::ChannelH => 0,
            Role::ChannelG => 1,
            Role::Message => 2,
            Role::NoiseB => 3,
            Role::NoiseE => 4,
        }
    }
}

const ROLE_BITS: u32 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RngStream {
    pub master_seed: u64,
    pub trial_id: u64,
    pub role: Role,
}

impl RngStream {
    pub fn new(master_seed: u64, trial_id: u64, role: Role) -> Self {
        Self {
            master_seed,
            trial_id,
            role,
        }
    }

    /// A fresh generator positioned at the start of this stream.
    pub fn rng(&self) -> ChaCha8Rng {
        let mut key = [0u8; 32];
        let mut state = self.master_seed;
        for chunk in key.chunks_exact_mut(8) {
            chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
        }
        let mut rng = ChaCha8Rng::from_seed(key);
        debug_assert!(self.trial_id < (1 << (64 - ROLE_BITS)));
        rng.set_stream((self.trial_id << ROLE_BITS) | self.role.tag());
        rng
    }
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn gaussian_vector(len: usize, variance: f64, stream: &RngStream) -> Result<Vec<f64>> {
    if !(variance >= 0.0 && variance.is_finite()) {
        return Err(Error::invalid(format!(
            "variance must be finite and non-negative, got {variance}"
        )));
    }
    let std = variance.sqrt();
    let mut rng = stream.rng();
    Ok((0..len)
        .map(|_| std * rng.sample::<f64, _>(StandardNormal))
        .collect())
}

/// `rows x cols` matrix with i.i.d. N(0, variance) entries, filled row by row.
pub fn gaussian_matrix(
    rows: usize,
    cols: usize,
    variance: f64,
    stream: &RngStream,
) -> Result<Matrix> {
    let data = gaussian_vector(rows * cols, variance, stream)?;
    Matrix::new(rows, cols, data)
}

/// Uniform symbols from the constellation `{0, 1, ..., m-1}`.
pub fn sample_message(m: u32, n_t: usize, stream: &RngStream) -> Result<Vec<i64>> {
    if m < 2 {
        return Err(Error::invalid(format!(
            "constellation size must be at least 2, got {m}"
        )));
    }
    if n_t == 0 {
        return Err(Error::invalid("message length must be positive"));
    }
    let mut rng = stream.rng();
    Ok((0..n_t)
        .map(|_| i64::from(rng.random_range(0..m)))
        .collect())
}
