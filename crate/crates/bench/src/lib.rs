//! Shared fixtures for the criterion benchmarks under `benches/`.

use mmplc_core::rng::gaussian_matrix;
use mmplc_core::{Matrix, RngStream, Role};

/// Unit-variance Gaussian matrix, fixed per `(rows, cols)`.
pub fn gaussian(rows: usize, cols: usize) -> Matrix {
    let stream = RngStream::new(0xbe_4c, (rows * 100_000 + cols) as u64, Role::ChannelG);
    gaussian_matrix(rows, cols, 1.0, &stream).expect("valid shape")
}
