//! Simulation of the massive-MIMO physical-layer cryptosystem.
//!
//! A transmitter precodes an integer message for a legitimate receiver over a
//! Gaussian MIMO channel `H`, while an eavesdropper observes the same
//! transmission through its own channel `G`. This crate provides:
//!
//! - [`matrix`]: dense real linear algebra (SVD, pseudo-inverse).
//! - [`rng`]: per-trial, per-role deterministic random streams.
//! - [`channel`]: the wiretap system model and noisy transmission.
//! - [`precode`]: precoders, the legitimate divide-and-round decoder, the
//!   zero-forcing attack and an exhaustive maximum-likelihood oracle.
//! - [`analysis`]: closed-form error bounds, regime conditions, advantage
//!   ratios and random-matrix singular-value laws.
//! - [`experiments`]: the Monte-Carlo harness and its CSV/JSON/SVG outputs.

// Negated float comparisons are how NaN inputs get rejected; the
// Golub-Kahan loops mirror the textbook index form.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod analysis;
pub mod channel;
pub mod error;
pub mod experiments;
pub mod matrix;
pub mod precode;
pub mod rng;

pub use analysis::{AdvantageStats, Edge, RegimeReport};
pub use channel::{NoiseLevels, Observation, SystemParams, WiretapSystem};
pub use error::{Error, Result};
pub use experiments::{AggregateReport, NoiseMode, SimConfig, TrialRecord};
pub use matrix::{Matrix, SvdFactors};
pub use precode::{DecodeResult, PrecoderKind, SymbolEstimate};
pub use rng::{RngStream, Role};
