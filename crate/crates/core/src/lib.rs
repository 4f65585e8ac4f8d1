//! Generative adversarial training under a total-variation budget.
//!
//! The crate has five layers:
//!
//! - [`nn`]: a small dense core (tensors, MLPs with reverse-mode gradients,
//!   Adam, finite-difference checks, checkpoints).
//! - [`distributions`]: dataset samplers, latent priors, the spike-and-slab
//!   noise channel `(1 - gamma) * spike_at_0 + gamma * slab` and exact
//!   finite-support convolution.
//! - [`divergence`]: exact total variation / Jensen-Shannon divergence on
//!   finite supports and histogram estimators for samples.
//! - [`game`]: exact analysis of the minimax game on finite supports
//!   (optimal discriminator, `C(G)`, grid verification of the `-log 4`
//!   optimum, channel and mixture bound chains).
//! - [`trainer`]: the multi-dataset training loop with per-dataset noise
//!   injection and budget evaluation.
//!
//! [`cli`] wires everything into the `tvgan` binary.

// `!(x > 0.0)` style checks are used on purpose: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod distributions;
pub mod divergence;
mod error;
pub mod game;
pub mod nn;
pub mod trainer;

pub use error::{Error, Result};

/// Clamp floor applied to every log argument in the adversarial objectives.
pub const LOG_CLAMP: f64 = 1e-12;

/// `ln(clamp(x, LOG_CLAMP, 1))` and its derivative with respect to `x`
/// (zero where the clamp is active).
pub(crate) fn clamped_log(x: f64) -> (f64, f64) {
    if x < LOG_CLAMP {
        (LOG_CLAMP.ln(), 0.0)
    } else if x > 1.0 {
        (0.0, 0.0)
    } else {
        (x.ln(), 1.0 / x)
    }
}
