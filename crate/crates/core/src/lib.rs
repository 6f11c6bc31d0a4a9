//! Link-level MIMO-OFDM precoding lab.
//!
//! Simulated single-user MIMO-OFDM environments (flat and two-tap
//! frequency-selective block fading), an uncoded BER link chain, Grassmannian
//! codebooks, analytic precoders, and DQN / DDPG agents that learn to pick
//! precoders from BER feedback alone.
//!
//! The linear-algebra and network layers are generic over [`Real`]; the
//! aliases below fix the double-precision instantiation used everywhere else.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod agents;
pub mod baselines;
pub mod channel;
pub mod codebook;
pub mod error;
pub mod harness;
pub mod link;
pub mod neuralnet;
pub mod numerics;
pub mod scalar;

pub use error::{Error, Result};
pub use scalar::Real;

/// Double-precision complex scalar.
pub type C64 = num_complex::Complex<f64>;
/// Double-precision complex matrix.
pub type CMat = numerics::CMatrix<f64>;
/// Double-precision complex vector.
pub type CVec = numerics::CVector<f64>;
/// Double-precision network parameters.
pub type MlpParams = neuralnet::Mlp<f64>;
