//! Link-level simulator for dual-mode index-modulated 3D-OFDM.
//!
//! The transmit chain ([`mapper`]) turns sub-block bits into a `3 x n`
//! matrix of 3-D constellation points. [`channel`] applies entrywise Rayleigh
//! fading and AWGN. At the receiver, [`rx`] provides zero-forcing
//! equalization, the neural-detector features and the exhaustive ML
//! detector, and [`nn`] holds the neural detector with its trainer.
//! [`harness`] runs BER sweeps, benchmarks and training jobs.

pub mod block;
pub mod channel;
pub mod config;
pub mod error;
pub mod harness;
pub mod link;
pub mod mapper;
pub mod nn;
pub mod rx;

pub use error::{Error, Result};
