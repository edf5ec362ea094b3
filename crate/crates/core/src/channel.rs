//! Rayleigh fading channel, AWGN and random streams.
//!
//! Each entry of the `3 x n` fading matrix is an independent circularly
//! symmetric complex Gaussian with unit variance, applied entrywise:
//! `y(i, phi) = h(i, phi) x(i, phi) + z(i, phi)` with `z` complex Gaussian of
//! variance `N0`.
//!
//! SNR is `Es / N0` where `Es = 1` is the average per-subcarrier energy of a
//! normalized constellation set, so `N0 = 10^(-snr_db / 10)`.
//!
//! # Random streams
//!
//! [`RngStream`] is ChaCha20 (20 rounds, RFC 7539 block function as
//! implemented by `rand_chacha`). The 256-bit key is expanded from the 64-bit
//! master seed with `SeedableRng::seed_from_u64` (PCG32 output, as specified
//! by `rand_core`), and the 64-bit stream id is the ChaCha stream (nonce)
//! word. The output is therefore a pure function of `(master_seed, stream_id)`
//! on every platform.
//!
//! Draw order within a stream for one simulated sub-block is: one `u64` for
//! the message, then the `3n` fading entries in column-major order (real part
//! then imaginary part), then the `3n` noise entries in the same order.
//! Gaussians come from `rand_distr::StandardNormal`.

use num_complex::Complex64;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::block::{BlockMatrix, COMPONENTS};
use crate::config::SystemConfig;
use crate::error::{Error, Result};
use crate::mapper::SymbolBlock;

/// Stream ids with this bit set are reserved for training data.
pub const TRAINING_STREAM_TAG: u64 = 1 << 63;
/// Stream id reserved for weight initialization.
pub const INIT_STREAM_ID: u64 = 1 << 62;

/// A reproducible random stream keyed by `(master_seed, stream_id)`.
#[derive(Debug, Clone)]
pub struct RngStream {
    master_seed: u64,
    stream_id: u64,
    rng: ChaCha20Rng,
}

impl RngStream {
    pub fn new(master_seed: u64, stream_id: u64) -> Self {
        let mut rng = ChaCha20Rng::seed_from_u64(master_seed);
        rng.set_stream(stream_id);
        Self { master_seed, stream_id, rng }
    }

    /// Stream for a chunk of simulated blocks at one SNR point.
    pub fn simulation(master_seed: u64, snr_index: u32, chunk: u32) -> Self {
        Self::new(master_seed, ((snr_index as u64) << 32) | chunk as u64)
    }

    /// Stream for one training batch.
    pub fn training(master_seed: u64, epoch: u32, batch: u32) -> Self {
        Self::new(
            master_seed,
            TRAINING_STREAM_TAG | ((epoch as u64) << 32) | batch as u64,
        )
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    /// Uniform `bits`-bit message from the top bits of one `u64` draw.
    pub fn message(&mut self, bits: usize) -> u64 {
        assert!((1..=64).contains(&bits));
        self.rng.next_u64() >> (64 - bits)
    }

    pub fn standard_normal(&mut self) -> f64 {
        StandardNormal.sample(&mut self.rng)
    }

    /// Circularly symmetric complex Gaussian with the given variance.
    pub fn complex_gaussian(&mut self, variance: f64) -> Complex64 {
        let s = (variance / 2.0).sqrt();
        let re = self.standard_normal();
        let im = self.standard_normal();
        Complex64::new(s * re, s * im)
    }
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.rng.fill_bytes(dst)
    }
}

/// Per-entry complex noise variance for an SNR in dB.
pub fn snr_db_to_n0(snr_db: f64) -> f64 {
    10f64.powf(-snr_db / 10.0)
}

/// One fading realization and the noise level it is used with.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    pub h: BlockMatrix,
    pub n0: f64,
}

impl ChannelRealization {
    pub fn new(h: BlockMatrix, n0: f64) -> Result<Self> {
        if !(n0 > 0.0 && n0.is_finite()) {
            return Err(Error::InvalidParameter(format!("noise variance {n0} must be positive")));
        }
        if !h.is_finite() {
            return Err(Error::InvalidParameter("channel has non-finite entries".into()));
        }
        Ok(Self { h, n0 })
    }
}

pub fn draw_channel(rng: &mut RngStream, config: &SystemConfig, n0: f64) -> ChannelRealization {
    let h = BlockMatrix::from_fn(config.n, |_, _| rng.complex_gaussian(1.0));
    ChannelRealization { h, n0 }
}

/// The received sub-block.
#[derive(Debug, Clone, PartialEq)]
pub struct ReceivedBlock {
    pub y: BlockMatrix,
}

/// Applies fading entrywise and adds noise of variance `channel.n0`.
pub fn transmit(
    block: &SymbolBlock,
    channel: &ChannelRealization,
    rng: &mut RngStream,
) -> Result<ReceivedBlock> {
    let mut rx = transmit_noiseless(block, channel)?;
    for y in rx.y.as_mut_slice() {
        *y += rng.complex_gaussian(channel.n0);
    }
    Ok(rx)
}

/// `y = h ∘ x` with the noise generator bypassed.
pub fn transmit_noiseless(
    block: &SymbolBlock,
    channel: &ChannelRealization,
) -> Result<ReceivedBlock> {
    if !block.x.same_shape(&channel.h) {
        return Err(Error::ShapeMismatch(format!(
            "block has {} subcarriers, channel has {}",
            block.x.cols(),
            channel.h.cols()
        )));
    }
    let data = block
        .x
        .as_slice()
        .iter()
        .zip(channel.h.as_slice())
        .map(|(x, h)| h * x)
        .collect();
    debug_assert_eq!(block.x.as_slice().len() % COMPONENTS, 0);
    Ok(ReceivedBlock { y: BlockMatrix::from_column_major(data) })
}
