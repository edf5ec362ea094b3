//! Receiver front end: zero-forcing equalization, neural-detector features
//! and the exhaustive maximum-likelihood detector.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::block::BlockMatrix;
use crate::channel::{ChannelRealization, ReceivedBlock};
use crate::error::{Error, Result};
use crate::mapper::{Candidate, SubBlockBits};

/// Channel entries with modulus below this are treated as singular.
pub const SINGULAR_THRESHOLD: f64 = 1e-30;

/// Which block the energy features are computed from.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EnergySource {
    /// `|ȳ|^2` of the zero-forced block.
    #[default]
    Equalized,
    /// `|y|^2` of the raw received block.
    Received,
}

/// Entrywise `y / h`.
pub fn zf_equalize(rx: &ReceivedBlock, channel: &ChannelRealization) -> Result<BlockMatrix> {
    if !rx.y.same_shape(&channel.h) {
        return Err(Error::ShapeMismatch("received block and channel differ".into()));
    }
    let cols = rx.y.cols();
    let mut out = Vec::with_capacity(3 * cols);
    for (j, (y, h)) in rx.y.as_slice().iter().zip(channel.h.as_slice()).enumerate() {
        if h.norm() < SINGULAR_THRESHOLD {
            return Err(Error::SingularChannel { component: j % 3 + 1, subcarrier: j / 3 + 1 });
        }
        out.push(y / h);
    }
    Ok(BlockMatrix::from_column_major(out))
}

/// Inputs of the neural detector for one sub-block.
///
/// Both vectors follow the column-major flattening of the `3 x n` block
/// (component fastest, subcarriers ascending). `reim` holds the `3n` real
/// parts followed by the `3n` imaginary parts of the equalized block.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    pub energy: Vec<f64>,
    pub reim: Vec<f64>,
}

pub fn extract_features(rx: &ReceivedBlock, channel: &ChannelRealization) -> Result<FeatureVector> {
    extract_features_with(rx, channel, EnergySource::Equalized)
}

pub fn extract_features_with(
    rx: &ReceivedBlock,
    channel: &ChannelRealization,
    source: EnergySource,
) -> Result<FeatureVector> {
    let len = rx.y.as_slice().len();
    let mut fv = FeatureVector { energy: vec![0.0; len], reim: vec![0.0; 2 * len] };
    write_features(rx, channel, source, &mut fv.energy, &mut fv.reim)?;
    Ok(fv)
}

/// Writes features into preallocated rows of length `3n` and `6n`.
pub fn write_features(
    rx: &ReceivedBlock,
    channel: &ChannelRealization,
    source: EnergySource,
    energy: &mut [f64],
    reim: &mut [f64],
) -> Result<()> {
    let eq = zf_equalize(rx, channel)?;
    let eq = eq.as_slice();
    let len = eq.len();
    if energy.len() != len || reim.len() != 2 * len {
        return Err(Error::ShapeMismatch(format!(
            "feature rows must have lengths {len} and {}",
            2 * len
        )));
    }
    let energy_from: &[Complex64] = match source {
        EnergySource::Equalized => eq,
        EnergySource::Received => rx.y.as_slice(),
    };
    for (e, z) in energy.iter_mut().zip(energy_from) {
        *e = z.norm_sqr();
    }
    let (re, im) = reim.split_at_mut(len);
    for ((r, i), z) in re.iter_mut().zip(im.iter_mut()).zip(eq) {
        *r = z.re;
        *i = z.im;
    }
    Ok(())
}

/// `||y - h ∘ x||^2`.
pub fn ml_metric(rx: &ReceivedBlock, channel: &ChannelRealization, x: &BlockMatrix) -> f64 {
    rx.y
        .as_slice()
        .iter()
        .zip(channel.h.as_slice())
        .zip(x.as_slice())
        .map(|((y, h), x)| (y - h * x).norm_sqr())
        .sum()
}

/// Rank of the candidate with the smallest metric; ties go to the lower rank.
pub fn ml_detect_index(
    rx: &ReceivedBlock,
    channel: &ChannelRealization,
    candidates: &[Candidate],
) -> usize {
    let mut best = 0;
    let mut best_metric = f64::INFINITY;
    for (i, c) in candidates.iter().enumerate() {
        let m = ml_metric(rx, channel, &c.block.x);
        if m < best_metric {
            best = i;
            best_metric = m;
        }
    }
    best
}

pub fn ml_detect(
    rx: &ReceivedBlock,
    channel: &ChannelRealization,
    candidates: &[Candidate],
) -> SubBlockBits {
    candidates[ml_detect_index(rx, channel, candidates)].bits.clone()
}
