use rayon::prelude::*;

use super::DetectorKind;
use crate::channel::{snr_db_to_n0, RngStream};
use crate::config::Setup;
use crate::error::{Error, Result};
use crate::link::{draw_sample, LinkSample};
use crate::mapper::enumerate_all_blocks;
use crate::nn::{detect_messages, MlpModel};
use crate::rx::ml_detect_index;

/// Blocks per random stream. Block `b` of SNR point `s` always comes from
/// stream `(s, b / CHUNK_BLOCKS)`, whatever the worker count.
pub const CHUNK_BLOCKS: u64 = 1024;

/// One point of a BER curve.
#[derive(Debug, Clone, PartialEq)]
pub struct BerRecord {
    pub snr_db: f64,
    pub detector: DetectorKind,
    pub blocks: u64,
    pub bit_errors: u64,
    pub ber: f64,
    pub seed: u64,
    /// Errors among the index bits only (not written to CSV).
    pub index_bit_errors: u64,
    /// Errors among the symbol bits only (not written to CSV).
    pub symbol_bit_errors: u64,
}

impl BerRecord {
    /// BER of the index bits alone.
    pub fn index_ber(&self, index_bits: usize) -> f64 {
        self.index_bit_errors as f64 / (self.blocks as f64 * index_bits as f64)
    }

    pub fn symbol_ber(&self, symbol_bits: usize) -> f64 {
        self.symbol_bit_errors as f64 / (self.blocks as f64 * symbol_bits as f64)
    }
}

pub enum Detector<'a> {
    Ml,
    Dnn(&'a MlpModel),
}

impl Detector<'_> {
    pub fn kind(&self) -> DetectorKind {
        match self {
            Detector::Ml => DetectorKind::Ml,
            Detector::Dnn(_) => DetectorKind::Dnn,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SweepOptions {
    /// Bypass the noise generator.
    pub noiseless: bool,
}

/// Inclusive SNR grid `start, start + step, ..., <= stop`.
pub fn snr_range(start: f64, stop: f64, step: f64) -> Result<Vec<f64>> {
    if !(start.is_finite() && stop.is_finite() && step.is_finite()) || step <= 0.0 || stop < start {
        return Err(Error::InvalidParameter(format!(
            "invalid SNR range {start}..={stop} step {step}"
        )));
    }
    let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
    Ok((0..count).map(|i| start + i as f64 * step).collect())
}

#[derive(Debug, Default, Clone, Copy)]
struct Counts {
    total: u64,
    index: u64,
    symbol: u64,
}

impl std::ops::Add for Counts {
    type Output = Counts;

    fn add(self, o: Counts) -> Counts {
        Counts { total: self.total + o.total, index: self.index + o.index, symbol: self.symbol + o.symbol }
    }
}

enum Engine<'a> {
    Ml(Vec<crate::mapper::Candidate>),
    Dnn(&'a MlpModel),
}

impl Engine<'_> {
    fn detect(&self, setup: &Setup, samples: &[LinkSample]) -> Result<Vec<u64>> {
        match self {
            Engine::Ml(cands) => Ok(samples
                .iter()
                .map(|s| cands[ml_detect_index(&s.rx, &s.channel, cands)].message)
                .collect()),
            Engine::Dnn(model) => detect_messages(model, setup, samples),
        }
    }
}

fn run_chunk(
    setup: &Setup,
    engine: &Engine<'_>,
    seed: u64,
    snr_index: usize,
    chunk: u64,
    len: u64,
    n0: f64,
    options: SweepOptions,
) -> Result<Counts> {
    let mut rng = RngStream::simulation(seed, snr_index as u32, chunk as u32);
    let samples = (0..len)
        .map(|_| draw_sample(setup, &mut rng, n0, options.noiseless))
        .collect::<Result<Vec<_>>>()?;
    let detected = engine.detect(setup, &samples)?;
    let symbol_bits = setup.system.symbol_bits as u32;
    let symbol_mask = if symbol_bits == 0 { 0 } else { u64::MAX >> (64 - symbol_bits) };
    Ok(samples
        .iter()
        .zip(detected)
        .map(|(s, d)| {
            let diff = s.message ^ d;
            Counts {
                total: diff.count_ones() as u64,
                index: (diff & !symbol_mask).count_ones() as u64,
                symbol: (diff & symbol_mask).count_ones() as u64,
            }
        })
        .fold(Counts::default(), |a, b| a + b))
}

/// Runs `blocks` sub-blocks per SNR point through the link and counts bit
/// errors over all `p` bits.
///
/// Blocks are split into fixed chunks with their own streams and spread over
/// `workers` threads; the records do not depend on `workers`.
pub fn run_ber_sweep(
    setup: &Setup,
    detector: &Detector<'_>,
    snrs: &[f64],
    blocks: u64,
    seed: u64,
    workers: usize,
    options: SweepOptions,
) -> Result<Vec<BerRecord>> {
    if snrs.is_empty() || snrs.iter().any(|s| !s.is_finite()) {
        return Err(Error::InvalidParameter("SNR list must be non-empty and finite".into()));
    }
    if blocks == 0 || workers == 0 {
        return Err(Error::InvalidParameter("blocks and workers must be positive".into()));
    }
    let engine = match detector {
        Detector::Ml => Engine::Ml(enumerate_all_blocks(setup)?),
        Detector::Dnn(model) => {
            model.dims.check_for(&setup.system)?;
            Engine::Dnn(model)
        }
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::InvalidParameter(e.to_string()))?;
    let chunks = blocks.div_ceil(CHUNK_BLOCKS);
    let p = setup.system.bits_per_block as u64;

    snrs.iter()
        .enumerate()
        .map(|(snr_index, &snr_db)| {
            let n0 = snr_db_to_n0(snr_db);
            let counts = pool.install(|| {
                (0..chunks)
                    .into_par_iter()
                    .map(|c| {
                        let len = CHUNK_BLOCKS.min(blocks - c * CHUNK_BLOCKS);
                        run_chunk(setup, &engine, seed, snr_index, c, len, n0, options)
                    })
                    .try_reduce(Counts::default, |a, b| Ok(a + b))
            })?;
            Ok(BerRecord {
                snr_db,
                detector: detector.kind(),
                blocks,
                bit_errors: counts.total,
                ber: counts.total as f64 / (blocks * p) as f64,
                seed,
                index_bit_errors: counts.index,
                symbol_bit_errors: counts.symbol,
            })
        })
        .collect()
}
