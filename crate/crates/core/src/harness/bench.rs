use std::time::Instant;

use super::DetectorKind;
use crate::channel::{snr_db_to_n0, RngStream};
use crate::config::Setup;
use crate::error::{Error, Result};
use crate::link::{draw_sample, LinkSample};
use crate::mapper::enumerate_all_blocks;
use crate::nn::{detect_messages, MlpModel};
use crate::rx::ml_detect_index;

/// Detection-only runtime of one detector.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchRecord {
    pub detector: DetectorKind,
    pub blocks: u64,
    pub reps: usize,
    /// Median over repetitions of the time to detect all blocks.
    pub total_seconds: f64,
    pub seconds_per_block: f64,
}

pub fn median(values: &mut [f64]) -> f64 {
    assert!(!values.is_empty());
    values.sort_by(f64::total_cmp);
    let mid = values.len() / 2;
    if values.len() % 2 == 1 {
        values[mid]
    } else {
        0.5 * (values[mid - 1] + values[mid])
    }
}

/// Times `reps` passes of `detect` over already generated samples on the
/// calling thread.
pub fn time_detection(
    samples: &[LinkSample],
    reps: usize,
    mut detect: impl FnMut(&[LinkSample]) -> Result<Vec<u64>>,
) -> Result<f64> {
    let mut times = Vec::with_capacity(reps);
    for _ in 0..reps {
        let start = Instant::now();
        let out = detect(samples)?;
        times.push(start.elapsed().as_secs_f64());
        std::hint::black_box(out);
    }
    Ok(median(&mut times))
}

/// Benchmarks ML and, when a model is given, the neural detector on the same
/// precomputed blocks. Data generation happens before any timing; the neural
/// detector runs feature extraction and one batched forward pass per rep.
pub fn bench_runtime(
    setup: &Setup,
    model: Option<&MlpModel>,
    blocks: u64,
    reps: usize,
    snr_db: f64,
    seed: u64,
) -> Result<Vec<BenchRecord>> {
    if blocks == 0 || reps == 0 {
        return Err(Error::InvalidParameter("blocks and reps must be positive".into()));
    }
    if let Some(m) = model {
        m.dims.check_for(&setup.system)?;
    }
    let n0 = snr_db_to_n0(snr_db);
    let mut rng = RngStream::new(seed, 0);
    let samples = (0..blocks)
        .map(|_| draw_sample(setup, &mut rng, n0, false))
        .collect::<Result<Vec<_>>>()?;
    let candidates = enumerate_all_blocks(setup)?;

    // Warm-up pass for each detector.
    let ml = |s: &[LinkSample]| -> Result<Vec<u64>> {
        Ok(s.iter()
            .map(|x| candidates[ml_detect_index(&x.rx, &x.channel, &candidates)].message)
            .collect())
    };
    time_detection(&samples[..samples.len().min(64)], 1, ml)?;
    let mut records = vec![record(DetectorKind::Ml, blocks, reps, time_detection(&samples, reps, ml)?)];

    if let Some(model) = model {
        let dnn = |s: &[LinkSample]| detect_messages(model, setup, s);
        time_detection(&samples[..samples.len().min(64)], 1, dnn)?;
        records.push(record(DetectorKind::Dnn, blocks, reps, time_detection(&samples, reps, dnn)?));
    }
    Ok(records)
}

fn record(detector: DetectorKind, blocks: u64, reps: usize, total: f64) -> BenchRecord {
    // Clock resolution can round a very short pass to zero.
    let total = total.max(1e-9);
    BenchRecord {
        detector,
        blocks,
        reps,
        total_seconds: total,
        seconds_per_block: total / blocks as f64,
    }
}
