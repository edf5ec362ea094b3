//! Monte-Carlo BER sweeps, runtime benchmarks, training jobs and their CSV
//! outputs.

mod bench;
mod csv_io;
mod sweep;

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use crate::config::Setup;
use crate::error::Result;
use crate::nn::{save_checkpoint, train_with, NetDims, TrainedModel, TrainingSchedule};

pub use bench::{bench_runtime, median, time_detection, BenchRecord};
pub use csv_io::{
    emit_bench_csv, emit_ber_csv, emit_loss_csv, read_ber_csv, BENCH_HEADER, BER_HEADER, LOSS_HEADER,
};
pub use sweep::{run_ber_sweep, snr_range, BerRecord, Detector, SweepOptions, CHUNK_BLOCKS};

/// Detector label used in records and on the command line.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, clap::ValueEnum)]
pub enum DetectorKind {
    Ml,
    Dnn,
}

impl DetectorKind {
    pub fn label(self) -> &'static str {
        match self {
            DetectorKind::Ml => "ml",
            DetectorKind::Dnn => "dnn",
        }
    }
}

impl fmt::Display for DetectorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for DetectorKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "ml" => Ok(DetectorKind::Ml),
            "dnn" => Ok(DetectorKind::Dnn),
            other => Err(format!("unknown detector {other:?}")),
        }
    }
}

/// Trains, then writes the checkpoint and the per-epoch loss CSV.
pub fn run_training_job(
    setup: &Setup,
    dims: NetDims,
    schedule: &TrainingSchedule,
    checkpoint: &Path,
    loss_csv: &Path,
) -> Result<TrainedModel> {
    let trained = train_with(setup, dims, schedule, |e| {
        log::info!("epoch {:>4}  snr {:>5} dB  loss {:.6}", e.epoch, e.train_snr_db, e.mean_loss)
    })?;
    save_checkpoint(&trained.model, checkpoint)?;
    emit_loss_csv(&trained.log, loss_csv)?;
    Ok(trained)
}
