use std::path::Path;

use super::{BenchRecord, BerRecord};
use crate::error::{Error, Result};
use crate::nn::EpochLoss;

pub const BER_HEADER: [&str; 6] = ["snr_db", "detector", "blocks", "bit_errors", "ber", "seed"];
pub const BENCH_HEADER: [&str; 5] = ["detector", "blocks", "reps", "total_seconds", "seconds_per_block"];
pub const LOSS_HEADER: [&str; 3] = ["epoch", "train_snr_db", "mean_loss"];

/// Scientific notation with 10 significant digits.
fn sci(v: f64) -> String {
    format!("{v:.9e}")
}

fn write_rows<const N: usize>(path: &Path, header: [&str; N], rows: impl Iterator<Item = [String; N]>) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header)?;
    for row in rows {
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn emit_ber_csv(records: &[BerRecord], path: &Path) -> Result<()> {
    write_rows(
        path,
        BER_HEADER,
        records.iter().map(|r| {
            [
                r.snr_db.to_string(),
                r.detector.to_string(),
                r.blocks.to_string(),
                r.bit_errors.to_string(),
                sci(r.ber),
                r.seed.to_string(),
            ]
        }),
    )
}

pub fn emit_bench_csv(records: &[BenchRecord], path: &Path) -> Result<()> {
    write_rows(
        path,
        BENCH_HEADER,
        records.iter().map(|r| {
            [
                r.detector.to_string(),
                r.blocks.to_string(),
                r.reps.to_string(),
                sci(r.total_seconds),
                sci(r.seconds_per_block),
            ]
        }),
    )
}

pub fn emit_loss_csv(log: &[EpochLoss], path: &Path) -> Result<()> {
    write_rows(
        path,
        LOSS_HEADER,
        log.iter()
            .map(|e| [e.epoch.to_string(), e.train_snr_db.to_string(), sci(e.mean_loss)]),
    )
}

fn field<T: std::str::FromStr>(rec: &csv::StringRecord, i: usize) -> Result<T> {
    rec.get(i)
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| Error::InvalidParameter(format!("bad csv field {i} in {rec:?}")))
}

/// Parses a file written by [`emit_ber_csv`]. Split index/symbol counts are
/// not stored and read back as zero.
pub fn read_ber_csv(path: &Path) -> Result<Vec<BerRecord>> {
    let mut r = csv::Reader::from_path(path)?;
    if r.headers()?.iter().ne(BER_HEADER) {
        return Err(Error::InvalidParameter("unexpected BER csv header".into()));
    }
    r.records()
        .map(|rec| {
            let rec = rec?;
            Ok(BerRecord {
                snr_db: field(&rec, 0)?,
                detector: field(&rec, 1)?,
                blocks: field(&rec, 2)?,
                bit_errors: field(&rec, 3)?,
                ber: field(&rec, 4)?,
                seed: field(&rec, 5)?,
                index_bit_errors: 0,
                symbol_bit_errors: 0,
            })
        })
        .collect()
}
