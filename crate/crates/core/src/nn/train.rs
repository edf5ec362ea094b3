//! Offline training on freshly simulated data.
//!
//! Epoch `e` (counted from 0) is trained at the first training SNR when `e`
//! is even and at the second one otherwise. Batch `j` of epoch `e` is drawn
//! from [`RngStream::training`]`(seed, e, j)`, so the data are a pure
//! function of `(seed, e, j)`.

use super::{adam_step, backward_batch, init_model, target_matrix, AdamState, FeatureBatch, MlpModel, NetDims};
use crate::channel::{snr_db_to_n0, RngStream};
use crate::config::Setup;
use crate::error::{Error, Result};
use crate::link::draw_sample;

#[derive(Debug, Clone, PartialEq)]
pub struct TrainingSchedule {
    pub epochs: usize,
    pub batch_size: usize,
    pub samples_per_epoch: usize,
    /// Training SNRs in dB for even and odd epochs.
    pub snr_pair: (f64, f64),
    pub learning_rate: f64,
    pub master_seed: u64,
}

impl TrainingSchedule {
    /// 500 epochs of 5 x 10^4 samples, batch 100, η = 0.001, 7/15 dB.
    pub fn full_scale(master_seed: u64) -> Self {
        Self {
            epochs: 500,
            batch_size: 100,
            samples_per_epoch: 50_000,
            snr_pair: (7.0, 15.0),
            learning_rate: 1e-3,
            master_seed,
        }
    }

    pub fn total_samples(&self) -> usize {
        self.epochs * self.samples_per_epoch
    }

    pub fn batches_per_epoch(&self) -> usize {
        self.samples_per_epoch / self.batch_size
    }

    pub fn check(&self) -> Result<()> {
        if self.epochs == 0 || self.batch_size == 0 || self.samples_per_epoch == 0 {
            return Err(Error::InvalidParameter("epochs, batch size and samples must be positive".into()));
        }
        if self.samples_per_epoch % self.batch_size != 0 {
            return Err(Error::InvalidParameter(format!(
                "{} samples per epoch is not a multiple of batch size {}",
                self.samples_per_epoch, self.batch_size
            )));
        }
        if !(self.learning_rate > 0.0) || !self.snr_pair.0.is_finite() || !self.snr_pair.1.is_finite() {
            return Err(Error::InvalidParameter("learning rate and SNRs must be finite, rate positive".into()));
        }
        Ok(())
    }
}

/// Training SNR of an epoch.
pub fn epoch_snr(schedule: &TrainingSchedule, epoch: usize) -> f64 {
    if epoch % 2 == 0 {
        schedule.snr_pair.0
    } else {
        schedule.snr_pair.1
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochLoss {
    pub epoch: usize,
    pub train_snr_db: f64,
    /// Mean of the batch losses, each taken before its update.
    pub mean_loss: f64,
}

#[derive(Debug, Clone)]
pub struct TrainedModel {
    pub model: MlpModel,
    pub log: Vec<EpochLoss>,
}

/// Trains a freshly initialized model.
pub fn train(setup: &Setup, dims: NetDims, schedule: &TrainingSchedule) -> Result<TrainedModel> {
    train_with(setup, dims, schedule, |_| {})
}

/// [`train`] with a callback after every epoch.
pub fn train_with(
    setup: &Setup,
    dims: NetDims,
    schedule: &TrainingSchedule,
    mut on_epoch: impl FnMut(&EpochLoss),
) -> Result<TrainedModel> {
    schedule.check()?;
    dims.check_for(&setup.system)?;
    let mut model = init_model(dims, schedule.master_seed)?;
    let mut adam = AdamState::new(&model, schedule.learning_rate);
    let p = setup.system.bits_per_block;
    let mut log = Vec::with_capacity(schedule.epochs);

    for epoch in 0..schedule.epochs {
        let snr = epoch_snr(schedule, epoch);
        let n0 = snr_db_to_n0(snr);
        let mut loss_sum = 0.0;
        for batch in 0..schedule.batches_per_epoch() {
            let mut rng = RngStream::training(schedule.master_seed, epoch as u32, batch as u32);
            let samples = (0..schedule.batch_size)
                .map(|_| draw_sample(setup, &mut rng, n0, false))
                .collect::<Result<Vec<_>>>()?;
            let features = FeatureBatch::from_samples(&samples, setup.system.n, setup.energy_source)?;
            let targets = target_matrix(&samples, p);
            let (loss, grads) =
                backward_batch(&model, features.energy.view(), features.reim.view(), targets.view())?;
            adam_step(&mut model, &mut adam, &grads)?;
            loss_sum += loss;
        }
        let entry = EpochLoss {
            epoch,
            train_snr_db: snr,
            mean_loss: loss_sum / schedule.batches_per_epoch() as f64,
        };
        on_epoch(&entry);
        log.push(entry);
    }
    Ok(TrainedModel { model, log })
}
