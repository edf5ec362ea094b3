//! One pass through the link: random bits, mapping, fading and noise.

use crate::channel::{draw_channel, transmit, transmit_noiseless, ChannelRealization, ReceivedBlock, RngStream};
use crate::config::Setup;
use crate::error::Result;
use crate::mapper::{map_bits_to_block, SubBlockBits};

/// A transmitted message with what the receiver observes of it.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkSample {
    pub message: u64,
    pub channel: ChannelRealization,
    pub rx: ReceivedBlock,
}

/// Draws message, channel and (unless `noiseless`) noise from `rng`, in that
/// order.
pub fn draw_sample(setup: &Setup, rng: &mut RngStream, n0: f64, noiseless: bool) -> Result<LinkSample> {
    let p = setup.system.bits_per_block;
    let message = rng.message(p);
    let block = map_bits_to_block(&SubBlockBits::from_message(message, p), setup)?;
    let channel = draw_channel(rng, &setup.system, n0);
    let rx = if noiseless {
        transmit_noiseless(&block, &channel)?
    } else {
        transmit(&block, &channel, rng)?
    };
    Ok(LinkSample { message, channel, rx })
}
