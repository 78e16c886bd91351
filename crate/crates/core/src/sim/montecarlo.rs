use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::ofdm::{apply_channel_with, channel_estimate, ChannelSpec, Modem, OfdmConfig, OfdmError};

/// Monte Carlo stopping rule: stop once `min_errors` bit errors are seen
/// or `max_bits` bits are simulated, whichever comes first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McControl {
    pub min_errors: u64,
    pub max_bits: u64,
}

impl Default for McControl {
    fn default() -> Self {
        Self {
            min_errors: 100,
            max_bits: 10_000_000,
        }
    }
}

/// Fewer errors than this and the estimate is marked unreliable.
pub const RELIABLE_ERRORS: u64 = 10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BerPoint {
    pub d_m: f64,
    pub ber: f64,
    pub bits: u64,
    pub errors: u64,
    pub unreliable: bool,
}

/// Independent stream for work item `index` under `seed`.
pub fn stream(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Frame-by-frame loopback until the stopping rule fires. Errors are
/// checked before bits, so a point that reaches `min_errors` is unaffected
/// by a larger `max_bits`.
pub fn simulate_link<R: Rng>(
    cfg: &OfdmConfig,
    channel: &ChannelSpec,
    control: McControl,
    rng: &mut R,
) -> Result<(u64, u64), OfdmError> {
    let modem = Modem::new(cfg)?;
    channel.validate()?;
    let estimate: Vec<Complex64> = channel_estimate(channel, cfg);
    let per_frame = cfg.bits_per_frame();
    let mut bits = vec![0u8; per_frame];
    let (mut total, mut errors) = (0u64, 0u64);
    while errors < control.min_errors && total < control.max_bits {
        let mut word = 0u64;
        for (i, b) in bits.iter_mut().enumerate() {
            if i % 64 == 0 {
                word = rng.random();
            }
            *b = (word & 1) as u8;
            word >>= 1;
        }
        let frame = modem.frame_from_bits(&bits)?;
        let rx = apply_channel_with(&modem.transmit(&frame), channel, rng);
        let decided = modem.receive(&rx, &estimate)?;
        errors += decided.iter().zip(&bits).filter(|(a, b)| a != b).count() as u64;
        total += per_frame as u64;
    }
    Ok((total, errors))
}
