use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use super::{dbm_to_watts, transmit_scale, OfdmConfig, OfdmError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "kind")]
pub enum ChannelKind {
    /// Single amplitude gain.
    Flat { gain: f64 },
    /// Impulse response taps at the modem sampling rate.
    Fir { taps: Vec<f64> },
}

/// `y = R (h * x) + v`, with `v` white Gaussian of total power
/// `noise_power_dbm`. A noise power of `-inf` turns the noise off.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelSpec {
    pub kind: ChannelKind,
    /// Photodetector responsivity, A/W.
    pub responsivity: f64,
    pub noise_power_dbm: f64,
}

impl ChannelSpec {
    pub fn flat(gain: f64, responsivity: f64, noise_power_dbm: f64) -> Self {
        Self {
            kind: ChannelKind::Flat { gain },
            responsivity,
            noise_power_dbm,
        }
    }

    pub fn validate(&self) -> Result<(), OfdmError> {
        let bad = |m: &str| Err(OfdmError::InvalidConfig(m.into()));
        match &self.kind {
            ChannelKind::Flat { gain } if !(*gain > 0.0 && gain.is_finite()) => {
                return bad("flat gain must be positive")
            }
            ChannelKind::Fir { taps } if taps.is_empty() || taps.iter().any(|t| !t.is_finite()) => {
                return bad("FIR taps must be non-empty and finite")
            }
            _ => {}
        }
        if !(self.responsivity > 0.0 && self.responsivity.is_finite()) {
            return bad("responsivity must be positive");
        }
        if self.noise_power_dbm.is_nan() || self.noise_power_dbm == f64::INFINITY {
            return bad("noise power must be finite or -inf");
        }
        Ok(())
    }

    pub fn noise_std(&self) -> f64 {
        dbm_to_watts(self.noise_power_dbm).sqrt()
    }
}

/// Channel with noise drawn from a ChaCha8 stream seeded by `seed`.
pub fn apply_channel(waveform: &[f64], channel: &ChannelSpec, seed: u64) -> Vec<f64> {
    apply_channel_with(waveform, channel, &mut ChaCha8Rng::seed_from_u64(seed))
}

/// Channel with noise drawn from `rng`. The FIR response is a causal linear
/// convolution truncated to the input length.
pub fn apply_channel_with<R: Rng + ?Sized>(waveform: &[f64], channel: &ChannelSpec, rng: &mut R) -> Vec<f64> {
    let r = channel.responsivity;
    let mut y: Vec<f64> = match &channel.kind {
        ChannelKind::Flat { gain } => waveform.iter().map(|x| r * (gain * x)).collect(),
        ChannelKind::Fir { taps } => (0..waveform.len())
            .map(|n| {
                let acc: f64 = taps
                    .iter()
                    .take(n + 1)
                    .enumerate()
                    .map(|(k, h)| h * waveform[n - k])
                    .sum();
                r * acc
            })
            .collect(),
    };
    let sigma = channel.noise_std();
    if sigma > 0.0 {
        for v in &mut y {
            let z: f64 = rng.sample(StandardNormal);
            *v += sigma * z;
        }
    }
    y
}

/// Per-data-subcarrier complex gain from transmitted symbol to received
/// FFT bin: `R * a * H_k` with `a` the transmit scale.
pub fn channel_estimate(channel: &ChannelSpec, cfg: &OfdmConfig) -> Vec<Complex64> {
    let a = transmit_scale(cfg) * channel.responsivity;
    let n = cfg.n_sub;
    (1..=cfg.data_subcarriers())
        .map(|k| match &channel.kind {
            ChannelKind::Flat { gain } => Complex64::new(a * gain, 0.0),
            ChannelKind::Fir { taps } => {
                taps.iter()
                    .enumerate()
                    .map(|(l, h)| Complex64::from_polar(*h, -2.0 * PI * (k * l) as f64 / n as f64))
                    .sum::<Complex64>()
                    * a
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_channel() {
        let x = vec![0.5, -1.0, 2.0, 0.0];
        assert_eq!(apply_channel(&x, &ChannelSpec::flat(1.0, 1.0, f64::NEG_INFINITY), 1), x);
    }

    #[test]
    fn single_tap_fir_equals_flat() {
        let x: Vec<f64> = (0..50).map(|i| (i as f64 * 0.37).sin()).collect();
        let fir = ChannelSpec {
            kind: ChannelKind::Fir { taps: vec![0.3] },
            responsivity: 0.7,
            noise_power_dbm: -60.0,
        };
        let flat = ChannelSpec::flat(0.3, 0.7, -60.0);
        assert_eq!(apply_channel(&x, &fir, 9), apply_channel(&x, &flat, 9));
    }

    #[test]
    fn noise_variance() {
        let ch = ChannelSpec::flat(1.0, 1.0, -90.0);
        let y = apply_channel(&vec![0.0; 1_000_000], &ch, 42);
        let mean = y.iter().sum::<f64>() / y.len() as f64;
        let var = y.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (y.len() - 1) as f64;
        assert!((var / 1e-12 - 1.0).abs() < 0.02, "{var}");
    }

    #[test]
    fn deterministic_given_seed() {
        let ch = ChannelSpec::flat(0.5, 0.3, -80.0);
        let x = vec![1.0; 100];
        assert_eq!(apply_channel(&x, &ch, 3), apply_channel(&x, &ch, 3));
        assert_ne!(apply_channel(&x, &ch, 3), apply_channel(&x, &ch, 4));
    }

    #[test]
    fn fir_convolution_by_hand() {
        let ch = ChannelSpec {
            kind: ChannelKind::Fir {
                taps: vec![1.0, 0.5, 0.25],
            },
            responsivity: 2.0,
            noise_power_dbm: f64::NEG_INFINITY,
        };
        let y = apply_channel(&[1.0, 0.0, 0.0, 2.0], &ch, 0);
        assert_eq!(y, vec![2.0, 1.0, 0.5, 4.0]);
    }

    #[test]
    fn validation() {
        assert!(ChannelSpec::flat(0.0, 1.0, -90.0).validate().is_err());
        assert!(ChannelSpec::flat(1.0, 0.0, -90.0).validate().is_err());
        assert!(ChannelSpec::flat(1.0, 1.0, f64::NAN).validate().is_err());
        assert!(ChannelSpec::flat(1.0, 1.0, f64::NEG_INFINITY).validate().is_ok());
        let empty = ChannelSpec {
            kind: ChannelKind::Fir { taps: vec![] },
            responsivity: 1.0,
            noise_power_dbm: -90.0,
        };
        assert!(empty.validate().is_err());
    }
}
