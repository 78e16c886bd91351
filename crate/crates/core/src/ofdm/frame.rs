use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use std::sync::Arc;

use super::qam::{qam_demap, qam_map};
use super::{OfdmConfig, OfdmError};

/// One DCO-OFDM frame before scaling and biasing.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    /// Payload bits, empty when the frame was built from symbols.
    pub bits: Vec<u8>,
    /// Symbols on subcarriers `1..N/2`.
    pub symbols: Vec<Complex64>,
    /// Cyclic prefix followed by the `N` real IFFT outputs.
    pub time_samples: Vec<f64>,
    /// Largest imaginary IFFT output relative to the largest real one.
    pub imag_residue: f64,
}

/// Scale `a` applied to the unit-energy frame so the mean AC power is
/// `P_T`: only `N - 2` of `N` unitary bins are loaded, so
/// `a = sqrt(P_T N / (N - 2))`.
pub fn transmit_scale(cfg: &OfdmConfig) -> f64 {
    let n = cfg.n_sub as f64;
    (cfg.p_t_watts() * n / (n - 2.0)).sqrt()
}

/// Reusable transceiver with planned transforms.
pub struct Modem {
    cfg: OfdmConfig,
    ifft: Arc<dyn Fft<f64>>,
    fft: Arc<dyn Fft<f64>>,
    norm: f64,
}

impl Modem {
    pub fn new(cfg: &OfdmConfig) -> Result<Self, OfdmError> {
        cfg.validate()?;
        let mut planner = FftPlanner::new();
        Ok(Self {
            cfg: cfg.clone(),
            ifft: planner.plan_fft_inverse(cfg.n_sub),
            fft: planner.plan_fft_forward(cfg.n_sub),
            norm: 1.0 / (cfg.n_sub as f64).sqrt(),
        })
    }

    pub fn config(&self) -> &OfdmConfig {
        &self.cfg
    }

    /// Places `s_1..s_{N/2-1}` with Hermitian symmetry (`X[0] = X[N/2] = 0`,
    /// `X[N-k] = conj X[k]`), applies the unitary IFFT and prepends the
    /// cyclic prefix.
    pub fn build_frame(&self, symbols: &[Complex64]) -> Result<Frame, OfdmError> {
        let n = self.cfg.n_sub;
        let want = self.cfg.data_subcarriers();
        if symbols.len() != want {
            return Err(OfdmError::SymbolCount {
                got: symbols.len(),
                want,
            });
        }
        let mut x = vec![Complex64::new(0.0, 0.0); n];
        for (k, s) in symbols.iter().enumerate() {
            x[k + 1] = *s;
            x[n - k - 1] = s.conj();
        }
        self.ifft.process(&mut x);
        let max_re = x.iter().fold(0.0f64, |a, z| a.max(z.re.abs()));
        let max_im = x.iter().fold(0.0f64, |a, z| a.max(z.im.abs()));
        let payload: Vec<f64> = x.iter().map(|z| z.re * self.norm).collect();
        let mut time_samples = Vec::with_capacity(n + self.cfg.n_cp);
        time_samples.extend_from_slice(&payload[n - self.cfg.n_cp..]);
        time_samples.extend_from_slice(&payload);
        Ok(Frame {
            bits: Vec::new(),
            symbols: symbols.to_vec(),
            time_samples,
            imag_residue: if max_re > 0.0 { max_im / max_re } else { 0.0 },
        })
    }

    pub fn frame_from_bits(&self, bits: &[u8]) -> Result<Frame, OfdmError> {
        let want = self.cfg.bits_per_frame();
        if bits.len() != want {
            return Err(OfdmError::BitCount {
                len: bits.len(),
                per_symbol: want,
            });
        }
        let mut frame = self.build_frame(&qam_map(bits, self.cfg.m_order)?)?;
        frame.bits = bits.to_vec();
        Ok(frame)
    }

    /// Scaled to `P_T` and shifted by `dc_bias * sqrt(P_T)`. No clipping.
    pub fn transmit(&self, frame: &Frame) -> Vec<f64> {
        let a = transmit_scale(&self.cfg);
        let bias = self.cfg.dc_bias * self.cfg.p_t_watts().sqrt();
        frame.time_samples.iter().map(|x| a * x + bias).collect()
    }

    /// Equalized symbols on the data subcarriers.
    pub fn receive_symbols(&self, waveform: &[f64], estimate: &[Complex64]) -> Result<Vec<Complex64>, OfdmError> {
        let n = self.cfg.n_sub;
        let want = self.cfg.frame_len();
        if waveform.len() != want {
            return Err(OfdmError::WaveformLength {
                got: waveform.len(),
                want,
            });
        }
        if estimate.len() != self.cfg.data_subcarriers() {
            return Err(OfdmError::EstimateLength {
                got: estimate.len(),
                want: self.cfg.data_subcarriers(),
            });
        }
        let payload = &waveform[self.cfg.n_cp..];
        // the signal has no DC bin, so the payload mean is bias plus noise
        let mean = payload.iter().sum::<f64>() / n as f64;
        let mut y: Vec<Complex64> = payload.iter().map(|v| Complex64::new(v - mean, 0.0)).collect();
        self.fft.process(&mut y);
        Ok(estimate
            .iter()
            .enumerate()
            .map(|(k, h)| y[k + 1] * self.norm / h)
            .collect())
    }

    pub fn receive(&self, waveform: &[f64], estimate: &[Complex64]) -> Result<Vec<u8>, OfdmError> {
        qam_demap(&self.receive_symbols(waveform, estimate)?, self.cfg.m_order)
    }
}

pub fn build_frame(symbols: &[Complex64], cfg: &OfdmConfig) -> Result<Frame, OfdmError> {
    Modem::new(cfg)?.build_frame(symbols)
}

pub fn transmit(frame: &Frame, cfg: &OfdmConfig) -> Result<Vec<f64>, OfdmError> {
    Ok(Modem::new(cfg)?.transmit(frame))
}

/// Strips the DC mean and the cyclic prefix, transforms, equalizes with
/// `estimate` (one complex gain per data subcarrier) and slices.
pub fn receive(waveform: &[f64], cfg: &OfdmConfig, estimate: &[Complex64]) -> Result<Vec<u8>, OfdmError> {
    Modem::new(cfg)?.receive(waveform, estimate)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ofdm::{apply_channel, channel_estimate, ChannelKind, ChannelSpec};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn random_bits(rng: &mut ChaCha8Rng, n: usize) -> Vec<u8> {
        (0..n).map(|_| rng.random_range(0..2u8)).collect()
    }

    #[test]
    fn zero_symbols_give_zero_samples() {
        let cfg = OfdmConfig::default();
        let f = build_frame(&vec![Complex64::new(0.0, 0.0); 31], &cfg).unwrap();
        assert!(f.time_samples.iter().all(|v| *v == 0.0));
        assert_eq!(f.time_samples.len(), 68);
        assert!(build_frame(&[Complex64::new(1.0, 0.0); 30], &cfg).is_err());
    }

    #[test]
    fn single_subcarrier_is_a_cosine() {
        let cfg = OfdmConfig {
            n_cp: 0,
            ..Default::default()
        };
        let n = cfg.n_sub;
        let k = 5;
        let s = Complex64::from_polar(0.8, 0.3);
        let mut symbols = vec![Complex64::new(0.0, 0.0); 31];
        symbols[k - 1] = s;
        let f = build_frame(&symbols, &cfg).unwrap();
        for (t, v) in f.time_samples.iter().enumerate() {
            // direct inverse DFT of the two conjugate bins
            let want = 2.0 * s.norm() * (2.0 * PI * (k * t) as f64 / n as f64 + s.arg()).cos() / (n as f64).sqrt();
            assert!((v - want).abs() < 1e-12, "{t}: {v} {want}");
        }
    }

    #[test]
    fn realness_parseval_and_prefix() {
        let cfg = OfdmConfig {
            m_order: 16,
            ..Default::default()
        };
        let modem = Modem::new(&cfg).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..100 {
            let f = modem
                .frame_from_bits(&random_bits(&mut rng, cfg.bits_per_frame()))
                .unwrap();
            assert!(f.imag_residue < 1e-10);
            let payload = &f.time_samples[cfg.n_cp..];
            let e_time: f64 = payload.iter().map(|v| v * v).sum();
            let e_freq: f64 = 2.0 * f.symbols.iter().map(|s| s.norm_sqr()).sum::<f64>();
            assert!((e_time - e_freq).abs() < 1e-9 * e_freq);
            assert_eq!(&f.time_samples[..cfg.n_cp], &payload[cfg.n_sub - cfg.n_cp..]);
        }
    }

    #[test]
    fn transmit_power_and_bias() {
        let cfg = OfdmConfig {
            dc_bias: 0.0,
            n_cp: 0,
            ..Default::default()
        };
        let modem = Modem::new(&cfg).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let (mut power, mut sum, mut count) = (0.0, 0.0, 0usize);
        for _ in 0..10_000 {
            let f = modem
                .frame_from_bits(&random_bits(&mut rng, cfg.bits_per_frame()))
                .unwrap();
            for v in modem.transmit(&f) {
                power += v * v;
                sum += v;
                count += 1;
            }
        }
        assert!((power / count as f64 / cfg.p_t_watts() - 1.0).abs() < 0.01);
        assert!((sum / count as f64).abs() < 1e-12);

        let biased = Modem::new(&OfdmConfig {
            dc_bias: 3.0,
            ..cfg.clone()
        })
        .unwrap();
        let f = modem
            .frame_from_bits(&random_bits(&mut rng, cfg.bits_per_frame()))
            .unwrap();
        let shift = 3.0 * cfg.p_t_watts().sqrt();
        for (a, b) in modem.transmit(&f).iter().zip(biased.transmit(&f)) {
            assert!((b - a - shift).abs() < 1e-15);
        }
    }

    #[test]
    fn noiseless_flat_loopback() {
        for m in [4u32, 16, 64] {
            let cfg = OfdmConfig {
                m_order: m,
                ..Default::default()
            };
            let modem = Modem::new(&cfg).unwrap();
            let ch = ChannelSpec::flat(3e-4, 0.3, f64::NEG_INFINITY);
            let est = channel_estimate(&ch, &cfg);
            let mut rng = ChaCha8Rng::seed_from_u64(m as u64);
            let mut bits_seen = 0;
            while bits_seen < 100_000 {
                let bits = random_bits(&mut rng, cfg.bits_per_frame());
                let y = apply_channel(&modem.transmit(&modem.frame_from_bits(&bits).unwrap()), &ch, 0);
                assert_eq!(modem.receive(&y, &est).unwrap(), bits);
                bits_seen += bits.len();
            }
        }
    }

    #[test]
    fn cyclic_prefix_absorbs_short_fir() {
        let cfg = OfdmConfig {
            m_order: 64,
            n_cp: 4,
            ..Default::default()
        };
        let modem = Modem::new(&cfg).unwrap();
        let ch = ChannelSpec {
            kind: ChannelKind::Fir {
                taps: vec![0.6, -0.3, 0.2, 0.1, 0.05],
            },
            responsivity: 0.3,
            noise_power_dbm: f64::NEG_INFINITY,
        };
        let est = channel_estimate(&ch, &cfg);
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..200 {
            let bits = random_bits(&mut rng, cfg.bits_per_frame());
            let f = modem.frame_from_bits(&bits).unwrap();
            let y = apply_channel(&modem.transmit(&f), &ch, 0);
            let s = modem.receive_symbols(&y, &est).unwrap();
            for (a, b) in s.iter().zip(&f.symbols) {
                assert!((a - b).norm() < 1e-9 * b.norm().max(1e-3));
            }
            assert_eq!(modem.receive(&y, &est).unwrap(), bits);
        }
    }

    #[test]
    fn length_errors() {
        let cfg = OfdmConfig::default();
        let est = vec![Complex64::new(1.0, 0.0); 31];
        assert_eq!(
            receive(&[0.0; 60], &cfg, &est),
            Err(OfdmError::WaveformLength { got: 60, want: 68 })
        );
        assert!(receive(&[0.0; 68], &cfg, &est[..5]).is_err());
    }
}
