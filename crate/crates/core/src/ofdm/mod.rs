//! DCO-OFDM transceiver: Gray QAM, Hermitian-symmetric framing with cyclic
//! prefix and DC bias, linear optical channel with photodetector
//! responsivity and AWGN, and a zero-forcing receiver.
//!
//! All powers are electrical. `p_t_dbm` is the AC (information-bearing)
//! power; the DC bias is added on top and removed again at the receiver.

mod channel;
mod frame;
mod qam;
pub mod theory;

pub use channel::{apply_channel, apply_channel_with, channel_estimate, ChannelKind, ChannelSpec};
pub use frame::{build_frame, receive, transmit, transmit_scale, Frame, Modem};
pub use qam::{bits_per_symbol, qam_demap, qam_map};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OfdmError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("{len} bits is not a multiple of {per_symbol} bits per symbol")]
    BitCount { len: usize, per_symbol: usize },
    #[error("expected {want} symbols per frame, got {got}")]
    SymbolCount { got: usize, want: usize },
    #[error("expected a waveform of {want} samples, got {got}")]
    WaveformLength { got: usize, want: usize },
    #[error("expected {want} channel estimates, got {got}")]
    EstimateLength { got: usize, want: usize },
}

/// dBm to watts (1 mW reference). `-inf` maps to 0.
pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf(dbm / 10.0) * 1e-3
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OfdmConfig {
    /// FFT size N (power of two, at least 4).
    pub n_sub: usize,
    pub n_cp: usize,
    pub m_order: u32,
    /// Sampling interval, s. Only used to report rates.
    pub t_s: f64,
    /// DC bias in units of the AC signal standard deviation.
    pub dc_bias: f64,
    /// AC transmit power, dBm.
    pub p_t_dbm: f64,
}

impl Default for OfdmConfig {
    fn default() -> Self {
        Self {
            n_sub: 64,
            n_cp: 4,
            m_order: 4,
            t_s: 1e-6,
            dc_bias: 3.0,
            p_t_dbm: -12.0,
        }
    }
}

impl OfdmConfig {
    pub fn validate(&self) -> Result<(), OfdmError> {
        let bad = |m: String| Err(OfdmError::InvalidConfig(m));
        if self.n_sub < 4 || !self.n_sub.is_power_of_two() {
            return bad(format!("n_sub = {} must be a power of two >= 4", self.n_sub));
        }
        if self.n_cp >= self.n_sub {
            return bad(format!("n_cp = {} must be below n_sub", self.n_cp));
        }
        qam::axis_bits(self.m_order)?;
        if !(self.t_s > 0.0 && self.t_s.is_finite()) {
            return bad(format!("t_s = {} must be positive", self.t_s));
        }
        if !(self.dc_bias >= 0.0 && self.dc_bias.is_finite()) {
            return bad(format!("dc_bias = {} must be non-negative", self.dc_bias));
        }
        if !self.p_t_dbm.is_finite() {
            return bad("p_t_dbm must be finite".into());
        }
        Ok(())
    }

    /// Data subcarriers per frame, `N/2 - 1`.
    pub fn data_subcarriers(&self) -> usize {
        self.n_sub / 2 - 1
    }

    pub fn frame_len(&self) -> usize {
        self.n_sub + self.n_cp
    }

    pub fn bits_per_frame(&self) -> usize {
        self.data_subcarriers() * 2 * qam::axis_bits(self.m_order).unwrap_or(0) as usize
    }

    pub fn p_t_watts(&self) -> f64 {
        dbm_to_watts(self.p_t_dbm)
    }
}

/// Received electrical SNR `(R H)^2 P_T / sigma^2` for a flat gain `h`.
pub fn electrical_snr(cfg: &OfdmConfig, responsivity: f64, h: f64, noise_dbm: f64) -> f64 {
    let rh = responsivity * h;
    rh * rh * cfg.p_t_watts() / dbm_to_watts(noise_dbm)
}

/// Per-subcarrier `Es/N0` for a flat gain. Only `N - 2` of the `N` bins
/// carry power, so each sees `N/(N-2)` times the electrical SNR.
pub fn subcarrier_snr(cfg: &OfdmConfig, responsivity: f64, h: f64, noise_dbm: f64) -> f64 {
    let n = cfg.n_sub as f64;
    electrical_snr(cfg, responsivity, h, noise_dbm) * n / (n - 2.0)
}

/// Flat gain that gives a per-subcarrier `Es/N0` of `es_n0`.
pub fn gain_for_subcarrier_snr(cfg: &OfdmConfig, responsivity: f64, noise_dbm: f64, es_n0: f64) -> f64 {
    let n = cfg.n_sub as f64;
    let snr_el = es_n0 * (n - 2.0) / n;
    (snr_el * dbm_to_watts(noise_dbm) / cfg.p_t_watts()).sqrt() / responsivity
}
