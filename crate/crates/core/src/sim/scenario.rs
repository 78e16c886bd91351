use serde::{Deserialize, Serialize};

use super::{GainSource, GainTable, McControl, Resolved, SimError};
use crate::channel_models::{PathLossModel, SurfaceParams};
use crate::ofdm::theory::eb_n0_for_ber;
use crate::ofdm::{gain_for_subcarrier_snr, OfdmConfig};

/// Reflector-receiver distance at which the default LoS reference puts the
/// white-surface day preset exactly at the target BER.
pub const CALIBRATION_DISTANCE_M: f64 = 14.26;

pub const PRESET_NAMES: [&str; 6] = [
    "day-white",
    "day-orange",
    "day-black",
    "night-white",
    "night-orange",
    "night-black",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SurfaceSpec {
    /// Built-in surface label.
    Preset(String),
    Custom(SurfaceParams),
}

impl SurfaceSpec {
    pub fn params(&self) -> Result<SurfaceParams, SimError> {
        match self {
            SurfaceSpec::Preset(label) => {
                SurfaceParams::by_label(label).ok_or_else(|| SimError::Config(format!("unknown surface `{label}`")))
            }
            SurfaceSpec::Custom(s) => Ok(SurfaceParams::new(s.label.clone(), s.alpha, s.beta, s.n, s.rho)?),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GainEntry {
    pub d_m: f64,
    pub gain: f64,
}

fn d_two() -> f64 {
    2.0
}
fn default_m() -> u32 {
    4
}
fn default_noise() -> f64 {
    -100.0
}
fn default_pt() -> f64 {
    -12.0
}
fn default_r() -> f64 {
    0.3
}
fn default_n() -> usize {
    64
}
fn default_cp() -> usize {
    4
}
fn default_bias() -> f64 {
    3.0
}
fn default_ts() -> f64 {
    1e-6
}
fn default_target() -> f64 {
    1e-3
}
fn default_refine() -> u32 {
    4
}

/// One BER study. Every field but `surface` has a default.
///
/// The surface's path loss at `d0` is `pl_ref` when given. Otherwise it is
/// derived from a LoS reference, `los_pl_ref - 20 log10(rho)`, so the three
/// surfaces differ at `d0` exactly by their reflection coefficients; the LoS
/// reference defaults to [`default_los_pl_ref`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default)]
    pub name: String,
    pub surface: SurfaceSpec,
    #[serde(default = "d_two")]
    pub d0: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pl_ref: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub los_pl_ref: Option<f64>,
    /// Defaults to `d0..=20 m` in 0.5 m steps, or the table distances.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub distances: Option<Vec<f64>>,
    #[serde(default = "default_m")]
    pub m_order: u32,
    /// Total noise power, dBm; `-inf` disables noise.
    #[serde(default = "default_noise")]
    pub noise_power_dbm: f64,
    #[serde(default = "default_pt")]
    pub p_t_dbm: f64,
    #[serde(default = "default_r")]
    pub responsivity: f64,
    #[serde(default = "default_n")]
    pub n_sub: usize,
    #[serde(default = "default_cp")]
    pub n_cp: usize,
    #[serde(default = "default_bias")]
    pub dc_bias: f64,
    #[serde(default = "default_ts")]
    pub t_s: f64,
    #[serde(default = "default_target")]
    pub target_ber: f64,
    #[serde(default = "default_refine")]
    pub refine_steps: u32,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub mc: McControl,
    /// Measured gains used instead of the path-loss law.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gain_table: Option<Vec<GainEntry>>,
}

impl ScenarioConfig {
    pub fn new(surface: SurfaceSpec) -> Self {
        Self {
            name: String::new(),
            surface,
            d0: d_two(),
            pl_ref: None,
            los_pl_ref: None,
            distances: None,
            m_order: default_m(),
            noise_power_dbm: default_noise(),
            p_t_dbm: default_pt(),
            responsivity: default_r(),
            n_sub: default_n(),
            n_cp: default_cp(),
            dc_bias: default_bias(),
            t_s: default_ts(),
            target_ber: default_target(),
            refine_steps: default_refine(),
            seed: 0,
            mc: McControl::default(),
            gain_table: None,
        }
    }

    /// `day-<surface>` (4-QAM, -100 dBm) or `night-<surface>` (16-QAM,
    /// -110 dBm) with P_T = -12 dBm, R = 0.3, N = 64.
    pub fn preset(name: &str) -> Option<Self> {
        let (time, surface) = name.split_once('-')?;
        SurfaceParams::by_label(surface)?;
        let (m, noise) = match time {
            "day" => (4, -100.0),
            "night" => (16, -110.0),
            _ => return None,
        };
        Some(Self {
            name: name.to_owned(),
            m_order: m,
            noise_power_dbm: noise,
            ..Self::new(SurfaceSpec::Preset(surface.to_owned()))
        })
    }

    pub fn from_toml(text: &str) -> Result<Self, SimError> {
        let s: Self = toml::from_str(text).map_err(|e| SimError::Config(e.to_string()))?;
        s.resolve()?;
        Ok(s)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario serializes")
    }

    pub fn ofdm_config(&self) -> OfdmConfig {
        OfdmConfig {
            n_sub: self.n_sub,
            n_cp: self.n_cp,
            m_order: self.m_order,
            t_s: self.t_s,
            dc_bias: self.dc_bias,
            p_t_dbm: self.p_t_dbm,
        }
    }

    /// Path-loss model the scenario uses (ignoring any gain table).
    pub fn path_loss_model(&self) -> Result<PathLossModel, SimError> {
        let surface = self.surface.params()?;
        let pl_ref = match self.pl_ref {
            Some(v) => v,
            None => self.los_pl_ref.unwrap_or_else(default_los_pl_ref) - 20.0 * surface.rho.log10(),
        };
        Ok(PathLossModel::new(surface, self.d0, pl_ref)?)
    }

    pub(crate) fn resolve(&self) -> Result<Resolved, SimError> {
        let bad = |m: String| Err(SimError::Config(m));
        let cfg = self.ofdm_config();
        cfg.validate()?;
        let model = self.path_loss_model()?;
        let gains = match &self.gain_table {
            Some(t) => GainSource::Table(GainTable::new(t.clone())?),
            None => GainSource::Model(model),
        };
        let distances = match (&self.distances, &gains) {
            (Some(d), _) => d.clone(),
            (None, GainSource::Table(t)) => t.entries().iter().map(|e| e.d_m).collect(),
            (None, GainSource::Model(_)) => {
                let steps = ((20.0 - self.d0) / 0.5).floor().max(0.0) as usize;
                (0..=steps).map(|i| self.d0 + 0.5 * i as f64).collect()
            }
        };
        if distances.is_empty() {
            return bad("no distances".into());
        }
        if distances.iter().any(|d| !d.is_finite() || *d < self.d0) {
            return bad(format!("distances must be finite and >= d0 = {} m", self.d0));
        }
        if distances.windows(2).any(|w| w[1] <= w[0]) {
            return bad("distances must be strictly ascending".into());
        }
        if !(self.target_ber > 0.0 && self.target_ber < 0.5) {
            return bad(format!("target_ber = {} must lie in (0, 0.5)", self.target_ber));
        }
        if !(self.responsivity > 0.0 && self.responsivity.is_finite()) {
            return bad("responsivity must be positive".into());
        }
        if self.noise_power_dbm.is_nan() || self.noise_power_dbm == f64::INFINITY {
            return bad("noise_power_dbm must be finite or -inf".into());
        }
        if self.mc.max_bits == 0 {
            return bad("mc.max_bits must be positive".into());
        }
        if self.refine_steps > 64 {
            return bad("refine_steps must be at most 64".into());
        }
        Ok(Resolved {
            cfg,
            gains,
            distances,
            responsivity: self.responsivity,
            noise_power_dbm: self.noise_power_dbm,
            target_ber: self.target_ber,
            refine_steps: self.refine_steps,
            seed: self.seed,
            mc: self.mc,
        })
    }
}

/// LoS path loss at `d0` that puts `scenario` exactly at its target BER
/// at `distance`, using the closed-form AWGN BER.
pub fn calibrate_los_pl_ref(scenario: &ScenarioConfig, distance: f64) -> Result<f64, SimError> {
    let mut s = scenario.clone();
    s.pl_ref = None;
    s.los_pl_ref = Some(0.0);
    s.gain_table = None;
    let cfg = s.ofdm_config();
    cfg.validate()?;
    let bits = (cfg.m_order as f64).log2();
    let es_n0 = eb_n0_for_ber(cfg.m_order, s.target_ber)? * bits;
    let h = gain_for_subcarrier_snr(&cfg, s.responsivity, s.noise_power_dbm, es_n0);
    // model path loss with a 0 dB LoS reference, plus the offset we solve for
    let pl_zero = s.path_loss_model()?.path_loss_db(distance)?;
    Ok(-20.0 * h.log10() - pl_zero)
}

/// LoS reference used when a scenario sets neither `pl_ref` nor
/// `los_pl_ref`: white surface, day preset, target BER at
/// [`CALIBRATION_DISTANCE_M`].
pub fn default_los_pl_ref() -> f64 {
    let s = ScenarioConfig::preset("day-white").expect("preset exists");
    calibrate_los_pl_ref(&s, CALIBRATION_DISTANCE_M).expect("preset is valid")
}
