//! Monte Carlo BER versus reflector-receiver distance, and the achievable
//! distance at a target BER.

mod montecarlo;
mod scenario;

pub use montecarlo::{simulate_link, stream, BerPoint, McControl, RELIABLE_ERRORS};
pub use scenario::{
    calibrate_los_pl_ref, default_los_pl_ref, GainEntry, ScenarioConfig, SurfaceSpec, CALIBRATION_DISTANCE_M,
    PRESET_NAMES,
};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use thiserror::Error;

use crate::channel_models::ModelError;
use crate::measurement::{band_gain, AveragedSweep};
use crate::ofdm::theory::ber_awgn;
use crate::ofdm::{subcarrier_snr, ChannelSpec, OfdmError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("invalid scenario: {0}")]
    Config(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Ofdm(#[from] OfdmError),
    #[error("target BER {target} not bracketed by the curve")]
    NotBracketed { target: f64 },
    #[error("duplicate distance {0} m")]
    DuplicateDistance(f64),
    #[error("distance {d} m outside the gain table [{min}, {max}] m")]
    OutOfTable { d: f64, min: f64, max: f64 },
}

/// Distance-indexed amplitude gains, e.g. from measured sweeps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GainTable {
    entries: Vec<GainEntry>,
}

impl GainTable {
    pub fn new(mut entries: Vec<GainEntry>) -> Result<Self, SimError> {
        if entries.is_empty() {
            return Err(SimError::Config("gain table is empty".into()));
        }
        for e in &entries {
            if !(e.gain > 0.0 && e.gain.is_finite()) || !(e.d_m > 0.0 && e.d_m.is_finite()) {
                return Err(SimError::Config(format!("invalid gain table entry at {} m", e.d_m)));
            }
        }
        entries.sort_by(|a, b| a.d_m.total_cmp(&b.d_m));
        if let Some(w) = entries.windows(2).find(|w| w[0].d_m == w[1].d_m) {
            return Err(SimError::DuplicateDistance(w[0].d_m));
        }
        Ok(Self { entries })
    }

    pub fn entries(&self) -> &[GainEntry] {
        &self.entries
    }

    /// Exact entry at a listed distance, otherwise linear interpolation in
    /// dB between the neighbours.
    pub fn gain_at(&self, d: f64) -> Result<f64, SimError> {
        let (first, last) = (self.entries[0], self.entries[self.entries.len() - 1]);
        if !(d >= first.d_m && d <= last.d_m) {
            return Err(SimError::OutOfTable {
                d,
                min: first.d_m,
                max: last.d_m,
            });
        }
        let i = self.entries.partition_point(|e| e.d_m < d);
        let hi = self.entries[i];
        if hi.d_m == d {
            return Ok(hi.gain);
        }
        let lo = self.entries[i - 1];
        let w = (d - lo.d_m) / (hi.d_m - lo.d_m);
        Ok(10f64.powf((1.0 - w) * lo.gain.log10() + w * hi.gain.log10()))
    }
}

/// One gain per sweep, `sqrt(mean |S21|^2)`, keyed by the reflector-receiver
/// distance `d2_m` in the sweep metadata.
pub fn gain_table_from_measurements(sweeps: &[AveragedSweep]) -> Result<GainTable, SimError> {
    GainTable::new(
        sweeps
            .iter()
            .map(|s| GainEntry {
                d_m: s.meta.d2_m,
                gain: band_gain(s),
            })
            .collect(),
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BerCurve {
    pub points: Vec<BerPoint>,
}

impl BerCurve {
    /// `d_m,ber,bits,errors`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("d_m,ber,bits,errors\n");
        for p in &self.points {
            let _ = writeln!(out, "{},{},{},{}", p.d_m, p.ber, p.bits, p.errors);
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("curve serializes")
    }
}

/// BER used for interpolation; zero counts are floored at one error.
fn log_ber(p: &BerPoint) -> f64 {
    if p.errors == 0 {
        (1.0 / p.bits.max(1) as f64).log10()
    } else {
        p.ber.log10()
    }
}

/// Largest distance meeting `target_ber`: the first adjacent pair with
/// `ber_i <= target < ber_{i+1}` is interpolated linearly in `log10(BER)`.
pub fn achievable_distance(curve: &BerCurve, target_ber: f64) -> Result<f64, SimError> {
    if !(target_ber > 0.0 && target_ber < 0.5) {
        return Err(SimError::Config(format!("target BER {target_ber} outside (0, 0.5)")));
    }
    let t = target_ber.log10();
    for w in curve.points.windows(2) {
        let (a, b) = (&w[0], &w[1]);
        if a.ber <= target_ber && b.ber > target_ber {
            let (la, lb) = (log_ber(a).min(t), log_ber(b));
            if lb == la {
                return Ok(a.d_m);
            }
            return Ok(a.d_m + (t - la) / (lb - la) * (b.d_m - a.d_m));
        }
    }
    Err(SimError::NotBracketed { target: target_ber })
}

/// Scenario with defaults filled in and everything validated.
pub(crate) struct Resolved {
    pub cfg: crate::ofdm::OfdmConfig,
    pub gains: GainSource,
    pub distances: Vec<f64>,
    pub responsivity: f64,
    pub noise_power_dbm: f64,
    pub target_ber: f64,
    pub refine_steps: u32,
    pub seed: u64,
    pub mc: McControl,
}

pub(crate) enum GainSource {
    Model(crate::channel_models::PathLossModel),
    Table(GainTable),
}

impl Resolved {
    fn gain(&self, d: f64) -> Result<f64, SimError> {
        match &self.gains {
            GainSource::Model(m) => Ok(m.gain_amplitude(d)?),
            GainSource::Table(t) => t.gain_at(d),
        }
    }

    fn point(&self, d: f64, index: u64) -> Result<BerPoint, SimError> {
        let channel = ChannelSpec::flat(self.gain(d)?, self.responsivity, self.noise_power_dbm);
        let (bits, errors) = simulate_link(&self.cfg, &channel, self.mc, &mut stream(self.seed, index))?;
        Ok(BerPoint {
            d_m: d,
            ber: errors as f64 / bits as f64,
            bits,
            errors,
            unreliable: errors < RELIABLE_ERRORS,
        })
    }
}

/// Monte Carlo BER on the scenario's distance grid, then `refine_steps`
/// bisection points inside the first bracket of the target BER.
///
/// Grid point `i` draws from stream `(seed, i)` and refinement step `j`
/// from `(seed, grid_len + j)`, so results do not depend on scheduling.
pub fn run_ber_vs_distance(scenario: &ScenarioConfig) -> Result<BerCurve, SimError> {
    let r = scenario.resolve()?;
    if let GainSource::Model(m) = &r.gains {
        if let Some(turn) = m.monotone_until() {
            if r.distances.iter().any(|&d| d > turn) {
                log::warn!(
                    "path loss of surface `{}` decreases beyond {turn:.2} m; curve may be non-monotone",
                    m.surface.label
                );
            }
        }
    }
    let mut points = r
        .distances
        .par_iter()
        .enumerate()
        .map(|(i, &d)| r.point(d, i as u64))
        .collect::<Result<Vec<_>, _>>()?;

    let bracket = points
        .windows(2)
        .position(|w| w[0].ber <= r.target_ber && w[1].ber > r.target_ber);
    if let Some(i) = bracket {
        let (mut lo, mut hi) = (points[i].d_m, points[i + 1].d_m);
        for step in 0..r.refine_steps {
            let mid = 0.5 * (lo + hi);
            let p = r.point(mid, (r.distances.len() + step as usize) as u64)?;
            if p.ber > r.target_ber {
                hi = mid;
            } else {
                lo = mid;
            }
            points.push(p);
        }
        points.sort_by(|a, b| a.d_m.total_cmp(&b.d_m));
    }
    Ok(BerCurve { points })
}

/// Closed-form AWGN BER of the scenario at distance `d`.
pub fn analytic_ber(scenario: &ScenarioConfig, d: f64) -> Result<f64, SimError> {
    let r = scenario.resolve()?;
    let es_n0 = subcarrier_snr(&r.cfg, r.responsivity, r.gain(d)?, r.noise_power_dbm);
    let bits = (r.cfg.m_order as f64).log2();
    Ok(ber_awgn(r.cfg.m_order, es_n0 / bits)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measurement::{SweepMeta, SweepRecord};
    use num_complex::Complex64;

    fn p(d: f64, ber: f64) -> BerPoint {
        BerPoint {
            d_m: d,
            ber,
            bits: 1_000_000,
            errors: (ber * 1e6) as u64,
            unreliable: false,
        }
    }

    #[test]
    fn interpolation_cases() {
        let exact = BerCurve {
            points: vec![p(8.0, 1e-5), p(10.0, 1e-3), p(12.0, 1e-1)],
        };
        assert!((achievable_distance(&exact, 1e-3).unwrap() - 10.0).abs() < 1e-12);
        let sym = BerCurve {
            points: vec![p(8.0, 1e-4), p(10.0, 1e-2)],
        };
        assert!((achievable_distance(&sym, 1e-3).unwrap() - 9.0).abs() < 1e-12);
        let above = BerCurve {
            points: vec![p(8.0, 1e-2), p(10.0, 1e-1)],
        };
        assert_eq!(
            achievable_distance(&above, 1e-3),
            Err(SimError::NotBracketed { target: 1e-3 })
        );
        let below = BerCurve {
            points: vec![p(8.0, 1e-6), p(10.0, 1e-5)],
        };
        assert!(achievable_distance(&below, 1e-3).is_err());
    }

    #[test]
    fn zero_ber_points_use_one_error_floor() {
        let mut zero = p(8.0, 0.0);
        zero.bits = 10_000; // floor 1e-4
        let c = BerCurve {
            points: vec![zero, p(10.0, 1e-2)],
        };
        assert!((achievable_distance(&c, 1e-3).unwrap() - 9.0).abs() < 1e-12);
    }

    #[test]
    fn gain_table_lookup_and_duplicates() {
        let mk = |d: f64, g: f64| {
            let s21 = vec![Complex64::from_polar(g, d); 16];
            let meta = SweepMeta {
                d2_m: d,
                ..Default::default()
            };
            AveragedSweep::from(SweepRecord::uniform(200e3, 700.0, s21, meta).unwrap())
        };
        let t = gain_table_from_measurements(&[mk(6.0, 1e-3), mk(2.0, 0.25)]).unwrap();
        assert_eq!(t.gain_at(2.0).unwrap(), 0.25);
        assert!((t.gain_at(6.0).unwrap() - 1e-3).abs() < 1e-18);
        let mid = t.gain_at(4.0).unwrap();
        assert!((mid - (0.25f64 * 1e-3).sqrt()).abs() < 1e-12);
        assert!(matches!(t.gain_at(7.0), Err(SimError::OutOfTable { .. })));
        assert_eq!(
            gain_table_from_measurements(&[mk(2.0, 0.1), mk(2.0, 0.2)]),
            Err(SimError::DuplicateDistance(2.0))
        );
    }

    #[test]
    fn csv_header() {
        let c = BerCurve {
            points: vec![p(2.0, 0.0)],
        };
        assert_eq!(c.to_csv(), "d_m,ber,bits,errors\n2,0,1000000,0\n");
    }
}
