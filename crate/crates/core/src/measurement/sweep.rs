use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

use super::MeasurementError;

/// Relative tolerance on frequency-grid uniformity and grid equality.
pub const GRID_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Link {
    Los,
    Nlos,
}

impl fmt::Display for Link {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Link::Los => "los",
            Link::Nlos => "nlos",
        })
    }
}

impl FromStr for Link {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "los" => Ok(Link::Los),
            "nlos" => Ok(Link::Nlos),
            other => Err(format!("unknown link kind `{other}` (expected los or nlos)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepMeta {
    pub surface: String,
    /// Transmitter to reflector distance, m.
    pub d1_m: f64,
    /// Reflector to receiver distance, m.
    pub d2_m: f64,
    pub realization: u32,
    pub link: Link,
}

impl Default for SweepMeta {
    fn default() -> Self {
        Self {
            surface: String::new(),
            d1_m: 0.0,
            d2_m: 0.0,
            realization: 0,
            link: Link::Nlos,
        }
    }
}

impl SweepMeta {
    /// True when both describe the same measurement location, ignoring the
    /// realization index.
    pub fn same_location(&self, other: &Self) -> bool {
        self.surface == other.surface && self.d1_m == other.d1_m && self.d2_m == other.d2_m && self.link == other.link
    }
}

/// One VNA realization on a uniform frequency grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRecord {
    freqs: Vec<f64>,
    s21: Vec<Complex64>,
    pub meta: SweepMeta,
}

impl SweepRecord {
    pub fn new(freqs: Vec<f64>, s21: Vec<Complex64>, meta: SweepMeta) -> Result<Self, MeasurementError> {
        check_grid(&freqs).map_err(MeasurementError::InvalidSweep)?;
        if s21.len() != freqs.len() {
            return Err(MeasurementError::InvalidSweep(format!(
                "{} S21 values for {} frequencies",
                s21.len(),
                freqs.len()
            )));
        }
        if s21.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(MeasurementError::InvalidSweep("non-finite S21 value".into()));
        }
        Ok(Self { freqs, s21, meta })
    }

    /// Step of the grid; zero for a single-point sweep.
    pub fn df(&self) -> f64 {
        grid_step(&self.freqs)
    }

    /// Uniform sweep `f_min + k df`, `k = 0..s21.len()`.
    pub fn uniform(f_min: f64, df: f64, s21: Vec<Complex64>, meta: SweepMeta) -> Result<Self, MeasurementError> {
        let freqs = (0..s21.len()).map(|k| f_min + k as f64 * df).collect();
        Self::new(freqs, s21, meta)
    }

    pub fn freqs(&self) -> &[f64] {
        &self.freqs
    }

    pub fn s21(&self) -> &[Complex64] {
        &self.s21
    }

    pub fn len(&self) -> usize {
        self.freqs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.freqs.is_empty()
    }

    pub fn f_min(&self) -> f64 {
        self.freqs[0]
    }

    pub fn f_max(&self) -> f64 {
        self.freqs[self.freqs.len() - 1]
    }
}

fn grid_step(freqs: &[f64]) -> f64 {
    if freqs.len() < 2 {
        return 0.0;
    }
    (freqs[freqs.len() - 1] - freqs[0]) / (freqs.len() - 1) as f64
}

pub(crate) fn check_grid(freqs: &[f64]) -> Result<(), String> {
    first_grid_violation(freqs).map_or(Ok(()), |(_, msg)| Err(msg))
}

/// Index of the first frequency breaking the grid invariant, with a reason.
pub(crate) fn first_grid_violation(freqs: &[f64]) -> Option<(usize, String)> {
    if freqs.is_empty() {
        return Some((0, "sweep has no frequency points".into()));
    }
    if let Some(i) = freqs.iter().position(|f| !f.is_finite() || *f < 0.0) {
        return Some((i, "frequency must be finite and non-negative".into()));
    }
    for i in 1..freqs.len() {
        if freqs[i] <= freqs[i - 1] {
            return Some((i, "frequencies must be strictly increasing".into()));
        }
    }
    if freqs.len() == 1 {
        return None;
    }
    // each step is compared with the first one, so the error points at the
    // row where the grid breaks
    let first = freqs[1] - freqs[0];
    for i in 2..freqs.len() {
        let d = freqs[i] - freqs[i - 1];
        if (d - first).abs() > GRID_TOLERANCE * first {
            return Some((i, "non-uniform frequency step".into()));
        }
    }
    None
}

fn same_grid(a: &[f64], b: &[f64]) -> bool {
    if a.len() != b.len() {
        return false;
    }
    let scale = grid_step(a);
    a.iter().zip(b).all(|(x, y)| (x - y).abs() <= GRID_TOLERANCE * scale)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AveragingMode {
    /// Phase-coherent pointwise mean of S21.
    #[default]
    Complex,
    /// Mean of |S21|^2; the result carries `sqrt(mean)` with zero phase.
    Power,
}

/// Realizations of one location combined on their shared grid.
#[derive(Debug, Clone, PartialEq)]
pub struct AveragedSweep {
    freqs: Vec<f64>,
    s21_avg: Vec<Complex64>,
    pub n_realizations: usize,
    /// Location metadata; `realization` is that of the first input.
    pub meta: SweepMeta,
}

impl AveragedSweep {
    pub fn freqs(&self) -> &[f64] {
        &self.freqs
    }

    pub fn s21(&self) -> &[Complex64] {
        &self.s21_avg
    }

    pub fn len(&self) -> usize {
        self.freqs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.freqs.is_empty()
    }

    pub fn f_min(&self) -> f64 {
        self.freqs[0]
    }

    pub fn f_max(&self) -> f64 {
        self.freqs[self.freqs.len() - 1]
    }

    pub fn df(&self) -> f64 {
        grid_step(&self.freqs)
    }
}

impl From<SweepRecord> for AveragedSweep {
    fn from(r: SweepRecord) -> Self {
        Self {
            freqs: r.freqs,
            s21_avg: r.s21,
            n_realizations: 1,
            meta: r.meta,
        }
    }
}

pub fn average_realizations(records: &[SweepRecord], mode: AveragingMode) -> Result<AveragedSweep, MeasurementError> {
    let first = records.first().ok_or(MeasurementError::Empty)?;
    for r in &records[1..] {
        if !same_grid(&first.freqs, &r.freqs) {
            return Err(MeasurementError::GridMismatch);
        }
        if !first.meta.same_location(&r.meta) {
            return Err(MeasurementError::MetadataMismatch(format!(
                "{:?} vs {:?}",
                first.meta, r.meta
            )));
        }
    }
    let count = records.len() as f64;
    let s21_avg = (0..first.len())
        .map(|k| match mode {
            AveragingMode::Complex => records.iter().map(|r| r.s21[k]).sum::<Complex64>() / count,
            AveragingMode::Power => {
                let p = records.iter().map(|r| r.s21[k].norm_sqr()).sum::<f64>() / count;
                Complex64::new(p.sqrt(), 0.0)
            }
        })
        .collect();
    Ok(AveragedSweep {
        freqs: first.freqs.clone(),
        s21_avg,
        n_realizations: records.len(),
        meta: first.meta.clone(),
    })
}

/// Band-averaged received power `mean |S21|^2`.
pub fn band_power(s21: &[Complex64]) -> f64 {
    s21.iter().map(|z| z.norm_sqr()).sum::<f64>() / s21.len() as f64
}

/// Band-averaged amplitude gain `sqrt(mean |S21|^2)`.
pub fn band_gain(sweep: &AveragedSweep) -> f64 {
    band_power(&sweep.s21_avg).sqrt()
}

/// Path loss in dB as the inverse of the band-averaged power gain.
pub fn path_loss_from_sweep(sweep: &AveragedSweep) -> Result<f64, MeasurementError> {
    if sweep.s21_avg.is_empty() {
        return Err(MeasurementError::Empty);
    }
    let p = band_power(&sweep.s21_avg);
    if p == 0.0 {
        return Err(MeasurementError::AllZero);
    }
    Ok(-10.0 * p.log10())
}

/// NLoS-to-LoS band gain ratio, both measured at the reference distance.
pub fn reflection_coefficient(
    nlos_at_ref: &AveragedSweep,
    los_at_ref: &AveragedSweep,
) -> Result<f64, MeasurementError> {
    if !same_grid(&nlos_at_ref.freqs, &los_at_ref.freqs) {
        return Err(MeasurementError::GridMismatch);
    }
    let los = band_gain(los_at_ref);
    if los == 0.0 {
        return Err(MeasurementError::ZeroLosGain);
    }
    Ok(band_gain(nlos_at_ref) / los)
}
