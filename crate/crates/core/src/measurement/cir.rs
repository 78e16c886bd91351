use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::fmt::Write as _;

use super::sweep::GRID_TOLERANCE;
use super::{AveragedSweep, MeasurementError};
use crate::pulse::half_max;

/// Largest one-sided bin count accepted by [`cir_from_sweep`].
const MAX_BINS: usize = 1 << 26;

/// Uniformly sampled, real-valued channel impulse response.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cir {
    /// Sample spacing, s.
    pub t_res: f64,
    /// Time of the first sample, s.
    pub t0: f64,
    pub samples: Vec<f64>,
    /// Largest discarded imaginary part relative to the peak magnitude.
    #[serde(default)]
    pub imag_residue: f64,
}

impl Cir {
    pub fn new(t_res: f64, samples: Vec<f64>, t0: f64) -> Result<Self, MeasurementError> {
        if t_res <= 0.0 || !t_res.is_finite() || samples.is_empty() || !t0.is_finite() {
            return Err(MeasurementError::DegenerateCir);
        }
        Ok(Self {
            t_res,
            t0,
            samples,
            imag_residue: 0.0,
        })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn time(&self, index: usize) -> f64 {
        self.t0 + index as f64 * self.t_res
    }

    /// Index of the largest |h| (first one on ties).
    pub fn peak_index(&self) -> usize {
        let mut best = 0;
        for (i, v) in self.samples.iter().enumerate() {
            if v.abs() > self.samples[best].abs() {
                best = i;
            }
        }
        best
    }

    pub fn peak_time(&self) -> f64 {
        self.time(self.peak_index())
    }

    pub fn energy(&self) -> f64 {
        self.samples.iter().map(|v| v * v).sum()
    }

    /// The response from its peak sample onward, re-based so `t0` is the
    /// peak time.
    pub fn tail_from_peak(&self) -> Cir {
        let p = self.peak_index();
        Cir {
            t_res: self.t_res,
            t0: self.time(p),
            samples: self.samples[p..].to_vec(),
            imag_residue: self.imag_residue,
        }
    }

    /// `t_s,h` CSV.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t_s,h\n");
        for (i, h) in self.samples.iter().enumerate() {
            let _ = writeln!(out, "{},{}", self.time(i), h);
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Window {
    #[default]
    None,
    /// Hann taper across the measured band.
    Hann,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CirOptions {
    pub window: Window,
}

/// Smallest `f_target` on the sweep's bin grid whose Hermitian transform has
/// a sample spacing of at most `t_res`.
///
/// The bin count is rounded up to a 7-smooth number so the transform
/// factors into small radices.
pub fn f_target_for_resolution(df: f64, t_res: f64) -> f64 {
    let needed = (1.0 / (2.0 * t_res * df)).ceil().max(1.0) as usize;
    next_smooth(needed) as f64 * df
}

fn next_smooth(mut n: usize) -> usize {
    loop {
        let mut m = n;
        for p in [2, 3, 5, 7] {
            while m % p == 0 {
                m /= p;
            }
        }
        if m == 1 {
            return n;
        }
        n += 1;
    }
}

/// Impulse response from a band-limited sweep.
///
/// The measured bins are placed on the grid `k * df`, `k = 0..=K` with
/// `K = f_target / df`. Bins below `f_min` and above `f_max` stay zero, DC
/// and Nyquist are forced to zero, and the negative half is filled with
/// complex conjugates so the `2K`-point inverse DFT (scaled by `1/2K`) is
/// real. Samples are spaced `1 / (2 K df)`.
pub fn cir_from_sweep(sweep: &AveragedSweep, f_target: f64, opts: CirOptions) -> Result<Cir, MeasurementError> {
    if sweep.len() < 2 {
        return Err(MeasurementError::InvalidSweep(
            "need at least 2 frequency points".into(),
        ));
    }
    let df = sweep.df();
    let f_max = sweep.f_max();
    if !(f_target.is_finite()) || f_target < f_max * (1.0 - 1e-12) {
        return Err(MeasurementError::TargetBelowBand { f_target, f_max });
    }
    let ratio = f_target / df;
    let bins = ratio.round();
    if (ratio - bins).abs() > GRID_TOLERANCE * ratio {
        return Err(MeasurementError::StepDoesNotDivide { df, f_target });
    }
    let bins = bins as usize;
    if bins > MAX_BINS {
        return Err(MeasurementError::InvalidSweep(format!(
            "transform of {bins} bins exceeds the supported size"
        )));
    }
    let n = 2 * bins;

    let nf = sweep.len();
    let weight = |i: usize| match opts.window {
        Window::None => 1.0,
        Window::Hann => 0.5 * (1.0 - (2.0 * PI * i as f64 / (nf - 1) as f64).cos()),
    };

    let mut spectrum = vec![Complex64::new(0.0, 0.0); n];
    for (i, (f, z)) in sweep.freqs().iter().zip(sweep.s21()).enumerate() {
        let k = (f / df).round() as usize;
        if k == 0 || k >= bins {
            continue;
        }
        let v = z * weight(i);
        spectrum[k] = v;
        spectrum[n - k] = v.conj();
    }

    FftPlanner::new().plan_fft_inverse(n).process(&mut spectrum);
    let scale = 1.0 / n as f64;
    let peak = spectrum.iter().map(|z| z.re.abs()).fold(0.0, f64::max) * scale;
    let max_imag = spectrum.iter().map(|z| z.im.abs()).fold(0.0, f64::max) * scale;
    let samples = spectrum.into_iter().map(|z| z.re * scale).collect();
    Ok(Cir {
        t_res: 1.0 / (n as f64 * df),
        t0: 0.0,
        samples,
        imag_residue: if peak > 0.0 { max_imag / peak } else { 0.0 },
    })
}

/// Full width at half maximum of |h|, measured between the first and the
/// last half-maximum crossings around the peak.
pub fn fwhm(cir: &Cir) -> Result<f64, MeasurementError> {
    let mag: Vec<f64> = cir.samples.iter().map(|v| v.abs()).collect();
    let hm = half_max(&mag).ok_or(MeasurementError::DegenerateCir)?;
    let left = hm.left.ok_or(MeasurementError::NoHalfMaxCrossing("left"))?;
    let right = hm.right.ok_or(MeasurementError::NoHalfMaxCrossing("right"))?;
    Ok((right - left) * cir.t_res)
}
