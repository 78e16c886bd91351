//! Post-processing of VNA frequency sweeps (S21) into path loss, reflection
//! coefficients and channel impulse responses.

mod cir;
mod csv_io;
mod sweep;
mod touchstone;

pub use cir::{cir_from_sweep, f_target_for_resolution, fwhm, Cir, CirOptions, Window};
pub use csv_io::{parse_sweep_csv, write_sweep_csv};
pub use sweep::{
    average_realizations, band_gain, band_power, path_loss_from_sweep, reflection_coefficient, AveragedSweep,
    AveragingMode, Link, SweepMeta, SweepRecord, GRID_TOLERANCE,
};
pub use touchstone::{parse_touchstone, write_touchstone};

use std::fmt;
use thiserror::Error;

/// Parse failure with a 1-based line number (0 when the whole input is at
/// fault, e.g. it is not UTF-8).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseError {
    pub line: usize,
    pub message: String,
}

impl ParseError {
    pub(crate) fn new(line: usize, message: impl Into<String>) -> Self {
        Self {
            line,
            message: message.into(),
        }
    }
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}: {}", self.line, self.message)
    }
}

impl std::error::Error for ParseError {}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MeasurementError {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("invalid sweep: {0}")]
    InvalidSweep(String),
    #[error("no sweeps supplied")]
    Empty,
    #[error("frequency grids differ")]
    GridMismatch,
    #[error("sweep metadata differs: {0}")]
    MetadataMismatch(String),
    #[error("every S21 sample is exactly zero")]
    AllZero,
    #[error("line-of-sight reference has zero gain")]
    ZeroLosGain,
    #[error("target frequency {f_target} Hz is below the sweep maximum {f_max} Hz")]
    TargetBelowBand { f_target: f64, f_max: f64 },
    #[error("sweep step {df} Hz does not divide the target frequency {f_target} Hz")]
    StepDoesNotDivide { df: f64, f_target: f64 },
    #[error("impulse response never crosses half maximum on the {0} side of the peak")]
    NoHalfMaxCrossing(&'static str),
    #[error("impulse response is empty or identically zero")]
    DegenerateCir,
}
