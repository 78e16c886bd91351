//! Least-squares recovery of the path-loss coefficients and the WDGF tail
//! parameters from data.

mod lm;
mod path_loss;
mod wdgf;

pub use path_loss::{fit_path_loss, PathLossCoefficients, PathLossDataset};
pub use wdgf::{fit_wdgf, fit_wdgf_with, TailOrigin, WdgfFitOptions};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FitError {
    #[error("underdetermined: {got} points for {needed} parameters")]
    Underdetermined { needed: usize, got: usize },
    #[error("degenerate dataset: {0}")]
    Degenerate(String),
    #[error("tail too short: {len} samples, need at least {min}")]
    TailTooShort { len: usize, min: usize },
    #[error("length mismatch: {model} model values vs {data} data values")]
    LengthMismatch { model: usize, data: usize },
    #[error("no values")]
    Empty,
}

/// Outcome of a least-squares fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport<P> {
    pub params: P,
    /// Root-mean-square residual in the units of the data.
    pub rmse: f64,
    pub iterations: usize,
    pub converged: bool,
    /// `model - data` per point.
    pub residuals: Vec<f64>,
}

impl<P: Serialize> FitReport<P> {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("fit report serializes")
    }
}

/// Root-mean-square difference of two equal-length series.
pub fn rmse(model_curve: &[f64], data: &[f64]) -> Result<f64, FitError> {
    if model_curve.len() != data.len() {
        return Err(FitError::LengthMismatch {
            model: model_curve.len(),
            data: data.len(),
        });
    }
    if data.is_empty() {
        return Err(FitError::Empty);
    }
    Ok(rms(model_curve.iter().zip(data).map(|(m, d)| m - d)))
}

pub(crate) fn rms(residuals: impl ExactSizeIterator<Item = f64>) -> f64 {
    let n = residuals.len();
    (residuals.map(|r| r * r).sum::<f64>() / n as f64).sqrt()
}
