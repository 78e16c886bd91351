//! Closed-form channel models for reflected (NLoS) vehicular VLC links.
//!
//! Three models live here:
//!
//! - [`PathLossModel`]: the empirical distance law fitted per reflecting
//!   surface, evaluated in electrical dB.
//! - [`WdgfParams`]: the weighted double gamma tail of the impulse response.
//! - [`LambertianScene`]: the single-order Lambertian reflection benchmark.
//!
//! Everything is a pure function of immutable parameters.

mod lambertian;
mod path_loss;
mod wdgf;

pub use lambertian::{
    concentrator_gain, lambertian_gain, single_reflection_total, FilterGain, LambertianScene, ScenePatch,
};
pub use path_loss::{channel_gain_amplitude, db_to_amplitude, path_loss_db, PathLossModel, SurfaceParams};
pub use wdgf::{wdgf_eval, wdgf_fwhm, wdgf_fwhm_default, WdgfParams, DEFAULT_FWHM_T_MAX, DEFAULT_FWHM_T_RES};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("distance {d} m is below the reference distance {d0} m")]
    BelowReference { d: f64, d0: f64 },
    #[error("invalid parameter `{name}` = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },
    #[error("curve never falls below half maximum within {t_max} s")]
    NoHalfMaxCrossing { t_max: f64 },
}

pub(crate) fn require(ok: bool, name: &'static str, value: f64, reason: &'static str) -> Result<(), ModelError> {
    if ok {
        Ok(())
    } else {
        Err(ModelError::InvalidParameter { name, value, reason })
    }
}
