use serde::{Deserialize, Serialize};

use super::{require, ModelError};
use crate::pulse::half_max;

/// Sampling step used for FWHM evaluation unless told otherwise.
pub const DEFAULT_FWHM_T_RES: f64 = 1e-9;
/// Evaluation horizon used for FWHM unless told otherwise.
pub const DEFAULT_FWHM_T_MAX: f64 = 10e-6;

/// Weighted double gamma function
/// `h(dt) = c1 dt^alpha_w exp(-c2 dt) + c3 dt^beta_w exp(-c4 dt)`,
/// with `dt` in seconds measured from the start of the tail.
///
/// `alpha_w`/`beta_w` are shape exponents and unrelated to the path-loss
/// coefficients in [`SurfaceParams`](super::SurfaceParams).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WdgfParams {
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub c4: f64,
    pub alpha_w: f64,
    pub beta_w: f64,
}

impl WdgfParams {
    pub fn new(c1: f64, c2: f64, c3: f64, c4: f64, alpha_w: f64, beta_w: f64) -> Result<Self, ModelError> {
        let p = Self {
            c1,
            c2,
            c3,
            c4,
            alpha_w,
            beta_w,
        };
        p.validate()?;
        Ok(p)
    }

    /// Single gamma term (`c3 = 0`).
    pub fn single(c1: f64, c2: f64, alpha_w: f64) -> Self {
        Self {
            c1,
            c2,
            c3: 0.0,
            c4: c2,
            alpha_w,
            beta_w: alpha_w,
        }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        require(
            self.c2 > 0.0 && self.c2.is_finite(),
            "c2",
            self.c2,
            "decay rate must be positive",
        )?;
        require(
            self.c4 > 0.0 && self.c4.is_finite(),
            "c4",
            self.c4,
            "decay rate must be positive",
        )?;
        require(self.alpha_w >= 0.0, "alpha_w", self.alpha_w, "must be non-negative")?;
        require(self.beta_w >= 0.0, "beta_w", self.beta_w, "must be non-negative")?;
        require(self.c1.is_finite(), "c1", self.c1, "must be finite")?;
        require(self.c3.is_finite(), "c3", self.c3, "must be finite")?;
        Ok(())
    }

    /// Same curve stretched in time by `factor` (decay rates divided by it).
    /// Amplitudes are rescaled so the peak height is preserved.
    pub fn time_scaled(&self, factor: f64) -> Self {
        Self {
            c1: self.c1 / factor.powf(self.alpha_w),
            c2: self.c2 / factor,
            c3: self.c3 / factor.powf(self.beta_w),
            c4: self.c4 / factor,
            ..*self
        }
    }

    #[inline]
    pub(crate) fn eval_unchecked(&self, dt: f64) -> f64 {
        let a = if self.c1 == 0.0 {
            0.0
        } else {
            self.c1 * dt.powf(self.alpha_w) * (-self.c2 * dt).exp()
        };
        let b = if self.c3 == 0.0 {
            0.0
        } else {
            self.c3 * dt.powf(self.beta_w) * (-self.c4 * dt).exp()
        };
        a + b
    }
}

/// Modeled tail amplitude `dt` seconds after the tail origin.
pub fn wdgf_eval(params: &WdgfParams, dt: f64) -> Result<f64, ModelError> {
    require(dt >= 0.0, "dt", dt, "time offset must be non-negative")?;
    Ok(params.eval_unchecked(dt))
}

/// FWHM of the modeled tail sampled every `t_res` seconds on `[0, t_max]`.
///
/// The left edge is clamped to `dt = 0` when the curve starts at or above
/// half maximum (pure exponential tails).
pub fn wdgf_fwhm(params: &WdgfParams, t_res: f64, t_max: f64) -> Result<f64, ModelError> {
    require(t_res > 0.0 && t_res.is_finite(), "t_res", t_res, "must be positive")?;
    require(t_max > t_res && t_max.is_finite(), "t_max", t_max, "must exceed t_res")?;
    params.validate()?;
    let n = (t_max / t_res).floor() as usize + 1;
    let samples: Vec<f64> = (0..n).map(|k| params.eval_unchecked(k as f64 * t_res).abs()).collect();
    let hm = half_max(&samples).ok_or(ModelError::NoHalfMaxCrossing { t_max })?;
    let right = hm.right.ok_or(ModelError::NoHalfMaxCrossing { t_max })?;
    let left = hm.left.unwrap_or(0.0);
    Ok((right - left) * t_res)
}

/// [`wdgf_fwhm`] at 1 ns resolution over 10 us.
pub fn wdgf_fwhm_default(params: &WdgfParams) -> Result<f64, ModelError> {
    wdgf_fwhm(params, DEFAULT_FWHM_T_RES, DEFAULT_FWHM_T_MAX)
}
