use serde::{Deserialize, Serialize};
use std::f64::consts::LN_10;

use super::{require, ModelError};

/// Per-surface coefficients of the NLoS path-loss law plus the measured
/// reflection coefficient of the surface.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurfaceParams {
    pub label: String,
    pub alpha: f64,
    pub beta: f64,
    pub n: f64,
    /// NLoS-to-LoS amplitude gain ratio at the reference distance.
    pub rho: f64,
}

impl SurfaceParams {
    pub fn new(label: impl Into<String>, alpha: f64, beta: f64, n: f64, rho: f64) -> Result<Self, ModelError> {
        require(alpha > 0.0 && alpha.is_finite(), "alpha", alpha, "must be positive")?;
        require(beta > 0.0 && beta.is_finite(), "beta", beta, "must be positive")?;
        require(n > 0.0 && n.is_finite(), "n", n, "must be positive")?;
        require(rho > 0.0 && rho < 1.0, "rho", rho, "must lie in (0, 1)")?;
        Ok(Self {
            label: label.into(),
            alpha,
            beta,
            n,
            rho,
        })
    }

    /// White passenger car body.
    pub fn white() -> Self {
        Self::preset("white", 0.9185, 4.703, 0.7189, 0.0774)
    }

    /// Orange light commercial vehicle body.
    pub fn orange() -> Self {
        Self::preset("orange", 0.7871, 5.477, 0.9998, 0.0243)
    }

    /// Black passenger car body.
    pub fn black() -> Self {
        Self::preset("black", 0.7516, 5.384, 0.9238, 0.0156)
    }

    pub fn presets() -> [Self; 3] {
        [Self::white(), Self::orange(), Self::black()]
    }

    /// Looks up a built-in surface by label (case-insensitive).
    pub fn by_label(label: &str) -> Option<Self> {
        Self::presets()
            .into_iter()
            .find(|s| s.label.eq_ignore_ascii_case(label))
    }

    fn preset(label: &str, alpha: f64, beta: f64, n: f64, rho: f64) -> Self {
        Self {
            label: label.to_owned(),
            alpha,
            beta,
            n,
            rho,
        }
    }
}

/// Distance law anchored at a reference distance `d0` where the path loss
/// equals `pl_ref`. The law is relative, so `pl_ref` always comes from the
/// caller.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathLossModel {
    pub surface: SurfaceParams,
    pub d0: f64,
    pub pl_ref: f64,
}

impl PathLossModel {
    pub fn new(surface: SurfaceParams, d0: f64, pl_ref: f64) -> Result<Self, ModelError> {
        require(d0 > 0.0 && d0.is_finite(), "d0", d0, "must be positive")?;
        require(pl_ref.is_finite(), "pl_ref", pl_ref, "must be finite")?;
        Ok(Self { surface, d0, pl_ref })
    }

    pub fn path_loss_db(&self, d: f64) -> Result<f64, ModelError> {
        path_loss_db(self, d)
    }

    pub fn gain_amplitude(&self, d: f64) -> Result<f64, ModelError> {
        channel_gain_amplitude(self, d)
    }

    /// Distance beyond which the law starts to *decrease*, if any.
    ///
    /// The slope of the bracketed log term is `ln(alpha) - n*d0^2/d^2 + beta/d`.
    /// For `alpha < 1` it turns negative again past the larger root of
    /// `ln(alpha) d^2 + beta d - n d0^2`.
    pub fn monotone_until(&self) -> Option<f64> {
        let s = &self.surface;
        let la = s.alpha.ln();
        if la >= 0.0 {
            return None;
        }
        let disc = s.beta * s.beta + 4.0 * la * s.n * self.d0 * self.d0;
        if disc < 0.0 {
            // slope negative everywhere
            return Some(self.d0);
        }
        let root = (-s.beta - disc.sqrt()) / (2.0 * la);
        (root > self.d0).then_some(root).or(Some(self.d0))
    }
}

/// Electrical path loss in dB at reflector-receiver distance `d`.
///
/// Evaluated in log form, `10/ln10 * [(d - d0)(ln a - n d0/d) + b ln(d/d0)]`,
/// which is identical to the power form but never underflows. At `d == d0`
/// both terms vanish and `pl_ref` is returned unchanged.
pub fn path_loss_db(model: &PathLossModel, d: f64) -> Result<f64, ModelError> {
    let d0 = model.d0;
    require(d0 > 0.0, "d0", d0, "must be positive")?;
    require(d.is_finite(), "d", d, "must be finite")?;
    if d < d0 {
        return Err(ModelError::BelowReference { d, d0 });
    }
    let s = &model.surface;
    let excess = d - d0;
    let nepers = excess * (s.alpha.ln() - s.n * d0 / d) + s.beta * (d / d0).ln();
    Ok(10.0 / LN_10 * nepers + model.pl_ref)
}

/// Linear amplitude gain `10^(-PL/20)`.
///
/// The path loss is a ratio of electrical powers, so the amplitude uses the
/// /20 rule (optical-power dB would be /10).
pub fn channel_gain_amplitude(model: &PathLossModel, d: f64) -> Result<f64, ModelError> {
    path_loss_db(model, d).map(db_to_amplitude)
}

pub fn db_to_amplitude(pl_db: f64) -> f64 {
    10f64.powf(-pl_db / 20.0)
}
