use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_PI_2, PI};

use super::{require, ModelError};

/// Optical filter transmission `T_s(psi)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FilterGain {
    Constant(f64),
    /// `(psi_rad, gain)` pairs sorted by angle, linearly interpolated and
    /// held constant beyond the ends.
    Tabulated(Vec<(f64, f64)>),
}

impl Default for FilterGain {
    fn default() -> Self {
        FilterGain::Constant(1.0)
    }
}

impl FilterGain {
    pub fn at(&self, psi: f64) -> f64 {
        match self {
            FilterGain::Constant(g) => *g,
            FilterGain::Tabulated(table) => {
                let Some(&(first_psi, first_g)) = table.first() else {
                    return 0.0;
                };
                if psi <= first_psi {
                    return first_g;
                }
                for w in table.windows(2) {
                    let ((x0, y0), (x1, y1)) = (w[0], w[1]);
                    if psi <= x1 {
                        return y0 + (y1 - y0) * (psi - x0) / (x1 - x0);
                    }
                }
                table[table.len() - 1].1
            }
        }
    }
}

/// Geometry and optics of one reflecting patch seen by one receiver.
///
/// Angles are in radians. `phi` sits inside the Lambertian `cos^m` term while
/// `alpha_ang` is the irradiance angle onto the reflector; set them equal for
/// a single irradiance angle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LambertianScene {
    /// Lambertian order of the source.
    pub m: f64,
    /// Photodetector active area, m^2.
    pub a_r: f64,
    /// Differential reflector area, m^2.
    pub da_r: f64,
    pub rho: f64,
    pub phi: f64,
    pub alpha_ang: f64,
    pub beta_ang: f64,
    pub psi: f64,
    /// Receiver field-of-view half angle.
    pub psi_c: f64,
    #[serde(default)]
    pub t_s: FilterGain,
    pub n_refr: f64,
}

impl LambertianScene {
    pub fn validate(&self) -> Result<(), ModelError> {
        require(self.m >= 0.0, "m", self.m, "Lambertian order must be non-negative")?;
        require(self.a_r > 0.0, "a_r", self.a_r, "must be positive")?;
        require(self.da_r > 0.0, "da_r", self.da_r, "must be positive")?;
        require((0.0..=1.0).contains(&self.rho), "rho", self.rho, "must lie in [0, 1]")?;
        require(
            self.psi_c > 0.0 && self.psi_c <= FRAC_PI_2,
            "psi_c",
            self.psi_c,
            "must lie in (0, pi/2]",
        )?;
        for (name, v) in [
            ("phi", self.phi),
            ("alpha_ang", self.alpha_ang),
            ("beta_ang", self.beta_ang),
            ("psi", self.psi),
        ] {
            require((0.0..=FRAC_PI_2).contains(&v), name, v, "angle must lie in [0, pi/2]")?;
        }
        Ok(())
    }
}

/// Gain of a non-imaging concentrator: `n^2 / sin^2(psi_c)` inside the field
/// of view, zero outside.
pub fn concentrator_gain(n_refr: f64, psi_c: f64, psi: f64) -> Result<f64, ModelError> {
    require(
        psi_c > 0.0 && psi_c <= FRAC_PI_2,
        "psi_c",
        psi_c,
        "must lie in (0, pi/2]",
    )?;
    if (0.0..=psi_c).contains(&psi) {
        let s = psi_c.sin();
        Ok(n_refr * n_refr / (s * s))
    } else {
        Ok(0.0)
    }
}

/// Single-order reflected DC gain through one patch at transmitter-reflector
/// distance `d1` and reflector-receiver distance `d2`.
pub fn lambertian_gain(scene: &LambertianScene, d1: f64, d2: f64) -> Result<f64, ModelError> {
    require(d1 > 0.0 && d1.is_finite(), "d1", d1, "distance must be positive")?;
    require(d2 > 0.0 && d2.is_finite(), "d2", d2, "distance must be positive")?;
    scene.validate()?;
    if scene.psi > scene.psi_c {
        return Ok(0.0);
    }
    let geometric = (scene.m + 1.0) * scene.a_r / (2.0 * PI * PI * d1 * d1 * d2 * d2);
    let optics = scene.phi.cos().powf(scene.m)
        * scene.alpha_ang.cos()
        * scene.beta_ang.cos()
        * scene.t_s.at(scene.psi)
        * concentrator_gain(scene.n_refr, scene.psi_c, scene.psi)?
        * scene.psi.cos();
    Ok(geometric * scene.rho * scene.da_r * optics)
}

/// One reflector patch placed at its own distances.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenePatch {
    pub scene: LambertianScene,
    pub d1: f64,
    pub d2: f64,
}

/// Sum of single-order contributions over caller-provided patches.
pub fn single_reflection_total(patches: &[ScenePatch]) -> Result<f64, ModelError> {
    patches.iter().map(|p| lambertian_gain(&p.scene, p.d1, p.d2)).sum()
}
