use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::LN_10;

use super::lm::{minimize, LmOptions, LmResult};
use super::{rms, FitError, FitReport};
use crate::channel_models::{ModelError, SurfaceParams};

const STARTS: usize = 16;
const ALPHA_RANGE: (f64, f64) = (0.0, 2.0);
const BETA_RANGE: (f64, f64) = (0.0, 10.0);
const N_RANGE: (f64, f64) = (0.0, 2.0);
const FLOOR: f64 = 1e-9;

/// Measured `(d, PL)` pairs for one surface. `d0` and `pl_ref` are fixed
/// inputs of the fit, not fitted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathLossDataset {
    /// `(distance m, path loss dB)`.
    pub points: Vec<(f64, f64)>,
    pub d0: f64,
    pub pl_ref: f64,
}

impl PathLossDataset {
    pub fn new(points: Vec<(f64, f64)>, d0: f64, pl_ref: f64) -> Result<Self, FitError> {
        let ds = Self { points, d0, pl_ref };
        ds.validate()?;
        Ok(ds)
    }

    pub fn validate(&self) -> Result<(), FitError> {
        if self.points.len() < 4 {
            return Err(FitError::Underdetermined {
                needed: 3,
                got: self.points.len(),
            });
        }
        if !(self.d0 > 0.0 && self.d0.is_finite()) || !self.pl_ref.is_finite() {
            return Err(FitError::Degenerate("d0 must be positive and pl_ref finite".into()));
        }
        for &(d, pl) in &self.points {
            if !d.is_finite() || !pl.is_finite() {
                return Err(FitError::Degenerate("non-finite point".into()));
            }
            if d < self.d0 {
                return Err(FitError::Degenerate(format!("distance {d} m below d0 = {} m", self.d0)));
            }
        }
        let mut beyond: Vec<f64> = self.points.iter().map(|p| p.0).filter(|&d| d > self.d0).collect();
        beyond.sort_by(f64::total_cmp);
        beyond.dedup();
        if beyond.len() < 3 {
            return Err(FitError::Degenerate(
                "need at least 3 distinct distances beyond d0".into(),
            ));
        }
        Ok(())
    }
}

/// Fitted `(alpha, beta, n)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathLossCoefficients {
    pub alpha: f64,
    pub beta: f64,
    pub n: f64,
}

impl PathLossCoefficients {
    pub fn into_surface(self, label: impl Into<String>, rho: f64) -> Result<SurfaceParams, ModelError> {
        SurfaceParams::new(label, self.alpha, self.beta, self.n, rho)
    }
}

fn model_db(x: &[f64], d: f64, d0: f64, pl_ref: f64) -> f64 {
    let (alpha, beta, n) = (x[0], x[1], x[2]);
    10.0 / LN_10 * ((d - d0) * (alpha.ln() - n * d0 / d) + beta * (d / d0).ln()) + pl_ref
}

/// Latin-hypercube start points over the search box, fixed seed.
fn starts() -> Vec<[f64; 3]> {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut columns = [[0.0; STARTS]; 3];
    for (col, (lo, hi)) in columns.iter_mut().zip([ALPHA_RANGE, BETA_RANGE, N_RANGE]) {
        let mut strata: Vec<usize> = (0..STARTS).collect();
        strata.shuffle(&mut rng);
        for (v, s) in col.iter_mut().zip(strata) {
            let u: f64 = rng.random();
            *v = (lo + (hi - lo) * (s as f64 + u) / STARTS as f64).max(FLOOR);
        }
    }
    (0..STARTS)
        .map(|i| [columns[0][i], columns[1][i], columns[2][i]])
        .collect()
}

fn better(a: &(LmResult, f64), b: &(LmResult, f64)) -> bool {
    let (ra, na) = a;
    let (rb, nb) = b;
    if ra.converged != rb.converged {
        return ra.converged;
    }
    let tol = 1e-12 * ra.cost.max(rb.cost).max(1e-300);
    if (ra.cost - rb.cost).abs() > tol {
        return ra.cost < rb.cost;
    }
    na < nb
}

/// Least-squares fit of the path-loss law in the dB domain.
///
/// Runs a 16-point Latin-hypercube multistart over `alpha in (0, 2]`,
/// `beta in [0, 10]`, `n in (0, 2]`. The best converged start wins (ties:
/// lower RMSE, then smaller parameter norm). Points are sorted first, so the
/// result does not depend on their order.
pub fn fit_path_loss(data: &PathLossDataset) -> Result<FitReport<PathLossCoefficients>, FitError> {
    data.validate()?;
    let mut points = data.points.clone();
    points.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    let (d0, pl_ref) = (data.d0, data.pl_ref);
    let residuals = |x: &[f64], r: &mut [f64]| {
        for (ri, &(d, pl)) in r.iter_mut().zip(&points) {
            *ri = model_db(x, d, d0, pl_ref) - pl;
        }
    };
    let lower = [FLOOR, 0.0, 0.0];

    let runs: Vec<(LmResult, f64)> = starts()
        .par_iter()
        .map(|x0| {
            let res = minimize(residuals, x0, &lower, points.len(), LmOptions::default());
            let norm = res.x.iter().map(|v| v * v).sum::<f64>().sqrt();
            (res, norm)
        })
        .collect();
    let mut best = &runs[0];
    for run in &runs[1..] {
        if better(run, best) {
            best = run;
        }
    }
    let (res, _) = best;
    let params = PathLossCoefficients {
        alpha: res.x[0],
        beta: res.x[1],
        n: res.x[2],
    };
    Ok(FitReport {
        params,
        rmse: rms(res.residuals.iter().copied()),
        iterations: res.iterations,
        converged: res.converged,
        residuals: res.residuals.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel_models::{path_loss_db, PathLossModel};
    use proptest::prelude::*;
    use rand_distr::{Distribution, Normal};

    fn synth(surface: &SurfaceParams, noise: Option<(f64, u64)>) -> PathLossDataset {
        let model = PathLossModel::new(surface.clone(), 2.0, 0.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(noise.map_or(0, |n| n.1));
        let normal = Normal::new(0.0, noise.map_or(0.0, |n| n.0)).unwrap();
        let points = (1..=10)
            .map(|i| {
                let d = 2.0 * i as f64;
                (d, path_loss_db(&model, d).unwrap() + normal.sample(&mut rng))
            })
            .collect();
        PathLossDataset::new(points, 2.0, 0.0).unwrap()
    }

    /// Closed-form least squares: the law is linear in (ln alpha, n, beta).
    fn linear_oracle(data: &PathLossDataset) -> [f64; 3] {
        let d0 = data.d0;
        let k = 10.0 / LN_10;
        let mut ata = [[0.0; 3]; 3];
        let mut aty = [0.0; 3];
        for &(d, pl) in &data.points {
            let row = [k * (d - d0), -k * (d - d0) * d0 / d, k * (d / d0).ln()];
            for i in 0..3 {
                aty[i] += row[i] * (pl - data.pl_ref);
                for j in 0..3 {
                    ata[i][j] += row[i] * row[j];
                }
            }
        }
        let det3 = |m: [[f64; 3]; 3]| {
            m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
                + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
        };
        let det = det3(ata);
        let mut sol = [0.0; 3];
        for (c, s) in sol.iter_mut().enumerate() {
            let mut m = ata;
            for r in 0..3 {
                m[r][c] = aty[r];
            }
            *s = det3(m) / det;
        }
        // (ln alpha, n, beta) -> (alpha, beta, n)
        [sol[0].exp(), sol[2], sol[1]]
    }

    #[test]
    fn noiseless_recovery_all_surfaces() {
        for s in SurfaceParams::presets() {
            let fit = fit_path_loss(&synth(&s, None)).unwrap();
            assert!(fit.converged, "{}", s.label);
            let p = fit.params;
            assert!((p.alpha - s.alpha).abs() < 1e-4, "{} {p:?}", s.label);
            assert!((p.beta - s.beta).abs() < 1e-4, "{} {p:?}", s.label);
            assert!((p.n - s.n).abs() < 1e-4, "{} {p:?}", s.label);
            assert!(fit.rmse < 1e-6);
        }
    }

    #[test]
    fn noisy_fit_matches_linear_oracle() {
        for (i, s) in SurfaceParams::presets().iter().enumerate() {
            let data = synth(s, Some((0.2, 100 + i as u64)));
            let fit = fit_path_loss(&data).unwrap();
            let want = linear_oracle(&data);
            let got = [fit.params.alpha, fit.params.beta, fit.params.n];
            for k in 0..3 {
                assert!(
                    (got[k] - want[k]).abs() < 1e-6 * want[k].abs().max(1.0),
                    "{got:?} {want:?}"
                );
            }
            assert!(fit.rmse <= 0.25, "{}", fit.rmse);
            assert_eq!(fit.residuals.len(), 10);
        }
    }

    #[test]
    fn every_converged_start_reaches_zero_rmse_on_clean_data() {
        let data = synth(&SurfaceParams::white(), None);
        let pts = data.points.clone();
        for x0 in starts() {
            let res = minimize(
                |x, r| {
                    for (ri, &(d, pl)) in r.iter_mut().zip(&pts) {
                        *ri = model_db(x, d, 2.0, 0.0) - pl;
                    }
                },
                &x0,
                &[FLOOR, 0.0, 0.0],
                pts.len(),
                LmOptions::default(),
            );
            assert!(res.history.windows(2).all(|w| w[1] <= w[0]));
            if res.converged {
                assert!(rms(res.residuals.iter().copied()) < 1e-6, "{x0:?}");
            }
        }
    }

    #[test]
    fn underdetermined_and_degenerate() {
        let three = vec![(2.0, 0.0), (4.0, 1.0), (6.0, 2.0)];
        assert_eq!(
            PathLossDataset::new(three, 2.0, 0.0),
            Err(FitError::Underdetermined { needed: 3, got: 3 })
        );
        let repeated = vec![(2.0, 0.0), (4.0, 1.0), (4.0, 1.1), (4.0, 0.9)];
        assert!(matches!(
            PathLossDataset::new(repeated, 2.0, 0.0),
            Err(FitError::Degenerate(_))
        ));
        let below = vec![(1.0, 0.0), (4.0, 1.0), (6.0, 1.1), (8.0, 0.9)];
        assert!(matches!(
            PathLossDataset::new(below, 2.0, 0.0),
            Err(FitError::Degenerate(_))
        ));
    }

    #[test]
    fn report_json_has_fields() {
        let fit = fit_path_loss(&synth(&SurfaceParams::orange(), None)).unwrap();
        let v: serde_json::Value = serde_json::from_str(&fit.to_json()).unwrap();
        assert!(v["params"]["alpha"].is_f64());
        assert!(v["rmse"].is_f64());
        assert!(v["converged"].as_bool().unwrap());
        assert_eq!(v["residuals"].as_array().unwrap().len(), 10);
    }

    #[test]
    fn starts_cover_each_stratum_once() {
        let s = starts();
        for (dim, (lo, hi)) in [ALPHA_RANGE, BETA_RANGE, N_RANGE].into_iter().enumerate() {
            let mut seen = [false; STARTS];
            for p in &s {
                let k = (((p[dim] - lo) / (hi - lo)) * STARTS as f64).floor() as usize;
                seen[k.min(STARTS - 1)] = true;
            }
            assert!(seen.iter().all(|&b| b));
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]
        #[test]
        fn order_independent(seed in 0u64..1000) {
            let data = synth(&SurfaceParams::black(), Some((0.2, seed)));
            let mut shuffled = data.clone();
            shuffled.points.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
            let a = fit_path_loss(&data).unwrap();
            let b = fit_path_loss(&shuffled).unwrap();
            prop_assert_eq!(a.params, b.params);
            prop_assert_eq!(a.rmse, b.rmse);
        }
    }
}
