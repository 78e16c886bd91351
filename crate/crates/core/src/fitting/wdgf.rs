use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::lm::{minimize, LmOptions, LmResult};
use super::{rms, FitError, FitReport};
use crate::channel_models::WdgfParams;
use crate::measurement::Cir;

/// Where `dt = 0` sits in the input.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TailOrigin {
    /// At the largest |h| sample; earlier samples are dropped.
    #[default]
    Peak,
    /// At the first sample; the input already is a tail.
    Start,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WdgfFitOptions {
    pub origin: TailOrigin,
    /// The tail is cut at the first sample after the peak below this
    /// fraction of the peak.
    pub truncate_fraction: f64,
    pub min_samples: usize,
}

impl Default for WdgfFitOptions {
    fn default() -> Self {
        Self {
            origin: TailOrigin::Peak,
            truncate_fraction: 0.01,
            min_samples: 12,
        }
    }
}

/// One gamma term with its peak height `a` as amplitude parameter:
/// `a (tau c / alpha)^alpha exp(alpha - c tau)`, peaking at `tau = alpha / c`.
#[inline]
fn term(tau: f64, a: f64, c: f64, alpha: f64) -> f64 {
    if a == 0.0 {
        return 0.0;
    }
    if alpha == 0.0 {
        return a * (-c * tau).exp();
    }
    if tau == 0.0 {
        return 0.0;
    }
    a * (alpha * (1.0 + (tau * c / alpha).ln()) - c * tau).exp()
}

// x = [a1, ln c2, alpha_w, a3, ln c4, beta_w] in normalized units
fn model(x: &[f64], tau: f64) -> f64 {
    term(tau, x[0], x[1].exp(), x[2]) + term(tau, x[3], x[4].exp(), x[5])
}

const LOWER6: [f64; 6] = [0.0, f64::NEG_INFINITY, 0.0, 0.0, f64::NEG_INFINITY, 0.0];
const LOWER3: [f64; 3] = [0.0, f64::NEG_INFINITY, 0.0];

/// Fits the WDGF to a CIR tail starting at its peak sample.
pub fn fit_wdgf(cir: &Cir) -> Result<FitReport<WdgfParams>, FitError> {
    fit_wdgf_with(cir, &WdgfFitOptions::default())
}

/// Least-squares WDGF fit on linear amplitudes.
///
/// A single gamma term is fitted first; its solution seeds several
/// two-term starts (second decay rate and exponent perturbed, amplitudes
/// from a linear solve), and the lowest-cost result is returned.
pub fn fit_wdgf_with(cir: &Cir, opts: &WdgfFitOptions) -> Result<FitReport<WdgfParams>, FitError> {
    if !(opts.truncate_fraction > 0.0 && opts.truncate_fraction < 1.0) {
        return Err(FitError::Degenerate("truncate_fraction must lie in (0, 1)".into()));
    }
    let start = match opts.origin {
        TailOrigin::Peak => cir.peak_index(),
        TailOrigin::Start => 0,
    };
    let raw = &cir.samples[start..];
    let peak_at = raw
        .iter()
        .enumerate()
        .fold(0, |best, (i, v)| if v.abs() > raw[best].abs() { i } else { best });
    let peak = raw.get(peak_at).map_or(0.0, |v| v.abs());
    if peak <= 0.0 || !peak.is_finite() {
        return Err(FitError::Degenerate("tail is identically zero".into()));
    }
    let cut = raw[peak_at..]
        .iter()
        .position(|v| v.abs() < opts.truncate_fraction * peak)
        .map_or(raw.len(), |i| peak_at + i);
    let data = &raw[..cut];
    if data.len() < opts.min_samples.max(6) {
        return Err(FitError::TailTooShort {
            len: data.len(),
            min: opts.min_samples.max(6),
        });
    }

    // normalized axes: tau in [0, 1], amplitude peak 1
    let span = (data.len() - 1) as f64 * cir.t_res;
    let taus: Vec<f64> = (0..data.len()).map(|k| k as f64 / (data.len() - 1) as f64).collect();
    let ys: Vec<f64> = data.iter().map(|v| v / peak).collect();
    let m = ys.len();
    let tau_peak = taus[peak_at];

    let single = |x: &[f64], r: &mut [f64]| {
        let c = x[1].exp();
        for ((ri, &t), &y) in r.iter_mut().zip(&taus).zip(&ys) {
            *ri = term(t, x[0], c, x[2]) - y;
        }
    };
    let double = |x: &[f64], r: &mut [f64]| {
        for ((ri, &t), &y) in r.iter_mut().zip(&taus).zip(&ys) {
            *ri = model(x, t) - y;
        }
    };

    // pure exponential reaching the cut level at the end of the window
    let decay = (1.0 / opts.truncate_fraction).ln() / (1.0 - tau_peak).max(0.02);
    let mut single_seeds = vec![[1.0, decay.ln(), 0.0]];
    if tau_peak > 0.0 {
        for alpha in [0.5, 1.0, 2.0, 4.0] {
            single_seeds.push([1.0, (alpha / tau_peak).ln(), alpha]);
        }
    }
    let singles: Vec<LmResult> = single_seeds
        .par_iter()
        .map(|x0| minimize(single, x0, &LOWER3, m, LmOptions::default()))
        .collect();
    let s = pick(singles);

    let (c, alpha) = (s.x[1].exp(), s.x[2]);
    let mut seeds: Vec<[f64; 6]> = vec![[s.x[0], s.x[1], alpha, 0.0, s.x[1], alpha]];
    for k in [0.25, 0.5, 2.0, 4.0] {
        for beta in [(alpha - 1.0).max(0.0), alpha + 1.0] {
            let c4 = c * k;
            let (a1, a3) = amplitudes(&taus, &ys, (c, alpha), (c4, beta));
            seeds.push([a1, s.x[1], alpha, a3, c4.ln(), beta]);
        }
    }
    let runs: Vec<LmResult> = seeds
        .par_iter()
        .map(|x0| minimize(double, x0, &LOWER6, m, LmOptions::default()))
        .collect();
    let best = pick(runs);

    let params = to_physical(&best.x, peak, span);
    let residuals: Vec<f64> = (0..m)
        .map(|k| params.eval_unchecked(k as f64 * cir.t_res) - data[k])
        .collect();
    Ok(FitReport {
        params,
        rmse: rms(residuals.iter().copied()),
        iterations: best.iterations,
        converged: best.converged,
        residuals,
    })
}

fn pick(runs: Vec<LmResult>) -> LmResult {
    runs.into_iter()
        .reduce(|a, b| {
            // converged first, then lower cost
            if (b.converged && !a.converged) || (b.converged == a.converged && b.cost < a.cost) {
                b
            } else {
                a
            }
        })
        .expect("at least one start")
}

/// Non-negative least-squares amplitudes for two fixed term shapes.
fn amplitudes(taus: &[f64], ys: &[f64], t1: (f64, f64), t2: (f64, f64)) -> (f64, f64) {
    let (mut s11, mut s12, mut s22, mut s1y, mut s2y) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for (&t, &y) in taus.iter().zip(ys) {
        let g1 = term(t, 1.0, t1.0, t1.1);
        let g2 = term(t, 1.0, t2.0, t2.1);
        s11 += g1 * g1;
        s12 += g1 * g2;
        s22 += g2 * g2;
        s1y += g1 * y;
        s2y += g2 * y;
    }
    let det = s11 * s22 - s12 * s12;
    if det > 1e-12 * s11 * s22 {
        let a1 = (s22 * s1y - s12 * s2y) / det;
        let a2 = (s11 * s2y - s12 * s1y) / det;
        if a1 >= 0.0 && a2 >= 0.0 {
            return (a1, a2);
        }
    }
    // one term only, whichever explains more
    let a1 = (s1y / s11).max(0.0);
    let a2 = (s2y / s22).max(0.0);
    if a1 * s1y >= a2 * s2y {
        (a1, 0.0)
    } else {
        (0.0, a2)
    }
}

fn to_physical(x: &[f64], peak: f64, span: f64) -> WdgfParams {
    let convert = |a: f64, lc: f64, alpha: f64| {
        let c = lc.exp();
        let amp = if alpha == 0.0 {
            peak * a
        } else {
            peak * a * (alpha * (1.0 + (c / (alpha * span)).ln())).exp()
        };
        (amp, c / span)
    };
    let (c1, c2) = convert(x[0], x[1], x[2]);
    let (c3, c4) = convert(x[3], x[4], x[5]);
    WdgfParams {
        c1,
        c2,
        c3,
        c4,
        alpha_w: x[2],
        beta_w: x[5],
    }
}
