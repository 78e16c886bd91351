//! Closed-form AWGN bit error rates for the Gray QAM used by the modem.

use super::qam::{axis_labels, axis_scale};
use super::OfdmError;

/// Gaussian tail probability `Q(x) = erfc(x / sqrt2) / 2`.
pub fn q_function(x: f64) -> f64 {
    0.5 * libm::erfc(x / std::f64::consts::SQRT_2)
}

/// Exact bit error rate of Gray square QAM at `Eb/N0` (linear).
///
/// Each axis is a Gray PAM with independent noise, so the rate follows
/// from summing, for every transmitted level, the probability of landing
/// in each decision region times the number of differing bits.
pub fn ber_awgn(m_order: u32, eb_n0: f64) -> Result<f64, OfdmError> {
    let labels = axis_labels(m_order)?;
    let k = labels.len().trailing_zeros() as f64;
    let bits_per_symbol = 2.0 * k;
    let d = axis_scale(m_order);
    // per-axis noise std for unit symbol energy
    let sigma = (1.0 / (2.0 * bits_per_symbol * eb_n0)).sqrt();
    let l = labels.len();
    let level = |i: usize| ((l - 1) as f64 - 2.0 * i as f64) * d;
    let mut errors = 0.0;
    for i in 0..l {
        for j in 0..l {
            if i == j {
                continue;
            }
            // region j spans (level(j) - d, level(j) + d), open at the ends
            let upper = if j == 0 { f64::INFINITY } else { level(j) + d };
            let lower = if j == l - 1 { f64::NEG_INFINITY } else { level(j) - d };
            let p = prob_between((lower - level(i)) / sigma, (upper - level(i)) / sigma);
            errors += p * (labels[i] ^ labels[j]).count_ones() as f64;
        }
    }
    Ok(errors / (l as f64 * k))
}

/// `P(a < Z < b)` for standard normal `Z`, arranged to avoid `1 - (1 - x)`.
fn prob_between(a: f64, b: f64) -> f64 {
    if a >= 0.0 {
        q_function(a) - q_function(b)
    } else if b <= 0.0 {
        q_function(-b) - q_function(-a)
    } else {
        1.0 - q_function(-a) - q_function(b)
    }
}

/// `Eb/N0` (linear) at which [`ber_awgn`] equals `target`.
pub fn eb_n0_for_ber(m_order: u32, target: f64) -> Result<f64, OfdmError> {
    if !(target > 0.0 && target < 0.5) {
        return Err(OfdmError::InvalidConfig(format!(
            "target BER {target} outside (0, 0.5)"
        )));
    }
    let (mut lo, mut hi) = (-10.0f64, 40.0f64); // dB
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if ber_awgn(m_order, 10f64.powf(mid / 10.0))? > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(10f64.powf(0.5 * (lo + hi) / 10.0))
}
