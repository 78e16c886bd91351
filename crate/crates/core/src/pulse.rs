//! Half-maximum width of a sampled pulse.

/// Fractional sample positions of the outermost half-maximum crossings of
/// `mag` (already non-negative).
///
/// The left edge is taken where the pulse first reaches half of its peak and
/// the right edge after the last sample still at or above half. Both edges
/// are linearly interpolated between neighbouring samples.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct HalfMax {
    pub peak_index: usize,
    /// `None` when the very first sample is already at or above half max.
    pub left: Option<f64>,
    /// `None` when the last sample is still at or above half max.
    pub right: Option<f64>,
}

pub(crate) fn half_max(mag: &[f64]) -> Option<HalfMax> {
    let (peak_index, peak) =
        mag.iter()
            .copied()
            .enumerate()
            .fold(None, |best: Option<(usize, f64)>, (i, v)| match best {
                Some((_, b)) if b >= v => best,
                _ => Some((i, v)),
            })?;
    if peak <= 0.0 || !peak.is_finite() {
        return None;
    }
    let half = 0.5 * peak;
    let first = mag.iter().position(|&v| v >= half)?;
    let last = mag.iter().rposition(|&v| v >= half)?;

    let left = (first > 0).then(|| {
        let (a, b) = (mag[first - 1], mag[first]);
        (first - 1) as f64 + (half - a) / (b - a)
    });
    let right = (last + 1 < mag.len()).then(|| {
        let (a, b) = (mag[last], mag[last + 1]);
        last as f64 + (a - half) / (a - b)
    });
    Some(HalfMax {
        peak_index,
        left,
        right,
    })
}
