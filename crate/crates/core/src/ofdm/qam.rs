//! Gray-coded square QAM with unit average symbol energy.
//!
//! Each symbol takes `log2(M)` bits. The first half drives the in-phase
//! axis, the second half the quadrature axis, MSB first. On each axis the
//! `k` bits are a Gray code `g`; with `b = gray_to_binary(g)` the level is
//! `L - 1 - 2b` (`L = sqrt(M)`), so all-zero bits sit at the most positive
//! level. For 4-QAM:
//!
//! | bits | symbol         |
//! |------|----------------|
//! | 00   | (+1 + 1j)/sqrt2 |
//! | 01   | (+1 - 1j)/sqrt2 |
//! | 10   | (-1 + 1j)/sqrt2 |
//! | 11   | (-1 - 1j)/sqrt2 |

use num_complex::Complex64;

use super::OfdmError;

/// Bits per axis for a supported order (4, 16, 64).
pub(crate) fn axis_bits(m_order: u32) -> Result<u32, OfdmError> {
    match m_order {
        4 => Ok(1),
        16 => Ok(2),
        64 => Ok(3),
        _ => Err(OfdmError::InvalidConfig(format!(
            "QAM order {m_order} is not one of 4, 16, 64"
        ))),
    }
}

pub fn bits_per_symbol(m_order: u32) -> Result<usize, OfdmError> {
    axis_bits(m_order).map(|k| 2 * k as usize)
}

/// Amplitude scale that gives unit mean energy: levels +-1, +-3, ...
/// have mean energy `2 (M - 1) / 3` per symbol.
fn scale(m_order: u32) -> f64 {
    (1.5 / (m_order as f64 - 1.0)).sqrt()
}

fn gray_to_binary(mut g: u32) -> u32 {
    let mut b = g;
    while g > 0 {
        g >>= 1;
        b ^= g;
    }
    b
}

fn binary_to_gray(b: u32) -> u32 {
    b ^ (b >> 1)
}

fn read_bits(bits: &[u8]) -> u32 {
    bits.iter().fold(0, |acc, &b| (acc << 1) | u32::from(b & 1))
}

fn write_bits(value: u32, out: &mut [u8]) {
    let k = out.len();
    for (i, o) in out.iter_mut().enumerate() {
        *o = ((value >> (k - 1 - i)) & 1) as u8;
    }
}

/// Maps bits (one bit per byte, values 0/1) to symbols.
pub fn qam_map(bits: &[u8], m_order: u32) -> Result<Vec<Complex64>, OfdmError> {
    let k = axis_bits(m_order)? as usize;
    if bits.len() % (2 * k) != 0 {
        return Err(OfdmError::BitCount {
            len: bits.len(),
            per_symbol: 2 * k,
        });
    }
    let levels = 1u32 << k;
    let s = scale(m_order);
    let level = |g: u32| (levels - 1) as f64 - 2.0 * gray_to_binary(g) as f64;
    Ok(bits
        .chunks_exact(2 * k)
        .map(|c| Complex64::new(level(read_bits(&c[..k])), level(read_bits(&c[k..]))) * s)
        .collect())
}

/// Minimum-distance decisions, per axis.
pub fn qam_demap(symbols: &[Complex64], m_order: u32) -> Result<Vec<u8>, OfdmError> {
    let k = axis_bits(m_order)? as usize;
    let levels = 1u32 << k;
    let inv = 1.0 / scale(m_order);
    let decide = |v: f64| -> u32 {
        let b = (((levels - 1) as f64 - v * inv) / 2.0).round();
        let b = if b.is_nan() {
            0.0
        } else {
            b.clamp(0.0, (levels - 1) as f64)
        };
        binary_to_gray(b as u32)
    };
    let mut out = vec![0u8; symbols.len() * 2 * k];
    for (z, chunk) in symbols.iter().zip(out.chunks_exact_mut(2 * k)) {
        let (i, q) = chunk.split_at_mut(k);
        write_bits(decide(z.re), i);
        write_bits(decide(z.im), q);
    }
    Ok(out)
}

/// Bits labelling each decision level on one axis, most positive first.
pub(crate) fn axis_labels(m_order: u32) -> Result<Vec<u32>, OfdmError> {
    let k = axis_bits(m_order)?;
    Ok((0..1u32 << k).map(binary_to_gray).collect())
}

pub(crate) fn axis_scale(m_order: u32) -> f64 {
    scale(m_order)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::FRAC_1_SQRT_2;

    #[test]
    fn four_qam_table() {
        let s = qam_map(&[0, 0, 0, 1, 1, 0, 1, 1], 4).unwrap();
        let r = FRAC_1_SQRT_2;
        assert_eq!(
            s,
            vec![
                Complex64::new(r, r),
                Complex64::new(r, -r),
                Complex64::new(-r, r),
                Complex64::new(-r, -r)
            ]
        );
    }

    #[test]
    fn unit_energy_and_gray_neighbours() {
        for m in [4u32, 16, 64] {
            let k = bits_per_symbol(m).unwrap();
            let mut bits = Vec::new();
            for v in 0..m {
                bits.extend((0..k).rev().map(|i| ((v >> i) & 1) as u8));
            }
            let s = qam_map(&bits, m).unwrap();
            let e: f64 = s.iter().map(|z| z.norm_sqr()).sum::<f64>() / m as f64;
            assert!((e - 1.0).abs() < 1e-12, "{m}: {e}");
            // nearest neighbours differ in exactly one bit
            let d_min = 2.0 * scale(m);
            for a in 0..m as usize {
                for b in 0..m as usize {
                    if ((s[a] - s[b]).norm() - d_min).abs() < 1e-9 {
                        assert_eq!((a ^ b).count_ones(), 1, "{m}: {a} {b}");
                    }
                }
            }
            assert_eq!(qam_demap(&s, m).unwrap(), bits);
        }
    }

    #[test]
    fn rejects_bad_lengths_and_orders() {
        assert_eq!(
            qam_map(&[0, 1, 1], 4),
            Err(OfdmError::BitCount { len: 3, per_symbol: 2 })
        );
        assert!(qam_map(&[0; 8], 8).is_err());
        assert!(qam_map(&[0; 8], 256).is_err());
    }

    #[test]
    fn decisions_saturate_outside_constellation() {
        let far = [Complex64::new(50.0, -50.0), Complex64::new(f64::NAN, 0.0)];
        let bits = qam_demap(&far, 16).unwrap();
        assert_eq!(&bits[..4], &[0, 0, 1, 0]);
    }

    proptest! {
        #[test]
        fn round_trip(raw in proptest::collection::vec(0u8..2, 0..60), m in prop::sample::select(vec![4u32, 16, 64])) {
            let k = bits_per_symbol(m).unwrap();
            let bits = &raw[..raw.len() / k * k];
            prop_assert_eq!(qam_demap(&qam_map(bits, m).unwrap(), m).unwrap(), bits.to_vec());
        }
    }
}
