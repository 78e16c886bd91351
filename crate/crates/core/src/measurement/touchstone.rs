//! Touchstone v1 two-port (`.s2p`) reader and writer.
//!
//! Only the S21 column is kept. Comment lines may carry `key=value` tokens
//! (`surface`, `d1_m`, `d2_m`, `realization`, `link`) which populate the
//! record metadata; everything else in comments is ignored.

use num_complex::Complex64;
use std::fmt::Write as _;

use super::sweep::first_grid_violation;
use super::{ParseError, SweepMeta, SweepRecord};

#[derive(Debug, Clone, Copy, PartialEq)]
enum Format {
    Ri,
    Ma,
    Db,
}

#[derive(Debug, Clone, Copy)]
struct OptionLine {
    freq_scale: f64,
    format: Format,
}

impl Default for OptionLine {
    // Touchstone v1 defaults: GHz S MA R 50
    fn default() -> Self {
        Self {
            freq_scale: 1e9,
            format: Format::Ma,
        }
    }
}

fn parse_option_line(body: &str, line: usize) -> Result<OptionLine, ParseError> {
    let mut opt = OptionLine::default();
    let mut tokens = body.split_whitespace();
    while let Some(tok) = tokens.next() {
        match tok.to_ascii_uppercase().as_str() {
            "HZ" => opt.freq_scale = 1.0,
            "KHZ" => opt.freq_scale = 1e3,
            "MHZ" => opt.freq_scale = 1e6,
            "GHZ" => opt.freq_scale = 1e9,
            "S" => {}
            p @ ("Y" | "Z" | "H" | "G") => {
                return Err(ParseError::new(
                    line,
                    format!("unsupported parameter type `{p}` (only S)"),
                ));
            }
            "RI" => opt.format = Format::Ri,
            "MA" => opt.format = Format::Ma,
            "DB" => opt.format = Format::Db,
            "R" => {
                let r = tokens
                    .next()
                    .ok_or_else(|| ParseError::new(line, "missing reference impedance after `R`"))?;
                let z: f64 = r
                    .parse()
                    .map_err(|_| ParseError::new(line, format!("invalid reference impedance `{r}`")))?;
                if z <= 0.0 || !z.is_finite() {
                    return Err(ParseError::new(line, format!("invalid reference impedance `{r}`")));
                }
            }
            _ => return Err(ParseError::new(line, format!("unknown option `{tok}`"))),
        }
    }
    Ok(opt)
}

fn to_complex(format: Format, a: f64, b: f64) -> Complex64 {
    match format {
        Format::Ri => Complex64::new(a, b),
        Format::Ma => Complex64::from_polar(a, b.to_radians()),
        Format::Db => Complex64::from_polar(10f64.powf(a / 20.0), b.to_radians()),
    }
}

fn apply_meta(meta: &mut SweepMeta, comment: &str, line: usize) -> Result<(), ParseError> {
    for tok in comment.split_whitespace() {
        let Some((key, value)) = tok.split_once('=') else {
            continue;
        };
        let bad = || ParseError::new(line, format!("invalid metadata value `{tok}`"));
        match key {
            "surface" => meta.surface = value.to_owned(),
            "d1_m" => meta.d1_m = value.parse().map_err(|_| bad())?,
            "d2_m" => meta.d2_m = value.parse().map_err(|_| bad())?,
            "realization" => meta.realization = value.parse().map_err(|_| bad())?,
            "link" => meta.link = value.parse().map_err(|_| bad())?,
            _ => {}
        }
    }
    Ok(())
}

/// Parses a Touchstone v1 `.s2p` file into one sweep record.
pub fn parse_touchstone(bytes: &[u8]) -> Result<Vec<SweepRecord>, ParseError> {
    let text = std::str::from_utf8(bytes).map_err(|e| {
        let line = bytes[..e.valid_up_to()].iter().filter(|&&b| b == b'\n').count() + 1;
        ParseError::new(line, "input is not valid UTF-8")
    })?;

    let mut option: Option<OptionLine> = None;
    let mut meta = SweepMeta::default();
    let mut freqs = Vec::new();
    let mut s21 = Vec::new();
    let mut lines_of_rows = Vec::new();

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let (body, comment) = match raw.split_once('!') {
            Some((b, c)) => (b, Some(c)),
            None => (raw, None),
        };
        if let Some(c) = comment {
            apply_meta(&mut meta, c, line)?;
        }
        let body = body.trim();
        if body.is_empty() {
            continue;
        }
        if let Some(rest) = body.strip_prefix('#') {
            if !freqs.is_empty() {
                return Err(ParseError::new(line, "option line after data"));
            }
            // only the first option line counts
            if option.is_none() {
                option = Some(parse_option_line(rest, line)?);
            }
            continue;
        }
        if body.starts_with('[') {
            return Err(ParseError::new(line, "Touchstone v2 keywords are not supported"));
        }
        let opt = *option.get_or_insert_with(OptionLine::default);
        let mut values = [0.0f64; 9];
        let mut count = 0;
        for tok in body.split_whitespace() {
            if count < 9 {
                values[count] = tok
                    .parse()
                    .map_err(|_| ParseError::new(line, format!("invalid number `{tok}`")))?;
            }
            count += 1;
        }
        if count != 9 {
            return Err(ParseError::new(line, format!("expected 9 columns, found {count}")));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(ParseError::new(line, "non-finite value"));
        }
        let f = values[0] * opt.freq_scale;
        if let Some(&prev) = freqs.last() {
            if f <= prev {
                return Err(ParseError::new(line, "frequencies must be strictly increasing"));
            }
        }
        freqs.push(f);
        // column order: S11 S21 S12 S22
        s21.push(to_complex(opt.format, values[3], values[4]));
        lines_of_rows.push(line);
    }

    if freqs.is_empty() {
        return Err(ParseError::new(text.lines().count(), "no data rows"));
    }
    if let Some((i, msg)) = first_grid_violation(&freqs) {
        return Err(ParseError::new(lines_of_rows[i], msg));
    }
    let record = SweepRecord::new(freqs, s21, meta).map_err(|e| ParseError::new(0, e.to_string()))?;
    Ok(vec![record])
}

/// Serializes a record as RI-format Touchstone with Hz units. Unmeasured
/// S-parameters are written as zero. Values use shortest round-trip
/// formatting so [`parse_touchstone`] recovers them bit-for-bit.
pub fn write_touchstone(record: &SweepRecord) -> String {
    let m = &record.meta;
    let mut out = String::new();
    let _ = writeln!(
        out,
        "! surface={} d1_m={} d2_m={} realization={} link={}",
        m.surface, m.d1_m, m.d2_m, m.realization, m.link
    );
    out.push_str("# Hz S RI R 50\n");
    for (f, z) in record.freqs().iter().zip(record.s21()) {
        let _ = writeln!(out, "{f} 0 0 {} {} 0 0 0 0", z.re, z.im);
    }
    out
}
