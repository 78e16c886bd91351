//! Curated sweep datasets as CSV:
//! `freq_hz,s21_re,s21_im,surface,d1_m,d2_m,realization,link`.

use num_complex::Complex64;
use std::collections::HashMap;
use std::fmt::Write as _;

use super::sweep::first_grid_violation;
use super::{Link, ParseError, SweepMeta, SweepRecord};

pub const SWEEP_CSV_HEADER: [&str; 8] = [
    "freq_hz",
    "s21_re",
    "s21_im",
    "surface",
    "d1_m",
    "d2_m",
    "realization",
    "link",
];

fn csv_error(e: csv::Error) -> ParseError {
    let line = e.position().map_or(0, |p| p.line() as usize);
    let message = match e.kind() {
        csv::ErrorKind::UnequalLengths { expected_len, len, .. } => {
            format!("ragged row: expected {expected_len} fields, found {len}")
        }
        csv::ErrorKind::Utf8 { .. } => "input is not valid UTF-8".to_owned(),
        _ => e.to_string(),
    };
    ParseError::new(line, message)
}

#[derive(Hash, PartialEq, Eq)]
struct Key {
    surface: String,
    d1: u64,
    d2: u64,
    link: Link,
    realization: u32,
}

struct Group {
    meta: SweepMeta,
    freqs: Vec<f64>,
    s21: Vec<Complex64>,
    lines: Vec<usize>,
}

/// Parses the sweep CSV. Rows are grouped into one record per
/// `(surface, d1_m, d2_m, link, realization)`, in order of first appearance.
pub fn parse_sweep_csv(bytes: &[u8]) -> Result<Vec<SweepRecord>, ParseError> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(bytes);
    let headers = reader.headers().map_err(csv_error)?.clone();
    let mut col = [0usize; 8];
    for (slot, name) in col.iter_mut().zip(SWEEP_CSV_HEADER) {
        *slot = headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| ParseError::new(1, format!("missing column `{name}`")))?;
    }

    let mut index: HashMap<Key, usize> = HashMap::new();
    let mut groups: Vec<Group> = Vec::new();
    for row in reader.records() {
        let row = row.map_err(csv_error)?;
        let line = row.position().map_or(0, |p| p.line() as usize);
        let field = |i: usize| row.get(col[i]).unwrap_or("");
        let num = |i: usize| -> Result<f64, ParseError> {
            let v: f64 = field(i)
                .parse()
                .map_err(|_| ParseError::new(line, format!("invalid {} `{}`", SWEEP_CSV_HEADER[i], field(i))))?;
            if v.is_finite() {
                Ok(v)
            } else {
                Err(ParseError::new(line, format!("non-finite {}", SWEEP_CSV_HEADER[i])))
            }
        };
        let f = num(0)?;
        let z = Complex64::new(num(1)?, num(2)?);
        let d1 = num(4)?;
        let d2 = num(5)?;
        let realization: u32 = field(6)
            .parse()
            .map_err(|_| ParseError::new(line, format!("invalid realization `{}`", field(6))))?;
        let link: Link = field(7).parse().map_err(|e: String| ParseError::new(line, e))?;
        let surface = field(3).to_owned();

        let key = Key {
            surface: surface.clone(),
            d1: d1.to_bits(),
            d2: d2.to_bits(),
            link,
            realization,
        };
        let gi = *index.entry(key).or_insert_with(|| {
            groups.push(Group {
                meta: SweepMeta {
                    surface,
                    d1_m: d1,
                    d2_m: d2,
                    realization,
                    link,
                },
                freqs: Vec::new(),
                s21: Vec::new(),
                lines: Vec::new(),
            });
            groups.len() - 1
        });
        let g = &mut groups[gi];
        g.freqs.push(f);
        g.s21.push(z);
        g.lines.push(line);
    }

    if groups.is_empty() {
        return Err(ParseError::new(1, "no data rows"));
    }
    groups
        .into_iter()
        .map(|g| {
            if let Some((i, msg)) = first_grid_violation(&g.freqs) {
                return Err(ParseError::new(g.lines[i], msg));
            }
            SweepRecord::new(g.freqs, g.s21, g.meta).map_err(|e| ParseError::new(g.lines[0], e.to_string()))
        })
        .collect()
}

/// Canonical CSV for a set of records, with shortest round-trip float
/// formatting.
pub fn write_sweep_csv(records: &[SweepRecord]) -> String {
    let mut out = SWEEP_CSV_HEADER.join(",");
    out.push('\n');
    for r in records {
        let m = &r.meta;
        for (f, z) in r.freqs().iter().zip(r.s21()) {
            let _ = writeln!(
                out,
                "{f},{},{},{},{},{},{},{}",
                z.re, z.im, m.surface, m.d1_m, m.d2_m, m.realization, m.link
            );
        }
    }
    out
}
