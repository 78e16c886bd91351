//! The sweep store: a directory of canonical sweep CSV files.

use anyhow::{bail, Context, Result};
use std::fs;
use std::path::{Path, PathBuf};

use vvlc::measurement::{average_realizations, parse_sweep_csv, AveragedSweep, AveragingMode, Link, SweepRecord};

/// Files directly inside `dir` with one of `exts`, sorted by name.
pub(crate) fn list_files(dir: &Path, exts: &[&str]) -> Result<Vec<PathBuf>> {
    let mut files = Vec::new();
    for entry in fs::read_dir(dir).with_context(|| format!("reading directory {}", dir.display()))? {
        let path = entry?.path();
        let ext = path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase);
        if path.is_file() && ext.is_some_and(|e| exts.contains(&e.as_str())) {
            files.push(path);
        }
    }
    files.sort();
    Ok(files)
}

/// Raw bytes of each file read, kept for digests.
pub type RawFiles = Vec<(PathBuf, Vec<u8>)>;

/// Every record in the store, plus each file's raw bytes.
pub fn load_store(dir: &Path) -> Result<(Vec<SweepRecord>, RawFiles)> {
    let files = list_files(dir, &["csv"])?;
    if files.is_empty() {
        bail!("no sweep files in {}", dir.display());
    }
    let mut records = Vec::new();
    let mut raw = Vec::new();
    for f in files {
        let bytes = fs::read(&f).with_context(|| format!("reading {}", f.display()))?;
        records.extend(parse_sweep_csv(&bytes).with_context(|| format!("{}", f.display()))?);
        raw.push((f, bytes));
    }
    Ok((records, raw))
}

/// Realizations of one measurement location, averaged.
pub struct Location {
    pub surface: String,
    pub link: Link,
    pub d1_m: f64,
    pub d2_m: f64,
    pub sweep: AveragedSweep,
}

impl Location {
    /// File-name stem such as `white_4m` or `los_2.5m`.
    pub fn stem(&self) -> String {
        let label = match (self.link, self.surface.is_empty()) {
            (Link::Los, _) => "los".to_owned(),
            (Link::Nlos, true) => "nlos".to_owned(),
            (Link::Nlos, false) => self.surface.clone(),
        };
        format!("{label}_{}m", self.d2_m)
    }
}

/// Groups records by location, averages each group phase-coherently and
/// orders the result by (surface, link, d2, d1).
pub fn locations(records: &[SweepRecord]) -> Result<Vec<Location>> {
    let mut groups: Vec<Vec<SweepRecord>> = Vec::new();
    for r in records {
        match groups.iter_mut().find(|g| g[0].meta.same_location(&r.meta)) {
            Some(g) => g.push(r.clone()),
            None => groups.push(vec![r.clone()]),
        }
    }
    let mut out = groups
        .iter()
        .map(|g| {
            let m = &g[0].meta;
            let sweep = average_realizations(g, AveragingMode::Complex)
                .with_context(|| format!("averaging {} at d2 = {} m", m.surface, m.d2_m))?;
            Ok(Location {
                surface: m.surface.clone(),
                link: m.link,
                d1_m: m.d1_m,
                d2_m: m.d2_m,
                sweep,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    out.sort_by(|a, b| {
        (&a.surface, a.link)
            .cmp(&(&b.surface, b.link))
            .then(a.d2_m.total_cmp(&b.d2_m))
            .then(a.d1_m.total_cmp(&b.d1_m))
    });
    Ok(out)
}
