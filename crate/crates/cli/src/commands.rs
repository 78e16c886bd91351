use anyhow::{anyhow, Context};
use serde_json::json;
use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use vvlc::channel_models::{lambertian_gain, wdgf_fwhm_default, LambertianScene, PathLossModel, SurfaceParams};
use vvlc::fitting::{fit_path_loss, fit_wdgf, PathLossDataset};
use vvlc::measurement::{
    cir_from_sweep, f_target_for_resolution, fwhm, parse_sweep_csv, parse_touchstone, path_loss_from_sweep,
    reflection_coefficient, write_sweep_csv, Cir, CirOptions, Link, Window,
};
use vvlc::sim::{achievable_distance, run_ber_vs_distance, ScenarioConfig, SimError, SurfaceSpec, PRESET_NAMES};

use crate::manifest::{digest_file, FileDigest, Outputs};
use crate::store::{list_files, load_store, locations};
use crate::{
    CirArgs, Classify, Failure, IngestArgs, InputFormat, PathlossArgs, ReportArgs, RunConfig, SimulateArgs, WindowArg,
};

/// CIR files cover `[0, peak + CIR_SPAN_S]`.
const CIR_SPAN_S: f64 = 5e-6;

pub(crate) struct Ctx {
    pub data_dir: PathBuf,
    pub cfg: RunConfig,
    pub cfg_text: String,
}

impl Ctx {
    fn store(&self, flag: Option<PathBuf>) -> PathBuf {
        flag.unwrap_or_else(|| self.data_dir.join("sweeps"))
    }

    fn out(&self, flag: Option<PathBuf>, sub: &str) -> PathBuf {
        flag.unwrap_or_else(|| self.data_dir.join(sub))
    }
}

fn input_err(msg: String) -> Failure {
    Failure::Input(anyhow!(msg))
}

fn analysis_err(msg: String) -> Failure {
    Failure::Analysis(anyhow!(msg))
}

fn sim_failure(e: SimError) -> Failure {
    match e {
        SimError::NotBracketed { .. } | SimError::OutOfTable { .. } => Failure::Analysis(e.into()),
        _ => Failure::Input(e.into()),
    }
}

fn store_digests(raw: &[(PathBuf, Vec<u8>)]) -> Vec<FileDigest> {
    raw.iter().map(|(p, b)| digest_file(p, b)).collect()
}

pub(crate) fn ingest(ctx: &Ctx, a: IngestArgs) -> Result<(), Failure> {
    let mut files = Vec::new();
    for p in &a.paths {
        if p.is_dir() {
            files.extend(list_files(p, &["s2p", "csv"]).input()?);
        } else if p.is_file() {
            files.push(p.clone());
        } else {
            return Err(input_err(format!("{} does not exist", p.display())));
        }
    }
    if files.is_empty() {
        return Err(input_err("no input files".into()));
    }
    let store = ctx.store(a.store);
    let mut out = Outputs::new(&store).input()?;
    let store_abs = fs::canonicalize(out.dir()).input()?;
    let mut names = BTreeSet::new();
    let mut inputs = Vec::new();
    let mut total = 0;
    for f in &files {
        let bytes = fs::read(f)
            .with_context(|| format!("reading {}", f.display()))
            .input()?;
        let ext = f
            .extension()
            .and_then(|e| e.to_str())
            .unwrap_or("")
            .to_ascii_lowercase();
        let format = match (a.format, ext.as_str()) {
            (InputFormat::Auto, "s2p") => InputFormat::Touchstone,
            (InputFormat::Auto, "csv") => InputFormat::Csv,
            (InputFormat::Auto, _) => {
                return Err(input_err(format!(
                    "{}: cannot infer format; pass --format",
                    f.display()
                )))
            }
            (fmt, _) => fmt,
        };
        let records = match format {
            InputFormat::Csv => parse_sweep_csv(&bytes),
            _ => parse_touchstone(&bytes),
        }
        .with_context(|| f.display().to_string())
        .input()?;
        let stem = f.file_stem().and_then(|s| s.to_str()).unwrap_or("sweep");
        let name = format!("{stem}.csv");
        if !names.insert(name.clone()) {
            return Err(input_err(format!("two inputs map to the store file {name}")));
        }
        if fs::canonicalize(f).ok() == Some(store_abs.join(&name)) {
            return Err(input_err(format!("{} is already in the store", f.display())));
        }
        out.write(&name, &write_sweep_csv(&records)).input()?;
        for r in &records {
            println!(
                "{name}: surface={} link={} d1_m={} d2_m={} realization={} points={} f_min_hz={} df_hz={}",
                r.meta.surface,
                r.meta.link,
                r.meta.d1_m,
                r.meta.d2_m,
                r.meta.realization,
                r.len(),
                r.f_min(),
                r.df()
            );
        }
        total += records.len();
        inputs.push(digest_file(f, &bytes));
    }
    println!("{} files, {total} sweeps -> {}", files.len(), store.display());
    let config = format!("format={:?}\n", a.format);
    out.finish("ingest", None, &config, inputs).input()?;
    Ok(())
}

fn load_scene(path: &Path) -> Result<(LambertianScene, FileDigest), Failure> {
    let bytes = fs::read(path)
        .with_context(|| format!("reading {}", path.display()))
        .input()?;
    let text = String::from_utf8(bytes.clone())
        .with_context(|| path.display().to_string())
        .input()?;
    let scene: LambertianScene = toml::from_str(&text)
        .with_context(|| path.display().to_string())
        .input()?;
    scene.validate().with_context(|| path.display().to_string()).input()?;
    Ok((scene, digest_file(path, &bytes)))
}

pub(crate) fn pathloss(ctx: &Ctx, a: PathlossArgs) -> Result<(), Failure> {
    let cfg = &ctx.cfg;
    let surface = a
        .surface
        .or_else(|| cfg.surface.clone())
        .ok_or_else(|| input_err("--surface is required".into()))?;
    let d0 = a.d0.or(cfg.d0).unwrap_or(2.0);
    let (records, raw) = load_store(&ctx.store(a.store)).input()?;
    let mut inputs = store_digests(&raw);
    let locs = locations(&records).input()?;
    let sel: Vec<_> = locs
        .iter()
        .filter(|l| l.link == Link::Nlos && l.surface == surface)
        .collect();
    if sel.is_empty() {
        return Err(analysis_err(format!("no matching sweeps for surface `{surface}`")));
    }
    if let Some(w) = sel.windows(2).find(|w| w[0].d2_m == w[1].d2_m) {
        return Err(analysis_err(format!(
            "several transmitter distances at d2 = {} m",
            w[0].d2_m
        )));
    }
    let points = sel
        .iter()
        .map(|l| Ok((l.d2_m, path_loss_from_sweep(&l.sweep).with_context(|| l.stem())?)))
        .collect::<anyhow::Result<Vec<_>>>()
        .analysis()?;
    let pl_ref = match a.pl_ref.or(cfg.pl_ref) {
        Some(v) => v,
        None => points
            .iter()
            .find(|p| p.0 == d0)
            .map(|p| p.1)
            .ok_or_else(|| analysis_err(format!("no sweep at d0 = {d0} m; pass --pl-ref")))?,
    };
    let dataset = PathLossDataset::new(points.clone(), d0, pl_ref).analysis()?;
    let report = fit_path_loss(&dataset).analysis()?;
    // reflection coefficient, when the store also holds a LoS sweep at d0
    let at_d0 = |link: Link| locs.iter().find(|l| l.link == link && l.d2_m == d0);
    let rho = match (sel.iter().find(|l| l.d2_m == d0), at_d0(Link::Los)) {
        (Some(n), Some(l)) => Some(reflection_coefficient(&n.sweep, &l.sweep).analysis()?),
        _ => None,
    };
    let p = report.params;
    let fitted_surface = SurfaceParams {
        label: surface.clone(),
        alpha: p.alpha,
        beta: p.beta,
        n: p.n,
        rho: rho.unwrap_or(f64::NAN),
    };
    let model = PathLossModel::new(fitted_surface, d0, pl_ref).analysis()?;
    let scene = match a.scene.or_else(|| cfg.scene.clone()) {
        Some(p) => {
            let (s, digest) = load_scene(&p)?;
            inputs.push(digest);
            Some(s)
        }
        None => None,
    };

    let mut csv = String::from("d_m,pl_db,pl_model_db,pl_lambertian_db\n");
    for (loc, (d, pl)) in sel.iter().zip(&points) {
        let fitted = model.path_loss_db(*d).analysis()?;
        let lamb = match &scene {
            Some(s) => {
                let g = lambertian_gain(s, loc.d1_m, *d)
                    .with_context(|| loc.stem())
                    .analysis()?;
                format!("{}", -20.0 * g.log10())
            }
            None => String::new(),
        };
        let _ = writeln!(csv, "{d},{pl},{fitted},{lamb}");
    }
    let fit_json = json!({
        "surface": surface,
        "d0_m": d0,
        "pl_ref_db": pl_ref,
        "rho": rho,
        "fit": report,
    });
    let mut out = Outputs::new(&ctx.out(a.out, "pathloss")).input()?;
    out.write(&format!("pathloss_{surface}.csv"), &csv).input()?;
    out.write(
        &format!("pathloss_{surface}.fit.json"),
        &(serde_json::to_string_pretty(&fit_json).analysis()? + "\n"),
    )
    .input()?;
    println!(
        "{surface}: alpha={} beta={} n={} rmse_db={} converged={}",
        p.alpha, p.beta, p.n, report.rmse, report.converged
    );
    let config = format!(
        "surface={surface}\nd0={d0}\npl_ref={pl_ref}\nscene={}\n",
        scene.is_some()
    );
    out.finish("pathloss", None, &(ctx.cfg_text.clone() + &config), inputs)
        .input()?;
    Ok(())
}

pub(crate) fn cir(ctx: &Ctx, a: CirArgs) -> Result<(), Failure> {
    let cfg = &ctx.cfg;
    let f_target = a.f_target.or(cfg.f_target);
    let window = match a.window.or(cfg.window).unwrap_or(WindowArg::None) {
        WindowArg::None => Window::None,
        WindowArg::Hann => Window::Hann,
    };
    let fit = a.fit_wdgf || cfg.fit_wdgf.unwrap_or(false);
    let surface = a.surface.or_else(|| cfg.surface.clone());
    let (records, raw) = load_store(&ctx.store(a.store)).input()?;
    let locs = locations(&records).input()?;
    let sel: Vec<_> = locs
        .iter()
        .filter(|l| surface.as_ref().map_or(true, |s| &l.surface == s))
        .collect();
    if sel.is_empty() {
        return Err(analysis_err("no matching sweeps".into()));
    }

    let mut out = Outputs::new(&ctx.out(a.out, "cir")).input()?;
    // one FWHM table per label, in location order
    let mut tables: Vec<(String, String)> = Vec::new();
    // per-location analysis failures; the rest of the batch is still written
    let mut failed: Vec<String> = Vec::new();
    for loc in sel {
        let stem = loc.stem();
        let ft = f_target.unwrap_or_else(|| f_target_for_resolution(loc.sweep.df(), 1e-9));
        let h = match cir_from_sweep(&loc.sweep, ft, CirOptions { window }) {
            Ok(h) => h,
            Err(e) => {
                failed.push(format!("{stem}: {e}"));
                continue;
            }
        };
        let end = (((h.peak_time() - h.t0 + CIR_SPAN_S) / h.t_res).ceil() as usize + 1).min(h.len());
        let shown = Cir::new(h.t_res, h.samples[..end].to_vec(), h.t0).analysis()?;
        out.write(&format!("cir_{stem}.csv"), &shown.to_csv()).input()?;

        let label = stem.rsplit_once('_').map_or(stem.as_str(), |s| s.0).to_owned();
        let width = match fwhm(&h) {
            Ok(w) => (w * 1e9).to_string(),
            Err(e) => {
                failed.push(format!("{stem}: {e}"));
                String::new()
            }
        };
        let mut row = format!("{},{width},{}", loc.d2_m, h.peak_time() * 1e9);
        if fit {
            let model_width = fit_wdgf(&h).map_err(|e| e.to_string()).and_then(|report| {
                let w = wdgf_fwhm_default(&report.params).map_err(|e| e.to_string())?;
                Ok((report, w))
            });
            match model_width {
                Ok((report, w)) => {
                    let _ = write!(row, ",{}", w * 1e9);
                    out.write(&format!("wdgf_{stem}.json"), &(report.to_json() + "\n"))
                        .input()?;
                }
                Err(e) => {
                    row.push(',');
                    failed.push(format!("{stem}: WDGF: {e}"));
                }
            }
        }
        row.push('\n');
        match tables.iter_mut().find(|t| t.0 == label) {
            Some(t) => t.1.push_str(&row),
            None => tables.push((label, row)),
        }
    }
    let header = if fit {
        "d_m,fwhm_ns,peak_ns,wdgf_fwhm_ns\n"
    } else {
        "d_m,fwhm_ns,peak_ns\n"
    };
    for (label, rows) in &tables {
        out.write(&format!("fwhm_{label}.csv"), &format!("{header}{rows}"))
            .input()?;
        print!("{label}\n{header}{rows}");
    }
    let config = format!("f_target={f_target:?}\nwindow={window:?}\nfit_wdgf={fit}\nsurface={surface:?}\n");
    out.finish("cir", None, &(ctx.cfg_text.clone() + &config), store_digests(&raw))
        .input()?;
    if !failed.is_empty() {
        return Err(analysis_err(format!(
            "{} location(s) failed:\n  {}",
            failed.len(),
            failed.join("\n  ")
        )));
    }
    Ok(())
}

fn file_name_safe(name: &str) -> String {
    name.chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '-' || c == '_' {
                c
            } else {
                '_'
            }
        })
        .collect()
}

pub(crate) fn simulate(ctx: &Ctx, a: SimulateArgs) -> Result<(), Failure> {
    let mut inputs = Vec::new();
    let mut sc = match (&a.preset, &a.scenario) {
        (Some(p), _) => ScenarioConfig::preset(p)
            .ok_or_else(|| input_err(format!("unknown preset `{p}` (one of {})", PRESET_NAMES.join(", "))))?,
        (None, Some(path)) => {
            let bytes = fs::read(path)
                .with_context(|| format!("reading {}", path.display()))
                .input()?;
            let text = String::from_utf8(bytes.clone())
                .with_context(|| path.display().to_string())
                .input()?;
            let mut sc = ScenarioConfig::from_toml(&text)
                .with_context(|| path.display().to_string())
                .input()?;
            if sc.name.is_empty() {
                sc.name = path
                    .file_stem()
                    .and_then(|s| s.to_str())
                    .unwrap_or("scenario")
                    .to_owned();
            }
            inputs.push(digest_file(path, &bytes));
            sc
        }
        (None, None) => return Err(input_err("a scenario file or --preset is required".into())),
    };
    if let Some(seed) = a.seed.or(ctx.cfg.seed) {
        sc.seed = seed;
    }
    if let Some(s) = a.surface {
        sc.surface = SurfaceSpec::Preset(s);
    }
    if let Some(d0) = a.d0 {
        sc.d0 = d0;
    }
    if let Some(pl) = a.pl_ref {
        sc.pl_ref = Some(pl);
    }
    if let Some(m) = a.max_bits {
        sc.mc.max_bits = m;
    }
    let curve = run_ber_vs_distance(&sc).map_err(sim_failure)?;
    let name = file_name_safe(if sc.name.is_empty() { "scenario" } else { &sc.name });
    let achievable = achievable_distance(&curve, sc.target_ber);

    let mut out = Outputs::new(&ctx.out(a.out, "simulate")).input()?;
    out.write(&format!("{name}.ber.csv"), &curve.to_csv()).input()?;
    let summary = json!({
        "scenario": sc.name,
        "seed": sc.seed,
        "target_ber": sc.target_ber,
        "achievable_distance_m": achievable.as_ref().ok(),
        "error": achievable.as_ref().err().map(|e| e.to_string()),
    });
    out.write(
        &format!("{name}.achievable.json"),
        &(serde_json::to_string_pretty(&summary).analysis()? + "\n"),
    )
    .input()?;
    out.finish("simulate", Some(sc.seed), &sc.to_toml(), inputs).input()?;
    let d = achievable.map_err(sim_failure)?;
    println!("{}: achievable distance {d} m at BER {}", sc.name, sc.target_ber);
    Ok(())
}

pub(crate) fn report(ctx: &Ctx, a: ReportArgs) -> Result<(), Failure> {
    let mut out = Outputs::new(&ctx.out(a.out, "report")).input()?;
    let mut config = String::new();
    let mut distances = Vec::new();
    let mut failed = Vec::new();
    let seed = a.seed.or(ctx.cfg.seed).unwrap_or(0);
    for name in PRESET_NAMES {
        let mut sc = ScenarioConfig::preset(name).expect("preset exists");
        sc.seed = seed;
        sc.los_pl_ref = a.pl_ref;
        if let Some(m) = a.max_bits {
            sc.mc.max_bits = m;
        }
        let curve = run_ber_vs_distance(&sc).map_err(sim_failure)?;
        out.write(&format!("{name}.ber.csv"), &curve.to_csv()).input()?;
        config.push_str(&sc.to_toml());
        match achievable_distance(&curve, sc.target_ber) {
            Ok(d) => distances.push((name, Some(d))),
            Err(e) => {
                failed.push(format!("{name}: {e}"));
                distances.push((name, None));
            }
        }
    }
    let cell = |v: Option<f64>| v.map_or(String::new(), |d| d.to_string());
    let mut table = String::from("surface,day_m,night_m,gap_m\n");
    for surface in ["white", "orange", "black"] {
        let get = |t: &str| {
            distances
                .iter()
                .find(|(n, _)| *n == format!("{t}-{surface}"))
                .and_then(|x| x.1)
        };
        let (day, night) = (get("day"), get("night"));
        let gap = day.zip(night).map(|(d, n)| n - d);
        let _ = writeln!(table, "{surface},{},{},{}", cell(day), cell(night), cell(gap));
    }
    out.write("achievable.csv", &table).input()?;
    print!("{table}");
    out.finish("report", Some(seed), &config, Vec::new()).input()?;
    if failed.is_empty() {
        Ok(())
    } else {
        Err(analysis_err(failed.join("; ")))
    }
}
