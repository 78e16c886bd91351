#![allow(dead_code)]

use num_complex::Complex64;
use std::f64::consts::PI;
use std::path::Path;
use std::process::{Command, Output};

use vvlc::channel_models::{PathLossModel, SurfaceParams};
use vvlc::measurement::{write_touchstone, Link, SweepMeta, SweepRecord};

pub fn vvlc(args: &[&str], data_dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_vvlc"))
        .args(args)
        .env("VVLC_DATA_DIR", data_dir)
        .env_remove("RUST_LOG")
        .output()
        .expect("binary runs")
}

pub fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

pub fn meta(surface: &str, d2: f64, link: Link) -> SweepMeta {
    SweepMeta {
        surface: surface.to_owned(),
        d1_m: 2.0,
        d2_m: d2,
        realization: 0,
        link,
    }
}

/// `S21(f) = g exp(-j 2 pi f tau)` on `f_min + k df`.
pub fn delay_sweep(f_min: f64, df: f64, n: usize, tau: f64, gain: f64, meta: SweepMeta) -> SweepRecord {
    let s21 = (0..n)
        .map(|k| Complex64::from_polar(gain, -2.0 * PI * (f_min + k as f64 * df) * tau))
        .collect();
    SweepRecord::uniform(f_min, df, s21, meta).unwrap()
}

/// One `.s2p` per distance whose band gain follows the path-loss law of
/// `surface`, with `pl_ref` at 2 m.
pub fn write_pathloss_inputs(dir: &Path, surface: &SurfaceParams, pl_ref: f64, distances: &[f64]) {
    std::fs::create_dir_all(dir).unwrap();
    let model = PathLossModel::new(surface.clone(), 2.0, pl_ref).unwrap();
    for &d in distances {
        let g = model.gain_amplitude(d).unwrap();
        let rec = delay_sweep(200e3, 700.0, 32, 10e-9 * d, g, meta(&surface.label, d, Link::Nlos));
        std::fs::write(dir.join(format!("{}_{d}.s2p", surface.label)), write_touchstone(&rec)).unwrap();
    }
}

pub fn read(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}
