mod common;

use common::*;
use std::fs;
use vvlc::channel_models::SurfaceParams;
use vvlc::measurement::{parse_sweep_csv, write_touchstone, Link};

#[test]
fn ingest_touchstone_keeps_points_and_inputs() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("in");
    fs::create_dir(&input).unwrap();
    let rec = delay_sweep(200e3, 700.0, 101, 50e-9, 0.1, meta("white", 4.0, Link::Nlos));
    let text = write_touchstone(&rec);
    fs::write(input.join("a.s2p"), &text).unwrap();

    let o = vvlc(&["ingest", input.to_str().unwrap()], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let store = dir.path().join("sweeps");
    let recs = parse_sweep_csv(read(&store.join("a.csv")).as_bytes()).unwrap();
    assert_eq!(recs.len(), 1);
    assert_eq!(recs[0], rec);
    assert_eq!(read(&input.join("a.s2p")), text);
    let manifest = read(&store.join("ingest.manifest.json"));
    assert!(manifest.contains("\"a.csv\""));
}

#[test]
fn ingest_empty_directory_fails() {
    let dir = tempfile::tempdir().unwrap();
    let empty = dir.path().join("empty");
    fs::create_dir(&empty).unwrap();
    let o = vvlc(&["ingest", empty.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("no input files"));
}

#[test]
fn ingest_keeps_mixed_grids_apart() {
    let dir = tempfile::tempdir().unwrap();
    let a = delay_sweep(200e3, 700.0, 20, 0.0, 0.1, meta("white", 2.0, Link::Nlos));
    let b = delay_sweep(100e3, 1400.0, 30, 0.0, 0.2, meta("white", 2.0, Link::Nlos));
    let (pa, pb) = (dir.path().join("a.s2p"), dir.path().join("b.s2p"));
    fs::write(&pa, write_touchstone(&a)).unwrap();
    fs::write(&pb, write_touchstone(&b)).unwrap();
    let o = vvlc(&["ingest", pa.to_str().unwrap(), pb.to_str().unwrap()], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let store = dir.path().join("sweeps");
    assert_eq!(parse_sweep_csv(read(&store.join("a.csv")).as_bytes()).unwrap(), vec![a]);
    assert_eq!(parse_sweep_csv(read(&store.join("b.csv")).as_bytes()).unwrap(), vec![b]);
}

#[test]
fn ingest_parse_error_has_position() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("bad.s2p");
    fs::write(&p, "# Hz S RI R 50\n1 0 0 1 0 0 0 0 0\n2 0 0 oops 0 0 0 0 0\n").unwrap();
    let o = vvlc(&["ingest", p.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert!(err.contains("bad.s2p") && err.contains("line 3"), "{err}");
}

#[test]
fn pathloss_recovers_generator() {
    let dir = tempfile::tempdir().unwrap();
    let white = SurfaceParams::white();
    let ds: Vec<f64> = (1..=10).map(|i| 2.0 * i as f64).collect();
    write_pathloss_inputs(&dir.path().join("in"), &white, 40.0, &ds);
    let ok = |o: std::process::Output| assert!(o.status.success(), "{}", stderr(&o));
    ok(vvlc(&["ingest", dir.path().join("in").to_str().unwrap()], dir.path()));
    ok(vvlc(&["pathloss", "--surface", "white"], dir.path()));

    let out = dir.path().join("pathloss");
    let csv = read(&out.join("pathloss_white.csv"));
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("d_m,pl_db,pl_model_db,pl_lambertian_db"));
    assert_eq!(lines.count(), 10);
    let fit: serde_json::Value = serde_json::from_str(&read(&out.join("pathloss_white.fit.json"))).unwrap();
    assert_eq!(fit["pl_ref_db"].as_f64().unwrap(), 40.0);
    for (key, want) in [("alpha", white.alpha), ("beta", white.beta), ("n", white.n)] {
        let got = fit["fit"]["params"][key].as_f64().unwrap();
        assert!((got - want).abs() < 1e-3, "{key}: {got}");
    }

    let o = vvlc(&["pathloss", "--surface", "purple"], dir.path());
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("no matching sweeps"));
}

#[test]
fn pathloss_underdetermined_and_lambertian_column() {
    let dir = tempfile::tempdir().unwrap();
    write_pathloss_inputs(&dir.path().join("in"), &SurfaceParams::black(), 30.0, &[2.0, 4.0, 6.0]);
    vvlc(&["ingest", dir.path().join("in").to_str().unwrap()], dir.path());
    let o = vvlc(&["pathloss", "--surface", "black"], dir.path());
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));

    write_pathloss_inputs(&dir.path().join("in"), &SurfaceParams::black(), 30.0, &[8.0, 10.0]);
    vvlc(&["ingest", dir.path().join("in").to_str().unwrap()], dir.path());
    let scene = dir.path().join("scene.toml");
    fs::write(
        &scene,
        "m = 1.0\na_r = 1e-4\nda_r = 1e-2\nrho = 0.5\nphi = 0.0\nalpha_ang = 0.0\nbeta_ang = 0.0\npsi = 0.0\npsi_c = 1.0\nn_refr = 1.5\n",
    )
    .unwrap();
    let o = vvlc(
        &["pathloss", "--surface", "black", "--scene", scene.to_str().unwrap()],
        dir.path(),
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = read(&dir.path().join("pathloss/pathloss_black.csv"));
    for line in csv.lines().skip(1) {
        let last: f64 = line.rsplit(',').next().unwrap().parse().unwrap();
        assert!(last.is_finite() && last > 0.0);
    }
}

#[test]
fn cir_delay_window_and_wdgf() {
    let dir = tempfile::tempdir().unwrap();
    let rec = delay_sweep(200e3, 700.0, 20001, 100e-9, 0.05, meta("orange", 6.0, Link::Nlos));
    let p = dir.path().join("o.s2p");
    fs::write(&p, write_touchstone(&rec)).unwrap();
    vvlc(&["ingest", p.to_str().unwrap()], dir.path());

    let o = vvlc(&["cir", "--fit-wdgf"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let out = dir.path().join("cir");
    let table = read(&out.join("fwhm_orange.csv"));
    let mut lines = table.lines();
    assert_eq!(lines.next(), Some("d_m,fwhm_ns,peak_ns,wdgf_fwhm_ns"));
    let row: Vec<f64> = lines.next().unwrap().split(',').map(|v| v.parse().unwrap()).collect();
    assert_eq!(row[0], 6.0);
    assert!((row[2] - 100.0).abs() <= 1.0, "peak {}", row[2]);
    assert!(out.join("wdgf_orange_6m.json").exists());

    // default transform bandwidth gives 1 ns samples
    let cir = read(&out.join("cir_orange_6m.csv"));
    let t: Vec<f64> = cir
        .lines()
        .skip(1)
        .take(2)
        .map(|l| l.split(',').next().unwrap().parse().unwrap())
        .collect();
    assert!(t[1] - t[0] <= 1e-9 && t[1] - t[0] > 0.99e-9);

    let plain = cir.clone();
    let o = vvlc(&["cir", "--window", "hann"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    assert_ne!(read(&out.join("cir_orange_6m.csv")), plain);
}

#[test]
fn cir_failed_location_still_writes_the_rest() {
    let dir = tempfile::tempdir().unwrap();
    // 20001 points resolve a 100 ns delay; 2000 points leave the main lobe
    // above half maximum at t = 0
    let wide = delay_sweep(200e3, 700.0, 20001, 100e-9, 0.05, meta("white", 4.0, Link::Nlos));
    let narrow = delay_sweep(200e3, 700.0, 2000, 100e-9, 0.05, meta("white", 8.0, Link::Nlos));
    for (name, rec) in [("a.s2p", &wide), ("b.s2p", &narrow)] {
        fs::write(dir.path().join(name), write_touchstone(rec)).unwrap();
    }
    vvlc(&["ingest", dir.path().to_str().unwrap()], dir.path());

    let o = vvlc(&["cir"], dir.path());
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    assert!(stderr(&o).contains("white_8m"), "{}", stderr(&o));
    assert!(!stderr(&o).contains("white_4m"), "{}", stderr(&o));
    let out = dir.path().join("cir");
    assert!(out.join("cir_white_4m.csv").exists() && out.join("cir_white_8m.csv").exists());
    let table = read(&out.join("fwhm_white.csv"));
    let rows: Vec<Vec<&str>> = table.lines().skip(1).map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 2);
    assert!(rows[0][1].parse::<f64>().is_ok());
    assert_eq!(rows[1][1], "");
    assert!(out.join("cir.manifest.json").exists());
}

fn scenario_file(dir: &std::path::Path, extra: &str) -> std::path::PathBuf {
    let p = dir.join("run.toml");
    fs::write(
        &p,
        format!("name = \"run\"\nsurface = \"white\"\ndistances = [12.0, 13.0, 14.0, 15.0, 16.0]\n{extra}"),
    )
    .unwrap();
    p
}

#[test]
fn simulate_seed_replay_and_stability() {
    let dir = tempfile::tempdir().unwrap();
    let scen = scenario_file(dir.path(), "seed = 7\n");
    let s = scen.to_str().unwrap();
    let run = |out: &str, extra: &[&str]| {
        let mut args = vec!["simulate", s, "--out", out, "--max-bits", "2000000"];
        args.extend_from_slice(extra);
        let o = vvlc(&args, dir.path());
        assert!(o.status.success(), "{}", stderr(&o));
    };
    let (a, b, c) = (dir.path().join("a"), dir.path().join("b"), dir.path().join("c"));
    run(a.to_str().unwrap(), &[]);
    run(b.to_str().unwrap(), &[]);
    run(c.to_str().unwrap(), &["--seed", "8"]);
    for f in ["run.ber.csv", "run.achievable.json", "simulate.manifest.json"] {
        assert_eq!(read(&a.join(f)), read(&b.join(f)), "{f}");
    }
    assert_ne!(read(&a.join("run.ber.csv")), read(&c.join("run.ber.csv")));
    let dist = |d: &std::path::Path| {
        let v: serde_json::Value = serde_json::from_str(&read(&d.join("run.achievable.json"))).unwrap();
        v["achievable_distance_m"].as_f64().unwrap()
    };
    let (da, dc) = (dist(&a), dist(&c));
    assert!((da / dc - 1.0).abs() < 0.05, "{da} {dc}");
    let manifest: serde_json::Value = serde_json::from_str(&read(&c.join("simulate.manifest.json"))).unwrap();
    assert_eq!(manifest["seed"], 8);
}

#[test]
fn simulate_unbracketed_still_writes_curve() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("near.toml");
    fs::write(&p, "surface = \"white\"\ndistances = [2.0, 3.0]\n").unwrap();
    let o = vvlc(&["simulate", p.to_str().unwrap(), "--max-bits", "20000"], dir.path());
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    let csv = read(&dir.path().join("simulate/near.ber.csv"));
    assert!(csv.starts_with("d_m,ber,bits,errors\n"));
    assert_eq!(csv.lines().count(), 3);
}

#[test]
fn simulate_bad_scenario_is_input_error() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("bad.toml");
    fs::write(&p, "surface = \"white\"\ndistances = [5.0, 4.0]\n").unwrap();
    let o = vvlc(&["simulate", p.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("ascending"));
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.toml");
    fs::write(&cfg, "seed = 3\n").unwrap();
    let scen = scenario_file(dir.path(), "");
    let args = |extra: &'static [&'static str]| {
        let mut v = vec!["--config", cfg.to_str().unwrap(), "simulate", scen.to_str().unwrap()];
        v.extend_from_slice(&["--max-bits", "20000"]);
        v.extend_from_slice(extra);
        v.into_iter().map(str::to_owned).collect::<Vec<_>>()
    };
    let seed_of = |extra: &'static [&'static str]| {
        let a = args(extra);
        let refs: Vec<&str> = a.iter().map(String::as_str).collect();
        let o = vvlc(&refs, dir.path());
        assert!(o.status.success(), "{}", stderr(&o));
        let m: serde_json::Value =
            serde_json::from_str(&read(&dir.path().join("simulate/simulate.manifest.json"))).unwrap();
        m["seed"].as_u64().unwrap()
    };
    assert_eq!(seed_of(&[]), 3);
    assert_eq!(seed_of(&["--seed", "11"]), 11);
}

#[test]
fn report_orders_surfaces() {
    let dir = tempfile::tempdir().unwrap();
    let o = vvlc(&["report", "--max-bits", "200000"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let table = read(&dir.path().join("report/achievable.csv"));
    let rows: Vec<Vec<String>> = table
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(str::to_owned).collect())
        .collect();
    assert_eq!(
        rows.iter().map(|r| r[0].as_str()).collect::<Vec<_>>(),
        ["white", "orange", "black"]
    );
    let day: Vec<f64> = rows.iter().map(|r| r[1].parse().unwrap()).collect();
    assert!(day[0] > day[1] && day[1] > day[2], "{table}");
    assert!(dir.path().join("report/night-black.ber.csv").exists());
}
