use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use inflab::series::{MacroDataset, YearMonth};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn inflab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_inflab"))
        .args(args)
        .env_remove("INFLAB_THREADS")
        .output()
        .expect("run inflab")
}

fn run_ok(cmd: &str, cfg: &Path) {
    let out = inflab(&[cmd, "--config", cfg.to_str().unwrap()]);
    assert!(
        out.status.success(),
        "{cmd} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
}

fn write_series(path: &Path, start: YearMonth, values: &[f64]) {
    let mut s = String::from("date,value\n");
    for (i, v) in values.iter().enumerate() {
        s.push_str(&format!("{},{v}\n", start.offset(i as i64)));
    }
    fs::write(path, s).unwrap();
}

fn ym(y: i32, m: u32) -> YearMonth {
    YearMonth::new(y, m).unwrap()
}

/// Raw inputs resembling the monthly data: CPI and exchange rate from
/// 2000-01 to 2025-02 (302 months), two overlapping activity-index bases,
/// policy rate and a constant 3% target.
fn raw_inputs(dir: &Path, constant_cpi: bool) -> PathBuf {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let n = 302;
    let mut cpi = vec![100.0];
    let mut trm = vec![2000.0];
    for t in 1..n {
        let infl = if constant_cpi { 0.0 } else { 0.004 + 0.002 * (t as f64 / 30.0).sin() + rng.random_range(-0.001..0.001) };
        cpi.push(cpi[t - 1] * (1.0 + infl));
        trm.push(trm[t - 1] * (1.0 + 0.003 * (t as f64 / 17.0).cos() + rng.random_range(-0.01..0.01)));
    }
    let wiggle: Vec<f64> = (0..400).map(|_| rng.random_range(-0.004..0.004)).collect();
    let ise_level = |t: i64| 80.0 * (0.0025 * t as f64 + 0.02 * (t as f64 / 25.0).sin() + wiggle[(t + 24) as usize]).exp();
    // Old base covers 1998-01 .. 2010-12 at half the new base's level.
    let old: Vec<f64> = (0..156).map(|t| 0.5 * ise_level(t - 24)).collect();
    let new: Vec<f64> = (0..242).map(|t| ise_level(t + 60)).collect();
    let rate: Vec<f64> = (0..n).map(|t| 6.0 + 2.0 * (t as f64 / 40.0).sin() + rng.random_range(-0.2..0.2)).collect();
    write_series(&dir.join("cpi.csv"), ym(2000, 1), &cpi);
    write_series(&dir.join("trm.csv"), ym(2000, 1), &trm);
    write_series(&dir.join("ise_old.csv"), ym(1998, 1), &old);
    write_series(&dir.join("ise_new.csv"), ym(2005, 1), &new);
    write_series(&dir.join("rate.csv"), ym(2000, 1), &rate);
    write_series(&dir.join("target.csv"), ym(2000, 1), &vec![3.0; n]);
    let cfg = dir.join("run.ini");
    fs::write(
        &cfg,
        "[output]\ndir = out\n\n[data]\ncpi = cpi.csv\ntrm = trm.csv\nise_old = ise_old.csv\nise_new = ise_new.csv\n\
         policy_rate = rate.csv\ntarget = target.csv\n\n[estimate]\nmax_evaluations = 4000\nrestarts = 0\n",
    )
    .unwrap();
    cfg
}

#[test]
fn ingest_builds_aligned_datasets() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = raw_inputs(dir.path(), false);
    run_ok("ingest", &cfg);
    let out = dir.path().join("out");
    let summary = fs::read_to_string(out.join("ingest.txt")).unwrap();
    // 302 CPI months lose 12 to the year-over-year change.
    assert!(summary.contains("inflation         2001-01 .. 2025-02  (290 months)"), "{summary}");
    // Expected depreciation loses 12 + 6 months and binds the start.
    assert!(summary.contains("2001-07 .. 2025-02 (284 months)"), "{summary}");
    assert!(summary.contains("starts with exp_depreciation"));
    for m in ["hp", "trend"] {
        let bytes = fs::read(out.join(format!("dataset_{m}.csv"))).unwrap();
        let data = MacroDataset::read_csv(bytes.as_slice()).unwrap();
        assert_eq!(data.len(), 284);
        // Ex-post real rate by default.
        for t in 0..data.len() {
            let want = data.nominal_rate().values()[t] - data.inflation().values()[t];
            assert!((data.real_rate().values()[t] - want).abs() < 1e-12);
        }
        let mut again = Vec::new();
        data.write_csv(&mut again).unwrap();
        assert_eq!(again, bytes);
    }
    let manifest = fs::read_to_string(out.join("ingest.manifest")).unwrap();
    assert_eq!(manifest.lines().filter(|l| l.ends_with(".csv") && l.contains("  /")).count(), 6);
}

#[test]
fn constant_cpi_gives_zero_inflation() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = raw_inputs(dir.path(), true);
    run_ok("ingest", &cfg);
    let bytes = fs::read(dir.path().join("out/dataset_hp.csv")).unwrap();
    let data = MacroDataset::read_csv(bytes.as_slice()).unwrap();
    assert!(data.inflation().values().iter().all(|&v| v == 0.0));
}

#[test]
fn full_pipeline_on_raw_inputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = raw_inputs(dir.path(), false);
    for cmd in ["ingest", "gap", "adf", "estimate", "simulate", "irf"] {
        run_ok(cmd, &cfg);
    }
    let out = dir.path().join("out");
    let adf = fs::read_to_string(out.join("adf.csv")).unwrap();
    let lines: Vec<&str> = adf.lines().collect();
    assert_eq!(lines[0], "variable,spec,rho,rho_pvalue,adf_stat,adf_pvalue");
    assert_eq!(lines.len(), 7, "{adf}");
    assert!(lines[1].starts_with("gap (HP gap),\"Constant, no time trend\","));

    let gap = fs::read_to_string(out.join("gap_hp.csv")).unwrap();
    assert!(gap.starts_with("date,series,trend,gap\n1998-01,"));

    let est = fs::read_to_string(out.join("estimate.txt")).unwrap();
    assert!(est.contains("HP gap") && est.contains("Trend gap"));
    assert!(est.contains("Parameter") && est.contains("t-value") && est.contains("J-statistic"));
    for f in ["ingest", "gap", "adf", "estimate", "simulate", "irf"] {
        assert!(out.join(format!("{f}.manifest")).is_file());
    }
}

#[test]
fn log_trend_gap_is_a_regression_residual_of_the_log_index() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = raw_inputs(dir.path(), false);
    let mut text = fs::read_to_string(&cfg).unwrap();
    text.push_str("\n[gap]\nmethods = trend, log_trend\n");
    fs::write(&cfg, text).unwrap();
    run_ok("gap", &cfg);
    let read = |f: &str| -> Vec<Vec<f64>> {
        fs::read_to_string(dir.path().join("out").join(f))
            .unwrap()
            .lines()
            .skip(1)
            .map(|r| r.split(',').skip(1).map(|x| x.parse().unwrap()).collect())
            .collect()
    };
    let (lv, lg) = (read("gap_trend.csv"), read("gap_log_trend.csv"));
    assert_eq!(lv.len(), lg.len());
    let (mut sum, mut cross) = (0.0, 0.0);
    for (t, (a, b)) in lv.iter().zip(&lg).enumerate() {
        assert!((b[0] - a[0].ln()).abs() < 1e-12);
        assert!((b[1] + b[2] - b[0]).abs() < 1e-12);
        sum += b[2];
        cross += b[2] * t as f64;
    }
    assert!(sum.abs() < 1e-9 && cross.abs() < 1e-6, "{sum} {cross}");
}

#[test]
fn simulate_without_shocks_stays_at_steady_state() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("sim.ini");
    fs::write(&cfg, "[simulate]\nmonths = 24\n").unwrap();
    run_ok("simulate", &cfg);
    let csv = fs::read_to_string(dir.path().join("out/simulate.csv")).unwrap();
    let rows: Vec<&str> = csv.lines().skip(1).collect();
    assert_eq!(rows.len(), 24);
    // inflation, gap, nominal, real, expected inflation at the steady state, in percent.
    let want = [3.0, 0.0, 4.5771, 1.5771, 3.0];
    for r in &rows {
        let f: Vec<f64> = r.split(',').skip(1).map(|x| x.parse().unwrap()).collect();
        for (a, b) in f.iter().zip(want) {
            assert!((a - b).abs() < 1e-10, "{r}");
        }
    }
}

#[test]
fn irf_writes_one_file_per_shock() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("irf.ini");
    fs::write(&cfg, "[irf]\nhorizon = 10\n").unwrap();
    run_ok("irf", &cfg);
    for s in ["demand", "supply"] {
        let csv = fs::read_to_string(dir.path().join(format!("out/irf_{s}.csv"))).unwrap();
        assert_eq!(csv.lines().count(), 11);
        assert!(csv.starts_with("horizon,inflation,gap,nominal_rate,real_rate,expected_inflation\n1,"));
    }
}

#[test]
fn synth_then_estimate_and_small_montecarlo() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("mc.ini");
    fs::write(
        &cfg,
        "[synth]\nmonths = 300\n\n[estimate]\ndatasets = synthetic=out/dataset.csv\n\n[montecarlo]\nreplications = 4\n",
    )
    .unwrap();
    let out = inflab(&["synth", "--config", cfg.to_str().unwrap(), "--seed", "42"]);
    assert!(out.status.success());
    let bytes = fs::read(dir.path().join("out/dataset.csv")).unwrap();
    let data = MacroDataset::read_csv(bytes.as_slice()).unwrap();
    assert_eq!(data.len(), 300);
    let mut again = Vec::new();
    data.write_csv(&mut again).unwrap();
    assert_eq!(again, bytes);
    assert!(fs::read_to_string(dir.path().join("out/synth.manifest")).unwrap().contains("seed = 42"));

    run_ok("estimate", &cfg);
    run_ok("montecarlo", &cfg);
    let reps = fs::read_to_string(dir.path().join("out/montecarlo_replications.csv")).unwrap();
    assert_eq!(reps.lines().count(), 5);
    assert!(reps.lines().nth(1).unwrap().starts_with("0,1000,ok,"));
    let summary = fs::read_to_string(dir.path().join("out/montecarlo.txt")).unwrap();
    assert!(summary.contains("Replications: 4 (0 failed"));
}

#[test]
fn montecarlo_output_does_not_depend_on_thread_count() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("mc.ini");
    fs::write(&cfg, "[synth]\nmonths = 200\n\n[montecarlo]\nreplications = 3\n").unwrap();
    let run = |threads: &str, out: &str| {
        let o = Command::new(env!("CARGO_BIN_EXE_inflab"))
            .args(["montecarlo", "--config", cfg.to_str().unwrap(), "--out", out])
            .env("INFLAB_THREADS", threads)
            .output()
            .unwrap();
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        fs::read(Path::new(out).join("montecarlo_replications.csv")).unwrap()
    };
    let a = run("1", dir.path().join("a").to_str().unwrap());
    let b = run("3", dir.path().join("b").to_str().unwrap());
    assert_eq!(a, b);

    let o = Command::new(env!("CARGO_BIN_EXE_inflab"))
        .args(["montecarlo", "--config", cfg.to_str().unwrap()])
        .env("INFLAB_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn failures_are_one_machine_readable_line() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope.ini");
    let out = inflab(&["estimate", "--config", missing.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
    let err = String::from_utf8(out.stderr).unwrap();
    assert_eq!(err.lines().count(), 1, "{err}");
    assert!(err.starts_with("error command=estimate kind=config message=\"cannot read "));

    let cfg = dir.path().join("bad.ini");
    fs::write(&cfg, "[gap]\nlamda = 5\n").unwrap();
    let err = String::from_utf8(inflab(&["gap", "--config", cfg.to_str().unwrap()]).stderr).unwrap();
    assert!(err.contains("line 2: unknown key `lamda` in [gap]"), "{err}");

    // A schema violation in an input names file and line.
    let cfg = raw_inputs(dir.path(), false);
    fs::write(dir.path().join("cpi.csv"), "date,value\n2000-01,100\n2000-03,101\n").unwrap();
    let out = inflab(&["ingest", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("kind=parse") && err.contains("cpi.csv: parse error at line 3"), "{err}");

    // Estimation before ingest.
    let fresh = tempfile::tempdir().unwrap();
    let cfg = raw_inputs(fresh.path(), false);
    let err = String::from_utf8(inflab(&["estimate", "--config", cfg.to_str().unwrap()]).stderr).unwrap();
    assert!(err.contains("run ingest or synth first"), "{err}");

    // Unusable moment list.
    fs::write(&cfg, "[estimate]\ndatasets = x=cpi.csv\nmoments = e1*1, e2*1\n").unwrap();
    let err = String::from_utf8(inflab(&["estimate", "--config", cfg.to_str().unwrap()]).stderr).unwrap();
    assert!(err.contains("[estimate] moments"), "{err}");
}

#[test]
fn help_documents_config_keys() {
    let out = inflab(&["--help"]);
    let text = String::from_utf8(out.stdout).unwrap();
    for key in ["[montecarlo]", "replications", "expectation_window", "INFLAB_THREADS"] {
        assert!(text.contains(key), "{key}");
    }
}
