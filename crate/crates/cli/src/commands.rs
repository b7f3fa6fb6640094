use std::fmt::Write as _;
use std::path::PathBuf;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use inflab::detrend::{fit_trend, gap_log_diff, gap_log_trend, gap_pct_dev, hp_filter};
use inflab::gmm::{self, Bandwidth, GmmOptions, GmmResult, MomentSystem, OptimizerOptions};
use inflab::model::{
    expected_inflation, impulse_response, rf_coefficients, simulate_arf, simulate_structural, ModelParams,
    RealRateConvention, ShockKind, ShockPath, PARAM_NAMES,
};
use inflab::report::{self, AdfRow, EstimateColumn};
use inflab::series::{
    align, log_series, read_series_csv, splice, trailing_mean, write_series_csv, yoy_pct_change, MacroDataset,
    RateUnits, TimeSeries, YearMonth, PERCENT_PER_UNIT,
};
use inflab::synth::{generate, ShockDesign, SynthConfig};
use inflab::unitroot::{adf_test, AdfSpec, LagSelection};

use crate::config::Config;
use crate::fail::Failure;
use crate::output::OutDir;

/// Everything a subcommand needs.
pub struct Ctx {
    pub cfg: Config,
    pub out: OutDir,
    pub seed: Option<u64>,
}

type Res<T> = Result<T, Failure>;

fn csv_bytes(f: impl FnOnce(&mut Vec<u8>) -> inflab::Result<()>) -> Res<Vec<u8>> {
    let mut buf = Vec::new();
    f(&mut buf)?;
    Ok(buf)
}

fn read_series(ctx: &mut Ctx, key: &str, name: &str) -> Res<Option<TimeSeries>> {
    let Some(path) = ctx.cfg.input_file("data", key)? else {
        return Ok(None);
    };
    let bytes = ctx.out.read_input(&path)?;
    let s = read_series_csv(bytes.as_slice(), name).map_err(|e| Failure::from(e).context(path.display()))?;
    Ok(Some(s))
}

fn require_series(ctx: &mut Ctx, key: &str, name: &str) -> Res<TimeSeries> {
    read_series(ctx, key, name)?.ok_or_else(|| Failure::config(format!("[data] {key} is required")))
}

/// Rate inputs converted to percent.
fn read_rate(ctx: &mut Ctx, key: &str, name: &str) -> Res<TimeSeries> {
    let s = require_series(ctx, key, name)?;
    match ctx.cfg.raw("data", "units") {
        Some("percent") => Ok(s),
        Some("decimal") => Ok(s.map(|x| x * PERCENT_PER_UNIT)?),
        other => Err(ctx.cfg.fail("data", "units", format!("expected percent or decimal, got `{}`", other.unwrap_or("")))),
    }
}

fn activity_index(ctx: &mut Ctx) -> Res<TimeSeries> {
    let new = require_series(ctx, "ise_new", "ise")?;
    match read_series(ctx, "ise_old", "ise_old")? {
        Some(old) => Ok(splice(&old, &new)?.renamed("ise")),
        None => Ok(new),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum GapKind {
    Hp,
    Trend,
    LogTrend,
}

impl GapKind {
    fn key(self) -> &'static str {
        match self {
            GapKind::Hp => "hp",
            GapKind::Trend => "trend",
            GapKind::LogTrend => "log_trend",
        }
    }

    fn label(self) -> &'static str {
        match self {
            GapKind::Hp => "HP gap",
            GapKind::Trend => "Trend gap",
            GapKind::LogTrend => "Log-trend gap",
        }
    }
}

fn gap_kinds(cfg: &Config) -> Res<Vec<GapKind>> {
    let mut out = Vec::new();
    for m in cfg.list("gap", "methods") {
        let k = match m.as_str() {
            "hp" => GapKind::Hp,
            "trend" => GapKind::Trend,
            "log_trend" => GapKind::LogTrend,
            other => {
                return Err(cfg.fail(
                    "gap",
                    "methods",
                    format!("unknown method `{other}`, expected hp, trend or log_trend"),
                ))
            }
        };
        if !out.contains(&k) {
            out.push(k);
        }
    }
    if out.is_empty() {
        return Err(cfg.fail("gap", "methods", "no gap method given"));
    }
    Ok(out)
}

fn gap_of(cfg: &Config, kind: GapKind, ise: &TimeSeries) -> Res<TimeSeries> {
    Ok(match kind {
        GapKind::Hp => gap_log_diff(ise, cfg.require("gap", "lambda")?)?,
        GapKind::Trend => gap_pct_dev(ise, cfg.require("gap", "degree")?)?,
        GapKind::LogTrend => gap_log_trend(ise, cfg.require("gap", "degree")?)?,
    })
}

fn positive(cfg: &Config, section: &str, key: &str) -> Res<usize> {
    let v: usize = cfg.require(section, key)?;
    if v == 0 {
        return Err(cfg.fail(section, key, "must be at least 1"));
    }
    Ok(v)
}

fn real_rate_convention(cfg: &Config, section: &str) -> Res<RealRateConvention> {
    match cfg.raw(section, "real_rate") {
        Some("ex_post") => Ok(RealRateConvention::ExPost),
        Some("ex_ante") => Ok(RealRateConvention::ExAnte),
        other => Err(cfg.fail(section, "real_rate", format!("expected ex_post or ex_ante, got `{}`", other.unwrap_or("")))),
    }
}

pub fn model_params(cfg: &Config) -> Res<ModelParams> {
    let base = match cfg.raw("model", "preset") {
        Some("hp") => ModelParams::table1_hp(),
        Some("trend") => ModelParams::table1_trend(),
        other => return Err(cfg.fail("model", "preset", format!("expected hp or trend, got `{}`", other.unwrap_or("")))),
    };
    let mut theta = base.to_array();
    for (k, name) in PARAM_NAMES.iter().enumerate() {
        if let Some(v) = cfg.get::<f64>("model", name)? {
            theta[k] = v;
        }
    }
    let pi_bar = cfg.require::<f64>("model", "target")? / PERCENT_PER_UNIT;
    let [b, gamma, r, c1, c2, v, phi] = theta;
    ModelParams::new(b, gamma, r, c1, c2, v, phi, pi_bar).map_err(|e| Failure::from(e).context("[model]"))
}

fn describe(s: &TimeSeries) -> String {
    format!("{:<18}{} .. {}  ({} months)", s.name(), s.start(), s.end(), s.len())
}

pub fn ingest(ctx: &mut Ctx) -> Res<()> {
    let lag = positive(&ctx.cfg, "transform", "inflation_lag")?;
    let window = positive(&ctx.cfg, "transform", "expectation_window")?;
    let convention = real_rate_convention(&ctx.cfg, "transform")?;
    let kinds = gap_kinds(&ctx.cfg)?;
    let gamma = match convention {
        RealRateConvention::ExAnte => Some(model_params(&ctx.cfg)?.gamma),
        RealRateConvention::ExPost => None,
    };

    let cpi = require_series(ctx, "cpi", "cpi")?;
    let trm = require_series(ctx, "trm", "trm")?;
    let ise = activity_index(ctx)?;
    let rate = read_rate(ctx, "policy_rate", "nominal_rate")?;
    let target = read_rate(ctx, "target", "target")?;

    let inflation = yoy_pct_change(&cpi, lag)?.renamed("inflation");
    let depreciation = yoy_pct_change(&trm, lag)?.renamed("depreciation");
    let exp_dep = trailing_mean(&depreciation, window)?.renamed("exp_depreciation");

    let mut text = String::from("Ingest\n\nInputs\n");
    for s in [&cpi, &trm, &ise, &rate, &target] {
        let _ = writeln!(text, "  {}", describe(s));
    }
    text.push_str("\nDerived\n");
    for s in [&inflation, &depreciation, &exp_dep] {
        let _ = writeln!(text, "  {}", describe(s));
    }
    let _ = writeln!(
        text,
        "\nInflation and depreciation: {lag}-month percentage change. Expected depreciation: mean of the {window} previous months."
    );
    let _ = writeln!(
        text,
        "Real rate: {}.",
        match convention {
            RealRateConvention::ExPost => "nominal rate minus inflation".to_string(),
            RealRateConvention::ExAnte => format!("nominal rate minus expected inflation, gamma = {}", gamma.unwrap_or(0.0)),
        }
    );

    for kind in kinds {
        let gap = gap_of(&ctx.cfg, kind, &ise)?;
        let mut members = vec![inflation.clone(), gap, rate.clone(), exp_dep.clone(), target.clone()];
        if convention == RealRateConvention::ExAnte {
            let v = inflation.values();
            members.push(TimeSeries::new("inflation_lag", inflation.start().offset(1), v[..v.len() - 1].to_vec())?);
        }
        let lo = members.iter().map(TimeSeries::start).max().expect("non-empty");
        let hi = members.iter().map(TimeSeries::end).min().expect("non-empty");
        let aligned = align(&members).map_err(|e| Failure::from(e).context(format!("{} dataset", kind.key())))?;
        let (pi, y, i, d, tgt) = (&aligned[0], &aligned[1], &aligned[2], &aligned[3], &aligned[4]);
        let real: Vec<f64> = match convention {
            RealRateConvention::ExPost => i.values().iter().zip(pi.values()).map(|(a, b)| a - b).collect(),
            RealRateConvention::ExAnte => {
                let g = gamma.expect("gamma read for ex-ante");
                (0..i.len())
                    .map(|t| i.values()[t] - expected_inflation(g, d.values()[t], aligned[5].values()[t]))
                    .collect()
            }
        };
        let real = TimeSeries::new("real_rate", pi.start(), real)?;
        let data = MacroDataset::new(
            pi.clone(),
            y.clone(),
            i.clone(),
            real,
            d.clone(),
            tgt.clone(),
            RateUnits::Percent,
        )?;
        let name = format!("dataset_{}.csv", kind.key());
        let bytes = csv_bytes(|b| data.write_csv(b))?;
        ctx.out.write(&name, &bytes)?;
        let first = members.iter().find(|s| s.start() == lo).expect("binding start");
        let last = members.iter().find(|s| s.end() == hi).expect("binding end");
        let _ = writeln!(
            text,
            "\n{}: {} .. {} ({} months) -> {name}\n  starts with {}, ends with {}",
            kind.label(),
            data.start(),
            data.start().offset(data.len() as i64 - 1),
            data.len(),
            first.name(),
            last.name()
        );
    }
    ctx.out.write_str("ingest.txt", &text)
}

fn moments(values: &[f64]) -> (f64, f64, f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let sd = (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt();
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    (mean, sd, lo, hi)
}

pub fn gap(ctx: &mut Ctx) -> Res<()> {
    let kinds = gap_kinds(&ctx.cfg)?;
    let ise = activity_index(ctx)?;
    let mut text = format!("Output gap\n\n  {}\n", describe(&ise));
    for kind in kinds {
        let (series, est) = match kind {
            GapKind::Hp => {
                let lambda: f64 = ctx.cfg.require("gap", "lambda")?;
                let l = log_series(&ise)?;
                let est = hp_filter(&l, lambda)?;
                let _ = write!(text, "\n{}: log index minus HP trend, lambda = {lambda}\n", kind.label());
                (l, est)
            }
            GapKind::Trend => {
                let degree: usize = ctx.cfg.require("gap", "degree")?;
                let est = fit_trend(&ise, degree)?;
                let _ = write!(
                    text,
                    "\n{}: (index - trend) / trend, polynomial trend of degree {degree}\n",
                    kind.label()
                );
                (ise.clone(), est)
            }
            GapKind::LogTrend => {
                let degree: usize = ctx.cfg.require("gap", "degree")?;
                let l = log_series(&ise)?;
                let est = fit_trend(&l, degree)?;
                let _ = write!(
                    text,
                    "\n{}: log index minus polynomial trend of degree {degree}\n",
                    kind.label()
                );
                (l, est)
            }
        };
        let gap = gap_of(&ctx.cfg, kind, &ise)?;
        let mut csv = String::from("date,series,trend,gap\n");
        for t in 0..gap.len() {
            let _ = writeln!(
                csv,
                "{},{},{},{}",
                gap.month_at(t),
                series.values()[t],
                est.trend.values()[t],
                gap.values()[t]
            );
        }
        let name = format!("gap_{}.csv", kind.key());
        ctx.out.write_str(&name, &csv)?;
        let (mean, sd, lo, hi) = moments(gap.values());
        let _ = writeln!(
            text,
            "  mean {mean:.6}  sd {sd:.6}  min {lo:.6}  max {hi:.6}  -> {name}"
        );
    }
    ctx.out.write_str("gap.txt", &text)
}

/// `(label, path)` of the datasets to analyse: `[estimate] datasets` or
/// the ingest outputs for each gap method.
fn dataset_paths(ctx: &Ctx) -> Res<Vec<(String, PathBuf)>> {
    let cfg = &ctx.cfg;
    let mut out = Vec::new();
    if cfg.raw("estimate", "datasets").is_some() {
        for item in cfg.list("estimate", "datasets") {
            let (label, path) = item
                .split_once('=')
                .ok_or_else(|| cfg.fail("estimate", "datasets", format!("expected label=path, got `{item}`")))?;
            out.push((label.trim().to_string(), cfg.path_of(path.trim())));
        }
    } else {
        for kind in gap_kinds(cfg)? {
            out.push((kind.label().to_string(), ctx.out.path(&format!("dataset_{}.csv", kind.key()))));
        }
    }
    for (_, p) in &out {
        if !p.is_file() {
            return Err(Failure::config(format!("dataset {} does not exist; run ingest or synth first", p.display())));
        }
    }
    Ok(out)
}

fn load_datasets(ctx: &mut Ctx) -> Res<Vec<(String, MacroDataset)>> {
    let mut out = Vec::new();
    for (label, path) in dataset_paths(ctx)? {
        let bytes = ctx.out.read_input(&path)?;
        let data = MacroDataset::read_csv(bytes.as_slice()).map_err(|e| Failure::from(e).context(path.display()))?;
        out.push((label, data));
    }
    Ok(out)
}

pub fn adf(ctx: &mut Ctx) -> Res<()> {
    let spec = match ctx.cfg.raw("adf", "spec") {
        Some("constant") => AdfSpec::ConstantNoTrend,
        Some("trend") => AdfSpec::ConstantTrend,
        Some("none") => AdfSpec::NoConstant,
        other => {
            return Err(ctx.cfg.fail("adf", "spec", format!("expected constant, trend or none, got `{}`", other.unwrap_or(""))))
        }
    };
    let lags = match ctx.cfg.raw("adf", "lags") {
        Some("aic") => LagSelection::Aic,
        _ => LagSelection::Fixed(ctx.cfg.require("adf", "lags")?),
    };
    let datasets = load_datasets(ctx)?;
    let mut series: Vec<(String, TimeSeries)> = datasets
        .iter()
        .map(|(label, d)| (format!("gap ({label})"), d.gap().clone()))
        .collect();
    let first = &datasets[0].1;
    series.extend([
        ("inflation".to_string(), first.inflation().clone()),
        ("exp_depreciation".to_string(), first.exp_depreciation().clone()),
        ("real_rate".to_string(), first.real_rate().clone()),
        ("nominal_rate".to_string(), first.nominal_rate().clone()),
    ]);
    let mut results = Vec::with_capacity(series.len());
    for (name, s) in &series {
        results.push(adf_test(s, spec, lags).map_err(|e| Failure::from(e).context(name))?);
    }
    let rows: Vec<AdfRow> = series
        .iter()
        .zip(&results)
        .map(|((name, _), r)| AdfRow { variable: name, result: r })
        .collect();
    let csv = csv_bytes(|b| report::write_adf_csv(b, &rows))?;
    ctx.out.write("adf.csv", &csv)?;
    ctx.out.write_str("adf.txt", &report::adf_text(&rows))
}

pub fn simulate(ctx: &mut Ctx) -> Res<u64> {
    let cfg = &ctx.cfg;
    let p = model_params(cfg)?;
    let months = positive(cfg, "simulate", "months")?;
    let start: YearMonth = cfg.require("simulate", "start")?;
    let pct = |key: &str| -> Res<f64> { Ok(cfg.get::<f64>("simulate", key)?.map_or(p.pi_bar, |v| v / PERCENT_PER_UNIT)) };
    let pi0 = pct("initial_inflation")?;
    let d = pct("exp_depreciation")?;
    let sigma_a: f64 = cfg.require("simulate", "sigma_a")?;
    let sigma_o: f64 = cfg.require("simulate", "sigma_o")?;
    let seed = match ctx.seed {
        Some(s) => s,
        None => cfg.require("simulate", "seed")?,
    };
    let normal = |sd: f64, key: &str| {
        Normal::new(0.0, sd).map_err(|e| cfg.fail("simulate", key, e))
    };
    let (na, no) = (normal(sigma_a, "sigma_a")?, normal(sigma_o, "sigma_o")?);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut a = Vec::with_capacity(months);
    let mut o = Vec::with_capacity(months);
    for _ in 0..months {
        a.push(na.sample(&mut rng));
        o.push(no.sample(&mut rng));
    }
    let shocks = ShockPath::new(TimeSeries::new("demand_shock", start, a)?, TimeSeries::new("supply_shock", start, o)?)?;
    let d_e = TimeSeries::constant("exp_depreciation", start, d, months)?;
    let path = simulate_structural(&p, &shocks, &d_e, pi0)?;
    let arf = simulate_arf(&p, &path.gap, &d_e, pi0)?.map(|x| x * PERCENT_PER_UNIT)?;

    let csv = csv_bytes(|b| path.write_csv(b, PERCENT_PER_UNIT))?;
    ctx.out.write("simulate.csv", &csv)?;
    let arf_csv = csv_bytes(|b| write_series_csv(b, &arf))?;
    ctx.out.write("simulate_arf.csv", &arf_csv)?;

    let mut text = report::model_text(&p);
    let pi = path.inflation.values();
    let dev = pi.iter().map(|x| (x - p.pi_bar).abs()).fold(0.0, f64::max);
    let _ = writeln!(
        text,
        "\nSimulation: {months} months from {start}, initial inflation {:.4}%, expected depreciation {:.4}%",
        pi0 * PERCENT_PER_UNIT,
        d * PERCENT_PER_UNIT
    );
    let _ = writeln!(text, "Shocks: demand sd {sigma_a}, supply sd {sigma_o}, seed {seed}");
    let _ = writeln!(
        text,
        "Final inflation {:.4}%, largest deviation from target {:.4} points",
        pi[pi.len() - 1] * PERCENT_PER_UNIT,
        dev * PERCENT_PER_UNIT
    );
    ctx.out.write_str("simulate.txt", &text)?;
    Ok(seed)
}

pub fn irf(ctx: &mut Ctx) -> Res<()> {
    let cfg = &ctx.cfg;
    let p = model_params(cfg)?;
    let size = cfg.require::<f64>("irf", "size")? / PERCENT_PER_UNIT;
    let horizon = positive(cfg, "irf", "horizon")?;
    let mut kinds = Vec::new();
    for s in cfg.list("irf", "shocks") {
        kinds.push(match s.as_str() {
            "demand" => ShockKind::Demand,
            "supply" => ShockKind::Supply,
            other => return Err(cfg.fail("irf", "shocks", format!("unknown shock `{other}`"))),
        });
    }
    if kinds.is_empty() {
        return Err(cfg.fail("irf", "shocks", "no shock given"));
    }
    let mut text = report::model_text(&p);
    let _ = writeln!(
        text,
        "\nImpulse responses to a {} point shock, deviations from steady state in points (gap as a fraction)",
        size * PERCENT_PER_UNIT
    );
    let mut files = Vec::new();
    for kind in kinds {
        let name = match kind {
            ShockKind::Demand => "demand",
            ShockKind::Supply => "supply",
        };
        let path = impulse_response(&p, kind, size, horizon)?;
        files.push((format!("irf_{name}.csv"), csv_bytes(|b| path.write_horizon_csv(b, PERCENT_PER_UNIT))?));
        let _ = writeln!(text, "\n{name} shock\n{:>8}{:>12}{:>12}{:>12}{:>12}", "horizon", "inflation", "gap", "nominal", "real");
        for h in 0..horizon.min(12) {
            let _ = writeln!(
                text,
                "{:>8}{:>12.5}{:>12.5}{:>12.5}{:>12.5}",
                h + 1,
                path.inflation.values()[h] * PERCENT_PER_UNIT,
                path.gap.values()[h],
                path.nominal_rate.values()[h] * PERCENT_PER_UNIT,
                path.real_rate.values()[h] * PERCENT_PER_UNIT
            );
        }
    }
    let rf = rf_coefficients(&p);
    if rf.is_stable() && rf.on_lag_inflation > 0.0 {
        let _ = writeln!(
            text,
            "\nHalf-life of an inflation deviation: {:.2} months",
            (0.5f64).ln() / rf.on_lag_inflation.ln()
        );
    }
    for (name, bytes) in files {
        ctx.out.write(&name, &bytes)?;
    }
    ctx.out.write_str("irf.txt", &text)
}

pub fn moment_system(cfg: &Config) -> Res<MomentSystem> {
    let list = cfg.list("estimate", "moments");
    if list.len() == 1 && list[0] == "default23" {
        return Ok(gmm::default_moment_system());
    }
    let mut conditions = Vec::with_capacity(list.len());
    for item in &list {
        conditions.push(item.parse().map_err(|e: inflab::Error| cfg.fail("estimate", "moments", e))?);
    }
    MomentSystem::new(conditions).map_err(|e| cfg.fail("estimate", "moments", e))
}

pub fn gmm_options(cfg: &Config) -> Res<GmmOptions> {
    let bandwidth = match cfg.raw("estimate", "bandwidth") {
        Some("auto") => Bandwidth::Auto,
        _ => Bandwidth::Fixed(cfg.require("estimate", "bandwidth")?),
    };
    let steps: usize = cfg.require("estimate", "steps")?;
    if steps < 2 {
        return Err(cfg.fail("estimate", "steps", "need at least 2"));
    }
    Ok(GmmOptions {
        bandwidth,
        steps,
        standardize: cfg.bool("estimate", "standardize")?,
        optimizer: OptimizerOptions {
            max_evaluations: positive(cfg, "estimate", "max_evaluations")?,
            restarts: cfg.require("estimate", "restarts")?,
            ..OptimizerOptions::default()
        },
    })
}

pub fn estimate(ctx: &mut Ctx) -> Res<()> {
    let start = model_params(&ctx.cfg)?;
    let sys = moment_system(&ctx.cfg)?;
    let opts = gmm_options(&ctx.cfg)?;
    let datasets = load_datasets(ctx)?;
    let mut results = Vec::with_capacity(datasets.len());
    for (label, data) in &datasets {
        let r = gmm::estimate(&sys, &data.to_decimal(), &start, &opts).map_err(|e| Failure::from(e).context(label))?;
        results.push(r);
    }
    let cols: Vec<EstimateColumn> = datasets
        .iter()
        .zip(&results)
        .map(|((label, _), r)| EstimateColumn { label, result: r })
        .collect();
    let mut text = report::estimate_text(&cols)?;
    let _ = write!(text, "\nMoment conditions ({}):\n{sys}\n", sys.len());
    let csv = csv_bytes(|b| report::write_estimate_csv(b, &cols))?;
    ctx.out.write("estimate.csv", &csv)?;
    ctx.out.write_str("estimate.txt", &text)
}

pub fn synth_config(cfg: &Config, seed: u64) -> Res<SynthConfig> {
    let p = model_params(cfg)?;
    let f = |key: &str| cfg.require::<f64>("synth", key);
    let shocks = match cfg.raw("synth", "design") {
        Some("empirical") => ShockDesign::EmpiricalSystem {
            rho_gap: f("rho_gap")?,
            sigma_gap: f("sigma_gap")?,
            sigma_i: f("sigma_i")?,
            sigma_pi: f("sigma_pi")?,
            sigma_r: f("sigma_r")?,
        },
        Some("structural") => ShockDesign::Structural {
            sigma_a: f("sigma_a")?,
            sigma_o: f("sigma_o")?,
            sigma_i: f("sigma_i")?,
            real_rate: real_rate_convention(cfg, "synth")?,
        },
        other => {
            return Err(cfg.fail("synth", "design", format!("expected empirical or structural, got `{}`", other.unwrap_or(""))))
        }
    };
    let c = SynthConfig {
        params: p,
        months: cfg.require("synth", "months")?,
        burn_in: cfg.require("synth", "burn_in")?,
        start: cfg.require("synth", "start")?,
        rho_d: f("rho_d")?,
        sigma_d: f("sigma_d")?,
        shocks,
        seed,
    };
    c.validate().map_err(|e| Failure::from(e).context("[synth]"))?;
    Ok(c)
}

pub fn synth(ctx: &mut Ctx) -> Res<u64> {
    let seed = match ctx.seed {
        Some(s) => s,
        None => ctx.cfg.require("synth", "seed")?,
    };
    let sc = synth_config(&ctx.cfg, seed)?;
    let (data, shocks) = generate(&sc)?;
    let csv = csv_bytes(|b| data.write_csv(b))?;
    ctx.out.write("dataset.csv", &csv)?;
    let mut sh = String::from("date,demand_shock,supply_shock\n");
    for t in 0..shocks.len() {
        let _ = writeln!(
            sh,
            "{},{},{}",
            shocks.demand.month_at(t),
            shocks.demand.values()[t],
            shocks.supply.values()[t]
        );
    }
    ctx.out.write_str("shocks.csv", &sh)?;
    let mut text = report::model_text(&sc.params);
    let _ = writeln!(
        text,
        "\nSynthetic data: {} months from {} after {} burn-in months, seed {seed} (ChaCha8)",
        sc.months, sc.start, sc.burn_in
    );
    let _ = writeln!(text, "Shock design: {}", design_text(&sc.shocks));
    let _ = writeln!(text, "Expected depreciation: AR(1) around target, rho {}, sd {}", sc.rho_d, sc.sigma_d);
    ctx.out.write_str("synth.txt", &text)?;
    Ok(seed)
}

/// Worker count: `INFLAB_THREADS` if set, capped by the available cores.
pub fn worker_count() -> Res<usize> {
    let cores = std::thread::available_parallelism().map_or(1, |n| n.get());
    match std::env::var("INFLAB_THREADS") {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n >= 1 => Ok(n.min(cores)),
            _ => Err(Failure::config(format!("INFLAB_THREADS must be a positive integer, got `{v}`"))),
        },
        Err(_) => Ok(cores),
    }
}

/// Replications `0..reps` of synth + estimate, in replication order.
pub fn run_replications(
    sc: &SynthConfig,
    sys: &MomentSystem,
    opts: &GmmOptions,
    reps: usize,
    workers: usize,
) -> Res<Vec<inflab::Result<GmmResult>>> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Failure::io(format!("cannot start worker pool: {e}")))?;
    Ok(pool.install(|| {
        (0..reps)
            .into_par_iter()
            .map(|k| {
                let c = sc.replication(k as u64);
                let (data, _) = generate(&c)?;
                gmm::estimate(sys, &data, &c.params, opts)
            })
            .collect()
    }))
}

pub fn montecarlo(ctx: &mut Ctx) -> Res<u64> {
    let cfg = &ctx.cfg;
    let seed = match ctx.seed {
        Some(s) => s,
        None => cfg.require("montecarlo", "seed")?,
    };
    let reps = positive(cfg, "montecarlo", "replications")?;
    let sc = synth_config(cfg, seed)?;
    let sys = moment_system(cfg)?;
    let opts = gmm_options(cfg)?;
    let workers = worker_count()?;
    log::info!("{reps} replications on {workers} workers");
    let outcomes = run_replications(&sc, &sys, &opts, reps, workers)?;

    let mut rows = String::from("replication,seed,status");
    for name in PARAM_NAMES {
        let _ = write!(rows, ",{name}");
    }
    for name in PARAM_NAMES {
        let _ = write!(rows, ",se_{name}");
    }
    rows.push_str(",j_stat,converged\n");
    let mut ok = Vec::new();
    let mut failures = 0;
    for (k, o) in outcomes.into_iter().enumerate() {
        let s = seed.wrapping_add(k as u64);
        match o {
            Ok(r) => {
                let _ = write!(rows, "{k},{s},ok");
                for v in r.theta_hat.to_array() {
                    let _ = write!(rows, ",{v}");
                }
                for v in r.std_errors {
                    let _ = write!(rows, ",{v}");
                }
                let _ = writeln!(rows, ",{},{}", r.j_stat, r.converged);
                ok.push(r);
            }
            Err(e) => {
                log::warn!("replication {k} failed: {e}");
                failures += 1;
                let _ = writeln!(rows, "{k},{s},failed{}", ",".repeat(2 * PARAM_NAMES.len() + 2));
            }
        }
    }
    let summary = report::summarize_monte_carlo(&sc.params, &ok, failures)?;
    let mut text = report::monte_carlo_text(&summary);
    let _ = writeln!(
        text,
        "\nSeeds {seed}..{}, {} months each, {} conditions, Bartlett HAC with {} lags\nShock design: {}",
        seed.wrapping_add(reps as u64 - 1),
        sc.months,
        sys.len(),
        opts.bandwidth.lags(sc.months.saturating_sub(sys.max_lag())),
        design_text(&sc.shocks)
    );
    ctx.out.write_str("montecarlo_replications.csv", &rows)?;
    let csv = csv_bytes(|b| report::write_monte_carlo_csv(b, &summary))?;
    ctx.out.write("montecarlo.csv", &csv)?;
    ctx.out.write_str("montecarlo.txt", &text)?;
    Ok(seed)
}

fn design_text(d: &ShockDesign) -> String {
    match *d {
        ShockDesign::Structural { sigma_a, sigma_o, sigma_i, real_rate } => format!(
            "structural, sd demand {sigma_a}, supply {sigma_o}, policy {sigma_i}, {} real rate",
            match real_rate {
                RealRateConvention::ExPost => "ex-post",
                RealRateConvention::ExAnte => "ex-ante",
            }
        ),
        ShockDesign::EmpiricalSystem { rho_gap, sigma_gap, sigma_i, sigma_pi, sigma_r } => format!(
            "empirical, gap AR(1) {rho_gap} sd {sigma_gap}, sd inflation {sigma_pi}, policy {sigma_i}, real rate {sigma_r}"
        ),
    }
}
