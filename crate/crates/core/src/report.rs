//! Plain-text and CSV reports.
//!
//! Every report comes in two forms: aligned text for reading and CSV for
//! further processing. CSV numbers use the shortest representation that
//! round-trips, so identical results give identical bytes.

use std::fmt::Write as _;
use std::io::Write;

use crate::error::{Error, Result};
use crate::gmm::{chi2_quantile, GmmResult, N_PARAMS};
use crate::model::{rf_coefficients, steady_state, ModelParams, PARAM_NAMES};
use crate::unitroot::AdfResult;

/// Significance levels of the critical values in the estimate report.
pub const SIGNIFICANCE_LEVELS: [f64; 3] = [0.05, 0.02, 0.01];

/// Degrees of freedom of the published critical values, shown next to the
/// ones implied by the moment system.
pub const REFERENCE_DOF: usize = 14;

/// Half-width, in estimated standard errors, of the Monte Carlo coverage band.
pub const COVERAGE_SE: f64 = 3.0;

fn csv_err(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::InvalidParameter(format!("csv: {other:?}")),
    }
}

/// `chi2` quantiles at [`SIGNIFICANCE_LEVELS`].
pub fn critical_values(dof: usize) -> Result<[f64; 3]> {
    let mut out = [0.0; 3];
    for (o, a) in out.iter_mut().zip(SIGNIFICANCE_LEVELS) {
        *o = chi2_quantile(1.0 - a, dof)?;
    }
    Ok(out)
}

/// One estimated variant (one gap definition) of the estimate report.
#[derive(Debug, Clone, Copy)]
pub struct EstimateColumn<'a> {
    pub label: &'a str,
    pub result: &'a GmmResult,
}

fn distinct_dofs(cols: &[EstimateColumn]) -> Vec<usize> {
    let mut d: Vec<usize> = cols.iter().map(|c| c.result.dof).collect();
    d.sort_unstable();
    d.dedup();
    d
}

/// Parameter table with one `Value`/`t-value` pair per variant, followed by
/// the J-test block and chi-square critical values.
pub fn estimate_text(cols: &[EstimateColumn]) -> Result<String> {
    if cols.is_empty() {
        return Err(Error::InvalidParameter("estimate report needs at least one column".into()));
    }
    let w = cols.iter().map(|c| c.label.len()).max().unwrap_or(0).max(22);
    let mut s = String::from("GMM estimates\n\n");
    let _ = write!(s, "{:<14}", "");
    for c in cols {
        let _ = write!(s, "  {:^w$}", c.label);
    }
    s.push('\n');
    let _ = write!(s, "{:<14}", "Parameter");
    for _ in cols {
        let _ = write!(s, "  {:>11}{:>11}{:w2$}", "Value", "t-value", "", w2 = w - 22);
    }
    s.push('\n');
    for (k, name) in PARAM_NAMES.iter().enumerate() {
        let _ = write!(s, "{name:<14}");
        for c in cols {
            let r = c.result;
            let _ = write!(
                s,
                "  {:>11.5}{:>11.3}{:w2$}",
                r.theta_hat.to_array()[k],
                r.t_values[k],
                "",
                w2 = w - 22
            );
        }
        s.push('\n');
    }
    s.push('\n');
    let rows: [(&str, fn(&GmmResult) -> String); 7] = [
        ("J-statistic", |r| format!("{:.3}", r.j_stat)),
        ("dof", |r| r.dof.to_string()),
        ("p-value", |r| format!("{:.4}", r.j_pvalue)),
        ("Conditions", |r| r.n_conditions.to_string()),
        ("Observations", |r| r.n_obs.to_string()),
        ("HAC lags", |r| r.weighting.hac_lags.to_string()),
        ("Converged", |r| if r.converged { "yes".into() } else { "no".into() }),
    ];
    for (name, f) in rows {
        let _ = write!(s, "{name:<14}");
        for c in cols {
            let _ = write!(s, "  {:>11}{:w2$}", f(c.result), "", w2 = w - 11);
        }
        s.push('\n');
    }

    s.push_str("\nChi-square critical values");
    for a in SIGNIFICANCE_LEVELS {
        let _ = write!(s, "{:>10}", format!("{a:.2}"));
    }
    s.push('\n');
    let dofs = distinct_dofs(cols);
    let mut lines: Vec<(String, usize)> = dofs.iter().map(|&d| (format!("{d} df"), d)).collect();
    if !dofs.contains(&REFERENCE_DOF) {
        lines.push((format!("{REFERENCE_DOF} df (reference)"), REFERENCE_DOF));
    }
    for (label, d) in lines {
        let _ = write!(s, "{label:<26}");
        for v in critical_values(d)? {
            let _ = write!(s, "{v:>10.3}");
        }
        s.push('\n');
    }

    s.push('\n');
    for c in cols {
        let r = c.result;
        let _ = writeln!(
            s,
            "{}: dof = {} conditions - {} parameters = {}.",
            c.label, r.n_conditions, N_PARAMS, r.dof
        );
    }
    if dofs.iter().any(|&d| d != REFERENCE_DOF) {
        let _ = writeln!(
            s,
            "The reference estimates quote {REFERENCE_DOF} df for 23 conditions and 7 parameters, \
             which would leave 16. Critical values use the dof computed here; the {REFERENCE_DOF} df \
             values are listed for comparison only."
        );
    }
    let first = cols[0].result.weighting;
    let _ = writeln!(
        s,
        "Weighting: {} steps, identity first step on {} instruments, Bartlett HAC with {} lags.",
        first.steps,
        if first.first_step_standardized { "standardized" } else { "raw" },
        first.hac_lags
    );
    for c in cols {
        if let Some(dir) = c.result.unidentified_direction {
            let _ = writeln!(s, "{}: WARNING parameters not identified along {:?}.", c.label, dir);
        }
        if !c.result.converged {
            let _ = writeln!(s, "{}: WARNING optimizer hit its evaluation budget.", c.label);
        }
    }
    Ok(s)
}

/// Wide CSV with the same rows as [`estimate_text`]: parameters, then the
/// J-test rows and critical values at the column's dof.
pub fn write_estimate_csv<W: Write>(w: W, cols: &[EstimateColumn]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    let mut header = vec!["parameter".to_string()];
    for c in cols {
        for f in ["value", "std_error", "t_value"] {
            header.push(format!("{} {f}", c.label));
        }
    }
    out.write_record(&header).map_err(csv_err)?;
    for (k, name) in PARAM_NAMES.iter().enumerate() {
        let mut rec = vec![name.to_string()];
        for c in cols {
            let r = c.result;
            rec.push(r.theta_hat.to_array()[k].to_string());
            rec.push(r.std_errors[k].to_string());
            rec.push(r.t_values[k].to_string());
        }
        out.write_record(&rec).map_err(csv_err)?;
    }
    let mut crit = Vec::with_capacity(cols.len());
    for c in cols {
        crit.push(critical_values(c.result.dof)?);
    }
    let scalar_rows: Vec<(String, Vec<String>)> = vec![
        ("J-statistic".into(), cols.iter().map(|c| c.result.j_stat.to_string()).collect()),
        ("dof".into(), cols.iter().map(|c| c.result.dof.to_string()).collect()),
        ("p-value".into(), cols.iter().map(|c| c.result.j_pvalue.to_string()).collect()),
        ("conditions".into(), cols.iter().map(|c| c.result.n_conditions.to_string()).collect()),
        ("observations".into(), cols.iter().map(|c| c.result.n_obs.to_string()).collect()),
        ("hac_lags".into(), cols.iter().map(|c| c.result.weighting.hac_lags.to_string()).collect()),
    ]
    .into_iter()
    .chain(SIGNIFICANCE_LEVELS.iter().enumerate().map(|(i, a)| {
        (format!("critical {a}"), crit.iter().map(|c| c[i].to_string()).collect())
    }))
    .collect();
    for (name, vals) in scalar_rows {
        let mut rec = vec![name];
        for v in vals {
            rec.extend([v, String::new(), String::new()]);
        }
        out.write_record(&rec).map_err(csv_err)?;
    }
    out.flush()?;
    Ok(())
}

/// One tested series of the unit-root table.
#[derive(Debug, Clone, Copy)]
pub struct AdfRow<'a> {
    pub variable: &'a str,
    pub result: &'a AdfResult,
}

pub fn adf_text(rows: &[AdfRow]) -> String {
    let w = rows.iter().map(|r| r.variable.len()).max().unwrap_or(0).max(8);
    let mut s = String::from("Augmented Dickey-Fuller tests\n\n");
    let _ = writeln!(
        s,
        "{:<w$}  {:<26}{:>11}{:>10}{:>11}{:>10}{:>6}{:>6}",
        "Variable", "Specification", "rho", "p(rho)", "ADF", "p(ADF)", "lags", "n"
    );
    for r in rows {
        let a = r.result;
        let _ = writeln!(
            s,
            "{:<w$}  {:<26}{:>11.4}{:>10.3}{:>11.3}{:>10.3}{:>6}{:>6}",
            r.variable,
            a.spec.to_string(),
            a.rho,
            a.rho_pvalue,
            a.adf_stat,
            a.p_value,
            a.lags,
            a.n_obs
        );
    }
    s.push_str("\np(rho) is the OLS t-test p-value of rho and is not valid under the unit-root null.\n");
    s
}

/// Columns `variable,spec,rho,rho_pvalue,adf_stat,adf_pvalue`.
pub fn write_adf_csv<W: Write>(w: W, rows: &[AdfRow]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["variable", "spec", "rho", "rho_pvalue", "adf_stat", "adf_pvalue"])
        .map_err(csv_err)?;
    for r in rows {
        let a = r.result;
        out.write_record([
            r.variable.to_string(),
            a.spec.to_string(),
            a.rho.to_string(),
            a.rho_pvalue.to_string(),
            a.adf_stat.to_string(),
            a.p_value.to_string(),
        ])
        .map_err(csv_err)?;
    }
    out.flush()?;
    Ok(())
}

/// Parameter recovery and J-test size over a set of replications.
#[derive(Debug, Clone, PartialEq)]
pub struct MonteCarloSummary {
    pub truth: [f64; N_PARAMS],
    /// Replications that produced an estimate.
    pub replications: usize,
    /// Replications that failed with an error.
    pub failures: usize,
    /// Share of estimates within [`COVERAGE_SE`] standard errors of truth.
    pub coverage: [f64; N_PARAMS],
    pub median: [f64; N_PARAMS],
    pub dof: usize,
    pub j_critical: f64,
    pub j_rejection_rate: f64,
    pub mean_j: f64,
    pub not_converged: usize,
}

fn median(v: &mut [f64]) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Summarizes replications estimated on data generated at `truth`. The J
/// test is evaluated at the 5% level.
pub fn summarize_monte_carlo(truth: &ModelParams, results: &[GmmResult], failures: usize) -> Result<MonteCarloSummary> {
    let Some(first) = results.first() else {
        return Err(Error::InvalidParameter("no successful replications to summarize".into()));
    };
    if results.iter().any(|r| r.dof != first.dof) {
        return Err(Error::InvalidParameter("replications use different moment systems".into()));
    }
    let n = results.len() as f64;
    let th = truth.to_array();
    let dof = first.dof;
    let j_critical = if dof == 0 { f64::INFINITY } else { chi2_quantile(0.95, dof)? };
    let mut coverage = [0.0; N_PARAMS];
    let mut med = [0.0; N_PARAMS];
    for k in 0..N_PARAMS {
        let hits = results
            .iter()
            .filter(|r| (r.theta_hat.to_array()[k] - th[k]).abs() <= COVERAGE_SE * r.std_errors[k])
            .count();
        coverage[k] = hits as f64 / n;
        let mut v: Vec<f64> = results.iter().map(|r| r.theta_hat.to_array()[k]).collect();
        med[k] = median(&mut v);
    }
    Ok(MonteCarloSummary {
        truth: th,
        replications: results.len(),
        failures,
        coverage,
        median: med,
        dof,
        j_critical,
        j_rejection_rate: results.iter().filter(|r| r.j_stat > j_critical).count() as f64 / n,
        mean_j: results.iter().map(|r| r.j_stat).sum::<f64>() / n,
        not_converged: results.iter().filter(|r| !r.converged).count(),
    })
}

pub fn monte_carlo_text(s: &MonteCarloSummary) -> String {
    let mut out = String::from("Monte Carlo parameter recovery\n\n");
    let _ = writeln!(
        out,
        "Replications: {} ({} failed, {} not converged)\n",
        s.replications, s.failures, s.not_converged
    );
    let _ = writeln!(
        out,
        "{:<10}{:>12}{:>12}{:>12}{:>12}",
        "Parameter", "Truth", "Median", "Rel. error", "Coverage"
    );
    for (k, name) in PARAM_NAMES.iter().enumerate() {
        let _ = writeln!(
            out,
            "{name:<10}{:>12.5}{:>12.5}{:>12.4}{:>12.3}",
            s.truth[k],
            s.median[k],
            (s.median[k] - s.truth[k]) / s.truth[k],
            s.coverage[k]
        );
    }
    let _ = writeln!(
        out,
        "\nCoverage counts estimates within {COVERAGE_SE} standard errors of truth."
    );
    let _ = writeln!(
        out,
        "J-test: dof {}, 5% critical value {:.3}, rejection rate {:.3}, mean J {:.3}",
        s.dof, s.j_critical, s.j_rejection_rate, s.mean_j
    );
    out
}

/// Columns `parameter,truth,median,coverage`, then the J-test rows.
pub fn write_monte_carlo_csv<W: Write>(w: W, s: &MonteCarloSummary) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["parameter", "truth", "median", "coverage"]).map_err(csv_err)?;
    for (k, name) in PARAM_NAMES.iter().enumerate() {
        out.write_record([
            name.to_string(),
            s.truth[k].to_string(),
            s.median[k].to_string(),
            s.coverage[k].to_string(),
        ])
        .map_err(csv_err)?;
    }
    for (name, v) in [
        ("replications", s.replications.to_string()),
        ("failures", s.failures.to_string()),
        ("not_converged", s.not_converged.to_string()),
        ("dof", s.dof.to_string()),
        ("j_critical_0.05", s.j_critical.to_string()),
        ("j_rejection_rate", s.j_rejection_rate.to_string()),
        ("mean_j", s.mean_j.to_string()),
    ] {
        out.write_record([name.to_string(), String::new(), v, String::new()])
            .map_err(csv_err)?;
    }
    out.flush()?;
    Ok(())
}

/// Parameters, reduced-form coefficients and steady state, rates in percent.
pub fn model_text(p: &ModelParams) -> String {
    let rf = rf_coefficients(p);
    let ss = steady_state(p);
    let mut s = String::from("Model\n\n");
    for (name, v) in PARAM_NAMES.iter().zip(p.to_array()) {
        let _ = writeln!(s, "{name:<28}{v:>12.6}");
    }
    let _ = writeln!(s, "{:<28}{:>12.4}", "target (% per year)", 100.0 * p.pi_bar);
    s.push_str("\nReduced form for inflation\n");
    for (name, v) in [
        ("lagged inflation", rf.on_lag_inflation),
        ("expected depreciation", rf.on_exp_depreciation),
        ("target", rf.on_target),
        ("demand shock", rf.on_demand_shock),
        ("supply shock", rf.on_supply_shock),
    ] {
        let _ = writeln!(s, "{name:<28}{v:>12.6}");
    }
    let _ = writeln!(s, "{:<28}{:>12}", "stable", if rf.is_stable() { "yes" } else { "no" });
    s.push_str("\nSteady state (% per year)\n");
    for (name, v) in [
        ("inflation", ss.inflation),
        ("nominal rate", ss.nominal_rate),
        ("real rate", ss.real_rate),
    ] {
        let _ = writeln!(s, "{name:<28}{:>12.4}", 100.0 * v);
    }
    let _ = writeln!(s, "{:<28}{:>12.4}", "gap", ss.gap);
    s
}
