//! `key = value` files with `[section]` headers.
//!
//! `#` and `;` start comments, blank lines are ignored, keys outside any
//! section are an error. Every accepted key is listed in [`KEYS`]; anything
//! else is rejected so typos do not pass silently.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::fail::Failure;

/// `(section, key, default, description)`.
pub const KEYS: &[(&str, &str, &str, &str)] = &[
    ("output", "dir", "out", "output directory (overridden by --out), relative to the config file"),
    ("data", "cpi", "", "CPI level series CSV (date,value)"),
    ("data", "trm", "", "exchange-rate level series CSV, pesos per dollar, end of month"),
    ("data", "ise_old", "", "older-base activity index CSV, spliced onto ise_new when given"),
    ("data", "ise_new", "", "activity index CSV"),
    ("data", "policy_rate", "", "nominal policy rate CSV"),
    ("data", "target", "", "inflation target CSV"),
    ("data", "units", "percent", "unit of the rate inputs: percent or decimal"),
    ("transform", "inflation_lag", "12", "months in the year-over-year inflation and depreciation rates"),
    ("transform", "expectation_window", "6", "months averaged into expected depreciation (excluding the current month)"),
    ("transform", "real_rate", "ex_post", "real rate convention: ex_post (i - pi) or ex_ante (i - expected pi, uses [model] gamma)"),
    ("gap", "methods", "hp, trend", "gap variants: hp (log index minus HP trend), trend ((index - trend) / trend, fitted in levels), log_trend (log index minus trend fitted on logs)"),
    ("gap", "lambda", "14400", "HP smoothing parameter"),
    ("gap", "degree", "1", "polynomial degree of the deterministic trend (1 or 2)"),
    ("adf", "spec", "constant", "deterministic terms: constant, trend or none"),
    ("adf", "lags", "aic", "augmentation lags: aic or a fixed count"),
    ("model", "preset", "hp", "parameter preset: hp or trend (the two published estimates)"),
    ("model", "b", "", "override for b"),
    ("model", "gamma", "", "override for gamma"),
    ("model", "r", "", "override for r (decimal per year)"),
    ("model", "c1", "", "override for c1"),
    ("model", "c2", "", "override for c2"),
    ("model", "v", "", "override for v"),
    ("model", "phi", "", "override for phi"),
    ("model", "target", "3", "inflation target pi_bar in percent per year"),
    ("simulate", "months", "120", "months simulated"),
    ("simulate", "start", "2000-01", "first simulated month"),
    ("simulate", "initial_inflation", "", "inflation in the month before the start, percent (default: target)"),
    ("simulate", "exp_depreciation", "", "constant expected depreciation, percent (default: target)"),
    ("simulate", "sigma_a", "0", "demand shock std (decimal); 0 with sigma_o = 0 gives a deterministic path"),
    ("simulate", "sigma_o", "0", "supply shock std (decimal)"),
    ("simulate", "seed", "0", "shock seed (overridden by --seed)"),
    ("irf", "shocks", "demand, supply", "shocks to trace: demand and/or supply"),
    ("irf", "size", "1", "impulse size in percentage points"),
    ("irf", "horizon", "36", "months traced"),
    ("estimate", "datasets", "", "comma-separated label=path pairs; default: the ingest outputs for each [gap] method"),
    ("estimate", "moments", "default23", "default23 or a comma-separated list of conditions such as e1*1, e3*inflation(-1), e1*e3"),
    ("estimate", "bandwidth", "auto", "Bartlett lags of the HAC weighting: auto or a count"),
    ("estimate", "steps", "2", "GMM steps (at least 2)"),
    ("estimate", "standardize", "true", "rescale instruments in the identity-weighted first step"),
    ("estimate", "max_evaluations", "20000", "objective evaluations per Nelder-Mead run"),
    ("estimate", "restarts", "2", "Nelder-Mead restarts"),
    ("synth", "design", "empirical", "empirical (estimation-ready) or structural (the five equations)"),
    ("synth", "months", "600", "months generated"),
    ("synth", "burn_in", "200", "months discarded before the sample"),
    ("synth", "start", "2000-01", "first generated month"),
    ("synth", "seed", "1", "RNG seed, ChaCha8 (overridden by --seed)"),
    ("synth", "rho_d", "0.9", "AR(1) persistence of expected depreciation"),
    ("synth", "sigma_d", "0.01", "innovation std of expected depreciation (decimal)"),
    ("synth", "rho_gap", "0.8", "empirical design: gap persistence"),
    ("synth", "sigma_gap", "0.006", "empirical design: gap innovation std"),
    ("synth", "sigma_pi", "0.001", "empirical design: reduced-form inflation noise std"),
    ("synth", "sigma_r", "0.002", "empirical design: real-rate noise std"),
    ("synth", "sigma_i", "0.002", "policy-rate noise std (both designs)"),
    ("synth", "sigma_a", "0.01", "structural design: demand shock std"),
    ("synth", "sigma_o", "0.005", "structural design: supply shock std"),
    ("synth", "real_rate", "ex_ante", "structural design: real rate convention, ex_post or ex_ante"),
    ("montecarlo", "replications", "100", "replications; replication k uses seed + k"),
    ("montecarlo", "seed", "1000", "base seed (overridden by --seed)"),
];

/// Help text listing every key.
pub fn keys_help() -> String {
    let mut s = String::from("Configuration keys (section, key, default):\n");
    let mut section = "";
    for (sec, key, default, doc) in KEYS {
        if *sec != section {
            let _ = writeln!(s, "\n  [{sec}]");
            section = sec;
        }
        let d = if default.is_empty() { String::new() } else { format!(" (default {default})") };
        let _ = writeln!(s, "    {key}{d}\n        {doc}");
    }
    s
}

#[derive(Debug, Clone)]
pub struct Config {
    values: BTreeMap<(String, String), (String, usize)>,
    /// Directory of the config file; relative paths resolve against it.
    base: PathBuf,
    pub text: String,
    pub path: PathBuf,
}

impl Config {
    pub fn load(path: &Path) -> Result<Self, Failure> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Failure::config(format!("cannot read {}: {e}", path.display())))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        let mut cfg = Self::parse(&text, base)?;
        cfg.path = path.to_path_buf();
        Ok(cfg)
    }

    pub fn parse(text: &str, base: PathBuf) -> Result<Self, Failure> {
        let mut values = BTreeMap::new();
        let mut section: Option<String> = None;
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = match raw.find(['#', ';']) {
                Some(p) => &raw[..p],
                None => raw,
            }
            .trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('[') {
                let name = rest
                    .strip_suffix(']')
                    .ok_or_else(|| Failure::config(format!("line {line_no}: unterminated section header")))?
                    .trim();
                if !KEYS.iter().any(|(s, ..)| *s == name) {
                    return Err(Failure::config(format!("line {line_no}: unknown section [{name}]")));
                }
                section = Some(name.to_string());
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Failure::config(format!("line {line_no}: expected `key = value`")))?;
            let (k, v) = (k.trim(), v.trim());
            let sec = section
                .as_deref()
                .ok_or_else(|| Failure::config(format!("line {line_no}: key `{k}` outside any section")))?;
            if !KEYS.iter().any(|(s, key, ..)| *s == sec && *key == k) {
                return Err(Failure::config(format!("line {line_no}: unknown key `{k}` in [{sec}]")));
            }
            if values
                .insert((sec.to_string(), k.to_string()), (v.to_string(), line_no))
                .is_some()
            {
                return Err(Failure::config(format!("line {line_no}: duplicate key `{k}` in [{sec}]")));
            }
        }
        Ok(Self {
            values,
            base,
            text: text.to_string(),
            path: PathBuf::new(),
        })
    }

    fn default_of(section: &str, key: &str) -> &'static str {
        KEYS.iter()
            .find(|(s, k, ..)| *s == section && *k == key)
            .map(|(_, _, d, _)| *d)
            .unwrap_or_else(|| panic!("undeclared config key [{section}] {key}"))
    }

    /// The configured value, or the declared default. Empty means unset.
    pub fn raw(&self, section: &str, key: &str) -> Option<&str> {
        let v = match self.values.get(&(section.to_string(), key.to_string())) {
            Some((v, _)) => v.as_str(),
            None => Self::default_of(section, key),
        };
        (!v.is_empty()).then_some(v)
    }

    fn location(&self, section: &str, key: &str) -> String {
        match self.values.get(&(section.to_string(), key.to_string())) {
            Some((_, line)) => format!("line {line}: [{section}] {key}"),
            None => format!("[{section}] {key}"),
        }
    }

    pub fn get<T: FromStr>(&self, section: &str, key: &str) -> Result<Option<T>, Failure>
    where
        T::Err: std::fmt::Display,
    {
        self.raw(section, key)
            .map(|v| {
                v.parse::<T>()
                    .map_err(|e| Failure::config(format!("{}: cannot parse `{v}`: {e}", self.location(section, key))))
            })
            .transpose()
    }

    pub fn require<T: FromStr>(&self, section: &str, key: &str) -> Result<T, Failure>
    where
        T::Err: std::fmt::Display,
    {
        self.get(section, key)?
            .ok_or_else(|| Failure::config(format!("[{section}] {key} is required")))
    }

    pub fn bool(&self, section: &str, key: &str) -> Result<bool, Failure> {
        match self.raw(section, key) {
            Some("true" | "yes" | "1") => Ok(true),
            Some("false" | "no" | "0") => Ok(false),
            other => Err(Failure::config(format!(
                "{}: expected true or false, got `{}`",
                self.location(section, key),
                other.unwrap_or("")
            ))),
        }
    }

    /// Comma-separated items, trimmed, empties dropped.
    pub fn list(&self, section: &str, key: &str) -> Vec<String> {
        self.raw(section, key)
            .map(|v| {
                v.split(',')
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .map(String::from)
                    .collect()
            })
            .unwrap_or_default()
    }

    /// Resolves a path relative to the config file.
    pub fn path_of(&self, value: &str) -> PathBuf {
        let p = Path::new(value);
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base.join(p)
        }
    }

    /// An existing input file named by `[section] key`.
    pub fn input_file(&self, section: &str, key: &str) -> Result<Option<PathBuf>, Failure> {
        let Some(v) = self.raw(section, key) else {
            return Ok(None);
        };
        let p = self.path_of(v);
        if !p.is_file() {
            return Err(Failure::config(format!(
                "{}: file {} does not exist",
                self.location(section, key),
                p.display()
            )));
        }
        Ok(Some(p))
    }

    pub fn fail(&self, section: &str, key: &str, msg: impl std::fmt::Display) -> Failure {
        Failure::config(format!("{}: {msg}", self.location(section, key)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(s: &str) -> Result<Config, Failure> {
        Config::parse(s, PathBuf::from("/cfg"))
    }

    #[test]
    fn sections_comments_and_defaults() {
        let c = parse("# top\n[gap]\nlambda = 1600 ; monthly\n\n[synth]\nseed=7\n").unwrap();
        assert_eq!(c.get::<f64>("gap", "lambda").unwrap(), Some(1600.0));
        assert_eq!(c.get::<u64>("synth", "seed").unwrap(), Some(7));
        assert_eq!(c.get::<usize>("gap", "degree").unwrap(), Some(1));
        assert_eq!(c.raw("data", "cpi"), None);
        assert_eq!(c.list("gap", "methods"), vec!["hp", "trend"]);
        assert_eq!(c.path_of("x.csv"), PathBuf::from("/cfg/x.csv"));
        assert_eq!(c.path_of("/abs.csv"), PathBuf::from("/abs.csv"));
    }

    #[test]
    fn errors_name_the_line() {
        let e = parse("[gap]\nlambda = 1\nlambda = 2\n").unwrap_err();
        assert!(e.message.contains("line 3") && e.message.contains("duplicate"));
        assert!(parse("lambda = 1\n").unwrap_err().message.contains("outside any section"));
        assert!(parse("[nope]\n").unwrap_err().message.contains("unknown section"));
        assert!(parse("[gap]\nlamda = 1\n").unwrap_err().message.contains("unknown key `lamda`"));
        assert!(parse("[gap]\nlambda\n").unwrap_err().message.contains("line 2"));
        let c = parse("[gap]\n\nlambda = abc\n").unwrap();
        assert!(c.get::<f64>("gap", "lambda").unwrap_err().message.contains("line 3"));
        let c = parse("[estimate]\nstandardize = maybe\n").unwrap();
        assert!(c.bool("estimate", "standardize").is_err());
    }

    #[test]
    fn help_lists_every_key() {
        let h = keys_help();
        for (_, key, ..) in KEYS {
            assert!(h.contains(key));
        }
    }
}
