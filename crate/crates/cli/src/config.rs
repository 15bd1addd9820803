//! Flat `key = value` run configuration with a fixed key set.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use crate::error::CliError;

pub const SCHEMA_VERSION: u32 = 1;

/// Every accepted key with its default.
pub const KEYS: &[(&str, &str)] = &[
    ("schema_version", "1"),
    ("seed", "0"),
    ("out_dir", "out"),
    ("threads", "0"),
    ("grid.n", "32"),
    ("sqg.kappa", "1"),
    ("sqg.gamma", "1.5"),
    ("sqg.eps", "0"),
    // builtin:lowmode, builtin:zero or an SQGF file
    ("forcing.source", "builtin:lowmode"),
    ("forcing.amplitude", "0.1"),
    // 0 keeps the forcing steady
    ("forcing.period", "0"),
    ("time.dt", "0.01"),
    ("time.scheme", "ifrk4"),
    ("time.t_span", "1"),
    ("time.spinup", "0"),
    ("time.sample_every", "10"),
    // zero, random:<seed> or an SQGF file
    ("init.source", "random:0"),
    ("init.norm", "1"),
    ("init.band", "4"),
    ("norms.sigma", "0.8"),
    ("norms.p", "8"),
    ("nudge.mu", "64"),
    ("nudge.m", "4"),
    ("nudge.operator", "lp"),
    ("nudge.cutoff", "8"),
    ("nudge.sigma", "0.8"),
    ("nudge.p", "8"),
    ("nudge.ref", ""),
    ("nudge.ref_spinup", "10"),
    ("nudge.w0", "zero"),
    ("nudge.window", "1"),
    ("nudge.threshold", "1e-6"),
    ("nudge.c0", "1"),
    ("nudge.c0p", "1"),
    ("nudge.c0pp", "1"),
    ("detform.ref_steady", ""),
    ("detform.v0", "perturbed:0.01:3"),
    ("detform.tau_span", "0"),
    ("detform.dtau", "0"),
    ("detform.rhs_power", "2"),
    ("detform.tol_forget", "1e-8"),
    ("detform.window", "0.2"),
    ("detform.samples", "5"),
    ("detform.tol", "0"),
    ("detform.max_increases", "10"),
    ("steady.tol", "1e-10"),
    ("steady.t_max", "100"),
    ("periodic.tol", "1e-6"),
    ("periodic.max_iter", "200"),
    ("diagnose.run", ""),
    ("diagnose.check", "all"),
    ("diagnose.M", "0"),
    ("diagnose.lambda", "0"),
    ("diagnose.delta_inf", "1"),
    ("diagnose.n_max", "12"),
    ("diagnose.pairs", "20"),
    ("bounds.c", "1"),
    ("lemma.a", "1"),
    ("lemma.b", "1"),
    ("lemma.c", "1"),
    ("lemma.d", "2"),
    ("lemma.v0", "1"),
    ("lemma.v1", "1"),
    ("lemma.c0", "1"),
    ("lemma.M", "256"),
    ("lemma.n_max", "6"),
    ("lemma.P", "2"),
    ("lemma.Q", "1.5"),
    ("lp.ensemble", "20"),
    ("lp.beta", "0"),
    ("lp.p", "2"),
    ("lp.q", "2"),
    ("lp.band", "0"),
    ("sweep.command", "nudge"),
    ("sweep.axes", ""),
    ("sweep.cap", "10000"),
];

#[derive(Clone, Debug, PartialEq)]
pub struct Config {
    values: BTreeMap<String, String>,
}

impl Default for Config {
    fn default() -> Self {
        Self { values: KEYS.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect() }
    }
}

fn known(key: &str) -> bool {
    KEYS.iter().any(|(k, _)| *k == key)
}

impl Config {
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), CliError> {
        if !known(key) {
            return Err(CliError::config(key, "unknown key"));
        }
        self.values.insert(key.to_string(), value.trim().to_string());
        Ok(())
    }

    /// Applies `key = value` lines; `#` starts a comment.
    pub fn merge_text(&mut self, text: &str) -> Result<(), CliError> {
        for (no, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| CliError::config(line, format!("line {} is not `key = value`", no + 1)))?;
            self.set(k.trim(), v)?;
        }
        self.check_schema()
    }

    pub fn merge_file(&mut self, path: &Path) -> Result<(), CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::config("--config", format!("{}: {e}", path.display())))?;
        self.merge_text(&text)
    }

    fn check_schema(&self) -> Result<(), CliError> {
        let v: u32 = self.get("schema_version")?;
        if v > SCHEMA_VERSION {
            return Err(CliError::config("schema_version", format!("{v} is newer than supported version {SCHEMA_VERSION}")));
        }
        Ok(())
    }

    pub fn raw(&self, key: &str) -> &str {
        self.values.get(key).map(String::as_str).unwrap_or_else(|| panic!("key {key} missing from the table"))
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<T, CliError> {
        let raw = self.raw(key);
        raw.parse().map_err(|_| CliError::config(key, format!("cannot parse {raw:?}")))
    }

    /// Resolved configuration in the input format, keys sorted.
    pub fn echo(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.values {
            let _ = writeln!(out, "{k} = {v}");
        }
        out
    }
}
