//! Experiment configuration: a single JSON file.
//!
//! [`validate_config`] parses the whole file, fills defaults and reports every
//! problem it finds at once, each anchored to the line of the offending key.

use std::fmt;

use robust_lfd::model::{Family, NominalModel};
use robust_lfd::quadrature::{Quadrature, Rule};
use robust_lfd::sequential::{Method, Radii, TestFamily};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    LfdPlot,
    LlrRatio,
    LimitCurves,
    RateCurves,
    FssSweep,
    SprtScan,
}

impl Experiment {
    pub const ALL: [Experiment; 6] = [
        Experiment::LfdPlot,
        Experiment::LlrRatio,
        Experiment::LimitCurves,
        Experiment::RateCurves,
        Experiment::FssSweep,
        Experiment::SprtScan,
    ];

    pub fn id(self) -> &'static str {
        match self {
            Experiment::LfdPlot => "lfd-plot",
            Experiment::LlrRatio => "llr-ratio",
            Experiment::LimitCurves => "limit-curves",
            Experiment::RateCurves => "rate-curves",
            Experiment::FssSweep => "fss-sweep",
            Experiment::SprtScan => "sprt-scan",
        }
    }

    pub fn from_id(id: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|e| e.id() == id)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QuadratureConfig {
    pub rule: Rule,
    pub panels: usize,
    pub order: usize,
    pub abs_tol: f64,
    pub rel_tol: f64,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        let q = Quadrature::default();
        Self { rule: q.rule(), panels: q.panels(), order: q.order(), abs_tol: q.abs_tol(), rel_tol: q.rel_tol() }
    }
}

impl QuadratureConfig {
    pub fn build(&self) -> robust_lfd::Result<Quadrature> {
        Quadrature::new(self.rule, self.panels, self.order, self.abs_tol, self.rel_tol)
    }
}

/// Settings of `lfd-plot` and `llr-ratio`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LfdOptions {
    /// Rows of `lfd.csv` and `llr.csv`, spread evenly over the support.
    pub points: usize,
    /// Test whose ratio `llr-ratio` compares with the nominal one.
    pub test: TestFamily,
}

impl Default for LfdOptions {
    fn default() -> Self {
        Self { points: 1001, test: TestFamily::M }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LimitOptions {
    pub points: usize,
}

impl Default for LimitOptions {
    fn default() -> Self {
        Self { points: 201 }
    }
}

/// Observation models for rate curves: `n` nominal, `m`, `h`, `a`, `c` the
/// least favorable pairs of those tests, `c*` the tilted pair contaminated.
pub const OBSERVATION_TAGS: [&str; 6] = ["n", "m", "h", "a", "c", "c*"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RateOptions {
    pub points: usize,
    pub test: TestFamily,
    pub observations: Vec<String>,
}

impl Default for RateOptions {
    fn default() -> Self {
        Self { points: 41, test: TestFamily::C, observations: OBSERVATION_TAGS.map(String::from).to_vec() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FssOptions {
    /// Sample size of the test.
    pub n: usize,
    pub runs: u64,
    /// Radii to sweep; empty means `points` values spread over the feasible range.
    pub eps: Vec<f64>,
    pub points: usize,
}

impl Default for FssOptions {
    fn default() -> Self {
        Self { n: 1, runs: 100_000, eps: Vec::new(), points: 10 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SprtOptions {
    pub test: TestFamily,
    pub lo_min: f64,
    pub hi_max: f64,
    /// Threshold values per axis.
    pub count: usize,
    pub method: Method,
    pub mc_runs: u64,
    pub grid_step: f64,
    pub max_n: usize,
}

impl Default for SprtOptions {
    fn default() -> Self {
        Self {
            test: TestFamily::M,
            lo_min: -6.0,
            hi_max: 6.0,
            count: 10,
            method: Method::Exact,
            mc_runs: 100_000,
            grid_step: 0.005,
            max_n: 10_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub nominals: [Family; 2],
    pub eps: Radii,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub experiment: Option<Experiment>,
    pub output_dir: String,
    pub seed: u64,
    pub quadrature: QuadratureConfig,
    pub lfd: LfdOptions,
    pub limits: LimitOptions,
    pub rates: RateOptions,
    pub fss: FssOptions,
    pub sprt: SprtOptions,
}

impl ExperimentConfig {
    /// Pretty JSON with every default filled in.
    pub fn echo(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("config serializes");
        s.push('\n');
        s
    }

    pub fn model(&self) -> robust_lfd::Result<NominalModel> {
        NominalModel::from_families(self.nominals[0].clone(), self.nominals[1].clone())
    }
}

/// One problem in a configuration file.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub line: Option<usize>,
    pub path: String,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(l) => write!(f, "line {l}: ")?,
            None => write!(f, "config: ")?,
        }
        if self.path.is_empty() {
            write!(f, "{}", self.message)
        } else {
            write!(f, "{}: {}", self.path, self.message)
        }
    }
}

const TOP_KEYS: [&str; 11] =
    ["nominals", "eps", "experiment", "output_dir", "seed", "quadrature", "lfd", "limits", "rates", "fss", "sprt"];

struct Collector<'a> {
    raw: &'a str,
    errors: Vec<ConfigError>,
}

impl Collector<'_> {
    fn push(&mut self, path: &str, message: impl Into<String>) {
        let line = key_line(self.raw, path);
        self.errors.push(ConfigError { line, path: path.to_string(), message: message.into() });
    }

    fn field<T: DeserializeOwned + Default>(&mut self, obj: &Map<String, Value>, key: &str) -> T {
        match obj.get(key) {
            None => T::default(),
            Some(v) => match T::deserialize(v) {
                Ok(t) => t,
                Err(e) => {
                    self.push(key, e.to_string());
                    T::default()
                }
            },
        }
    }

    fn range(&mut self, path: &str, value: f64, lo: f64, hi: f64, hi_open: bool) {
        let ok = value >= lo && if hi_open { value < hi } else { value <= hi };
        if !ok {
            let close = if hi_open { ")" } else { "]" };
            self.push(path, format!("{value} outside [{lo}, {hi}{close}"));
        }
    }

    fn at_least(&mut self, path: &str, value: u64, min: u64) {
        if value < min {
            self.push(path, format!("must be at least {min}, got {value}"));
        }
    }
}

/// Line of the key at the end of a dotted path such as `eps.eps0`, found by
/// following the path segments through the raw text.
fn key_line(raw: &str, path: &str) -> Option<usize> {
    let mut at = 0;
    for seg in path.split('.') {
        let seg = seg.split('[').next().unwrap_or(seg);
        let pat = format!("\"{seg}\"");
        let mut from = at;
        loop {
            let i = raw[from..].find(&pat)? + from;
            let after = raw[i + pat.len()..].trim_start();
            if after.starts_with(':') {
                at = i;
                break;
            }
            from = i + pat.len();
        }
    }
    Some(raw[..at].matches('\n').count() + 1)
}

/// Parses and checks a configuration file.
pub fn validate_config(raw: &str) -> Result<ExperimentConfig, Vec<ConfigError>> {
    let text = if raw.trim().is_empty() { "{}" } else { raw };
    let value: Value = match serde_json::from_str(text) {
        Ok(v) => v,
        Err(e) => {
            return Err(vec![ConfigError { line: Some(e.line()), path: String::new(), message: e.to_string() }]);
        }
    };
    let mut c = Collector { raw, errors: Vec::new() };
    let Value::Object(obj) = value else {
        c.push("", "top level must be a JSON object");
        return Err(c.errors);
    };
    for key in obj.keys() {
        if !TOP_KEYS.contains(&key.as_str()) {
            c.push(key, "unknown field");
        }
    }

    let nominals = match obj.get("nominals") {
        None => {
            c.push("", "nominals required");
            None
        }
        Some(v) => match <[Family; 2]>::deserialize(v) {
            Ok(n) => Some(n),
            Err(e) => {
                c.push("nominals", format!("expected two family descriptors: {e}"));
                None
            }
        },
    };
    if let Some(n) = &nominals {
        if n.iter().any(|f| matches!(f, Family::Custom { .. })) {
            c.push("nominals", "custom families have no closed form and cannot be configured");
        } else if let Err(e) = NominalModel::from_families(n[0].clone(), n[1].clone()) {
            c.push("nominals", e.to_string());
        }
    }

    let eps: Radii = c.field(&obj, "eps");
    for (k, v) in [("eps0", eps.eps0), ("eps1", eps.eps1), ("eps0_c", eps.eps0_c), ("eps1_c", eps.eps1_c)] {
        c.range(&format!("eps.{k}"), v, 0.0, 1.0, true);
    }

    let experiment = match obj.get("experiment") {
        None | Some(Value::Null) => None,
        Some(Value::String(s)) => match Experiment::from_id(s) {
            Some(e) => Some(e),
            None => {
                let known: Vec<&str> = Experiment::ALL.iter().map(|e| e.id()).collect();
                c.push("experiment", format!("unknown experiment {s:?}; expected one of {}", known.join(", ")));
                None
            }
        },
        Some(_) => {
            c.push("experiment", "expected a string");
            None
        }
    };

    let output_dir = match obj.get("output_dir") {
        None => "out".to_string(),
        Some(Value::String(s)) if !s.is_empty() => s.clone(),
        Some(_) => {
            c.push("output_dir", "expected a non-empty string");
            "out".to_string()
        }
    };
    let seed: u64 = c.field(&obj, "seed");

    let quadrature: QuadratureConfig = c.field(&obj, "quadrature");
    if let Err(e) = quadrature.build() {
        c.push("quadrature", e.to_string());
    }

    let lfd: LfdOptions = c.field(&obj, "lfd");
    c.at_least("lfd.points", lfd.points as u64, 2);
    let limits: LimitOptions = c.field(&obj, "limits");
    c.at_least("limits.points", limits.points as u64, 2);

    let rates: RateOptions = c.field(&obj, "rates");
    c.at_least("rates.points", rates.points as u64, 2);
    for tag in &rates.observations {
        if !OBSERVATION_TAGS.contains(&tag.as_str()) {
            c.push("rates.observations", format!("unknown observation model {tag:?}"));
        }
    }

    let fss: FssOptions = c.field(&obj, "fss");
    c.at_least("fss.n", fss.n as u64, 1);
    c.at_least("fss.runs", fss.runs, 1000);
    c.at_least("fss.points", fss.points as u64, 1);
    for (i, &e) in fss.eps.iter().enumerate() {
        if !(e > 0.0 && e < 1.0) {
            c.push("fss.eps", format!("entry {i} ({e}) outside (0, 1)"));
        }
    }

    let sprt: SprtOptions = c.field(&obj, "sprt");
    if !(sprt.lo_min < 0.0) {
        c.push("sprt.lo_min", format!("must be negative, got {}", sprt.lo_min));
    }
    if !(sprt.hi_max > 0.0) {
        c.push("sprt.hi_max", format!("must be positive, got {}", sprt.hi_max));
    }
    c.at_least("sprt.count", sprt.count as u64, 1);
    c.at_least("sprt.mc_runs", sprt.mc_runs, 1000);
    c.at_least("sprt.max_n", sprt.max_n as u64, 1);
    if !(sprt.grid_step > 0.0) {
        c.push("sprt.grid_step", format!("must be positive, got {}", sprt.grid_step));
    }

    if !c.errors.is_empty() {
        return Err(c.errors);
    }
    Ok(ExperimentConfig {
        nominals: nominals.expect("checked above"),
        eps,
        experiment,
        output_dir,
        seed,
        quadrature,
        lfd,
        limits,
        rates,
        fss,
        sprt,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn key_lines() {
        let raw = "{\n  \"eps\": {\n    \"eps1\": 0.1,\n    \"eps0\": 1.2\n  }\n}";
        assert_eq!(key_line(raw, "eps"), Some(2));
        assert_eq!(key_line(raw, "eps.eps0"), Some(4));
        assert_eq!(key_line(raw, "seed"), None);
    }

    #[test]
    fn errors_are_aggregated() {
        let raw = r#"{"eps": {"eps0": 1.2, "eps1": -0.1}, "bogus": 1, "sprt": {"count": 0}}"#;
        let errs = validate_config(raw).unwrap_err();
        let text: Vec<String> = errs.iter().map(|e| e.to_string()).collect();
        assert!(text.iter().any(|t| t.contains("nominals required")));
        assert!(text.iter().any(|t| t.contains("eps.eps0") && t.contains("outside")));
        assert!(text.iter().any(|t| t.contains("eps.eps1")));
        assert!(text.iter().any(|t| t.contains("bogus: unknown field")));
        assert!(text.iter().any(|t| t.contains("sprt.count")));
    }
}
