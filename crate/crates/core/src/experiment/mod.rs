//! Config-driven experiment runner.
//!
//! A run reads an [`ExperimentConfig`], validates every key the experiment
//! needs before computing anything, writes CSV and JSON data files to an
//! output directory and returns a [`RunManifest`]. Data files depend only on
//! the config, so re-running a manifest reproduces them byte for byte.

mod runners;

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Grid1D;
use crate::stochastic::McParams;

pub const MANIFEST_FILE: &str = "manifest.json";
pub const SUMMARY_FILE: &str = "summary.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Burgers,
    Nls,
    VortexDeterministic,
    VortexRandom,
    VortexInviscid,
    FeynmanKac,
    Bridge,
    Modes,
}

impl ExperimentKind {
    /// Parameters that must be present in `[parameters]`.
    pub fn required_parameters(self) -> &'static [&'static str] {
        match self {
            Self::Burgers => &["nu", "t_end"],
            Self::Nls => &["beta", "kappa", "t_end", "dt"],
            Self::VortexDeterministic => &["x0", "nu", "k0", "t_end"],
            Self::VortexRandom => &["x0", "nu", "k0", "t_end"],
            Self::VortexInviscid => &["x0", "k0", "t_end"],
            Self::FeynmanKac => &["nu", "k0", "x", "t"],
            Self::Bridge => &["nu", "x_start", "wall", "t"],
            Self::Modes => &["gamma", "alpha_t", "a0", "nu", "nu_b", "q_min", "q_max", "n_q"],
        }
    }

    fn needs_grid(self) -> bool {
        matches!(self, Self::Burgers | Self::Nls)
    }

    fn needs_mc(self) -> bool {
        matches!(
            self,
            Self::VortexDeterministic
                | Self::VortexRandom
                | Self::VortexInviscid
                | Self::FeynmanKac
                | Self::Bridge
        )
    }
}

/// Scalar, string or list parameter value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ParamValue {
    Number(f64),
    Text(String),
    List(Vec<f64>),
}

/// Uniform grid as written in a config. Periodic grids cover
/// `[x_min, x_max)` with `n_points` distinct nodes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub x_min: f64,
    pub x_max: f64,
    pub n_points: usize,
    #[serde(default)]
    pub periodic: bool,
}

impl GridSpec {
    pub fn build(&self) -> Result<Grid1D> {
        if self.periodic {
            Grid1D::periodic(self.x_min, self.x_max - self.x_min, self.n_points)
        } else {
            Grid1D::new(self.x_min, self.x_max, self.n_points)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mc: Option<McParams>,
    #[serde(default)]
    pub parameters: BTreeMap<String, ParamValue>,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.message().to_string()))
    }

    /// Load a TOML config, or the config echoed in a JSON run manifest.
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        if text.trim_start().starts_with('{') {
            let manifest: RunManifest = serde_json::from_str(&text)?;
            Ok(manifest.config)
        } else {
            Self::from_toml(&text)
        }
    }

    /// Check that every key the experiment reads is present and typed.
    pub fn validate(&self) -> Result<()> {
        let kind = self.experiment;
        if kind.needs_grid() {
            self.grid.ok_or_else(|| Error::MissingKey("grid".into()))?.build()?;
        }
        if kind.needs_mc() {
            self.mc.ok_or_else(|| Error::MissingKey("mc".into()))?;
        }
        for key in kind.required_parameters() {
            self.params().number(key)?;
        }
        runners::validate_extra(self)
    }

    pub(crate) fn params(&self) -> Params<'_> {
        Params(&self.parameters)
    }

    pub(crate) fn grid(&self) -> Result<Grid1D> {
        self.grid.ok_or_else(|| Error::MissingKey("grid".into()))?.build()
    }

    pub(crate) fn mc(&self) -> Result<McParams> {
        self.mc.ok_or_else(|| Error::MissingKey("mc".into()))
    }
}

pub(crate) struct Params<'a>(&'a BTreeMap<String, ParamValue>);

impl Params<'_> {
    pub(crate) fn has(&self, key: &str) -> bool {
        self.0.contains_key(key)
    }

    pub(crate) fn number(&self, key: &str) -> Result<f64> {
        match self.0.get(key) {
            None => Err(Error::MissingKey(key.into())),
            Some(ParamValue::Number(v)) => Ok(*v),
            Some(_) => Err(Error::invalid(key, "expected a number")),
        }
    }

    pub(crate) fn number_or(&self, key: &str, default: f64) -> Result<f64> {
        if self.has(key) {
            self.number(key)
        } else {
            Ok(default)
        }
    }

    pub(crate) fn count_or(&self, key: &str, default: usize) -> Result<usize> {
        let v = self.number_or(key, default as f64)?;
        if v >= 1.0 && v.fract() == 0.0 && v < 1e12 {
            Ok(v as usize)
        } else {
            Err(Error::invalid(key, format!("expected a positive integer, got {v}")))
        }
    }

    pub(crate) fn text_or<'b>(&'b self, key: &str, default: &'b str) -> Result<&'b str> {
        match self.0.get(key) {
            None => Ok(default),
            Some(ParamValue::Text(s)) => Ok(s),
            Some(_) => Err(Error::invalid(key, "expected a string")),
        }
    }
}

/// A summary number, with its standard error when it is a Monte Carlo
/// estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Observable {
    /// Non-finite values are written as `null` and read back as NaN.
    #[serde(deserialize_with = "nullable_f64")]
    pub value: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub std_error: Option<f64>,
}

fn nullable_f64<'de, D: serde::Deserializer<'de>>(d: D) -> std::result::Result<f64, D::Error> {
    Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::NAN))
}

impl Observable {
    pub fn exact(value: f64) -> Self {
        Self { value, std_error: None }
    }

    pub fn estimate(value: f64, std_error: f64) -> Self {
        Self { value, std_error: Some(std_error) }
    }
}

/// Everything a runner produces before it is written out.
#[derive(Debug, Default)]
pub(crate) struct RunOutput {
    pub tables: Vec<Table>,
    pub observables: BTreeMap<String, Observable>,
    pub details: BTreeMap<String, serde_json::Value>,
    pub warnings: Vec<String>,
}

#[derive(Debug)]
pub(crate) struct Table {
    pub file: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(file: &str, columns: &[&str]) -> Self {
        Self {
            file: file.into(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    fn render(&self) -> String {
        let mut out = self.columns.join(",");
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|v| format!("{v:.16e}")).collect();
            let _ = writeln!(out, "{}", cells.join(","));
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub toolkit: String,
    pub version: String,
    pub config: ExperimentConfig,
    /// Resolved inputs not spelled out in the config (strain model, grid).
    pub details: BTreeMap<String, serde_json::Value>,
    pub files: Vec<String>,
    pub observables: BTreeMap<String, Observable>,
    pub warnings: Vec<String>,
    pub wall_clock_seconds: f64,
}

impl RunManifest {
    pub fn load(path: &Path) -> Result<Self> {
        Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
    }
}

/// Validate, compute and write a run into `output_dir`.
pub fn run(config: &ExperimentConfig, output_dir: &Path) -> Result<RunManifest> {
    config.validate()?;
    fs::create_dir_all(output_dir)?;
    let start = Instant::now();
    let output = runners::dispatch(config)?;

    let mut files = Vec::new();
    for table in &output.tables {
        fs::write(output_dir.join(&table.file), table.render())?;
        files.push(table.file.clone());
    }
    let summary = serde_json::json!({
        "experiment": config.experiment,
        "observables": output.observables,
        "warnings": output.warnings,
    });
    fs::write(output_dir.join(SUMMARY_FILE), serde_json::to_string_pretty(&summary)? + "\n")?;
    files.push(SUMMARY_FILE.into());

    let manifest = RunManifest {
        toolkit: "greenpath".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        config: config.clone(),
        details: output.details,
        files,
        observables: output.observables,
        warnings: output.warnings,
        wall_clock_seconds: start.elapsed().as_secs_f64(),
    };
    fs::write(output_dir.join(MANIFEST_FILE), serde_json::to_string_pretty(&manifest)? + "\n")?;
    Ok(manifest)
}

/// Acceptance bands for [`compare`]. An observable passes if any band
/// holds: `|a - b| <= abs + rel·max(|a|, |b|)`, or, when both sides carry
/// standard errors, `|a - b| <= se·sqrt(se_a² + se_b²)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerance {
    pub abs: f64,
    pub rel: f64,
    pub se: f64,
}

impl Default for Tolerance {
    fn default() -> Self {
        Self { abs: 0.0, rel: 0.0, se: 3.0 }
    }
}

impl std::str::FromStr for Tolerance {
    type Err = Error;

    /// Parse `abs=1e-8,rel=1e-6,se=3`; omitted fields keep their defaults.
    fn from_str(s: &str) -> Result<Self> {
        let mut tol = Tolerance::default();
        for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (key, value) = part
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("tolerance term `{part}` is not key=value")))?;
            let v: f64 = value
                .trim()
                .parse()
                .map_err(|_| Error::Config(format!("tolerance `{key}` is not a number: `{value}`")))?;
            if !(v >= 0.0) {
                return Err(Error::Config(format!("tolerance `{key}` must be nonnegative")));
            }
            match key.trim() {
                "abs" => tol.abs = v,
                "rel" => tol.rel = v,
                "se" => tol.se = v,
                other => return Err(Error::Config(format!("unknown tolerance key `{other}`"))),
            }
        }
        Ok(tol)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub observable: String,
    pub a: f64,
    pub b: f64,
    pub difference: f64,
    /// `a / b`, e.g. how much a defect shrank between runs.
    pub ratio: f64,
    /// Difference in combined standard errors, when both are estimates.
    pub z: Option<f64>,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub tolerance: Tolerance,
    pub rows: Vec<ComparisonRow>,
    pub only_in_a: Vec<String>,
    pub only_in_b: Vec<String>,
    pub all_pass: bool,
}

/// Compare the observables two manifests share.
pub fn compare(a: &RunManifest, b: &RunManifest, tol: &Tolerance) -> Result<ComparisonReport> {
    let shared: Vec<&String> = a.observables.keys().filter(|k| b.observables.contains_key(*k)).collect();
    if shared.is_empty() {
        return Err(Error::Config("the manifests share no observables".into()));
    }
    let rows: Vec<ComparisonRow> = shared
        .into_iter()
        .map(|name| {
            let (oa, ob) = (a.observables[name], b.observables[name]);
            let difference = (oa.value - ob.value).abs();
            let z = match (oa.std_error, ob.std_error) {
                (Some(sa), Some(sb)) => {
                    let combined = (sa * sa + sb * sb).sqrt();
                    Some(if combined > 0.0 {
                        difference / combined
                    } else if difference == 0.0 {
                        0.0
                    } else {
                        f64::INFINITY
                    })
                }
                _ => None,
            };
            let band = tol.abs + tol.rel * oa.value.abs().max(ob.value.abs());
            let pass = difference <= band || z.is_some_and(|z| z <= tol.se);
            ComparisonRow {
                observable: name.clone(),
                a: oa.value,
                b: ob.value,
                difference,
                ratio: oa.value / ob.value,
                z,
                pass,
            }
        })
        .collect();
    let only = |x: &RunManifest, y: &RunManifest| -> Vec<String> {
        x.observables.keys().filter(|k| !y.observables.contains_key(*k)).cloned().collect()
    };
    Ok(ComparisonReport {
        tolerance: *tol,
        all_pass: rows.iter().all(|r| r.pass),
        rows,
        only_in_a: only(a, b),
        only_in_b: only(b, a),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_tolerance_specs() {
        let t: Tolerance = "abs=1e-8, rel=0.01".parse().unwrap();
        assert_eq!((t.abs, t.rel, t.se), (1e-8, 0.01, 3.0));
        assert!("abs".parse::<Tolerance>().is_err());
        assert!("tight=1".parse::<Tolerance>().is_err());
        assert!("rel=-1".parse::<Tolerance>().is_err());
    }

    #[test]
    fn missing_parameter_is_named() {
        let cfg = ExperimentConfig::from_toml(
            "experiment = \"burgers\"\n[grid]\nx_min = -1.0\nx_max = 1.0\nn_points = 64\nperiodic = true\n[parameters]\nt_end = 0.1\n",
        )
        .unwrap();
        match cfg.validate() {
            Err(Error::MissingKey(k)) => assert_eq!(k, "nu"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unknown_experiment_is_a_config_error() {
        assert!(matches!(ExperimentConfig::from_toml("experiment = \"tubes\"\n"), Err(Error::Config(_))));
    }

    #[test]
    fn table_renders_seventeen_digits() {
        let mut t = Table::new("x.csv", &["a", "b"]);
        t.rows.push(vec![0.1, -2.0]);
        assert_eq!(t.render(), "a,b\n1.0000000000000001e-1,-2.0000000000000000e0\n");
    }

    fn manifest(obs: &[(&str, Observable)]) -> RunManifest {
        RunManifest {
            toolkit: "greenpath".into(),
            version: "0".into(),
            config: ExperimentConfig::from_toml("experiment = \"modes\"\n").unwrap(),
            details: BTreeMap::new(),
            files: vec![],
            observables: obs.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
            warnings: vec![],
            wall_clock_seconds: 0.0,
        }
    }

    #[test]
    fn compare_bands() {
        let a = manifest(&[("err", Observable::exact(2e-3)), ("m", Observable::estimate(1.0, 0.01)), ("x", Observable::exact(1.0))]);
        let b = manifest(&[("err", Observable::exact(1e-3)), ("m", Observable::estimate(1.03, 0.01)), ("y", Observable::exact(1.0))]);
        let r = compare(&a, &b, &Tolerance::default()).unwrap();
        let err = r.rows.iter().find(|r| r.observable == "err").unwrap();
        assert_eq!(err.ratio, 2.0);
        assert!(!err.pass);
        assert!(r.rows.iter().find(|r| r.observable == "m").unwrap().pass);
        assert_eq!((r.only_in_a.clone(), r.only_in_b.clone()), (vec!["x".to_string()], vec!["y".to_string()]));
        let loose = compare(&a, &b, &"abs=1e-2".parse().unwrap()).unwrap();
        assert!(loose.all_pass);
        let disjoint = manifest(&[("z", Observable::exact(0.0))]);
        assert!(compare(&a, &disjoint, &Tolerance::default()).is_err());
    }
}
