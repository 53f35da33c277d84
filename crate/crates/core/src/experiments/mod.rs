//! Named experiment recipes and their reports.
//!
//! A config is one JSON document naming the experiment, its parameters and a
//! seed. Running it yields a [`Report`]: the embedded config, the crate
//! version, one entry per assertion (measured value, bound, tolerance,
//! verdict) and a list of tables. [`render`] turns a report into file
//! contents without touching the clock or the file system, so two runs of
//! the same config compare byte for byte.

pub mod acceptance;
mod recipes;

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::io::Table;
use crate::tree_model::{build_profile, BuiltProfile, ProfileSpec, TargetFn};

pub use recipes::{
    ComponentParams, CorrelationParams, FlipParams, GadgetParams, LyonsParams, OneArmParams, OracleParams, RegimeParams,
};

/// Experiment names accepted in configs.
pub const EXPERIMENTS: [&str; 8] = [
    "lyons-ratio",
    "one-arm-scaling",
    "correlation-bound",
    "flip-identity",
    "component-transition",
    "regime-classify",
    "gadget-suite",
    "oracle-suite",
];

/// A profile recipe with a name used in tables and assertion labels.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NamedProfile {
    pub name: String,
    #[serde(flatten)]
    pub spec: ProfileSpec,
}

impl NamedProfile {
    pub fn new(name: impl Into<String>, spec: ProfileSpec) -> Self {
        Self { name: name.into(), spec }
    }

    pub fn log_power(alpha: f64, depth: usize) -> Self {
        Self::new(format!("alpha-{alpha}"), ProfileSpec::target(TargetFn::log_power(alpha), depth))
    }

    pub fn power(theta: f64, depth: usize) -> Self {
        Self::new(format!("theta-{theta}"), ProfileSpec::target(TargetFn::power(theta), depth))
    }

    pub fn homogeneous(degree: u32, p: f64, depth: usize) -> Self {
        Self::new(format!("homogeneous-{degree}-{p}"), ProfileSpec::homogeneous(degree, p, depth))
    }

    pub fn build(&self) -> Result<BuiltProfile> {
        build_profile(&self.spec)
            .map_err(|e| Error::InvalidArgument(format!("profile `{}` cannot be built: {e}", self.name)))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "experiment", rename_all = "kebab-case")]
pub enum Recipe {
    LyonsRatio(LyonsParams),
    OneArmScaling(OneArmParams),
    CorrelationBound(CorrelationParams),
    FlipIdentity(FlipParams),
    ComponentTransition(ComponentParams),
    RegimeClassify(RegimeParams),
    GadgetSuite(GadgetParams),
    OracleSuite(OracleParams),
}

impl Recipe {
    pub fn name(&self) -> &'static str {
        match self {
            Recipe::LyonsRatio(_) => "lyons-ratio",
            Recipe::OneArmScaling(_) => "one-arm-scaling",
            Recipe::CorrelationBound(_) => "correlation-bound",
            Recipe::FlipIdentity(_) => "flip-identity",
            Recipe::ComponentTransition(_) => "component-transition",
            Recipe::RegimeClassify(_) => "regime-classify",
            Recipe::GadgetSuite(_) => "gadget-suite",
            Recipe::OracleSuite(_) => "oracle-suite",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    #[serde(flatten)]
    pub recipe: Recipe,
    #[serde(default)]
    pub seed: u64,
    /// Where `percodyn run` writes the report when `--out` is not given.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out_dir: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn new(recipe: Recipe, seed: u64) -> Self {
        Self { recipe, seed, out_dir: None }
    }

    /// The acceptance-suite parameters of a named experiment.
    pub fn preset(name: &str) -> Result<Self> {
        let recipe = match name {
            "lyons-ratio" => Recipe::LyonsRatio(LyonsParams::default()),
            "one-arm-scaling" => Recipe::OneArmScaling(OneArmParams::default()),
            "correlation-bound" => Recipe::CorrelationBound(CorrelationParams::default()),
            "flip-identity" => Recipe::FlipIdentity(FlipParams::default()),
            "component-transition" => Recipe::ComponentTransition(ComponentParams::default()),
            "regime-classify" => Recipe::RegimeClassify(RegimeParams::default()),
            "gadget-suite" => Recipe::GadgetSuite(GadgetParams::default()),
            "oracle-suite" => Recipe::OracleSuite(OracleParams::default()),
            other => return Err(Error::UnknownExperiment(other.to_string())),
        };
        Ok(Self::new(recipe, 1))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let value: Value = serde_json::from_str(text)?;
        match value.get("experiment") {
            Some(Value::String(name)) if !EXPERIMENTS.contains(&name.as_str()) => {
                return Err(Error::UnknownExperiment(name.clone()))
            }
            None => return Err(Error::InvalidArgument("config has no `experiment` field".into())),
            _ => {}
        }
        let config: Self = serde_json::from_value(value)?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&fs::read_to_string(path)?)
    }

    pub fn name(&self) -> &'static str {
        self.recipe.name()
    }

    pub fn validate(&self) -> Result<()> {
        match &self.recipe {
            Recipe::LyonsRatio(p) => p.validate(),
            Recipe::OneArmScaling(p) => p.validate(),
            Recipe::CorrelationBound(p) => p.validate(),
            Recipe::FlipIdentity(p) => p.validate(),
            Recipe::ComponentTransition(p) => p.validate(),
            Recipe::RegimeClassify(p) => p.validate(),
            Recipe::GadgetSuite(p) => p.validate(),
            Recipe::OracleSuite(p) => p.validate(),
        }
    }
}

/// One embedded check.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Assertion {
    pub name: String,
    /// Acceptance criterion this check belongs to.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub criterion: Option<u8>,
    pub passed: bool,
    pub measured: f64,
    /// Human-readable form of the bound, e.g. `<= 20`.
    pub bound: String,
    pub tolerance: f64,
}

impl Assertion {
    pub fn new(
        name: impl Into<String>,
        criterion: Option<u8>,
        measured: f64,
        bound: impl Into<String>,
        tolerance: f64,
        passed: bool,
    ) -> Self {
        Self { name: name.into(), criterion, passed, measured, bound: bound.into(), tolerance }
    }

    /// `measured <= limit + tolerance`.
    pub fn at_most(name: impl Into<String>, criterion: Option<u8>, measured: f64, limit: f64, tolerance: f64) -> Self {
        let passed = measured <= limit + tolerance;
        Self::new(name, criterion, measured, format!("<= {limit}"), tolerance, passed)
    }

    /// `measured >= limit - tolerance`.
    pub fn at_least(name: impl Into<String>, criterion: Option<u8>, measured: f64, limit: f64, tolerance: f64) -> Self {
        let passed = measured >= limit - tolerance;
        Self::new(name, criterion, measured, format!(">= {limit}"), tolerance, passed)
    }

    /// `lo <= measured <= hi`.
    pub fn within(name: impl Into<String>, criterion: Option<u8>, measured: f64, lo: f64, hi: f64) -> Self {
        let passed = measured >= lo && measured <= hi;
        Self::new(name, criterion, measured, format!("in [{lo}, {hi}]"), 0.0, passed)
    }

    pub fn holds(name: impl Into<String>, criterion: Option<u8>, ok: bool, what: impl Into<String>) -> Self {
        Self::new(name, criterion, if ok { 1.0 } else { 0.0 }, what, 0.0, ok)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TableEntry {
    pub name: String,
    pub file: String,
    pub rows: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Report {
    pub experiment: String,
    pub version: String,
    pub config: ExperimentConfig,
    pub passed: bool,
    pub assertions: Vec<Assertion>,
    pub tables: Vec<TableEntry>,
    #[serde(skip)]
    pub table_data: Vec<Table>,
}

impl Report {
    pub fn failed(&self) -> impl Iterator<Item = &Assertion> {
        self.assertions.iter().filter(|a| !a.passed)
    }

    pub fn criterion(&self, id: u8) -> impl Iterator<Item = &Assertion> {
        self.assertions.iter().filter(move |a| a.criterion == Some(id))
    }
}

/// Run a config in memory.
pub fn execute(config: &ExperimentConfig) -> Result<Report> {
    config.validate()?;
    let seed = config.seed;
    let (assertions, tables) = match &config.recipe {
        Recipe::LyonsRatio(p) => recipes::lyons_ratio(p)?,
        Recipe::OneArmScaling(p) => recipes::one_arm_scaling(p)?,
        Recipe::CorrelationBound(p) => recipes::correlation_bound(p)?,
        Recipe::FlipIdentity(p) => recipes::flip_identity(p, seed)?,
        Recipe::ComponentTransition(p) => recipes::component_transition(p, seed)?,
        Recipe::RegimeClassify(p) => recipes::regime_classify(p)?,
        Recipe::GadgetSuite(p) => recipes::gadget_suite(p, seed)?,
        Recipe::OracleSuite(p) => recipes::oracle_suite(p, seed)?,
    };
    let name = config.name();
    let entries = tables
        .iter()
        .map(|t| TableEntry { name: t.name.clone(), file: table_file(name, &t.name), rows: t.rows.len() })
        .collect();
    Ok(Report {
        experiment: name.to_string(),
        version: crate::VERSION.to_string(),
        config: config.clone(),
        passed: assertions.iter().all(|a| a.passed),
        assertions,
        tables: entries,
        table_data: tables,
    })
}

fn table_file(experiment: &str, table: &str) -> String {
    format!("{experiment}-{table}.csv")
}

/// File names and contents of a report: `<experiment>.json` then one CSV per table.
pub fn render(report: &Report) -> Result<Vec<(String, String)>> {
    let mut json = serde_json::to_string_pretty(report)?;
    json.push('\n');
    let mut files = vec![(format!("{}.json", report.experiment), json)];
    for (entry, table) in report.tables.iter().zip(&report.table_data) {
        files.push((entry.file.clone(), table.to_csv()?));
    }
    Ok(files)
}

/// Run a config and write its report files into `out_dir` (created if needed).
pub fn run_experiment(config: &ExperimentConfig, out_dir: &Path) -> Result<Report> {
    let report = execute(config)?;
    write_report(&report, out_dir)?;
    Ok(report)
}

pub fn write_report(report: &Report, out_dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(out_dir)?;
    let mut written = Vec::new();
    for (name, contents) in render(report)? {
        let path = out_dir.join(name);
        fs::write(&path, contents)?;
        written.push(path);
    }
    Ok(written)
}
