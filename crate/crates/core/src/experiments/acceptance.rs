//! The acceptance suite: every experiment at its preset parameters, mapped
//! onto the twelve numbered criteria.

use std::fmt;
use std::path::Path;
use std::time::{Duration, Instant};

use serde::Serialize;

use super::{execute, render, write_report, ExperimentConfig, Recipe, Report, EXPERIMENTS};
use crate::error::{Error, Result};

pub const CRITERIA: [(u8, &str); 12] = [
    (1, "oracle equivalence"),
    (2, "second-moment bracket"),
    (3, "exactly-one bound"),
    (4, "survival ratio"),
    (5, "one-arm scaling"),
    (6, "correlation constant"),
    (7, "flip identity"),
    (8, "stationarity"),
    (9, "component dichotomy"),
    (10, "flip proxy growth"),
    (11, "gadget trends"),
    (12, "determinism"),
];

/// Wall-clock limits: (criterion, experiment, limit).
const RUNTIME_LIMITS: [(u8, &str, Duration); 3] = [
    (1, "oracle-suite", Duration::from_secs(10)),
    (2, "lyons-ratio", Duration::from_secs(60)),
    (7, "flip-identity", Duration::from_secs(300)),
];

const MIN_ORACLE_TREES: usize = 20;

#[derive(Clone, Debug, Serialize)]
pub struct CriterionOutcome {
    pub id: u8,
    pub title: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl fmt::Display for CriterionOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let verdict = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "criterion {:>2} {:<24} {verdict}  {}", self.id, self.title, self.detail)
    }
}

pub struct TimedReport {
    pub report: Report,
    pub elapsed: Duration,
}

/// Run every preset, writing report files into `out_dir` when given.
pub fn run_presets(out_dir: Option<&Path>, mut progress: impl FnMut(&str, &TimedReport)) -> Result<Vec<TimedReport>> {
    let mut out = Vec::new();
    for name in EXPERIMENTS {
        let config = ExperimentConfig::preset(name)?;
        let start = Instant::now();
        let report = execute(&config)?;
        let timed = TimedReport { report, elapsed: start.elapsed() };
        if let Some(dir) = out_dir {
            write_report(&timed.report, dir)?;
        }
        progress(name, &timed);
        out.push(timed);
    }
    Ok(out)
}

fn criterion_from_reports(id: u8, title: &'static str, runs: &[TimedReport]) -> CriterionOutcome {
    let mut checked = 0;
    let mut failures = Vec::new();
    for run in runs {
        for a in run.report.criterion(id) {
            checked += 1;
            if !a.passed {
                failures.push(format!("{} = {:.6e} (want {})", a.name, a.measured, a.bound));
            }
        }
    }
    for (cid, name, limit) in RUNTIME_LIMITS {
        if cid != id {
            continue;
        }
        if let Some(run) = runs.iter().find(|r| r.report.experiment == name) {
            checked += 1;
            if run.elapsed >= limit {
                failures.push(format!("{name} took {:.1}s (limit {}s)", run.elapsed.as_secs_f64(), limit.as_secs()));
            }
        }
    }
    if id == 1 {
        if let Some(run) = runs.iter().find(|r| r.report.experiment == "oracle-suite") {
            if let Recipe::OracleSuite(p) = &run.report.config.recipe {
                checked += 1;
                if p.trees < MIN_ORACLE_TREES {
                    failures.push(format!("only {} trees (need {MIN_ORACLE_TREES})", p.trees));
                }
            }
        }
    }
    let passed = checked > 0 && failures.is_empty();
    let detail = if checked == 0 {
        "no checks ran".to_string()
    } else if failures.is_empty() {
        format!("{checked} checks")
    } else {
        format!("{} of {checked} checks failed: {}", failures.len(), failures.join("; "))
    };
    CriterionOutcome { id, title, passed, detail }
}

/// Criteria 1 to 11 from preset runs.
pub fn evaluate(runs: &[TimedReport]) -> Vec<CriterionOutcome> {
    CRITERIA[..11].iter().map(|&(id, title)| criterion_from_reports(id, title, runs)).collect()
}

/// Small configs of every experiment, for the determinism check.
pub fn reduced_configs() -> Result<Vec<ExperimentConfig>> {
    let mut out = Vec::new();
    for name in EXPERIMENTS {
        let mut cfg = ExperimentConfig::preset(name)?;
        cfg.seed = 11;
        match &mut cfg.recipe {
            Recipe::OracleSuite(p) => p.trees = 5,
            Recipe::LyonsRatio(p) => {
                p.max_n = 200;
                for prof in &mut p.profiles {
                    prof.spec.depth = 200;
                }
            }
            Recipe::OneArmScaling(p) => {
                p.profile.spec.depth = 20_000;
                p.levels = vec![100, 1_000];
            }
            Recipe::CorrelationBound(p) => {
                p.profile.spec.depth = 20_000;
                p.levels = vec![100];
            }
            Recipe::FlipIdentity(p) => p.replicas = 500,
            Recipe::ComponentTransition(p) => {
                p.depths = vec![6, 8];
                p.replicas = 200;
                p.exact_grid = vec![100, 1_000];
                for case in &mut p.cases {
                    case.exact.spec.depth = 2_000;
                }
            }
            Recipe::RegimeClassify(p) => {
                p.grid = vec![100, 1_000, 10_000];
                for case in &mut p.cases {
                    case.profile.spec.depth = 20_000;
                }
            }
            Recipe::GadgetSuite(p) => {
                p.js = vec![1, 2];
                p.radius = 36;
                p.multiplicity = Some(2);
                p.replicas = 200;
            }
        }
        out.push(cfg);
    }
    Ok(out)
}

fn render_with_threads(config: &ExperimentConfig, threads: usize) -> Result<Vec<(String, String)>> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?;
    pool.install(|| render(&execute(config)?))
}

/// Criterion 12: each reduced config rendered under a 1-thread and a
/// 4-thread pool must give identical bytes.
pub fn determinism_check() -> Result<CriterionOutcome> {
    let (id, title) = CRITERIA[11];
    let mut files = 0;
    let mut mismatches = Vec::new();
    for cfg in reduced_configs()? {
        let serial = render_with_threads(&cfg, 1)?;
        let parallel = render_with_threads(&cfg, 4)?;
        files += serial.len();
        if serial != parallel {
            let differing: Vec<&str> =
                serial.iter().zip(&parallel).filter(|(a, b)| a != b).map(|(a, _)| a.0.as_str()).collect();
            mismatches.push(format!(
                "{}: {}",
                cfg.name(),
                if differing.is_empty() { "file lists differ".to_string() } else { differing.join(", ") }
            ));
        }
    }
    let passed = mismatches.is_empty();
    let detail = if passed {
        format!("{} experiments, {files} files byte-identical across 1 and 4 threads", EXPERIMENTS.len())
    } else {
        format!("mismatched output: {}", mismatches.join("; "))
    };
    Ok(CriterionOutcome { id, title, passed, detail })
}

/// The full suite: preset runs, criteria 1 to 11, then the determinism check.
pub fn run_acceptance(
    out_dir: Option<&Path>,
    progress: impl FnMut(&str, &TimedReport),
) -> Result<Vec<CriterionOutcome>> {
    let runs = run_presets(out_dir, progress)?;
    let mut outcomes = evaluate(&runs);
    outcomes.push(determinism_check()?);
    Ok(outcomes)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reduced_configs_validate() {
        let cfgs = reduced_configs().unwrap();
        assert_eq!(cfgs.len(), EXPERIMENTS.len());
        for c in &cfgs {
            c.validate().unwrap();
        }
    }

    #[test]
    fn criteria_are_numbered_in_order() {
        for (i, (id, _)) in CRITERIA.iter().enumerate() {
            assert_eq!(*id as usize, i + 1);
        }
    }

    #[test]
    fn missing_runs_fail_their_criteria() {
        let outcomes = evaluate(&[]);
        assert_eq!(outcomes.len(), 11);
        assert!(outcomes.iter().all(|o| !o.passed));
    }

    #[test]
    fn oracle_criterion_from_a_small_run() {
        let cfg = ExperimentConfig::preset("oracle-suite").unwrap();
        let start = Instant::now();
        let report = execute(&cfg).unwrap();
        let runs = [TimedReport { report, elapsed: start.elapsed() }];
        let first = &evaluate(&runs)[0];
        assert!(first.passed, "{first}");
        assert!(first.to_string().starts_with("criterion  1"));
    }
}
