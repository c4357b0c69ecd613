//! Multi-trial experiment runner: seeded trials, SR/CT/PT metrics and
//! results persistence.
//!
//! Computation time covers the solve call only; scenario loading, bundle
//! loading, retrieval-index construction, validation and serialization all
//! happen outside the measured window. Time and cost aggregates are
//! computed over successful trials only and reported as mean +- standard
//! error.

use std::fmt;
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bundle::{EdgeBundle, KeyIndex};
use crate::dynamics::SystemId;
use crate::error::SolveFailure;
use crate::mrmp::{crrt_plan, kcbs_plan, prrt_plan, ProblemInstance, Solution};
use crate::planner::{ExtendMode, PlannerConfig};

use super::validate::validate_solution;

/// Environment variable selecting the trial worker count (default 1).
pub const WORKERS_ENV: &str = "KITE_BENCH_WORKERS";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlannerKind {
    Crrt,
    Prrt,
    Kcbs,
}

impl PlannerKind {
    pub fn tag(&self) -> &'static str {
        match self {
            PlannerKind::Crrt => "crrt",
            PlannerKind::Prrt => "prrt",
            PlannerKind::Kcbs => "kcbs",
        }
    }

    pub fn from_tag(tag: &str) -> Option<PlannerKind> {
        match tag.to_ascii_lowercase().as_str() {
            "crrt" => Some(PlannerKind::Crrt),
            "prrt" => Some(PlannerKind::Prrt),
            "kcbs" => Some(PlannerKind::Kcbs),
            _ => None,
        }
    }
}

impl fmt::Display for PlannerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    Base,
    Kite,
}

impl Variant {
    pub fn tag(&self) -> &'static str {
        match self {
            Variant::Base => "base",
            Variant::Kite => "kite",
        }
    }

    pub fn from_tag(tag: &str) -> Option<Variant> {
        match tag.to_ascii_lowercase().as_str() {
            "base" => Some(Variant::Base),
            "kite" => Some(Variant::Kite),
            _ => None,
        }
    }

    pub fn extend_mode(&self) -> ExtendMode {
        match self {
            Variant::Base => ExtendMode::Rand,
            Variant::Kite => ExtendMode::Kite,
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

/// Full description of one campaign: planner, variant, seed list, budget
/// and every planner knob. Base and guided variants of a comparison must
/// share the seed list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub planner: PlannerKind,
    pub variant: Variant,
    pub seeds: Vec<u64>,
    pub budget_secs: f64,
    pub pruning: bool,
    pub planner_cfg: PlannerConfig,
}

impl RunConfig {
    pub fn new(
        planner: PlannerKind,
        variant: Variant,
        system: SystemId,
        seeds: Vec<u64>,
        budget_secs: f64,
    ) -> RunConfig {
        let mut cfg = PlannerConfig::for_system(system);
        cfg.extend = variant.extend_mode();
        cfg.budget_secs = budget_secs;
        RunConfig {
            planner,
            variant,
            seeds,
            budget_secs,
            pruning: false,
            planner_cfg: cfg,
        }
    }

    /// Effective planner configuration with variant and budget applied.
    pub fn effective_cfg(&self) -> PlannerConfig {
        let mut cfg = self.planner_cfg.clone();
        cfg.extend = self.variant.extend_mode();
        cfg.budget_secs = self.budget_secs;
        cfg
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub seed: u64,
    pub success: bool,
    /// Online planning time in seconds.
    pub ct_seconds: f64,
    /// Team path time (sum of agent durations), successful trials only.
    #[serde(skip_serializing_if = "Option::is_none")]
    #[serde(default)]
    pub pt_seconds: Option<f64>,
    pub iterations: u64,
    pub conflicts: u64,
    pub high_level_expansions: u64,
    /// Violations found by the independent validator (0 for a sound run).
    pub validation_violations: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    #[serde(default)]
    pub failure: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanStderr {
    pub mean: f64,
    pub stderr: f64,
    pub n: usize,
}

/// Sample mean and standard error; `n = 1` reports a zero standard error.
pub fn mean_stderr(xs: &[f64]) -> Option<MeanStderr> {
    if xs.is_empty() {
        return None;
    }
    let n = xs.len();
    let mean = xs.iter().sum::<f64>() / n as f64;
    let stderr = if n == 1 {
        0.0
    } else {
        let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1) as f64;
        (var / n as f64).sqrt()
    };
    Some(MeanStderr { mean, stderr, n })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub sr_percent: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    #[serde(default)]
    pub ct: Option<MeanStderr>,
    #[serde(skip_serializing_if = "Option::is_none")]
    #[serde(default)]
    pub pt: Option<MeanStderr>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultsRecord {
    pub format_version: u32,
    pub scenario: String,
    pub system: SystemId,
    pub planner: PlannerKind,
    pub variant: Variant,
    pub pruning: bool,
    pub trials: usize,
    pub seeds: Vec<u64>,
    pub budget_seconds: f64,
    pub config: PlannerConfig,
    pub aggregate: Aggregate,
    pub trial_records: Vec<TrialRecord>,
}

impl ResultsRecord {
    pub fn save(&self, dir: &Path, stem: &str) -> std::io::Result<()> {
        std::fs::create_dir_all(dir)?;
        let mut agg = serde_json::to_string_pretty(self).unwrap();
        agg.push('\n');
        std::fs::write(dir.join(format!("{stem}.json")), agg)?;
        let mut lines = String::new();
        for t in &self.trial_records {
            lines.push_str(&serde_json::to_string(t).unwrap());
            lines.push('\n');
        }
        std::fs::write(dir.join(format!("{stem}.trials.jsonl")), lines)?;
        Ok(())
    }
}

/// Solve one trial and return the outcome with its wall-clock time.
pub fn run_trial(
    instance: &ProblemInstance,
    rc: &RunConfig,
    cfg: &PlannerConfig,
    bundle: Option<(&EdgeBundle, &KeyIndex)>,
    seed: u64,
) -> (Result<Solution, SolveFailure>, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let t0 = Instant::now();
    let result = match rc.planner {
        PlannerKind::Crrt => crrt_plan(instance, bundle, cfg, &mut rng),
        PlannerKind::Prrt => prrt_plan(instance, bundle, cfg, &mut rng),
        PlannerKind::Kcbs => kcbs_plan(instance, bundle, cfg, rc.pruning, &mut rng),
    };
    (result, t0.elapsed().as_secs_f64())
}

fn worker_count() -> usize {
    std::env::var(WORKERS_ENV)
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .filter(|&n| n >= 1)
        .unwrap_or(1)
}

/// Run every seeded trial of a campaign and aggregate SR/CT/PT.
///
/// A bundle is required exactly for the guided variant; its retrieval
/// index is built once up front and shared read-only across trials.
/// Trials are independent and may execute on several worker threads
/// (`KITE_BENCH_WORKERS`); records are kept in seed-list order.
pub fn run_campaign(
    instance: &ProblemInstance,
    scenario_name: &str,
    rc: &RunConfig,
    bundle: Option<&EdgeBundle>,
) -> ResultsRecord {
    let cfg = rc.effective_cfg();
    let index = match rc.variant {
        Variant::Kite => {
            let bundle = bundle.expect("guided variant requires an edge bundle");
            bundle
                .ensure_system(&instance.model)
                .expect("bundle system mismatch");
            Some(KeyIndex::build(bundle, &cfg.key_weights))
        }
        Variant::Base => None,
    };
    let bundle_ref = index.as_ref().map(|ix| (bundle.unwrap(), ix));

    let records: Mutex<Vec<Option<TrialRecord>>> = Mutex::new(vec![None; rc.seeds.len()]);
    let next = AtomicUsize::new(0);
    let workers = worker_count().min(rc.seeds.len().max(1));

    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= rc.seeds.len() {
                    break;
                }
                let seed = rc.seeds[i];
                let (result, ct_seconds) = run_trial(instance, rc, &cfg, bundle_ref, seed);
                let record = match result {
                    Ok(sol) => {
                        let report = validate_solution(instance, &sol.trajectories);
                        TrialRecord {
                            seed,
                            success: true,
                            ct_seconds,
                            pt_seconds: Some(sol.team_path_secs(instance.model.dt)),
                            iterations: sol.stats.iterations,
                            conflicts: sol.stats.conflicts,
                            high_level_expansions: sol.stats.high_level_expansions,
                            validation_violations: report.violations.len(),
                            failure: None,
                        }
                    }
                    Err(e) => TrialRecord {
                        seed,
                        success: false,
                        ct_seconds,
                        pt_seconds: None,
                        iterations: 0,
                        conflicts: 0,
                        high_level_expansions: 0,
                        validation_violations: 0,
                        failure: Some(e.to_string()),
                    },
                };
                records.lock().unwrap()[i] = Some(record);
            });
        }
    });

    let trial_records: Vec<TrialRecord> = records
        .into_inner()
        .unwrap()
        .into_iter()
        .map(|r| r.expect("every trial produces a record"))
        .collect();

    ResultsRecord {
        format_version: 1,
        scenario: scenario_name.to_string(),
        system: instance.model.system,
        planner: rc.planner,
        variant: rc.variant,
        pruning: rc.pruning,
        trials: rc.seeds.len(),
        seeds: rc.seeds.clone(),
        budget_seconds: rc.budget_secs,
        config: cfg,
        aggregate: aggregate(&trial_records),
        trial_records,
    }
}

pub fn aggregate(records: &[TrialRecord]) -> Aggregate {
    let successes: Vec<&TrialRecord> = records.iter().filter(|r| r.success).collect();
    let sr_percent = if records.is_empty() {
        0.0
    } else {
        100.0 * successes.len() as f64 / records.len() as f64
    };
    let ct: Vec<f64> = successes.iter().map(|r| r.ct_seconds).collect();
    let pt: Vec<f64> = successes.iter().filter_map(|r| r.pt_seconds).collect();
    Aggregate {
        sr_percent,
        ct: mean_stderr(&ct),
        pt: mean_stderr(&pt),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mrmp::testutil::crossing_uc_pair;

    #[test]
    fn aggregates_follow_success_subset() {
        let mk = |seed, success, ct, pt: Option<f64>| TrialRecord {
            seed,
            success,
            ct_seconds: ct,
            pt_seconds: pt,
            iterations: 0,
            conflicts: 0,
            high_level_expansions: 0,
            validation_violations: 0,
            failure: None,
        };
        // All failures: SR 0, no CT/PT aggregates.
        let a = aggregate(&[mk(0, false, 1.0, None), mk(1, false, 2.0, None)]);
        assert_eq!(a.sr_percent, 0.0);
        assert!(a.ct.is_none() && a.pt.is_none());

        // Mixed: averages over successes only.
        let a = aggregate(&[
            mk(0, true, 1.0, Some(10.0)),
            mk(1, false, 9.0, None),
            mk(2, true, 3.0, Some(30.0)),
        ]);
        assert!((a.sr_percent - 66.666).abs() < 0.01);
        let ct = a.ct.unwrap();
        assert_eq!(ct.mean, 2.0);
        assert_eq!(ct.n, 2);
        // stderr = stdev / sqrt(n) = sqrt(2) / sqrt(2) = 1.
        assert!((ct.stderr - 1.0).abs() < 1e-12);

        // Single success: stderr reported as zero.
        let a = aggregate(&[mk(0, true, 5.0, Some(1.0))]);
        assert_eq!(a.ct.unwrap().stderr, 0.0);
    }

    #[test]
    fn campaign_is_reproducible_and_validated() {
        let instance = crossing_uc_pair();
        let rc = RunConfig::new(
            PlannerKind::Kcbs,
            Variant::Base,
            SystemId::Unicycle,
            (0..4).collect(),
            60.0,
        );
        let a = run_campaign(&instance, "crossing", &rc, None);
        let b = run_campaign(&instance, "crossing", &rc, None);
        assert_eq!(a.aggregate.sr_percent, 100.0);
        for (x, y) in a.trial_records.iter().zip(&b.trial_records) {
            assert_eq!(x.seed, y.seed);
            assert_eq!(x.success, y.success);
            assert_eq!(x.pt_seconds, y.pt_seconds);
            assert_eq!(x.validation_violations, 0);
            assert_eq!(x.iterations, y.iterations);
        }
        // PT recomputed from a fresh solve equals the recorded PT.
        let cfg = rc.effective_cfg();
        let (sol, _) = run_trial(&instance, &rc, &cfg, None, a.trial_records[2].seed);
        assert_eq!(
            sol.unwrap().team_path_secs(instance.model.dt),
            a.trial_records[2].pt_seconds.unwrap()
        );
    }

    #[test]
    fn results_roundtrip_on_disk() {
        let dir = tempfile::tempdir().unwrap();
        let instance = crossing_uc_pair();
        let rc = RunConfig::new(
            PlannerKind::Prrt,
            Variant::Base,
            SystemId::Unicycle,
            vec![0, 1],
            60.0,
        );
        let rec = run_campaign(&instance, "crossing", &rc, None);
        rec.save(dir.path(), "prrt-base").unwrap();
        let loaded: ResultsRecord = serde_json::from_str(
            &std::fs::read_to_string(dir.path().join("prrt-base.json")).unwrap(),
        )
        .unwrap();
        assert_eq!(rec, loaded);
        let lines = std::fs::read_to_string(dir.path().join("prrt-base.trials.jsonl")).unwrap();
        assert_eq!(lines.lines().count(), 2);
    }
}
