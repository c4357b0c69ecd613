//! Human-readable tables over results records, and the skip-factor
//! ablation harness with its machine-readable table.

use serde::{Deserialize, Serialize};

use crate::bundle::EdgeBundle;
use crate::mrmp::ProblemInstance;
use crate::planner::SkipPolicy;

use super::campaign::{
    mean_stderr, run_campaign, MeanStderr, PlannerKind, ResultsRecord, RunConfig, Variant,
};

/// Format with three significant digits, the table convention.
pub fn fmt_sig(x: f64) -> String {
    if x == 0.0 {
        return "0.00".into();
    }
    let mag = x.abs().log10().floor() as i32;
    let decimals = (2 - mag).max(0) as usize;
    format!("{x:.decimals$}")
}

fn fmt_ms(ms: &Option<MeanStderr>) -> String {
    match ms {
        None => "-".into(),
        Some(m) => format!("{} ± {}", fmt_sig(m.mean), fmt_sig(m.stderr)),
    }
}

/// Render records in the SR | CT | PT layout, one row per planner/variant.
pub fn render_results_table(records: &[ResultsRecord]) -> String {
    let mut out = String::new();
    if let Some(first) = records.first() {
        out.push_str(&format!(
            "scenario: {} | trials: {} | budget: {} s\n",
            first.scenario, first.trials, first.budget_seconds
        ));
    }
    out.push_str(&format!(
        "{:<8} {:<8} {:<8} {:>7}  {:<20} {:<20}\n",
        "planner", "variant", "pruning", "SR (%)", "CT (s)", "PT (s)"
    ));
    for r in records {
        out.push_str(&format!(
            "{:<8} {:<8} {:<8} {:>7.1}  {:<20} {:<20}\n",
            r.planner.tag(),
            r.variant.tag(),
            if r.pruning { "on" } else { "off" },
            r.aggregate.sr_percent,
            fmt_ms(&r.aggregate.ct),
            fmt_ms(&r.aggregate.pt),
        ));
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationCell {
    /// Trials in the per-planner common-success subset.
    pub rounds: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    #[serde(default)]
    pub ct: Option<MeanStderr>,
    #[serde(skip_serializing_if = "Option::is_none")]
    #[serde(default)]
    pub pt: Option<MeanStderr>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationRow {
    pub skip_factor: u32,
    /// One cell per planner, parallel to `AblationTable::planners`.
    pub cells: Vec<AblationCell>,
}

/// Machine-readable skip-factor ablation table. Metrics are averaged, per
/// planner, over the seeds for which every tested skip factor succeeded.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationTable {
    pub parameter: String,
    pub scenario: String,
    pub variant: Variant,
    pub planners: Vec<PlannerKind>,
    pub seeds: Vec<u64>,
    pub budget_seconds: f64,
    pub rows: Vec<AblationRow>,
}

/// Run the guided variant at each fixed skip factor and assemble the table.
pub fn run_skip_ablation(
    instance: &ProblemInstance,
    scenario_name: &str,
    planners: &[PlannerKind],
    skip_factors: &[u32],
    seeds: &[u64],
    budget_secs: f64,
    bundle: &EdgeBundle,
) -> AblationTable {
    // records[planner][skip] -> per-seed results
    let mut per: Vec<Vec<ResultsRecord>> = Vec::with_capacity(planners.len());
    for &planner in planners {
        let mut runs = Vec::with_capacity(skip_factors.len());
        for &p in skip_factors {
            let mut rc = RunConfig::new(
                planner,
                Variant::Kite,
                instance.model.system,
                seeds.to_vec(),
                budget_secs,
            );
            rc.planner_cfg.skip = SkipPolicy::Fixed(p);
            runs.push(run_campaign(instance, scenario_name, &rc, Some(bundle)));
        }
        per.push(runs);
    }

    let rows = skip_factors
        .iter()
        .enumerate()
        .map(|(pi, &p)| {
            let cells = planners
                .iter()
                .enumerate()
                .map(|(qi, _)| {
                    // Seeds that succeeded under every tested skip factor.
                    let common: Vec<usize> = (0..seeds.len())
                        .filter(|&si| {
                            per[qi].iter().all(|run| run.trial_records[si].success)
                        })
                        .collect();
                    let ct: Vec<f64> = common
                        .iter()
                        .map(|&si| per[qi][pi].trial_records[si].ct_seconds)
                        .collect();
                    let pt: Vec<f64> = common
                        .iter()
                        .filter_map(|&si| per[qi][pi].trial_records[si].pt_seconds)
                        .collect();
                    AblationCell {
                        rounds: common.len(),
                        ct: mean_stderr(&ct),
                        pt: mean_stderr(&pt),
                    }
                })
                .collect();
            AblationRow {
                skip_factor: p,
                cells,
            }
        })
        .collect();

    AblationTable {
        parameter: "skip_factor".into(),
        scenario: scenario_name.to_string(),
        variant: Variant::Kite,
        planners: planners.to_vec(),
        seeds: seeds.to_vec(),
        budget_seconds: budget_secs,
        rows,
    }
}

pub fn render_ablation_table(table: &AblationTable) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "{} ablation | scenario: {} | variant: {}\n",
        table.parameter,
        table.scenario,
        table.variant.tag()
    ));
    out.push_str(&format!("{:<6}", "p"));
    for p in &table.planners {
        out.push_str(&format!(
            " | {:<6} {:<18} {:<18}",
            format!("{}", p),
            "CT (s)",
            "PT (s)"
        ));
    }
    out.push('\n');
    for row in &table.rows {
        out.push_str(&format!("{:<6}", row.skip_factor));
        for cell in &row.cells {
            out.push_str(&format!(
                " | n={:<4} {:<18} {:<18}",
                cell.rounds,
                fmt_ms(&cell.ct),
                fmt_ms(&cell.pt)
            ));
        }
        out.push('\n');
    }
    out
}
