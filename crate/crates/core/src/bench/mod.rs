//! Benchmark harness: scenario files and generation, the seeded campaign
//! runner with SR/CT/PT metrics, the independent solution validator, plot
//! emission and table rendering.

pub mod campaign;
pub mod plot;
pub mod report;
pub mod scenario;
pub mod solution;
pub mod validate;

pub use campaign::{
    aggregate, mean_stderr, run_campaign, run_trial, Aggregate, MeanStderr, PlannerKind,
    ResultsRecord, RunConfig, TrialRecord, Variant, WORKERS_ENV,
};
pub use plot::{emit_plot, render_svg};
pub use report::{
    render_ablation_table, render_results_table, run_skip_ablation, AblationTable,
};
pub use scenario::{generate_scenario, Recipe, ScenarioAgent, ScenarioFile, ScenarioTemplate};
pub use solution::{SolutionFile, SolutionMetrics};
pub use validate::{validate_solution, ValidationReport, Violation};
