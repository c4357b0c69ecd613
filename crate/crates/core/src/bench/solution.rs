//! Versioned JSON export of team solutions: per-agent control sequences
//! plus states sampled at the integration resolution, with enough metadata
//! (seed, config, metrics) to make every file self-describing.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dynamics::{ControlInput, StateVector, SystemId, SystemModel, Trajectory, TrajectorySegment};
use crate::error::ScenarioError;
use crate::planner::PlannerConfig;

use super::campaign::{PlannerKind, Variant};

pub const SOLUTION_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionMetrics {
    pub ct_seconds: f64,
    pub pt_seconds: f64,
    pub iterations: u64,
    pub conflicts: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionSegment {
    pub control: ControlInput,
    pub steps: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionSample {
    /// Time offset in seconds.
    pub t: f64,
    pub state: StateVector,
    /// Control active over `[t, t + dt)`; absent on the terminal sample.
    #[serde(skip_serializing_if = "Option::is_none")]
    #[serde(default)]
    pub control: Option<ControlInput>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionAgent {
    pub duration_seconds: f64,
    pub segments: Vec<SolutionSegment>,
    pub samples: Vec<SolutionSample>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionFile {
    pub format_version: u32,
    pub scenario: String,
    pub system: SystemId,
    pub seed: u64,
    pub planner: PlannerKind,
    pub variant: Variant,
    pub pruning: bool,
    pub config: PlannerConfig,
    pub metrics: SolutionMetrics,
    pub agents: Vec<SolutionAgent>,
}

impl SolutionFile {
    #[allow(clippy::too_many_arguments)]
    pub fn build(
        scenario: &str,
        system: SystemId,
        seed: u64,
        planner: PlannerKind,
        variant: Variant,
        pruning: bool,
        config: &PlannerConfig,
        metrics: SolutionMetrics,
        trajectories: &[Trajectory],
        dt: f64,
    ) -> SolutionFile {
        let agents = trajectories
            .iter()
            .map(|traj| {
                let samples = traj
                    .sample_states()
                    .into_iter()
                    .enumerate()
                    .map(|(k, state)| SolutionSample {
                        t: k as f64 * dt,
                        state,
                        control: traj.control_at_step(k as u64),
                    })
                    .collect();
                SolutionAgent {
                    duration_seconds: traj.duration_secs(dt),
                    segments: traj
                        .segments
                        .iter()
                        .map(|s| SolutionSegment {
                            control: s.control,
                            steps: s.steps,
                        })
                        .collect(),
                    samples,
                }
            })
            .collect();
        SolutionFile {
            format_version: SOLUTION_FORMAT_VERSION,
            scenario: scenario.to_string(),
            system,
            seed,
            planner,
            variant,
            pruning,
            config: config.clone(),
            metrics,
            agents,
        }
    }

    /// Rebuild in-memory trajectories from the stored segments and samples.
    pub fn to_trajectories(&self, model: &SystemModel) -> Result<Vec<Trajectory>, ScenarioError> {
        if model.system != self.system {
            return Err(ScenarioError::Invalid(format!(
                "solution is for {:?}, expected {:?}",
                self.system, model.system
            )));
        }
        let mut out = Vec::with_capacity(self.agents.len());
        for (i, agent) in self.agents.iter().enumerate() {
            let total: u64 = agent.segments.iter().map(|s| u64::from(s.steps)).sum();
            if agent.samples.len() as u64 != total + 1 {
                return Err(ScenarioError::Invalid(format!(
                    "agent {i}: {} samples for {total} steps",
                    agent.samples.len()
                )));
            }
            let start = agent.samples[0].state;
            let mut segments = Vec::with_capacity(agent.segments.len());
            let mut acc = 0usize;
            for seg in &agent.segments {
                let end = acc + seg.steps as usize;
                let states: Vec<StateVector> =
                    agent.samples[acc..=end].iter().map(|s| s.state).collect();
                segments.push(TrajectorySegment {
                    control: seg.control,
                    steps: seg.steps,
                    start_step: acc as u64,
                    states,
                });
                acc = end;
            }
            out.push(Trajectory::new(start, segments));
        }
        Ok(out)
    }

    pub fn save(&self, path: &Path) -> Result<(), ScenarioError> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        std::fs::write(path, text)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<SolutionFile, ScenarioError> {
        let text = std::fs::read_to_string(path)?;
        let file: SolutionFile = serde_json::from_str(&text)?;
        if file.format_version != SOLUTION_FORMAT_VERSION {
            return Err(ScenarioError::BadVersion(file.format_version));
        }
        Ok(file)
    }
}
