//! Multi-robot coordination: centralized joint-state search, prioritized
//! sequential planning, and conflict-based search with optional low-level
//! tree reuse.

mod crrt;
mod kcbs;
mod prrt;

pub use crrt::crrt_plan;
pub use kcbs::{detect_first_conflict, kcbs_plan, prune_tree, Conflict};
pub use prrt::prrt_plan;

use serde::{Deserialize, Serialize};

use crate::dynamics::{StateVector, SystemModel, Trajectory};
use crate::geometry::{agents_collide, static_collides, Footprint, GoalRegion, Workspace};
use crate::planner::PlannerStats;

#[derive(Debug, Clone)]
pub struct AgentSpec {
    pub start: StateVector,
    pub goal: GoalRegion,
    pub footprint: Footprint,
}

/// A multi-robot planning problem: a shared model and workspace, plus
/// per-agent starts, goals and footprints.
#[derive(Debug, Clone)]
pub struct ProblemInstance {
    pub model: SystemModel,
    pub workspace: Workspace,
    pub agents: Vec<AgentSpec>,
}

impl ProblemInstance {
    pub fn agent_count(&self) -> usize {
        self.agents.len()
    }

    /// Starts must be statically valid and mutually collision-free.
    pub fn validate_starts(&self) -> Result<(), String> {
        for (i, a) in self.agents.iter().enumerate() {
            if static_collides(&a.footprint, &a.start, &self.workspace) {
                return Err(format!("agent {i} starts in collision"));
            }
        }
        for i in 0..self.agents.len() {
            for j in i + 1..self.agents.len() {
                let (a, b) = (&self.agents[i], &self.agents[j]);
                if agents_collide(&a.footprint, &a.start, &b.footprint, &b.start) {
                    return Err(format!("agents {i} and {j} start in collision"));
                }
            }
        }
        Ok(())
    }
}

/// Aggregate counters over one multi-robot solve.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct SolveStats {
    /// Low-level (or joint) planner iterations, summed.
    pub iterations: u64,
    /// Conflicts branched on (conflict-based search only).
    pub conflicts: u64,
    /// High-level nodes expanded (conflict-based search only).
    pub high_level_expansions: u64,
    pub planner: PlannerStats,
}

impl SolveStats {
    pub(crate) fn absorb(&mut self, stats: &PlannerStats) {
        self.iterations += stats.iterations;
        self.planner.iterations += stats.iterations;
        self.planner.extensions_accepted += stats.extensions_accepted;
        self.planner.kite_calls += stats.kite_calls;
        self.planner.eps_random += stats.eps_random;
        self.planner.empty_fallback += stats.empty_fallback;
        self.planner.exhausted_fallback += stats.exhausted_fallback;
    }
}

/// Per-agent trajectories plus solve statistics. The team path time is the
/// sum of the individual trajectory durations.
#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub trajectories: Vec<Trajectory>,
    pub stats: SolveStats,
}

impl Solution {
    pub fn team_path_steps(&self) -> u64 {
        self.trajectories.iter().map(|t| t.duration_steps()).sum()
    }

    pub fn team_path_secs(&self, dt: f64) -> f64 {
        self.team_path_steps() as f64 * dt
    }
}

#[cfg(test)]
pub(crate) mod testutil {
    use super::*;
    use crate::dynamics::SystemId;
    use crate::geometry::Aabb;

    /// Two unicycles far apart, each 2 m from its own goal.
    pub fn easy_uc_pair() -> ProblemInstance {
        let model = SystemModel::new(SystemId::Unicycle);
        let fp = model.footprint();
        let workspace = Workspace::new(Aabb::new(vec![0.0, 0.0], vec![20.0, 20.0]), vec![]);
        let agents = vec![
            AgentSpec {
                start: model.state(&[3.0, 3.0], &[0.0]),
                goal: GoalRegion::new(vec![5.0, 3.0], 0.5),
                footprint: fp,
            },
            AgentSpec {
                start: model.state(&[3.0, 17.0], &[0.0]),
                goal: GoalRegion::new(vec![5.0, 17.0], 0.5),
                footprint: fp,
            },
        ];
        ProblemInstance {
            model,
            workspace,
            agents,
        }
    }

    /// Two unicycles heading through the same crossing point.
    pub fn crossing_uc_pair() -> ProblemInstance {
        let model = SystemModel::new(SystemId::Unicycle);
        let fp = model.footprint();
        let workspace = Workspace::new(Aabb::new(vec![0.0, 0.0], vec![10.0, 10.0]), vec![]);
        let agents = vec![
            AgentSpec {
                start: model.state(&[2.0, 5.0], &[0.0]),
                goal: GoalRegion::new(vec![8.0, 5.0], 0.5),
                footprint: fp,
            },
            AgentSpec {
                start: model.state(&[5.0, 2.0], &[std::f64::consts::FRAC_PI_2]),
                goal: GoalRegion::new(vec![5.0, 8.0], 0.5),
                footprint: fp,
            },
        ];
        ProblemInstance {
            model,
            workspace,
            agents,
        }
    }
}
