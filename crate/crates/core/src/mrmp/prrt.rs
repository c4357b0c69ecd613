//! Prioritized planning: agents are planned one after another in index
//! order, each treating the already-committed trajectories as time-indexed
//! moving obstacles with terminal hold.

use std::time::Instant;

use rand::Rng;

use crate::bundle::{EdgeBundle, KeyIndex};
use crate::error::{PlanFailure, SolveFailure};
use crate::geometry::{static_collides, DynamicObstacle};
use crate::planner::{PlanContext, PlannerConfig, SingleAgentPlanner, Tree};

use super::{ProblemInstance, Solution, SolveStats};

/// Plan all agents sequentially under the fixed index-order priority.
/// Any single-agent failure fails the whole attempt; there is no
/// priority reshuffling.
pub fn prrt_plan(
    instance: &ProblemInstance,
    bundle: Option<(&EdgeBundle, &KeyIndex)>,
    cfg: &PlannerConfig,
    rng: &mut impl Rng,
) -> Result<Solution, SolveFailure> {
    let deadline = Instant::now() + cfg.budget();
    let model = &instance.model;
    let mut committed: Vec<DynamicObstacle> = Vec::with_capacity(instance.agent_count());
    let mut trajectories = Vec::with_capacity(instance.agent_count());
    let mut stats = SolveStats::default();

    for (i, agent) in instance.agents.iter().enumerate() {
        if static_collides(&agent.footprint, &agent.start, &instance.workspace) {
            return Err(SolveFailure::InvalidStart { agent: i });
        }
        let ctx = PlanContext {
            model,
            footprint: &agent.footprint,
            workspace: &instance.workspace,
            dynamic_obstacles: &committed,
            constraints: &[],
        };
        let planner = SingleAgentPlanner {
            ctx,
            goal: &agent.goal,
            cfg,
            bundle,
        };
        let run = planner.run(Tree::with_root(agent.start), rng, deadline);
        stats.absorb(&run.stats);
        match run.result {
            Ok(traj) => {
                committed.push(DynamicObstacle::from_trajectory(agent.footprint, &traj));
                trajectories.push(traj);
            }
            Err(PlanFailure::Infeasible { .. }) => {
                return Err(SolveFailure::AgentInfeasible { agent: i })
            }
            Err(PlanFailure::InvalidStart) => {
                return Err(SolveFailure::InvalidStart { agent: i })
            }
        }
    }

    Ok(Solution {
        trajectories,
        stats,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::SystemId;
    use crate::geometry::agents_collide;
    use crate::mrmp::testutil::{crossing_uc_pair, easy_uc_pair};
    use crate::planner::plan;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn single_agent_reduces_to_plan() {
        let mut instance = easy_uc_pair();
        instance.agents.truncate(1);
        let cfg = PlannerConfig::for_system(SystemId::Unicycle);

        let sol = prrt_plan(&instance, None, &cfg, &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
        let direct = plan(
            &instance.model,
            &instance.workspace,
            &instance.agents[0].footprint,
            &instance.agents[0].start,
            &instance.agents[0].goal,
            &[],
            &[],
            None,
            &cfg,
            &mut ChaCha8Rng::seed_from_u64(5),
        )
        .unwrap();
        assert_eq!(sol.trajectories[0], direct);
    }

    #[test]
    fn later_agents_avoid_committed_paths() {
        let instance = crossing_uc_pair();
        let cfg = PlannerConfig::for_system(SystemId::Unicycle);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let sol = prrt_plan(&instance, None, &cfg, &mut rng).unwrap();
        assert_eq!(sol.trajectories.len(), 2);

        // No shared-time collision between the two, including the parked
        // tail of whichever finishes first.
        let flat: Vec<Vec<_>> = sol.trajectories.iter().map(|t| t.sample_states()).collect();
        let horizon = flat.iter().map(|f| f.len()).max().unwrap();
        for k in 0..horizon + 50 {
            let a = flat[0][k.min(flat[0].len() - 1)];
            let b = flat[1][k.min(flat[1].len() - 1)];
            assert!(
                !agents_collide(
                    &instance.agents[0].footprint,
                    &a,
                    &instance.agents[1].footprint,
                    &b
                ),
                "collision at step {k}"
            );
        }
    }

    #[test]
    fn failure_reports_agent_id() {
        let mut instance = easy_uc_pair();
        // Agent 1's goal inside a tiny workspace corner it cannot reach
        // within the iteration cap: shrink the budget instead by capping
        // iterations after blocking the goal with an obstacle.
        instance.workspace = crate::geometry::Workspace::new(
            crate::geometry::Aabb::new(vec![0.0, 0.0], vec![20.0, 20.0]),
            vec![crate::geometry::Aabb::new(vec![4.0, 16.0], vec![6.0, 18.0])],
        );
        instance.agents[1].goal = crate::geometry::GoalRegion::new(vec![5.0, 17.0], 0.3);
        let mut cfg = PlannerConfig::for_system(SystemId::Unicycle);
        cfg.max_iterations = 300;
        let got = prrt_plan(&instance, None, &cfg, &mut ChaCha8Rng::seed_from_u64(2));
        assert_eq!(got.unwrap_err(), SolveFailure::AgentInfeasible { agent: 1 });
    }
}
