//! Centralized planning: a single RRT over the joint state space.
//!
//! Each joint expansion asks the per-agent extension proposer (random or
//! bundle-guided) for a control-duration pair per agent, then synchronizes
//! the rollout by truncating every proposal to the shortest duration and
//! accepting only if the truncated segments are individually valid and the
//! team stays pairwise collision-free at every shared step.

use std::time::Instant;

use rand::Rng;

use crate::bundle::{EdgeBundle, KeyIndex};
use crate::dynamics::{StateVector, Trajectory, TrajectorySegment};
use crate::error::SolveFailure;
use crate::geometry::{agents_collide, static_collides};
use crate::planner::{
    dist, kite_extend, rand_extend, sample_target_biased, ExtendMode, PlanContext,
    PlannerConfig, PlannerStats,
};

use super::{ProblemInstance, Solution, SolveStats};

struct JointNode {
    states: Vec<StateVector>,
    parent: Option<u32>,
    /// Per-agent segments, all truncated to the same step count.
    incoming: Vec<TrajectorySegment>,
    arrival_step: u64,
    /// Per-agent node-local candidate edge sets.
    candidates: Vec<Option<Vec<u32>>>,
}

/// Plan the whole team in the joint state space.
pub fn crrt_plan(
    instance: &ProblemInstance,
    bundle: Option<(&EdgeBundle, &KeyIndex)>,
    cfg: &PlannerConfig,
    rng: &mut impl Rng,
) -> Result<Solution, SolveFailure> {
    let deadline = Instant::now() + cfg.budget();
    let model = &instance.model;
    let n = instance.agent_count();
    let mut stats = SolveStats::default();
    let mut pstats = PlannerStats::default();

    for (i, agent) in instance.agents.iter().enumerate() {
        if static_collides(&agent.footprint, &agent.start, &instance.workspace) {
            return Err(SolveFailure::InvalidStart { agent: i });
        }
    }

    let contexts: Vec<PlanContext> = instance
        .agents
        .iter()
        .map(|a| PlanContext {
            model,
            footprint: &a.footprint,
            workspace: &instance.workspace,
            dynamic_obstacles: &[],
            constraints: &[],
        })
        .collect();

    let mut tree = vec![JointNode {
        states: instance.agents.iter().map(|a| a.start).collect(),
        parent: None,
        incoming: Vec::new(),
        arrival_step: 0,
        candidates: vec![None; n],
    }];

    let all_in_goal = |states: &[StateVector]| {
        states
            .iter()
            .zip(&instance.agents)
            .all(|(s, a)| a.goal.contains(s))
    };

    if all_in_goal(&tree[0].states) {
        let trajectories = tree[0]
            .states
            .iter()
            .map(|s| Trajectory::new(*s, Vec::new()))
            .collect();
        return Ok(Solution {
            trajectories,
            stats,
        });
    }

    let mut iterations = 0u64;
    'outer: while iterations < cfg.max_iterations {
        if Instant::now() >= deadline {
            break;
        }
        iterations += 1;

        // One bias draw for the whole joint sample, then per-agent targets.
        let biased = cfg.goal_bias > 0.0 && rng.gen_bool(cfg.goal_bias);
        let targets: Vec<StateVector> = instance
            .agents
            .iter()
            .enumerate()
            .map(|(i, a)| sample_target_biased(&contexts[i], &a.goal, biased, rng))
            .collect();

        // Nearest joint node by the sum of squared per-agent distances.
        let mut best = 0usize;
        let mut best_d = f64::INFINITY;
        for (id, node) in tree.iter().enumerate() {
            let d: f64 = node
                .states
                .iter()
                .zip(&targets)
                .map(|(s, t)| {
                    let d = dist(model, s, t, &cfg.dist_weights);
                    d * d
                })
                .sum();
            if d < best_d {
                best_d = d;
                best = id;
            }
        }

        // Per-agent proposals from the selected node.
        let arrival = tree[best].arrival_step;
        let mut proposals: Vec<TrajectorySegment> = Vec::with_capacity(n);
        for i in 0..n {
            let node = &mut tree[best];
            let state = node.states[i];
            let seg = match cfg.extend {
                ExtendMode::Rand => rand_extend(
                    &contexts[i],
                    &state,
                    arrival,
                    &targets[i],
                    cfg.rollouts,
                    cfg.t_max_steps,
                    &cfg.dist_weights,
                    rng,
                ),
                ExtendMode::Kite => {
                    let (bundle, index) = bundle.expect("bundle required for kite extension");
                    kite_extend(
                        &contexts[i],
                        &state,
                        arrival,
                        &mut node.candidates[i],
                        &targets[i],
                        bundle,
                        index,
                        cfg,
                        &mut pstats,
                        rng,
                    )
                }
            };
            match seg {
                Some(seg) => proposals.push(seg),
                None => continue 'outer,
            }
        }

        // Synchronize on the shortest proposal.
        let t_min = proposals.iter().map(|s| s.steps).min().unwrap();
        let truncated: Vec<TrajectorySegment> = proposals
            .iter()
            .map(|s| {
                if s.steps == t_min {
                    s.clone()
                } else {
                    s.truncated(t_min)
                }
            })
            .collect();

        // Pairwise check at every shared step.
        for k in 0..=t_min as usize {
            for i in 0..n {
                for j in i + 1..n {
                    if agents_collide(
                        &instance.agents[i].footprint,
                        &truncated[i].states[k],
                        &instance.agents[j].footprint,
                        &truncated[j].states[k],
                    ) {
                        continue 'outer;
                    }
                }
            }
        }

        let states: Vec<StateVector> = truncated.iter().map(|s| *s.terminal()).collect();
        let reached = all_in_goal(&states);
        tree.push(JointNode {
            states,
            parent: Some(best as u32),
            incoming: truncated,
            arrival_step: arrival + u64::from(t_min),
            candidates: vec![None; n],
        });

        if reached {
            let mut chains: Vec<Vec<TrajectorySegment>> = vec![Vec::new(); n];
            let mut cur = tree.len() - 1;
            while let Some(parent) = tree[cur].parent {
                for (i, chain) in chains.iter_mut().enumerate() {
                    chain.push(tree[cur].incoming[i].clone());
                }
                cur = parent as usize;
            }
            let trajectories = chains
                .into_iter()
                .enumerate()
                .map(|(i, mut segs)| {
                    segs.reverse();
                    Trajectory::new(instance.agents[i].start, segs)
                })
                .collect();
            stats.absorb(&pstats);
            stats.iterations = iterations;
            stats.planner.iterations = iterations;
            return Ok(Solution {
                trajectories,
                stats,
            });
        }
    }

    Err(SolveFailure::Infeasible)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::SystemId;
    use crate::mrmp::testutil::{crossing_uc_pair, easy_uc_pair};
    use crate::planner::plan;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn single_agent_matches_plan_exactly() {
        // With one agent the joint planner consumes the RNG stream in the
        // same order as the single-agent planner, so the trajectories must
        // be identical for identical seeds.
        let mut instance = easy_uc_pair();
        instance.agents.truncate(1);
        let cfg = PlannerConfig::for_system(SystemId::Unicycle);

        let joint = crrt_plan(&instance, None, &cfg, &mut ChaCha8Rng::seed_from_u64(123)).unwrap();
        let single = plan(
            &instance.model,
            &instance.workspace,
            &instance.agents[0].footprint,
            &instance.agents[0].start,
            &instance.agents[0].goal,
            &[],
            &[],
            None,
            &cfg,
            &mut ChaCha8Rng::seed_from_u64(123),
        )
        .unwrap();
        assert_eq!(joint.trajectories[0], single);
    }

    #[test]
    fn synchronization_truncates_to_shortest() {
        let m = crate::dynamics::SystemModel::new(SystemId::Unicycle);
        let x0 = m.state(&[5.0, 5.0], &[0.0]);
        let long = m.propagate(&x0, &crate::dynamics::ControlInput::new(&[0.5, 0.0]), 5);
        let short = long.truncated(3);
        assert_eq!(short.steps, 3);
        assert_eq!(short.states.len(), 4);
        assert_eq!(short.states[..], long.states[..4]);
    }

    #[test]
    fn solves_a_crossing_and_stays_synchronized() {
        let instance = crossing_uc_pair();
        let cfg = PlannerConfig::for_system(SystemId::Unicycle);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let sol = crrt_plan(&instance, None, &cfg, &mut rng).unwrap();
        // Joint rollouts keep all agents time-aligned: equal durations.
        assert_eq!(
            sol.trajectories[0].duration_steps(),
            sol.trajectories[1].duration_steps()
        );
        for (a, b) in sol.trajectories[0]
            .segments
            .iter()
            .zip(&sol.trajectories[1].segments)
        {
            assert_eq!(a.steps, b.steps);
            assert_eq!(a.start_step, b.start_step);
        }
        // Pairwise clear at every shared step.
        let fa = sol.trajectories[0].sample_states();
        let fb = sol.trajectories[1].sample_states();
        for (a, b) in fa.iter().zip(&fb) {
            assert!(!agents_collide(
                &instance.agents[0].footprint,
                a,
                &instance.agents[1].footprint,
                b
            ));
        }
        for (t, agent) in sol.trajectories.iter().zip(&instance.agents) {
            assert!(agent.goal.contains(t.terminal()));
        }
    }

    #[test]
    fn deterministic_across_runs() {
        let instance = crossing_uc_pair();
        let cfg = PlannerConfig::for_system(SystemId::Unicycle);
        let a = crrt_plan(&instance, None, &cfg, &mut ChaCha8Rng::seed_from_u64(8)).unwrap();
        let b = crrt_plan(&instance, None, &cfg, &mut ChaCha8Rng::seed_from_u64(8)).unwrap();
        assert_eq!(a.trajectories, b.trajectories);
    }
}
