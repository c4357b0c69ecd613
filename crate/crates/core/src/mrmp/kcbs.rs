//! Conflict-based search with a sampling-based kinodynamic low level.
//!
//! The high level performs best-first search over constraint sets ordered by
//! team path time. Popping a node, the earliest pairwise conflict is found;
//! two children are created, each constraining one of the two agents over
//! the conflict interval against the other's current trajectory, and only
//! that agent is replanned. Optionally the constrained agent's previous
//! search tree is reused after discarding the subtree downstream of the
//! first edge overlapping the conflict start.

use std::cmp::Reverse;
use std::collections::BinaryHeap;
use std::rc::Rc;
use std::time::Instant;

use rand::Rng;

use crate::bundle::{EdgeBundle, KeyIndex};
use crate::dynamics::{StateVector, Trajectory};
use crate::error::SolveFailure;
use crate::geometry::{agents_collide, static_collides, Constraint, Footprint};
use crate::planner::{PlanContext, PlannerConfig, SingleAgentPlanner, Tree};

use super::{ProblemInstance, Solution, SolveStats};

/// Earliest pairwise conflict: agents `i < j` collide over the step
/// interval `[start_step, end_step]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Conflict {
    pub i: usize,
    pub j: usize,
    pub start_step: u64,
    pub end_step: u64,
}

#[inline]
fn held(flat: &[StateVector], step: u64) -> &StateVector {
    &flat[(step as usize).min(flat.len() - 1)]
}

fn detect_first_conflict_flat(
    flats: &[Vec<StateVector>],
    footprints: &[Footprint],
) -> Option<Conflict> {
    let max_steps = flats.iter().map(|f| f.len() as u64 - 1).max()?;
    for k in 0..=max_steps {
        for i in 0..flats.len() {
            for j in i + 1..flats.len() {
                if agents_collide(
                    &footprints[i],
                    held(&flats[i], k),
                    &footprints[j],
                    held(&flats[j], k),
                ) {
                    // Maximal contiguous run of colliding samples from k.
                    let mut e = k;
                    while e + 1 <= max_steps
                        && agents_collide(
                            &footprints[i],
                            held(&flats[i], e + 1),
                            &footprints[j],
                            held(&flats[j], e + 1),
                        )
                    {
                        e += 1;
                    }
                    // A single colliding sample becomes [t, t + dt).
                    let end_step = if e == k { k + 1 } else { e };
                    return Some(Conflict {
                        i,
                        j,
                        start_step: k,
                        end_step,
                    });
                }
            }
        }
    }
    None
}

/// Scan a team solution at every step (with terminal hold) and return the
/// earliest conflict, lowest pair first.
pub fn detect_first_conflict(
    trajectories: &[Trajectory],
    footprints: &[Footprint],
) -> Option<Conflict> {
    let flats: Vec<Vec<StateVector>> =
        trajectories.iter().map(|t| t.sample_states()).collect();
    detect_first_conflict_flat(&flats, footprints)
}

/// Discard the subtree downstream of the first edge whose time span overlaps
/// `t_s_step`, then revalidate the remaining edges against `new_constraint`,
/// removing violators and their descendants. Node-local candidate sets are
/// preserved on survivors.
pub fn prune_tree(
    tree: &mut Tree,
    t_s_step: u64,
    new_constraint: &Constraint,
    footprint: &Footprint,
) {
    let n = tree.nodes.len();
    if n <= 1 {
        return;
    }
    let mut keep = vec![false; n];
    keep[0] = true;

    // Nodes are appended parent-first, so one forward pass suffices.
    for id in 1..n {
        let parent = tree.nodes[id].parent.unwrap() as usize;
        if !keep[parent] {
            continue;
        }
        let edge_start = tree.nodes[parent].arrival_step;
        let edge_end = tree.nodes[id].arrival_step;
        if edge_start <= t_s_step && t_s_step <= edge_end {
            continue; // downstream of the conflict start
        }
        let seg = tree.nodes[id].incoming.as_ref().unwrap();
        let mut ok = true;
        for (k, state) in seg.states.iter().enumerate() {
            let step = seg.start_step + k as u64;
            if new_constraint.active_at(step)
                && agents_collide(
                    footprint,
                    state,
                    &new_constraint.opposing_footprint,
                    new_constraint.opposing_at(step),
                )
            {
                ok = false;
                break;
            }
        }
        if ok {
            keep[id] = true;
        }
    }

    let mut remap = vec![u32::MAX; n];
    let mut nodes = Vec::with_capacity(n);
    for (id, node) in std::mem::take(&mut tree.nodes).into_iter().enumerate() {
        if !keep[id] {
            continue;
        }
        remap[id] = nodes.len() as u32;
        let mut node = node;
        if let Some(p) = node.parent {
            node.parent = Some(remap[p as usize]);
        }
        nodes.push(node);
    }
    tree.nodes = nodes;
}

struct AgentPlan {
    trajectory: Trajectory,
    flat: Vec<StateVector>,
    /// Low-level search tree, kept only when pruning/reuse is enabled.
    tree: Option<Tree>,
}

/// One low-level planning call under the agent's accumulated constraints.
#[allow(clippy::too_many_arguments)]
fn plan_agent(
    instance: &ProblemInstance,
    agent: usize,
    constraints: &[Constraint],
    bundle: Option<(&EdgeBundle, &KeyIndex)>,
    cfg: &PlannerConfig,
    pruning: bool,
    tree: Tree,
    deadline: Instant,
    stats: &mut SolveStats,
    rng: &mut impl Rng,
) -> Option<AgentPlan> {
    let spec = &instance.agents[agent];
    let ctx = PlanContext {
        model: &instance.model,
        footprint: &spec.footprint,
        workspace: &instance.workspace,
        dynamic_obstacles: &[],
        constraints,
    };
    let planner = SingleAgentPlanner {
        ctx,
        goal: &spec.goal,
        cfg,
        bundle,
    };
    let run = planner.run(tree, rng, deadline);
    stats.absorb(&run.stats);
    match run.result {
        Ok(trajectory) => {
            let flat = trajectory.sample_states();
            Some(AgentPlan {
                trajectory,
                flat,
                tree: pruning.then_some(run.tree),
            })
        }
        Err(_) => None,
    }
}

struct CtNode {
    constraints: Vec<Vec<Constraint>>,
    plans: Vec<Rc<AgentPlan>>,
    cost_steps: u64,
}

impl CtNode {
    fn cost(plans: &[Rc<AgentPlan>]) -> u64 {
        plans.iter().map(|p| p.trajectory.duration_steps()).sum()
    }
}

/// Conflict-based search over the whole team.
pub fn kcbs_plan(
    instance: &ProblemInstance,
    bundle: Option<(&EdgeBundle, &KeyIndex)>,
    cfg: &PlannerConfig,
    pruning: bool,
    rng: &mut impl Rng,
) -> Result<Solution, SolveFailure> {
    let deadline = Instant::now() + cfg.budget();
    let model = &instance.model;
    let n = instance.agent_count();
    let mut stats = SolveStats::default();

    for (i, agent) in instance.agents.iter().enumerate() {
        if static_collides(&agent.footprint, &agent.start, &instance.workspace) {
            return Err(SolveFailure::InvalidStart { agent: i });
        }
    }

    // Root: every agent planned independently under no constraints.
    let mut root_plans = Vec::with_capacity(n);
    for i in 0..n {
        let tree = Tree::with_root(instance.agents[i].start);
        match plan_agent(
            instance, i, &[], bundle, cfg, pruning, tree, deadline, &mut stats, rng,
        ) {
            Some(p) => root_plans.push(Rc::new(p)),
            None => return Err(SolveFailure::AgentInfeasible { agent: i }),
        }
    }

    let footprints: Vec<Footprint> = instance.agents.iter().map(|a| a.footprint).collect();
    let mut nodes = vec![CtNode {
        constraints: vec![Vec::new(); n],
        cost_steps: CtNode::cost(&root_plans),
        plans: root_plans,
    }];
    let mut heap: BinaryHeap<Reverse<(u64, u64, usize)>> = BinaryHeap::new();
    let mut seq = 0u64;
    heap.push(Reverse((nodes[0].cost_steps, seq, 0)));

    while let Some(Reverse((_, _, idx))) = heap.pop() {
        if Instant::now() >= deadline {
            return Err(SolveFailure::Infeasible);
        }
        let flats: Vec<&Vec<StateVector>> = nodes[idx].plans.iter().map(|p| &p.flat).collect();
        let flats_owned: Vec<Vec<StateVector>> = flats.into_iter().cloned().collect();
        let conflict = detect_first_conflict_flat(&flats_owned, &footprints);

        let Some(conflict) = conflict else {
            let trajectories = nodes[idx]
                .plans
                .iter()
                .map(|p| p.trajectory.clone())
                .collect();
            return Ok(Solution {
                trajectories,
                stats,
            });
        };

        stats.conflicts += 1;
        stats.high_level_expansions += 1;

        for (constrained, opposing) in [(conflict.i, conflict.j), (conflict.j, conflict.i)] {
            let opposing_flat = &nodes[idx].plans[opposing].flat;
            let slice: Vec<StateVector> = (conflict.start_step..=conflict.end_step)
                .map(|k| *held(opposing_flat, k))
                .collect();
            let new_constraint = Constraint {
                agent: constrained,
                start_step: conflict.start_step,
                end_step: conflict.end_step,
                opposing_footprint: footprints[opposing],
                opposing_states: slice,
            };

            let mut constraints = nodes[idx].constraints.clone();
            constraints[constrained].push(new_constraint.clone());

            let tree = match (pruning, nodes[idx].plans[constrained].tree.as_ref()) {
                (true, Some(prev)) => {
                    let mut reused = prev.clone();
                    prune_tree(
                        &mut reused,
                        conflict.start_step,
                        &new_constraint,
                        &footprints[constrained],
                    );
                    reused
                }
                _ => Tree::with_root(instance.agents[constrained].start),
            };

            if let Some(replanned) = plan_agent(
                instance,
                constrained,
                &constraints[constrained],
                bundle,
                cfg,
                pruning,
                tree,
                deadline,
                &mut stats,
                rng,
            ) {
                let mut plans = nodes[idx].plans.clone();
                plans[constrained] = Rc::new(replanned);
                let cost = CtNode::cost(&plans);
                nodes.push(CtNode {
                    constraints,
                    plans,
                    cost_steps: cost,
                });
                seq += 1;
                heap.push(Reverse((cost, seq, nodes.len() - 1)));
            }
        }
    }

    Err(SolveFailure::Infeasible)
}
