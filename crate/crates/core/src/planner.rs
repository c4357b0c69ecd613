//! Single-agent kinodynamic RRT with pluggable node expansion.
//!
//! Two expansion routines are provided. The baseline samples K random
//! control-duration rollouts and keeps the valid one ending closest to the
//! sampled target. The bundle-guided routine retrieves edges whose keys are
//! near the node's key, ranks them by predicted progress toward the target,
//! attempts them with a stride over the ranked list, and falls back to a
//! single random rollout when retrieval is empty, all strided attempts fail,
//! or an epsilon coin flip asks for unrestricted exploration.

use std::time::{Duration, Instant};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::bundle::{EdgeBundle, KeyIndex};
use crate::dynamics::{
    wrapped_angle_diff, RemComponent, StateVector, SystemId, SystemModel, Trajectory,
    TrajectorySegment, MAX_POS_DIM, MAX_REM_DIM,
};
use crate::error::PlanFailure;
use crate::geometry::{
    hold_valid, segment_valid, static_collides, Constraint, DynamicObstacle, Footprint,
    GoalRegion, Workspace,
};

/// Node expansion flavor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExtendMode {
    Rand,
    Kite,
}

/// Stride over the ranked candidate list.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SkipPolicy {
    /// `p = ceil(|C| / 10)`, recomputed at every expansion.
    Dynamic,
    Fixed(u32),
}

impl SkipPolicy {
    pub fn stride(&self, candidates: usize) -> usize {
        match self {
            SkipPolicy::Dynamic => candidates.div_ceil(10).max(1),
            SkipPolicy::Fixed(p) => (*p as usize).max(1),
        }
    }
}

/// Per-component linear scale factors of the state distance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DistWeights {
    pub pos: [f64; MAX_POS_DIM],
    pub rem: [f64; MAX_REM_DIM],
}

impl DistWeights {
    pub fn for_system(system: SystemId) -> DistWeights {
        match system {
            SystemId::Unicycle => DistWeights {
                pos: [1.0, 1.0, 0.0],
                rem: [0.5, 0.0, 0.0],
            },
            SystemId::SecondOrderCar => DistWeights {
                pos: [1.0, 1.0, 0.0],
                rem: [0.5, 0.2, 0.1],
            },
            SystemId::DoubleIntegrator => DistWeights {
                pos: [1.0, 1.0, 1.0],
                rem: [0.3, 0.3, 0.3],
            },
        }
    }
}

/// Weighted state distance: position differences, wrapped angle differences
/// and velocity-like differences, each scaled then combined in an L2 norm.
pub fn dist(model: &SystemModel, a: &StateVector, b: &StateVector, w: &DistWeights) -> f64 {
    let mut acc = 0.0;
    for i in 0..model.workspace_dim() {
        let d = w.pos[i] * (a.pos()[i] - b.pos()[i]);
        acc += d * d;
    }
    for (i, spec) in model.rem_spec().iter().enumerate() {
        let raw = match spec {
            RemComponent::Angle => wrapped_angle_diff(a.rem()[i], b.rem()[i]),
            RemComponent::Bounded { .. } => a.rem()[i] - b.rem()[i],
        };
        let d = w.rem[i] * raw;
        acc += d * d;
    }
    acc.sqrt()
}

/// All knobs of a single planning attempt.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlannerConfig {
    pub extend: ExtendMode,
    /// Rollout count K for the baseline extension.
    pub rollouts: u32,
    /// Probability of an unrestricted random expansion in bundle mode.
    pub eps: f64,
    pub skip: SkipPolicy,
    /// Retrieval radius over the key metric.
    pub delta: f64,
    /// Key metric weights (one per remainder component).
    pub key_weights: Vec<f64>,
    pub dist_weights: DistWeights,
    /// Probability of sampling the goal center instead of a uniform state.
    pub goal_bias: f64,
    pub max_iterations: u64,
    /// Wall-clock budget in seconds for one solve.
    pub budget_secs: f64,
    /// Duration sampling cap in integration steps.
    pub t_max_steps: u32,
}

impl PlannerConfig {
    pub fn for_system(system: SystemId) -> PlannerConfig {
        let (delta, key_weights) = match system {
            SystemId::Unicycle => (0.3, vec![1.0]),
            // Ball with semi-axes 0.3 rad, 0.2 m/s, 0.2 rad.
            SystemId::SecondOrderCar => (0.3, vec![1.0, 1.5, 1.5]),
            SystemId::DoubleIntegrator => (0.15, vec![1.0, 1.0, 1.0]),
        };
        PlannerConfig {
            extend: ExtendMode::Rand,
            rollouts: 10,
            eps: 0.01,
            skip: SkipPolicy::Dynamic,
            delta,
            key_weights,
            dist_weights: DistWeights::for_system(system),
            goal_bias: 0.05,
            max_iterations: u64::MAX,
            budget_secs: 300.0,
            t_max_steps: 30,
        }
    }

    pub fn budget(&self) -> Duration {
        Duration::from_secs_f64(self.budget_secs)
    }
}

/// Everything a validity check needs, shared by all extension routines.
pub struct PlanContext<'a> {
    pub model: &'a SystemModel,
    pub footprint: &'a Footprint,
    pub workspace: &'a Workspace,
    pub dynamic_obstacles: &'a [DynamicObstacle],
    pub constraints: &'a [Constraint],
}

impl<'a> PlanContext<'a> {
    pub fn segment_valid(&self, seg: &TrajectorySegment) -> bool {
        segment_valid(
            self.footprint,
            seg,
            self.workspace,
            self.dynamic_obstacles,
            self.constraints,
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TreeNode {
    pub state: StateVector,
    pub parent: Option<u32>,
    pub incoming: Option<TrajectorySegment>,
    pub arrival_step: u64,
    /// Edge ids still available for bundle-guided expansion from this node;
    /// unset until the first such expansion, shrinking afterwards.
    pub candidates: Option<Vec<u32>>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Tree {
    pub nodes: Vec<TreeNode>,
}

impl Tree {
    pub fn with_root(state: StateVector) -> Tree {
        Tree {
            nodes: vec![TreeNode {
                state,
                parent: None,
                incoming: None,
                arrival_step: 0,
                candidates: None,
            }],
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Trajectory from the root to `node`.
    pub fn extract(&self, node: u32) -> Trajectory {
        let mut segments = Vec::new();
        let mut cur = node;
        while let Some(parent) = self.nodes[cur as usize].parent {
            segments.push(self.nodes[cur as usize].incoming.clone().unwrap());
            cur = parent;
        }
        segments.reverse();
        Trajectory::new(self.nodes[0].state, segments)
    }
}

/// Node minimizing the weighted distance to `target`; ties break low id.
pub fn select_node(
    tree: &Tree,
    target: &StateVector,
    model: &SystemModel,
    w: &DistWeights,
) -> u32 {
    debug_assert!(!tree.is_empty());
    let mut best = 0u32;
    let mut best_d = f64::INFINITY;
    for (i, node) in tree.nodes.iter().enumerate() {
        let d = dist(model, &node.state, target, w);
        if d < best_d {
            best_d = d;
            best = i as u32;
        }
    }
    best
}

/// Counters describing where expansions went; used for the fairness and
/// exploration instrumentation as well as result metadata.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct PlannerStats {
    pub iterations: u64,
    pub extensions_accepted: u64,
    pub kite_calls: u64,
    /// Calls that took the epsilon branch before touching the bundle.
    pub eps_random: u64,
    /// Calls that fell back because retrieval produced nothing.
    pub empty_fallback: u64,
    /// Calls that fell back after every strided candidate failed.
    pub exhausted_fallback: u64,
}

/// Best-of-K random rollout extension. Evaluates all K rollouts and keeps
/// the valid one whose endpoint is closest to `target`.
pub fn rand_extend(
    ctx: &PlanContext,
    from: &StateVector,
    arrival_step: u64,
    target: &StateVector,
    k: u32,
    t_max_steps: u32,
    w: &DistWeights,
    rng: &mut impl Rng,
) -> Option<TrajectorySegment> {
    assert!(k >= 1);
    let mut best: Option<(f64, TrajectorySegment)> = None;
    for _ in 0..k {
        let u = ctx.model.sample_control(rng);
        let steps = ctx.model.sample_duration_steps(t_max_steps, rng);
        let mut seg = ctx.model.propagate(from, &u, steps);
        seg.start_step = arrival_step;
        if !ctx.model.is_dyn_feasible(&seg) || !ctx.segment_valid(&seg) {
            continue;
        }
        let d = dist(ctx.model, seg.terminal(), target, w);
        if best.as_ref().map_or(true, |(bd, _)| d < *bd) {
            best = Some((d, seg));
        }
    }
    best.map(|(_, seg)| seg)
}

/// Bundle-guided extension from a node at `state`.
///
/// `candidates` is the node-local available edge set, initialized on first
/// use and only ever shrinking. Epsilon branch and fallbacks delegate to
/// [`rand_extend`] with K = 1. Attempted edges are removed from the
/// candidate set and never reconsidered from the same node.
#[allow(clippy::too_many_arguments)]
pub fn kite_extend(
    ctx: &PlanContext,
    state: &StateVector,
    arrival_step: u64,
    candidates: &mut Option<Vec<u32>>,
    target: &StateVector,
    bundle: &EdgeBundle,
    index: &KeyIndex,
    cfg: &PlannerConfig,
    stats: &mut PlannerStats,
    rng: &mut impl Rng,
) -> Option<TrajectorySegment> {
    stats.kite_calls += 1;

    if rng.gen::<f64>() < cfg.eps {
        stats.eps_random += 1;
        return rand_extend(
            ctx,
            state,
            arrival_step,
            target,
            1,
            cfg.t_max_steps,
            &cfg.dist_weights,
            rng,
        );
    }

    if candidates.is_none() {
        *candidates = Some(index.query_radius(state.key(), cfg.delta));
    }
    let available = candidates.as_mut().unwrap();

    if available.is_empty() {
        stats.empty_fallback += 1;
        return rand_extend(
            ctx,
            state,
            arrival_step,
            target,
            1,
            cfg.t_max_steps,
            &cfg.dist_weights,
            rng,
        );
    }

    // Rank the snapshot of available edges by predicted endpoint distance.
    // Stable sort keeps retrieval (ascending id) order on ties.
    let mut ranked: Vec<(f64, u32)> = available
        .iter()
        .map(|&id| {
            let e = &bundle.edges[id as usize];
            let predicted = e.predicted_endpoint(state);
            (dist(ctx.model, &predicted, target, &cfg.dist_weights), id)
        })
        .collect();
    ranked.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());

    let stride = cfg.skip.stride(ranked.len());
    let attempts = ranked.len().div_ceil(stride);
    for j in 0..attempts {
        let (_, id) = ranked[j * stride];
        // Mark the edge unavailable for future expansions from this node.
        if let Ok(i) = available.binary_search(&id) {
            available.remove(i);
        }
        let edge = &bundle.edges[id as usize];
        let (u, steps) = edge.params();
        let mut seg = ctx.model.propagate(state, &u, steps);
        seg.start_step = arrival_step;
        if ctx.model.is_dyn_feasible(&seg) && ctx.segment_valid(&seg) {
            return Some(seg);
        }
    }

    stats.exhausted_fallback += 1;
    rand_extend(
        ctx,
        state,
        arrival_step,
        target,
        1,
        cfg.t_max_steps,
        &cfg.dist_weights,
        rng,
    )
}

/// Sample a planning target: the goal center with probability `goal_bias`,
/// otherwise a state whose position is rejection-sampled against the static
/// environment. Remainder components are uniform within bounds either way.
pub fn sample_target(
    ctx: &PlanContext,
    goal: &GoalRegion,
    goal_bias: f64,
    rng: &mut impl Rng,
) -> StateVector {
    let biased = goal_bias > 0.0 && rng.gen_bool(goal_bias);
    sample_target_biased(ctx, goal, biased, rng)
}

/// Target sampling with the bias decision already made; joint-state planning
/// draws the bias once and applies it to every agent's component.
pub fn sample_target_biased(
    ctx: &PlanContext,
    goal: &GoalRegion,
    biased: bool,
    rng: &mut impl Rng,
) -> StateVector {
    let model = ctx.model;
    if biased {
        let rem = model.sample_rem(rng);
        return StateVector::new(&goal.center, &rem[..model.rem_spec().len()]);
    }
    let bounds = &ctx.workspace.bounds;
    loop {
        let mut pos = [0.0; MAX_POS_DIM];
        for i in 0..model.workspace_dim() {
            pos[i] = rng.gen_range(bounds.min[i]..bounds.max[i]);
        }
        let rem = model.sample_rem(rng);
        let state = StateVector::new(
            &pos[..model.workspace_dim()],
            &rem[..model.rem_spec().len()],
        );
        if !static_collides(ctx.footprint, &state, ctx.workspace) {
            return state;
        }
    }
}

/// Outcome of [`SingleAgentPlanner::run`] carrying the search tree for
/// callers that reuse it.
pub struct PlanRun {
    pub result: Result<Trajectory, PlanFailure>,
    pub tree: Tree,
    pub stats: PlannerStats,
}

/// One single-agent RRT search. The planner owns its tree; the bundle and
/// index are shared read-only.
pub struct SingleAgentPlanner<'a> {
    pub ctx: PlanContext<'a>,
    pub goal: &'a GoalRegion,
    pub cfg: &'a PlannerConfig,
    pub bundle: Option<(&'a EdgeBundle, &'a KeyIndex)>,
}

impl<'a> SingleAgentPlanner<'a> {
    /// Grow `tree` until a node reaches the goal (and its terminal hold is
    /// clear of every time-indexed obligation), the iteration cap is hit,
    /// or `deadline` passes. The tree may already contain prior search
    /// state, in which case in-goal nodes are honored before expanding.
    pub fn run(
        &self,
        mut tree: Tree,
        rng: &mut impl Rng,
        deadline: Instant,
    ) -> PlanRun {
        let mut stats = PlannerStats::default();

        if self.cfg.extend == ExtendMode::Kite {
            debug_assert!(self.bundle.is_some(), "bundle required for kite extension");
        }

        // A reused tree may already contain a valid goal node.
        for (i, node) in tree.nodes.iter().enumerate() {
            if self.accepts_goal(node) {
                let traj = tree.extract(i as u32);
                debug_assert!(self.trajectory_ok(&traj));
                return PlanRun {
                    result: Ok(traj),
                    tree,
                    stats,
                };
            }
        }

        while stats.iterations < self.cfg.max_iterations {
            if Instant::now() >= deadline {
                break;
            }
            stats.iterations += 1;

            let target = sample_target(&self.ctx, self.goal, self.cfg.goal_bias, rng);
            let v = select_node(&tree, &target, self.ctx.model, &self.cfg.dist_weights);
            let seg = match self.cfg.extend {
                ExtendMode::Rand => {
                    let node = &tree.nodes[v as usize];
                    rand_extend(
                        &self.ctx,
                        &node.state,
                        node.arrival_step,
                        &target,
                        self.cfg.rollouts,
                        self.cfg.t_max_steps,
                        &self.cfg.dist_weights,
                        rng,
                    )
                }
                ExtendMode::Kite => {
                    let (bundle, index) = self.bundle.unwrap();
                    let node = &mut tree.nodes[v as usize];
                    let state = node.state;
                    let arrival_step = node.arrival_step;
                    kite_extend(
                        &self.ctx,
                        &state,
                        arrival_step,
                        &mut node.candidates,
                        &target,
                        bundle,
                        index,
                        self.cfg,
                        &mut stats,
                        rng,
                    )
                }
            };
            let Some(seg) = seg else { continue };
            stats.extensions_accepted += 1;

            let arrival_step = tree.nodes[v as usize].arrival_step + u64::from(seg.steps);
            let state = *seg.terminal();
            tree.nodes.push(TreeNode {
                state,
                parent: Some(v),
                incoming: Some(seg),
                arrival_step,
                candidates: None,
            });
            let id = (tree.len() - 1) as u32;
            if self.accepts_goal(&tree.nodes[id as usize]) {
                let traj = tree.extract(id);
                debug_assert!(self.trajectory_ok(&traj));
                return PlanRun {
                    result: Ok(traj),
                    tree,
                    stats,
                };
            }
        }

        PlanRun {
            result: Err(PlanFailure::Infeasible {
                iterations: stats.iterations,
            }),
            tree,
            stats,
        }
    }

    /// Goal membership plus terminal-hold clearance: once parked, the agent
    /// must stay clear of moving obstacles and constraint intervals that
    /// extend past its arrival.
    fn accepts_goal(&self, node: &TreeNode) -> bool {
        self.goal.contains(&node.state)
            && hold_valid(
                self.ctx.footprint,
                &node.state,
                node.arrival_step,
                self.ctx.dynamic_obstacles,
                self.ctx.constraints,
            )
    }

    /// End-to-end re-validation of a returned trajectory.
    fn trajectory_ok(&self, traj: &Trajectory) -> bool {
        let mut state = traj.start;
        let mut step = 0u64;
        for seg in &traj.segments {
            if seg.start_step != step || seg.states[0] != state {
                return false;
            }
            let check = self.ctx.model.propagate(&state, &seg.control, seg.steps);
            if check.states != seg.states {
                return false;
            }
            if !self.ctx.model.is_dyn_feasible(seg) || !self.ctx.segment_valid(seg) {
                return false;
            }
            state = *seg.terminal();
            step += u64::from(seg.steps);
        }
        self.goal.contains(&state)
    }
}

/// Plan a single agent from scratch.
///
/// `bundle` must be present exactly when the config selects bundle-guided
/// extension. An invalid start is reported as an error distinct from
/// planner-level infeasibility.
#[allow(clippy::too_many_arguments)]
pub fn plan(
    model: &SystemModel,
    workspace: &Workspace,
    footprint: &Footprint,
    start: &StateVector,
    goal: &GoalRegion,
    dynamic_obstacles: &[DynamicObstacle],
    constraints: &[Constraint],
    bundle: Option<(&EdgeBundle, &KeyIndex)>,
    cfg: &PlannerConfig,
    rng: &mut impl Rng,
) -> Result<Trajectory, PlanFailure> {
    let ctx = PlanContext {
        model,
        footprint,
        workspace,
        dynamic_obstacles,
        constraints,
    };
    if static_collides(footprint, start, workspace) {
        return Err(PlanFailure::InvalidStart);
    }
    let planner = SingleAgentPlanner {
        ctx,
        goal,
        cfg,
        bundle,
    };
    let deadline = Instant::now() + cfg.budget();
    planner.run(Tree::with_root(*start), rng, deadline).result
}
