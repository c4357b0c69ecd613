//! Independent feasibility oracle for team solutions.
//!
//! Every control sequence is re-propagated from the instance start and the
//! stored states must match to 1e-9 per component; on top of that, control
//! bounds, static clearance, goal membership and pairwise clearance at
//! every step (with terminal hold) are checked. Planners are never trusted:
//! this module shares only the dynamics and collision primitives with them.

use std::fmt;

use crate::dynamics::{StateVector, Trajectory};
use crate::geometry::{agents_collide, static_collides};
use crate::mrmp::ProblemInstance;

pub const STATE_MATCH_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    TeamSizeMismatch { expected: usize, found: usize },
    StartMismatch { agent: usize },
    BadSegment { agent: usize, segment: usize, reason: String },
    ControlOutOfBounds { agent: usize, segment: usize },
    StateMismatch { agent: usize, step: u64, error: f64 },
    StaticCollision { agent: usize, step: u64 },
    PairwiseCollision { a: usize, b: usize, step: u64 },
    GoalMiss { agent: usize },
}

impl Violation {
    fn describe(&self, dt: f64) -> String {
        match self {
            Violation::TeamSizeMismatch { expected, found } => {
                format!("solution has {found} trajectories for {expected} agents")
            }
            Violation::StartMismatch { agent } => {
                format!("agent {agent}: trajectory does not begin at the instance start")
            }
            Violation::BadSegment { agent, segment, reason } => {
                format!("agent {agent} segment {segment}: {reason}")
            }
            Violation::ControlOutOfBounds { agent, segment } => {
                format!("agent {agent} segment {segment}: control outside bounds")
            }
            Violation::StateMismatch { agent, step, error } => format!(
                "agent {agent} t={:.1}s: stored state deviates from re-propagation by {error:.3e}",
                *step as f64 * dt
            ),
            Violation::StaticCollision { agent, step } => format!(
                "agent {agent} t={:.1}s: static collision",
                *step as f64 * dt
            ),
            Violation::PairwiseCollision { a, b, step } => format!(
                "agents {a} and {b} collide at t={:.1}s",
                *step as f64 * dt
            ),
            Violation::GoalMiss { agent } => {
                format!("agent {agent}: terminal state outside the goal region")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub dt: f64,
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn ok(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.ok() {
            return write!(f, "valid: no violations");
        }
        writeln!(f, "{} violation(s):", self.violations.len())?;
        for v in &self.violations {
            writeln!(f, "  - {}", v.describe(self.dt))?;
        }
        Ok(())
    }
}

/// Validate a team solution against its problem instance.
pub fn validate_solution(
    instance: &ProblemInstance,
    trajectories: &[Trajectory],
) -> ValidationReport {
    let model = &instance.model;
    let mut violations = Vec::new();

    if trajectories.len() != instance.agents.len() {
        violations.push(Violation::TeamSizeMismatch {
            expected: instance.agents.len(),
            found: trajectories.len(),
        });
        return ValidationReport {
            dt: model.dt,
            violations,
        };
    }

    for (i, (traj, spec)) in trajectories.iter().zip(&instance.agents).enumerate() {
        if state_error(&traj.start, &spec.start) > STATE_MATCH_TOLERANCE {
            violations.push(Violation::StartMismatch { agent: i });
        }

        // Re-propagate the control sequence; the re-propagated chain is the
        // ground truth the stored states are compared against.
        let mut state = spec.start;
        let mut step = 0u64;
        for (s, seg) in traj.segments.iter().enumerate() {
            if seg.steps == 0 || seg.states.len() != seg.steps as usize + 1 {
                violations.push(Violation::BadSegment {
                    agent: i,
                    segment: s,
                    reason: "segment must hold steps + 1 states".into(),
                });
                continue;
            }
            if seg.start_step != step {
                violations.push(Violation::BadSegment {
                    agent: i,
                    segment: s,
                    reason: format!(
                        "start offset {} but {} steps precede it",
                        seg.start_step, step
                    ),
                });
            }
            if !model.control_in_bounds(&seg.control) {
                violations.push(Violation::ControlOutOfBounds {
                    agent: i,
                    segment: s,
                });
            }
            let truth = model.propagate(&state, &seg.control, seg.steps);
            for (k, (got, want)) in seg.states.iter().zip(&truth.states).enumerate() {
                let err = state_error(got, want);
                if err > STATE_MATCH_TOLERANCE {
                    violations.push(Violation::StateMismatch {
                        agent: i,
                        step: step + k as u64,
                        error: err,
                    });
                }
            }
            state = *truth.terminal();
            step += u64::from(seg.steps);
        }

        if !spec.goal.contains(traj.terminal()) {
            violations.push(Violation::GoalMiss { agent: i });
        }
    }

    // Static clearance at every stored sample.
    let flats: Vec<Vec<StateVector>> = trajectories.iter().map(|t| t.sample_states()).collect();
    for (i, flat) in flats.iter().enumerate() {
        for (k, s) in flat.iter().enumerate() {
            if static_collides(&instance.agents[i].footprint, s, &instance.workspace) {
                violations.push(Violation::StaticCollision {
                    agent: i,
                    step: k as u64,
                });
            }
        }
    }

    // Pairwise clearance at every shared step, holding terminal states.
    let horizon = flats.iter().map(|f| f.len() as u64 - 1).max().unwrap_or(0);
    for k in 0..=horizon {
        for i in 0..flats.len() {
            for j in i + 1..flats.len() {
                let a = &flats[i][(k as usize).min(flats[i].len() - 1)];
                let b = &flats[j][(k as usize).min(flats[j].len() - 1)];
                if agents_collide(
                    &instance.agents[i].footprint,
                    a,
                    &instance.agents[j].footprint,
                    b,
                ) {
                    violations.push(Violation::PairwiseCollision { a: i, b: j, step: k });
                }
            }
        }
    }

    ValidationReport {
        dt: model.dt,
        violations,
    }
}

fn state_error(a: &StateVector, b: &StateVector) -> f64 {
    let mut err: f64 = 0.0;
    for (x, y) in a.pos().iter().zip(b.pos()) {
        err = err.max((x - y).abs());
    }
    for (x, y) in a.rem().iter().zip(b.rem()) {
        err = err.max((x - y).abs());
    }
    if a.pos_dim() != b.pos_dim() || a.rem_dim() != b.rem_dim() {
        return f64::INFINITY;
    }
    err
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{ControlInput, SystemId, SystemModel};
    use crate::mrmp::testutil::crossing_uc_pair;
    use crate::mrmp::{kcbs_plan, prrt_plan};
    use crate::planner::PlannerConfig;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn accepts_planner_output() {
        let instance = crossing_uc_pair();
        let cfg = PlannerConfig::for_system(SystemId::Unicycle);
        let sol = prrt_plan(&instance, None, &cfg, &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
        let report = validate_solution(&instance, &sol.trajectories);
        assert!(report.ok(), "{report}");

        let sol = kcbs_plan(
            &instance,
            None,
            &cfg,
            false,
            &mut ChaCha8Rng::seed_from_u64(5),
        )
        .unwrap();
        assert!(validate_solution(&instance, &sol.trajectories).ok());
    }

    #[test]
    fn detects_tampered_state() {
        let instance = crossing_uc_pair();
        let cfg = PlannerConfig::for_system(SystemId::Unicycle);
        let mut sol =
            prrt_plan(&instance, None, &cfg, &mut ChaCha8Rng::seed_from_u64(5)).unwrap();

        // Perturb one intermediate state by 1e-3.
        let seg = &mut sol.trajectories[0].segments[0];
        let mid = seg.states.len() / 2;
        let bad = seg.states[mid].translate(&[1e-3, 0.0]);
        let tampered_step = seg.start_step + mid as u64;
        seg.states[mid] = bad;

        let report = validate_solution(&instance, &sol.trajectories);
        assert!(report.violations.iter().any(|v| matches!(
            v,
            Violation::StateMismatch { agent: 0, step, .. } if *step == tampered_step
        )));
    }

    #[test]
    fn detects_forced_pairwise_overlap() {
        let m = SystemModel::new(SystemId::Unicycle);
        let instance = crossing_uc_pair();
        // Hand-build two trajectories that sit on the same point over the
        // same interval.
        let mk = |from: &[f64]| {
            let x0 = m.state(from, &[0.0]);
            let seg = m.propagate(&x0, &ControlInput::new(&[0.5, 0.0]), 30);
            Trajectory::new(x0, vec![seg])
        };
        let mut inst = instance.clone();
        inst.agents[0].start = m.state(&[2.0, 5.0], &[0.0]);
        inst.agents[1].start = m.state(&[2.0, 5.6], &[0.0]);
        inst.agents[0].goal = crate::geometry::GoalRegion::new(vec![5.0, 5.0], 0.6);
        inst.agents[1].goal = crate::geometry::GoalRegion::new(vec![5.0, 5.6], 0.6);
        let a = mk(&[2.0, 5.0]);
        let b = mk(&[2.0, 5.6]); // lateral distance 0.6 < 0.8: overlap all along
        let report = validate_solution(&inst, &[a, b]);
        assert!(report
            .violations
            .iter()
            .any(|v| matches!(v, Violation::PairwiseCollision { a: 0, b: 1, step: 0 })));
    }

    #[test]
    fn detects_goal_miss_and_bad_control() {
        let instance = crossing_uc_pair();
        let m = &instance.model;
        // A trajectory that stops short of the goal with an illegal control.
        let x0 = instance.agents[0].start;
        let mut seg = m.propagate(&x0, &ControlInput::new(&[0.5, 0.0]), 5);
        seg.control = ControlInput::new(&[0.9, 0.0]); // outside [-0.5, 0.5]
        let a = Trajectory::new(x0, vec![seg]);
        let b = Trajectory::new(instance.agents[1].start, Vec::new());
        let report = validate_solution(&instance, &[a, b]);
        assert!(report
            .violations
            .iter()
            .any(|v| matches!(v, Violation::ControlOutOfBounds { agent: 0, segment: 0 })));
        assert!(report
            .violations
            .iter()
            .any(|v| matches!(v, Violation::GoalMiss { .. })));
    }
}
