//! Kinodynamic sampling-based motion planning with precomputed
//! translation-invariant edge bundles, three multi-robot coordination
//! paradigms (centralized, prioritized and conflict-based), and a seeded
//! benchmark harness.

pub mod bench;
pub mod bundle;
pub mod dynamics;
pub mod error;
pub mod geometry;
pub mod mrmp;
pub mod planner;

pub use dynamics::{
    ControlInput, StateVector, SystemId, SystemModel, Trajectory, TrajectorySegment,
};
pub use error::{BundleError, DynamicsError, PlanFailure, ScenarioError, SolveFailure};
pub use geometry::{Aabb, Constraint, DynamicObstacle, Footprint, GoalRegion, Workspace};
pub use planner::{DistWeights, ExtendMode, PlannerConfig, SkipPolicy};
