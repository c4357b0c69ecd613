//! Declarative problem instances: JSON scenario files and seeded
//! procedural generation of the benchmark environments.

use std::f64::consts::{PI, TAU};
use std::fmt;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dynamics::{StateVector, SystemId, SystemModel, MAX_POS_DIM};
use crate::error::ScenarioError;
use crate::geometry::{static_collides, Aabb, GoalRegion, Workspace};
use crate::mrmp::{AgentSpec, ProblemInstance};

pub const SCENARIO_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioTemplate {
    /// Agents on a ring exchange places with their antipodes (20 x 20).
    Swap2d,
    /// Ring exchange in 3D (20 x 20 x 10).
    Swap3d,
    /// Two rooms joined by a one-robot passage (5 x 4).
    NarrowCorridor,
    /// Seeded random boxes in a 15 x 15 workspace.
    SmallCluttered,
    /// Seeded random boxes in a 40 x 40 workspace.
    LargeCluttered,
    /// Seeded random prisms in a 14 x 14 x 10 workspace.
    LargeCluttered3d,
}

impl ScenarioTemplate {
    pub fn tag(&self) -> &'static str {
        match self {
            ScenarioTemplate::Swap2d => "swap2d",
            ScenarioTemplate::Swap3d => "swap3d",
            ScenarioTemplate::NarrowCorridor => "narrow",
            ScenarioTemplate::SmallCluttered => "small-cluttered",
            ScenarioTemplate::LargeCluttered => "large-cluttered",
            ScenarioTemplate::LargeCluttered3d => "large-cluttered3d",
        }
    }

    pub fn from_tag(tag: &str) -> Option<ScenarioTemplate> {
        match tag.to_ascii_lowercase().as_str() {
            "swap2d" | "swap" => Some(ScenarioTemplate::Swap2d),
            "swap3d" => Some(ScenarioTemplate::Swap3d),
            "narrow" | "narrow-corridor" => Some(ScenarioTemplate::NarrowCorridor),
            "small-cluttered" => Some(ScenarioTemplate::SmallCluttered),
            "large-cluttered" => Some(ScenarioTemplate::LargeCluttered),
            "large-cluttered3d" => Some(ScenarioTemplate::LargeCluttered3d),
            _ => None,
        }
    }

    fn workspace_dim(&self) -> usize {
        match self {
            ScenarioTemplate::Swap3d | ScenarioTemplate::LargeCluttered3d => 3,
            _ => 2,
        }
    }

    fn default_goal_radius(&self) -> f64 {
        match self {
            ScenarioTemplate::NarrowCorridor => 0.25,
            _ => 0.5,
        }
    }
}

impl fmt::Display for ScenarioTemplate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioAgent {
    pub start: StateVector,
    pub goal: Vec<f64>,
}

/// Generation recipe recorded into the file so results are reproducible.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Recipe {
    pub template: ScenarioTemplate,
    pub agents: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioFile {
    pub format_version: u32,
    pub name: String,
    pub system: SystemId,
    pub bounds: Aabb,
    pub obstacles: Vec<Aabb>,
    pub goal_radius: f64,
    pub agents: Vec<ScenarioAgent>,
    #[serde(skip_serializing_if = "Option::is_none")]
    #[serde(default)]
    pub recipe: Option<Recipe>,
}

impl ScenarioFile {
    pub fn to_instance(&self) -> Result<ProblemInstance, ScenarioError> {
        if self.format_version != SCENARIO_FORMAT_VERSION {
            return Err(ScenarioError::BadVersion(self.format_version));
        }
        let model = SystemModel::new(self.system);
        let dim = model.workspace_dim();
        if self.bounds.dim() != dim {
            return Err(ScenarioError::Invalid(format!(
                "bounds are {}-dimensional but the system needs {dim}",
                self.bounds.dim()
            )));
        }
        for (i, ob) in self.obstacles.iter().enumerate() {
            if ob.dim() != dim {
                return Err(ScenarioError::Invalid(format!("obstacle {i} dimension")));
            }
            if !self.bounds.contains_box(ob) {
                return Err(ScenarioError::Invalid(format!(
                    "obstacle {i} extends outside the workspace bounds"
                )));
            }
        }
        if self.goal_radius <= 0.0 {
            return Err(ScenarioError::Invalid("goal radius must be positive".into()));
        }
        let workspace = Workspace::new(self.bounds.clone(), self.obstacles.clone());
        let footprint = model.footprint();
        let mut agents = Vec::with_capacity(self.agents.len());
        for (i, a) in self.agents.iter().enumerate() {
            if a.start.pos_dim() != dim || a.start.rem_dim() != model.rem_spec().len() {
                return Err(ScenarioError::Invalid(format!("agent {i} state dimension")));
            }
            if a.goal.len() != dim {
                return Err(ScenarioError::Invalid(format!("agent {i} goal dimension")));
            }
            if self.obstacles.iter().any(|ob| ob.contains_point(&a.goal)) {
                return Err(ScenarioError::Invalid(format!(
                    "agent {i} goal center lies inside an obstacle"
                )));
            }
            agents.push(AgentSpec {
                start: a.start,
                goal: GoalRegion::new(a.goal.clone(), self.goal_radius),
                footprint,
            });
        }
        let instance = ProblemInstance {
            model,
            workspace,
            agents,
        };
        instance.validate_starts().map_err(ScenarioError::Invalid)?;
        Ok(instance)
    }

    pub fn save(&self, path: &Path) -> Result<(), ScenarioError> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        std::fs::write(path, text)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<ScenarioFile, ScenarioError> {
        let text = std::fs::read_to_string(path)?;
        let file: ScenarioFile = serde_json::from_str(&text)?;
        if file.format_version != SCENARIO_FORMAT_VERSION {
            return Err(ScenarioError::BadVersion(file.format_version));
        }
        Ok(file)
    }
}

const PLACEMENT_ATTEMPTS: usize = 10_000;
/// Minimum mutual distance between any two start/goal points.
const POINT_SEPARATION: f64 = 2.0;

fn start_rem(model: &SystemModel, heading: f64) -> Vec<f64> {
    match model.system {
        SystemId::Unicycle => vec![heading],
        SystemId::SecondOrderCar => vec![heading, 0.0, 0.0],
        SystemId::DoubleIntegrator => vec![0.0, 0.0, 0.0],
    }
}

/// Deterministically generate a problem instance from a template.
pub fn generate_scenario(
    template: ScenarioTemplate,
    system: SystemId,
    n: usize,
    seed: u64,
) -> Result<ScenarioFile, ScenarioError> {
    let model = SystemModel::new(system);
    if model.workspace_dim() != template.workspace_dim() {
        return Err(ScenarioError::Invalid(format!(
            "template {template} is {}-dimensional but {} plans in {} dimensions",
            template.workspace_dim(),
            system.as_str(),
            model.workspace_dim(),
        )));
    }
    if n == 0 {
        return Err(ScenarioError::Invalid("at least one agent".into()));
    }

    let file = match template {
        ScenarioTemplate::Swap2d => swap_ring(template, &model, n, seed, false)?,
        ScenarioTemplate::Swap3d => swap_ring(template, &model, n, seed, true)?,
        ScenarioTemplate::NarrowCorridor => narrow_corridor(template, &model, n, seed)?,
        ScenarioTemplate::SmallCluttered => cluttered(
            template,
            &model,
            n,
            seed,
            Aabb::new(vec![0.0, 0.0], vec![15.0, 15.0]),
            12,
            (0.8, 2.0),
        )?,
        ScenarioTemplate::LargeCluttered => cluttered(
            template,
            &model,
            n,
            seed,
            Aabb::new(vec![0.0, 0.0], vec![40.0, 40.0]),
            40,
            (1.0, 3.0),
        )?,
        ScenarioTemplate::LargeCluttered3d => cluttered(
            template,
            &model,
            n,
            seed,
            Aabb::new(vec![0.0, 0.0, 0.0], vec![14.0, 14.0, 10.0]),
            25,
            (1.0, 3.0),
        )?,
    };

    // Generated scenarios must load back into a valid instance.
    file.to_instance()?;
    Ok(file)
}

fn scenario_name(template: ScenarioTemplate, system: SystemId, n: usize, seed: u64) -> String {
    format!("{}-{}-n{}-s{}", template.tag(), system.tag(), n, seed)
}

/// Agents evenly spaced on a ring, each swapping with its antipode.
fn swap_ring(
    template: ScenarioTemplate,
    model: &SystemModel,
    n: usize,
    seed: u64,
    three_d: bool,
) -> Result<ScenarioFile, ScenarioError> {
    let (bounds, center, ring_radius) = if three_d {
        (
            Aabb::new(vec![0.0, 0.0, 0.0], vec![20.0, 20.0, 10.0]),
            vec![10.0, 10.0, 5.0],
            7.0,
        )
    } else {
        (
            Aabb::new(vec![0.0, 0.0], vec![20.0, 20.0]),
            vec![10.0, 10.0],
            7.0,
        )
    };
    // Neighboring starts must clear each other's footprints.
    let chord = 2.0 * ring_radius * (PI / n as f64).sin();
    let needed = 2.0 * model.footprint().circumradius() + 0.2;
    if n > 1 && chord < needed {
        let capacity = (PI / (needed / (2.0 * ring_radius)).asin()).floor() as usize;
        return Err(ScenarioError::Capacity {
            template: template.tag().into(),
            agents: n,
            capacity,
        });
    }

    let mut agents = Vec::with_capacity(n);
    for i in 0..n {
        let ang = TAU * i as f64 / n as f64;
        let (s, c) = ang.sin_cos();
        let mut start_pos = center.clone();
        start_pos[0] += ring_radius * c;
        start_pos[1] += ring_radius * s;
        let mut goal = center.clone();
        goal[0] -= ring_radius * c;
        goal[1] -= ring_radius * s;
        // Face the goal across the ring.
        let heading = crate::dynamics::wrap_angle(ang + PI);
        agents.push(ScenarioAgent {
            start: StateVector::new(&start_pos, &start_rem(model, heading)),
            goal,
        });
    }

    Ok(ScenarioFile {
        format_version: SCENARIO_FORMAT_VERSION,
        name: scenario_name(template, model.system, n, seed),
        system: model.system,
        bounds,
        obstacles: Vec::new(),
        goal_radius: template.default_goal_radius(),
        agents,
        recipe: Some(Recipe {
            template,
            agents: n,
            seed,
        }),
    })
}

/// A 5 x 4 workspace split by a wall with a single one-robot passage; all
/// agents start left and must file through to the right.
fn narrow_corridor(
    template: ScenarioTemplate,
    model: &SystemModel,
    n: usize,
    seed: u64,
) -> Result<ScenarioFile, ScenarioError> {
    const LANES: [f64; 3] = [0.8, 2.0, 3.2];
    if n > LANES.len() {
        return Err(ScenarioError::Capacity {
            template: template.tag().into(),
            agents: n,
            capacity: LANES.len(),
        });
    }
    let bounds = Aabb::new(vec![0.0, 0.0], vec![5.0, 4.0]);
    let obstacles = vec![
        Aabb::new(vec![2.2, 0.0], vec![2.8, 1.4]),
        Aabb::new(vec![2.2, 2.6], vec![2.8, 4.0]),
    ];
    let agents = (0..n)
        .map(|i| ScenarioAgent {
            start: StateVector::new(&[0.7, LANES[i]], &start_rem(model, 0.0)),
            goal: vec![4.3, LANES[n - 1 - i]],
        })
        .collect();
    Ok(ScenarioFile {
        format_version: SCENARIO_FORMAT_VERSION,
        name: scenario_name(template, model.system, n, seed),
        system: model.system,
        bounds,
        obstacles,
        goal_radius: template.default_goal_radius(),
        agents,
        recipe: Some(Recipe {
            template,
            agents: n,
            seed,
        }),
    })
}

fn point_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Random starts and goals plus rejection-sampled axis-aligned obstacles
/// keeping at least one robot diameter of clearance around every point.
fn cluttered(
    template: ScenarioTemplate,
    model: &SystemModel,
    n: usize,
    seed: u64,
    bounds: Aabb,
    obstacle_count: usize,
    side_range: (f64, f64),
) -> Result<ScenarioFile, ScenarioError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dim = bounds.dim();
    let circumradius = model.footprint().circumradius();
    let margin = circumradius + 0.1;
    let clearance = 2.0 * circumradius;

    // Starts first, then goals; every placed point keeps its distance from
    // all previously placed ones.
    let mut points: Vec<Vec<f64>> = Vec::with_capacity(2 * n);
    for k in 0..2 * n {
        let mut placed = false;
        for _ in 0..PLACEMENT_ATTEMPTS {
            let p: Vec<f64> = (0..dim)
                .map(|d| rng.gen_range(bounds.min[d] + margin..bounds.max[d] - margin))
                .collect();
            if points.iter().all(|q| point_distance(&p, q) >= POINT_SEPARATION) {
                points.push(p);
                placed = true;
                break;
            }
        }
        if !placed {
            return Err(ScenarioError::Placement {
                what: format!(
                    "{} {} of {n} agents",
                    if k < n { "start" } else { "goal" },
                    k % n
                ),
                attempts: PLACEMENT_ATTEMPTS,
            });
        }
    }

    let mut obstacles = Vec::with_capacity(obstacle_count);
    for k in 0..obstacle_count {
        let mut placed = false;
        for _ in 0..PLACEMENT_ATTEMPTS {
            let sides: Vec<f64> = (0..dim)
                .map(|_| rng.gen_range(side_range.0..side_range.1))
                .collect();
            let center: Vec<f64> = (0..dim)
                .map(|d| {
                    rng.gen_range(
                        bounds.min[d] + sides[d] / 2.0..bounds.max[d] - sides[d] / 2.0,
                    )
                })
                .collect();
            let ob = Aabb::new(
                center.iter().zip(&sides).map(|(c, s)| c - s / 2.0).collect(),
                center.iter().zip(&sides).map(|(c, s)| c + s / 2.0).collect(),
            );
            if points
                .iter()
                .all(|p| ob.distance_sq_to_point(p).sqrt() >= clearance)
            {
                obstacles.push(ob);
                placed = true;
                break;
            }
        }
        if !placed {
            return Err(ScenarioError::Placement {
                what: format!("obstacle {k} of {obstacle_count}"),
                attempts: PLACEMENT_ATTEMPTS,
            });
        }
    }

    let agents = (0..n)
        .map(|i| {
            let heading = crate::dynamics::wrap_angle(rng.gen_range(-PI..PI));
            let mut start_pos = [0.0; MAX_POS_DIM];
            start_pos[..dim].copy_from_slice(&points[i]);
            ScenarioAgent {
                start: StateVector::new(&start_pos[..dim], &start_rem(model, heading)),
                goal: points[n + i].clone(),
            }
        })
        .collect();

    Ok(ScenarioFile {
        format_version: SCENARIO_FORMAT_VERSION,
        name: scenario_name(template, model.system, n, seed),
        system: model.system,
        bounds,
        obstacles,
        goal_radius: template.default_goal_radius(),
        agents,
        recipe: Some(Recipe {
            template,
            agents: n,
            seed,
        }),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::agents_collide;

    #[test]
    fn swap_starts_and_goals_are_antipodal() {
        let f = generate_scenario(ScenarioTemplate::Swap2d, SystemId::Unicycle, 4, 7).unwrap();
        for a in &f.agents {
            let start = a.start.pos();
            // Antipode through the ring center (10, 10).
            assert!((a.goal[0] - (20.0 - start[0])).abs() < 1e-9);
            assert!((a.goal[1] - (20.0 - start[1])).abs() < 1e-9);
        }
        // Mutual start clearance above the footprint diameter.
        let inst = f.to_instance().unwrap();
        for i in 0..4 {
            for j in i + 1..4 {
                assert!(!agents_collide(
                    &inst.agents[i].footprint,
                    &inst.agents[i].start,
                    &inst.agents[j].footprint,
                    &inst.agents[j].start,
                ));
            }
        }
    }

    #[test]
    fn small_cluttered_occupies_stated_bounds() {
        let f =
            generate_scenario(ScenarioTemplate::SmallCluttered, SystemId::SecondOrderCar, 4, 3)
                .unwrap();
        assert_eq!(f.bounds.min, vec![0.0, 0.0]);
        assert_eq!(f.bounds.max, vec![15.0, 15.0]);
        assert_eq!(f.obstacles.len(), 12);
        f.to_instance().unwrap();
    }

    #[test]
    fn generation_is_deterministic() {
        let a = generate_scenario(ScenarioTemplate::LargeCluttered, SystemId::Unicycle, 6, 11)
            .unwrap();
        let b = generate_scenario(ScenarioTemplate::LargeCluttered, SystemId::Unicycle, 6, 11)
            .unwrap();
        assert_eq!(a, b);
        let ja = serde_json::to_string_pretty(&a).unwrap();
        let jb = serde_json::to_string_pretty(&b).unwrap();
        assert_eq!(ja, jb);
    }

    #[test]
    fn roundtrip_through_disk() {
        let dir = tempfile::tempdir().unwrap();
        let f =
            generate_scenario(ScenarioTemplate::Swap3d, SystemId::DoubleIntegrator, 8, 2).unwrap();
        let p = dir.path().join("s.json");
        f.save(&p).unwrap();
        let g = ScenarioFile::load(&p).unwrap();
        assert_eq!(f, g);
        g.to_instance().unwrap();
    }

    #[test]
    fn dimension_mismatch_rejected() {
        assert!(matches!(
            generate_scenario(ScenarioTemplate::Swap2d, SystemId::DoubleIntegrator, 4, 1),
            Err(ScenarioError::Invalid(_))
        ));
        assert!(matches!(
            generate_scenario(ScenarioTemplate::Swap3d, SystemId::Unicycle, 4, 1),
            Err(ScenarioError::Invalid(_))
        ));
    }

    #[test]
    fn capacity_limits_enforced() {
        assert!(matches!(
            generate_scenario(ScenarioTemplate::NarrowCorridor, SystemId::Unicycle, 9, 1),
            Err(ScenarioError::Capacity { .. })
        ));
        // An absurd agent count on the ring.
        assert!(matches!(
            generate_scenario(ScenarioTemplate::Swap2d, SystemId::Unicycle, 200, 1),
            Err(ScenarioError::Capacity { .. })
        ));
    }

    #[test]
    fn narrow_corridor_layout() {
        let f = generate_scenario(ScenarioTemplate::NarrowCorridor, SystemId::Unicycle, 3, 1)
            .unwrap();
        assert_eq!(f.bounds.max, vec![5.0, 4.0]);
        assert_eq!(f.goal_radius, 0.25);
        let inst = f.to_instance().unwrap();
        // Every path must cross the wall line x = 2.5.
        for a in &inst.agents {
            assert!(a.start.pos()[0] < 2.2);
            assert!(a.goal.center[0] > 2.8);
        }
    }

    #[test]
    fn cluttered_goals_clear_of_obstacles() {
        for seed in 0..5 {
            let f = generate_scenario(
                ScenarioTemplate::LargeCluttered3d,
                SystemId::DoubleIntegrator,
                10,
                seed,
            )
            .unwrap();
            let inst = f.to_instance().unwrap();
            for a in &inst.agents {
                // Goal centers keep a robot diameter of clearance.
                for ob in &inst.workspace.obstacles {
                    assert!(ob.distance_sq_to_point(&a.goal.center).sqrt() >= 0.2);
                }
                assert!(!static_collides(&a.footprint, &a.start, &inst.workspace));
            }
        }
    }
}
