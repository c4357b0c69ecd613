//! Workspace, footprints and the discrete-time collision predicates.
//!
//! All checks run at the integration resolution `dt`: a segment is valid iff
//! every stored sample is valid. Contact counts as collision-free, i.e. every
//! predicate uses strict inequalities.

use serde::{Deserialize, Serialize};

use crate::dynamics::{StateVector, Trajectory};

/// Axis-aligned box, 2D rectangle or 3D prism depending on `dim`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aabb {
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

impl Aabb {
    pub fn new(min: Vec<f64>, max: Vec<f64>) -> Aabb {
        assert_eq!(min.len(), max.len());
        assert!(min.iter().zip(&max).all(|(a, b)| a < b), "degenerate box");
        Aabb { min, max }
    }

    pub fn dim(&self) -> usize {
        self.min.len()
    }

    pub fn contains_point(&self, p: &[f64]) -> bool {
        p.iter()
            .zip(self.min.iter().zip(&self.max))
            .all(|(v, (lo, hi))| *v >= *lo && *v <= *hi)
    }

    /// Squared distance from `p` to the closest point of the box.
    pub fn distance_sq_to_point(&self, p: &[f64]) -> f64 {
        let mut d2 = 0.0;
        for (v, (lo, hi)) in p.iter().zip(self.min.iter().zip(&self.max)) {
            let c = v.clamp(*lo, *hi);
            d2 += (v - c) * (v - c);
        }
        d2
    }

    pub fn contains_box(&self, other: &Aabb) -> bool {
        self.min
            .iter()
            .zip(&other.min)
            .all(|(a, b)| b >= a)
            && self.max.iter().zip(&other.max).all(|(a, b)| b <= a)
    }
}

/// Planning workspace: outer bounds plus axis-aligned static obstacles.
#[derive(Debug, Clone, PartialEq)]
pub struct Workspace {
    pub bounds: Aabb,
    pub obstacles: Vec<Aabb>,
}

impl Workspace {
    pub fn new(bounds: Aabb, obstacles: Vec<Aabb>) -> Workspace {
        for ob in &obstacles {
            assert_eq!(ob.dim(), bounds.dim(), "obstacle dimension mismatch");
            assert!(bounds.contains_box(ob), "obstacle outside workspace bounds");
        }
        Workspace { bounds, obstacles }
    }

    pub fn dim(&self) -> usize {
        self.bounds.dim()
    }
}

/// Body shape carried by an agent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Footprint {
    Circle { radius: f64 },
    OrientedRect { length: f64, width: f64 },
    Sphere { radius: f64 },
}

impl Footprint {
    /// Radius of the smallest circle/sphere covering the footprint.
    pub fn circumradius(&self) -> f64 {
        match self {
            Footprint::Circle { radius } | Footprint::Sphere { radius } => *radius,
            Footprint::OrientedRect { length, width } => {
                0.5 * (length * length + width * width).sqrt()
            }
        }
    }

    pub fn workspace_dim(&self) -> usize {
        match self {
            Footprint::Circle { .. } | Footprint::OrientedRect { .. } => 2,
            Footprint::Sphere { .. } => 3,
        }
    }
}

/// Goal region: a ball over the position components only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GoalRegion {
    pub center: Vec<f64>,
    pub radius: f64,
}

impl GoalRegion {
    pub fn new(center: Vec<f64>, radius: f64) -> GoalRegion {
        assert!(radius > 0.0);
        GoalRegion { center, radius }
    }

    pub fn contains(&self, x: &StateVector) -> bool {
        let d2: f64 = x
            .pos()
            .iter()
            .zip(&self.center)
            .map(|(a, b)| (a - b) * (a - b))
            .sum();
        d2 <= self.radius * self.radius
    }
}

/// A committed trajectory treated as a time-indexed moving obstacle.
///
/// States are pre-flattened to one entry per step; queries past the final
/// timestamp return the final state (the agent parks at its terminal state).
#[derive(Debug, Clone)]
pub struct DynamicObstacle {
    pub footprint: Footprint,
    states: Vec<StateVector>,
}

impl DynamicObstacle {
    pub fn from_trajectory(footprint: Footprint, traj: &Trajectory) -> DynamicObstacle {
        DynamicObstacle {
            footprint,
            states: traj.sample_states(),
        }
    }

    pub fn from_states(footprint: Footprint, states: Vec<StateVector>) -> DynamicObstacle {
        assert!(!states.is_empty());
        DynamicObstacle { footprint, states }
    }

    /// Last step at which the obstacle is still moving.
    pub fn last_step(&self) -> u64 {
        (self.states.len() - 1) as u64
    }

    #[inline]
    pub fn state_at_step(&self, step: u64) -> &StateVector {
        let i = (step as usize).min(self.states.len() - 1);
        &self.states[i]
    }
}

/// A spatiotemporal avoidance obligation produced by conflict resolution:
/// over `[start_step, end_step]` the constrained agent must not collide with
/// the opposing agent's stored trajectory slice.
#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub agent: usize,
    pub start_step: u64,
    pub end_step: u64,
    pub opposing_footprint: Footprint,
    /// Opposing states at steps `start_step..=end_step`.
    pub opposing_states: Vec<StateVector>,
}

impl Constraint {
    pub fn active_at(&self, step: u64) -> bool {
        step >= self.start_step && step <= self.end_step
    }

    pub fn opposing_at(&self, step: u64) -> &StateVector {
        debug_assert!(self.active_at(step));
        &self.opposing_states[(step - self.start_step) as usize]
    }
}

/// 2D rotation of `v` by `-theta` (into a rectangle's body frame).
#[inline]
fn to_body_frame(v: [f64; 2], theta: f64) -> [f64; 2] {
    let (s, c) = theta.sin_cos();
    [c * v[0] + s * v[1], -s * v[0] + c * v[1]]
}

fn rect_corners(center: &[f64], theta: f64, length: f64, width: f64) -> [[f64; 2]; 4] {
    let (s, c) = theta.sin_cos();
    let hx = [c * length * 0.5, s * length * 0.5];
    let hy = [-s * width * 0.5, c * width * 0.5];
    let cx = center[0];
    let cy = center[1];
    [
        [cx + hx[0] + hy[0], cy + hx[1] + hy[1]],
        [cx + hx[0] - hy[0], cy + hx[1] - hy[1]],
        [cx - hx[0] + hy[0], cy - hx[1] + hy[1]],
        [cx - hx[0] - hy[0], cy - hx[1] - hy[1]],
    ]
}

/// Project points onto an axis and return the (min, max) interval.
fn project(points: &[[f64; 2]], axis: [f64; 2]) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for p in points {
        let d = p[0] * axis[0] + p[1] * axis[1];
        lo = lo.min(d);
        hi = hi.max(d);
    }
    (lo, hi)
}

/// Separating-axis test over the given axes; touching counts as separated.
fn sat_overlap(a: &[[f64; 2]], b: &[[f64; 2]], axes: &[[f64; 2]]) -> bool {
    for axis in axes {
        let (alo, ahi) = project(a, *axis);
        let (blo, bhi) = project(b, *axis);
        if ahi <= blo || bhi <= alo {
            return false;
        }
    }
    true
}

/// Signed gap estimate used by tests to skip configurations near contact:
/// the largest projected separation (positive = separated) over the axes.
#[cfg(test)]
fn sat_gap(a: &[[f64; 2]], b: &[[f64; 2]], axes: &[[f64; 2]]) -> f64 {
    let mut gap = f64::NEG_INFINITY;
    for axis in axes {
        let n = (axis[0] * axis[0] + axis[1] * axis[1]).sqrt();
        let (alo, ahi) = project(a, *axis);
        let (blo, bhi) = project(b, *axis);
        let g = (blo - ahi).max(alo - bhi) / n;
        gap = gap.max(g);
    }
    gap
}

fn rect_axes(theta: f64) -> [[f64; 2]; 2] {
    let (s, c) = theta.sin_cos();
    [[c, s], [-s, c]]
}

/// True iff the footprint at `x` intersects a static obstacle or leaves the
/// workspace bounds.
pub fn static_collides(fp: &Footprint, x: &StateVector, ws: &Workspace) -> bool {
    debug_assert_eq!(fp.workspace_dim(), ws.dim(), "footprint/workspace dimension mismatch");
    match fp {
        Footprint::Circle { radius } | Footprint::Sphere { radius } => {
            let p = x.pos();
            for (v, (lo, hi)) in p.iter().zip(ws.bounds.min.iter().zip(&ws.bounds.max)) {
                if v - radius < *lo || v + radius > *hi {
                    return true;
                }
            }
            let r2 = radius * radius;
            ws.obstacles.iter().any(|ob| ob.distance_sq_to_point(p) < r2)
        }
        Footprint::OrientedRect { length, width } => {
            let theta = x.rem()[0];
            let corners = rect_corners(x.pos(), theta, *length, *width);
            for c in &corners {
                if !ws.bounds.contains_point(c) {
                    return true;
                }
            }
            ws.obstacles.iter().any(|ob| {
                // Cheap prefilter before the axis test.
                if ob.distance_sq_to_point(x.pos()) >= fp.circumradius() * fp.circumradius() {
                    return false;
                }
                let box_pts = [
                    [ob.min[0], ob.min[1]],
                    [ob.max[0], ob.min[1]],
                    [ob.min[0], ob.max[1]],
                    [ob.max[0], ob.max[1]],
                ];
                let axes = [
                    [1.0, 0.0],
                    [0.0, 1.0],
                    rect_axes(theta)[0],
                    rect_axes(theta)[1],
                ];
                sat_overlap(&corners, &box_pts, &axes)
            })
        }
    }
}

/// True iff the two footprints at the given states overlap.
pub fn agents_collide(
    fp_a: &Footprint,
    xa: &StateVector,
    fp_b: &Footprint,
    xb: &StateVector,
) -> bool {
    match (fp_a, fp_b) {
        (Footprint::Circle { radius: ra }, Footprint::Circle { radius: rb })
        | (Footprint::Sphere { radius: ra }, Footprint::Sphere { radius: rb }) => {
            let d2: f64 = xa
                .pos()
                .iter()
                .zip(xb.pos())
                .map(|(a, b)| (a - b) * (a - b))
                .sum();
            d2 < (ra + rb) * (ra + rb)
        }
        (
            Footprint::OrientedRect { length: la, width: wa },
            Footprint::OrientedRect { length: lb, width: wb },
        ) => {
            let ta = xa.rem()[0];
            let tb = xb.rem()[0];
            let ca = rect_corners(xa.pos(), ta, *la, *wa);
            let cb = rect_corners(xb.pos(), tb, *lb, *wb);
            let axes = [
                rect_axes(ta)[0],
                rect_axes(ta)[1],
                rect_axes(tb)[0],
                rect_axes(tb)[1],
            ];
            sat_overlap(&ca, &cb, &axes)
        }
        (Footprint::Circle { radius }, Footprint::OrientedRect { length, width }) => {
            circle_rect_collide(xa.pos(), *radius, xb.pos(), xb.rem()[0], *length, *width)
        }
        (Footprint::OrientedRect { length, width }, Footprint::Circle { radius }) => {
            circle_rect_collide(xb.pos(), *radius, xa.pos(), xa.rem()[0], *length, *width)
        }
        _ => panic!("mixed-dimension footprint pair"),
    }
}

fn circle_rect_collide(
    center: &[f64],
    radius: f64,
    rect_center: &[f64],
    theta: f64,
    length: f64,
    width: f64,
) -> bool {
    let rel = [center[0] - rect_center[0], center[1] - rect_center[1]];
    let local = to_body_frame(rel, theta);
    let cx = local[0].clamp(-0.5 * length, 0.5 * length);
    let cy = local[1].clamp(-0.5 * width, 0.5 * width);
    let dx = local[0] - cx;
    let dy = local[1] - cy;
    dx * dx + dy * dy < radius * radius
}

/// Validate a segment at every sample against the static environment,
/// time-indexed moving obstacles and active constraints.
pub fn segment_valid(
    fp: &Footprint,
    seg: &crate::dynamics::TrajectorySegment,
    ws: &Workspace,
    dyn_obstacles: &[DynamicObstacle],
    constraints: &[Constraint],
) -> bool {
    for (k, state) in seg.states.iter().enumerate() {
        let step = seg.start_step + k as u64;
        if static_collides(fp, state, ws) {
            return false;
        }
        for ob in dyn_obstacles {
            if agents_collide(fp, state, &ob.footprint, ob.state_at_step(step)) {
                return false;
            }
        }
        for c in constraints {
            if c.active_at(step)
                && agents_collide(fp, state, &c.opposing_footprint, c.opposing_at(step))
            {
                return false;
            }
        }
    }
    true
}

/// Check that a state, held fixed from `arrival_step` onward, keeps clear of
/// moving obstacles and constraints for all later steps. Needed because an
/// agent parks at its terminal state while others may still be moving.
pub fn hold_valid(
    fp: &Footprint,
    state: &StateVector,
    arrival_step: u64,
    dyn_obstacles: &[DynamicObstacle],
    constraints: &[Constraint],
) -> bool {
    for ob in dyn_obstacles {
        // Past both arrival times the configuration is static; one check at
        // the later parked step covers the rest.
        let last = ob.last_step().max(arrival_step + 1);
        let mut step = arrival_step + 1;
        while step <= last {
            if agents_collide(fp, state, &ob.footprint, ob.state_at_step(step)) {
                return false;
            }
            step += 1;
        }
    }
    for c in constraints {
        let from = c.start_step.max(arrival_step + 1);
        for step in from..=c.end_step {
            if agents_collide(fp, state, &c.opposing_footprint, c.opposing_at(step)) {
                return false;
            }
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{ControlInput, SystemId, SystemModel, MAX_POS_DIM};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn ws2d() -> Workspace {
        Workspace::new(
            Aabb::new(vec![0.0, 0.0], vec![20.0, 20.0]),
            vec![Aabb::new(vec![10.0, 10.0], vec![11.0, 11.0])],
        )
    }

    #[test]
    fn circle_far_from_box_is_free() {
        let ws = ws2d();
        let x = StateVector::new(&[5.0, 5.0], &[0.0]);
        assert!(!static_collides(&Footprint::Circle { radius: 0.4 }, &x, &ws));
    }

    #[test]
    fn circle_near_box_face_collides() {
        let ws = ws2d();
        // 0.3 m from the x = 10 face, radius 0.4.
        let x = StateVector::new(&[9.7, 10.5], &[0.0]);
        assert!(static_collides(&Footprint::Circle { radius: 0.4 }, &x, &ws));
        let x = StateVector::new(&[9.55, 10.5], &[0.0]);
        assert!(!static_collides(&Footprint::Circle { radius: 0.4 }, &x, &ws));
    }

    #[test]
    fn out_of_bounds_counts_as_collision() {
        let ws = ws2d();
        let x = StateVector::new(&[0.2, 5.0], &[0.0]);
        assert!(static_collides(&Footprint::Circle { radius: 0.4 }, &x, &ws));
        let rect = Footprint::OrientedRect { length: 0.7, width: 0.4 };
        let x = StateVector::new(&[0.2, 5.0], &[0.0, 0.0, 0.0]);
        assert!(static_collides(&rect, &x, &ws));
    }

    #[test]
    fn circle_pair_threshold() {
        let fp = Footprint::Circle { radius: 0.4 };
        let a = StateVector::new(&[0.0, 0.0], &[0.0]);
        let far = StateVector::new(&[0.81, 0.0], &[0.0]);
        let near = StateVector::new(&[0.79, 0.0], &[0.0]);
        assert!(!agents_collide(&fp, &a, &fp, &far));
        assert!(agents_collide(&fp, &a, &fp, &near));
    }

    #[test]
    fn parallel_rects_with_gap_are_free() {
        let fp = Footprint::OrientedRect { length: 0.7, width: 0.4 };
        let a = StateVector::new(&[0.0, 0.0], &[0.0, 0.0, 0.0]);
        let b = StateVector::new(&[0.0, 0.45], &[0.0, 0.0, 0.0]); // lateral gap 0.05
        assert!(!agents_collide(&fp, &a, &fp, &b));
        let c = StateVector::new(&[0.0, 0.35], &[0.0, 0.0, 0.0]); // overlap 0.05
        assert!(agents_collide(&fp, &a, &fp, &c));
    }

    #[test]
    fn tilted_rect_corner_into_box() {
        // Rect at 45 degrees with a corner inside the obstacle.
        let ws = ws2d();
        let fp = Footprint::OrientedRect { length: 0.7, width: 0.4 };
        let theta = std::f64::consts::FRAC_PI_4;
        let x = StateVector::new(&[9.8, 9.8], &[theta, 0.0, 0.0]);
        assert!(static_collides(&fp, &x, &ws));
        // Same heading but pulled away along the diagonal.
        let x = StateVector::new(&[9.3, 9.3], &[theta, 0.0, 0.0]);
        assert!(!static_collides(&fp, &x, &ws));
    }

    fn rect_contains_point(center: &[f64], theta: f64, length: f64, width: f64, p: &[f64]) -> bool {
        let local = to_body_frame([p[0] - center[0], p[1] - center[1]], theta);
        local[0].abs() <= 0.5 * length && local[1].abs() <= 0.5 * width
    }

    /// `n` points evenly spaced along the rectangle's perimeter.
    fn rect_perimeter_points(corners: &[[f64; 2]; 4], n: usize) -> Vec<[f64; 2]> {
        // Corner order from rect_corners: ++, +-, -+, -- in half-extent
        // space; walk them as a closed loop ++ -> +- -> -- -> -+.
        let loop_order = [corners[0], corners[1], corners[3], corners[2]];
        let mut pts = Vec::with_capacity(n);
        for e in 0..4 {
            let a = loop_order[e];
            let b = loop_order[(e + 1) % 4];
            for k in 0..n / 4 {
                let t = k as f64 / (n / 4) as f64;
                pts.push([a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])]);
            }
        }
        pts
    }

    /// Membership oracle for rectangle overlap, independent of the axis
    /// test: contained corners plus dense perimeter sampling both ways.
    fn rects_overlap_oracle(
        ca: &[f64],
        ta: f64,
        la: f64,
        wa: f64,
        cb: &[f64],
        tb: f64,
        lb: f64,
        wb: f64,
    ) -> bool {
        let corners_a = rect_corners(ca, ta, la, wa);
        let corners_b = rect_corners(cb, tb, lb, wb);
        corners_a
            .iter()
            .any(|p| rect_contains_point(cb, tb, lb, wb, p))
            || corners_b
                .iter()
                .any(|p| rect_contains_point(ca, ta, la, wa, p))
            || rect_perimeter_points(&corners_a, 10_000)
                .iter()
                .any(|p| rect_contains_point(cb, tb, lb, wb, p))
            || rect_perimeter_points(&corners_b, 10_000)
                .iter()
                .any(|p| rect_contains_point(ca, ta, la, wa, p))
    }

    #[test]
    fn static_predicate_matches_sampling_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let ob = Aabb::new(vec![4.0, 4.0], vec![6.0, 5.5]);
        let ws = Workspace::new(Aabb::new(vec![-20.0, -20.0], vec![30.0, 30.0]), vec![ob.clone()]);

        // Circle footprint: center plus a dense ring of boundary points.
        let radius = 0.4;
        let fp = Footprint::Circle { radius };
        let mut checked = 0;
        for _ in 0..1000 {
            let pos = [rng.gen_range(3.0..7.0), rng.gen_range(3.0..6.5)];
            let gap = ob.distance_sq_to_point(&pos).sqrt() - radius;
            if gap.abs() < 1e-3 {
                continue;
            }
            let x = StateVector::new(&pos, &[0.0]);
            let predicted = static_collides(&fp, &x, &ws);
            let mut oracle = ob.contains_point(&pos);
            for k in 0..10_000 {
                let ang = k as f64 / 10_000.0 * std::f64::consts::TAU;
                let p = [pos[0] + radius * ang.cos(), pos[1] + radius * ang.sin()];
                if ob.contains_point(&p) {
                    oracle = true;
                    break;
                }
            }
            assert_eq!(predicted, oracle, "circle at {pos:?} gap {gap}");
            checked += 1;
        }
        assert!(checked > 800);

        // Oriented rectangle footprint against the box.
        let (length, width) = (0.7, 0.4);
        let fp = Footprint::OrientedRect { length, width };
        let box_center = [5.0, 4.75];
        let (bl, bw) = (2.0, 1.5);
        let mut checked = 0;
        for _ in 0..1000 {
            let pos = [rng.gen_range(3.0..7.0), rng.gen_range(3.0..6.5)];
            let theta = rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI);
            let corners = rect_corners(&pos, theta, length, width);
            let box_pts = [
                [ob.min[0], ob.min[1]],
                [ob.max[0], ob.min[1]],
                [ob.min[0], ob.max[1]],
                [ob.max[0], ob.max[1]],
            ];
            let axes = [
                [1.0, 0.0],
                [0.0, 1.0],
                rect_axes(theta)[0],
                rect_axes(theta)[1],
            ];
            if sat_gap(&corners, &box_pts, &axes).abs() < 1e-3 {
                continue;
            }
            let x = StateVector::new(&pos, &[theta, 0.0, 0.0]);
            let predicted = static_collides(&fp, &x, &ws);
            let oracle =
                rects_overlap_oracle(&pos, theta, length, width, &box_center, 0.0, bl, bw);
            assert_eq!(predicted, oracle, "rect at {pos:?} theta {theta}");
            checked += 1;
        }
        assert!(checked > 800);
    }

    #[test]
    fn pairwise_predicate_matches_sampling_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        let rect = Footprint::OrientedRect { length: 0.7, width: 0.4 };
        let mut checked = 0;
        for _ in 0..1000 {
            let xa = StateVector::new(
                &[rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)],
                &[rng.gen_range(-3.0..3.0), 0.0, 0.0],
            );
            let xb = StateVector::new(
                &[rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)],
                &[rng.gen_range(-3.0..3.0), 0.0, 0.0],
            );
            let (ta, tb) = (xa.rem()[0], xb.rem()[0]);
            let ca = rect_corners(xa.pos(), ta, 0.7, 0.4);
            let cb = rect_corners(xb.pos(), tb, 0.7, 0.4);
            let axes = [
                rect_axes(ta)[0],
                rect_axes(ta)[1],
                rect_axes(tb)[0],
                rect_axes(tb)[1],
            ];
            if sat_gap(&ca, &cb, &axes).abs() < 1e-3 {
                continue;
            }
            let predicted = agents_collide(&rect, &xa, &rect, &xb);
            let oracle =
                rects_overlap_oracle(xa.pos(), ta, 0.7, 0.4, xb.pos(), tb, 0.7, 0.4);
            assert_eq!(predicted, oracle);
            checked += 1;
        }
        assert!(checked > 800);
    }

    #[test]
    fn pairwise_symmetry_and_monotonicity() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..1000 {
            let ra = rng.gen_range(0.1..0.6);
            let rb = rng.gen_range(0.1..0.6);
            let a = StateVector::new(
                &[rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)],
                &[0.0],
            );
            let b = StateVector::new(
                &[rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)],
                &[0.0],
            );
            let fa = Footprint::Circle { radius: ra };
            let fb = Footprint::Circle { radius: rb };
            assert_eq!(
                agents_collide(&fa, &a, &fb, &b),
                agents_collide(&fb, &b, &fa, &a)
            );
            // Inflating a radius never frees a colliding pair.
            if agents_collide(&fa, &a, &fb, &b) {
                let bigger = Footprint::Circle { radius: ra + 0.2 };
                assert!(agents_collide(&bigger, &a, &fb, &b));
            }
        }
    }

    #[test]
    fn dynamic_obstacle_terminal_hold() {
        let m = SystemModel::new(SystemId::Unicycle);
        let x0 = m.state(&[1.0, 1.0], &[0.0]);
        let seg = m.propagate(&x0, &ControlInput::new(&[0.5, 0.0]), 10);
        let traj = Trajectory::new(x0, vec![seg]);
        let ob = DynamicObstacle::from_trajectory(Footprint::Circle { radius: 0.4 }, &traj);
        let terminal = *ob.state_at_step(10);
        assert_eq!(*ob.state_at_step(1010), terminal); // 100 s past arrival
    }

    #[test]
    fn segment_validity_time_indexed() {
        let m = SystemModel::new(SystemId::Unicycle);
        let ws = Workspace::new(Aabb::new(vec![0.0, 0.0], vec![20.0, 20.0]), vec![]);
        let fp = Footprint::Circle { radius: 0.4 };

        // Obstacle crosses x = 5 around t in [0, 2]; the segment sits there.
        let ob_start = m.state(&[5.0, 3.0], &[std::f64::consts::FRAC_PI_2]);
        let ob_seg = m.propagate(&ob_start, &ControlInput::new(&[0.5, 0.0]), 40);
        let ob_traj = Trajectory::new(ob_start, vec![ob_seg]);
        let ob = DynamicObstacle::from_trajectory(fp, &ob_traj);

        let still = m.state(&[5.0, 4.0], &[0.0]);
        let mut seg = m.propagate(&still, &ControlInput::new(&[0.0, 0.0]), 30);

        // Standing in the swept corridor while the obstacle passes: invalid.
        seg.start_step = 0;
        assert!(!segment_valid(&fp, &seg, &ws, std::slice::from_ref(&ob), &[]));

        // Same motion 10 s later: obstacle has passed and parked at y = 7.
        seg.start_step = 100;
        assert!(segment_valid(&fp, &seg, &ws, std::slice::from_ref(&ob), &[]));

        // Vacuous context.
        assert!(segment_valid(&fp, &seg, &ws, &[], &[]));
    }
}
