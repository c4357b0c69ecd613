//! Kinodynamic system models and fixed-step forward propagation.
//!
//! Three models are supported: a unicycle (UC), a second-order car (SOC) and
//! a 3D double integrator (DI). Every state splits into workspace position
//! components and a translation-invariant remainder (`rem`): heading,
//! velocities, steering angle. Dynamics never read the position, which is
//! what makes precomputed motion segments reusable anywhere in the workspace.

use std::f64::consts::PI;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::DynamicsError;

/// Maximum workspace dimension (3D double integrator).
pub const MAX_POS_DIM: usize = 3;
/// Maximum remainder dimension (SOC: heading, speed, steering).
pub const MAX_REM_DIM: usize = 3;
/// Maximum control dimension.
pub const MAX_CONTROL_DIM: usize = 3;

/// Fixed integration and collision-checking time step in seconds.
pub const DEFAULT_DT: f64 = 0.1;

/// Normalize an angle into `(-pi, pi]`.
#[inline]
pub fn wrap_angle(a: f64) -> f64 {
    let two_pi = 2.0 * PI;
    let mut r = a % two_pi;
    if r <= -PI {
        r += two_pi;
    } else if r > PI {
        r -= two_pi;
    }
    r
}

/// Smallest absolute difference between two angles under wrap-around.
#[inline]
pub fn wrapped_angle_diff(a: f64, b: f64) -> f64 {
    let d = (a - b).abs() % (2.0 * PI);
    d.min(2.0 * PI - d)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SystemId {
    /// Unicycle: state (x, y, theta), controls (v, omega).
    Unicycle,
    /// Second-order car: state (x, y, theta, v, phi), controls (a, omega).
    SecondOrderCar,
    /// 3D double integrator: state (p, v), controls a.
    DoubleIntegrator,
}

impl SystemId {
    pub fn as_str(&self) -> &'static str {
        match self {
            SystemId::Unicycle => "unicycle",
            SystemId::SecondOrderCar => "second_order_car",
            SystemId::DoubleIntegrator => "double_integrator",
        }
    }

    /// Short tag used in file names and CLI flags.
    pub fn tag(&self) -> &'static str {
        match self {
            SystemId::Unicycle => "uc",
            SystemId::SecondOrderCar => "soc",
            SystemId::DoubleIntegrator => "di",
        }
    }

    pub fn from_tag(tag: &str) -> Option<SystemId> {
        match tag.to_ascii_lowercase().as_str() {
            "uc" | "unicycle" => Some(SystemId::Unicycle),
            "soc" | "second_order_car" => Some(SystemId::SecondOrderCar),
            "di" | "double_integrator" => Some(SystemId::DoubleIntegrator),
            _ => None,
        }
    }
}

/// One translation-invariant state component.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RemComponent {
    /// Angular component, stored in `(-pi, pi]`, no feasibility bound.
    Angle,
    /// Scalar bounded to a closed interval; violating it makes a
    /// trajectory dynamically infeasible.
    Bounded { lo: f64, hi: f64 },
}

/// Agent state: workspace position plus translation-invariant remainder.
///
/// Backed by fixed-size arrays so states are `Copy`; unused slots are zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateVector {
    pos: [f64; MAX_POS_DIM],
    rem: [f64; MAX_REM_DIM],
    pos_dim: u8,
    rem_dim: u8,
}

impl StateVector {
    pub fn new(pos: &[f64], rem: &[f64]) -> StateVector {
        assert!(pos.len() <= MAX_POS_DIM && rem.len() <= MAX_REM_DIM);
        let mut s = StateVector {
            pos: [0.0; MAX_POS_DIM],
            rem: [0.0; MAX_REM_DIM],
            pos_dim: pos.len() as u8,
            rem_dim: rem.len() as u8,
        };
        s.pos[..pos.len()].copy_from_slice(pos);
        s.rem[..rem.len()].copy_from_slice(rem);
        s
    }

    #[inline]
    pub fn pos(&self) -> &[f64] {
        &self.pos[..self.pos_dim as usize]
    }

    #[inline]
    pub fn rem(&self) -> &[f64] {
        &self.rem[..self.rem_dim as usize]
    }

    #[inline]
    pub fn pos_dim(&self) -> usize {
        self.pos_dim as usize
    }

    #[inline]
    pub fn rem_dim(&self) -> usize {
        self.rem_dim as usize
    }

    /// The translation-invariant key of this state: its remainder components.
    #[inline]
    pub fn key(&self) -> &[f64] {
        self.rem()
    }

    /// Shift the position by `beta`, leaving the remainder untouched.
    pub fn translate(&self, beta: &[f64]) -> StateVector {
        assert_eq!(beta.len(), self.pos_dim as usize, "translation dimension mismatch");
        let mut out = *self;
        for (p, b) in out.pos[..beta.len()].iter_mut().zip(beta) {
            *p += b;
        }
        out
    }

    /// Euclidean distance between the position components only.
    pub fn pos_distance(&self, other: &StateVector) -> f64 {
        self.pos()
            .iter()
            .zip(other.pos())
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }
}

impl Serialize for StateVector {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut st = serializer.serialize_struct("StateVector", 2)?;
        st.serialize_field("pos", self.pos())?;
        st.serialize_field("rem", self.rem())?;
        st.end()
    }
}

impl<'de> Deserialize<'de> for StateVector {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Raw {
            pos: Vec<f64>,
            rem: Vec<f64>,
        }
        let raw = Raw::deserialize(deserializer)?;
        if raw.pos.len() > MAX_POS_DIM || raw.rem.len() > MAX_REM_DIM {
            return Err(serde::de::Error::custom("state dimension out of range"));
        }
        Ok(StateVector::new(&raw.pos, &raw.rem))
    }
}

/// Constant control input applied over a whole segment (zero-order hold).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControlInput {
    vals: [f64; MAX_CONTROL_DIM],
    dim: u8,
}

impl ControlInput {
    pub fn new(vals: &[f64]) -> ControlInput {
        assert!(vals.len() <= MAX_CONTROL_DIM);
        let mut c = ControlInput {
            vals: [0.0; MAX_CONTROL_DIM],
            dim: vals.len() as u8,
        };
        c.vals[..vals.len()].copy_from_slice(vals);
        c
    }

    #[inline]
    pub fn as_slice(&self) -> &[f64] {
        &self.vals[..self.dim as usize]
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim as usize
    }
}

impl Serialize for ControlInput {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        self.as_slice().serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for ControlInput {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let vals = Vec::<f64>::deserialize(deserializer)?;
        if vals.len() > MAX_CONTROL_DIM {
            return Err(serde::de::Error::custom("control dimension out of range"));
        }
        Ok(ControlInput::new(&vals))
    }
}

/// State derivative returned by [`SystemModel::derivative`].
#[derive(Debug, Clone, Copy)]
pub struct StateDerivative {
    vals: [f64; MAX_POS_DIM + MAX_REM_DIM],
    dim: u8,
}

impl StateDerivative {
    #[inline]
    pub fn as_slice(&self) -> &[f64] {
        &self.vals[..self.dim as usize]
    }
}

/// States sampled at `dt` under one constant control.
///
/// `states` holds `steps + 1` entries at offsets `0, dt, ..., steps * dt`
/// from the segment start. `start_step` is the absolute offset of the first
/// state within the parent trajectory, in integration steps.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectorySegment {
    pub control: ControlInput,
    pub steps: u32,
    pub start_step: u64,
    pub states: Vec<StateVector>,
}

impl TrajectorySegment {
    #[inline]
    pub fn start(&self) -> &StateVector {
        &self.states[0]
    }

    #[inline]
    pub fn terminal(&self) -> &StateVector {
        &self.states[self.states.len() - 1]
    }

    pub fn duration_secs(&self, dt: f64) -> f64 {
        f64::from(self.steps) * dt
    }

    /// Keep only the first `steps` integration steps of this segment.
    pub fn truncated(&self, steps: u32) -> TrajectorySegment {
        assert!(steps >= 1 && steps <= self.steps);
        TrajectorySegment {
            control: self.control,
            steps,
            start_step: self.start_step,
            states: self.states[..=steps as usize].to_vec(),
        }
    }
}

/// A single agent's motion: a start state followed by contiguous segments.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub start: StateVector,
    pub segments: Vec<TrajectorySegment>,
}

impl Trajectory {
    pub fn new(start: StateVector, segments: Vec<TrajectorySegment>) -> Trajectory {
        Trajectory { start, segments }
    }

    pub fn duration_steps(&self) -> u64 {
        self.segments.iter().map(|s| u64::from(s.steps)).sum()
    }

    pub fn duration_secs(&self, dt: f64) -> f64 {
        self.duration_steps() as f64 * dt
    }

    pub fn terminal(&self) -> &StateVector {
        self.segments.last().map(|s| s.terminal()).unwrap_or(&self.start)
    }

    /// States at every step `0..=duration_steps`, junctions deduplicated.
    pub fn sample_states(&self) -> Vec<StateVector> {
        let mut out = Vec::with_capacity(self.duration_steps() as usize + 1);
        out.push(self.start);
        for seg in &self.segments {
            out.extend_from_slice(&seg.states[1..]);
        }
        out
    }

    /// Control active over `[k*dt, (k+1)*dt)`, or `None` past the end.
    pub fn control_at_step(&self, k: u64) -> Option<ControlInput> {
        let mut acc = 0u64;
        for seg in &self.segments {
            let next = acc + u64::from(seg.steps);
            if k < next {
                return Some(seg.control);
            }
            acc = next;
        }
        None
    }
}

/// One of the three kinodynamic systems with its exact parameter set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemModel {
    pub system: SystemId,
    pub dt: f64,
}

// Geometry parameters.
const UC_RADIUS: f64 = 0.4;
const SOC_LENGTH: f64 = 0.7;
const SOC_WIDTH: f64 = 0.4;
const SOC_WHEELBASE: f64 = 0.7;
const DI_RADIUS: f64 = 0.1;

const UC_CONTROL_BOUNDS: [(f64, f64); 2] = [(-0.5, 0.5), (-0.5, 0.5)];
const SOC_CONTROL_BOUNDS: [(f64, f64); 2] = [(-2.0, 2.0), (-0.5, 0.5)];
const DI_CONTROL_BOUNDS: [(f64, f64); 3] = [(-2.0, 2.0), (-2.0, 2.0), (-2.0, 2.0)];

const UC_REM: [RemComponent; 1] = [RemComponent::Angle];
const SOC_REM: [RemComponent; 3] = [
    RemComponent::Angle,
    RemComponent::Bounded { lo: -1.0, hi: 1.0 },
    RemComponent::Bounded { lo: -PI / 3.0, hi: PI / 3.0 },
];
const DI_REM: [RemComponent; 3] = [
    RemComponent::Bounded { lo: -0.5, hi: 0.5 },
    RemComponent::Bounded { lo: -0.5, hi: 0.5 },
    RemComponent::Bounded { lo: -0.5, hi: 0.5 },
];

impl SystemModel {
    pub fn new(system: SystemId) -> SystemModel {
        SystemModel { system, dt: DEFAULT_DT }
    }

    pub fn workspace_dim(&self) -> usize {
        match self.system {
            SystemId::Unicycle | SystemId::SecondOrderCar => 2,
            SystemId::DoubleIntegrator => 3,
        }
    }

    pub fn state_dim(&self) -> usize {
        self.workspace_dim() + self.rem_spec().len()
    }

    pub fn control_dim(&self) -> usize {
        self.control_bounds().len()
    }

    pub fn control_bounds(&self) -> &'static [(f64, f64)] {
        match self.system {
            SystemId::Unicycle => &UC_CONTROL_BOUNDS,
            SystemId::SecondOrderCar => &SOC_CONTROL_BOUNDS,
            SystemId::DoubleIntegrator => &DI_CONTROL_BOUNDS,
        }
    }

    pub fn rem_spec(&self) -> &'static [RemComponent] {
        match self.system {
            SystemId::Unicycle => &UC_REM,
            SystemId::SecondOrderCar => &SOC_REM,
            SystemId::DoubleIntegrator => &DI_REM,
        }
    }

    /// Body footprint in the workspace.
    pub fn footprint(&self) -> crate::geometry::Footprint {
        use crate::geometry::Footprint;
        match self.system {
            SystemId::Unicycle => Footprint::Circle { radius: UC_RADIUS },
            SystemId::SecondOrderCar => Footprint::OrientedRect {
                length: SOC_LENGTH,
                width: SOC_WIDTH,
            },
            SystemId::DoubleIntegrator => Footprint::Sphere { radius: DI_RADIUS },
        }
    }

    pub fn control_in_bounds(&self, u: &ControlInput) -> bool {
        u.dim() == self.control_dim()
            && u.as_slice()
                .iter()
                .zip(self.control_bounds())
                .all(|(v, (lo, hi))| *v >= *lo && *v <= *hi)
    }

    /// True when every bounded remainder component is within its interval.
    pub fn rem_in_bounds(&self, x: &StateVector) -> bool {
        x.rem()
            .iter()
            .zip(self.rem_spec())
            .all(|(v, spec)| match spec {
                RemComponent::Angle => true,
                RemComponent::Bounded { lo, hi } => *v >= *lo && *v <= *hi,
            })
    }

    /// Time derivative of the state under control `u`. Does not clamp.
    pub fn derivative(&self, x: &StateVector, u: &ControlInput) -> StateDerivative {
        assert_eq!(x.pos_dim() + x.rem_dim(), self.state_dim(), "state dimension mismatch");
        assert_eq!(u.dim(), self.control_dim(), "control dimension mismatch");
        let mut d = [0.0; MAX_POS_DIM + MAX_REM_DIM];
        let pd = self.workspace_dim();
        let rem = x.rem();
        let uv = u.as_slice();
        match self.system {
            SystemId::Unicycle => {
                let theta = rem[0];
                d[0] = uv[0] * theta.cos();
                d[1] = uv[0] * theta.sin();
                d[pd] = uv[1];
            }
            SystemId::SecondOrderCar => {
                let (theta, v, phi) = (rem[0], rem[1], rem[2]);
                d[0] = v * theta.cos();
                d[1] = v * theta.sin();
                d[pd] = v / SOC_WHEELBASE * phi.tan();
                d[pd + 1] = uv[0];
                d[pd + 2] = uv[1];
            }
            SystemId::DoubleIntegrator => {
                d[0] = rem[0];
                d[1] = rem[1];
                d[2] = rem[2];
                d[pd] = uv[0];
                d[pd + 1] = uv[1];
                d[pd + 2] = uv[2];
            }
        }
        StateDerivative {
            vals: d,
            dim: self.state_dim() as u8,
        }
    }

    /// One classic RK4 step of length `dt`, then angle normalization.
    fn rk4_step(&self, x: &StateVector, u: &ControlInput) -> StateVector {
        let dt = self.dt;
        let k1 = self.derivative(x, u);
        let k2 = self.derivative(&add_scaled(x, &k1, dt / 2.0), u);
        let k3 = self.derivative(&add_scaled(x, &k2, dt / 2.0), u);
        let k4 = self.derivative(&add_scaled(x, &k3, dt), u);

        let pd = x.pos_dim();
        let mut out = *x;
        for i in 0..x.pos_dim() + x.rem_dim() {
            let incr = dt / 6.0
                * (k1.vals[i] + 2.0 * k2.vals[i] + 2.0 * k3.vals[i] + k4.vals[i]);
            if i < pd {
                out.pos[i] += incr;
            } else {
                out.rem[i - pd] += incr;
            }
        }
        for (i, spec) in self.rem_spec().iter().enumerate() {
            if matches!(spec, RemComponent::Angle) {
                out.rem[i] = wrap_angle(out.rem[i]);
            }
        }
        out
    }

    /// Propagate `x0` under constant control `u` for `steps` RK4 steps,
    /// recording every intermediate state. The integrator accepts any
    /// control; bound checking belongs to [`SystemModel::is_dyn_feasible`].
    pub fn propagate(&self, x0: &StateVector, u: &ControlInput, steps: u32) -> TrajectorySegment {
        assert!(steps >= 1, "duration must be a positive multiple of dt");
        let mut states = Vec::with_capacity(steps as usize + 1);
        states.push(*x0);
        let mut x = *x0;
        for _ in 0..steps {
            x = self.rk4_step(&x, u);
            states.push(x);
        }
        TrajectorySegment {
            control: *u,
            steps,
            start_step: 0,
            states,
        }
    }

    /// True iff the control and every sampled state respect the system's
    /// bounds. Checked at `dt` resolution, i.e. at the stored samples.
    pub fn is_dyn_feasible(&self, seg: &TrajectorySegment) -> bool {
        self.control_in_bounds(&seg.control) && seg.states.iter().all(|x| self.rem_in_bounds(x))
    }

    pub fn sample_control(&self, rng: &mut impl Rng) -> ControlInput {
        let mut vals = [0.0; MAX_CONTROL_DIM];
        for (v, (lo, hi)) in vals.iter_mut().zip(self.control_bounds()) {
            *v = rng.gen_range(*lo..*hi);
        }
        ControlInput {
            vals,
            dim: self.control_dim() as u8,
        }
    }

    /// Duration in steps, uniform over `{1, ..., t_max_steps}`.
    pub fn sample_duration_steps(&self, t_max_steps: u32, rng: &mut impl Rng) -> u32 {
        rng.gen_range(1..=t_max_steps)
    }

    /// Remainder components drawn uniformly within their admissible sets.
    pub fn sample_rem(&self, rng: &mut impl Rng) -> [f64; MAX_REM_DIM] {
        let mut rem = [0.0; MAX_REM_DIM];
        for (v, spec) in rem.iter_mut().zip(self.rem_spec()) {
            *v = match spec {
                RemComponent::Angle => wrap_angle(rng.gen_range(-PI..PI)),
                RemComponent::Bounded { lo, hi } => rng.gen_range(*lo..*hi),
            };
        }
        rem
    }

    /// Canonical bundle start: position pinned to the origin, remainder
    /// sampled within bounds.
    pub fn sample_start_at_origin(&self, rng: &mut impl Rng) -> StateVector {
        let rem = self.sample_rem(rng);
        StateVector::new(
            &[0.0; MAX_POS_DIM][..self.workspace_dim()],
            &rem[..self.rem_spec().len()],
        )
    }

    pub fn state(&self, pos: &[f64], rem: &[f64]) -> StateVector {
        assert_eq!(pos.len(), self.workspace_dim());
        assert_eq!(rem.len(), self.rem_spec().len());
        StateVector::new(pos, rem)
    }
}

fn add_scaled(x: &StateVector, d: &StateDerivative, h: f64) -> StateVector {
    let pd = x.pos_dim();
    let mut out = *x;
    for i in 0..x.pos_dim() + x.rem_dim() {
        if i < pd {
            out.pos[i] += h * d.vals[i];
        } else {
            out.rem[i - pd] += h * d.vals[i];
        }
    }
    out
}

/// Convert a duration in seconds into integration steps, requiring it to be
/// a positive multiple of `dt` up to a small tolerance.
pub fn duration_to_steps(duration: f64, dt: f64) -> Result<u32, DynamicsError> {
    let steps = duration / dt;
    let rounded = steps.round();
    if duration <= 0.0 || rounded < 1.0 || (steps - rounded).abs() > 1e-9 {
        return Err(DynamicsError::BadDuration { duration, dt });
    }
    Ok(rounded as u32)
}
