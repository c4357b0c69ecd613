//! Offline-generated libraries of translation-invariant motion segments.
//!
//! Each edge is one constant-control rollout from a canonical start whose
//! position is pinned to the workspace origin. The start's remainder
//! components form the edge's key; at plan time, edges whose keys are close
//! to the expanding node's key are retrieved, ranked and re-propagated.

mod index;

pub use index::{key_distance, KeyIndex};

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::dynamics::{ControlInput, StateVector, SystemId, SystemModel};
use crate::error::BundleError;

const MAGIC: &[u8; 4] = b"KEBF";
const FORMAT_VERSION: u16 = 1;

/// One precomputed motion: key, constant control, duration and the terminal
/// state reached from the canonical origin start.
#[derive(Debug, Clone, PartialEq)]
pub struct Edge {
    pub key: [f64; crate::dynamics::MAX_REM_DIM],
    pub control: ControlInput,
    pub steps: u32,
    pub terminal: StateVector,
}

impl Edge {
    pub fn key_slice(&self, key_dim: usize) -> &[f64] {
        &self.key[..key_dim]
    }

    /// Canonical start state of this edge (origin position, key remainder).
    pub fn start_state(&self, model: &SystemModel) -> StateVector {
        StateVector::new(
            &[0.0; crate::dynamics::MAX_POS_DIM][..model.workspace_dim()],
            &self.key[..model.rem_spec().len()],
        )
    }

    /// Control and duration to re-propagate from an arbitrary state.
    pub fn params(&self) -> (ControlInput, u32) {
        (self.control, self.steps)
    }

    /// Endpoint predicted by translating the stored terminal to `at`'s
    /// position; used for ranking, never as an actual state.
    pub fn predicted_endpoint(&self, at: &StateVector) -> StateVector {
        self.terminal.translate(at.pos())
    }
}

#[derive(Debug, Clone)]
pub struct EdgeBundle {
    pub system: SystemId,
    pub dt: f64,
    pub t_max_steps: u32,
    pub seed: u64,
    pub edges: Vec<Edge>,
}

impl EdgeBundle {
    pub fn key_dim(&self) -> usize {
        SystemModel::new(self.system).rem_spec().len()
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn ensure_system(&self, model: &SystemModel) -> Result<(), BundleError> {
        if self.system != model.system {
            return Err(BundleError::SystemMismatch {
                expected: model.system,
                found: self.system,
            });
        }
        Ok(())
    }
}

/// Generate exactly `count` dynamically feasible edges by rejection.
/// Deterministic for a given `(model, count, t_max_steps, seed)`.
pub fn generate_bundle(
    model: &SystemModel,
    count: usize,
    t_max_steps: u32,
    seed: u64,
) -> EdgeBundle {
    assert!(count > 0 && t_max_steps >= 1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edges = Vec::with_capacity(count);
    while edges.len() < count {
        let x0 = model.sample_start_at_origin(&mut rng);
        let u = model.sample_control(&mut rng);
        let steps = model.sample_duration_steps(t_max_steps, &mut rng);
        let seg = model.propagate(&x0, &u, steps);
        if model.is_dyn_feasible(&seg) {
            let mut key = [0.0; crate::dynamics::MAX_REM_DIM];
            key[..x0.rem_dim()].copy_from_slice(x0.rem());
            edges.push(Edge {
                key,
                control: u,
                steps,
                terminal: *seg.terminal(),
            });
        }
    }
    EdgeBundle {
        system: model.system,
        dt: model.dt,
        t_max_steps,
        seed,
        edges,
    }
}

fn system_code(system: SystemId) -> u8 {
    match system {
        SystemId::Unicycle => 0,
        SystemId::SecondOrderCar => 1,
        SystemId::DoubleIntegrator => 2,
    }
}

fn system_from_code(code: u8) -> Result<SystemId, BundleError> {
    match code {
        0 => Ok(SystemId::Unicycle),
        1 => Ok(SystemId::SecondOrderCar),
        2 => Ok(SystemId::DoubleIntegrator),
        other => Err(BundleError::BadSystem(other)),
    }
}

/// Header byte count of the bundle file layout.
pub const HEADER_BYTES: u64 = 4 + 2 + 1 + 1 + 8 + 4 + 8 + 8;

/// Fixed per-edge record size for a system: key, control, step count,
/// terminal state, all little-endian.
pub fn record_bytes(system: SystemId) -> u64 {
    let m = SystemModel::new(system);
    let key = m.rem_spec().len() as u64 * 8;
    let control = m.control_dim() as u64 * 8;
    let terminal = m.state_dim() as u64 * 8;
    key + control + 4 + terminal
}

pub fn save(bundle: &EdgeBundle, path: &Path) -> Result<(), BundleError> {
    let model = SystemModel::new(bundle.system);
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(MAGIC)?;
    w.write_u16::<LittleEndian>(FORMAT_VERSION)?;
    w.write_u8(system_code(bundle.system))?;
    w.write_u8(0)?; // reserved
    w.write_f64::<LittleEndian>(bundle.dt)?;
    w.write_u32::<LittleEndian>(bundle.t_max_steps)?;
    w.write_u64::<LittleEndian>(bundle.seed)?;
    w.write_u64::<LittleEndian>(bundle.edges.len() as u64)?;
    let key_dim = model.rem_spec().len();
    for e in &bundle.edges {
        for v in &e.key[..key_dim] {
            w.write_f64::<LittleEndian>(*v)?;
        }
        for v in e.control.as_slice() {
            w.write_f64::<LittleEndian>(*v)?;
        }
        w.write_u32::<LittleEndian>(e.steps)?;
        for v in e.terminal.pos() {
            w.write_f64::<LittleEndian>(*v)?;
        }
        for v in e.terminal.rem() {
            w.write_f64::<LittleEndian>(*v)?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn load(path: &Path) -> Result<EdgeBundle, BundleError> {
    let file = File::open(path)?;
    let total = file.metadata()?.len();
    let mut r = BufReader::new(file);

    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(BundleError::BadMagic);
    }
    let version = r.read_u16::<LittleEndian>()?;
    if version != FORMAT_VERSION {
        return Err(BundleError::BadVersion(version));
    }
    let system = system_from_code(r.read_u8()?)?;
    let _reserved = r.read_u8()?;
    let dt = r.read_f64::<LittleEndian>()?;
    let t_max_steps = r.read_u32::<LittleEndian>()?;
    let seed = r.read_u64::<LittleEndian>()?;
    let count = r.read_u64::<LittleEndian>()?;

    let expected = count * record_bytes(system);
    if total != HEADER_BYTES + expected {
        return Err(BundleError::Truncated {
            expected: HEADER_BYTES + expected,
            found: total,
        });
    }

    let model = SystemModel::new(system);
    let key_dim = model.rem_spec().len();
    let pd = model.workspace_dim();
    let mut edges = Vec::with_capacity(count as usize);
    for _ in 0..count {
        let mut key = [0.0; crate::dynamics::MAX_REM_DIM];
        for v in key.iter_mut().take(key_dim) {
            *v = r.read_f64::<LittleEndian>()?;
        }
        let mut control = [0.0; crate::dynamics::MAX_CONTROL_DIM];
        for v in control.iter_mut().take(model.control_dim()) {
            *v = r.read_f64::<LittleEndian>()?;
        }
        let steps = r.read_u32::<LittleEndian>()?;
        let mut pos = [0.0; crate::dynamics::MAX_POS_DIM];
        for v in pos.iter_mut().take(pd) {
            *v = r.read_f64::<LittleEndian>()?;
        }
        let mut rem = [0.0; crate::dynamics::MAX_REM_DIM];
        for v in rem.iter_mut().take(key_dim) {
            *v = r.read_f64::<LittleEndian>()?;
        }
        edges.push(Edge {
            key,
            control: ControlInput::new(&control[..model.control_dim()]),
            steps,
            terminal: StateVector::new(&pos[..pd], &rem[..key_dim]),
        });
    }
    Ok(EdgeBundle {
        system,
        dt,
        t_max_steps,
        seed,
        edges,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn generation_is_deterministic_and_feasible() {
        let m = SystemModel::new(SystemId::SecondOrderCar);
        let a = generate_bundle(&m, 500, 30, 42);
        let b = generate_bundle(&m, 500, 30, 42);
        assert_eq!(a.edges, b.edges);
        for e in &a.edges {
            let seg = m.propagate(&e.start_state(&m), &e.control, e.steps);
            assert!(m.is_dyn_feasible(&seg));
            // Same integrator, same start: endpoint must match bit for bit.
            assert_eq!(seg.terminal(), &e.terminal);
        }
    }

    #[test]
    fn unicycle_never_rejects() {
        // With no bounded remainder components, every rollout is feasible,
        // so edge count equals attempt count by construction.
        let m = SystemModel::new(SystemId::Unicycle);
        let b = generate_bundle(&m, 1000, 30, 7);
        assert_eq!(b.len(), 1000);
        for e in &b.edges {
            assert!((1..=30).contains(&e.steps));
        }
    }

    #[test]
    fn roundtrip_is_bitwise() {
        let dir = tempfile::tempdir().unwrap();
        let m = SystemModel::new(SystemId::DoubleIntegrator);
        let bundle = generate_bundle(&m, 300, 30, 9);

        let p1 = dir.path().join("a.bundle");
        let p2 = dir.path().join("b.bundle");
        save(&bundle, &p1).unwrap();
        let loaded = load(&p1).unwrap();
        save(&loaded, &p2).unwrap();
        assert_eq!(std::fs::read(&p1).unwrap(), std::fs::read(&p2).unwrap());
        assert_eq!(bundle.edges, loaded.edges);
        assert_eq!(bundle.seed, loaded.seed);
    }

    #[test]
    fn file_size_matches_layout() {
        let dir = tempfile::tempdir().unwrap();
        let m = SystemModel::new(SystemId::DoubleIntegrator);
        let bundle = generate_bundle(&m, 250, 30, 1);
        let p = dir.path().join("c.bundle");
        save(&bundle, &p).unwrap();
        let size = std::fs::metadata(&p).unwrap().len();
        assert_eq!(size, HEADER_BYTES + 250 * record_bytes(SystemId::DoubleIntegrator));
        // DI record: 3 key + 3 control + 6 state doubles plus a u32.
        assert_eq!(record_bytes(SystemId::DoubleIntegrator), 100);
        assert_eq!(record_bytes(SystemId::Unicycle), 52);
        assert_eq!(record_bytes(SystemId::SecondOrderCar), 84);
    }

    #[test]
    fn system_mismatch_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let uc = generate_bundle(&SystemModel::new(SystemId::Unicycle), 10, 30, 1);
        let p = dir.path().join("uc.bundle");
        save(&uc, &p).unwrap();
        let loaded = load(&p).unwrap();
        let soc = SystemModel::new(SystemId::SecondOrderCar);
        assert!(matches!(
            loaded.ensure_system(&soc),
            Err(BundleError::SystemMismatch { .. })
        ));
        assert!(loaded.ensure_system(&SystemModel::new(SystemId::Unicycle)).is_ok());
    }

    #[test]
    fn corrupt_headers_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("bad.bundle");
        std::fs::write(&p, b"NOPE").unwrap();
        assert!(matches!(load(&p), Err(BundleError::BadMagic)));

        let uc = generate_bundle(&SystemModel::new(SystemId::Unicycle), 10, 30, 1);
        save(&uc, &p).unwrap();
        let mut bytes = std::fs::read(&p).unwrap();
        bytes[4] = 99; // version field
        std::fs::write(&p, &bytes).unwrap();
        assert!(matches!(load(&p), Err(BundleError::BadVersion(99))));

        save(&uc, &p).unwrap();
        let mut bytes = std::fs::read(&p).unwrap();
        bytes.truncate(bytes.len() - 8);
        std::fs::write(&p, &bytes).unwrap();
        assert!(matches!(load(&p), Err(BundleError::Truncated { .. })));
    }

    #[test]
    fn instantiate_translates_endpoint() {
        let m = SystemModel::new(SystemId::Unicycle);
        let bundle = generate_bundle(&m, 50, 30, 3);
        let at = m.state(&[4.0, 4.0], &[0.7]);
        for e in &bundle.edges {
            let predicted = e.predicted_endpoint(&at);
            assert_eq!(predicted.pos()[0], e.terminal.pos()[0] + 4.0);
            assert_eq!(predicted.pos()[1], e.terminal.pos()[1] + 4.0);
            assert_eq!(predicted.rem(), e.terminal.rem());
        }
    }

    #[test]
    fn repropagation_from_matching_rem_matches_translation() {
        let m = SystemModel::new(SystemId::SecondOrderCar);
        let bundle = generate_bundle(&m, 100, 30, 5);
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for e in bundle.edges.iter().take(20) {
            let beta = [rng.gen_range(-10.0..10.0), rng.gen_range(-10.0..10.0)];
            let at = e.start_state(&m).translate(&beta);
            let seg = m.propagate(&at, &e.control, e.steps);
            let expected = e.terminal.translate(&beta);
            for (a, b) in seg.terminal().pos().iter().zip(expected.pos()) {
                assert!((a - b).abs() < 1e-9);
            }
            for (a, b) in seg.terminal().rem().iter().zip(expected.rem()) {
                assert!((a - b).abs() < 1e-9);
            }
        }
    }
}
