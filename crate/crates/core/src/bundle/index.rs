//! Exact radius retrieval over edge keys.
//!
//! A static kd-tree over the (weighted) key vectors. Angle components use
//! the wrapped difference, handled by duplicating the query at theta +- 2pi
//! so results stay identical to a brute-force scan under the wrapped metric.

use std::f64::consts::TAU;

use crate::bundle::EdgeBundle;
use crate::dynamics::{wrapped_angle_diff, RemComponent, SystemModel, MAX_REM_DIM};

/// Weighted distance between two key vectors, wrapping angle components.
pub fn key_distance(a: &[f64], b: &[f64], weights: &[f64], spec: &[RemComponent]) -> f64 {
    let mut acc = 0.0;
    for i in 0..a.len() {
        let d = match spec[i] {
            RemComponent::Angle => wrapped_angle_diff(a[i], b[i]),
            RemComponent::Bounded { .. } => a[i] - b[i],
        };
        let wd = weights[i] * d;
        acc += wd * wd;
    }
    acc.sqrt()
}

pub struct KeyIndex {
    dim: usize,
    angle_dims: Vec<usize>,
    scale: [f64; MAX_REM_DIM],
    /// Scaled key per edge, indexed by edge id.
    scaled: Vec<[f64; MAX_REM_DIM]>,
    /// Edge ids arranged as an in-place median kd-tree.
    order: Vec<u32>,
}

impl KeyIndex {
    /// Build the index over every key in the bundle. `weights` are linear
    /// per-component scale factors of the key metric.
    pub fn build(bundle: &EdgeBundle, weights: &[f64]) -> KeyIndex {
        let model = SystemModel::new(bundle.system);
        let spec = model.rem_spec();
        let dim = spec.len();
        assert_eq!(weights.len(), dim, "one weight per key component");

        let mut scale = [1.0; MAX_REM_DIM];
        scale[..dim].copy_from_slice(weights);
        let angle_dims = spec
            .iter()
            .enumerate()
            .filter(|(_, c)| matches!(c, RemComponent::Angle))
            .map(|(i, _)| i)
            .collect();

        let scaled: Vec<[f64; MAX_REM_DIM]> = bundle
            .edges
            .iter()
            .map(|e| {
                let mut p = [0.0; MAX_REM_DIM];
                for i in 0..dim {
                    p[i] = scale[i] * e.key[i];
                }
                p
            })
            .collect();

        let mut order: Vec<u32> = (0..scaled.len() as u32).collect();
        build_recursive(&scaled, &mut order, 0, dim);
        KeyIndex {
            dim,
            angle_dims,
            scale,
            scaled,
            order,
        }
    }

    pub fn len(&self) -> usize {
        self.scaled.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scaled.is_empty()
    }

    /// Ids of all edges whose key lies within `delta` of `key` under the
    /// weighted wrapped metric, ascending.
    pub fn query_radius(&self, key: &[f64], delta: f64) -> Vec<u32> {
        assert!(delta >= 0.0);
        assert_eq!(key.len(), self.dim);
        let mut q = [0.0; MAX_REM_DIM];
        for i in 0..self.dim {
            q[i] = self.scale[i] * key[i];
        }

        let mut out = Vec::new();
        self.collect_in_ball(&q, delta, &mut out);
        // Wrapped angles: repeat the query shifted one period either way.
        for &ad in &self.angle_dims {
            let period = self.scale[ad] * TAU;
            for shift in [-period, period] {
                let mut qs = q;
                qs[ad] += shift;
                self.collect_in_ball(&qs, delta, &mut out);
            }
        }
        out.sort_unstable();
        out.dedup();
        out
    }

    fn collect_in_ball(&self, q: &[f64; MAX_REM_DIM], delta: f64, out: &mut Vec<u32>) {
        if !self.order.is_empty() {
            self.search(q, delta, 0, self.order.len(), 0, out);
        }
    }

    fn search(
        &self,
        q: &[f64; MAX_REM_DIM],
        delta: f64,
        lo: usize,
        hi: usize,
        depth: usize,
        out: &mut Vec<u32>,
    ) {
        if lo >= hi {
            return;
        }
        let mid = lo + (hi - lo) / 2;
        let id = self.order[mid];
        let p = &self.scaled[id as usize];
        let mut d2 = 0.0;
        for i in 0..self.dim {
            let d = q[i] - p[i];
            d2 += d * d;
        }
        if d2 <= delta * delta {
            out.push(id);
        }
        let axis = depth % self.dim;
        let split = p[axis];
        if q[axis] - delta <= split {
            self.search(q, delta, lo, mid, depth + 1, out);
        }
        if q[axis] + delta >= split {
            self.search(q, delta, mid + 1, hi, depth + 1, out);
        }
    }
}

fn build_recursive(pts: &[[f64; MAX_REM_DIM]], order: &mut [u32], depth: usize, dim: usize) {
    if order.len() <= 1 {
        return;
    }
    let axis = depth % dim;
    let mid = order.len() / 2;
    order.select_nth_unstable_by(mid, |a, b| {
        pts[*a as usize][axis]
            .partial_cmp(&pts[*b as usize][axis])
            .unwrap()
    });
    let (left, rest) = order.split_at_mut(mid);
    build_recursive(pts, left, depth + 1, dim);
    build_recursive(pts, &mut rest[1..], depth + 1, dim);
}
