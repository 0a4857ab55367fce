#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use slrbf::geometry::dist2;
use slrbf::UnitVec3;
use std::f64::consts::PI;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Uniform random points on the sphere (Gaussian direction sampling).
pub fn random_points(n: usize, seed: u64) -> Vec<UnitVec3> {
    let mut r = rng(seed);
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let v: [f64; 3] = [r.gen_range(-1.0..1.0), r.gen_range(-1.0..1.0), r.gen_range(-1.0..1.0)];
        let s = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        if s > 0.1 && s <= 1.0 {
            out.push(UnitVec3::new(v[0] / s, v[1] / s, v[2] / s).unwrap());
        }
    }
    out
}

/// The `n` nearest points by exhaustive scan, ties by index.
pub fn brute_knn(points: &[UnitVec3], q: &UnitVec3, n: usize) -> Vec<usize> {
    let mut idx: Vec<(f64, usize)> = points
        .iter()
        .enumerate()
        .map(|(i, p)| (dist2(p.as_array(), q.as_array()), i))
        .collect();
    idx.sort_by(|a, b| a.partial_cmp(b).unwrap());
    idx.into_iter().take(n).map(|(_, i)| i).collect()
}

pub fn brute_within(points: &[UnitVec3], q: &UnitVec3, r: f64) -> Vec<usize> {
    (0..points.len())
        .filter(|&i| points[i].dist(q) < r)
        .collect()
}

/// Real orthonormal Y_3^2 (cosine type).
pub fn y32(x: &UnitVec3) -> f64 {
    0.25 * (105.0 / PI).sqrt() * x.z() * (x.x() * x.x() - x.y() * x.y())
}

/// Real orthonormal Y_2^1 (cosine type).
pub fn y21(x: &UnitVec3) -> f64 {
    0.5 * (15.0 / PI).sqrt() * x.x() * x.z()
}

/// A degree-2 combination of harmonics plus a constant.
pub fn deg2(x: &UnitVec3) -> f64 {
    1.0 + 0.5 * (3.0 * x.z() * x.z() - 1.0) + x.x() * x.y() - 0.3 * x.y()
}

pub fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

pub fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}
