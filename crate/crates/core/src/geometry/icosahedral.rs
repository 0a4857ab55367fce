//! Quasi-uniform point sets: icosahedral refinements and Fibonacci spirals.

use std::collections::HashMap;

use super::{project, NodeSet, UnitVec3};
use crate::error::{Error, Result};

/// Largest bisection level accepted by [`icosahedral_nodes`].
pub const MAX_LEVEL: u32 = 8;

/// Largest face frequency accepted by [`icosahedral_frequency_nodes`].
pub const MAX_FREQUENCY: usize = 1 << MAX_LEVEL;

type Tri = [u32; 3];

/// Icosahedron with vertices at the poles and two staggered rings of five.
fn icosahedron() -> (Vec<[f64; 3]>, Vec<Tri>) {
    let z = 1.0 / 5f64.sqrt();
    let r = 2.0 / 5f64.sqrt();
    let mut v = vec![[0.0, 0.0, 1.0]];
    for k in 0..5 {
        let lon = 2.0 * std::f64::consts::PI * k as f64 / 5.0;
        v.push([r * lon.cos(), r * lon.sin(), z]);
    }
    for k in 0..5 {
        let lon = 2.0 * std::f64::consts::PI * (k as f64 + 0.5) / 5.0;
        v.push([r * lon.cos(), r * lon.sin(), -z]);
    }
    v.push([0.0, 0.0, -1.0]);

    let mut f = Vec::with_capacity(20);
    for k in 0..5u32 {
        let a = 1 + k;
        let b = 1 + (k + 1) % 5;
        let c = 6 + k;
        let d = 6 + (k + 1) % 5;
        f.push([0, a, b]);
        f.push([a, c, b]);
        f.push([b, c, d]);
        f.push([11, d, c]);
    }
    (v, f)
}

/// Splits every face into `m²` triangles on the flat face, then projects.
fn subdivide_flat(v: &mut Vec<[f64; 3]>, faces: &[Tri], m: usize) -> Vec<Tri> {
    if m == 1 {
        return faces.to_vec();
    }
    // Interior points of each undirected edge, ordered from the smaller
    // vertex index to the larger one.
    let mut edge_pts: HashMap<(u32, u32), Vec<u32>> = HashMap::new();
    let mut out = Vec::with_capacity(faces.len() * m * m);
    for face in faces {
        let [a, b, c] = *face;
        let mut edge = |v: &mut Vec<[f64; 3]>, p: u32, q: u32| -> Vec<u32> {
            let key = (p.min(q), p.max(q));
            let ids = edge_pts
                .entry(key)
                .or_insert_with(|| {
                    let (s, e) = (v[key.0 as usize], v[key.1 as usize]);
                    (1..m)
                        .map(|i| {
                            let t = i as f64 / m as f64;
                            let w = [
                                s[0] + t * (e[0] - s[0]),
                                s[1] + t * (e[1] - s[1]),
                                s[2] + t * (e[2] - s[2]),
                            ];
                            v.push(project(w).0);
                            (v.len() - 1) as u32
                        })
                        .collect()
                })
                .clone();
            if p < q {
                ids
            } else {
                ids.into_iter().rev().collect()
            }
        };
        let ab = edge(v, a, b);
        let ac = edge(v, a, c);
        let bc = edge(v, b, c);
        let (pa, pb, pc) = (v[a as usize], v[b as usize], v[c as usize]);
        let mut interior = HashMap::new();
        for i in 1..m {
            for j in 1..m - i {
                let (wa, wb, wc) = ((m - i - j) as f64, i as f64, j as f64);
                let s = m as f64;
                let w = [
                    (wa * pa[0] + wb * pb[0] + wc * pc[0]) / s,
                    (wa * pa[1] + wb * pb[1] + wc * pc[1]) / s,
                    (wa * pa[2] + wb * pb[2] + wc * pc[2]) / s,
                ];
                v.push(project(w).0);
                interior.insert((i, j), (v.len() - 1) as u32);
            }
        }
        // (i, j) are the barycentric weights on b and c.
        let g = |i: usize, j: usize| -> u32 {
            if i == 0 && j == 0 {
                a
            } else if i == m {
                b
            } else if j == m {
                c
            } else if j == 0 {
                ab[i - 1]
            } else if i == 0 {
                ac[j - 1]
            } else if i + j == m {
                bc[j - 1]
            } else {
                interior[&(i, j)]
            }
        };
        for i in 0..m {
            for j in 0..m - i {
                out.push([g(i, j), g(i + 1, j), g(i, j + 1)]);
                if i + j + 1 < m {
                    out.push([g(i + 1, j), g(i + 1, j + 1), g(i, j + 1)]);
                }
            }
        }
    }
    out
}

/// One level of recursive edge bisection with midpoints projected.
fn bisect(v: &mut Vec<[f64; 3]>, faces: &[Tri]) -> Vec<Tri> {
    let mut mids: HashMap<(u32, u32), u32> = HashMap::with_capacity(faces.len() * 3 / 2);
    let mut out = Vec::with_capacity(faces.len() * 4);
    for &[a, b, c] in faces {
        let mut mid = |p: u32, q: u32| -> u32 {
            *mids.entry((p.min(q), p.max(q))).or_insert_with(|| {
                let (s, e) = (v[p as usize], v[q as usize]);
                v.push(project([s[0] + e[0], s[1] + e[1], s[2] + e[2]]).0);
                (v.len() - 1) as u32
            })
        };
        let ab = mid(a, b);
        let bc = mid(b, c);
        let ca = mid(c, a);
        out.push([a, ab, ca]);
        out.push([ab, b, bc]);
        out.push([ca, bc, c]);
        out.push([ab, bc, ca]);
    }
    out
}

fn into_node_set(v: Vec<[f64; 3]>) -> Result<NodeSet> {
    NodeSet::new(v.into_iter().map(UnitVec3::new_unchecked).collect())
}

/// Recursive bisection of the icosahedron: `N = 10·4^level + 2` nodes.
///
/// Nodes of level `l` are the first nodes of level `l + 1`, in the same order.
pub fn icosahedral_nodes(level: u32) -> Result<NodeSet> {
    if level > MAX_LEVEL {
        return Err(Error::Config(format!(
            "icosahedral level {level} exceeds the limit {MAX_LEVEL}"
        )));
    }
    icosahedral_frequency_nodes(1 << level)
}

/// Icosahedral nodes with face frequency `k`: `N = 10·k² + 2`.
///
/// Writing `k = m·2^l` with `m` odd, every face is first split `m` ways on
/// the flat face and then bisected `l` times. Powers of two reproduce
/// [`icosahedral_nodes`] exactly.
pub fn icosahedral_frequency_nodes(k: usize) -> Result<NodeSet> {
    if k == 0 || k > MAX_FREQUENCY {
        return Err(Error::Config(format!(
            "icosahedral frequency {k} outside 1..={MAX_FREQUENCY}"
        )));
    }
    let levels = k.trailing_zeros();
    let m = k >> levels;
    let (mut v, faces) = icosahedron();
    let mut faces = subdivide_flat(&mut v, &faces, m);
    for _ in 0..levels {
        faces = bisect(&mut v, &faces);
    }
    debug_assert_eq!(v.len(), 10 * k * k + 2);
    into_node_set(v)
}

/// The icosahedral frequency whose node count is exactly `n`, if any.
pub fn icosahedral_frequency_for(n: usize) -> Option<usize> {
    if n < 12 || (n - 2) % 10 != 0 {
        return None;
    }
    let k2 = (n - 2) / 10;
    let k = (k2 as f64).sqrt().round() as usize;
    (k * k == k2).then_some(k)
}

/// `n` points on a golden-angle spiral; exact count, quasi-uniform.
pub fn fibonacci_nodes(n: usize) -> Result<NodeSet> {
    if n == 0 {
        return Err(Error::Argument("fibonacci point count must be positive".into()));
    }
    let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
    let pts = (0..n)
        .map(|i| {
            let z = 1.0 - (2.0 * i as f64 + 1.0) / n as f64;
            let rho = (1.0 - z * z).max(0.0).sqrt();
            let lon = golden * i as f64;
            project([rho * lon.cos(), rho * lon.sin(), z]).0
        })
        .collect();
    into_node_set(pts)
}
