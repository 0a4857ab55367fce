//! Points on the unit sphere, node sets, and nearest-neighbour queries.
//!
//! Everything is expressed in extrinsic Cartesian coordinates. Chordal
//! (3-D Euclidean) distance is monotone in geodesic distance on the sphere,
//! so the spatial index works directly on raw coordinates.

mod icosahedral;
mod kdtree;

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use icosahedral::{
    fibonacci_nodes, icosahedral_frequency_for, icosahedral_frequency_nodes, icosahedral_nodes,
};
pub use kdtree::KdTree;

/// Maximum deviation of `‖x‖` from one for a point labelled as on-sphere.
pub const ON_SPHERE_TOL: f64 = 1e-13;

/// Loaded points whose norm deviates from one by at most this much are
/// projected; anything further off is rejected.
pub const LOAD_NORMALIZE_TOL: f64 = 1e-6;

#[inline]
pub fn dot(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

#[inline]
pub fn cross(a: &[f64; 3], b: &[f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

#[inline]
pub fn norm(a: &[f64; 3]) -> f64 {
    dot(a, a).sqrt()
}

#[inline]
pub fn dist2(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    let dx = a[0] - b[0];
    let dy = a[1] - b[1];
    let dz = a[2] - b[2];
    dx * dx + dy * dy + dz * dz
}

#[inline]
pub fn dist(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    dist2(a, b).sqrt()
}

/// A point on the unit sphere.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UnitVec3(pub(crate) [f64; 3]);

impl UnitVec3 {
    /// Wraps coordinates that are already on the sphere; checks the norm.
    pub fn new(x: f64, y: f64, z: f64) -> Result<Self> {
        let p = [x, y, z];
        let r = norm(&p);
        if !((r - 1.0).abs() <= ON_SPHERE_TOL) {
            return Err(Error::Domain(format!(
                "point ({x}, {y}, {z}) is not on the unit sphere (norm {r})"
            )));
        }
        Ok(UnitVec3(p))
    }

    /// Wraps coordinates without checking; for values produced by projection.
    #[inline]
    pub(crate) fn new_unchecked(p: [f64; 3]) -> Self {
        UnitVec3(p)
    }

    #[inline]
    pub fn x(&self) -> f64 {
        self.0[0]
    }
    #[inline]
    pub fn y(&self) -> f64 {
        self.0[1]
    }
    #[inline]
    pub fn z(&self) -> f64 {
        self.0[2]
    }

    #[inline]
    pub fn as_array(&self) -> &[f64; 3] {
        &self.0
    }

    #[inline]
    pub fn dot(&self, other: &UnitVec3) -> f64 {
        dot(&self.0, &other.0)
    }

    #[inline]
    pub fn dist(&self, other: &UnitVec3) -> f64 {
        dist(&self.0, &other.0)
    }

    /// Longitude and latitude of the point.
    pub fn to_spherical(&self) -> SphericalCoords {
        let [x, y, z] = self.0;
        SphericalCoords {
            lambda: y.atan2(x),
            theta: z.atan2(x.hypot(y)),
        }
    }
}

impl From<UnitVec3> for [f64; 3] {
    fn from(v: UnitVec3) -> Self {
        v.0
    }
}

/// Orthogonal projection `p / ‖p‖` onto the sphere.
pub fn project_to_sphere(p: [f64; 3]) -> Result<UnitVec3> {
    let r = norm(&p);
    if !(r > 0.0) || !r.is_finite() {
        return Err(Error::Domain(format!(
            "cannot project {p:?} onto the sphere"
        )));
    }
    Ok(UnitVec3([p[0] / r, p[1] / r, p[2] / r]))
}

/// Same as [`project_to_sphere`] for callers that guarantee `p != 0`.
#[inline]
pub(crate) fn project(p: [f64; 3]) -> UnitVec3 {
    let r = norm(&p);
    UnitVec3([p[0] / r, p[1] / r, p[2] / r])
}

/// Longitude `lambda` in `[-π, π]` and latitude `theta` in `[-π/2, π/2]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SphericalCoords {
    pub lambda: f64,
    pub theta: f64,
}

impl SphericalCoords {
    pub fn to_cartesian(&self) -> UnitVec3 {
        let (sl, cl) = self.lambda.sin_cos();
        let (st, ct) = self.theta.sin_cos();
        UnitVec3([ct * cl, ct * sl, st])
    }

    /// Unit tangent vectors `(λ̂, θ̂)` pointing east and north.
    ///
    /// At the poles the pair is still orthonormal and is oriented by the
    /// supplied longitude.
    pub fn basis(&self) -> ([f64; 3], [f64; 3]) {
        let (sl, cl) = self.lambda.sin_cos();
        let (st, ct) = self.theta.sin_cos();
        ([-sl, cl, 0.0], [-st * cl, -st * sl, ct])
    }
}

pub fn to_cartesian(sc: SphericalCoords) -> UnitVec3 {
    sc.to_cartesian()
}

pub fn spherical_basis(sc: SphericalCoords) -> ([f64; 3], [f64; 3]) {
    sc.basis()
}

/// The fixed Eulerian discretisation: an ordered point set with its index.
#[derive(Debug, Clone)]
pub struct NodeSet {
    nodes: Vec<UnitVec3>,
    spacing_h: f64,
    index: KdTree,
}

impl NodeSet {
    /// Builds a node set from on-sphere points.
    ///
    /// Duplicates are accepted here; they surface later as singular
    /// interpolation systems. Use [`NodeSet::has_duplicates`] to check.
    pub fn new(nodes: Vec<UnitVec3>) -> Result<Self> {
        if nodes.is_empty() {
            return Err(Error::Argument("node set must not be empty".into()));
        }
        for (i, p) in nodes.iter().enumerate() {
            let r = norm(&p.0);
            if !((r - 1.0).abs() <= ON_SPHERE_TOL) {
                return Err(Error::Domain(format!(
                    "node {i} is off the sphere (norm {r})"
                )));
            }
        }
        let index = KdTree::new(nodes.iter().map(|p| p.0).collect());
        let spacing_h = mean_nearest_spacing(&index);
        Ok(NodeSet {
            nodes,
            spacing_h,
            index,
        })
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    #[inline]
    pub fn nodes(&self) -> &[UnitVec3] {
        &self.nodes
    }

    #[inline]
    pub fn node(&self, i: usize) -> &UnitVec3 {
        &self.nodes[i]
    }

    /// Mean distance from a node to its nearest neighbour.
    #[inline]
    pub fn spacing_h(&self) -> f64 {
        self.spacing_h
    }

    #[inline]
    pub fn index(&self) -> &KdTree {
        &self.index
    }

    pub fn has_duplicates(&self) -> bool {
        (0..self.len()).any(|i| {
            let nn = self.index.knn(&self.nodes[i].0, 2.min(self.len()));
            nn.iter().any(|&j| j != i && self.nodes[j] == self.nodes[i])
        })
    }

    /// Index of the node closest to `query`; ties go to the smallest index.
    pub fn nearest_neighbor(&self, query: &UnitVec3) -> usize {
        self.index.nearest(&query.0)
    }

    /// The `n` closest nodes in ascending distance (ties by index).
    pub fn knn(&self, query: &UnitVec3, n: usize) -> Result<Vec<usize>> {
        if n > self.len() {
            return Err(Error::Argument(format!(
                "requested {n} neighbours from a set of {}",
                self.len()
            )));
        }
        Ok(self.index.knn(&query.0, n))
    }

    /// Nodes strictly within Euclidean distance `radius`, ascending index.
    pub fn within_radius(&self, query: &UnitVec3, radius: f64) -> Vec<usize> {
        self.index.within_radius(&query.0, radius)
    }
}

fn mean_nearest_spacing(index: &KdTree) -> f64 {
    let pts = index.points();
    if pts.len() < 2 {
        return 0.0;
    }
    let total: f64 = pts
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let nn = index.knn(p, 2);
            let j = if nn[0] == i { nn[1] } else { nn[0] };
            dist(p, &pts[j])
        })
        .sum();
    total / pts.len() as f64
}

/// Reads a node file: whitespace-separated `x y z` triples, `#` comments.
pub fn load_nodes(path: impl AsRef<Path>) -> Result<NodeSet> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut nodes = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let parse_err = |msg: String| Error::Parse {
            path: path.to_path_buf(),
            line: lineno + 1,
            msg,
        };
        let vals = line
            .split_whitespace()
            .map(|tok| {
                tok.parse::<f64>()
                    .map_err(|e| parse_err(format!("bad number {tok:?}: {e}")))
            })
            .collect::<Result<Vec<f64>>>()?;
        if vals.len() != 3 {
            return Err(parse_err(format!(
                "expected 3 coordinates, found {}",
                vals.len()
            )));
        }
        let p = [vals[0], vals[1], vals[2]];
        let r = norm(&p);
        if !r.is_finite() || (r - 1.0).abs() > LOAD_NORMALIZE_TOL {
            return Err(Error::Data {
                path: path.to_path_buf(),
                line: lineno + 1,
                msg: format!("point has norm {r}, not on the unit sphere"),
            });
        }
        if (r - 1.0).abs() <= ON_SPHERE_TOL {
            nodes.push(UnitVec3(p));
        } else {
            nodes.push(project(p));
        }
    }
    if nodes.is_empty() {
        return Err(Error::Data {
            path: path.to_path_buf(),
            line: 0,
            msg: "no nodes in file".into(),
        });
    }
    NodeSet::new(nodes)
}

/// Writes nodes in the format accepted by [`load_nodes`].
pub fn write_nodes(path: impl AsRef<Path>, nodes: &NodeSet) -> Result<()> {
    use std::fmt::Write as _;
    let path = path.as_ref();
    let mut out = String::with_capacity(nodes.len() * 64);
    let _ = writeln!(out, "# {} nodes", nodes.len());
    for p in nodes.nodes() {
        let _ = writeln!(out, "{:.17e} {:.17e} {:.17e}", p.x(), p.y(), p.z());
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, PI};
    use std::io::Write;

    #[test]
    fn projection_examples() {
        let p = project_to_sphere([2.0, 0.0, 0.0]).unwrap();
        assert_eq!(p.as_array(), &[1.0, 0.0, 0.0]);
        let p = project_to_sphere([1.0, 1.0, 1.0]).unwrap();
        let s = 1.0 / 3f64.sqrt();
        for c in p.as_array() {
            assert!((c - s).abs() < 1e-15);
        }
        let q = project_to_sphere(*p.as_array()).unwrap();
        assert!(dist(p.as_array(), q.as_array()) < 1e-16);
        assert!(matches!(
            project_to_sphere([0.0, 0.0, 0.0]),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn spherical_examples() {
        let sc = SphericalCoords {
            lambda: 0.0,
            theta: 0.0,
        };
        assert_eq!(sc.to_cartesian().as_array(), &[1.0, 0.0, 0.0]);
        let (lh, th) = sc.basis();
        assert_eq!(lh, [0.0, 1.0, 0.0]);
        assert_eq!(th, [-0.0, -0.0, 1.0]);
        let p = SphericalCoords {
            lambda: FRAC_PI_2,
            theta: 0.0,
        }
        .to_cartesian();
        assert!(dist(p.as_array(), &[0.0, 1.0, 0.0]) < 1e-16);
    }

    #[test]
    fn spherical_round_trip_and_orthonormality() {
        for i in 0..200 {
            let lambda = -PI + 2.0 * PI * (i as f64 + 0.5) / 200.0;
            let theta = -1.5 + 3.0 * ((i * 37 % 200) as f64 + 0.5) / 200.0;
            let sc = SphericalCoords { lambda, theta };
            let x = sc.to_cartesian();
            let back = x.to_spherical();
            assert!((back.lambda - lambda).abs() < 1e-13);
            assert!((back.theta - theta).abs() < 1e-13);
            let (lh, th) = sc.basis();
            assert!((norm(&lh) - 1.0).abs() < 1e-14);
            assert!((norm(&th) - 1.0).abs() < 1e-14);
            assert!(dot(&lh, &th).abs() < 1e-14);
            assert!(dot(&lh, x.as_array()).abs() < 1e-14);
            assert!(dot(&th, x.as_array()).abs() < 1e-14);
        }
    }

    #[test]
    fn unit_vec_rejects_off_sphere() {
        assert!(UnitVec3::new(1.0, 0.0, 0.0).is_ok());
        assert!(UnitVec3::new(1.0, 1e-6, 0.0).is_err());
    }

    fn write_tmp(contents: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(contents.as_bytes()).unwrap();
        f
    }

    #[test]
    fn load_axis_points() {
        let f = write_tmp("1 0 0\n0 1 0\n0 0 1");
        let set = load_nodes(f.path()).unwrap();
        assert_eq!(set.len(), 3);
        assert_eq!(set.node(2).as_array(), &[0.0, 0.0, 1.0]);
    }

    #[test]
    fn load_skips_comments_and_normalizes() {
        let f = write_tmp("# header\n\n1.0000001 0 0  # almost\n0 -1 0\n");
        let set = load_nodes(f.path()).unwrap();
        assert_eq!(set.len(), 2);
        assert_eq!(set.node(0).x(), 1.0);
    }

    #[test]
    fn load_rejects_off_sphere() {
        let f = write_tmp("1 0 0\n0.5 0.5 0.5\n");
        match load_nodes(f.path()) {
            Err(Error::Data { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected data error, got {other:?}"),
        }
    }

    #[test]
    fn load_reports_line_of_malformed_row() {
        let f = write_tmp("1 0 0\n# c\n0 1\n");
        match load_nodes(f.path()) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("expected parse error, got {other:?}"),
        }
        let f = write_tmp("1 0 zero\n");
        assert!(matches!(load_nodes(f.path()), Err(Error::Parse { line: 1, .. })));
    }

    #[test]
    fn write_then_load() {
        let set = icosahedral_nodes(2).unwrap();
        let f = tempfile::NamedTempFile::new().unwrap();
        write_nodes(f.path(), &set).unwrap();
        let back = load_nodes(f.path()).unwrap();
        assert_eq!(back.nodes(), set.nodes());
    }

    #[test]
    fn nearest_on_symmetric_midpoint_prefers_smaller_index() {
        let nodes = vec![
            UnitVec3::new(0.0, 0.0, 1.0).unwrap(),
            UnitVec3::new(0.0, 1.0, 0.0).unwrap(),
            UnitVec3::new(1.0, 0.0, 0.0).unwrap(),
        ];
        let set = NodeSet::new(nodes).unwrap();
        let mid = project_to_sphere([1.0, 1.0, 0.0]).unwrap();
        assert_eq!(set.nearest_neighbor(&mid), 1);
        assert_eq!(set.knn(&mid, 2).unwrap(), vec![1, 2]);
        assert_eq!(set.nearest_neighbor(set.node(2)), 2);
    }

    #[test]
    fn knn_argument_error() {
        let set = icosahedral_nodes(0).unwrap();
        assert!(matches!(
            set.knn(set.node(0), 13),
            Err(Error::Argument(_))
        ));
        let mut all = set.knn(set.node(0), 12).unwrap();
        all.sort();
        assert_eq!(all, (0..12).collect::<Vec<_>>());
    }

    #[test]
    fn spacing_estimate_is_quasi_uniform() {
        for level in 2..=4 {
            let set = icosahedral_nodes(level).unwrap();
            let ratio = set.spacing_h() / (2.0 / (set.len() as f64).sqrt());
            assert!((0.5..=2.0).contains(&ratio), "ratio {ratio}");
        }
    }

    #[test]
    fn duplicate_detection() {
        let mut pts = icosahedral_nodes(1).unwrap().nodes().to_vec();
        assert!(!NodeSet::new(pts.clone()).unwrap().has_duplicates());
        pts.push(pts[7]);
        assert!(NodeSet::new(pts).unwrap().has_duplicates());
    }
}
