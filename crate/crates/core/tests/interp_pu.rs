mod common;

use common::*;
use slrbf::basis::sh_degree_for_stencil;
use slrbf::geometry::{fibonacci_nodes, icosahedral_nodes};
use slrbf::interp::{
    bspline_weight, build_cover, build_cover_with_radius, patch_count, patch_radius, pu_weights,
    Interpolator, PuCover, PuInterpolant,
};
use slrbf::{NodeSet, UnitVec3};

fn standard_cover(nodes: &NodeSet, n: usize, a: f64) -> PuCover {
    let centers = fibonacci_nodes(patch_count(nodes.len(), n, a)).unwrap();
    build_cover(nodes, &centers, n, a).unwrap()
}

#[test]
fn bspline_branches() {
    assert_eq!(bspline_weight(0.0), 2.0 / 3.0);
    assert!((bspline_weight(0.5) - 1.0 / 6.0).abs() < 1e-15);
    let left = bspline_weight(0.5 - 1e-12);
    let right = bspline_weight(0.5 + 1e-12);
    assert!((left - right).abs() < 1e-11);
    for r in [1.0, 1.2, 10.0] {
        assert_eq!(bspline_weight(r), 0.0);
    }
}

/// Difference of one-sided five-point second derivatives at `t0`. The
/// stencils are exact on quartics, so for a C² function the jump vanishes
/// like h³; a kink in f'' would leave an O(1) jump.
fn second_derivative_jump(f: impl Fn(f64) -> f64, t0: f64, h: f64) -> f64 {
    let side = |s: f64| {
        let g = |k: f64| f(t0 + s * k * h);
        (35.0 * g(0.0) - 104.0 * g(1.0) + 114.0 * g(2.0) - 56.0 * g(3.0) + 11.0 * g(4.0))
            / (12.0 * h * h)
    };
    (side(-1.0) - side(1.0)).abs()
}

#[test]
fn bspline_is_c2_at_knots() {
    for t0 in [0.5, 1.0] {
        assert!(second_derivative_jump(bspline_weight, t0, 1e-3) < 1e-4, "knot {t0}");
    }
}

#[test]
fn radius_and_patch_count_examples() {
    assert!((patch_radius(4096, 100) - 0.3125).abs() < 1e-15);
    assert_eq!(patch_count(4096, 100, 2.5), 103);
    assert!((patch_radius(2562, 49) - 2.0 * (49.0f64 / 2562.0).sqrt()).abs() < 1e-15);
    assert!((patch_radius(2562, 49) - 0.276_591_272_892_76).abs() < 1e-14);
    assert_eq!(patch_count(2562, 49, 2.5), 131);
}

#[test]
fn members_match_exhaustive_scan() {
    for (nodes, n) in [(icosahedral_nodes(4).unwrap(), 49), (fibonacci_nodes(4000).unwrap(), 31)] {
        let cover = standard_cover(&nodes, n, 2.5);
        let (sh, _) = sh_degree_for_stencil(n);
        for p in cover.patches() {
            let brute = brute_within(nodes.nodes(), p.center(), cover.radius());
            assert_eq!(p.member_indices(), &brute[..]);
            assert!(p.member_indices().len() > sh.dim());
        }
    }
}

#[test]
fn rejects_small_multiplicity_and_uncovered_nodes() {
    let nodes = icosahedral_nodes(3).unwrap();
    let centers = fibonacci_nodes(20).unwrap();
    assert!(build_cover(&nodes, &centers, 31, 1.2).is_err());
    let one = NodeSet::new(vec![*nodes.node(0)]).unwrap();
    let err = build_cover(&nodes, &one, 31, 2.5).unwrap_err();
    assert!(err.to_string().contains("no patch"), "{err}");
}

#[test]
fn weights_sum_to_one() {
    let nodes = icosahedral_nodes(4).unwrap();
    let cover = standard_cover(&nodes, 49, 2.5);
    for x in random_points(10_000, 17) {
        let w = pu_weights(&cover, &x);
        let s: f64 = w.iter().map(|(_, v)| v).sum();
        assert!((s - 1.0).abs() <= 1e-14, "sum {s}");
        assert!(w.iter().all(|(_, v)| *v > 0.0));
    }
    assert_eq!(cover.fallback_count(), 0);
}

fn rotated(c: &UnitVec3, axis: [f64; 3], angle: f64) -> UnitVec3 {
    // Rodrigues rotation of a unit vector about a unit axis.
    let (s, co) = angle.sin_cos();
    let v = c.as_array();
    let kxv = [
        axis[1] * v[2] - axis[2] * v[1],
        axis[2] * v[0] - axis[0] * v[2],
        axis[0] * v[1] - axis[1] * v[0],
    ];
    let kv = axis[0] * v[0] + axis[1] * v[1] + axis[2] * v[2];
    let r: Vec<f64> = (0..3).map(|i| v[i] * co + kxv[i] * s + axis[i] * kv * (1.0 - co)).collect();
    UnitVec3::new(r[0], r[1], r[2]).unwrap()
}

fn two_patch_cover(radius: f64, half_angle: f64) -> PuCover {
    let e = UnitVec3::new(1.0, 0.0, 0.0).unwrap();
    let z = [0.0, 0.0, 1.0];
    let c0 = rotated(&e, z, half_angle);
    let c1 = rotated(&e, z, -half_angle);
    let pts: Vec<UnitVec3> = fibonacci_nodes(3000)
        .unwrap()
        .nodes()
        .iter()
        .filter(|x| x.dist(&c0) < radius || x.dist(&c1) < radius)
        .copied()
        .collect();
    let nodes = NodeSet::new(pts).unwrap();
    let centers = NodeSet::new(vec![c0, c1]).unwrap();
    build_cover_with_radius(&nodes, &centers, 17, 1.5, radius).unwrap()
}

#[test]
fn symmetric_and_single_patch_weights() {
    let cover = two_patch_cover(0.5, 0.25);
    let mid = UnitVec3::new(1.0, 0.0, 0.0).unwrap();
    let w = pu_weights(&cover, &mid);
    assert_eq!(w.len(), 2);
    for (_, v) in &w {
        assert!((v - 0.5).abs() < 1e-15);
    }
    let c0 = *cover.patches()[0].center();
    let beyond = rotated(&c0, [0.0, 0.0, 1.0], 0.2);
    let w = pu_weights(&cover, &beyond);
    assert_eq!(w, vec![(0, 1.0)]);
}

#[test]
fn blended_weights_are_c2_along_a_transect() {
    let nodes = icosahedral_nodes(4).unwrap();
    let cover = standard_cover(&nodes, 49, 2.5);
    let r = cover.radius();
    let p = 7;
    let c = *cover.patches()[p].center();
    // Unit axis perpendicular to the center; points at chord distance t·R.
    let a = c.as_array();
    let raw = [a[1], -a[0], 0.0];
    let s = (raw[0] * raw[0] + raw[1] * raw[1]).sqrt();
    let axis = [raw[0] / s, raw[1] / s, 0.0];
    let w_at = |t: f64| {
        let x = rotated(&c, axis, 2.0 * (t * r / 2.0).asin());
        pu_weights(&cover, &x)
            .into_iter()
            .find(|(q, _)| *q == p)
            .map_or(0.0, |(_, v)| v)
    };
    for t0 in [0.5, 1.0] {
        let jump = second_derivative_jump(&w_at, t0, 1e-3);
        let finer = second_derivative_jump(&w_at, t0, 5e-4);
        assert!(jump < 1e-4, "knot {t0}: jump {jump}");
        assert!(finer < jump / 3.0, "knot {t0}: {jump} then {finer}");
    }
}

#[test]
fn interpolates_at_nodes_and_reproduces_constants() {
    let nodes = icosahedral_nodes(4).unwrap();
    let mut pu = PuInterpolant::from_cover(&nodes, standard_cover(&nodes, 31, 2.5));
    let f: Vec<f64> = nodes.nodes().iter().map(|x| (3.0 * x.y()).sin() + x.x()).collect();
    let at = pu.interpolate(&f, nodes.nodes()).unwrap();
    assert!(max_diff(&at, &f) <= 1e-10 * max_abs(&f));

    let ones = vec![1.0; nodes.len()];
    let v = pu.interpolate(&ones, &random_points(2000, 4)).unwrap();
    assert!(v.iter().all(|x| (x - 1.0).abs() < 1e-12));
}

#[test]
fn reproduces_harmonics_up_to_degree_l() {
    let nodes = icosahedral_nodes(4).unwrap();
    let targets = random_points(1000, 9);
    let mut pu = PuInterpolant::from_cover(&nodes, standard_cover(&nodes, 49, 2.5));
    let f: Vec<f64> = nodes.nodes().iter().map(y21).collect();
    let v = pu.interpolate(&f, &targets).unwrap();
    let exact: Vec<f64> = targets.iter().map(y21).collect();
    assert!(max_diff(&v, &exact) <= 1e-8 * max_abs(&exact));

    let (sh, _) = sh_degree_for_stencil(49);
    for i in 0..sh.dim() {
        let f: Vec<f64> = nodes.nodes().iter().map(|x| sh.eval(x)[i]).collect();
        let v = pu.interpolate(&f, &targets).unwrap();
        let exact: Vec<f64> = targets.iter().map(|x| sh.eval(x)[i]).collect();
        assert!(max_diff(&v, &exact) <= 1e-8 * max_abs(&exact), "harmonic {i}");
    }
}
