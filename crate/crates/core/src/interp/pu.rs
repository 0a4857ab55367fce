use std::sync::atomic::{AtomicU64, Ordering};

use rayon::prelude::*;

use super::{AugmentedSystem, FitScratch, Interpolator};
use crate::basis::{sh_degree_for_stencil, KernelSpec};
use crate::error::{Error, Result};
use crate::geometry::{KdTree, NodeSet, UnitVec3};

/// Compactly supported cubic B-spline used for the PU weights.
pub fn bspline_weight(r: f64) -> f64 {
    if r < 0.5 {
        2.0 / 3.0 + 4.0 * (r - 1.0) * r * r
    } else if r < 1.0 {
        let s = r - 1.0;
        -4.0 / 3.0 * s * s * s
    } else {
        0.0
    }
}

/// Common patch radius `2√(n/N)`.
pub fn patch_radius(n_nodes: usize, n: usize) -> f64 {
    2.0 * (n as f64 / n_nodes as f64).sqrt()
}

/// Patch count `⌈aN/n⌉`.
pub fn patch_count(n_nodes: usize, n: usize, a: f64) -> usize {
    (a * n_nodes as f64 / n as f64).ceil() as usize
}

/// One spherical-cap patch with its factorized local system.
#[derive(Debug, Clone)]
pub struct Patch {
    center: UnitVec3,
    radius: f64,
    system: AugmentedSystem,
}

impl Patch {
    pub fn center(&self) -> &UnitVec3 {
        &self.center
    }
    pub fn radius(&self) -> f64 {
        self.radius
    }
    pub fn member_indices(&self) -> &[usize] {
        self.system.members()
    }
    pub fn system(&self) -> &AugmentedSystem {
        &self.system
    }
}

#[derive(Debug)]
pub struct PuCover {
    patches: Vec<Patch>,
    centers: KdTree,
    radius: f64,
    n_target: usize,
    a_target: f64,
    fallbacks: AtomicU64,
}

impl Clone for PuCover {
    fn clone(&self) -> Self {
        PuCover {
            patches: self.patches.clone(),
            centers: self.centers.clone(),
            radius: self.radius,
            n_target: self.n_target,
            a_target: self.a_target,
            fallbacks: AtomicU64::new(self.fallbacks.load(Ordering::Relaxed)),
        }
    }
}

/// Builds the cover with the standard radius `2√(n/N)`.
pub fn build_cover(
    nodes: &NodeSet,
    patch_centers: &NodeSet,
    n: usize,
    a: f64,
) -> Result<PuCover> {
    if !(a >= 1.5) {
        return Err(Error::Argument(format!("patch multiplicity a must be >= 1.5, got {a}")));
    }
    build_cover_with_radius(nodes, patch_centers, n, a, patch_radius(nodes.len(), n))
}

/// Builds the cover with an explicit Euclidean patch radius.
pub fn build_cover_with_radius(
    nodes: &NodeSet,
    patch_centers: &NodeSet,
    n: usize,
    a: f64,
    radius: f64,
) -> Result<PuCover> {
    let (sh, k) = sh_degree_for_stencil(n);
    let kernel = KernelSpec::phs(k);
    let min_members = sh.dim() + 1;
    let patches: Vec<Patch> = patch_centers
        .nodes()
        .par_iter()
        .enumerate()
        .map(|(p, c)| {
            let members = nodes.within_radius(c, radius);
            if members.len() < min_members {
                return Err(Error::Cover(format!(
                    "patch {p} has {} nodes, fewer than the {min_members} required; increase n",
                    members.len()
                )));
            }
            let system = AugmentedSystem::new(members, nodes.nodes(), kernel, sh, radius)
                .map_err(|e| Error::SingularPatch {
                    patch: p,
                    source: Box::new(e),
                })?;
            Ok(Patch {
                center: *c,
                radius,
                system,
            })
        })
        .collect::<Result<_>>()?;

    let mut covered = vec![false; nodes.len()];
    for p in &patches {
        for &i in p.member_indices() {
            covered[i] = true;
        }
    }
    if let Some(i) = covered.iter().position(|c| !c) {
        return Err(Error::Cover(format!(
            "node {i} lies in no patch; increase the multiplicity a"
        )));
    }
    Ok(PuCover {
        patches,
        centers: patch_centers.index().clone(),
        radius,
        n_target: n,
        a_target: a,
        fallbacks: AtomicU64::new(0),
    })
}

impl PuCover {
    pub fn patches(&self) -> &[Patch] {
        &self.patches
    }
    pub fn radius(&self) -> f64 {
        self.radius
    }
    pub fn n_target(&self) -> usize {
        self.n_target
    }
    pub fn a_target(&self) -> f64 {
        self.a_target
    }
    /// Number of evaluations that fell outside every patch so far.
    pub fn fallback_count(&self) -> u64 {
        self.fallbacks.load(Ordering::Relaxed)
    }

    /// Patches containing `x` with unnormalized B-spline weights.
    fn raw_weights(&self, x: &UnitVec3) -> Vec<(usize, f64)> {
        self.centers
            .within_radius(x.as_array(), self.radius)
            .into_iter()
            .map(|p| (p, bspline_weight(x.dist(&self.patches[p].center) / self.radius)))
            .filter(|(_, w)| *w > 0.0)
            .collect()
    }

    /// Weights at `x`, or `None` when `x` lies in no patch.
    fn weights_or_none(&self, x: &UnitVec3) -> Option<Vec<(usize, f64)>> {
        let mut w = self.raw_weights(x);
        if w.is_empty() {
            return None;
        }
        let total: f64 = w.iter().map(|(_, v)| v).sum();
        for (_, v) in w.iter_mut() {
            *v /= total;
        }
        Some(w)
    }
}

/// Normalized PU weights at `x`. Points in no patch get weight 1 on the
/// nearest patch and are counted as fallbacks.
pub fn pu_weights(cover: &PuCover, x: &UnitVec3) -> Vec<(usize, f64)> {
    match cover.weights_or_none(x) {
        Some(w) => w,
        None => {
            cover.fallbacks.fetch_add(1, Ordering::Relaxed);
            log::warn!("point {:?} lies in no patch; using the nearest patch", x.as_array());
            vec![(cover.centers.nearest(x.as_array()), 1.0)]
        }
    }
}

/// Partition-of-unity backend. Patch fits are shared across targets.
#[derive(Debug, Clone)]
pub struct PuInterpolant {
    nodes: NodeSet,
    cover: PuCover,
    coeffs: Vec<Vec<f64>>,
}

impl PuInterpolant {
    pub fn new(nodes: &NodeSet, patch_centers: &NodeSet, n: usize, a: f64) -> Result<Self> {
        Ok(Self::from_cover(nodes, build_cover(nodes, patch_centers, n, a)?))
    }

    pub fn from_cover(nodes: &NodeSet, cover: PuCover) -> Self {
        PuInterpolant {
            nodes: nodes.clone(),
            cover,
            coeffs: Vec::new(),
        }
    }

    pub fn cover(&self) -> &PuCover {
        &self.cover
    }

    /// Fits every patch to the nodal field.
    pub fn fit(&mut self, field: &[f64]) -> Result<()> {
        if field.len() != self.nodes.len() {
            return Err(Error::Dimension {
                expected: self.nodes.len(),
                got: field.len(),
            });
        }
        self.coeffs = self
            .cover
            .patches
            .par_iter()
            .map_init(FitScratch::default, |s, p| p.system.fit_field(field, s).to_vec())
            .collect();
        Ok(())
    }

    /// Blends the fitted patch interpolants at each target.
    pub fn eval(&self, targets: &[UnitVec3]) -> Vec<f64> {
        targets
            .par_iter()
            .map_init(Vec::new, |sh, x| {
                pu_weights(&self.cover, x)
                    .into_iter()
                    .map(|(p, w)| {
                        w * self.cover.patches[p].system.eval(&self.coeffs[p], x.as_array(), sh)
                    })
                    .sum()
            })
            .collect()
    }
}

impl Interpolator for PuInterpolant {
    fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    fn interpolate(&mut self, values: &[f64], targets: &[UnitVec3]) -> Result<Vec<f64>> {
        self.fit(values)?;
        Ok(self.eval(targets))
    }

    fn warnings(&self) -> u64 {
        self.cover.fallback_count()
    }
}
