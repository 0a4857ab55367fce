use rayon::prelude::*;

use super::{AugmentedSystem, FitScratch, Interpolator};
use crate::basis::{sh_degree_for_stencil, KernelSpec};
use crate::error::{Error, Result};
use crate::geometry::{NodeSet, UnitVec3};

/// A node, its `n − 1` nearest neighbors and the factorized saddle system.
#[derive(Debug, Clone)]
pub struct Stencil {
    center: usize,
    system: AugmentedSystem,
}

impl Stencil {
    pub fn center_index(&self) -> usize {
        self.center
    }
    /// Members in ascending distance from the center.
    pub fn member_indices(&self) -> &[usize] {
        self.system.members()
    }
    pub fn system(&self) -> &AugmentedSystem {
        &self.system
    }

    pub fn fit(&self, values_on_members: &[f64]) -> Result<Vec<f64>> {
        self.system.fit_values(values_on_members)
    }
}

/// Builds and factorizes one stencil per node.
pub fn build_stencils(nodes: &NodeSet, n: usize) -> Result<Vec<Stencil>> {
    let (sh, k) = sh_degree_for_stencil(n);
    if n <= sh.dim() {
        return Err(Error::Argument(format!(
            "stencil size {n} must exceed the {} harmonic moment conditions",
            sh.dim()
        )));
    }
    if n > nodes.len() {
        return Err(Error::Argument(format!(
            "stencil size {n} exceeds node count {}",
            nodes.len()
        )));
    }
    let kernel = KernelSpec::phs(k);
    (0..nodes.len())
        .into_par_iter()
        .map(|c| {
            let members = nodes.knn(nodes.node(c), n)?;
            let far = members.last().map(|&j| nodes.node(c).dist(nodes.node(j))).unwrap_or(0.0);
            let scale = if far > 0.0 { far } else { 1.0 };
            let system = AugmentedSystem::new(members, nodes.nodes(), kernel, sh, scale)
                .map_err(|e| Error::SingularStencil {
                    center: c,
                    source: Box::new(e),
                })?;
            Ok(Stencil { center: c, system })
        })
        .collect()
}

/// For each target, fits the stencil of its nearest node and evaluates it.
pub fn eval_local(
    stencils: &[Stencil],
    nodes: &NodeSet,
    field: &[f64],
    targets: &[UnitVec3],
) -> Result<Vec<f64>> {
    if field.len() != nodes.len() {
        return Err(Error::Dimension {
            expected: nodes.len(),
            got: field.len(),
        });
    }
    Ok(targets
        .par_iter()
        .map_init(FitScratch::default, |scratch, xi| {
            let st = &stencils[nodes.nearest_neighbor(xi)].system;
            let coeffs = st.fit_field(field, scratch).to_vec();
            st.eval(&coeffs, xi.as_array(), &mut scratch.sh)
        })
        .collect())
}

/// Local stencil backend.
#[derive(Debug, Clone)]
pub struct LocalInterpolant {
    nodes: NodeSet,
    stencils: Vec<Stencil>,
    n: usize,
}

impl LocalInterpolant {
    pub fn new(nodes: &NodeSet, n: usize) -> Result<Self> {
        Ok(LocalInterpolant {
            nodes: nodes.clone(),
            stencils: build_stencils(nodes, n)?,
            n,
        })
    }

    pub fn stencil_size(&self) -> usize {
        self.n
    }

    pub fn stencils(&self) -> &[Stencil] {
        &self.stencils
    }

    pub fn eval(&self, field: &[f64], targets: &[UnitVec3]) -> Result<Vec<f64>> {
        eval_local(&self.stencils, &self.nodes, field, targets)
    }
}

impl Interpolator for LocalInterpolant {
    fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    fn interpolate(&mut self, values: &[f64], targets: &[UnitVec3]) -> Result<Vec<f64>> {
        self.eval(values, targets)
    }
}
