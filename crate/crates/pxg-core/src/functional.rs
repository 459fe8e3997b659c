//! Edge functionals and difference operators.
//!
//! L(mu) sums an edge weight over the proximity graph of mu. The one-point
//! difference D_x L = L(mu + x) - L(mu) reduces to the edges the insertion
//! adds minus the edges it destroys, so it only needs a local update. The
//! affected set A(x; mu) collects the partners of added edges and the
//! endpoints of removed ones; the certified bound
//! |D_x L| <= C_alpha * sum_{z in A} |z - x|^alpha with
//! C_alpha = C * max(1, 2^(alpha - 1)) is checked by
//! `derivative_bound_check`.

use std::sync::Arc;

use crate::error::{PxgError, Result};
use crate::geom;
use crate::graph::{self, CloudIndex, EdgeDiff, ProximityGraph};
use crate::pointproc::PointCloud;
use crate::regions::RegionFamily;

/// Pair weight with a certified growth envelope |psi(x, y)| <= C |x - y|^alpha.
#[derive(Clone)]
pub enum WeightSpec {
    /// psi(x, y) = |x - y|^alpha, alpha >= 0; alpha = 0 counts edges,
    /// alpha = 1 totals edge lengths.
    Power { alpha: f64 },
    /// Arbitrary symmetric weight with envelope constants supplied by the
    /// caller.
    Custom {
        alpha: f64,
        growth: f64,
        f: Arc<dyn Fn(&[f64], &[f64]) -> f64 + Send + Sync>,
    },
}

impl std::fmt::Debug for WeightSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            WeightSpec::Power { alpha } => write!(f, "Power {{ alpha: {alpha} }}"),
            WeightSpec::Custom { alpha, growth, .. } => {
                write!(f, "Custom {{ alpha: {alpha}, growth: {growth} }}")
            }
        }
    }
}

impl WeightSpec {
    pub fn power(alpha: f64) -> Result<Self> {
        if !(alpha.is_finite() && alpha >= 0.0) {
            return Err(PxgError::invalid("power weight needs alpha >= 0"));
        }
        Ok(WeightSpec::Power { alpha })
    }

    pub fn custom(
        alpha: f64,
        growth: f64,
        f: Arc<dyn Fn(&[f64], &[f64]) -> f64 + Send + Sync>,
    ) -> Result<Self> {
        if !(alpha.is_finite() && alpha >= 0.0) || !(growth.is_finite() && growth > 0.0) {
            return Err(PxgError::invalid(
                "custom weight needs alpha >= 0 and growth > 0",
            ));
        }
        Ok(WeightSpec::Custom { alpha, growth, f })
    }

    pub fn alpha(&self) -> f64 {
        match self {
            WeightSpec::Power { alpha } | WeightSpec::Custom { alpha, .. } => *alpha,
        }
    }

    /// Envelope constant C.
    pub fn growth(&self) -> f64 {
        match self {
            WeightSpec::Power { .. } => 1.0,
            WeightSpec::Custom { growth, .. } => *growth,
        }
    }

    /// C_alpha = C * max(1, 2^(alpha - 1)).
    pub fn c_alpha(&self) -> f64 {
        self.growth() * 1f64.max((self.alpha() - 1.0).exp2())
    }

    #[inline]
    pub fn eval(&self, x: &[f64], y: &[f64]) -> f64 {
        match self {
            WeightSpec::Power { alpha } => {
                if *alpha == 0.0 {
                    1.0
                } else if *alpha == 1.0 {
                    geom::dist(x, y)
                } else if *alpha == 2.0 {
                    geom::dist2(x, y)
                } else {
                    geom::dist(x, y).powf(*alpha)
                }
            }
            WeightSpec::Custom { f, .. } => f(x, y),
        }
    }
}

/// L(mu) = sum of psi over the edges of `graph`, in sorted edge order.
pub fn eval_l(cloud: &PointCloud, graph: &ProximityGraph, weight: &WeightSpec) -> Result<f64> {
    if graph.n_vertices() != cloud.n() {
        return Err(PxgError::GraphCloudMismatch {
            graph_points: graph.n_vertices(),
            cloud_points: cloud.n(),
        });
    }
    let mut acc = 0.0;
    for &(i, j) in graph.edges() {
        acc += weight.eval(cloud.point(i as usize), cloud.point(j as usize));
    }
    Ok(acc)
}

fn diff_value(cloud: &PointCloud, weight: &WeightSpec, diff: &EdgeDiff) -> f64 {
    let mut acc = 0.0;
    for &z in &diff.added_partners {
        acc += weight.eval(&diff.point, cloud.point(z as usize));
    }
    for &(i, j) in &diff.removed_edges {
        acc -= weight.eval(cloud.point(i as usize), cloud.point(j as usize));
    }
    acc
}

/// D_x L = L(mu + x) - L(mu), via the local edge diff.
pub fn add_one_cost(
    cloud: &PointCloud,
    graph: &ProximityGraph,
    family: &RegionFamily,
    weight: &WeightSpec,
    x: &[f64],
) -> Result<f64> {
    let diff = graph::edge_diff(cloud, graph, family, x)?;
    Ok(diff_value(cloud, weight, &diff))
}

/// `add_one_cost` against a prebuilt index, for tight evaluation loops.
pub fn add_one_cost_indexed(
    index: &CloudIndex<'_>,
    graph: &ProximityGraph,
    family: &RegionFamily,
    weight: &WeightSpec,
    x: &[f64],
) -> Result<f64> {
    let diff = graph::edge_diff_indexed(index, graph, family, x)?;
    Ok(diff_value(index.cloud, weight, &diff))
}

/// Second difference
/// D2_{x,y} L = L(mu+x+y) - L(mu+x) - L(mu+y) + L(mu), by four builds.
pub fn second_difference(
    cloud: &PointCloud,
    family: &RegionFamily,
    weight: &WeightSpec,
    x: &[f64],
    y: &[f64],
) -> Result<f64> {
    if x.len() != cloud.dim() || y.len() != cloud.dim() {
        return Err(PxgError::DimensionMismatch {
            expected: cloud.dim(),
            got: if x.len() != cloud.dim() { x.len() } else { y.len() },
        });
    }
    if geom::bits_equal(x, y) {
        return Err(PxgError::CoincidentPair);
    }
    let eval = |extra: &[Vec<f64>]| -> Result<f64> {
        let c = cloud.with_extra(extra)?;
        let g = graph::build_accelerated(&c, family)?;
        eval_l(&c, &g, weight)
    };
    let l_xy = eval(&[x.to_vec(), y.to_vec()])?;
    let l_x = eval(&[x.to_vec()])?;
    let l_y = eval(&[y.to_vec()])?;
    let l_0 = eval(&[])?;
    Ok(l_xy - l_x - l_y + l_0)
}

/// Result of checking |D_x L| against the affected-set bound.
///
/// `bound` expands each removed edge onto both endpoints via the triangle
/// inequality, so a vertex contributes once per incident removed edge.
/// `bound_collapsed` sums over the deduplicated affected set instead; it is
/// sharper but genuinely fails when one vertex supports several removed
/// edges, so `holds` is tied to `bound`.
#[derive(Debug, Clone)]
pub struct BoundCheck {
    pub difference: f64,
    pub bound: f64,
    pub bound_collapsed: f64,
    pub holds: bool,
    pub collapsed_holds: bool,
    /// A(x; mu): added partners plus removed-edge endpoints, sorted.
    pub affected: Vec<u32>,
}

/// Evaluates D_x L against C_alpha times the affected-set distance sums.
pub fn derivative_bound_check(
    cloud: &PointCloud,
    family: &RegionFamily,
    weight: &WeightSpec,
    x: &[f64],
) -> Result<BoundCheck> {
    let graph = graph::build_accelerated(cloud, family)?;
    let diff = graph::edge_diff(cloud, &graph, family, x)?;
    let difference = diff_value(cloud, weight, &diff);
    let alpha = weight.alpha();
    let term = |z: u32| geom::dist(x, cloud.point(z as usize)).powf(alpha);
    let mut affected: Vec<u32> = diff.added_partners.clone();
    let mut bound: f64 = diff.added_partners.iter().map(|&z| term(z)).sum();
    for &(i, j) in &diff.removed_edges {
        affected.push(i);
        affected.push(j);
        bound += term(i) + term(j);
    }
    affected.sort_unstable();
    affected.dedup();
    let bound_collapsed: f64 = weight.c_alpha() * affected.iter().map(|&z| term(z)).sum::<f64>();
    bound *= weight.c_alpha();
    let tol = 1e-9 * bound.abs().max(1.0);
    let tol_collapsed = 1e-9 * bound_collapsed.abs().max(1.0);
    Ok(BoundCheck {
        difference,
        bound,
        bound_collapsed,
        holds: difference.abs() <= bound + tol,
        collapsed_holds: difference.abs() <= bound_collapsed + tol_collapsed,
        affected,
    })
}
