//! Proximity graph construction and local edge updates.
//!
//! A pair is linked iff its forbidden region contains no cloud point. The
//! naive builder tests every point against every pair and serves as the
//! oracle; the accelerated builder prunes blocker candidates through a
//! spatial hash grid using the certificate balls B(x, D rho) and
//! B(y, D rho), which contain the region by construction.

use crate::error::{PxgError, Result};
use crate::geom;
use crate::grid::SpatialGrid;
use crate::pointproc::PointCloud;
use crate::regions::{PairRegion, RegionFamily};

/// Undirected graph on a point cloud; edges are (i, j) with i < j, sorted.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProximityGraph {
    n: usize,
    edges: Vec<(u32, u32)>,
}

impl ProximityGraph {
    pub fn n_vertices(&self) -> usize {
        self.n
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[(u32, u32)] {
        &self.edges
    }

    pub fn contains_edge(&self, i: u32, j: u32) -> bool {
        let key = if i < j { (i, j) } else { (j, i) };
        self.edges.binary_search(&key).is_ok()
    }

    pub fn degrees(&self) -> Vec<usize> {
        let mut deg = vec![0usize; self.n];
        for &(i, j) in &self.edges {
            deg[i as usize] += 1;
            deg[j as usize] += 1;
        }
        deg
    }
}

/// Change to the edge set caused by inserting one point.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeDiff {
    pub point: Vec<f64>,
    /// Cloud indices that gain an edge to the new point.
    pub added_partners: Vec<u32>,
    /// Existing edges destroyed because the new point blocks them.
    pub removed_edges: Vec<(u32, u32)>,
}

impl EdgeDiff {
    pub fn is_empty(&self) -> bool {
        self.added_partners.is_empty() && self.removed_edges.is_empty()
    }
}

fn validate_family_cloud(cloud: &PointCloud, family: &RegionFamily) -> Result<()> {
    if cloud.dim() != family.dim() {
        return Err(PxgError::DimensionMismatch {
            expected: family.dim(),
            got: cloud.dim(),
        });
    }
    Ok(())
}

/// Rejects clouds with coinciding points: regions are undefined for rho = 0.
pub fn check_distinct(cloud: &PointCloud) -> Result<()> {
    let n = cloud.n();
    let mut order: Vec<u32> = (0..n as u32).collect();
    order.sort_unstable_by(|&a, &b| {
        let pa = cloud.point(a as usize);
        let pb = cloud.point(b as usize);
        pa.partial_cmp(pb).expect("finite coordinates")
    });
    for w in order.windows(2) {
        if geom::bits_equal(cloud.point(w[0] as usize), cloud.point(w[1] as usize)) {
            let (a, b) = (w[0].min(w[1]) as usize, w[0].max(w[1]) as usize);
            return Err(PxgError::DuplicatePoints { first: a, second: b });
        }
    }
    Ok(())
}

/// Quadratic-time reference builder.
pub fn build_naive(cloud: &PointCloud, family: &RegionFamily) -> Result<ProximityGraph> {
    validate_family_cloud(cloud, family)?;
    check_distinct(cloud)?;
    let n = cloud.n();
    let mut edges = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            let pr = family.pair_unchecked(cloud.point(i), cloud.point(j));
            let mut blocked = false;
            for k in 0..n {
                if k == i || k == j {
                    continue;
                }
                if pr.contains(cloud.point(k)) {
                    blocked = true;
                    break;
                }
            }
            if !blocked {
                edges.push((i as u32, j as u32));
            }
        }
    }
    Ok(ProximityGraph { n, edges })
}

/// Cloud with its blocker-search grid.
pub struct CloudIndex<'a> {
    pub cloud: &'a PointCloud,
    grid: SpatialGrid,
}

impl<'a> CloudIndex<'a> {
    pub fn new(cloud: &'a PointCloud) -> Self {
        let dim = cloud.dim();
        let n = cloud.n().max(1);
        // Cell edge near the mean nearest-neighbor scale.
        let vol = cloud.window().volume();
        let diam = cloud.window().diameter();
        let cell = (vol / n as f64)
            .powf(1.0 / dim as f64)
            .clamp(diam * 1e-6, diam);
        let grid = SpatialGrid::build(cloud.iter_points(), dim, cell);
        CloudIndex { cloud, grid }
    }

    pub fn grid(&self) -> &SpatialGrid {
        &self.grid
    }

    /// True iff no cloud point other than `skip_a`/`skip_b` lies in the
    /// region. Exact: the grid only narrows which points get tested.
    pub fn region_empty(&self, pr: &PairRegion<'_>, skip_a: usize, skip_b: usize) -> bool {
        let dim = self.cloud.dim();
        // Fast path: probe the cells around the inscribed-ball center,
        // where a blocker is most likely. When the region dwarfs the cell
        // size the whole 3^d neighborhood lies inside it, so dense clouds
        // almost always terminate here.
        let mut ins = [0.0; geom::MAX_DIM];
        pr.inscribed_center_into(&mut ins[..dim]);
        let key0 = self.grid.key_of(&ins[..dim]);
        let wide = pr.inscribed_radius() > self.grid.cell_size();
        if wide {
            for key in self.grid.neighborhood_keys(&key0) {
                for &k in self.grid.bucket(&key) {
                    let k = k as usize;
                    if k == skip_a || k == skip_b {
                        continue;
                    }
                    if pr.contains(self.cloud.point(k)) {
                        return false;
                    }
                }
            }
        } else {
            for &k in self.grid.bucket(&key0) {
                let k = k as usize;
                if k == skip_a || k == skip_b {
                    continue;
                }
                if pr.contains(self.cloud.point(k)) {
                    return false;
                }
            }
        }
        // Full sweep over cells meeting the enclosing box of the region.
        let enc = pr.enclosing_radius();
        let mid = pr.midpoint();
        let mut lo = [0.0; geom::MAX_DIM];
        let mut hi = [0.0; geom::MAX_DIM];
        for k in 0..dim {
            lo[k] = mid[k] - enc;
            hi[k] = mid[k] + enc;
        }
        for key in self.grid.covering_keys(&lo[..dim], &hi[..dim]) {
            let probed = if wide {
                (0..dim).all(|k| (key[k] - key0[k]).abs() <= 1)
            } else {
                key == key0
            };
            if probed {
                continue;
            }
            for &k in self.grid.bucket(&key) {
                let k = k as usize;
                if k == skip_a || k == skip_b {
                    continue;
                }
                if pr.contains(self.cloud.point(k)) {
                    return false;
                }
            }
        }
        true
    }
}

/// Grid-accelerated builder; agrees with `build_naive` exactly.
pub fn build_accelerated(cloud: &PointCloud, family: &RegionFamily) -> Result<ProximityGraph> {
    validate_family_cloud(cloud, family)?;
    check_distinct(cloud)?;
    let n = cloud.n();
    let index = CloudIndex::new(cloud);
    let mut edges = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            let pr = family.pair_unchecked(cloud.point(i), cloud.point(j));
            if index.region_empty(&pr, i, j) {
                edges.push((i as u32, j as u32));
            }
        }
    }
    Ok(ProximityGraph { n, edges })
}

fn validate_graph_cloud(cloud: &PointCloud, graph: &ProximityGraph) -> Result<()> {
    if graph.n_vertices() != cloud.n() {
        return Err(PxgError::GraphCloudMismatch {
            graph_points: graph.n_vertices(),
            cloud_points: cloud.n(),
        });
    }
    Ok(())
}

/// Edge changes from inserting x, computed against a prebuilt index.
pub fn edge_diff_indexed(
    index: &CloudIndex<'_>,
    graph: &ProximityGraph,
    family: &RegionFamily,
    x: &[f64],
) -> Result<EdgeDiff> {
    let cloud = index.cloud;
    validate_family_cloud(cloud, family)?;
    validate_graph_cloud(cloud, graph)?;
    if x.len() != cloud.dim() {
        return Err(PxgError::DimensionMismatch {
            expected: cloud.dim(),
            got: x.len(),
        });
    }
    // Inserting a point already present changes nothing.
    for p in cloud.iter_points() {
        if geom::bits_equal(p, x) {
            return Ok(EdgeDiff {
                point: x.to_vec(),
                added_partners: Vec::new(),
                removed_edges: Vec::new(),
            });
        }
    }
    // Removed: existing edges whose region contains x. The certificate
    // balls around both endpoints prune most edges in O(1).
    let dd = family.normalized_diameter();
    let mut removed = Vec::new();
    for &(i, j) in graph.edges() {
        let pi = cloud.point(i as usize);
        let pj = cloud.point(j as usize);
        let rho2 = geom::dist2(pi, pj);
        let cap = dd * dd * rho2 * (1.0 + 1e-9);
        if geom::dist2(x, pi) > cap || geom::dist2(x, pj) > cap {
            continue;
        }
        let pr = family.pair_unchecked(pi, pj);
        if pr.contains(x) {
            removed.push((i, j));
        }
    }
    // Added: partners z whose region S(x, z) avoids the cloud.
    let mut added = Vec::new();
    for z in 0..cloud.n() {
        let pr = family.pair_unchecked(x, cloud.point(z));
        if index.region_empty(&pr, z, usize::MAX) {
            added.push(z as u32);
        }
    }
    Ok(EdgeDiff {
        point: x.to_vec(),
        added_partners: added,
        removed_edges: removed,
    })
}

/// Edge changes from inserting x into the cloud underlying `graph`.
pub fn edge_diff(
    cloud: &PointCloud,
    graph: &ProximityGraph,
    family: &RegionFamily,
    x: &[f64],
) -> Result<EdgeDiff> {
    let index = CloudIndex::new(cloud);
    edge_diff_indexed(&index, graph, family, x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::Window;
    use crate::pointproc::{sample_binomial, sample_poisson};
    use crate::regions::{BuiltinTemplate, RegionFamily};

    #[test]
    fn two_points_always_linked() {
        let cloud = PointCloud::from_points(2, vec![0.0, 0.0, 1.0, 1.0], None).unwrap();
        for fam in [
            RegionFamily::gabriel(2).unwrap(),
            RegionFamily::relative_neighborhood(2).unwrap(),
        ] {
            let g = build_naive(&cloud, &fam).unwrap();
            assert_eq!(g.edges(), &[(0, 1)]);
        }
    }

    #[test]
    fn collinear_midpoint_blocks_gabriel() {
        let cloud =
            PointCloud::from_points(1, vec![0.0, 1.0, 2.0], None).unwrap();
        let fam = RegionFamily::gabriel(1).unwrap();
        let g = build_naive(&cloud, &fam).unwrap();
        // 1 blocks {0, 2}; adjacent pairs stay.
        assert_eq!(g.edges(), &[(0, 1), (1, 2)]);
    }

    #[test]
    fn duplicates_rejected() {
        let cloud =
            PointCloud::from_points(2, vec![0.0, 0.0, 0.5, 0.5, 0.0, 0.0], None).unwrap();
        let fam = RegionFamily::gabriel(2).unwrap();
        match build_naive(&cloud, &fam) {
            Err(PxgError::DuplicatePoints { first, second }) => {
                assert_eq!((first, second), (0, 2));
            }
            other => panic!("expected duplicate error, got {other:?}"),
        }
    }

    #[test]
    fn accelerated_matches_naive_on_random_clouds() {
        let mut mismatches = 0;
        for seed in 0..30u64 {
            let dim = 1 + (seed % 3) as usize;
            let w = if seed % 2 == 0 {
                Window::unit_cube(dim).unwrap()
            } else {
                Window::unit_ball(dim).unwrap()
            };
            let cloud = sample_poisson(&w, 40.0, seed).unwrap();
            if cloud.n() < 2 {
                continue;
            }
            for fam in [
                RegionFamily::gabriel(dim).unwrap(),
                RegionFamily::relative_neighborhood(dim).unwrap(),
                RegionFamily::builtin_template(dim, BuiltinTemplate::AnnulusSector).unwrap(),
            ] {
                let a = build_naive(&cloud, &fam).unwrap();
                let b = build_accelerated(&cloud, &fam).unwrap();
                if a != b {
                    mismatches += 1;
                }
            }
        }
        assert_eq!(mismatches, 0);
    }

    #[test]
    fn rng_edges_subset_of_gabriel() {
        let w = Window::unit_cube(2).unwrap();
        let cloud = sample_binomial(&w, 60, 5).unwrap();
        let g = build_accelerated(&cloud, &RegionFamily::gabriel(2).unwrap()).unwrap();
        let r =
            build_accelerated(&cloud, &RegionFamily::relative_neighborhood(2).unwrap()).unwrap();
        for &(i, j) in r.edges() {
            assert!(g.contains_edge(i, j), "rng edge ({i},{j}) missing from gabriel");
        }
    }

    #[test]
    fn edge_diff_matches_rebuild() {
        let w = Window::unit_cube(2).unwrap();
        let fam = RegionFamily::relative_neighborhood(2).unwrap();
        for seed in 0..20u64 {
            let cloud = sample_binomial(&w, 40, seed).unwrap();
            let graph = build_accelerated(&cloud, &fam).unwrap();
            let x = sample_binomial(&w, 1, 1000 + seed).unwrap().point(0).to_vec();
            let diff = edge_diff(&cloud, &graph, &fam, &x).unwrap();

            let bigger = cloud.with_extra(&[x.clone()]).unwrap();
            let rebuilt = build_accelerated(&bigger, &fam).unwrap();
            let xi = cloud.n() as u32;
            let mut expect: Vec<(u32, u32)> = graph.edges().to_vec();
            expect.retain(|e| !diff.removed_edges.contains(e));
            for &z in &diff.added_partners {
                expect.push((z.min(xi), z.max(xi)));
            }
            expect.sort_unstable();
            assert_eq!(rebuilt.edges(), expect.as_slice(), "seed {seed}");
        }
    }

    #[test]
    fn edge_diff_of_existing_point_is_empty() {
        let w = Window::unit_cube(2).unwrap();
        let fam = RegionFamily::gabriel(2).unwrap();
        let cloud = sample_binomial(&w, 30, 3).unwrap();
        let graph = build_accelerated(&cloud, &fam).unwrap();
        let diff = edge_diff(&cloud, &graph, &fam, cloud.point(7)).unwrap();
        assert!(diff.is_empty());
    }

    #[test]
    fn insertion_never_links_preexisting_vertices() {
        let w = Window::unit_cube(2).unwrap();
        let fam = RegionFamily::gabriel(2).unwrap();
        for seed in 0..10u64 {
            let cloud = sample_binomial(&w, 50, seed).unwrap();
            let graph = build_accelerated(&cloud, &fam).unwrap();
            let x = sample_binomial(&w, 1, 500 + seed).unwrap().point(0).to_vec();
            let bigger = cloud.with_extra(&[x]).unwrap();
            let rebuilt = build_accelerated(&bigger, &fam).unwrap();
            let xi = cloud.n() as u32;
            for &(i, j) in rebuilt.edges() {
                if j != xi {
                    assert!(
                        graph.contains_edge(i, j),
                        "new edge ({i},{j}) between old vertices"
                    );
                }
            }
        }
    }
}
