//! Grid estimates of the stabilization radius.
//!
//! The region union behind the estimate collects every forbidden region
//! S(w, z) generated by a pair of window points whose region avoids the
//! cloud and whose closure touches the base set U; the stabilization radius
//! is the sup distance between U and that union. Pairs range over the
//! continuum, so the estimate scans a corner-aligned lattice (nested under
//! spacing halving) joined with the cloud points themselves.
//!
//! Per-pair sup distances are sampled from a stream keyed by the pair
//! coordinates alone, so a given pair contributes the same value at every
//! spacing and under every supercloud. Consequences, both exact:
//! refinement can only raise the estimate, and growing the cloud can only
//! lower it. The estimate approaches the true radius from below; callers
//! compensate with a margin and a refinement retest.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{PxgError, Result};
use crate::geom::{self, Window};
use crate::graph::CloudIndex;
use crate::pointproc::{self, PointCloud};
use crate::regions::{PairRegion, RegionFamily};
use crate::seeding;
use crate::stats::{self, LineFit};

/// Base set U: a point or a closed ball.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BaseSet {
    Point { center: Vec<f64> },
    Ball { center: Vec<f64>, radius: f64 },
}

impl BaseSet {
    pub fn point(center: Vec<f64>) -> Self {
        BaseSet::Point { center }
    }

    pub fn ball(center: Vec<f64>, radius: f64) -> Result<Self> {
        if !(radius.is_finite() && radius >= 0.0) {
            return Err(PxgError::invalid("base ball radius must be >= 0"));
        }
        Ok(BaseSet::Ball { center, radius })
    }

    pub fn center(&self) -> &[f64] {
        match self {
            BaseSet::Point { center } | BaseSet::Ball { center, .. } => center,
        }
    }

    pub fn radius(&self) -> f64 {
        match self {
            BaseSet::Point { .. } => 0.0,
            BaseSet::Ball { radius, .. } => *radius,
        }
    }

    pub fn dim(&self) -> usize {
        self.center().len()
    }
}

/// Outcome of one region-union scan.
#[derive(Debug, Clone, Serialize)]
pub struct RadiusEstimate {
    /// Largest sampled distance from U to a contributing region; a lower
    /// estimate of the stabilization radius.
    pub max_distance: f64,
    /// `max_distance` plus the lattice cell diagonal, for callers wanting
    /// a resolution-aware cushion.
    pub inflated: f64,
    /// Generating pair of the farthest sampled region point.
    pub witness: Option<(Vec<f64>, Vec<f64>)>,
    pub contributing_regions: usize,
    /// Pairs discarded by the distance prescreens.
    pub pairs_pruned: usize,
    /// Pairs that went through the emptiness test.
    pub pairs_tested: usize,
    pub candidates: usize,
    pub spacing: f64,
    /// Closure-touch probes spent per region.
    pub touch_probes_per_region: usize,
    /// Sup-distance samples spent per contributing region.
    pub sup_samples_per_region: usize,
}

const SUP_REJECTION_SAMPLES: usize = 64;
const SUP_CLIMB_ITERS: usize = 48;
const TOUCH_BALL_PROBES: usize = 8;

/// Corner-aligned lattice covering the window, flattened. Halving the
/// spacing reproduces every coarse point bit-for-bit.
fn lattice_points(window: &Window, spacing: f64) -> Vec<f64> {
    let dim = window.dim();
    let (lo, hi) = window.bounding_box();
    let counts: Vec<usize> = (0..dim)
        .map(|k| ((hi[k] - lo[k]) / spacing).floor() as usize + 1)
        .collect();
    let mut out = Vec::new();
    let mut idx = vec![0usize; dim];
    let mut p = vec![0.0; dim];
    loop {
        for k in 0..dim {
            p[k] = lo[k] + idx[k] as f64 * spacing;
        }
        if window.contains(&p) {
            out.extend_from_slice(&p);
        }
        let mut k = dim;
        loop {
            if k == 0 {
                return out;
            }
            k -= 1;
            idx[k] += 1;
            if idx[k] < counts[k] {
                break;
            }
            idx[k] = 0;
        }
    }
}

/// Deterministic per-pair stream; depends only on the base set and the
/// unordered pair, never on spacing, cloud, or scan order.
fn pair_rng(base: &BaseSet, w: &[f64], z: &[f64]) -> ChaCha8Rng {
    let mut h = seeding::fold_coord_bits(0x9064_7A21, base.center());
    h = seeding::splitmix64(h ^ base.radius().to_bits());
    h = seeding::fold_coord_bits(h, w);
    h = seeding::fold_coord_bits(h, z);
    ChaCha8Rng::seed_from_u64(h)
}

fn unit_ball_sample(rng: &mut ChaCha8Rng, dim: usize, out: &mut [f64]) {
    use rand::Rng;
    use rand_distr::{Distribution, StandardNormal};
    loop {
        let mut n2 = 0.0;
        for v in out.iter_mut().take(dim) {
            *v = StandardNormal.sample(rng);
            n2 += *v * *v;
        }
        if n2 > 1e-12 {
            let u: f64 = rng.random();
            let scale = u.powf(1.0 / dim as f64) / n2.sqrt();
            for v in out.iter_mut().take(dim) {
                *v *= scale;
            }
            return;
        }
    }
}

/// Does the closure of the region touch U? Sampled test: U's center, its
/// axis extremes, a nudge toward the region's inscribed center, and (for
/// ball bases) a few random points of U.
fn touches_base(pr: &PairRegion<'_>, base: &BaseSet, rng: &mut ChaCha8Rng) -> bool {
    let dim = pr.dim();
    let cu = base.center();
    let eps = base.radius();
    let mut probe = [0.0; geom::MAX_DIM];
    if pr.contains(cu) {
        return true;
    }
    // Nudge from U toward the inscribed center catches closure-only
    // contact along the boundary.
    let mut ins = [0.0; geom::MAX_DIM];
    pr.inscribed_center_into(&mut ins[..dim]);
    let to_ins = geom::dist(&ins[..dim], cu);
    if to_ins > 0.0 {
        let step = (1e-6 * pr.rho()).min(0.5 * to_ins) + eps;
        let inv = 1.0 / to_ins;
        for k in 0..dim {
            probe[k] = cu[k] + step * (ins[k] - cu[k]) * inv;
        }
        if pr.contains(&probe[..dim]) {
            return true;
        }
    }
    let jitter = 1e-6 * pr.rho();
    for k in 0..dim {
        for sign in [-1.0, 1.0] {
            probe[..dim].copy_from_slice(cu);
            probe[k] += sign * (jitter + eps * (1.0 - 1e-9));
            if pr.contains(&probe[..dim]) {
                return true;
            }
        }
    }
    if eps > 0.0 {
        for _ in 0..TOUCH_BALL_PROBES {
            unit_ball_sample(rng, dim, &mut probe);
            for k in 0..dim {
                probe[k] = cu[k] + eps * (1.0 - 1e-9) * probe[k];
            }
            if pr.contains(&probe[..dim]) {
                return true;
            }
        }
    }
    false
}

/// Largest sampled value of sup_{x in U} |p - x| over region points p.
fn sup_distance(pr: &PairRegion<'_>, base: &BaseSet, rng: &mut ChaCha8Rng) -> f64 {
    let dim = pr.dim();
    let cu = base.center();
    let eps = base.radius();
    let mut best = f64::NEG_INFINITY;
    let mut best_pt = [0.0; geom::MAX_DIM];
    let mut cand = [0.0; geom::MAX_DIM];

    let consider = |p: &[f64], best: &mut f64, best_pt: &mut [f64; geom::MAX_DIM]| {
        let d = geom::dist(p, cu);
        if d > *best {
            *best = d;
            best_pt[..dim].copy_from_slice(p);
        }
    };

    // Extremes of the certified inscribed ball.
    let mut ins = [0.0; geom::MAX_DIM];
    pr.inscribed_center_into(&mut ins[..dim]);
    let r_ins = pr.inscribed_radius() * (1.0 - 1e-9);
    if pr.contains(&ins[..dim]) {
        consider(&ins[..dim], &mut best, &mut best_pt);
    }
    let away = geom::dist(&ins[..dim], cu);
    if away > 0.0 {
        let inv = 1.0 / away;
        for k in 0..dim {
            cand[k] = ins[k] + r_ins * (ins[k] - cu[k]) * inv;
        }
        if pr.contains(&cand[..dim]) {
            consider(&cand[..dim], &mut best, &mut best_pt);
        }
    }
    for k in 0..dim {
        for sign in [-1.0, 1.0] {
            cand[..dim].copy_from_slice(&ins[..dim]);
            cand[k] += sign * r_ins;
            if pr.contains(&cand[..dim]) {
                consider(&cand[..dim], &mut best, &mut best_pt);
            }
        }
    }

    // Rejection samples from the enclosing ball.
    let mid = pr.midpoint();
    let enc = pr.enclosing_radius();
    for _ in 0..SUP_REJECTION_SAMPLES {
        unit_ball_sample(rng, dim, &mut cand);
        for k in 0..dim {
            cand[k] = mid[k] + enc * cand[k];
        }
        if pr.contains(&cand[..dim]) {
            consider(&cand[..dim], &mut best, &mut best_pt);
        }
    }

    if best == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }

    // Greedy ascent from the best point, shrinking steps.
    let mut step = 0.3 * enc;
    let mut dir = [0.0; geom::MAX_DIM];
    for _ in 0..SUP_CLIMB_ITERS {
        unit_ball_sample(rng, dim, &mut dir);
        for k in 0..dim {
            cand[k] = best_pt[k] + step * dir[k];
        }
        if pr.contains(&cand[..dim]) {
            let d = geom::dist(&cand[..dim], cu);
            if d > best {
                best = d;
                best_pt[..dim].copy_from_slice(&cand[..dim]);
            }
        }
        step *= 0.9;
    }
    best + eps
}

fn validate_scan_inputs(
    cloud: &PointCloud,
    family: &RegionFamily,
    base: &BaseSet,
    spacing: f64,
) -> Result<()> {
    let dim = cloud.dim();
    if family.dim() != dim {
        return Err(PxgError::DimensionMismatch {
            expected: dim,
            got: family.dim(),
        });
    }
    if base.dim() != dim {
        return Err(PxgError::DimensionMismatch {
            expected: dim,
            got: base.dim(),
        });
    }
    if !(spacing.is_finite() && spacing > 0.0) {
        return Err(PxgError::invalid("spacing must be finite and > 0"));
    }
    if spacing > cloud.window().diameter() {
        return Err(PxgError::invalid(format!(
            "spacing {spacing} exceeds the window diameter {}",
            cloud.window().diameter()
        )));
    }
    if !cloud.window().contains(base.center()) {
        return Err(PxgError::invalid("base set center lies outside the window"));
    }
    Ok(())
}

struct PairScan<'a> {
    family: &'a RegionFamily,
    cands: Vec<f64>,
    dim: usize,
}

impl<'a> PairScan<'a> {
    fn new(cloud: &PointCloud, family: &'a RegionFamily, spacing: f64) -> Self {
        let dim = cloud.dim();
        let mut cands = lattice_points(cloud.window(), spacing);
        cands.extend_from_slice(cloud.coords());
        PairScan { family, cands, dim }
    }

    fn n(&self) -> usize {
        self.cands.len() / self.dim
    }

    fn cand(&self, i: usize) -> &[f64] {
        &self.cands[i * self.dim..(i + 1) * self.dim]
    }

    /// Canonically ordered pair region, so results depend on the point set
    /// only, not on scan order.
    fn pair_region(&self, i: usize, j: usize) -> PairRegion<'a> {
        let a = self.cand(i);
        let b = self.cand(j);
        if a.partial_cmp(b) == Some(std::cmp::Ordering::Greater) {
            self.family.pair_unchecked(b, a)
        } else {
            self.family.pair_unchecked(a, b)
        }
    }
}

/// Lower estimate of the stabilization radius of U over the cloud.
pub fn estimate_radius(
    cloud: &PointCloud,
    family: &RegionFamily,
    base: &BaseSet,
    spacing: f64,
) -> Result<RadiusEstimate> {
    validate_scan_inputs(cloud, family, base, spacing)?;
    let dim = cloud.dim();
    let scan = PairScan::new(cloud, family, spacing);
    let index = CloudIndex::new(cloud);
    let cu = base.center();
    let eps = base.radius();
    let enc_factor = family.enclosing_radius();

    let mut max_distance = 0.0f64;
    let mut witness = None;
    let mut contributing = 0usize;
    let mut pruned = 0usize;
    let mut tested = 0usize;
    let n = scan.n();
    for i in 0..n {
        let wi = scan.cand(i);
        let du_w = geom::dist(wi, cu);
        for j in (i + 1)..n {
            let zj = scan.cand(j);
            let rho2 = geom::dist2(wi, zj);
            if rho2 == 0.0 {
                continue;
            }
            let rho = rho2.sqrt();
            // Touch needs dist(cu, mid) <= eps + enc * rho; prescreen via
            // the triangle inequality before forming the midpoint.
            let reach = eps + enc_factor * rho;
            if du_w > reach + 0.5 * rho + 1e-9 * rho {
                pruned += 1;
                continue;
            }
            let mut du_mid = 0.0;
            for k in 0..dim {
                let m = 0.5 * (wi[k] + zj[k]) - cu[k];
                du_mid += m * m;
            }
            let du_mid = du_mid.sqrt();
            if du_mid > reach * (1.0 + 1e-12) + 1e-12 {
                pruned += 1;
                continue;
            }
            // No pair can better the current max if even the far side of
            // its enclosing ball falls short.
            if du_mid + reach <= max_distance {
                pruned += 1;
                continue;
            }
            tested += 1;
            let pr = scan.pair_region(i, j);
            if !index.region_empty(&pr, usize::MAX, usize::MAX) {
                continue;
            }
            let mut rng = pair_rng(base, pr.x(), pr.y());
            if !touches_base(&pr, base, &mut rng) {
                continue;
            }
            contributing += 1;
            let d = sup_distance(&pr, base, &mut rng);
            if d > max_distance {
                max_distance = d;
                witness = Some((pr.x().to_vec(), pr.y().to_vec()));
            }
        }
    }

    Ok(RadiusEstimate {
        max_distance,
        inflated: max_distance + spacing * (dim as f64).sqrt(),
        witness,
        contributing_regions: contributing,
        pairs_pruned: pruned,
        pairs_tested: tested,
        candidates: n,
        spacing,
        touch_probes_per_region: 2 * dim + 2 + if eps > 0.0 { TOUCH_BALL_PROBES } else { 0 },
        sup_samples_per_region: 2 * dim + 2 + SUP_REJECTION_SAMPLES + SUP_CLIMB_ITERS,
    })
}

/// Monotonicity of the estimate under cloud growth, on a shared lattice.
#[derive(Debug, Clone, Serialize)]
pub struct MonotonicityReport {
    pub r_mu: f64,
    pub r_nu: f64,
    /// r_nu <= r_mu; guaranteed by construction, reported for auditing.
    pub monotone_ok: bool,
    /// No added point fell in any contributing region of the smaller cloud,
    /// so the two estimates must agree exactly.
    pub equality_expected: bool,
    pub equality_holds: bool,
    pub contributing_mu: usize,
    pub contributing_nu: usize,
    /// Pairs empty under the supercloud but blocked under the subcloud;
    /// impossible, counted as a self-check.
    pub subset_violations: usize,
}

/// Compares the radius estimate for `cloud` and for `cloud` plus `extra`
/// on the same candidate grid (the lattice joined with the larger cloud).
pub fn check_monotonicity(
    cloud: &PointCloud,
    extra: &[Vec<f64>],
    family: &RegionFamily,
    base: &BaseSet,
    spacing: f64,
) -> Result<MonotonicityReport> {
    validate_scan_inputs(cloud, family, base, spacing)?;
    for (i, p) in extra.iter().enumerate() {
        if p.len() != cloud.dim() {
            return Err(PxgError::DimensionMismatch {
                expected: cloud.dim(),
                got: p.len(),
            });
        }
        if !cloud.window().contains(p) {
            return Err(PxgError::invalid(format!(
                "extra point {i} lies outside the window"
            )));
        }
    }
    let bigger = cloud.with_extra(extra)?;
    let scan = PairScan::new(&bigger, family, spacing);
    let index_mu = CloudIndex::new(cloud);
    let index_nu = CloudIndex::new(&bigger);
    let eps = base.radius();
    let cu = base.center();
    let enc_factor = family.enclosing_radius();
    let dim = cloud.dim();

    let mut r_mu = 0.0f64;
    let mut r_nu = 0.0f64;
    let mut contributing_mu = 0usize;
    let mut contributing_nu = 0usize;
    let mut subset_violations = 0usize;
    let mut equality_expected = true;
    let n = scan.n();
    for i in 0..n {
        let wi = scan.cand(i);
        for j in (i + 1)..n {
            let zj = scan.cand(j);
            let rho2 = geom::dist2(wi, zj);
            if rho2 == 0.0 {
                continue;
            }
            let rho = rho2.sqrt();
            let reach = eps + enc_factor * rho;
            let mut du_mid = 0.0;
            for k in 0..dim {
                let m = 0.5 * (wi[k] + zj[k]) - cu[k];
                du_mid += m * m;
            }
            if du_mid.sqrt() > reach * (1.0 + 1e-12) + 1e-12 {
                continue;
            }
            let pr = scan.pair_region(i, j);
            let empty_mu = index_mu.region_empty(&pr, usize::MAX, usize::MAX);
            if !empty_mu {
                if index_nu.region_empty(&pr, usize::MAX, usize::MAX) {
                    subset_violations += 1;
                }
                continue;
            }
            let mut rng = pair_rng(base, pr.x(), pr.y());
            if !touches_base(&pr, base, &mut rng) {
                continue;
            }
            contributing_mu += 1;
            let d = sup_distance(&pr, base, &mut rng);
            r_mu = r_mu.max(d);
            if extra.iter().any(|e| pr.contains(e)) {
                // The added points invade this region, so the supercloud
                // may legitimately lose it.
                equality_expected = false;
                continue;
            }
            contributing_nu += 1;
            r_nu = r_nu.max(d);
        }
    }

    Ok(MonotonicityReport {
        r_mu,
        r_nu,
        monotone_ok: r_nu <= r_mu,
        equality_expected,
        equality_holds: r_nu == r_mu,
        contributing_mu,
        contributing_nu,
        subset_violations,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct SurvivalRow {
    pub r: f64,
    pub survivors: usize,
    pub survival: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct TailCurve {
    pub t: f64,
    pub total: usize,
    pub rows: Vec<SurvivalRow>,
    /// ln(survival) regressed on r^d over rows with survival in
    /// [0.01, 0.9]; None when fewer than four rows qualify.
    pub fit: Option<LineFit>,
    pub usable_points: usize,
    pub flagged: bool,
    /// Slope -kappa * t / |X| predicted by the certified constants.
    pub kappa_reference_slope: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct TailReport {
    pub spacing: f64,
    pub replications: usize,
    pub per_t: Vec<TailCurve>,
}

/// Reference decay rate kappa = (delta / (D sqrt(d)))^d, with the
/// window-adjusted delta when the family carries one.
pub fn kappa_reference(family: &RegionFamily) -> f64 {
    let d = family.dim() as f64;
    let delta = family.window_ball_ratio().unwrap_or(family.ball_ratio());
    (delta / (family.normalized_diameter() * d.sqrt())).powi(family.dim() as i32)
}

/// Monte Carlo survival curves of the radius estimate at the window center
/// for Poisson clouds of intensity t.
pub fn tail_survival(
    family: &RegionFamily,
    window: &Window,
    t_values: &[f64],
    replications: usize,
    r_grid: Option<&[f64]>,
    spacing: f64,
    seed: u64,
) -> Result<TailReport> {
    if t_values.is_empty() {
        return Err(PxgError::invalid("tail_survival needs at least one t"));
    }
    if replications < 8 {
        return Err(PxgError::invalid("tail_survival needs at least 8 replications"));
    }
    if let Some(rs) = r_grid {
        if rs.len() < 2 || rs.windows(2).any(|w| !(w[0] < w[1])) || rs[0] < 0.0 {
            return Err(PxgError::invalid(
                "r grid must be increasing and nonnegative",
            ));
        }
    }
    let base = BaseSet::point(window.center());
    let dim = window.dim();
    let mut per_t = Vec::with_capacity(t_values.len());
    for (ti, &t) in t_values.iter().enumerate() {
        let mut radii: Vec<f64> = (0..replications)
            .into_par_iter()
            .map(|rep| {
                let s = seeding::derive_seed(seed, ti as u64, rep as u64);
                let cloud = pointproc::sample_poisson(window, t, s)?;
                let est = estimate_radius(&cloud, family, &base, spacing)?;
                Ok(est.max_distance)
            })
            .collect::<Result<Vec<f64>>>()?;
        radii.sort_by(|a, b| a.partial_cmp(b).expect("finite radii"));
        let auto_grid;
        let grid: &[f64] = match r_grid {
            Some(g) => g,
            None => {
                let hi_idx =
                    ((replications as f64 * 0.995).ceil() as usize).min(replications) - 1;
                let hi = radii[hi_idx].max(spacing);
                auto_grid = (0..32).map(|i| hi * i as f64 / 31.0).collect::<Vec<f64>>();
                &auto_grid
            }
        };
        let rows: Vec<SurvivalRow> = grid
            .iter()
            .map(|&r| {
                let below = radii.partition_point(|&x| x < r);
                let survivors = replications - below;
                SurvivalRow {
                    r,
                    survivors,
                    survival: survivors as f64 / replications as f64,
                }
            })
            .collect();
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for row in &rows {
            if row.survival >= 0.01 && row.survival <= 0.9 {
                xs.push(row.r.powi(dim as i32));
                ys.push(row.survival.ln());
            }
        }
        let fit = if xs.len() >= 4 {
            stats::linear_fit(&xs, &ys).ok()
        } else {
            None
        };
        let flagged = fit.is_none();
        per_t.push(TailCurve {
            t,
            total: replications,
            usable_points: xs.len(),
            kappa_reference_slope: -kappa_reference(family) * t / window.volume(),
            rows,
            fit,
            flagged,
        });
    }
    Ok(TailReport {
        spacing,
        replications,
        per_t,
    })
}
