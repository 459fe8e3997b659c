//! Monte Carlo experiment harness.
//!
//! A plan fixes a region family, window, weight, process, intensity ladder,
//! replication count, and master seed. Running it yields one record per
//! replication plus per-intensity statistics. Replication seeds are derived
//! from (master, t index, replication index), and results are collected in
//! index order, so output is identical no matter how many threads run.

use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{PxgError, Result};
use crate::functional::{self, WeightSpec};
use crate::geom::Window;
use crate::graph;
use crate::pointproc::{self, ProcessKind};
use crate::regions::RegionFamily;
pub use crate::seeding::derive_seed;
use crate::stats;

#[derive(Debug, Clone)]
pub struct ExperimentPlan {
    pub family: RegionFamily,
    pub window: Window,
    pub weight: WeightSpec,
    pub process: ProcessKind,
    pub t_values: Vec<f64>,
    pub replications: usize,
    pub seed: u64,
}

impl ExperimentPlan {
    pub fn validate(&self) -> Result<()> {
        if self.family.dim() != self.window.dim() {
            return Err(PxgError::DimensionMismatch {
                expected: self.window.dim(),
                got: self.family.dim(),
            });
        }
        if self.t_values.is_empty() {
            return Err(PxgError::invalid("plan needs at least one t value"));
        }
        if self.t_values.iter().any(|&t| !(t.is_finite() && t > 0.0)) {
            return Err(PxgError::invalid("t values must be finite and > 0"));
        }
        if self.replications < 2 {
            return Err(PxgError::invalid("plan needs at least 2 replications"));
        }
        Ok(())
    }
}

/// One graph build. `elapsed_ms` is written as 0 here so that record
/// streams compare byte-for-byte across thread counts; wall time is
/// reported once per run instead.
#[derive(Debug, Clone, Serialize)]
pub struct ReplicationRecord {
    pub t_index: usize,
    pub t: f64,
    pub replication: usize,
    pub seed: u64,
    pub n_points: usize,
    pub n_edges: usize,
    pub total_weight: f64,
    pub elapsed_ms: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct TStats {
    pub t: f64,
    pub replications: usize,
    pub mean: f64,
    pub variance: f64,
    pub variance_per_t: f64,
    pub mean_points: f64,
    pub mean_edges: f64,
    /// Kolmogorov distance of the standardized sample to N(0,1).
    pub kolmogorov: f64,
    /// 1-Wasserstein distance of the standardized sample to N(0,1).
    pub wasserstein: f64,
    /// Standardized replication values, sorted; kept out of summaries.
    #[serde(skip)]
    pub standardized: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct PlanResult {
    pub records: Vec<ReplicationRecord>,
    pub per_t: Vec<TStats>,
    pub elapsed_ms: u128,
}

pub fn run_plan(plan: &ExperimentPlan) -> Result<PlanResult> {
    plan.validate()?;
    let start = Instant::now();
    let mut records = Vec::with_capacity(plan.t_values.len() * plan.replications);
    let mut per_t = Vec::with_capacity(plan.t_values.len());
    for (ti, &t) in plan.t_values.iter().enumerate() {
        let batch: Vec<ReplicationRecord> = (0..plan.replications)
            .into_par_iter()
            .map(|rep| {
                let seed = derive_seed(plan.seed, ti as u64, rep as u64);
                let cloud = match plan.process {
                    ProcessKind::Poisson => pointproc::sample_poisson(&plan.window, t, seed)?,
                    ProcessKind::Binomial => {
                        pointproc::sample_binomial(&plan.window, t.round() as usize, seed)?
                    }
                };
                let g = graph::build_accelerated(&cloud, &plan.family)?;
                let total_weight = functional::eval_l(&cloud, &g, &plan.weight)?;
                Ok(ReplicationRecord {
                    t_index: ti,
                    t,
                    replication: rep,
                    seed,
                    n_points: cloud.n(),
                    n_edges: g.n_edges(),
                    total_weight,
                    elapsed_ms: 0,
                })
            })
            .collect::<Result<Vec<ReplicationRecord>>>()?;
        per_t.push(summarize(t, &batch)?);
        records.extend(batch);
    }
    Ok(PlanResult {
        records,
        per_t,
        elapsed_ms: start.elapsed().as_millis(),
    })
}

fn summarize(t: f64, batch: &[ReplicationRecord]) -> Result<TStats> {
    let values: Vec<f64> = batch.iter().map(|r| r.total_weight).collect();
    let (mean, variance) = stats::mean_and_variance(&values)?;
    let sd = variance.sqrt();
    let mut standardized: Vec<f64> = if sd > 0.0 {
        values.iter().map(|v| (v - mean) / sd).collect()
    } else {
        values.iter().map(|_| 0.0).collect()
    };
    standardized.sort_by(|a, b| a.partial_cmp(b).expect("finite values"));
    let kolmogorov = empirical_kolmogorov(&standardized)?;
    let wasserstein = empirical_wasserstein1(&standardized)?;
    let n = batch.len() as f64;
    Ok(TStats {
        t,
        replications: batch.len(),
        mean,
        variance,
        variance_per_t: variance / t,
        mean_points: batch.iter().map(|r| r.n_points as f64).sum::<f64>() / n,
        mean_edges: batch.iter().map(|r| r.n_edges as f64).sum::<f64>() / n,
        kolmogorov,
        wasserstein,
        standardized,
    })
}

fn check_sorted_sample(sorted: &[f64]) -> Result<()> {
    if sorted.is_empty() {
        return Err(PxgError::EmptySample);
    }
    if sorted.iter().any(|v| !v.is_finite()) {
        return Err(PxgError::invalid("sample contains non-finite values"));
    }
    if sorted.windows(2).any(|w| w[0] > w[1]) {
        return Err(PxgError::invalid("sample must be sorted ascending"));
    }
    Ok(())
}

/// Kolmogorov distance between the empirical law of a sorted sample and
/// N(0,1): the largest one-sided gap at the jump points.
pub fn empirical_kolmogorov(sorted: &[f64]) -> Result<f64> {
    check_sorted_sample(sorted)?;
    let n = sorted.len() as f64;
    let mut d = 0.0f64;
    for (i, &x) in sorted.iter().enumerate() {
        let phi = stats::normal_cdf(x);
        d = d.max((i as f64 + 1.0) / n - phi).max(phi - i as f64 / n);
    }
    Ok(d)
}

/// Exact 1-Wasserstein distance between the empirical law of a sorted
/// sample and N(0,1), via the integral of |F_n - Phi|. Phi has the exact
/// antiderivative x Phi(x) + phi(x); each constant piece of F_n is split at
/// the crossing point when one exists.
pub fn empirical_wasserstein1(sorted: &[f64]) -> Result<f64> {
    check_sorted_sample(sorted)?;
    let n = sorted.len();
    let nf = n as f64;
    let ii = stats::normal_cdf_integral;
    // Left tail: F_n = 0, integrand Phi.
    let mut total = ii(sorted[0]);
    for i in 0..n.saturating_sub(1) {
        let (a, b) = (sorted[i], sorted[i + 1]);
        if a == b {
            continue;
        }
        let level = (i + 1) as f64 / nf;
        let seg = |lo: f64, hi: f64| {
            // Signed integral of (level - Phi) over [lo, hi].
            level * (hi - lo) - (ii(hi) - ii(lo))
        };
        let q = stats::normal_quantile(level)?;
        if q > a && q < b {
            total += seg(a, q) - seg(q, b);
        } else {
            total += seg(a, b).abs();
        }
    }
    // Right tail: F_n = 1, integrand 1 - Phi; by symmetry the integral
    // from a to infinity equals the integral of Phi up to -a.
    total += ii(-sorted[n - 1]);
    Ok(total)
}

/// Influence of location on the one-point difference, for one candidate
/// pair of centers.
#[derive(Debug, Clone, Serialize)]
pub struct InfluentialReport {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    /// Fraction of sampled z in B(x, 1) with add-one difference above a.
    pub fraction_high_near_x: f64,
    /// Fraction of sampled z in B(y, 1) with add-one difference below b.
    pub fraction_low_near_y: f64,
    /// Radius estimate for the base ball B(x, 1), when requested.
    pub radius_x: Option<f64>,
    /// radius_x <= r for the requested threshold.
    pub radius_within: Option<bool>,
}

/// Samples the add-one difference D_z L on unit balls around candidate
/// centers and reports the fractions landing above `a` near x and below
/// `b` near y. Purely diagnostic: it reports fractions, it never asserts
/// that a pair is influential. With `radius_check = Some((r, spacing))`
/// each report also carries the stabilization estimate for B(x, 1) and
/// whether it stays within r.
#[allow(clippy::too_many_arguments)]
pub fn detect_influential(
    cloud: &crate::pointproc::PointCloud,
    family: &RegionFamily,
    weight: &WeightSpec,
    pairs: &[(Vec<f64>, Vec<f64>)],
    a: f64,
    b: f64,
    ball_samples: usize,
    radius_check: Option<(f64, f64)>,
    seed: u64,
) -> Result<Vec<InfluentialReport>> {
    use rand::SeedableRng;
    if !(a > b) {
        return Err(PxgError::invalid("influential thresholds need a > b"));
    }
    if ball_samples == 0 {
        return Err(PxgError::invalid("ball_samples must be positive"));
    }
    let dim = cloud.dim();
    let w = cloud.window();
    for (i, (x, y)) in pairs.iter().enumerate() {
        if x.len() != dim || y.len() != dim {
            return Err(PxgError::DimensionMismatch {
                expected: dim,
                got: if x.len() != dim { x.len() } else { y.len() },
            });
        }
        if crate::geom::dist(x, y) <= 2.0 {
            return Err(PxgError::invalid(format!(
                "influential pair {i}: unit balls overlap"
            )));
        }
        let inside = |c: &[f64]| {
            let mut probe = c.to_vec();
            (0..dim).all(|k| {
                let mut ok = true;
                for s in [-1.0, 1.0] {
                    probe[k] = c[k] + s;
                    ok &= w.contains(&probe);
                }
                probe[k] = c[k];
                ok
            })
        };
        if !inside(x) || !inside(y) {
            return Err(PxgError::invalid(format!(
                "influential pair {i}: unit ball leaves the window"
            )));
        }
    }
    let index = graph::CloudIndex::new(cloud);
    let g = graph::build_accelerated(cloud, family)?;
    let mut out = Vec::with_capacity(pairs.len());
    for (pi, (x, y)) in pairs.iter().enumerate() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(derive_seed(seed, pi as u64, 0));
        let mut fractions = [0usize; 2];
        for (side, center) in [x, y].into_iter().enumerate() {
            let mut z = vec![0.0; dim];
            for _ in 0..ball_samples {
                crate::regions::ball_point(&mut rng, center, 1.0, &mut z);
                let d = functional::add_one_cost_indexed(&index, &g, family, weight, &z)?;
                let hit = if side == 0 { d > a } else { d < b };
                fractions[side] += usize::from(hit);
            }
        }
        let (radius_x, radius_within) = match radius_check {
            Some((r, spacing)) => {
                let base = crate::stabilize::BaseSet::ball(x.clone(), 1.0)?;
                let est = crate::stabilize::estimate_radius(cloud, family, &base, spacing)?;
                (Some(est.max_distance), Some(est.max_distance <= r))
            }
            None => (None, None),
        };
        out.push(InfluentialReport {
            x: x.clone(),
            y: y.clone(),
            fraction_high_near_x: fractions[0] as f64 / ball_samples as f64,
            fraction_low_near_y: fractions[1] as f64 / ball_samples as f64,
            radius_x,
            radius_within,
        });
    }
    Ok(out)
}

/// Least-squares slope of ln(y) against ln(x).
pub fn fit_loglog_slope(xs: &[f64], ys: &[f64]) -> Result<f64> {
    Ok(stats::fit_loglog(xs, ys)?.slope)
}
