//! Acceptance gate: one test per release criterion, each printing a single
//! PASS/FAIL line with the measured numbers. Statistical criteria run at
//! desk scale with fixed seeds; they are Monte Carlo reproductions, not
//! proofs, and their tolerance bands are part of the contract.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use pxg_core::functional::{self, WeightSpec};
use pxg_core::geom::{self, Window};
use pxg_core::graph;
use pxg_core::harness;
use pxg_core::pointproc::{self, PointCloud, ProcessKind};
use pxg_core::regions::{self, BuiltinTemplate, RegionFamily};
use pxg_core::seeding::derive_seed;
use pxg_core::stabilize::{self, BaseSet};
use pxg_core::stats;

fn gate(n: usize, name: &str, pass: bool, details: &str) {
    let verdict = if pass { "PASS" } else { "FAIL" };
    println!("criterion {n} ({name}): {verdict} - {details}");
    assert!(pass, "criterion {n} ({name}): {details}");
}

fn families(dim: usize) -> Vec<RegionFamily> {
    vec![
        RegionFamily::gabriel(dim).unwrap(),
        RegionFamily::relative_neighborhood(dim).unwrap(),
        RegionFamily::builtin_template(dim, BuiltinTemplate::AnnulusSector).unwrap(),
    ]
}

fn uniform_point(rng: &mut ChaCha8Rng, window: &Window) -> Vec<f64> {
    let (lo, hi) = window.bounding_box();
    loop {
        let p: Vec<f64> = lo
            .iter()
            .zip(&hi)
            .map(|(a, b)| a + (b - a) * rng.random::<f64>())
            .collect();
        if window.contains(&p) {
            return p;
        }
    }
}

#[test]
fn criterion_1_oracle_equivalence() {
    let start = Instant::now();
    let mut instances = 0usize;
    let mut mismatches = 0usize;
    for dim in 1..=3usize {
        for (fi, fam) in families(dim).iter().enumerate() {
            let mut rng =
                ChaCha8Rng::seed_from_u64(derive_seed(0xACC1, fi as u64, dim as u64));
            for _ in 0..200 {
                let n = rng.random_range(2..=128);
                let w = Window::cube(vec![-1.0; dim], 2.0).unwrap();
                let cloud = pointproc::sample_binomial(&w, n, rng.random()).unwrap();
                let naive = graph::build_naive(&cloud, fam).unwrap();
                let fast = graph::build_accelerated(&cloud, fam).unwrap();
                instances += 1;
                if naive != fast {
                    mismatches += 1;
                }
            }
        }
    }
    let elapsed = start.elapsed();
    gate(
        1,
        "oracle equivalence",
        mismatches == 0 && elapsed.as_secs() <= 120,
        &format!("{instances} instances, {mismatches} mismatches, {elapsed:.1?} (cap 120s)"),
    );
}

#[test]
fn criterion_2_structural_properties() {
    let mut problems: Vec<String> = Vec::new();
    // Lens edges are a subset of diameter-ball edges, and inserting a point
    // never creates an edge between two pre-existing vertices.
    for dim in 1..=3usize {
        let gab = RegionFamily::gabriel(dim).unwrap();
        let rnf = RegionFamily::relative_neighborhood(dim).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(0xACC2, dim as u64, 0));
        for trial in 0..100 {
            let n = rng.random_range(2..=96);
            let w = Window::cube(vec![-1.0; dim], 2.0).unwrap();
            let cloud = pointproc::sample_binomial(&w, n, rng.random()).unwrap();
            let g_gab = graph::build_accelerated(&cloud, &gab).unwrap();
            let g_rnf = graph::build_accelerated(&cloud, &rnf).unwrap();
            for &(i, j) in g_rnf.edges() {
                if !g_gab.contains_edge(i, j) {
                    problems.push(format!("d={dim} trial {trial}: lens edge ({i},{j}) missing"));
                }
            }
            let x = uniform_point(&mut rng, &w);
            let bigger = cloud.with_extra(std::slice::from_ref(&x)).unwrap();
            let rebuilt = graph::build_accelerated(&bigger, &gab).unwrap();
            for &(i, j) in rebuilt.edges() {
                if (j as usize) < cloud.n() && !g_gab.contains_edge(i, j) {
                    problems.push(format!(
                        "d={dim} trial {trial}: insertion linked old vertices ({i},{j})"
                    ));
                }
            }
        }
    }
    // Region invariants (swap and central symmetry, endpoint exclusion,
    // translation/dilation invariance, certificates), 10^4 sampled trials
    // of each class per family.
    for fam in families(2) {
        let report = regions::certify_constants(&fam, 10_000, 0xACC2_0002).unwrap();
        if !report.is_ok() {
            problems.push(format!("{}: {report:?}", fam.label()));
        }
    }
    for p in &problems {
        println!("structural: {p}");
    }
    gate(
        2,
        "structural properties",
        problems.is_empty(),
        &format!(
            "subset + insertion locality on 300 instances, 3 families certified at 10^4 trials, {} problems",
            problems.len()
        ),
    );
}

#[test]
fn criterion_3_difference_operator_exactness() {
    let alphas = [0.0, 1.0, 2.0];
    let mut max_rel_add = 0.0f64;
    let mut max_rel_second = 0.0f64;
    let mut bound_failures = 0usize;
    let mut collapsed_failures = 0usize;
    let mut rng = ChaCha8Rng::seed_from_u64(0xACC3);
    let w = Window::cube(vec![-1.5, -1.5], 3.0).unwrap();
    let rel = |a: f64, b: f64| (a - b).abs() / b.abs().max(1.0);
    for trial in 0..500usize {
        let weight = WeightSpec::power(alphas[trial % 3]).unwrap();
        let fam = if trial % 2 == 0 {
            RegionFamily::gabriel(2).unwrap()
        } else {
            RegionFamily::relative_neighborhood(2).unwrap()
        };
        let n = rng.random_range(5..=80);
        let cloud = pointproc::sample_binomial(&w, n, rng.random()).unwrap();
        let g = graph::build_accelerated(&cloud, &fam).unwrap();
        let x = uniform_point(&mut rng, &w);
        // Fast one-point difference against the rebuild oracle.
        let fast = functional::add_one_cost(&cloud, &g, &fam, &weight, &x).unwrap();
        let bigger = cloud.with_extra(std::slice::from_ref(&x)).unwrap();
        let g_big = graph::build_accelerated(&bigger, &fam).unwrap();
        let slow = functional::eval_l(&bigger, &g_big, &weight).unwrap()
            - functional::eval_l(&cloud, &g, &weight).unwrap();
        max_rel_add = max_rel_add.max(rel(fast, slow));
        // Bound through the affected set. The per-edge form is the proved
        // inequality; the collapsed vertex-set form is sharper but can fail
        // when removed edges share an endpoint, so it is only tallied.
        let check = functional::derivative_bound_check(&cloud, &fam, &weight, &x).unwrap();
        if !check.holds {
            bound_failures += 1;
        }
        if !check.collapsed_holds {
            collapsed_failures += 1;
        }
        // Second difference against the two-path expansion.
        if trial < 200 {
            let y = uniform_point(&mut rng, &w);
            if geom::dist(&x, &y) == 0.0 {
                continue;
            }
            let d2 = functional::second_difference(&cloud, &fam, &weight, &x, &y).unwrap();
            let with_y = cloud.with_extra(std::slice::from_ref(&y)).unwrap();
            let g_y = graph::build_accelerated(&with_y, &fam).unwrap();
            let dx_after = functional::add_one_cost(&with_y, &g_y, &fam, &weight, &x).unwrap();
            let dx_before = functional::add_one_cost(&cloud, &g, &fam, &weight, &x).unwrap();
            max_rel_second = max_rel_second.max(rel(d2, dx_after - dx_before));
        }
    }
    let pass = max_rel_add <= 1e-9 && max_rel_second <= 1e-9 && bound_failures == 0;
    gate(
        3,
        "difference-operator exactness",
        pass,
        &format!(
            "500 add-one trials (max rel {max_rel_add:.2e}), 200 second-difference trials (max rel {max_rel_second:.2e}), {bound_failures} per-edge bound failures, {collapsed_failures} collapsed-form shortfalls (shared removed-edge endpoints; informational)"
        ),
    );
}

#[test]
fn criterion_4_stabilization_contract() {
    let w = Window::cube(vec![-2.0, -2.0], 4.0).unwrap();
    let spacing = w.diameter() / 32.0;
    let weight = WeightSpec::power(0.0).unwrap();
    let fams = [
        RegionFamily::gabriel(2).unwrap(),
        RegionFamily::relative_neighborhood(2).unwrap(),
    ];
    let mut trials = 0usize;
    let mut violations = 0usize;
    let mut unresolved = 0usize;
    let mut refinement_log: Vec<String> = Vec::new();
    for (fi, fam) in fams.iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(0xACC4, fi as u64, 0));
        let mut done = 0usize;
        while done < 500 {
            let n = rng.random_range(20..=100);
            let cloud = pointproc::sample_binomial(&w, n, rng.random()).unwrap();
            let x = uniform_point(&mut rng, &w);
            let base = BaseSet::point(x.clone());
            let est = stabilize::estimate_radius(&cloud, fam, &base, spacing).unwrap();
            let need = 1.1 * est.max_distance;
            let mut y = None;
            for _ in 0..64 {
                let c = uniform_point(&mut rng, &w);
                if geom::dist(&c, &x) > need {
                    y = Some(c);
                    break;
                }
            }
            // The radius can rival the window; redraw instead of forcing a
            // not-actually-far pair.
            let Some(y) = y else { continue };
            done += 1;
            trials += 1;
            let d2 = functional::second_difference(&cloud, fam, &weight, &x, &y).unwrap();
            if d2 != 0.0 {
                violations += 1;
                let fine =
                    stabilize::estimate_radius(&cloud, fam, &base, spacing / 2.0).unwrap();
                let dist = geom::dist(&x, &y);
                let resolved = dist <= 1.1 * fine.max_distance;
                refinement_log.push(format!(
                    "{} trial {done}: |y-x| = {dist:.4}, coarse {:.4}, refined {:.4}, D2 = {d2}, resolved = {resolved}",
                    fam.label(),
                    est.max_distance,
                    fine.max_distance,
                ));
                if !resolved {
                    unresolved += 1;
                }
            }
        }
    }
    for line in &refinement_log {
        println!("refinement: {line}");
    }
    // Growing the cloud on a shared candidate grid never raises the
    // estimate, and untouched regions keep it exactly equal.
    let mut mono_bad = 0usize;
    let mut mono_rng = ChaCha8Rng::seed_from_u64(derive_seed(0xACC4, 99, 0));
    for trial in 0..200usize {
        let fam = &fams[trial % 2];
        let n = mono_rng.random_range(20..=60);
        let cloud = pointproc::sample_binomial(&w, n, mono_rng.random()).unwrap();
        let extra: Vec<Vec<f64>> = (0..4).map(|_| uniform_point(&mut mono_rng, &w)).collect();
        let base = BaseSet::point(uniform_point(&mut mono_rng, &w));
        let rep = stabilize::check_monotonicity(&cloud, &extra, fam, &base, spacing).unwrap();
        let ok = rep.monotone_ok
            && rep.subset_violations == 0
            && (!rep.equality_expected || rep.equality_holds);
        if !ok {
            println!("monotonicity trial {trial}: {rep:?}");
            mono_bad += 1;
        }
    }
    let violation_rate = violations as f64 / trials as f64;
    let pass = violation_rate <= 0.01 && unresolved == 0 && mono_bad == 0;
    gate(
        4,
        "stabilization contract",
        pass,
        &format!(
            "{trials} far pairs, {violations} violations ({:.2}%), {unresolved} unresolved after h/2, monotonicity 200 trials with {mono_bad} failures",
            100.0 * violation_rate
        ),
    );
}

#[test]
fn criterion_5_tail_decay() {
    let start = Instant::now();
    let fam = RegionFamily::gabriel(2).unwrap();
    let w = Window::unit_ball(2).unwrap();
    let report =
        stabilize::tail_survival(&fam, &w, &[500.0], 2000, None, 0.0625, 0xACC5).unwrap();
    let curve = &report.per_t[0];
    let elapsed = start.elapsed();
    match &curve.fit {
        Some(fit) => gate(
            5,
            "tail decay",
            fit.slope < 0.0
                && fit.corr.abs() >= 0.95
                && curve.usable_points >= 4
                && elapsed.as_secs() <= 600,
            &format!(
                "2000 replications at t=500: ln survival vs r^2 slope {:.3} (reference {:.3}), corr {:.4}, {} usable points, {elapsed:.1?} (cap 600s)",
                fit.slope, curve.kappa_reference_slope, fit.corr, curve.usable_points
            ),
        ),
        None => gate(5, "tail decay", false, "survival fit unavailable (under 4 usable points)"),
    }
}

/// Per t, per replication: the edge functional under both weights
/// (exponent 0 and 1), one graph build per replication.
fn weighted_totals(
    fam: &RegionFamily,
    process: ProcessKind,
    window: &Window,
    ts: &[f64],
    reps: usize,
    master: u64,
) -> Vec<Vec<(f64, f64)>> {
    let w0 = WeightSpec::power(0.0).unwrap();
    let w1 = WeightSpec::power(1.0).unwrap();
    ts.iter()
        .enumerate()
        .map(|(ti, &t)| {
            (0..reps)
                .into_par_iter()
                .map(|rep| {
                    let seed = derive_seed(master, ti as u64, rep as u64);
                    let cloud = match process {
                        ProcessKind::Poisson => {
                            pointproc::sample_poisson(window, t, seed).unwrap()
                        }
                        ProcessKind::Binomial => {
                            pointproc::sample_binomial(window, t.round() as usize, seed).unwrap()
                        }
                    };
                    let g = graph::build_accelerated(&cloud, fam).unwrap();
                    (
                        functional::eval_l(&cloud, &g, &w0).unwrap(),
                        functional::eval_l(&cloud, &g, &w1).unwrap(),
                    )
                })
                .collect()
        })
        .collect()
}

#[test]
fn criterion_6_variance_scaling() {
    let start = Instant::now();
    let window = Window::unit_ball(2).unwrap();
    let ts = [125.0, 250.0, 500.0, 1000.0];
    let reps = 2000;
    let fams = [
        RegionFamily::gabriel(2).unwrap(),
        RegionFamily::relative_neighborhood(2).unwrap(),
    ];
    let procs = [ProcessKind::Poisson, ProcessKind::Binomial];
    let mut lines = Vec::new();
    let mut pass = true;
    for (fi, fam) in fams.iter().enumerate() {
        for (pi, &process) in procs.iter().enumerate() {
            let master = derive_seed(0xACC6, fi as u64, pi as u64);
            let batches = weighted_totals(fam, process, &window, &ts, reps, master);
            for (alpha_idx, target) in [(0usize, 1.0f64), (1, 0.0)] {
                let vars: Vec<f64> = batches
                    .iter()
                    .map(|batch| {
                        let vals: Vec<f64> = batch
                            .iter()
                            .map(|&(l0, l1)| if alpha_idx == 0 { l0 } else { l1 })
                            .collect();
                        stats::mean_and_variance(&vals).unwrap().1
                    })
                    .collect();
                let slope = harness::fit_loglog_slope(&ts, &vars).unwrap();
                let ok = (slope - target).abs() <= 0.15;
                pass &= ok;
                lines.push(format!(
                    "{}/{} alpha={alpha_idx}: exponent {slope:.3} target {target}+-0.15 {}",
                    fam.label(),
                    process.label(),
                    if ok { "ok" } else { "OUT" }
                ));
            }
        }
    }
    let elapsed = start.elapsed();
    pass &= elapsed.as_secs() <= 1800;
    gate(
        6,
        "variance scaling",
        pass,
        &format!("{} | {elapsed:.1?} (cap 1800s)", lines.join(" | ")),
    );
}

#[test]
fn criterion_7_clt_rate() {
    let start = Instant::now();
    let window = Window::unit_ball(2).unwrap();
    let ts = [64.0, 128.0, 256.0, 512.0];
    let reps = 5000;
    let fam = RegionFamily::gabriel(2).unwrap();
    let batches = weighted_totals(&fam, ProcessKind::Poisson, &window, &ts, reps, 0xACC7);
    let mut lines = Vec::new();
    let mut pass = true;
    for (alpha_idx, label) in [(0usize, "alpha=0"), (1, "alpha=1")] {
        let dks: Vec<f64> = batches
            .iter()
            .map(|batch| {
                let vals: Vec<f64> = batch
                    .iter()
                    .map(|&(l0, l1)| if alpha_idx == 0 { l0 } else { l1 })
                    .collect();
                let (mean, var) = stats::mean_and_variance(&vals).unwrap();
                let sd = var.sqrt();
                let mut std: Vec<f64> = vals.iter().map(|v| (v - mean) / sd).collect();
                std.sort_by(|a, b| a.partial_cmp(b).unwrap());
                harness::empirical_kolmogorov(&std).unwrap()
            })
            .collect();
        let monotone = dks.windows(2).all(|p| p[1] < p[0]);
        let slope = harness::fit_loglog_slope(&ts, &dks).unwrap();
        let in_band = (-0.8..=-0.25).contains(&slope);
        pass &= monotone && in_band;
        lines.push(format!(
            "{label}: d_K = [{}], slope {slope:.3}, monotone {monotone}, band {in_band}",
            dks.iter()
                .map(|d| format!("{d:.4}"))
                .collect::<Vec<_>>()
                .join(", ")
        ));
    }
    let elapsed = start.elapsed();
    gate(
        7,
        "normal-approximation rate",
        pass,
        &format!("{} | {elapsed:.1?}", lines.join(" | ")),
    );
}

#[test]
fn criterion_8_statistics_self_tests() {
    let k_single = harness::empirical_kolmogorov(&[0.0]).unwrap();
    let exact_half = k_single == 0.5;

    let n = 1000;
    let grid: Vec<f64> = (0..n)
        .map(|i| stats::normal_quantile((i as f64 + 0.5) / n as f64).unwrap())
        .collect();
    let k_grid = harness::empirical_kolmogorov(&grid).unwrap();
    let w_grid = harness::empirical_wasserstein1(&grid).unwrap();

    let w_single = harness::empirical_wasserstein1(&[0.0]).unwrap();
    let w_expected = (2.0 / std::f64::consts::PI).sqrt();

    let mut max_round = 0.0f64;
    for i in 1..1000 {
        let p = i as f64 / 1000.0;
        let back = stats::normal_cdf(stats::normal_quantile(p).unwrap());
        max_round = max_round.max((back - p).abs());
    }

    let pass = exact_half
        && k_grid <= 0.0006
        && (w_single - w_expected).abs() <= 1e-3
        && w_grid < 0.01
        && max_round <= 1e-9;
    gate(
        8,
        "statistics self-tests",
        pass,
        &format!(
            "d_K({{0}}) = {k_single} (exact 0.5 {exact_half}), quantile-grid d_K = {k_grid:.5} (<= 0.0006), d_W({{0}}) = {w_single:.6} (target {w_expected:.6}), grid d_W = {w_grid:.5} (< 0.01), max CDF round-trip error {max_round:.2e} (<= 1e-9)"
        ),
    );
}

#[test]
fn criterion_9_determinism_across_thread_counts() {
    let plan = harness::ExperimentPlan {
        family: RegionFamily::gabriel(2).unwrap(),
        window: Window::unit_ball(2).unwrap(),
        weight: WeightSpec::power(1.0).unwrap(),
        process: ProcessKind::Poisson,
        t_values: vec![20.0, 40.0],
        replications: 32,
        seed: 0xACC9,
    };
    let dir = std::env::temp_dir().join(format!("pxg-acceptance-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let mut outputs = Vec::new();
    for threads in [1usize, 8] {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap();
        let result = pool.install(|| harness::run_plan(&plan)).unwrap();
        let path = dir.join(format!("replications_{threads}.csv"));
        pxg_core::io::write_replications_csv(&path, &result.records).unwrap();
        outputs.push(std::fs::read(&path).unwrap());
    }
    let identical = outputs[0] == outputs[1];
    gate(
        9,
        "determinism across thread counts",
        identical && !outputs[0].is_empty(),
        &format!(
            "per-replication CSV bytes identical across thread counts 1 and 8: {identical} ({} bytes)",
            outputs[0].len()
        ),
    );
}

/// The windows in the PointCloud round-trip; kept here so the acceptance
/// binary exercises the io module end to end as well.
#[test]
fn io_round_trip_reproduces_functional() {
    let w = Window::unit_ball(2).unwrap();
    let fam = RegionFamily::gabriel(2).unwrap();
    let weight = WeightSpec::power(1.0).unwrap();
    let cloud = pointproc::sample_poisson(&w, 60.0, 31).unwrap();
    let g = graph::build_accelerated(&cloud, &fam).unwrap();
    let l = functional::eval_l(&cloud, &g, &weight).unwrap();
    let dir = std::env::temp_dir().join(format!("pxg-acceptance-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let pts = dir.join("roundtrip.csv");
    let edges = dir.join("roundtrip_edges.csv");
    pxg_core::io::write_points_csv(&pts, &cloud).unwrap();
    pxg_core::io::write_edges_csv(&edges, &cloud, &g, &weight).unwrap();
    let (dim, coords) = pxg_core::io::read_points_csv(&pts).unwrap();
    let back = PointCloud::from_points(dim, coords, None).unwrap();
    let g_back = graph::build_accelerated(&back, &fam).unwrap();
    let l_back = functional::eval_l(&back, &g_back, &weight).unwrap();
    assert_eq!(l.to_bits(), l_back.to_bits());
    let edge_rows = pxg_core::io::read_edges_csv(&edges).unwrap();
    let l_edges: f64 = edge_rows.iter().map(|r| r.2).sum();
    assert_eq!(l.to_bits(), l_edges.to_bits());
}
