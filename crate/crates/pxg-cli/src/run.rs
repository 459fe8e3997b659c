//! Command implementations. Everything returns `pxg_core::Result` and the
//! caller maps error variants onto exit codes.

use std::fs;
use std::io::Read;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde_json::{json, Value};

use pxg_core::config::{ExperimentKind, PointsFormat, RunConfig};
use pxg_core::functional;
use pxg_core::geom::Window;
use pxg_core::graph;
use pxg_core::harness::{self, ReplicationRecord};
use pxg_core::io;
use pxg_core::pointproc::{self, PointCloud, ProcessKind};
use pxg_core::seeding::derive_seed;
use pxg_core::stabilize::{self, BaseSet};
use pxg_core::stats;
use pxg_core::{PxgError, Result};

use crate::{Cli, Command, ExperimentCmd};

pub(crate) fn dispatch(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Sample => cmd_sample(cli),
        Command::Build { points } => cmd_build(cli, points.as_deref()),
        Command::Experiment { kind } => cmd_experiment(cli, *kind),
        Command::Plot { summary, kind, out } => {
            crate::plot::cmd_plot(cli, summary, *kind, out.as_deref())
        }
    }
}

fn load_config(cli: &Cli) -> Result<RunConfig> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| PxgError::config("--config is required for this command"))?;
    let mut cfg = RunConfig::from_path(path)?;
    if let Some(seed) = cli.seed {
        if let Some(exp) = cfg.experiment.as_mut() {
            exp.seed = seed;
        }
        if let Some(sample) = cfg.sample.as_mut() {
            sample.seed = seed;
        }
    }
    Ok(cfg)
}

fn out_dir(cli: &Cli, cfg: &RunConfig) -> Result<PathBuf> {
    let dir = cli
        .out_dir
        .clone()
        .or_else(|| std::env::var_os("PXG_OUT_DIR").map(PathBuf::from))
        .or_else(|| cfg.output.dir.clone())
        .unwrap_or_else(|| PathBuf::from("."));
    fs::create_dir_all(&dir)?;
    Ok(dir)
}

fn prefix(cfg: &RunConfig) -> String {
    cfg.output.prefix.clone().unwrap_or_else(|| "pxg".into())
}

fn emit(value: &Value) {
    println!("{value}");
}

fn cmd_sample(cli: &Cli) -> Result<()> {
    let cfg = load_config(cli)?;
    let sample = cfg
        .sample
        .as_ref()
        .ok_or_else(|| PxgError::config("config has no [sample] block"))?;
    let cloud = sample_cloud(&cfg.window, sample.process, sample.t, sample.seed)?;
    let dir = out_dir(cli, &cfg)?;
    let format = sample.format.unwrap_or(PointsFormat::Csv);
    let path = match format {
        PointsFormat::Csv => {
            let p = dir.join(format!("{}_points.csv", prefix(&cfg)));
            io::write_points_csv(&p, &cloud)?;
            p
        }
        PointsFormat::Binary => {
            let p = dir.join(format!("{}_points.bin", prefix(&cfg)));
            io::write_points_binary(&p, &cloud)?;
            p
        }
    };
    emit(&json!({"n": cloud.n(), "path": path}));
    Ok(())
}

fn sample_cloud(window: &Window, process: Option<ProcessKind>, t: f64, seed: u64) -> Result<PointCloud> {
    match process.unwrap_or(ProcessKind::Poisson) {
        ProcessKind::Poisson => pointproc::sample_poisson(window, t, seed),
        ProcessKind::Binomial => pointproc::sample_binomial(window, t.round() as usize, seed),
    }
}

/// Reads a points file, sniffing the binary magic so either format works
/// regardless of extension.
fn read_points(path: &Path, window: &Window) -> Result<PointCloud> {
    let mut head = [0u8; 4];
    let n = fs::File::open(path)?.read(&mut head)?;
    let (dim, coords) = if n == 4 && &head == io::POINTS_MAGIC {
        io::read_points_binary(path)?
    } else {
        io::read_points_csv(path)?
    };
    PointCloud::from_points(dim, coords, Some(window.clone()))
}

fn cmd_build(cli: &Cli, points: Option<&Path>) -> Result<()> {
    let cfg = load_config(cli)?;
    let family = cfg.build_family()?;
    let weight = cfg.build_weight()?;
    let cloud = match points {
        Some(p) => read_points(p, &cfg.window)?,
        None => {
            let sample = cfg.sample.as_ref().ok_or_else(|| {
                PxgError::config("build needs --points or a [sample] block in the config")
            })?;
            sample_cloud(&cfg.window, sample.process, sample.t, sample.seed)?
        }
    };
    let g = graph::build_accelerated(&cloud, &family)?;
    let l = functional::eval_l(&cloud, &g, &weight)?;
    let dir = out_dir(cli, &cfg)?;
    let edges_path = dir.join(format!("{}_edges.csv", prefix(&cfg)));
    io::write_edges_csv(&edges_path, &cloud, &g, &weight)?;
    emit(&json!({"n": cloud.n(), "edges": g.n_edges(), "L": l}));
    Ok(())
}

fn cmd_experiment(cli: &Cli, kind: ExperimentCmd) -> Result<()> {
    let cfg = load_config(cli)?;
    let exp = cfg
        .experiment
        .as_ref()
        .ok_or_else(|| PxgError::config("config has no [experiment] block"))?;
    let requested = match kind {
        ExperimentCmd::Variance => ExperimentKind::Variance,
        ExperimentCmd::Clt => ExperimentKind::Clt,
        ExperimentCmd::Tails => ExperimentKind::Tails,
        ExperimentCmd::Stabilize => ExperimentKind::Stabilize,
    };
    if exp.kind != requested {
        return Err(PxgError::config(format!(
            "config [experiment] kind is '{}' but the subcommand requests '{}'",
            exp.kind.label(),
            requested.label()
        )));
    }
    match requested {
        ExperimentKind::Variance | ExperimentKind::Clt => run_plan_experiment(cli, &cfg, requested),
        ExperimentKind::Tails => run_tails(cli, &cfg),
        ExperimentKind::Stabilize => run_stabilize(cli, &cfg),
    }
}

/// Distances to the standard normal for one replication batch under both
/// standardizations: by the standard deviation, and by the variance.
fn batch_distances(values: &[f64]) -> Result<(f64, f64, f64, f64)> {
    let (mean, var) = stats::mean_and_variance(values)?;
    let sd = var.sqrt();
    let mut by_sd: Vec<f64> = values.iter().map(|v| (v - mean) / sd).collect();
    let mut by_var: Vec<f64> = values.iter().map(|v| (v - mean) / var).collect();
    by_sd.sort_by(|a, b| a.partial_cmp(b).unwrap());
    by_var.sort_by(|a, b| a.partial_cmp(b).unwrap());
    Ok((
        harness::empirical_kolmogorov(&by_sd)?,
        harness::empirical_wasserstein1(&by_sd)?,
        harness::empirical_kolmogorov(&by_var)?,
        harness::empirical_wasserstein1(&by_var)?,
    ))
}

fn fit_or_note(ts: &[f64], ys: &[f64], label: &str, notes: &mut Vec<String>) -> Value {
    match harness::fit_loglog_slope(ts, ys) {
        Ok(slope) => json!(slope),
        Err(e) => {
            notes.push(format!("{label}: {e}"));
            Value::Null
        }
    }
}

fn run_plan_experiment(cli: &Cli, cfg: &RunConfig, kind: ExperimentKind) -> Result<()> {
    let mut plan = cfg.build_plan()?;
    if let Some(seed) = cli.seed {
        plan.seed = seed;
    }
    let alpha = plan.weight.alpha();
    let dim = plan.family.dim() as f64;
    let result = harness::run_plan(&plan)?;

    let mut by_t: Vec<Vec<f64>> = vec![Vec::new(); plan.t_values.len()];
    for r in &result.records {
        by_t[r.t_index].push(r.total_weight);
    }
    let mut notes: Vec<String> = Vec::new();
    let mut per_t = Vec::new();
    let mut vars = Vec::new();
    let mut vars_scaled = Vec::new();
    let mut dks = Vec::new();
    let mut dws = Vec::new();
    for (stats_t, values) in result.per_t.iter().zip(&by_t) {
        let (dk, dw, dk_var, dw_var) = batch_distances(values)?;
        // F_t = t^(alpha/d) L in the growing-window parameterization.
        let scale = stats_t.t.powf(2.0 * alpha / dim);
        let variance_scaled = scale * stats_t.variance;
        vars.push(stats_t.variance);
        vars_scaled.push(variance_scaled);
        dks.push(dk);
        dws.push(dw);
        per_t.push(json!({
            "t": stats_t.t,
            "replications": stats_t.replications,
            "mean": stats_t.mean,
            "variance": stats_t.variance,
            "variance_scaled": variance_scaled,
            "v_hat": variance_scaled / stats_t.t,
            "mean_points": stats_t.mean_points,
            "mean_edges": stats_t.mean_edges,
            "d_kolmogorov": dk,
            "d_wasserstein1": dw,
            "d_kolmogorov_var_standardized": dk_var,
            "d_wasserstein1_var_standardized": dw_var,
        }));
    }
    let variance_exponent = fit_or_note(&plan.t_values, &vars, "variance_exponent", &mut notes);
    let variance_exponent_scaled = fit_or_note(
        &plan.t_values,
        &vars_scaled,
        "variance_exponent_scaled",
        &mut notes,
    );
    let rate_k = fit_or_note(&plan.t_values, &dks, "rate_slope_kolmogorov", &mut notes);
    let rate_w = fit_or_note(&plan.t_values, &dws, "rate_slope_wasserstein1", &mut notes);
    let v_alpha_hat = vars_scaled.last().copied().unwrap_or(0.0) / plan.t_values.last().copied().unwrap_or(1.0);

    let summary = json!({
        "experiment": kind.label(),
        "family": plan.family.label(),
        "process": plan.process.label(),
        "alpha": alpha,
        "dim": plan.family.dim(),
        "t_values": plan.t_values,
        "replications": plan.replications,
        "seed": plan.seed,
        "per_t": per_t,
        "variance_exponent": variance_exponent,
        "variance_exponent_scaled": variance_exponent_scaled,
        "v_alpha_hat": v_alpha_hat,
        "rate_slope_kolmogorov": rate_k,
        "rate_slope_wasserstein1": rate_w,
        "elapsed_ms": result.elapsed_ms as u64,
        "notes": notes,
    });

    let dir = out_dir(cli, cfg)?;
    let stem = prefix(cfg);
    let reps_path = dir.join(format!("{stem}_replications.csv"));
    let summary_path = dir.join(format!("{stem}_summary.json"));
    io::write_replications_csv(&reps_path, &result.records)?;
    io::write_summary_json(&summary_path, &summary)?;
    emit(&json!({"replications": reps_path, "summary": summary_path}));
    Ok(())
}

fn run_tails(cli: &Cli, cfg: &RunConfig) -> Result<()> {
    let exp = cfg.experiment.as_ref().expect("checked by caller");
    let family = cfg.build_family()?;
    let report = stabilize::tail_survival(
        &family,
        &cfg.window,
        &exp.t_values,
        exp.replications,
        exp.r_grid.as_deref(),
        cfg.spacing(),
        exp.seed,
    )?;
    let per_t: Vec<Value> = report
        .per_t
        .iter()
        .map(|c| {
            json!({
                "t": c.t,
                "total": c.total,
                "slope": c.fit.as_ref().map(|f| f.slope),
                "intercept": c.fit.as_ref().map(|f| f.intercept),
                "corr": c.fit.as_ref().map(|f| f.corr),
                "kappa_reference": c.kappa_reference_slope,
                "usable_points": c.usable_points,
                "flagged": c.flagged,
                "curve": c.rows.iter().map(|r| json!([r.r, r.survival])).collect::<Vec<_>>(),
            })
        })
        .collect();
    let summary = json!({
        "experiment": "tails",
        "family": family.label(),
        "dim": family.dim(),
        "t_values": exp.t_values,
        "replications": report.replications,
        "spacing": report.spacing,
        "seed": exp.seed,
        "per_t": per_t,
    });
    let dir = out_dir(cli, cfg)?;
    let stem = prefix(cfg);
    let survival_path = dir.join(format!("{stem}_survival.csv"));
    let summary_path = dir.join(format!("{stem}_summary.json"));
    io::write_survival_csv(&survival_path, &report)?;
    io::write_summary_json(&summary_path, &summary)?;
    emit(&json!({"survival": survival_path, "summary": summary_path}));
    Ok(())
}

fn run_stabilize(cli: &Cli, cfg: &RunConfig) -> Result<()> {
    let exp = cfg.experiment.as_ref().expect("checked by caller");
    let family = cfg.build_family()?;
    let process = exp.process.unwrap_or(ProcessKind::Poisson);
    let center = exp
        .base_center
        .clone()
        .unwrap_or_else(|| cfg.window.center());
    let base = match exp.base_radius {
        Some(r) => BaseSet::ball(center.clone(), r)?,
        None => BaseSet::point(center.clone()),
    };
    let spacing = cfg.spacing();

    let mut records: Vec<ReplicationRecord> = Vec::new();
    let mut per_t = Vec::new();
    for (ti, &t) in exp.t_values.iter().enumerate() {
        let batch: Vec<(usize, u64, usize, f64)> = (0..exp.replications)
            .into_par_iter()
            .map(|rep| -> Result<(usize, u64, usize, f64)> {
                let seed = derive_seed(exp.seed, ti as u64, rep as u64);
                let cloud = sample_cloud(&cfg.window, Some(process), t, seed)?;
                let est = stabilize::estimate_radius(&cloud, &family, &base, spacing)?;
                Ok((rep, seed, cloud.n(), est.max_distance))
            })
            .collect::<Result<Vec<_>>>()?;
        let radii: Vec<f64> = batch.iter().map(|b| b.3).collect();
        let (mean, var) = stats::mean_and_variance(&radii)?;
        let max = radii.iter().cloned().fold(0.0f64, f64::max);
        per_t.push(json!({
            "t": t,
            "replications": exp.replications,
            "mean_radius": mean,
            "radius_variance": var,
            "max_radius": max,
        }));
        for (rep, seed, n_points, radius) in batch {
            records.push(ReplicationRecord {
                t_index: ti,
                t,
                replication: rep,
                seed,
                n_points,
                n_edges: 0,
                total_weight: radius,
                elapsed_ms: 0,
            });
        }
    }
    let summary = json!({
        "experiment": "stabilize",
        "family": family.label(),
        "dim": family.dim(),
        "process": process.label(),
        "t_values": exp.t_values,
        "replications": exp.replications,
        "seed": exp.seed,
        "spacing": spacing,
        "base_center": center,
        "base_radius": exp.base_radius,
        "per_t": per_t,
    });
    let dir = out_dir(cli, cfg)?;
    let stem = prefix(cfg);
    let radius_path = dir.join(format!("{stem}_radius.csv"));
    let summary_path = dir.join(format!("{stem}_summary.json"));
    write_radius_csv(&radius_path, &records)?;
    io::write_summary_json(&summary_path, &summary)?;
    emit(&json!({"radii": radius_path, "summary": summary_path}));
    Ok(())
}

/// Same layout as the replication CSV but with the radius estimate in
/// place of the functional value.
fn write_radius_csv(path: &Path, records: &[ReplicationRecord]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["t", "rep", "seed", "n_points", "r_hat", "elapsed_ms"])?;
    for r in records {
        w.write_record([
            r.t.to_string(),
            r.replication.to_string(),
            r.seed.to_string(),
            r.n_points.to_string(),
            format!("{}", r.total_weight),
            r.elapsed_ms.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
