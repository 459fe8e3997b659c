//! End-to-end tests run against the compiled binary.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_pxg"))
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("pxg-cli-{}-{name}", std::process::id()));
    let _ = fs::remove_dir_all(&dir);
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn write_config(dir: &Path, body: &str) -> PathBuf {
    let path = dir.join("run.toml");
    fs::write(&path, body).unwrap();
    path
}

fn stdout_json(out: &Output) -> Value {
    let text = String::from_utf8_lossy(&out.stdout);
    serde_json::from_str(text.trim()).unwrap_or_else(|e| panic!("bad stdout {text:?}: {e}"))
}

const GABRIEL_CUBE: &str = r#"
[family]
kind = "gabriel"
dim = 2

[window]
shape = "cube"
corner = [-1.0, -1.0]
side = 4.0

[weight]
alpha = 1.0
"#;

#[test]
fn build_collinear_points_yields_two_unit_edges() {
    let dir = scratch("collinear");
    let config = write_config(&dir, GABRIEL_CUBE);
    let points = dir.join("points.csv");
    fs::write(&points, "index,x1,x2\n0,0.0,0.0\n1,1.0,0.0\n2,2.0,0.0\n").unwrap();
    let out = bin()
        .args(["--config"])
        .arg(&config)
        .args(["--out-dir"])
        .arg(&dir)
        .args(["build", "--points"])
        .arg(&points)
        .output()
        .unwrap();
    assert!(out.status.success(), "{out:?}");
    let stats = stdout_json(&out);
    assert_eq!(stats["n"], 3);
    assert_eq!(stats["edges"], 2);
    assert_eq!(stats["L"], 2.0);
    let edges = fs::read_to_string(dir.join("pxg_edges.csv")).unwrap();
    assert_eq!(edges, "i,j,weight\n0,1,1.0\n1,2,1.0\n");
}

#[test]
fn build_empty_points_file_gives_header_only_csv() {
    let dir = scratch("empty");
    let config = write_config(&dir, GABRIEL_CUBE);
    let points = dir.join("points.csv");
    fs::write(&points, "index,x1,x2\n").unwrap();
    let out = bin()
        .args(["--config"])
        .arg(&config)
        .args(["--out-dir"])
        .arg(&dir)
        .args(["build", "--points"])
        .arg(&points)
        .output()
        .unwrap();
    assert!(out.status.success(), "{out:?}");
    let stats = stdout_json(&out);
    assert_eq!(stats["n"], 0);
    assert_eq!(stats["edges"], 0);
    assert_eq!(stats["L"], 0.0);
    let edges = fs::read_to_string(dir.join("pxg_edges.csv")).unwrap();
    assert_eq!(edges, "i,j,weight\n");
}

#[test]
fn unknown_config_key_exits_2_and_names_it() {
    let dir = scratch("unknown-key");
    let config = write_config(&dir, &format!("{GABRIEL_CUBE}\nfrobnicate = 1\n"));
    let out = bin()
        .args(["--config"])
        .arg(&config)
        .arg("sample")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2), "{out:?}");
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("frobnicate"), "{err}");
}

#[test]
fn missing_family_block_exits_2_naming_family() {
    let dir = scratch("missing-family");
    let config = write_config(
        &dir,
        "[window]\nshape = \"cube\"\ncorner = [0.0]\nside = 1.0\n",
    );
    let out = bin()
        .args(["--config"])
        .arg(&config)
        .arg("sample")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2), "{out:?}");
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("family"), "{err}");
}

#[test]
fn missing_config_flag_exits_2() {
    let out = bin().arg("sample").output().unwrap();
    assert_eq!(out.status.code(), Some(2), "{out:?}");
}

#[test]
fn unreadable_points_path_exits_3() {
    let dir = scratch("unreadable");
    let config = write_config(&dir, GABRIEL_CUBE);
    let out = bin()
        .args(["--config"])
        .arg(&config)
        .args(["--out-dir"])
        .arg(&dir)
        .args(["build", "--points"])
        .arg(dir.join("nope.csv"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3), "{out:?}");
}

#[test]
fn sample_writes_points_and_build_reads_them_back() {
    let dir = scratch("sample");
    let config = write_config(
        &dir,
        &format!(
            "{GABRIEL_CUBE}
[sample]
t = 40.0
seed = 11

[output]
prefix = \"demo\"
"
        ),
    );
    let out = bin()
        .args(["--config"])
        .arg(&config)
        .args(["--out-dir"])
        .arg(&dir)
        .arg("sample")
        .output()
        .unwrap();
    assert!(out.status.success(), "{out:?}");
    let info = stdout_json(&out);
    let path = PathBuf::from(info["path"].as_str().unwrap());
    assert!(path.exists());
    let n = info["n"].as_u64().unwrap();
    let build = bin()
        .args(["--config"])
        .arg(&config)
        .args(["--out-dir"])
        .arg(&dir)
        .args(["build", "--points"])
        .arg(&path)
        .output()
        .unwrap();
    assert!(build.status.success(), "{build:?}");
    assert_eq!(stdout_json(&build)["n"].as_u64().unwrap(), n);
}

const VARIANCE_PLAN: &str = r#"
[family]
kind = "gabriel"
dim = 2

[window]
shape = "ball"
center = [0.0, 0.0]
radius = 1.0

[weight]
alpha = 1.0

[experiment]
kind = "variance"
t_values = [20.0, 40.0]
replications = 24
seed = 7
"#;

#[test]
fn variance_experiment_writes_summary_and_is_thread_deterministic() {
    let dir = scratch("variance");
    let config = write_config(&dir, VARIANCE_PLAN);
    let mut outputs = Vec::new();
    for (threads, sub) in [("1", "a"), ("8", "b")] {
        let sub_dir = dir.join(sub);
        fs::create_dir_all(&sub_dir).unwrap();
        let out = bin()
            .args(["--config"])
            .arg(&config)
            .args(["--out-dir"])
            .arg(&sub_dir)
            .args(["--threads", threads, "experiment", "variance"])
            .output()
            .unwrap();
        assert!(out.status.success(), "{out:?}");
        outputs.push(fs::read(sub_dir.join("pxg_replications.csv")).unwrap());
        let summary: Value =
            serde_json::from_str(&fs::read_to_string(sub_dir.join("pxg_summary.json")).unwrap())
                .unwrap();
        assert_eq!(summary["schema"], "pxg/1");
        assert!(summary["variance_exponent"].is_number());
        assert!(summary["v_alpha_hat"].as_f64().unwrap() > 0.0);
        assert_eq!(summary["per_t"].as_array().unwrap().len(), 2);
    }
    assert_eq!(outputs[0], outputs[1], "CSV must not depend on threads");
}

#[test]
fn clt_experiment_reports_distances_in_range() {
    let dir = scratch("clt");
    let config = write_config(&dir, &VARIANCE_PLAN.replace("kind = \"variance\"", "kind = \"clt\""));
    let out = bin()
        .args(["--config"])
        .arg(&config)
        .args(["--out-dir"])
        .arg(&dir)
        .args(["experiment", "clt"])
        .output()
        .unwrap();
    assert!(out.status.success(), "{out:?}");
    let summary: Value =
        serde_json::from_str(&fs::read_to_string(dir.join("pxg_summary.json")).unwrap()).unwrap();
    for row in summary["per_t"].as_array().unwrap() {
        let dk = row["d_kolmogorov"].as_f64().unwrap();
        let dw = row["d_wasserstein1"].as_f64().unwrap();
        assert!((0.0..=1.0).contains(&dk), "d_K out of range: {dk}");
        assert!(dw >= 0.0, "d_W negative: {dw}");
        assert!(row["d_kolmogorov_var_standardized"].is_number());
        assert!(row["d_wasserstein1_var_standardized"].is_number());
    }
}

#[test]
fn experiment_kind_mismatch_exits_2() {
    let dir = scratch("mismatch");
    let config = write_config(&dir, VARIANCE_PLAN);
    let out = bin()
        .args(["--config"])
        .arg(&config)
        .args(["--out-dir"])
        .arg(&dir)
        .args(["experiment", "clt"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2), "{out:?}");
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("variance") && err.contains("clt"), "{err}");
}

#[test]
fn seed_flag_overrides_config_seed() {
    let dir = scratch("seed-override");
    let config = write_config(&dir, VARIANCE_PLAN);
    let mut csvs = Vec::new();
    for (seed, sub) in [("7", "a"), ("8", "b"), ("7", "c")] {
        let sub_dir = dir.join(sub);
        fs::create_dir_all(&sub_dir).unwrap();
        let out = bin()
            .args(["--config"])
            .arg(&config)
            .args(["--out-dir"])
            .arg(&sub_dir)
            .args(["--seed", seed, "experiment", "variance"])
            .output()
            .unwrap();
        assert!(out.status.success(), "{out:?}");
        csvs.push(fs::read(sub_dir.join("pxg_replications.csv")).unwrap());
    }
    assert_eq!(csvs[0], csvs[2], "same seed must reproduce bytes");
    assert_ne!(csvs[0], csvs[1], "different seed must change replications");
}

#[test]
fn out_dir_env_var_is_the_default_destination() {
    let dir = scratch("env-out");
    let config = write_config(
        &dir,
        &format!("{GABRIEL_CUBE}\n[sample]\nt = 10.0\nseed = 3\n"),
    );
    let out = bin()
        .env("PXG_OUT_DIR", &dir)
        .args(["--config"])
        .arg(&config)
        .arg("sample")
        .output()
        .unwrap();
    assert!(out.status.success(), "{out:?}");
    assert!(dir.join("pxg_points.csv").exists());
}

const TAILS_PLAN: &str = r#"
[family]
kind = "gabriel"
dim = 2

[window]
shape = "ball"
center = [0.0, 0.0]
radius = 1.0

[weight]
alpha = 0.0

[experiment]
kind = "tails"
t_values = [60.0]
replications = 48
seed = 5
"#;

#[test]
fn tails_experiment_then_survival_plot() {
    let dir = scratch("tails");
    let config = write_config(&dir, TAILS_PLAN);
    let out = bin()
        .args(["--config"])
        .arg(&config)
        .args(["--out-dir"])
        .arg(&dir)
        .args(["experiment", "tails"])
        .output()
        .unwrap();
    assert!(out.status.success(), "{out:?}");
    let survival = fs::read_to_string(dir.join("pxg_survival.csv")).unwrap();
    assert!(survival.starts_with("t,r,survivors,total,survival"));
    let summary_path = dir.join("pxg_summary.json");
    let summary: Value =
        serde_json::from_str(&fs::read_to_string(&summary_path).unwrap()).unwrap();
    let row = &summary["per_t"][0];
    assert!(row["kappa_reference"].as_f64().unwrap() < 0.0);
    assert!(row["curve"].as_array().unwrap().len() > 4);

    let plot = bin()
        .args(["--out-dir"])
        .arg(&dir)
        .args(["plot", "--summary"])
        .arg(&summary_path)
        .args(["--kind", "survival"])
        .output()
        .unwrap();
    assert!(plot.status.success(), "{plot:?}");
    let svg_path = PathBuf::from(stdout_json(&plot)["plot"].as_str().unwrap());
    let svg = fs::read_to_string(&svg_path).unwrap();
    assert_eq!(svg.matches("<polyline").count(), 1, "one polyline per t");
}

#[test]
fn loglog_plot_from_variance_summary() {
    let dir = scratch("plot-loglog");
    let config = write_config(&dir, VARIANCE_PLAN);
    let out = bin()
        .args(["--config"])
        .arg(&config)
        .args(["--out-dir"])
        .arg(&dir)
        .args(["experiment", "variance"])
        .output()
        .unwrap();
    assert!(out.status.success(), "{out:?}");
    let summary_path = dir.join("pxg_summary.json");
    let plot = bin()
        .args(["--out-dir"])
        .arg(&dir)
        .args(["plot", "--summary"])
        .arg(&summary_path)
        .args(["--kind", "loglog"])
        .output()
        .unwrap();
    assert!(plot.status.success(), "{plot:?}");
    let svg_path = PathBuf::from(stdout_json(&plot)["plot"].as_str().unwrap());
    let svg = fs::read_to_string(&svg_path).unwrap();
    assert!(svg.matches("<polyline").count() >= 2, "variance + distance series");
}

#[test]
fn plot_with_no_series_exits_2() {
    let dir = scratch("plot-empty");
    let summary_path = dir.join("summary.json");
    fs::write(&summary_path, "{\"schema\":\"pxg/1\",\"per_t\":[]}\n").unwrap();
    let out = bin()
        .args(["plot", "--summary"])
        .arg(&summary_path)
        .args(["--kind", "loglog", "--out"])
        .arg(dir.join("x.svg"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2), "{out:?}");
}

#[test]
fn stabilize_experiment_writes_radius_table() {
    let dir = scratch("stabilize");
    let config = write_config(
        &dir,
        r#"
[family]
kind = "relative_neighborhood"
dim = 2

[window]
shape = "cube"
corner = [-1.0, -1.0]
side = 2.0

[weight]
alpha = 0.0

[experiment]
kind = "stabilize"
t_values = [30.0]
replications = 8
seed = 9
base_center = [0.0, 0.0]
"#,
    );
    let out = bin()
        .args(["--config"])
        .arg(&config)
        .args(["--out-dir"])
        .arg(&dir)
        .args(["experiment", "stabilize"])
        .output()
        .unwrap();
    assert!(out.status.success(), "{out:?}");
    let radii = fs::read_to_string(dir.join("pxg_radius.csv")).unwrap();
    assert!(radii.starts_with("t,r") || radii.starts_with("t,rep"));
    assert_eq!(radii.lines().count(), 9, "header plus one row per replication");
    let summary: Value =
        serde_json::from_str(&fs::read_to_string(dir.join("pxg_summary.json")).unwrap()).unwrap();
    assert!(summary["per_t"][0]["mean_radius"].as_f64().unwrap() > 0.0);
}
