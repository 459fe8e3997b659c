//! File formats.
//!
//! Tables are CSV, summaries are JSON stamped with `"schema": "pxg/1"`,
//! point clouds additionally serialize to a little-endian binary format
//! (magic `PXG1`), and signed-distance templates load from a binary grid
//! format (magic `PXGS`). Floats print in shortest round-trip form, so a
//! rerun with the same seed reproduces every output byte.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::Serialize;
use serde_json::Value;

use crate::error::{PxgError, Result};
use crate::functional::WeightSpec;
use crate::graph::ProximityGraph;
use crate::harness::ReplicationRecord;
use crate::pointproc::PointCloud;
use crate::regions::SdfGrid;
use crate::stabilize::TailReport;

pub const SCHEMA: &str = "pxg/1";
pub const POINTS_MAGIC: &[u8; 4] = b"PXG1";
pub const GRID_MAGIC: &[u8; 4] = b"PXGS";

fn format_err(path: &Path, what: impl std::fmt::Display) -> PxgError {
    PxgError::format(format!("{}: {what}", path.display()))
}

pub fn write_points_csv(path: &Path, cloud: &PointCloud) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let mut header = vec!["index".to_string()];
    header.extend((1..=cloud.dim()).map(|k| format!("x{k}")));
    w.write_record(&header)?;
    let mut row = Vec::with_capacity(cloud.dim() + 1);
    for (i, p) in cloud.iter_points().enumerate() {
        row.clear();
        row.push(i.to_string());
        row.extend(p.iter().map(|c| c.to_string()));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a point CSV back as (dim, flat coordinates). Rows must carry the
/// running index followed by one column per axis.
pub fn read_points_csv(path: &Path) -> Result<(usize, Vec<f64>)> {
    let mut r = csv::Reader::from_path(path)?;
    let headers = r.headers()?.clone();
    if headers.is_empty() || &headers[0] != "index" {
        return Err(format_err(path, "first column must be 'index'"));
    }
    let dim = headers.len() - 1;
    if dim == 0 {
        return Err(format_err(path, "no coordinate columns"));
    }
    let mut coords = Vec::new();
    for (line, rec) in r.records().enumerate() {
        let rec = rec?;
        if rec.len() != dim + 1 {
            return Err(format_err(path, format!("row {line}: wrong column count")));
        }
        for k in 1..=dim {
            let v: f64 = rec[k]
                .parse()
                .map_err(|_| format_err(path, format!("row {line}: bad float '{}'", &rec[k])))?;
            coords.push(v);
        }
    }
    Ok((dim, coords))
}

pub fn write_points_binary(path: &Path, cloud: &PointCloud) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(POINTS_MAGIC)?;
    w.write_all(&(cloud.dim() as u32).to_le_bytes())?;
    w.write_all(&(cloud.n() as u64).to_le_bytes())?;
    for c in cloud.coords() {
        w.write_all(&c.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_points_binary(path: &Path) -> Result<(usize, Vec<f64>)> {
    let mut r = BufReader::new(File::open(path)?);
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != POINTS_MAGIC {
        return Err(format_err(path, "bad magic, expected PXG1"));
    }
    let mut b4 = [0u8; 4];
    let mut b8 = [0u8; 8];
    r.read_exact(&mut b4)?;
    let dim = u32::from_le_bytes(b4) as usize;
    r.read_exact(&mut b8)?;
    let n = u64::from_le_bytes(b8) as usize;
    if dim == 0 || dim > crate::geom::MAX_DIM {
        return Err(format_err(path, format!("dimension {dim} out of range")));
    }
    let mut coords = Vec::with_capacity(n * dim);
    for _ in 0..n * dim {
        r.read_exact(&mut b8)?;
        coords.push(f64::from_le_bytes(b8));
    }
    Ok((dim, coords))
}

#[derive(Serialize)]
struct EdgeRow {
    i: u32,
    j: u32,
    weight: f64,
}

pub fn write_edges_csv(
    path: &Path,
    cloud: &PointCloud,
    graph: &ProximityGraph,
    weight: &WeightSpec,
) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for &(i, j) in graph.edges() {
        w.serialize(EdgeRow {
            i,
            j,
            weight: weight.eval(cloud.point(i as usize), cloud.point(j as usize)),
        })?;
    }
    // serialize() emits the header only once a row exists; an empty graph
    // still gets one.
    if graph.edges().is_empty() {
        w.write_record(["i", "j", "weight"])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_edges_csv(path: &Path) -> Result<Vec<(u32, u32, f64)>> {
    let mut r = csv::Reader::from_path(path)?;
    let mut out = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        if rec.len() != 3 {
            return Err(format_err(path, "edge rows need exactly i,j,weight"));
        }
        let parse = |s: &str| {
            s.parse::<f64>()
                .map_err(|_| format_err(path, format!("bad number '{s}'")))
        };
        out.push((parse(&rec[0])? as u32, parse(&rec[1])? as u32, parse(&rec[2])?));
    }
    Ok(out)
}

#[derive(Serialize)]
struct RepRow {
    t: f64,
    rep: usize,
    seed: u64,
    n_points: usize,
    #[serde(rename = "L")]
    total_weight: f64,
    elapsed_ms: u64,
}

pub fn write_replications_csv(path: &Path, records: &[ReplicationRecord]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in records {
        w.serialize(RepRow {
            t: r.t,
            rep: r.replication,
            seed: r.seed,
            n_points: r.n_points,
            total_weight: r.total_weight,
            elapsed_ms: r.elapsed_ms,
        })?;
    }
    if records.is_empty() {
        w.write_record(["t", "rep", "seed", "n_points", "L", "elapsed_ms"])?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct SurvivalCsvRow {
    t: f64,
    r: f64,
    survivors: usize,
    total: usize,
    survival: f64,
}

pub fn write_survival_csv(path: &Path, report: &TailReport) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let mut any = false;
    for curve in &report.per_t {
        for row in &curve.rows {
            any = true;
            w.serialize(SurvivalCsvRow {
                t: curve.t,
                r: row.r,
                survivors: row.survivors,
                total: curve.total,
                survival: row.survival,
            })?;
        }
    }
    if !any {
        w.write_record(["t", "r", "survivors", "total", "survival"])?;
    }
    w.flush()?;
    Ok(())
}

/// Writes a JSON summary, stamping the schema version into the top-level
/// object (which it must be).
pub fn write_summary_json(path: &Path, summary: &Value) -> Result<()> {
    let mut v = summary.clone();
    match v.as_object_mut() {
        Some(obj) => {
            obj.insert("schema".into(), Value::String(SCHEMA.into()));
        }
        None => return Err(PxgError::format("summary must be a JSON object")),
    }
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, &v).map_err(|e| format_err(path, e))?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

pub fn read_summary_json(path: &Path) -> Result<Value> {
    let r = BufReader::new(File::open(path)?);
    let v: Value = serde_json::from_reader(r).map_err(|e| format_err(path, e))?;
    match v.get("schema").and_then(Value::as_str) {
        Some(SCHEMA) => Ok(v),
        Some(other) => Err(format_err(path, format!("unsupported schema '{other}'"))),
        None => Err(format_err(path, "missing schema field")),
    }
}

/// Signed-distance grid: magic, u32 dim, u32 shape per axis, f64 lo and hi
/// per axis, then row-major f64 samples (last axis fastest).
pub fn write_sdf_grid(path: &Path, grid: &SdfGrid) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(GRID_MAGIC)?;
    w.write_all(&(grid.dim() as u32).to_le_bytes())?;
    for &s in grid.shape() {
        w.write_all(&(s as u32).to_le_bytes())?;
    }
    let (lo, hi) = grid.bounds();
    for v in lo.iter().chain(hi) {
        w.write_all(&v.to_le_bytes())?;
    }
    for v in grid.values() {
        w.write_all(&v.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_sdf_grid(path: &Path) -> Result<SdfGrid> {
    let mut r = BufReader::new(File::open(path)?);
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != GRID_MAGIC {
        return Err(format_err(path, "bad magic, expected PXGS"));
    }
    let mut b4 = [0u8; 4];
    let mut b8 = [0u8; 8];
    r.read_exact(&mut b4)?;
    let dim = u32::from_le_bytes(b4) as usize;
    if dim == 0 || dim > crate::geom::MAX_DIM {
        return Err(format_err(path, format!("dimension {dim} out of range")));
    }
    let mut shape = Vec::with_capacity(dim);
    for _ in 0..dim {
        r.read_exact(&mut b4)?;
        shape.push(u32::from_le_bytes(b4) as usize);
    }
    let mut read_f64s = |count: usize, r: &mut BufReader<File>| -> Result<Vec<f64>> {
        let mut out = Vec::with_capacity(count);
        for _ in 0..count {
            r.read_exact(&mut b8)?;
            out.push(f64::from_le_bytes(b8));
        }
        Ok(out)
    };
    let lo = read_f64s(dim, &mut r)?;
    let hi = read_f64s(dim, &mut r)?;
    let count: usize = shape.iter().product();
    let values = read_f64s(count, &mut r)?;
    SdfGrid::new(shape, lo, hi, values)
}
