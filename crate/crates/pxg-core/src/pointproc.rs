//! Poisson and binomial point clouds on a window.
//!
//! Intensity convention: `sample_poisson(window, t, seed)` draws
//! N ~ Poisson(t) points iid uniform on the window, so t is the expected
//! point count regardless of window volume. `sample_unit_coupled` instead
//! realizes a unit-rate stationary process restricted to the window, cell by
//! cell with per-cell seeds, so restrictions to nested windows agree point
//! for point under one seed.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{PxgError, Result};
use crate::geom::Window;
use crate::seeding;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProcessKind {
    Poisson,
    Binomial,
}

impl ProcessKind {
    pub fn label(&self) -> &'static str {
        match self {
            ProcessKind::Poisson => "poisson",
            ProcessKind::Binomial => "binomial",
        }
    }
}

/// A finite point configuration and a record of how it was sampled.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    dim: usize,
    coords: Vec<f64>,
    window: Window,
    kind: ProcessKind,
    /// Intensity (expected count) for Poisson clouds, exact count for
    /// binomial ones.
    t: f64,
    seed: u64,
}

impl PointCloud {
    pub fn n(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn window(&self) -> &Window {
        &self.window
    }

    pub fn kind(&self) -> ProcessKind {
        self.kind
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn iter_points(&self) -> impl Iterator<Item = &[f64]> {
        self.coords.chunks_exact(self.dim)
    }

    /// Wraps raw coordinates; the window defaults to the padded bounding
    /// cube when none is given.
    pub fn from_points(dim: usize, coords: Vec<f64>, window: Option<Window>) -> Result<Self> {
        if dim == 0 {
            return Err(PxgError::invalid("dimension must be positive"));
        }
        if coords.len() % dim != 0 {
            return Err(PxgError::invalid(format!(
                "coordinate buffer length {} is not a multiple of dim {dim}",
                coords.len()
            )));
        }
        if !crate::geom::all_finite(&coords) {
            return Err(PxgError::invalid("coordinates must be finite"));
        }
        let n = coords.len() / dim;
        let window = match window {
            Some(w) => {
                if w.dim() != dim {
                    return Err(PxgError::DimensionMismatch {
                        expected: dim,
                        got: w.dim(),
                    });
                }
                for (i, p) in coords.chunks_exact(dim).enumerate() {
                    if !w.contains(p) {
                        return Err(PxgError::invalid(format!(
                            "point {i} lies outside the window"
                        )));
                    }
                }
                w
            }
            None => synthesize_window(dim, &coords)?,
        };
        Ok(PointCloud {
            dim,
            coords,
            window,
            kind: ProcessKind::Binomial,
            t: n as f64,
            seed: 0,
        })
    }

    /// A copy with extra points appended. The window is left unchanged, so
    /// callers adding points outside should widen it first.
    pub fn with_extra(&self, extra: &[Vec<f64>]) -> Result<PointCloud> {
        let mut out = self.clone();
        for p in extra {
            if p.len() != self.dim {
                return Err(PxgError::DimensionMismatch {
                    expected: self.dim,
                    got: p.len(),
                });
            }
            out.coords.extend_from_slice(p);
        }
        Ok(out)
    }
}

fn synthesize_window(dim: usize, coords: &[f64]) -> Result<Window> {
    let mut lo = vec![f64::INFINITY; dim];
    let mut hi = vec![f64::NEG_INFINITY; dim];
    for p in coords.chunks_exact(dim) {
        for k in 0..dim {
            lo[k] = lo[k].min(p[k]);
            hi[k] = hi[k].max(p[k]);
        }
    }
    if coords.is_empty() {
        lo = vec![0.0; dim];
        hi = vec![1.0; dim];
    }
    let mut side: f64 = 1e-6;
    for k in 0..dim {
        side = side.max(hi[k] - lo[k]);
    }
    let pad = 0.5 * side.max(1e-6);
    let corner: Vec<f64> = (0..dim)
        .map(|k| lo[k] - 0.5 * (side + 2.0 * pad - (hi[k] - lo[k])))
        .collect();
    Window::cube(corner, side + 2.0 * pad)
}

fn uniform_in_window(window: &Window, rng: &mut ChaCha8Rng, out: &mut [f64]) {
    match window {
        Window::Cube { corner, side } => {
            for k in 0..corner.len() {
                out[k] = corner[k] + side * rng.random::<f64>();
            }
        }
        Window::Ball { center, radius } => loop {
            let mut inside = 0.0;
            for k in 0..center.len() {
                out[k] = (rng.random::<f64>() * 2.0 - 1.0) * radius;
                inside += out[k] * out[k];
            }
            if inside <= radius * radius {
                for k in 0..center.len() {
                    out[k] += center[k];
                }
                return;
            }
        },
    }
}

fn validate_t(t: f64) -> Result<()> {
    if !(t.is_finite() && t > 0.0) {
        return Err(PxgError::invalid(format!(
            "intensity must be finite and > 0, got {t}"
        )));
    }
    Ok(())
}

/// Poisson cloud on the window: N ~ Poisson(t) iid uniform points.
pub fn sample_poisson(window: &Window, t: f64, seed: u64) -> Result<PointCloud> {
    validate_t(t)?;
    let dim = window.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = Poisson::new(t)
        .map_err(|e| PxgError::invalid(format!("poisson intensity {t}: {e}")))?
        .sample(&mut rng) as usize;
    let mut coords = vec![0.0; n * dim];
    for i in 0..n {
        let mut buf = [0.0; crate::geom::MAX_DIM];
        uniform_in_window(window, &mut rng, &mut buf[..dim]);
        coords[i * dim..(i + 1) * dim].copy_from_slice(&buf[..dim]);
    }
    Ok(PointCloud {
        dim,
        coords,
        window: window.clone(),
        kind: ProcessKind::Poisson,
        t,
        seed,
    })
}

/// Binomial cloud: exactly n iid uniform points.
pub fn sample_binomial(window: &Window, n: usize, seed: u64) -> Result<PointCloud> {
    if n == 0 {
        return Err(PxgError::invalid("binomial cloud needs n > 0"));
    }
    let dim = window.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut coords = vec![0.0; n * dim];
    for i in 0..n {
        let mut buf = [0.0; crate::geom::MAX_DIM];
        uniform_in_window(window, &mut rng, &mut buf[..dim]);
        coords[i * dim..(i + 1) * dim].copy_from_slice(&buf[..dim]);
    }
    Ok(PointCloud {
        dim,
        coords,
        window: window.clone(),
        kind: ProcessKind::Binomial,
        t: n as f64,
        seed,
    })
}

/// Unit-rate stationary Poisson process restricted to the window.
///
/// Each unit lattice cell gets its own stream seeded from the master seed
/// and the cell coordinates, so two windows sharing a seed agree exactly on
/// their common cells: the restriction of the larger sample to the smaller
/// window equals the smaller sample.
pub fn sample_unit_coupled(window: &Window, seed: u64) -> Result<PointCloud> {
    let dim = window.dim();
    let (lo, hi) = window.bounding_box();
    let lo_cell: Vec<i64> = lo.iter().map(|v| v.floor() as i64).collect();
    let hi_cell: Vec<i64> = hi.iter().map(|v| v.floor() as i64).collect();
    let mut coords = Vec::new();
    let mut cell = lo_cell.clone();
    let unit = Poisson::new(1.0).expect("unit intensity is valid");
    'cells: loop {
        let mut h = seeding::splitmix64(seed ^ 0x51_7C_C1_B7_27_22_0A_95);
        for &c in &cell {
            h = seeding::splitmix64(h ^ (c as u64));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(h);
        let count = unit.sample(&mut rng) as usize;
        for _ in 0..count {
            let mut p = [0.0; crate::geom::MAX_DIM];
            for k in 0..dim {
                p[k] = cell[k] as f64 + rng.random::<f64>();
            }
            if window.contains(&p[..dim]) {
                coords.extend_from_slice(&p[..dim]);
            }
        }
        // Lexicographic odometer over the cell box.
        for k in (0..dim).rev() {
            cell[k] += 1;
            if cell[k] <= hi_cell[k] {
                continue 'cells;
            }
            cell[k] = lo_cell[k];
        }
        break;
    }
    Ok(PointCloud {
        dim,
        coords,
        window: window.clone(),
        kind: ProcessKind::Poisson,
        t: window.volume(),
        seed,
    })
}

/// The dilated cloud a * mu on the dilated window.
pub fn scale_cloud(cloud: &PointCloud, a: f64) -> Result<PointCloud> {
    if !(a.is_finite() && a > 0.0) {
        return Err(PxgError::invalid("scale factor must be finite and > 0"));
    }
    Ok(PointCloud {
        dim: cloud.dim,
        coords: cloud.coords.iter().map(|c| c * a).collect(),
        window: cloud.window.scaled(a)?,
        kind: cloud.kind,
        t: cloud.t,
        seed: cloud.seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn poisson_is_deterministic_per_seed() {
        let w = Window::unit_cube(2).unwrap();
        let a = sample_poisson(&w, 200.0, 9).unwrap();
        let b = sample_poisson(&w, 200.0, 9).unwrap();
        let c = sample_poisson(&w, 200.0, 10).unwrap();
        assert_eq!(a.coords(), b.coords());
        assert_ne!(a.coords(), c.coords());
        assert!(a.iter_points().all(|p| w.contains(p)));
    }

    #[test]
    fn poisson_count_concentrates_around_t() {
        let w = Window::unit_ball(2).unwrap();
        let t = 100.0;
        let reps = 1000;
        let mut total = 0usize;
        for s in 0..reps {
            total += sample_poisson(&w, t, s as u64).unwrap().n();
        }
        let mean = total as f64 / reps as f64;
        // Mean of `reps` Poisson(t) counts: sd = sqrt(t / reps).
        let sd = (t / reps as f64).sqrt();
        assert!(
            (mean - t).abs() <= 3.0 * sd,
            "mean count {mean} too far from {t}"
        );
    }

    #[test]
    fn binomial_counts_and_coordinate_means() {
        let w = Window::unit_cube(2).unwrap();
        let cloud = sample_binomial(&w, 100_000, 4).unwrap();
        assert_eq!(cloud.n(), 100_000);
        for k in 0..2 {
            let mean: f64 =
                cloud.iter_points().map(|p| p[k]).sum::<f64>() / cloud.n() as f64;
            assert!(
                (mean - 0.5).abs() < 0.005,
                "coordinate {k} mean {mean} off"
            );
        }
    }

    #[test]
    fn ball_sampling_stays_inside() {
        let w = Window::ball(vec![1.0, -2.0, 0.5], 1.5).unwrap();
        let cloud = sample_binomial(&w, 5000, 3).unwrap();
        assert!(cloud.iter_points().all(|p| w.contains(p)));
    }

    #[test]
    fn coupled_sampler_restriction_consistency() {
        let big = Window::ball(vec![0.0, 0.0], 3.0).unwrap();
        let small = Window::ball(vec![0.0, 0.0], 2.0).unwrap();
        let a = sample_unit_coupled(&big, 77).unwrap();
        let b = sample_unit_coupled(&small, 77).unwrap();
        let filtered: Vec<&[f64]> = a.iter_points().filter(|p| small.contains(p)).collect();
        let own: Vec<&[f64]> = b.iter_points().collect();
        assert_eq!(filtered.len(), own.len());
        for (p, q) in filtered.iter().zip(&own) {
            assert!(crate::geom::bits_equal(p, q));
        }
        // Expected count is the window volume.
        assert!((a.t() - big.volume()).abs() < 1e-12);
    }

    #[test]
    fn coupled_sampler_count_scale() {
        let w = Window::cube(vec![-5.0, -5.0], 10.0).unwrap();
        let mut total = 0usize;
        let reps = 200;
        for s in 0..reps {
            total += sample_unit_coupled(&w, s as u64).unwrap().n();
        }
        let mean = total as f64 / reps as f64;
        let sd = (100.0 / reps as f64).sqrt();
        assert!((mean - 100.0).abs() < 4.0 * sd, "mean {mean}");
    }

    #[test]
    fn scale_cloud_scales_coordinates_and_window() {
        let w = Window::unit_cube(2).unwrap();
        let cloud = sample_binomial(&w, 50, 8).unwrap();
        let scaled = scale_cloud(&cloud, 2.5).unwrap();
        assert_eq!(scaled.n(), cloud.n());
        for (p, q) in cloud.iter_points().zip(scaled.iter_points()) {
            assert!((p[0] * 2.5 - q[0]).abs() < 1e-15);
            assert!((p[1] * 2.5 - q[1]).abs() < 1e-15);
        }
        assert!(scale_cloud(&cloud, -1.0).is_err());
    }

    #[test]
    fn from_points_validates() {
        assert!(PointCloud::from_points(2, vec![0.0, 0.0, 1.0], None).is_err());
        let w = Window::unit_cube(2).unwrap();
        assert!(
            PointCloud::from_points(2, vec![0.5, 0.5, 2.0, 0.5], Some(w)).is_err(),
            "point outside the window must be rejected"
        );
        let c = PointCloud::from_points(2, vec![0.5, 0.5, 0.25, 0.75], None).unwrap();
        assert_eq!(c.n(), 2);
        assert!(c.iter_points().all(|p| c.window().contains(p)));
    }
}
