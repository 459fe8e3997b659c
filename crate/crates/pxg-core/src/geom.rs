//! Observation windows and small vector helpers.

use serde::{Deserialize, Serialize};

use crate::error::{PxgError, Result};

/// Hard cap on the ambient dimension. Pair scratch buffers live on the stack.
pub const MAX_DIM: usize = 16;

#[inline]
pub fn dist2(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut s = 0.0;
    for k in 0..a.len() {
        let d = a[k] - b[k];
        s += d * d;
    }
    s
}

#[inline]
pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    dist2(a, b).sqrt()
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut s = 0.0;
    for k in 0..a.len() {
        s += a[k] * b[k];
    }
    s
}

#[inline]
pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a)
}

#[inline]
pub fn norm(a: &[f64]) -> f64 {
    norm2(a).sqrt()
}

pub fn all_finite(a: &[f64]) -> bool {
    a.iter().all(|v| v.is_finite())
}

/// Exact bitwise equality of coordinate vectors.
#[inline]
pub fn bits_equal(a: &[f64], b: &[f64]) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x.to_bits() == y.to_bits())
}

/// Volume of the unit ball, via V_0 = 1, V_1 = 2, V_d = 2 pi / d * V_{d-2}.
pub fn unit_ball_volume(dim: usize) -> f64 {
    let mut v = if dim % 2 == 0 { 1.0 } else { 2.0 };
    let mut d = if dim % 2 == 0 { 2 } else { 3 };
    while d <= dim {
        v *= 2.0 * std::f64::consts::PI / d as f64;
        d += 2;
    }
    v
}

fn validate_dim(dim: usize) -> Result<()> {
    if dim == 0 || dim > MAX_DIM {
        return Err(PxgError::invalid(format!(
            "dimension must be between 1 and {MAX_DIM}, got {dim}"
        )));
    }
    Ok(())
}

/// Closed observation window: a ball or an axis-aligned cube.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case")]
pub enum Window {
    Ball { center: Vec<f64>, radius: f64 },
    Cube { corner: Vec<f64>, side: f64 },
}

impl Window {
    pub fn ball(center: Vec<f64>, radius: f64) -> Result<Self> {
        validate_dim(center.len())?;
        if !all_finite(&center) || !radius.is_finite() || radius <= 0.0 {
            return Err(PxgError::invalid("ball window needs finite center and radius > 0"));
        }
        Ok(Window::Ball { center, radius })
    }

    pub fn cube(corner: Vec<f64>, side: f64) -> Result<Self> {
        validate_dim(corner.len())?;
        if !all_finite(&corner) || !side.is_finite() || side <= 0.0 {
            return Err(PxgError::invalid("cube window needs finite corner and side > 0"));
        }
        Ok(Window::Cube { corner, side })
    }

    pub fn unit_ball(dim: usize) -> Result<Self> {
        Window::ball(vec![0.0; dim], 1.0)
    }

    pub fn unit_cube(dim: usize) -> Result<Self> {
        Window::cube(vec![0.0; dim], 1.0)
    }

    pub fn dim(&self) -> usize {
        match self {
            Window::Ball { center, .. } => center.len(),
            Window::Cube { corner, .. } => corner.len(),
        }
    }

    /// Re-checks the constructor invariants; deserialized windows skip them.
    pub fn validate(&self) -> Result<()> {
        match self {
            Window::Ball { center, radius } => Window::ball(center.clone(), *radius).map(|_| ()),
            Window::Cube { corner, side } => Window::cube(corner.clone(), *side).map(|_| ()),
        }
    }

    /// Closed containment.
    pub fn contains(&self, p: &[f64]) -> bool {
        match self {
            Window::Ball { center, radius } => dist2(p, center) <= radius * radius,
            Window::Cube { corner, side } => p
                .iter()
                .zip(corner)
                .all(|(x, c)| *x >= *c && *x <= c + side),
        }
    }

    pub fn volume(&self) -> f64 {
        match self {
            Window::Ball { center, radius } => {
                unit_ball_volume(center.len()) * radius.powi(center.len() as i32)
            }
            Window::Cube { corner, side } => side.powi(corner.len() as i32),
        }
    }

    pub fn diameter(&self) -> f64 {
        match self {
            Window::Ball { radius, .. } => 2.0 * radius,
            Window::Cube { corner, side } => side * (corner.len() as f64).sqrt(),
        }
    }

    /// Geometric center of the window.
    pub fn center(&self) -> Vec<f64> {
        match self {
            Window::Ball { center, .. } => center.clone(),
            Window::Cube { corner, side } => corner.iter().map(|c| c + side / 2.0).collect(),
        }
    }

    pub fn bounding_box(&self) -> (Vec<f64>, Vec<f64>) {
        match self {
            Window::Ball { center, radius } => (
                center.iter().map(|c| c - radius).collect(),
                center.iter().map(|c| c + radius).collect(),
            ),
            Window::Cube { corner, side } => (
                corner.clone(),
                corner.iter().map(|c| c + side).collect(),
            ),
        }
    }

    /// The dilated window a * W = {a x : x in W}; a > 0.
    pub fn scaled(&self, a: f64) -> Result<Window> {
        if !a.is_finite() || a <= 0.0 {
            return Err(PxgError::invalid("scale factor must be finite and > 0"));
        }
        Ok(match self {
            Window::Ball { center, radius } => Window::Ball {
                center: center.iter().map(|c| c * a).collect(),
                radius: radius * a,
            },
            Window::Cube { corner, side } => Window::Cube {
                corner: corner.iter().map(|c| c * a).collect(),
                side: side * a,
            },
        })
    }
}
