//! Forbidden-region proximity graphs over Poisson and binomial point clouds.
//!
//! A region family assigns to every point pair x != y an open set S(x, y)
//! that must contain no sample point for the pair to be linked. Gabriel and
//! relative-neighborhood graphs are the canonical members; arbitrary
//! isotropic families are supported through templates. On top of graph
//! construction the crate provides edge functionals with power-law weights,
//! one- and two-point difference operators, grid estimates of the
//! stabilization radius, and Monte Carlo drivers for tail, variance, and
//! normal-approximation experiments.

pub mod config;
pub mod error;
pub mod functional;
pub mod geom;
pub mod graph;
pub mod grid;
pub mod harness;
pub mod io;
pub mod pointproc;
pub mod regions;
pub mod seeding;
pub mod stabilize;
pub mod stats;

pub use error::{PxgError, Result};
