//! Simulation library for stochastic linear bandits whose reward is invariant
//! under a hidden group of coordinate permutations.
//!
//! The hidden symmetry is represented by the set partition of its orbits:
//! the parameter is constant on every block, so it lives in a low-dimensional
//! fixed-point subspace. The crate provides
//!
//! - [`partition`]: canonical set partitions, pattern classes (non-crossing,
//!   non-nesting, interval), enumeration, counting and lattice coarsening;
//! - [`subspace`]: projections, reduced least squares, restricted isometry
//!   constants and exploratory designs;
//! - [`selection`]: residual-minimising model selection, exhaustive or by a
//!   greedy walk down the partition lattice;
//! - [`bandit`]: explore-models-then-commit, its well-separated variant with a
//!   restricted OFUL phase, full-dimensional OFUL and an ESTC-Lasso baseline;
//! - [`env`]: random symmetric instances and reward generation;
//! - [`harness`]: configuration, seed sweeps, CSV/SVG output and validation
//!   suites.

pub mod bandit;
pub mod env;
pub mod error;
pub mod harness;
pub mod partition;
pub mod rng;
pub mod selection;
pub mod stats;
pub mod subspace;

pub use error::{Error, Result};
pub use partition::{Partition, PartitionClass, Permutation};
pub use subspace::{DesignSample, FitResult, SubspaceModel};
