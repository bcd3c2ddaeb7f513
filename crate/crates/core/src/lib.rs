//! Simulation, learned dynamics, state filtering, and planning for small
//! 2-D ball worlds.
//!
//! The crate is organized bottom-up:
//!
//! * [`nnkit`] is a minimal tape-based autodiff engine with named parameter
//!   storage, Adam, and checkpoint serialization. Everything trains in f64.
//! * [`envs`] holds the ground-truth simulators (elastic billiards, clipped
//!   gravity with a central basin, and an action-controlled billiards
//!   variant), a small anti-aliased renderer, and dataset generation.
//! * [`dynamics`] is the graph-network transition model: per-object encoding,
//!   attention-weighted pairwise interactions, and Gaussian next-state
//!   prediction, plus an optional reward head for the control task.
//! * [`fusion`] combines dynamics predictions with (synthetic) detections by
//!   products of Gaussians and solves the per-frame matching problem.
//! * [`training`] fits the dynamics model to ground-truth state sequences
//!   with multi-step rollout likelihood.
//! * [`planner`] is Monte-Carlo tree search over either the true simulator or
//!   the learned model.
//! * [`evalkit`] computes the evaluation curves and reports (position error,
//!   pixel error, kinetic-energy diagnostics).
//! * [`cli`] wires everything into the `dynlab` binary.

pub mod cli;
pub mod dynamics;
pub mod envs;
pub mod error;
pub mod evalkit;
pub mod fusion;
pub mod nnkit;
pub mod planner;
pub mod selftest;
pub mod training;

pub use error::{Error, Result};
