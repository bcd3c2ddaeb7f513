//! Minimal neural-network toolkit: named parameter storage, a tape-based
//! reverse-mode autodiff engine, and Adam.
//!
//! Everything computes in f64. The tape records an eager forward pass; the
//! same evaluation code replays the graph, so recorded values are
//! reproducible bit-for-bit for fixed inputs and parameters.

pub mod adam;
pub mod params;
pub mod tape;

pub use adam::{adam_update, annealed_lr, lr_schedule, AdamState};
pub use params::ParamStore;
pub use tape::{NodeId, Tape, Tensor};
