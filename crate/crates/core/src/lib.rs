//! Attention-based embedding of academic heterogeneous information networks,
//! staleness-aware versioned parameter aggregation across simulated workers,
//! influence ranking, and research-team identification, with a synthetic
//! planted-team generator for desk-scale evaluation.

pub mod autodiff;
pub mod fed;
pub mod graph;
pub mod influence;
pub mod io;
pub mod model;
pub mod rng;
pub mod synth;
pub mod team;
