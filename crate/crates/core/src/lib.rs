//! Exact intersection arithmetic for blown-up K3 orbifolds and a spectral
//! continuity-method solver for the associated torus-bundle ansatz of the
//! Hull-Strominger system.

pub mod config;
pub mod error;
pub mod fieldio;
pub mod pipeline;
pub mod exterior;
pub mod grid;
pub mod chern;
pub mod fibered;
pub mod forms;
pub mod lattice;
pub mod solver;
pub mod synth;
