//! Godunov solver for scalar conservation laws rewritten as a strictly
//! hyperbolic 2x2 system of Temple class, with Lagrangian particle-path
//! recovery of the scalar solution and entropy/oracle cross-checks.

pub mod config;
pub mod data;
pub mod entropy;
pub mod envelope;
pub mod flux;
pub mod godunov;
pub mod gamma;
pub mod numerics;
pub mod pipeline;
pub mod scalar;
pub mod temple;
pub mod transform;

pub use data::InitialData;
pub use flux::FluxSpec;
pub use godunov::{CellField, Grid, History};
pub use temple::{RegionQ, State};
pub use transform::TransformSpec;
