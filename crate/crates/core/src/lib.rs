//! Analytical loss modelling of electric machines and efficiency-optimal
//! transmission ratio design for battery-electric vehicles.
//!
//! The crate is organised bottom-up:
//!
//! * [`loss_model`]: polynomial loss model, efficiency, optimal operation line (OOL).
//! * [`map_fit`]: three-design-point fitting against a reference efficiency map
//!   and reconstruction of the analytical map.
//! * [`vehicle`]: longitudinal road-load model and drive-cycle ingestion.
//! * [`ratio_opt`]: closed-form optimal ratio (quartic), numeric oracle, CVT bounds
//!   and FGT sweeps.
//! * [`cycle_analysis`]: cycle-averaged machine efficiency and energy reports.
//! * [`cli`]: the batch command-line surface.
//!
//! Speeds are rad/s and torques Nm everywhere inside the library; rpm and km/h
//! only appear at file and configuration boundaries (see [`units`]).

// `!(x > 0.0)` is used on purpose so NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod cycle_analysis;
pub mod error;
mod linalg;
pub mod loss_model;
pub mod map_fit;
pub mod presets;
pub mod ratio_opt;
pub mod units;
pub mod vehicle;

pub use error::{Error, Result};
