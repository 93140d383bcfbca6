//! Geomagnetically induced current (GIC) analysis on DC-equivalent power
//! networks: network construction, field coupling, nodal solution, reactive
//! loss estimation and blocking-device studies.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod blockers;
pub mod builder;
pub mod cli;
pub mod coupling;
pub mod error;
pub mod io;
pub mod model;
pub mod solver;

pub use error::{Error, Result};
