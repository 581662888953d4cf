//! Verification toolkit for reduced actions of the stationary quantum
//! Hamilton-Jacobi equation.
//!
//! The crate builds one-dimensional Schrödinger bases, turns them into reduced
//! actions, certifies the third-order equation those actions satisfy, and
//! analyses the separable three-dimensional case: general versus sum-form
//! actions, the per-axis equations that follow from the continuity equation,
//! trajectories obeying the energy-conservation law, and the parameter
//! counting behind microstates.

// NaN-rejecting comparisons and index-coupled tensor loops are deliberate
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod action1d;
pub mod action3d;
pub mod cli;
pub mod config;
pub mod error;
pub mod microstates;
pub mod modified;
pub mod numerics;
pub mod potentials;
pub mod schrodinger;
pub mod trajectory;

pub use error::{QhjError, Result};
pub use potentials::{PhysicalConstants, Potential1D, Potential3D};
pub use schrodinger::{AnalyticKind, BasisPair, Grid1D};
