//! Core algorithms for autonomous stiffness-mapping simulation: scalar grids
//! and synthetic ground-truth fields, exact Gaussian-process regression, the
//! expected-information-density target, a heat-equation-driven ergodic
//! controller, a viscoelastic contact model with EKF parameter estimation,
//! Bayesian-optimisation baselines, map segmentation, and the closed-loop
//! simulation harness.
//!
//! The crate is `no_std` (alloc required); IO, file formats, and the CLI live
//! in the companion `palpmap` crate.

#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod contact;
pub mod eid;
pub mod ekf;
pub mod field;
pub mod gpr;
pub mod grid;
pub mod hedac;
pub mod linalg;
