//! Core library for multidimensional fee market simulation.
//!
//! Everything in this crate is pure computation over owned values: domain
//! types with validation, loss conjugates, exact block packing, dual-price
//! controllers, scenario generators, and the evaluation layer (offline
//! oracle price, regret reports, bound verifiers). No IO lives here; the
//! companion `feemarket-lab` crate owns file formats and the CLI.
//!
//! The crate is `no_std` (with `alloc`) outside of tests.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod adversaries;
pub mod controllers;
pub mod domain;
pub mod evaluation;
pub mod losses;
pub mod packing;
pub mod rng;

pub use domain::{BlockInstance, PriceVector, ResourceVector, TraceRecord};
pub use losses::{LossKind, LossSpec};
