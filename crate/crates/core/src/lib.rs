//! Resonant normal forms for finitely differentiable near-integrable
//! Hamiltonians on `T^n x B_R`.
//!
//! The crate is generic over the real scalar ([`Scalar`]); the aliases at
//! the root fix `f64`, which is what the experiments use.

// `!(x > 0.0)` is used on purpose to reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod acceptance;
pub mod audit;
pub mod diophantine;
pub mod dynamics;
pub mod error;
pub mod normalform;
pub mod scalar;
pub mod splitting;
pub mod stats;
pub mod trigpoly;

pub use error::{Error, ErrorKind, Result};
pub use scalar::Scalar;
pub use trigpoly::{Caps, NormMethod};

pub type TrigPoly = trigpoly::TrigTaylorPoly<f64>;
pub type TrigPoly32 = trigpoly::TrigTaylorPoly<f32>;
