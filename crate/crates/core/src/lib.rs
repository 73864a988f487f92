//! Conservation laws of normal PDE systems by the multiplier method.
//!
//! Layers, bottom up: [`kernel`] (canonical expressions and zero testing),
//! [`calculus`] (total derivatives, Euler operators, Fréchet derivatives),
//! [`system`] (solution-space reduction and operator extraction),
//! [`conslaw`] (multiplier and current checks, scaling reconstruction),
//! [`symaction`] (symmetry action and homogeneity classification) and
//! [`corpus`] (the `.claw` document format, regression runner and CLI).

pub mod calculus;
pub mod conslaw;
pub mod corpus;
pub mod error;
pub mod kernel;
pub mod linalg;
pub mod symaction;
pub mod system;

pub use error::{Error, Result};
