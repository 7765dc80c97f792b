//! Morse index bounds for symmetric Wente tori.
//!
//! The Jacobi operator of a Wente torus is conformally equivalent to the
//! Schrödinger operator `-Δ - V` on a flat torus. This crate builds the
//! surface data, the Laplacian eigenbasis, the Galerkin matrix of the
//! quadratic form in that basis, and from its spectrum a family of lower
//! and upper bounds on the Morse index.

pub mod assembly;
pub mod basis;
pub mod bounds;
pub mod cache;
pub mod catalog;
pub mod elliptic;
pub mod error;
pub mod reference;
pub mod spectrum;
pub mod surface;

pub use error::{Error, Result};
