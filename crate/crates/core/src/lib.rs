//! Semiclassical difference operators on scaled lattices, the Finsler/Agmon
//! distance of their Hamilton function, and numerical decay diagnostics.

pub mod agmon;
pub mod config;
pub mod curve;
pub mod error;
pub mod expr;
pub mod finsler;
pub mod hamiltonian;
pub mod lattice;
pub mod markov;
pub mod ode;
pub mod operator;
pub mod poly;
pub mod quadrature;
pub mod rootfind;
pub mod spectrum;
pub mod stencil;
pub mod validate;

pub use error::{Error, Result};
