use thiserror::Error as ThisError;

use crate::expr::ExprError;

#[derive(Debug, ThisError)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("empty lattice domain")]
    EmptyDomain,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error("operator not symmetric at ({row}, {col}): {a} vs {b}")]
    NonSymmetric {
        row: usize,
        col: usize,
        a: f64,
        b: f64,
    },
    #[error("hypothesis violated: {0}")]
    Hypothesis(String),
    #[error("overflow guard: exponent argument {value} exceeds clamp {clamp}")]
    Overflow { value: f64, clamp: f64 },
    #[error("no convergence in {what} after {iterations} iterations (residual {residual:e})")]
    NoConvergence {
        what: &'static str,
        iterations: usize,
        residual: f64,
    },
    #[error("point {point:?} lies in the singular set (h(x,0) >= E)")]
    SingularPoint { point: Vec<f64> },
    #[error("quadrature did not reach tolerance: achieved {achieved:e}")]
    Quadrature { achieved: f64 },
    #[error("eikonal series: singular linear system at degree {degree}")]
    Resonance { degree: usize },
    #[error("target {target:?} unreachable: {reason}")]
    Unreachable { target: Vec<f64>, reason: String },
    #[error("energy drift {drift:e} exceeds tolerance {tol:e}")]
    EnergyDrift { drift: f64, tol: f64 },
    #[error("graph is disconnected: {unreached} sites unreachable")]
    Disconnected { unreached: usize },
    #[error("markov chain invalid: {0}")]
    Chain(String),
    #[error("no eigenvalue in the window [{lo}, {hi}]")]
    EmptyWindow { lo: f64, hi: f64 },
    #[error("config: {0}")]
    Config(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
