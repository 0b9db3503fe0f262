//! Dirichlet eigenproblem and the weighted decay estimate for its ground state.

pub mod conjugation;
pub mod decay;
pub mod eigen;
pub mod sweep;
pub mod weight;

pub use conjugation::{conjugated_form, t0_sigma, ConjugatedForm};
pub use decay::{verify_decay, DecayCertificate, DecayOptions, DecaySample};
pub use eigen::{eigensolve_lowest, refine_ground_state, Eigenpairs, GroundState};
pub use sweep::{run_sweep, SpectralReport, SweepOptions};
pub use weight::{build_weight, split_f, AgmonWeight, Cutoff, FSplit};
