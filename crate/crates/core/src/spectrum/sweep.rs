//! ε sweep: assemble, eigensolve, refine the ground state, weighted norms.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::lattice::LatticeDomain;
use crate::operator::{assemble_operator, Boundary, OperatorMatrix};
use crate::spectrum::decay::{
    verify_decay, weighted_log_norm, DecayCertificate, DecayOptions, DecaySample,
};
use crate::spectrum::eigen::{eigensolve_with, refine_ground_state, EigenOptions, Method};
use crate::stencil::{PotentialSpec, StencilField};

#[derive(Clone, Debug)]
pub struct SweepOptions {
    /// Strictly decreasing.
    pub epsilons: Vec<f64>,
    pub bounds: Vec<[f64; 2]>,
    pub order: u8,
    pub eigen: EigenOptions,
    /// Eigenvalues are kept in [0, ε R₀].
    pub r0: f64,
    pub decay: DecayOptions,
    /// d⁰ is multiplied by this before weighting (1 for the real check).
    pub distance_scale: f64,
}

impl Default for SweepOptions {
    fn default() -> Self {
        SweepOptions {
            epsilons: vec![0.2, 0.1, 0.05, 0.025],
            bounds: vec![[-3.0, 3.0]],
            order: 0,
            eigen: EigenOptions::default(),
            r0: 5.0,
            decay: DecayOptions::default(),
            distance_scale: 1.0,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct WeightedNorm {
    pub b: f64,
    pub w: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct SpectralEntry {
    pub epsilon: f64,
    pub sites: usize,
    pub method: Method,
    pub eigenvalues: Vec<f64>,
    pub residuals: Vec<f64>,
    pub in_window: Vec<bool>,
    pub ground_energy: f64,
    pub ground_residual: f64,
    pub tail_refined: bool,
    /// Ground state W(ε) for each swept B.
    pub weighted_norms: Vec<WeightedNorm>,
    #[serde(skip)]
    pub domain: LatticeDomain,
    #[serde(skip)]
    pub vectors: Vec<Vec<f64>>,
    #[serde(skip)]
    pub ground_state: Vec<f64>,
    #[serde(skip)]
    pub distance: Vec<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct SpectralReport {
    pub entries: Vec<SpectralEntry>,
    pub b_list: Vec<f64>,
    pub distance_scale: f64,
    pub certificate: DecayCertificate,
    pub passed: bool,
}

pub fn check_epsilons(eps: &[f64]) -> Result<()> {
    if eps.is_empty() || eps.iter().any(|e| !(*e > 0.0)) || eps.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidInput(format!(
            "epsilons must be positive and strictly decreasing: {eps:?}"
        )));
    }
    Ok(())
}

pub type DistanceProvider<'a> = dyn Fn(&LatticeDomain) -> Result<Vec<f64>> + Sync + 'a;

fn one(
    stencil: &StencilField,
    pot: &PotentialSpec,
    distance: &DistanceProvider,
    eps: f64,
    opts: &SweepOptions,
) -> Result<SpectralEntry> {
    let domain = LatticeDomain::from_box(eps, &opts.bounds)?;
    let op = assemble_operator(&domain, stencil, pot, opts.order, Boundary::Dirichlet)?;
    let eo = EigenOptions {
        k: opts.eigen.k.max(2).min(op.len()),
        ..opts.eigen.clone()
    };
    let pairs = eigensolve_with(&op, &eo)?;
    let ground = refine_ground_state(&op, &pairs)?;
    let hi = eps * opts.r0;
    let lo = -eo.tol * pairs.matrix_norm;
    let in_window: Vec<bool> = pairs.values.iter().map(|e| *e >= lo && *e <= hi).collect();
    if !(ground.energy >= lo && ground.energy <= hi) {
        return Err(Error::EmptyWindow { lo: 0.0, hi });
    }
    let d: Vec<f64> = distance(&domain)?
        .into_iter()
        .map(|x| x * opts.distance_scale)
        .collect();
    let weighted_norms = opts
        .decay
        .b_list
        .iter()
        .map(|&b| {
            Ok(WeightedNorm {
                b,
                w: weighted_log_norm(&d, &ground.vector, eps, b)?.exp(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SpectralEntry {
        epsilon: eps,
        sites: op.len(),
        method: pairs.method,
        eigenvalues: pairs.values.clone(),
        residuals: pairs.residuals.clone(),
        in_window,
        ground_energy: ground.energy,
        ground_residual: ground.residual,
        tail_refined: ground.tail_refined,
        weighted_norms,
        domain,
        vectors: pairs.vectors,
        ground_state: ground.vector,
        distance: d,
    })
}

/// Runs every ε concurrently; results are ordered as `opts.epsilons`.
pub fn run_sweep(
    stencil: &StencilField,
    pot: &PotentialSpec,
    distance: &DistanceProvider,
    opts: &SweepOptions,
) -> Result<SpectralReport> {
    check_epsilons(&opts.epsilons)?;
    let entries = opts
        .epsilons
        .par_iter()
        .map(|&eps| one(stencil, pot, distance, eps, opts))
        .collect::<Result<Vec<_>>>()?;
    let samples: Vec<DecaySample> = entries
        .iter()
        .map(|e| DecaySample {
            epsilon: e.epsilon,
            energy: e.ground_energy,
            state: e.ground_state.clone(),
            distance: e.distance.clone(),
        })
        .collect();
    let certificate = verify_decay(&samples, &opts.decay)?;
    Ok(SpectralReport {
        passed: certificate.passed,
        entries,
        b_list: opts.decay.b_list.clone(),
        distance_scale: opts.distance_scale,
        certificate,
    })
}

/// Assembles the operator for one sweep member (for follow-up checks).
pub fn sweep_operator(
    stencil: &StencilField,
    pot: &PotentialSpec,
    eps: f64,
    opts: &SweepOptions,
) -> Result<OperatorMatrix> {
    let domain = LatticeDomain::from_box(eps, &opts.bounds)?;
    assemble_operator(&domain, stencil, pot, opts.order, Boundary::Dirichlet)
}
