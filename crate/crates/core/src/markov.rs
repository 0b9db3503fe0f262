//! Reversible Markov chains on a lattice box and the operator
//! H = μ^{1/2}(1 − P)μ^{−1/2}.

use std::io::Read;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::{self, Expr, Func};
use crate::lattice::LatticeDomain;
use crate::operator::{Boundary, OperatorMatrix};
use crate::spectrum::decay::{verify_decay, DecayCertificate, DecayOptions, DecaySample};
use crate::spectrum::eigen::{
    eigensolve_lowest, eigensolve_with, largest_eigenvalue, refine_ground_state, symmetric_eigen,
    EigenOptions,
};
use crate::stencil::{PotentialSpec, StencilEntry, StencilField};

#[derive(Clone, Debug)]
pub struct ChainTolerances {
    pub stochastic: f64,
    pub balance: f64,
    pub mass: f64,
}

impl Default for ChainTolerances {
    fn default() -> Self {
        ChainTolerances {
            stochastic: 1e-12,
            balance: 1e-12,
            mass: 1e-12,
        }
    }
}

#[derive(Clone, Debug)]
pub struct MarkovChain {
    domain: LatticeDomain,
    /// Sorted `(col, P(x, y))` per row.
    rows: Vec<Vec<(usize, f64)>>,
    mu: Vec<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct ChainDiagnostics {
    pub max_row_defect: f64,
    pub worst_row: usize,
    /// max |μ(x)P(x,y) − μ(y)P(y,x)| / max(μ(x)P(x,y), μ(y)P(y,x))
    pub max_balance_defect: f64,
    pub worst_pair: (usize, usize),
    pub mass_defect: f64,
}

impl MarkovChain {
    pub fn domain(&self) -> &LatticeDomain {
        &self.domain
    }

    pub fn mu(&self) -> &[f64] {
        &self.mu
    }

    pub fn row(&self, i: usize) -> &[(usize, f64)] {
        &self.rows[i]
    }

    pub fn prob(&self, i: usize, j: usize) -> f64 {
        self.rows[i]
            .binary_search_by_key(&j, |e| e.0)
            .map(|k| self.rows[i][k].1)
            .unwrap_or(0.0)
    }

    pub fn diagnostics(&self) -> ChainDiagnostics {
        let mut d = ChainDiagnostics {
            max_row_defect: 0.0,
            worst_row: 0,
            max_balance_defect: 0.0,
            worst_pair: (0, 0),
            mass_defect: (self.mu.iter().sum::<f64>() - 1.0).abs(),
        };
        for (i, row) in self.rows.iter().enumerate() {
            let s: f64 = row.iter().map(|e| e.1).sum();
            if (s - 1.0).abs() > d.max_row_defect {
                d.max_row_defect = (s - 1.0).abs();
                d.worst_row = i;
            }
            for &(j, p) in row {
                let a = self.mu[i] * p;
                let b = self.mu[j] * self.prob(j, i);
                let m = a.max(b);
                if m > 0.0 && (a - b).abs() / m > d.max_balance_defect {
                    d.max_balance_defect = (a - b).abs() / m;
                    d.worst_pair = (i, j);
                }
            }
        }
        d
    }
}

/// Validates stochasticity, entry range, μ > 0, Σμ = 1 and detailed balance.
pub fn ingest_chain(
    domain: &LatticeDomain,
    triples: &[(usize, usize, f64)],
    mu: Vec<f64>,
    tol: &ChainTolerances,
) -> Result<MarkovChain> {
    let n = domain.len();
    if mu.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: mu.len(),
        });
    }
    let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    for &(i, j, p) in triples {
        if i >= n || j >= n {
            return Err(Error::Chain(format!(
                "transition ({i}, {j}) outside the {n}-site box"
            )));
        }
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::Chain(format!("P({i}, {j}) = {p} outside [0, 1]")));
        }
        rows[i].push((j, p));
    }
    for (i, row) in rows.iter_mut().enumerate() {
        row.sort_by_key(|e| e.0);
        if row.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(Error::Chain(format!("duplicate transition in row {i}")));
        }
    }
    if let Some(i) = mu.iter().position(|m| !(*m > 0.0)) {
        return Err(Error::Chain(format!("mu({i}) = {} is not positive", mu[i])));
    }
    let chain = MarkovChain {
        domain: domain.clone(),
        rows,
        mu,
    };
    let d = chain.diagnostics();
    if d.max_row_defect > tol.stochastic {
        return Err(Error::Chain(format!(
            "not stochastic: row {} sums to 1 {:+e}",
            d.worst_row, d.max_row_defect
        )));
    }
    if d.mass_defect > tol.mass {
        return Err(Error::Chain(format!("mu sums to 1 {:+e}", d.mass_defect)));
    }
    if d.max_balance_defect > tol.balance {
        let (i, j) = d.worst_pair;
        return Err(Error::Chain(format!(
            "detailed balance fails at ({i}, {j}): relative defect {:e}",
            d.max_balance_defect
        )));
    }
    Ok(chain)
}

/// Metropolis chain for μ ∝ e^{−V/ε}: P(x,y) = (1/2d) min(1, e^{−(V(y)−V(x))/ε})
/// for nearest neighbours inside the box, the rest on the diagonal.
pub fn metropolis_chain(domain: &LatticeDomain, v: &Expr) -> Result<MarkovChain> {
    let eps = domain.epsilon();
    let d = domain.dim();
    let n = domain.len();
    let vals: Vec<f64> = (0..n).map(|i| v.eval(&domain.point(i), eps)).collect();
    if vals.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidInput(
            "potential is not finite on the box".into(),
        ));
    }
    let vmin = vals.iter().cloned().fold(f64::INFINITY, f64::min);
    let w: Vec<f64> = vals.iter().map(|x| (-(x - vmin) / eps).exp()).collect();
    let z: f64 = w.iter().sum();
    let mu: Vec<f64> = w.iter().map(|x| x / z).collect();
    let mut triples = Vec::new();
    for i in 0..n {
        let mut stay = 1.0;
        for a in 0..d {
            for s in [-1i64, 1] {
                let mut eta = vec![0i64; d];
                eta[a] = s;
                if let Some(j) = domain.neighbor(i, &eta) {
                    let p = (-(vals[j] - vals[i]) / eps).exp().min(1.0) / (2 * d) as f64;
                    stay -= p;
                    triples.push((i, j, p));
                }
            }
        }
        triples.push((i, i, stay));
    }
    ingest_chain(domain, &triples, mu, &ChainTolerances::default())
}

/// Operator pieces extracted from a chain.
#[derive(Clone, Debug)]
pub struct ChainOperator {
    pub op: OperatorMatrix,
    /// Per site: `(η, a_γ(x,ε))` with γ = εη, including η = 0.
    pub coefficients: Vec<Vec<(Vec<i64>, f64)>>,
    /// V_ε(x) = Σ_{γ≠0} μ^{1/2}(x)P(x,x+γ)(μ^{−1/2}(x) − μ^{−1/2}(x+γ)).
    pub potential: Vec<f64>,
}

pub fn chain_to_operator(chain: &MarkovChain) -> Result<ChainOperator> {
    let dom = chain.domain();
    let n = dom.len();
    let s: Vec<f64> = chain.mu.iter().map(|m| m.sqrt()).collect();
    let mut rows = Vec::with_capacity(n);
    let mut coefficients = Vec::with_capacity(n);
    let mut potential = Vec::with_capacity(n);
    for i in 0..n {
        let ki = dom.multi_index(i);
        let mut a0 = 0.0;
        let mut v = 0.0;
        let mut row = Vec::new();
        let mut coef = Vec::new();
        for &(j, p) in chain.row(i) {
            if j == i {
                continue;
            }
            let c = s[i] * p / s[j];
            a0 += c;
            v += p - c;
            row.push((j, -c));
            let eta: Vec<i64> = dom
                .multi_index(j)
                .iter()
                .zip(&ki)
                .map(|(a, b)| a - b)
                .collect();
            coef.push((eta, -c));
        }
        row.push((i, a0));
        coef.push((vec![0; dom.dim()], a0));
        rows.push(row);
        coefficients.push(coef);
        potential.push(v);
    }
    let op = OperatorMatrix::from_rows(
        dom.clone(),
        Boundary::Dirichlet,
        rows,
        potential.clone(),
        1e-12,
    )?;
    Ok(ChainOperator {
        op,
        coefficients,
        potential,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct ChainOperatorReport {
    /// max |H_ij − H_ji|
    pub symmetry_gap: f64,
    /// ‖H μ^{1/2}‖∞
    pub ground_residual: f64,
    /// max |V_ε + μ^{−1/2} T_ε μ^{1/2}|
    pub potential_identity_gap: f64,
    /// max over x of |Σ_γ a_γ(x)|
    pub coefficient_sum_gap: f64,
    pub signs_ok: bool,
    /// max |H_ij − (δ_ij − μ_i^{1/2} P_ij μ_j^{−1/2})| after reassembly from (a_γ, V_ε)
    pub round_trip_gap: f64,
}

pub fn check_chain_operator(
    chain: &MarkovChain,
    co: &ChainOperator,
) -> Result<ChainOperatorReport> {
    let op = &co.op;
    let n = op.len();
    let s: Vec<f64> = chain.mu.iter().map(|m| m.sqrt()).collect();
    let mut symmetry_gap: f64 = 0.0;
    let mut round_trip_gap: f64 = 0.0;
    for i in 0..n {
        for &(j, p) in chain.row(i) {
            symmetry_gap = symmetry_gap.max((op.entry(i, j) - op.entry(j, i)).abs());
            let direct = if i == j { 1.0 - p } else { -s[i] * p / s[j] };
            round_trip_gap = round_trip_gap.max((op.entry(i, j) - direct).abs());
        }
        if chain.prob(i, i) == 0.0 {
            round_trip_gap = round_trip_gap.max((op.entry(i, i) - 1.0).abs());
        }
    }
    // reassemble from the extracted coefficients
    let dom = chain.domain();
    let rebuilt_rows: Vec<Vec<(usize, f64)>> = (0..n)
        .map(|i| {
            co.coefficients[i]
                .iter()
                .map(|(eta, a)| {
                    (
                        dom.neighbor(i, eta)
                            .expect("extracted offsets stay in the box"),
                        *a,
                    )
                })
                .collect()
        })
        .collect();
    let rebuilt = OperatorMatrix::from_rows(
        dom.clone(),
        Boundary::Dirichlet,
        rebuilt_rows,
        co.potential.clone(),
        1e-12,
    )?;
    for i in 0..n {
        for (j, _) in op.kinetic_row(i) {
            round_trip_gap = round_trip_gap.max((rebuilt.entry(i, j) - op.entry(i, j)).abs());
        }
    }
    let hs = op.apply(&s)?;
    let ground_residual = hs.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let ts = op.apply_kinetic(&s);
    let potential_identity_gap = (0..n)
        .map(|i| (co.potential[i] + ts[i] / s[i]).abs())
        .fold(0.0, f64::max);
    let coefficient_sum_gap = co
        .coefficients
        .iter()
        .map(|c| c.iter().map(|e| e.1).sum::<f64>().abs())
        .fold(0.0, f64::max);
    let signs_ok = co.coefficients.iter().all(|c| {
        c.iter().all(|(eta, a)| {
            if eta.iter().all(|k| *k == 0) {
                *a >= 0.0
            } else {
                *a <= 0.0
            }
        })
    });
    Ok(ChainOperatorReport {
        symmetry_gap,
        ground_residual,
        potential_identity_gap,
        coefficient_sum_gap,
        signs_ok,
        round_trip_gap,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct SpectralBounds {
    pub min_eigenvalue: f64,
    pub max_eigenvalue: f64,
    pub within_unit_interval: bool,
    /// ‖H μ^{1/2} − 0‖∞ with μ^{1/2} of unit ℓ² norm.
    pub ground_residual: f64,
    pub zero_is_eigenvalue: bool,
    pub passed: bool,
}

/// Spectrum of H inside [0, 2] and 0 an eigenvalue with eigenvector μ^{1/2}.
pub fn spectral_bounds_check(chain: &MarkovChain, tol: f64) -> Result<SpectralBounds> {
    let co = chain_to_operator(chain)?;
    let op = &co.op;
    let (lo, hi) = if op.len() <= 2000 {
        let (vals, _) = symmetric_eigen(op.to_dense())?;
        (vals[0], vals[vals.len() - 1])
    } else {
        (
            eigensolve_lowest(op, 1, 1e-10)?.values[0],
            largest_eigenvalue(op, 1e-10)?,
        )
    };
    let s: Vec<f64> = chain.mu.iter().map(|m| m.sqrt()).collect();
    let ground_residual = op.apply(&s)?.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let within = lo >= -tol && hi <= 2.0 + tol;
    let zero = lo.abs() <= tol && ground_residual <= tol;
    Ok(SpectralBounds {
        min_eigenvalue: lo,
        max_eigenvalue: hi,
        within_unit_interval: within,
        ground_residual,
        zero_is_eigenvalue: zero,
        passed: within && zero,
    })
}

/// Leading-order checks on the induced operator, in the spirit of the
/// one-well hypothesis: coefficient signs, symmetry, and a unique potential
/// minimum at the site nearest the origin.
#[derive(Clone, Debug, Serialize)]
pub struct ChainWellReport {
    pub signs_ok: bool,
    pub symmetric: bool,
    pub argmin_site: usize,
    pub origin_site: usize,
    pub v_at_origin: f64,
    /// min over other sites of V(x) − V(origin)
    pub well_margin: f64,
    pub passed: bool,
}

pub fn chain_well_check(chain: &MarkovChain) -> Result<ChainWellReport> {
    let co = chain_to_operator(chain)?;
    let rep = check_chain_operator(chain, &co)?;
    let dom = chain.domain();
    let o = dom.origin_site();
    let mut argmin = 0;
    for i in 0..co.potential.len() {
        if co.potential[i] < co.potential[argmin] {
            argmin = i;
        }
    }
    let margin = (0..co.potential.len())
        .filter(|&i| i != o)
        .map(|i| co.potential[i] - co.potential[o])
        .fold(f64::INFINITY, f64::min);
    let symmetric = rep.symmetry_gap <= 1e-13;
    Ok(ChainWellReport {
        signs_ok: rep.signs_ok,
        symmetric,
        argmin_site: argmin,
        origin_site: o,
        v_at_origin: co.potential[o],
        well_margin: margin,
        passed: rep.signs_ok && symmetric && argmin == o && margin > 0.0,
    })
}

/// ε → 0 limit of the Metropolis operator: ã_{±e_k}(x) = −(1/2d) e^{−|∂_k V(x)|/2},
/// V₀(x) = (1/2d) Σ_k (1 − e^{−|∂_k V(x)|/2})².
///
/// The well Hessian is supplied as (1/4d)(∇²V(0))², since the symbolic
/// derivative of |·| vanishes at the well. V₀ has a |x|³ term there, so it is
/// C² but not C³. Coefficients are made midpoint symmetric, as the chain's are.
pub fn metropolis_leading_order(v: &Expr, dim: usize) -> Result<(StencilField, PotentialSpec)> {
    let c = 1.0 / (2 * dim) as f64;
    let mut entries = Vec::new();
    let mut centre = Expr::Const(0.0);
    let mut v0 = Expr::Const(0.0);
    for k in 0..dim {
        let q = expr::call(
            Func::Exp,
            expr::mul(Expr::Const(-0.5), expr::call(Func::Abs, v.diff(k))),
        );
        for s in [-1i64, 1] {
            let mut offset = vec![0i64; dim];
            offset[k] = s;
            entries.push(StencilEntry {
                offset,
                a0: expr::mul(Expr::Const(-c), q.clone()),
                a1: None,
                r2: None,
            });
        }
        centre = expr::add(centre, expr::mul(Expr::Const(2.0 * c), q.clone()));
        v0 = expr::add(
            v0,
            expr::mul(
                Expr::Const(c),
                expr::pow(expr::sub(Expr::Const(1.0), q), Expr::Const(2.0)),
            ),
        );
    }
    entries.push(StencilEntry {
        offset: vec![0; dim],
        a0: centre,
        a1: None,
        r2: None,
    });
    let zero = vec![0.0; dim];
    let hv = nalgebra::DMatrix::from_fn(dim, dim, |a, b| v.diff(a).diff(b).eval(&zero, 0.0));
    let hess = &hv * &hv * (c / 2.0);
    Ok((
        StencilField::new(dim, entries)?.midpoint_symmetric()?,
        PotentialSpec::new(dim, v0, vec![], Some(hess))?,
    ))
}

#[derive(Clone, Debug, Serialize)]
pub struct ChainSweepEntry {
    pub epsilon: f64,
    pub sites: usize,
    pub ground_energy: f64,
    pub ground_residual: f64,
    pub spectral_gap: f64,
    pub tail_refined: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct ChainDecayReport {
    pub entries: Vec<ChainSweepEntry>,
    pub certificate: DecayCertificate,
    pub passed: bool,
}

/// Decay certificate for Metropolis chains of `v` over an ε sweep, with
/// d⁰ = (V − V(0))/2, the solution of the leading-order eikonal equation
/// with ∇d⁰ = ∇V/2.
pub fn metropolis_decay(
    v: &Expr,
    bounds: &[[f64; 2]],
    epsilons: &[f64],
    eigen: &EigenOptions,
    decay: &DecayOptions,
) -> Result<ChainDecayReport> {
    crate::spectrum::sweep::check_epsilons(epsilons)?;
    let v_origin = v.eval(&vec![0.0; bounds.len()], 0.0);
    let mut entries = Vec::new();
    let mut samples = Vec::new();
    for &eps in epsilons {
        let dom = LatticeDomain::from_box(eps, bounds)?;
        let chain = metropolis_chain(&dom, v)?;
        let co = chain_to_operator(&chain)?;
        let eo = EigenOptions {
            k: eigen.k.max(2).min(co.op.len()),
            ..eigen.clone()
        };
        let pairs = eigensolve_with(&co.op, &eo)?;
        let ground = refine_ground_state(&co.op, &pairs)?;
        let distance: Vec<f64> = (0..dom.len())
            .map(|i| 0.5 * (v.eval(&dom.point(i), eps) - v_origin))
            .collect();
        entries.push(ChainSweepEntry {
            epsilon: eps,
            sites: dom.len(),
            ground_energy: ground.energy,
            ground_residual: ground.residual,
            spectral_gap: pairs.values[1] - pairs.values[0],
            tail_refined: ground.tail_refined,
        });
        samples.push(DecaySample {
            epsilon: eps,
            energy: ground.energy,
            state: ground.vector,
            distance,
        });
    }
    let certificate = verify_decay(&samples, decay)?;
    Ok(ChainDecayReport {
        passed: certificate.passed,
        entries,
        certificate,
    })
}

#[derive(Debug, Deserialize, Serialize)]
struct TripleRow {
    row: usize,
    col: usize,
    prob: f64,
}

#[derive(Debug, Deserialize, Serialize)]
struct MuRow {
    site: usize,
    mu: f64,
}

/// Reads `row,col,prob` and `site,mu` CSV tables.
pub fn read_chain_csv<R1: Read, R2: Read>(
    domain: &LatticeDomain,
    p: R1,
    mu: R2,
) -> Result<MarkovChain> {
    let mut triples = Vec::new();
    for rec in csv::Reader::from_reader(p).deserialize() {
        let r: TripleRow = rec?;
        triples.push((r.row, r.col, r.prob));
    }
    let mut m = vec![f64::NAN; domain.len()];
    for rec in csv::Reader::from_reader(mu).deserialize() {
        let r: MuRow = rec?;
        if r.site >= m.len() {
            return Err(Error::Chain(format!(
                "measure given for site {} outside the box",
                r.site
            )));
        }
        m[r.site] = r.mu;
    }
    if let Some(i) = m.iter().position(|x| x.is_nan()) {
        return Err(Error::Chain(format!("measure missing for site {i}")));
    }
    ingest_chain(domain, &triples, m, &ChainTolerances::default())
}

pub fn write_chain_csv<W1: std::io::Write, W2: std::io::Write>(
    chain: &MarkovChain,
    p: W1,
    mu: W2,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(p);
    for i in 0..chain.domain().len() {
        for &(col, prob) in chain.row(i) {
            w.serialize(TripleRow { row: i, col, prob })?;
        }
    }
    w.flush()?;
    let mut w = csv::Writer::from_writer(mu);
    for (site, &mu) in chain.mu().iter().enumerate() {
        w.serialize(MuRow { site, mu })?;
    }
    w.flush()?;
    Ok(())
}

/// Two-state chain [[1−p, p], [q, 1−q]] with μ = (q, p)/(p+q).
pub fn two_state(p: f64, q: f64) -> Result<MarkovChain> {
    let dom = LatticeDomain::from_index_box(1.0, vec![0], vec![1])?;
    ingest_chain(
        &dom,
        &[(0, 0, 1.0 - p), (0, 1, p), (1, 0, q), (1, 1, 1.0 - q)],
        vec![q / (p + q), p / (p + q)],
        &ChainTolerances::default(),
    )
}
