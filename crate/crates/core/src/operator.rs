//! Assembled lattice operators `1_Σ (T_ε + V_ε) 1_Σ`.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::lattice::LatticeDomain;
use crate::stencil::{PotentialSpec, StencilField};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Boundary {
    /// Couplings leaving the box are dropped.
    Dirichlet,
    /// Offsets wrap around the box; test wrapper for whole-lattice identities.
    Periodic,
}

/// Sparse symmetric matrix, stored as the kinetic part (all a_γ including the
/// diagonal a_0) plus a separate diagonal potential.
#[derive(Clone, Debug)]
pub struct OperatorMatrix {
    domain: LatticeDomain,
    boundary: Boundary,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    kin: Vec<f64>,
    potential: Vec<f64>,
}

const SYM_TOL: f64 = 1e-12;

impl OperatorMatrix {
    /// Builds from per-row `(col, a_γ)` lists and a potential; verifies and
    /// enforces exact symmetry of the kinetic part.
    pub fn from_rows(
        domain: LatticeDomain,
        boundary: Boundary,
        mut rows: Vec<Vec<(usize, f64)>>,
        potential: Vec<f64>,
        sym_tol: f64,
    ) -> Result<Self> {
        let n = domain.len();
        if n == 0 {
            return Err(Error::EmptyDomain);
        }
        if rows.len() != n || potential.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: rows.len().min(potential.len()),
            });
        }
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut cols = Vec::new();
        let mut kin = Vec::new();
        row_ptr.push(0);
        for row in &mut rows {
            row.sort_by_key(|e| e.0);
            let mut last: Option<usize> = None;
            for &(c, a) in row.iter() {
                if c >= n {
                    return Err(Error::InvalidInput(format!("column {c} out of range")));
                }
                if last == Some(c) {
                    *kin.last_mut().expect("nonempty") += a;
                } else {
                    cols.push(c);
                    kin.push(a);
                    last = Some(c);
                }
            }
            row_ptr.push(cols.len());
        }
        let mut op = OperatorMatrix {
            domain,
            boundary,
            row_ptr,
            cols,
            kin,
            potential,
        };
        op.enforce_symmetry(sym_tol)?;
        Ok(op)
    }

    fn find(&self, i: usize, j: usize) -> Option<usize> {
        let (s, e) = (self.row_ptr[i], self.row_ptr[i + 1]);
        self.cols[s..e].binary_search(&j).ok().map(|k| s + k)
    }

    fn enforce_symmetry(&mut self, tol: f64) -> Result<()> {
        let n = self.domain.len();
        for i in 0..n {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                let j = self.cols[k];
                if j <= i {
                    continue;
                }
                let a = self.kin[k];
                let (b, kt) = match self.find(j, i) {
                    Some(kt) => (self.kin[kt], Some(kt)),
                    None => (0.0, None),
                };
                if (a - b).abs() > tol * (a.abs() + b.abs()) {
                    return Err(Error::NonSymmetric {
                        row: i,
                        col: j,
                        a,
                        b,
                    });
                }
                if let Some(kt) = kt {
                    let m = 0.5 * (a + b);
                    self.kin[k] = m;
                    self.kin[kt] = m;
                }
            }
        }
        Ok(())
    }

    pub fn domain(&self) -> &LatticeDomain {
        &self.domain
    }

    pub fn boundary(&self) -> Boundary {
        self.boundary
    }

    pub fn len(&self) -> usize {
        self.domain.len()
    }

    pub fn is_empty(&self) -> bool {
        self.domain.is_empty()
    }

    pub fn potential(&self) -> &[f64] {
        &self.potential
    }

    /// Kinetic entries `(col, a_γ)` of row `i`, the diagonal included.
    pub fn kinetic_row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        (self.row_ptr[i]..self.row_ptr[i + 1]).map(move |k| (self.cols[k], self.kin[k]))
    }

    /// Full matrix entry H_ij.
    pub fn entry(&self, i: usize, j: usize) -> f64 {
        let k = self.find(i, j).map(|k| self.kin[k]).unwrap_or(0.0);
        if i == j {
            k + self.potential[i]
        } else {
            k
        }
    }

    pub fn nnz(&self) -> usize {
        self.cols.len()
    }

    pub fn apply(&self, u: &[f64]) -> Result<Vec<f64>> {
        let n = self.len();
        if u.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: u.len(),
            });
        }
        let row = |i: usize| -> f64 {
            let mut s = self.potential[i] * u[i];
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                s += self.kin[k] * u[self.cols[k]];
            }
            s
        };
        Ok(if n > 20_000 {
            (0..n).into_par_iter().map(row).collect()
        } else {
            (0..n).map(row).collect()
        })
    }

    /// Kinetic part only: T u.
    pub fn apply_kinetic(&self, u: &[f64]) -> Vec<f64> {
        (0..self.len())
            .map(|i| {
                (self.row_ptr[i]..self.row_ptr[i + 1])
                    .map(|k| self.kin[k] * u[self.cols[k]])
                    .sum()
            })
            .collect()
    }

    /// max_i Σ_j |H_ij|, an upper bound on the spectral norm.
    pub fn norm_inf(&self) -> f64 {
        (0..self.len())
            .map(|i| {
                let mut s = 0.0;
                let mut diag = self.potential[i];
                for (j, a) in self.kinetic_row(i) {
                    if j == i {
                        diag += a;
                    } else {
                        s += a.abs();
                    }
                }
                s + diag.abs()
            })
            .fold(0.0, f64::max)
    }

    /// Lower Gershgorin bound on the spectrum.
    pub fn gershgorin_lower(&self) -> f64 {
        (0..self.len())
            .map(|i| {
                let mut off = 0.0;
                let mut diag = self.potential[i];
                for (j, a) in self.kinetic_row(i) {
                    if j == i {
                        diag += a;
                    } else {
                        off += a.abs();
                    }
                }
                diag - off
            })
            .fold(f64::INFINITY, f64::min)
    }

    /// Half bandwidth in the site enumeration.
    pub fn bandwidth(&self) -> usize {
        (0..self.len())
            .flat_map(|i| self.kinetic_row(i).map(move |(j, _)| i.abs_diff(j)))
            .max()
            .unwrap_or(0)
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let n = self.len();
        let mut m = DMatrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] += self.potential[i];
            for (j, a) in self.kinetic_row(i) {
                m[(i, j)] += a;
            }
        }
        m
    }

    pub fn has_nonpositive_offdiagonal(&self) -> bool {
        (0..self.len()).all(|i| self.kinetic_row(i).all(|(j, a)| j == i || a <= 0.0))
    }
}

/// Matrix of `1_Σ (T_ε + V_ε) 1_Σ` at the requested expansion order.
pub fn assemble_operator(
    domain: &LatticeDomain,
    stencil: &StencilField,
    pot: &PotentialSpec,
    order: u8,
    boundary: Boundary,
) -> Result<OperatorMatrix> {
    if domain.is_empty() {
        return Err(Error::EmptyDomain);
    }
    if stencil.dim() != domain.dim() || pot.dim() != domain.dim() {
        return Err(Error::DimensionMismatch {
            expected: domain.dim(),
            got: stencil.dim(),
        });
    }
    let eps = domain.epsilon();
    let n = domain.len();
    let mut rows = Vec::with_capacity(n);
    let mut potential = Vec::with_capacity(n);
    for i in 0..n {
        let x = domain.point(i);
        let mut row = Vec::with_capacity(stencil.len());
        for j in 0..stencil.len() {
            let target = match boundary {
                Boundary::Dirichlet => domain.neighbor(i, stencil.offset(j)),
                Boundary::Periodic => Some(wrap_neighbor(domain, i, stencil.offset(j))),
            };
            if let Some(t) = target {
                row.push((t, stencil.coefficient(j, &x, eps, order)));
            }
        }
        rows.push(row);
        potential.push(pot.value(&x, eps, order));
    }
    OperatorMatrix::from_rows(domain.clone(), boundary, rows, potential, SYM_TOL)
}

fn wrap_neighbor(domain: &LatticeDomain, i: usize, eta: &[i64]) -> usize {
    let mut k = domain.multi_index(i);
    for a in 0..domain.dim() {
        let lo = domain.index_lo()[a];
        let w = domain.index_hi()[a] - lo + 1;
        k[a] = lo + (k[a] - lo + eta[a]).rem_euclid(w);
    }
    domain.index_of(&k).expect("wrapped index is inside")
}

#[derive(Clone, Debug, Serialize)]
pub struct FormPositivity {
    pub trials: usize,
    /// min ⟨u,Tu⟩/‖u‖² over the trials
    pub min_ratio: f64,
    /// min of the sum-of-squares representation divided by ‖u‖²
    pub min_sum_of_squares: f64,
    /// worst |⟨u,Tu⟩ − sum of squares| relative to ‖T‖‖u‖²
    pub max_identity_gap: f64,
}

/// Rayleigh quotients of the kinetic part on random vectors.
pub fn form_positivity_check(
    domain: &LatticeDomain,
    stencil: &StencilField,
    order: u8,
    trials: usize,
    seed: u64,
) -> Result<FormPositivity> {
    let zero = PotentialSpec::new(domain.dim(), crate::expr::Expr::Const(0.0), vec![], None)?;
    let op = assemble_operator(domain, stencil, &zero, order, Boundary::Dirichlet)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = op.len();
    let norm = op.norm_inf().max(1e-300);
    let mut out = FormPositivity {
        trials,
        min_ratio: f64::INFINITY,
        min_sum_of_squares: f64::INFINITY,
        max_identity_gap: 0.0,
    };
    for t in 0..trials {
        let u: Vec<f64> = match t % 3 {
            0 => (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect(),
            1 => (0..n)
                .map(|_| 1.0 + 1e-3 * rng.gen_range(-1.0..1.0))
                .collect(),
            _ => {
                let phase: f64 = rng.gen_range(0.0..6.3);
                let freq: f64 = rng.gen_range(0.0..0.5);
                (0..n).map(|i| (freq * i as f64 + phase).cos()).collect()
            }
        };
        let uu: f64 = u.iter().map(|v| v * v).sum();
        let tu = op.apply_kinetic(&u);
        let form: f64 = u.iter().zip(&tu).map(|(a, b)| a * b).sum();
        // ⟨u,T^Σu⟩ = Σ u(x)² Σ_{γ∈Σ'} a_γ − ½ Σ Σ a_γ (u(x) − u(x+γ))²
        let mut sos = 0.0;
        for i in 0..n {
            let mut rowsum = 0.0;
            for (j, a) in op.kinetic_row(i) {
                rowsum += a;
                if j != i {
                    sos -= 0.5 * a * (u[i] - u[j]).powi(2);
                }
            }
            sos += rowsum * u[i] * u[i];
        }
        out.min_ratio = out.min_ratio.min(form / uu);
        out.min_sum_of_squares = out.min_sum_of_squares.min(sos / uu);
        out.max_identity_gap = out.max_identity_gap.max((form - sos).abs() / (norm * uu));
    }
    Ok(out)
}
