//! Coefficient stencils `a_γ(x,ε)` and potentials `V_ε`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::expr::{self, Expr};

#[derive(Clone, Debug)]
pub struct StencilEntry {
    pub offset: Vec<i64>,
    pub a0: Expr,
    pub a1: Option<Expr>,
    pub r2: Option<Expr>,
}

#[derive(Clone, Debug)]
pub struct StencilField {
    dim: usize,
    entries: Vec<StencilEntry>,
    offsets_f: Vec<Vec<f64>>,
    a0_const: Vec<Option<f64>>,
    a0_grad: Vec<Vec<Expr>>,
    decay_rate: Option<f64>,
    tail_mass: f64,
}

impl StencilField {
    pub fn new(dim: usize, mut entries: Vec<StencilEntry>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidInput("dimension must be positive".into()));
        }
        for e in &entries {
            if e.offset.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: e.offset.len(),
                });
            }
            if e.a0.uses_eps() {
                return Err(Error::InvalidInput(format!(
                    "a0 for offset {:?} must not depend on eps",
                    e.offset
                )));
            }
        }
        for i in 0..entries.len() {
            for j in 0..i {
                if entries[i].offset == entries[j].offset {
                    return Err(Error::InvalidInput(format!(
                        "duplicate offset {:?}",
                        entries[i].offset
                    )));
                }
            }
        }
        if !entries.iter().any(|e| e.offset.iter().all(|&k| k == 0)) {
            entries.push(StencilEntry {
                offset: vec![0; dim],
                a0: Expr::Const(0.0),
                a1: None,
                r2: None,
            });
        }
        let offsets_f = entries
            .iter()
            .map(|e| e.offset.iter().map(|&k| k as f64).collect())
            .collect();
        let a0_const = entries
            .iter()
            .map(|e| {
                if e.a0.is_constant() {
                    Some(e.a0.eval(&[], 0.0))
                } else {
                    None
                }
            })
            .collect();
        let a0_grad = entries
            .iter()
            .map(|e| (0..dim).map(|v| e.a0.diff(v)).collect())
            .collect();
        Ok(StencilField {
            dim,
            entries,
            offsets_f,
            a0_const,
            a0_grad,
            decay_rate: None,
            tail_mass: 0.0,
        })
    }

    /// Constant-coefficient stencil from `(offset, ã)` pairs.
    pub fn constant(dim: usize, pairs: &[(Vec<i64>, f64)]) -> Result<Self> {
        Self::new(
            dim,
            pairs
                .iter()
                .map(|(o, a)| StencilEntry {
                    offset: o.clone(),
                    a0: Expr::Const(*a),
                    a1: None,
                    r2: None,
                })
                .collect(),
        )
    }

    /// Nearest-neighbour Laplacian: ã₀ = 2d, ã_{±e_k} = −1.
    pub fn laplacian(dim: usize) -> Self {
        let mut pairs = vec![(vec![0; dim], 2.0 * dim as f64)];
        for k in 0..dim {
            for s in [1, -1] {
                let mut o = vec![0; dim];
                o[k] = s;
                pairs.push((o, -1.0));
            }
        }
        Self::constant(dim, &pairs).expect("valid stencil")
    }

    /// ã_η = −strength·e^{−rate|η|} for 0 < ‖η‖∞ ≤ radius, truncated; the
    /// dropped tail Σ_{‖η‖∞ > radius} |ã_η| is recorded.
    pub fn exponential_family(dim: usize, radius: i64, rate: f64, strength: f64) -> Result<Self> {
        if radius < 1 || !(rate > 0.0) || !(strength > 0.0) {
            return Err(Error::InvalidInput(
                "exponential family needs radius >= 1, rate > 0, strength > 0".into(),
            ));
        }
        let coef = |eta: &[i64]| -> f64 {
            let n2: f64 = eta.iter().map(|&k| (k * k) as f64).sum::<f64>().sqrt();
            -strength * (-rate * n2).exp()
        };
        let mut pairs = Vec::new();
        let mut sum = 0.0;
        for_each_offset(dim, radius, &mut |eta| {
            if eta.iter().any(|&k| k != 0) {
                let a = coef(eta);
                sum += a;
                pairs.push((eta.to_vec(), a));
            }
        });
        pairs.push((vec![0; dim], -sum));
        // tail: shells beyond the radius until they are negligible
        let mut tail = 0.0;
        let far = radius + (40.0 / rate).ceil() as i64 + 1;
        let far = far.min(radius + 200);
        for_each_offset(dim, far, &mut |eta| {
            let inf = eta.iter().map(|k| k.abs()).max().unwrap_or(0);
            if inf > radius {
                tail += coef(eta).abs();
            }
        });
        let mut s = Self::constant(dim, &pairs)?;
        s.decay_rate = Some(rate);
        s.tail_mass = tail;
        Ok(s)
    }

    /// Fills `a1` and `r2` so that the full coefficient equals ã_η(x + εη/2).
    /// With that choice a_γ(x,ε) = a_{−γ}(x+γ,ε) holds exactly for even ã.
    pub fn midpoint_symmetric(mut self) -> Result<Self> {
        let dim = self.dim;
        for e in &mut self.entries {
            if e.a0.is_constant() || e.a1.is_some() || e.r2.is_some() {
                continue;
            }
            let eta: Vec<f64> = e.offset.iter().map(|&k| k as f64).collect();
            let mut a1 = Expr::Const(0.0);
            for v in 0..dim {
                a1 = expr::add(a1, expr::mul(Expr::Const(0.5 * eta[v]), e.a0.diff(v)));
            }
            let shifted = e.a0.substitute(&|v| {
                expr::add(
                    Expr::Var(v),
                    expr::mul(Expr::Const(0.5 * eta[v]), Expr::Eps),
                )
            });
            let r2 = expr::sub(
                expr::sub(shifted, e.a0.clone()),
                expr::mul(Expr::Eps, a1.clone()),
            );
            e.a1 = Some(a1);
            e.r2 = Some(r2);
        }
        Self::new(dim, self.entries).map(|mut s| {
            s.decay_rate = self.decay_rate;
            s.tail_mass = self.tail_mass;
            s
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entries(&self) -> &[StencilEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn offset(&self, j: usize) -> &[i64] {
        &self.entries[j].offset
    }

    pub fn offset_f(&self, j: usize) -> &[f64] {
        &self.offsets_f[j]
    }

    pub fn decay_rate(&self) -> Option<f64> {
        self.decay_rate
    }

    pub fn tail_mass(&self) -> f64 {
        self.tail_mass
    }

    pub fn is_x_independent(&self) -> bool {
        self.a0_const.iter().all(Option::is_some)
    }

    pub fn max_radius(&self) -> i64 {
        self.entries
            .iter()
            .flat_map(|e| e.offset.iter().map(|k| k.abs()))
            .max()
            .unwrap_or(0)
    }

    pub fn a0(&self, j: usize, x: &[f64]) -> f64 {
        match self.a0_const[j] {
            Some(c) => c,
            None => self.entries[j].a0.eval(x, 0.0),
        }
    }

    /// ã_η(x) for all offsets, in entry order.
    pub fn a0_all(&self, x: &[f64], out: &mut Vec<f64>) {
        out.clear();
        out.extend((0..self.entries.len()).map(|j| self.a0(j, x)));
    }

    pub fn a0_grad(&self, j: usize, x: &[f64]) -> Vec<f64> {
        if self.a0_const[j].is_some() {
            return vec![0.0; self.dim];
        }
        self.a0_grad[j].iter().map(|g| g.eval(x, 0.0)).collect()
    }

    /// Full coefficient a_γ(x,ε) truncated at the given expansion order.
    pub fn coefficient(&self, j: usize, x: &[f64], eps: f64, order: u8) -> f64 {
        let e = &self.entries[j];
        let mut a = self.a0(j, x);
        if order >= 1 {
            if let Some(a1) = &e.a1 {
                a += eps * a1.eval(x, eps);
            }
        }
        if order >= 2 {
            if let Some(r2) = &e.r2 {
                a += r2.eval(x, eps);
            }
        }
        a
    }

    /// t₀(x,ξ) = Σ ã_η(x) cos(η·ξ).
    pub fn symbol_t0(&self, x: &[f64], xi: &[f64]) -> f64 {
        (0..self.len())
            .map(|j| self.a0(j, x) * dot(&self.offsets_f[j], xi).cos())
            .sum()
    }

    /// B(x) with B_{νμ} = −½ Σ ã_η η_ν η_μ, unchecked.
    pub fn b_matrix(&self, x: &[f64]) -> DMatrix<f64> {
        let d = self.dim;
        let mut b = DMatrix::zeros(d, d);
        for j in 0..self.len() {
            let a = self.a0(j, x);
            let eta = &self.offsets_f[j];
            for n in 0..d {
                for m in 0..d {
                    b[(n, m)] -= 0.5 * a * eta[n] * eta[m];
                }
            }
        }
        b
    }

    /// B(x), rejected unless positive definite.
    pub fn kinetic_matrix_b(&self, x: &[f64]) -> Result<DMatrix<f64>> {
        let b = self.b_matrix(x);
        let min = min_eigenvalue(&b);
        if !(min > 0.0) {
            return Err(Error::Hypothesis(format!(
                "B(x) not positive definite at {x:?}: min eigenvalue {min:e}"
            )));
        }
        Ok(b)
    }
}

fn for_each_offset(dim: usize, radius: i64, f: &mut dyn FnMut(&[i64])) {
    let mut cur = vec![-radius; dim];
    loop {
        f(&cur);
        let mut k = 0;
        loop {
            if k == dim {
                return;
            }
            cur[k] += 1;
            if cur[k] <= radius {
                break;
            }
            cur[k] = -radius;
            k += 1;
        }
    }
}

/// All integer offsets with ‖η‖∞ ≤ r, excluding 0.
pub fn offsets_within(dim: usize, r: i64) -> Vec<Vec<i64>> {
    let mut v = Vec::new();
    for_each_offset(dim, r, &mut |eta| {
        if eta.iter().any(|&k| k != 0) {
            v.push(eta.to_vec());
        }
    });
    v
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub(crate) fn min_eigenvalue(m: &DMatrix<f64>) -> f64 {
    let sym = (m + m.transpose()) * 0.5;
    sym.symmetric_eigenvalues().min()
}

#[derive(Clone, Debug)]
pub struct PotentialSpec {
    dim: usize,
    v0: Expr,
    corrections: Vec<Expr>,
    grad: Vec<Expr>,
    hessian_at_well: DMatrix<f64>,
}

impl PotentialSpec {
    /// `hessian` overrides the symbolic Hessian at the well when given.
    pub fn new(
        dim: usize,
        v0: Expr,
        corrections: Vec<Expr>,
        hessian: Option<DMatrix<f64>>,
    ) -> Result<Self> {
        if v0.uses_eps() {
            return Err(Error::InvalidInput("v0 must not depend on eps".into()));
        }
        let grad: Vec<Expr> = (0..dim).map(|v| v0.diff(v)).collect();
        let zero = vec![0.0; dim];
        let hess = match hessian {
            Some(h) => {
                if h.nrows() != dim || h.ncols() != dim {
                    return Err(Error::DimensionMismatch {
                        expected: dim,
                        got: h.nrows(),
                    });
                }
                h
            }
            None => DMatrix::from_fn(dim, dim, |a, b| grad[a].diff(b).eval(&zero, 0.0)),
        };
        Ok(PotentialSpec {
            dim,
            v0,
            corrections,
            grad,
            hessian_at_well: hess,
        })
    }

    /// V₀ = Σ w_k x_k²/2.
    pub fn quadratic(weights: &[f64]) -> Self {
        let dim = weights.len();
        let mut e = Expr::Const(0.0);
        for (k, &w) in weights.iter().enumerate() {
            e = expr::add(
                e,
                expr::mul(
                    Expr::Const(0.5 * w),
                    expr::pow(Expr::Var(k), Expr::Const(2.0)),
                ),
            );
        }
        Self::new(dim, e, Vec::new(), None).expect("valid potential")
    }

    /// V₀ = Σ w_k x_k²/2 + c Σ x_k⁴.
    pub fn quartic_well(weights: &[f64], c: f64) -> Self {
        let dim = weights.len();
        let mut e = Expr::Const(0.0);
        for (k, &w) in weights.iter().enumerate() {
            e = expr::add(
                e,
                expr::add(
                    expr::mul(
                        Expr::Const(0.5 * w),
                        expr::pow(Expr::Var(k), Expr::Const(2.0)),
                    ),
                    expr::mul(Expr::Const(c), expr::pow(Expr::Var(k), Expr::Const(4.0))),
                ),
            );
        }
        Self::new(dim, e, Vec::new(), None).expect("valid potential")
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn v0_expr(&self) -> &Expr {
        &self.v0
    }

    pub fn corrections(&self) -> &[Expr] {
        &self.corrections
    }

    pub fn v0(&self, x: &[f64]) -> f64 {
        self.v0.eval(x, 0.0)
    }

    pub fn grad_v0(&self, x: &[f64]) -> Vec<f64> {
        self.grad.iter().map(|g| g.eval(x, 0.0)).collect()
    }

    pub fn hessian_at_well(&self) -> &DMatrix<f64> {
        &self.hessian_at_well
    }

    /// V_ε(x); order 0 keeps V₀, order 1 adds εV₁, order 2 adds every correction.
    pub fn value(&self, x: &[f64], eps: f64, order: u8) -> f64 {
        let mut v = self.v0(x);
        let keep = match order {
            0 => 0,
            1 => 1.min(self.corrections.len()),
            _ => self.corrections.len(),
        };
        let mut p = 1.0;
        for c in &self.corrections[..keep] {
            p *= eps;
            v += p * c.eval(x, eps);
        }
        v
    }

    /// Largest relative deviation of `hessian_at_well` from central differences of V₀ at 0.
    pub fn hessian_fd_deviation(&self, h: f64) -> f64 {
        let d = self.dim;
        let mut worst: f64 = 0.0;
        let scale = self.hessian_at_well.abs().max().max(1e-300);
        for a in 0..d {
            for b in 0..d {
                let f = |sa: f64, sb: f64| {
                    let mut x = vec![0.0; d];
                    x[a] += sa * h;
                    x[b] += sb * h;
                    self.v0(&x)
                };
                let fd =
                    (f(1.0, 1.0) - f(1.0, -1.0) - f(-1.0, 1.0) + f(-1.0, -1.0)) / (4.0 * h * h);
                worst = worst.max((fd - self.hessian_at_well[(a, b)]).abs() / scale);
            }
        }
        worst
    }

    /// Newton-free check that the Hessian at the well is SPD.
    pub fn hessian_is_positive(&self) -> bool {
        min_eigenvalue(&self.hessian_at_well) > 0.0
    }
}

/// Solves `m x = b` for small dense SPD-ish systems.
pub(crate) fn solve_small(m: &DMatrix<f64>, b: &[f64]) -> Option<Vec<f64>> {
    let rhs = DVector::from_column_slice(b);
    m.clone()
        .lu()
        .solve(&rhs)
        .map(|v| v.iter().copied().collect())
}
