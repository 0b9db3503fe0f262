//! The Hamilton function h̃₀(x,ξ) = −Σ ã_η(x) cosh(η·ξ) − V₀(x) and its
//! Legendre transform.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::stencil::{dot, min_eigenvalue, norm, PotentialSpec, StencilField};

#[derive(Clone, Debug)]
pub struct HamiltonianEvaluator {
    stencil: Arc<StencilField>,
    pot: Arc<PotentialSpec>,
    pub clamp: f64,
    pub newton_tol: f64,
    pub max_iter: usize,
    alpha_floor: f64,
    nonzero: Vec<usize>,
    const_coeffs: Option<Vec<f64>>,
}

impl HamiltonianEvaluator {
    /// `alpha_floor` is computed at the well; call [`Self::with_alpha_samples`] to widen it.
    pub fn new(stencil: Arc<StencilField>, pot: Arc<PotentialSpec>) -> Result<Self> {
        if stencil.dim() != pot.dim() {
            return Err(Error::DimensionMismatch {
                expected: stencil.dim(),
                got: pot.dim(),
            });
        }
        let nonzero = (0..stencil.len())
            .filter(|&j| stencil.offset(j).iter().any(|&k| k != 0))
            .collect();
        let const_coeffs = if stencil.is_x_independent() {
            let mut a = Vec::new();
            stencil.a0_all(&vec![0.0; stencil.dim()], &mut a);
            Some(a)
        } else {
            None
        };
        let mut h = HamiltonianEvaluator {
            stencil,
            pot,
            clamp: 40.0,
            newton_tol: 1e-13,
            max_iter: 100,
            alpha_floor: 0.0,
            nonzero,
            const_coeffs,
        };
        let zero = vec![0.0; h.dim()];
        h.alpha_floor = h.alpha_at(&zero);
        if !(h.alpha_floor > 0.0) {
            return Err(Error::Hypothesis(
                "no spanning set of negative offsets at the well".into(),
            ));
        }
        Ok(h)
    }

    /// Minimum of the basis bound over the given points (and the well).
    pub fn with_alpha_samples(mut self, samples: &[Vec<f64>]) -> Result<Self> {
        for x in samples {
            self.alpha_floor = self.alpha_floor.min(self.alpha_at(x));
        }
        if !(self.alpha_floor > 0.0) {
            return Err(Error::Hypothesis(
                "alpha floor is not positive on the samples".into(),
            ));
        }
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.stencil.dim()
    }

    pub fn stencil(&self) -> &Arc<StencilField> {
        &self.stencil
    }

    pub fn potential(&self) -> &Arc<PotentialSpec> {
        &self.pot
    }

    pub fn alpha_floor(&self) -> f64 {
        self.alpha_floor
    }

    fn coeffs(&self, x: &[f64]) -> std::borrow::Cow<'_, [f64]> {
        match &self.const_coeffs {
            Some(c) => std::borrow::Cow::Borrowed(c.as_slice()),
            None => {
                let mut a = Vec::new();
                self.stencil.a0_all(x, &mut a);
                std::borrow::Cow::Owned(a)
            }
        }
    }

    /// α(x) from a basis of negative offsets: C·λ_min(Σ ηηᵀ), C = min(−ã) on the basis.
    fn alpha_at(&self, x: &[f64]) -> f64 {
        let d = self.dim();
        let a = self.coeffs(x);
        let mut order: Vec<usize> = self
            .nonzero
            .iter()
            .copied()
            .filter(|&j| a[j] < 0.0)
            .collect();
        order.sort_by(|&i, &j| a[i].total_cmp(&a[j]));
        let mut basis: Vec<Vec<f64>> = Vec::new();
        let mut ortho: Vec<Vec<f64>> = Vec::new();
        let mut c = f64::INFINITY;
        for j in order {
            if basis.len() == d {
                break;
            }
            let eta = self.stencil.offset_f(j).to_vec();
            let mut r = eta.clone();
            for q in &ortho {
                let p = dot(&r, q);
                for k in 0..d {
                    r[k] -= p * q[k];
                }
            }
            let n = norm(&r);
            if n > 1e-9 * norm(&eta) {
                ortho.push(r.iter().map(|v| v / n).collect());
                basis.push(eta);
                c = c.min(-a[j]);
            }
        }
        if basis.len() < d {
            return 0.0;
        }
        let mut m = DMatrix::zeros(d, d);
        for eta in &basis {
            for p in 0..d {
                for q in 0..d {
                    m[(p, q)] += eta[p] * eta[q];
                }
            }
        }
        c * min_eigenvalue(&m)
    }

    fn args(&self, xi: &[f64]) -> Result<Vec<f64>> {
        let mut z = vec![0.0; self.stencil.len()];
        for &j in &self.nonzero {
            let v = dot(self.stencil.offset_f(j), xi);
            if !v.is_finite() || v.abs() > self.clamp {
                return Err(Error::Overflow {
                    value: v.abs(),
                    clamp: self.clamp,
                });
            }
            z[j] = v;
        }
        Ok(z)
    }

    /// Kinetic part t̃₀(x,ξ) = −Σ ã_η cosh(η·ξ), evaluated as −Σ ã_η·2sinh²(η·ξ/2) − Σ ã_η.
    pub fn t_tilde(&self, x: &[f64], xi: &[f64]) -> Result<f64> {
        let a = self.coeffs(x);
        let z = self.args(xi)?;
        let mut s = -a.iter().sum::<f64>();
        for &j in &self.nonzero {
            let sh = (0.5 * z[j]).sinh();
            s -= a[j] * 2.0 * sh * sh;
        }
        Ok(s)
    }

    pub fn h_tilde(&self, x: &[f64], xi: &[f64]) -> Result<f64> {
        Ok(self.t_tilde(x, xi)? - self.pot.v0(x))
    }

    /// D_ξ h̃₀ = −Σ ã_η sinh(η·ξ) η.
    pub fn fiber_derivative(&self, x: &[f64], xi: &[f64]) -> Result<Vec<f64>> {
        let a = self.coeffs(x);
        let z = self.args(xi)?;
        Ok(self.fiber_from(&a, &z))
    }

    fn fiber_from(&self, a: &[f64], z: &[f64]) -> Vec<f64> {
        let d = self.dim();
        let mut g = vec![0.0; d];
        for &j in &self.nonzero {
            let s = -a[j] * z[j].sinh();
            let eta = self.stencil.offset_f(j);
            for k in 0..d {
                g[k] += s * eta[k];
            }
        }
        g
    }

    /// D²_ξ h̃₀ = −Σ ã_η cosh(η·ξ) ηηᵀ.
    pub fn xi_hessian(&self, x: &[f64], xi: &[f64]) -> Result<DMatrix<f64>> {
        let a = self.coeffs(x);
        let z = self.args(xi)?;
        Ok(self.hessian_from(&a, &z))
    }

    fn hessian_from(&self, a: &[f64], z: &[f64]) -> DMatrix<f64> {
        let d = self.dim();
        let mut h = DMatrix::zeros(d, d);
        for &j in &self.nonzero {
            let c = -a[j] * z[j].cosh();
            let eta = self.stencil.offset_f(j);
            for p in 0..d {
                for q in 0..d {
                    h[(p, q)] += c * eta[p] * eta[q];
                }
            }
        }
        h
    }

    /// D_x h̃₀ from symbolic derivatives of ã_η and V₀.
    pub fn grad_x(&self, x: &[f64], xi: &[f64]) -> Result<Vec<f64>> {
        let z = self.args(xi)?;
        let mut g: Vec<f64> = self.pot.grad_v0(x).iter().map(|v| -v).collect();
        if self.const_coeffs.is_none() {
            for j in 0..self.stencil.len() {
                let c = if self.nonzero.contains(&j) {
                    z[j].cosh()
                } else {
                    1.0
                };
                let da = self.stencil.a0_grad(j, x);
                for k in 0..g.len() {
                    g[k] -= da[k] * c;
                }
            }
        }
        Ok(g)
    }

    /// Hamiltonian vector field (D_ξ h̃₀, −D_x h̃₀).
    pub fn vector_field(&self, x: &[f64], xi: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        let dx = self.fiber_derivative(x, xi)?;
        let dxi = self.grad_x(x, xi)?.into_iter().map(|v| -v).collect();
        Ok((dx, dxi))
    }

    pub fn inverse_fiber_derivative(&self, x: &[f64], v: &[f64]) -> Result<Vec<f64>> {
        self.invert_from(x, v, None).map(|(xi, _)| xi)
    }

    /// Newton inversion of the fibre derivative; returns ξ and the ξ-Hessian there.
    /// Minimizes the strictly convex Ψ(ξ) = t̃₀(x,ξ) − ξ·v with step halving.
    pub(crate) fn invert_from(
        &self,
        x: &[f64],
        v: &[f64],
        start: Option<&[f64]>,
    ) -> Result<(Vec<f64>, DMatrix<f64>)> {
        let d = self.dim();
        let a = self.coeffs(x);
        let vnorm = norm(v);
        let tol = self.newton_tol * (1.0 + vnorm);
        let mut xi: Vec<f64> = match start {
            Some(s) => s.to_vec(),
            None => {
                let b = self.stencil.b_matrix(x);
                crate::stencil::solve_small(&b, v)
                    .map(|s| s.into_iter().map(|c| 0.5 * c).collect())
                    .unwrap_or_else(|| vec![0.0; d])
            }
        };
        // keep the start inside the clamp region
        loop {
            if self.args(&xi).is_ok() {
                break;
            }
            xi.iter_mut().for_each(|c| *c *= 0.5);
        }
        let psi = |xi: &[f64], z: &[f64]| -> f64 {
            let mut s = 0.0;
            for &j in &self.nonzero {
                let sh = (0.5 * z[j]).sinh();
                s -= a[j] * 2.0 * sh * sh;
            }
            s - dot(xi, v)
        };
        let mut z = self.args(&xi)?;
        let mut g: Vec<f64> = self
            .fiber_from(&a, &z)
            .iter()
            .zip(v)
            .map(|(f, vv)| f - vv)
            .collect();
        let mut r = norm(&g);
        for _ in 0..self.max_iter {
            let h = self.hessian_from(&a, &z);
            let step = match h.clone().cholesky() {
                Some(ch) => ch.solve(&DVector::from_column_slice(&g)),
                None => DVector::from_column_slice(&g),
            };
            if r <= tol {
                // one polishing step; quadratic convergence brings it to round-off
                let cand: Vec<f64> = xi.iter().zip(step.iter()).map(|(c, s)| c - s).collect();
                if let Ok(zc) = self.args(&cand) {
                    let gc: Vec<f64> = self
                        .fiber_from(&a, &zc)
                        .iter()
                        .zip(v)
                        .map(|(f, vv)| f - vv)
                        .collect();
                    if norm(&gc) <= r {
                        let hc = self.hessian_from(&a, &zc);
                        return Ok((cand, hc));
                    }
                }
                return Ok((xi, h));
            }
            let slope: f64 = step.iter().zip(&g).map(|(s, gg)| s * gg).sum();
            let p0 = psi(&xi, &z);
            let mut t = 1.0;
            let mut accepted = false;
            for _ in 0..60 {
                let cand: Vec<f64> = xi.iter().zip(step.iter()).map(|(c, s)| c - t * s).collect();
                if let Ok(zc) = self.args(&cand) {
                    let gc: Vec<f64> = self
                        .fiber_from(&a, &zc)
                        .iter()
                        .zip(v)
                        .map(|(f, vv)| f - vv)
                        .collect();
                    let rc = norm(&gc);
                    if rc < r || psi(&cand, &zc) <= p0 - 1e-4 * t * slope {
                        xi = cand;
                        z = zc;
                        g = gc;
                        r = rc;
                        accepted = true;
                        break;
                    }
                }
                t *= 0.5;
            }
            if !accepted {
                break;
            }
        }
        let h = self.hessian_from(&a, &z);
        if r <= tol {
            return Ok((xi, h));
        }
        Err(Error::NoConvergence {
            what: "fibre derivative inversion",
            iterations: self.max_iter,
            residual: r,
        })
    }

    /// E_h(x,v) = h̃₀(x, ξ_h(x,v)).
    pub fn energy(&self, x: &[f64], v: &[f64]) -> Result<f64> {
        let xi = self.inverse_fiber_derivative(x, v)?;
        self.h_tilde(x, &xi)
    }

    /// A_h(x,v) = ξ_h(x,v)·v.
    pub fn action(&self, x: &[f64], v: &[f64]) -> Result<f64> {
        let xi = self.inverse_fiber_derivative(x, v)?;
        Ok(dot(&xi, v))
    }

    /// L_h = A_h − E_h.
    pub fn lagrangian(&self, x: &[f64], v: &[f64]) -> Result<f64> {
        let xi = self.inverse_fiber_derivative(x, v)?;
        Ok(dot(&xi, v) - self.h_tilde(x, &xi)?)
    }
}
