//! Formal power-series solution φ = φ₂ + φ₃ + … + φ_N of the eikonal equation
//! h̃₀(x, ∇φ(x)) = 0 at the well.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};
use crate::hamiltonian::HamiltonianEvaluator;
use crate::poly::{Poly, PolyRing};
use crate::stencil::min_eigenvalue;

#[derive(Clone, Debug)]
pub struct EikonalSeries {
    order: usize,
    ring: Arc<PolyRing>,
    a: DMatrix<f64>,
    /// Homogeneous parts φ₂, φ₃, …, φ_N.
    parts: Vec<Poly>,
    phi: Poly,
    grad: Vec<Poly>,
}

fn sym_sqrt(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let e = SymmetricEigen::new(m.clone());
    if e.eigenvalues.iter().any(|&l| !(l > 0.0)) {
        return Err(Error::Hypothesis(format!(
            "matrix square root of a non-positive-definite matrix (eigenvalues {:?})",
            e.eigenvalues.as_slice()
        )));
    }
    let s = DMatrix::from_diagonal(&e.eigenvalues.map(f64::sqrt));
    Ok(&e.eigenvectors * s * e.eigenvectors.transpose())
}

/// Symmetric positive-definite solution of A·B·A = ½H.
pub fn quadratic_form(b: &DMatrix<f64>, hess: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let s = sym_sqrt(b)?;
    let si = s
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::Hypothesis("B(0) singular".into()))?;
    let mid = &s * (hess * 0.5) * &s;
    let m = sym_sqrt(&(0.5 * (&mid + mid.transpose())))?;
    let a = &si * m * &si;
    let a = 0.5 * (&a + a.transpose());
    if !(min_eigenvalue(&a) > 0.0) {
        return Err(Error::Hypothesis(
            "quadratic eikonal coefficient A is not positive definite".into(),
        ));
    }
    Ok(a)
}

/// Taylor polynomial of x ↦ h̃₀(x, ∇φ(x)) in the ring of φ.
pub fn eikonal_residual_poly(ham: &HamiltonianEvaluator, phi: &Poly) -> Result<Poly> {
    let ring = phi.ring().clone();
    let st = ham.stencil();
    let d = ring.nvars();
    let grad: Vec<Poly> = (0..d).map(|v| phi.derivative(v)).collect();
    let mut r = ham.potential().v0_expr().taylor(&ring, 0.0)?.scale(-1.0);
    for (j, e) in st.entries().iter().enumerate() {
        let a = e.a0.taylor(&ring, 0.0)?;
        let eta = st.offset_f(j);
        let mut z = Poly::zero(&ring);
        for k in 0..d {
            if eta[k] != 0.0 {
                z = z.add(&grad[k].scale(eta[k]));
            }
        }
        // cosh z with no constant term in z
        r = r.sub(&a.mul(&z.cosh()));
    }
    Ok(r)
}

impl EikonalSeries {
    /// Expansion up to total degree `order` (≥ 2).
    pub fn expand(ham: &HamiltonianEvaluator, order: usize) -> Result<Self> {
        if order < 2 {
            return Err(Error::InvalidInput(
                "eikonal series order must be at least 2".into(),
            ));
        }
        let d = ham.dim();
        let zero = vec![0.0; d];
        let b = ham.stencil().kinetic_matrix_b(&zero)?;
        let hess = ham.potential().hessian_at_well().clone();
        if !(min_eigenvalue(&hess) > 0.0) {
            return Err(Error::Hypothesis(
                "Hess V0(0) is not positive definite".into(),
            ));
        }
        let a = quadratic_form(&b, &hess)?;
        let ring = PolyRing::new(d, order);

        let mut phi2 = Poly::zero(&ring);
        for p in 0..d {
            for q in 0..d {
                let mut e = vec![0u32; d];
                e[p] += 1;
                e[q] += 1;
                let i = ring.index_of(&e).expect("degree-2 monomial");
                phi2.coef[i] += 0.5 * a[(p, q)];
            }
        }
        let mut parts = vec![phi2.clone()];
        let mut phi = phi2;

        // the degree-m residual is affine in φ_m with linear part 2(BAx)·∇φ_m
        let ba2 = 2.0 * &b * &a;
        let drift: Vec<Poly> = (0..d)
            .map(|p| {
                let mut s = Poly::zero(&ring);
                for q in 0..d {
                    s = s.add(&Poly::var(&ring, q).scale(ba2[(p, q)]));
                }
                s
            })
            .collect();
        for m in 3..=order {
            let idx = ring.degree_indices(m);
            let n = idx.len();
            let r0 = eikonal_residual_poly(ham, &phi)?;
            let rhs = DVector::from_iterator(n, idx.iter().map(|&i| -r0.coef[i]));
            let mut lmat = DMatrix::zeros(n, n);
            for (c, &i) in idx.iter().enumerate() {
                let mut e = Poly::zero(&ring);
                e.coef[i] = 1.0;
                let mut col = Poly::zero(&ring);
                for (p, dp) in drift.iter().enumerate() {
                    col = col.add(&e.derivative(p).mul(dp));
                }
                for (r, &k) in idx.iter().enumerate() {
                    lmat[(r, c)] = col.coef[k];
                }
            }
            let sv = lmat.clone().singular_values();
            let (smax, smin) = (sv.max(), sv.min());
            if !(smin > 1e-12 * smax.max(1.0)) {
                return Err(Error::Resonance { degree: m });
            }
            let sol = lmat
                .lu()
                .solve(&rhs)
                .ok_or(Error::Resonance { degree: m })?;
            let mut pm = Poly::zero(&ring);
            for (c, &i) in idx.iter().enumerate() {
                pm.coef[i] = sol[c];
            }
            phi = phi.add(&pm);
            parts.push(pm);
        }
        let grad = (0..d).map(|v| phi.derivative(v)).collect();
        Ok(EikonalSeries {
            order,
            ring,
            a,
            parts,
            phi,
            grad,
        })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn dim(&self) -> usize {
        self.ring.nvars()
    }

    /// The quadratic coefficient A with φ₂(x) = ½xᵀAx.
    pub fn quadratic(&self) -> &DMatrix<f64> {
        &self.a
    }

    /// Homogeneous part of degree `m` (2 ≤ m ≤ N).
    pub fn part(&self, m: usize) -> Option<&Poly> {
        self.parts.get(m.checked_sub(2)?)
    }

    pub fn polynomial(&self) -> &Poly {
        &self.phi
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        self.phi.eval(x)
    }

    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        self.grad.iter().map(|g| g.eval(x)).collect()
    }

    pub fn residual(&self, ham: &HamiltonianEvaluator, x: &[f64]) -> Result<f64> {
        ham.h_tilde(x, &self.gradient(x))
    }

    /// Least-squares slope of log|residual| against log r along `dir` for r in [r_lo, r_hi].
    pub fn residual_slope(
        &self,
        ham: &HamiltonianEvaluator,
        dir: &[f64],
        r_lo: f64,
        r_hi: f64,
        n: usize,
    ) -> Result<f64> {
        let nd = crate::stencil::norm(dir);
        let mut pts = Vec::with_capacity(n);
        for k in 0..n {
            let r = r_lo * (r_hi / r_lo).powf(k as f64 / (n - 1) as f64);
            let x: Vec<f64> = dir.iter().map(|c| r * c / nd).collect();
            let res = self.residual(ham, &x)?.abs();
            pts.push((r.ln(), res.ln()));
        }
        Ok(fit_slope(&pts))
    }
}

pub(crate) fn fit_slope(pts: &[(f64, f64)]) -> f64 {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::Expr;
    use crate::stencil::{PotentialSpec, StencilField};

    fn ham(s: StencilField, v: PotentialSpec) -> HamiltonianEvaluator {
        HamiltonianEvaluator::new(Arc::new(s), Arc::new(v)).unwrap()
    }

    fn oned() -> HamiltonianEvaluator {
        ham(StencilField::laplacian(1), PotentialSpec::quadratic(&[1.0]))
    }

    // exact 1D distance: d′ = 2 arsinh(x/√8)
    fn d_exact(x: f64) -> f64 {
        crate::quadrature::composite_gauss(|s| Ok(2.0 * (s / 8f64.sqrt()).asinh()), 0.0, x, 8, 12)
            .unwrap()
    }

    #[test]
    fn one_d_quadratic_coefficient() {
        let s = EikonalSeries::expand(&oned(), 2).unwrap();
        assert!((s.quadratic()[(0, 0)] - 0.5f64.sqrt()).abs() < 1e-15);
        assert!((s.value(&[1.0]) - 1.0 / (2.0 * 2f64.sqrt())).abs() < 1e-15);
    }

    #[test]
    fn one_d_series_matches_closed_form() {
        let s = EikonalSeries::expand(&oned(), 8).unwrap();
        for x in [0.05, 0.1, 0.2] {
            let e = (s.value(&[x]) - d_exact(x)).abs();
            assert!(e < 10.0 * x.powi(9), "x={x}: {e:e}");
        }
        // odd parts vanish for the even problem
        assert!(s.part(3).unwrap().coef.iter().all(|c| c.abs() < 1e-14));
        // x⁴ coefficient: d′ = x/√2 − x³/(48√2) + … ⇒ −1/(192√2)
        let c4 = s.part(4).unwrap().coef[4];
        assert!((c4 + 1.0 / (192.0 * 2f64.sqrt())).abs() < 1e-14);
    }

    #[test]
    fn isotropic_2d() {
        let s = EikonalSeries::expand(
            &ham(
                StencilField::laplacian(2),
                PotentialSpec::quadratic(&[1.0, 1.0]),
            ),
            4,
        )
        .unwrap();
        let a = s.quadratic();
        let target = DMatrix::<f64>::identity(2, 2) / 2f64.sqrt();
        assert!((a - target).abs().max() < 1e-14);
    }

    #[test]
    fn residual_order_non_symmetric_2d() {
        let st = StencilField::constant(
            2,
            &[
                (vec![0, 0], 4.5),
                (vec![1, 0], -1.0),
                (vec![-1, 0], -1.0),
                (vec![0, 1], -1.0),
                (vec![0, -1], -1.0),
                (vec![1, 1], -0.25),
                (vec![-1, -1], -0.25),
            ],
        )
        .unwrap();
        let v = PotentialSpec::new(
            2,
            Expr::parse("0.5*x1^2 + x2^2 + 0.3*x1*x2 + 0.1*x1^3", 2).unwrap(),
            vec![],
            None,
        )
        .unwrap();
        let h = ham(st, v);
        let a = quadratic_form(
            &h.stencil().b_matrix(&[0.0, 0.0]),
            h.potential().hessian_at_well(),
        )
        .unwrap();
        let b = h.stencil().b_matrix(&[0.0, 0.0]);
        let aba = &a * &b * &a;
        assert!((aba - h.potential().hessian_at_well() * 0.5).abs().max() < 1e-13);
        for n in 2..=5 {
            let s = EikonalSeries::expand(&h, n).unwrap();
            let slope = s.residual_slope(&h, &[0.8, 0.6], 1e-3, 1e-1, 12).unwrap();
            assert!((slope - (n + 1) as f64).abs() < 0.3, "N={n}: slope {slope}");
        }
    }

    #[test]
    fn residual_poly_vanishes_to_order() {
        let h = oned();
        let s = EikonalSeries::expand(&h, 6).unwrap();
        let r = eikonal_residual_poly(&h, s.polynomial()).unwrap();
        for m in 0..=6 {
            assert!(
                r.homogeneous_part(m).coef.iter().all(|c| c.abs() < 1e-14),
                "degree {m}"
            );
        }
    }
}
