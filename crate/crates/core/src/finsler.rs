//! The Finsler function ℓ(x,v) = ξ_h(x,ṽ)·v, with ṽ the rescaling of v onto
//! the energy shell.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::curve::{Curve, Path, TimeMap};
use crate::error::{Error, Result};
use crate::hamiltonian::HamiltonianEvaluator;
use crate::quadrature::{adaptive_simpson, composite_gauss};
use crate::stencil::{dot, min_eigenvalue, norm};

#[derive(Clone, Debug)]
pub struct Shell {
    pub lambda: f64,
    pub v_tilde: Vec<f64>,
    pub xi_tilde: Vec<f64>,
    /// ξ-Hessian of h̃₀ at (x, ξ̃).
    pub hessian: DMatrix<f64>,
}

#[derive(Clone, Debug)]
pub struct FinslerEvaluator {
    ham: Arc<HamiltonianEvaluator>,
    pub energy_level: f64,
    pub root_tol: f64,
    /// Below this |x| the quadratic model replaces the root find.
    pub well_radius: f64,
    pub max_doublings: usize,
    pub quad_tol: f64,
}

impl FinslerEvaluator {
    pub fn new(ham: Arc<HamiltonianEvaluator>) -> Self {
        FinslerEvaluator {
            ham,
            energy_level: 0.0,
            root_tol: 1e-12,
            well_radius: 1e-4,
            max_doublings: 60,
            quad_tol: 1e-10,
        }
    }

    pub fn hamiltonian(&self) -> &Arc<HamiltonianEvaluator> {
        &self.ham
    }

    pub fn dim(&self) -> usize {
        self.ham.dim()
    }

    /// x ∈ S(E) ⇔ h̃₀(x,0) ≥ E.
    pub fn is_singular(&self, x: &[f64]) -> bool {
        let zero = vec![0.0; self.dim()];
        self.ham
            .h_tilde(x, &zero)
            .map(|h| h >= self.energy_level)
            .unwrap_or(true)
    }

    /// Unique λ > 0 with E(x, λv) = E, found by bracketing plus safeguarded Newton.
    pub fn normalize_to_shell(&self, x: &[f64], v: &[f64]) -> Result<Shell> {
        let e = self.energy_level;
        let zero = vec![0.0; self.dim()];
        let h0 = self.ham.h_tilde(x, &zero)?;
        if h0 >= e {
            return Err(Error::SingularPoint { point: x.to_vec() });
        }
        if norm(v) == 0.0 {
            return Err(Error::InvalidInput("zero direction".into()));
        }
        // quadratic model: E ≈ λ²⟨v,B⁻¹v⟩/4 + h0
        let b = self.ham.stencil().b_matrix(x);
        let q = crate::stencil::solve_small(&b, v)
            .map(|w| dot(&w, v))
            .unwrap_or(1.0);
        let mut lam = 2.0 * ((e - h0) / q.max(1e-300)).sqrt();
        if !lam.is_finite() || lam <= 0.0 {
            lam = 1.0;
        }

        let eval = |l: f64, start: Option<&[f64]>| -> Result<(f64, f64, Vec<f64>, DMatrix<f64>)> {
            let vl: Vec<f64> = v.iter().map(|c| l * c).collect();
            let (xi, h) = self.ham.invert_from(x, &vl, start)?;
            let f = self.ham.h_tilde(x, &xi)? - e;
            let hv = h
                .clone()
                .cholesky()
                .map(|c| c.solve(&DVector::from_column_slice(v)))
                .ok_or_else(|| Error::Hypothesis("xi-Hessian not positive definite".into()))?;
            let df = l * hv.iter().zip(v).map(|(a, b)| a * b).sum::<f64>();
            Ok((f, df, xi, h))
        };

        let mut lo = 0.0;
        let mut hi = f64::INFINITY;
        let (mut f, mut df, mut xi, mut h) = match eval(lam, None) {
            Ok(r) => r,
            Err(Error::Overflow { .. }) => {
                // shrink into the clamp region
                let mut l = lam;
                loop {
                    l *= 0.5;
                    if let Ok(r) = eval(l, None) {
                        lam = l;
                        break r;
                    }
                    if l < 1e-300 {
                        return Err(Error::NoConvergence {
                            what: "shell bracket",
                            iterations: 0,
                            residual: f64::NAN,
                        });
                    }
                }
            }
            Err(err) => return Err(err),
        };
        // bracket
        let mut doublings = 0;
        while f < 0.0 {
            lo = lam;
            if doublings == self.max_doublings {
                return Err(Error::NoConvergence {
                    what: "shell bracket",
                    iterations: doublings,
                    residual: f,
                });
            }
            lam *= 2.0;
            doublings += 1;
            let start: Vec<f64> = xi.iter().map(|c| 2.0 * c).collect();
            (f, df, xi, h) = match eval(lam, Some(&start)) {
                Ok(r) => r,
                Err(Error::Overflow { .. }) => {
                    hi = lam;
                    lam = 0.5 * (lo + hi);
                    eval(lam, None)?
                }
                Err(err) => return Err(err),
            };
        }
        if f > 0.0 {
            hi = hi.min(lam);
        }
        for _ in 0..200 {
            if f == 0.0 {
                break;
            }
            if f < 0.0 {
                lo = lo.max(lam);
            } else {
                hi = hi.min(lam);
            }
            let mut next = lam - f / df;
            if !(next > lo && next < hi) || !next.is_finite() {
                next = 0.5 * (lo + hi);
            }
            let step = (next - lam).abs();
            if step <= 2.0 * f64::EPSILON * lam {
                break;
            }
            let scale = next / lam;
            let start: Vec<f64> = xi.iter().map(|c| scale * c).collect();
            lam = next;
            (f, df, xi, h) = eval(lam, Some(&start))?;
            if hi - lo <= 4.0 * f64::EPSILON * hi {
                break;
            }
        }
        if f.abs() > self.root_tol {
            return Err(Error::NoConvergence {
                what: "shell normalization",
                iterations: 200,
                residual: f.abs(),
            });
        }
        Ok(Shell {
            lambda: lam,
            v_tilde: v.iter().map(|c| lam * c).collect(),
            xi_tilde: xi,
            hessian: h,
        })
    }

    /// ℓ(x,v); zero for v = 0 and at the well, quadratic model near the well.
    pub fn ell(&self, x: &[f64], v: &[f64]) -> Result<f64> {
        if norm(v) == 0.0 {
            return Ok(0.0);
        }
        if norm(x) < self.well_radius {
            return self.ell_quadratic_model(x, v);
        }
        let s = self.normalize_to_shell(x, v)?;
        Ok(dot(&s.xi_tilde, v))
    }

    /// √((E − h̃₀(x,0))·⟨v,B⁻¹v⟩), the leading behaviour at the well.
    pub fn ell_quadratic_model(&self, x: &[f64], v: &[f64]) -> Result<f64> {
        let zero = vec![0.0; self.dim()];
        let gap = (self.energy_level - self.ham.h_tilde(x, &zero)?).max(0.0);
        let b = self.ham.stencil().b_matrix(x);
        let q = crate::stencil::solve_small(&b, v)
            .map(|w| dot(&w, v))
            .ok_or_else(|| Error::Hypothesis("B(x) singular".into()))?;
        Ok((gap * q).sqrt())
    }

    /// Central-difference Hessian of ½ℓ² in v.
    pub fn metric_tensor(&self, x: &[f64], v: &[f64]) -> Result<DMatrix<f64>> {
        let d = self.dim();
        let h = 1e-4 * norm(v).max(1.0);
        let f = |w: &[f64]| -> Result<f64> { Ok(0.5 * self.ell(x, w)?.powi(2)) };
        let mut g = DMatrix::zeros(d, d);
        let f0 = f(v)?;
        for a in 0..d {
            for b in a..d {
                let val = if a == b {
                    let mut p = v.to_vec();
                    p[a] += h;
                    let mut m = v.to_vec();
                    m[a] -= h;
                    (f(&p)? - 2.0 * f0 + f(&m)?) / (h * h)
                } else {
                    let mut s = 0.0;
                    for (sa, sb, sign) in [
                        (1.0, 1.0, 1.0),
                        (1.0, -1.0, -1.0),
                        (-1.0, 1.0, -1.0),
                        (-1.0, -1.0, 1.0),
                    ] {
                        let mut p = v.to_vec();
                        p[a] += sa * h;
                        p[b] += sb * h;
                        s += sign * f(&p)?;
                    }
                    s / (4.0 * h * h)
                };
                g[(a, b)] = val;
                g[(b, a)] = val;
            }
        }
        let min = min_eigenvalue(&g);
        if !(min > 0.0) {
            return Err(Error::Hypothesis(format!(
                "metric tensor not positive definite at x = {x:?}, v = {v:?} (min eigenvalue {min:e})"
            )));
        }
        Ok(g)
    }

    /// ∫ ℓ(γ, γ̇) dt by adaptive Simpson.
    pub fn curve_length(&self, c: &dyn Path) -> Result<f64> {
        let (a, b) = c.interval();
        adaptive_simpson(
            |t| self.ell(&c.point(t), &c.velocity(t)),
            a,
            b,
            self.quad_tol,
            40,
        )
    }

    /// ∫ ℓ(γ, γ̇) dt by a fixed composite Gauss rule (smooth in perturbations).
    pub fn curve_length_fixed(&self, c: &dyn Path, panels: usize, order: usize) -> Result<f64> {
        let (a, b) = c.interval();
        composite_gauss(
            |t| self.ell(&c.point(t), &c.velocity(t)),
            a,
            b,
            panels,
            order,
        )
    }

    /// b_E: moves a curve onto the energy shell, returning γ = η∘α⁻¹ and α.
    pub fn reparametrize_to_shell(&self, c: &Curve) -> Result<(Curve, TimeMap)> {
        let lam_at = |t: f64| -> Result<f64> {
            Ok(self.normalize_to_shell(&c.point(t), &c.velocity(t))?.lambda)
        };
        let t = c.times().to_vec();
        let mut lambda = Vec::with_capacity(t.len());
        for &ti in &t {
            lambda.push(lam_at(ti)?);
        }
        let mut s = vec![0.0];
        for w in t.windows(2) {
            let seg = adaptive_simpson(|u| Ok(1.0 / lam_at(u)?), w[0], w[1], 1e-13, 30)?;
            s.push(s.last().expect("nonempty") + seg);
        }
        let vel: Vec<Vec<f64>> = c
            .velocities()
            .iter()
            .zip(&lambda)
            .map(|(v, l)| v.iter().map(|c| l * c).collect())
            .collect();
        let gamma = Curve::new(s.clone(), c.points().to_vec(), vel)?;
        Ok((gamma, TimeMap { t, s, lambda }))
    }
}
