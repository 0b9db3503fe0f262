//! Quadratic form of e^{φ/ε} H^Σ e^{−φ/ε} and the truncated symbol t₀^Σ.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::lattice::LatticeDomain;
use crate::operator::OperatorMatrix;
use crate::stencil::{dot, StencilField};

/// Largest |φ(x) − φ(y)|/ε accepted before cosh/exp would overflow.
pub const EXP_CLAMP: f64 = 700.0;

#[derive(Clone, Debug, Serialize)]
pub struct ConjugatedForm {
    pub lhs: f64,
    pub rhs: f64,
    /// V^φ(x) = Σ_{x+γ ∈ Σ} a_γ(x,ε) cosh((φ(x) − φ(x+γ))/ε)
    pub v_phi: Vec<f64>,
    /// ⟨(V_ε + V^φ) v, v⟩
    pub potential_part: f64,
    /// −½ Σ a_γ cosh(..)(v(x) − v(x+γ))²
    pub gradient_part: f64,
    /// Σ of absolute values of all summands on both sides; the round-off scale.
    pub scale: f64,
}

impl ConjugatedForm {
    pub fn gap(&self) -> f64 {
        (self.lhs - self.rhs).abs()
    }
}

fn ratio(op: &OperatorMatrix, phi: &[f64], i: usize, j: usize) -> Result<f64> {
    let r = (phi[i] - phi[j]) / op.domain().epsilon();
    if !(r.abs() <= EXP_CLAMP) {
        return Err(Error::Overflow {
            value: r.abs(),
            clamp: EXP_CLAMP,
        });
    }
    Ok(r)
}

/// V^φ at every site.
pub fn v_phi(op: &OperatorMatrix, phi: &[f64]) -> Result<Vec<f64>> {
    check_len(op, phi)?;
    (0..op.len())
        .map(|i| {
            op.kinetic_row(i)
                .map(|(j, a)| Ok(a * ratio(op, phi, i, j)?.cosh()))
                .sum::<Result<f64>>()
        })
        .collect()
}

fn check_len(op: &OperatorMatrix, v: &[f64]) -> Result<()> {
    if v.len() != op.len() {
        return Err(Error::DimensionMismatch {
            expected: op.len(),
            got: v.len(),
        });
    }
    Ok(())
}

/// Both sides of the conjugation identity for real φ and v on Σ.
pub fn conjugated_form(op: &OperatorMatrix, phi: &[f64], v: &[f64]) -> Result<ConjugatedForm> {
    check_len(op, phi)?;
    check_len(op, v)?;
    let vp = v_phi(op, phi)?;
    let pot = op.potential();
    let mut lhs = 0.0;
    let mut grad = 0.0;
    let mut scale = 0.0;
    for i in 0..op.len() {
        let mut row = pot[i] * v[i];
        let mut row_abs = (pot[i] * v[i]).abs();
        for (j, a) in op.kinetic_row(i) {
            let r = ratio(op, phi, i, j)?;
            let t = a * r.exp() * v[j];
            row += t;
            row_abs += t.abs();
            let c = a * r.cosh() * (v[i] - v[j]).powi(2);
            grad += c;
            scale += c.abs();
        }
        lhs += row * v[i];
        scale += row_abs * v[i].abs();
    }
    let grad = -0.5 * grad;
    let potential_part: f64 = (0..op.len()).map(|i| (pot[i] + vp[i]) * v[i] * v[i]).sum();
    scale += (0..op.len())
        .map(|i| (pot[i].abs() + vp[i].abs()) * v[i] * v[i])
        .sum::<f64>();
    Ok(ConjugatedForm {
        lhs,
        rhs: potential_part + grad,
        v_phi: vp,
        potential_part,
        gradient_part: grad,
        scale,
    })
}

/// (e^{φ/ε}(H − E)e^{−φ/ε} v)(x) at every site.
pub fn conjugated_apply(op: &OperatorMatrix, phi: &[f64], e: f64, v: &[f64]) -> Result<Vec<f64>> {
    check_len(op, phi)?;
    check_len(op, v)?;
    let pot = op.potential();
    (0..op.len())
        .map(|i| {
            let mut s = (pot[i] - e) * v[i];
            for (j, a) in op.kinetic_row(i) {
                s += a * ratio(op, phi, i, j)?.exp() * v[j];
            }
            Ok(s)
        })
        .collect()
}

/// t₀^Σ(x, ξ) = Σ_{x+γ ∈ Σ} ã_η(x) cos(η·ξ), γ = εη, at lattice site `site`.
pub fn t0_sigma(stencil: &StencilField, domain: &LatticeDomain, site: usize, xi: &[f64]) -> f64 {
    let x = domain.point(site);
    (0..stencil.len())
        .filter(|&j| domain.neighbor(site, stencil.offset(j)).is_some())
        .map(|j| stencil.a0(j, &x) * dot(stencil.offset_f(j), xi).cos())
        .sum()
}

/// t₀^Σ at imaginary argument: Σ_{x+γ ∈ Σ} ã_η(x) cosh(η·ξ).
pub fn t0_sigma_imag(
    stencil: &StencilField,
    domain: &LatticeDomain,
    site: usize,
    xi: &[f64],
) -> f64 {
    let x = domain.point(site);
    (0..stencil.len())
        .filter(|&j| domain.neighbor(site, stencil.offset(j)).is_some())
        .map(|j| stencil.a0(j, &x) * dot(stencil.offset_f(j), xi).cosh())
        .sum()
}
