//! The regularized weight Φ, the splitting F = F₊ + F₋ and the weighted
//! a-priori inequality.

use serde::Serialize;

use crate::agmon::DistanceField;
use crate::error::{Error, Result};
use crate::lattice::LatticeDomain;
use crate::operator::OperatorMatrix;
use crate::quadrature::composite_gauss;
use crate::spectrum::conjugation::{conjugated_apply, conjugated_form, EXP_CLAMP};

/// Smooth cutoff with χ = 0 on r ≤ ½, χ = 1 on r ≥ 1.
///
/// χ′(r) = 2 b(2r − 1)/(1 − w) where b is a flat-topped bump built from the
/// C^∞ smoothstep ψ(t) = e^{−1/t}/(e^{−1/t} + e^{−1/(1−t)}) with ramps of
/// width w. Then 0 ≤ χ′ ≤ 2/(1 − w), which is below 2/log 2 for w < 1 − log 2.
#[derive(Clone, Copy, Debug)]
pub struct Cutoff {
    pub ramp: f64,
}

impl Default for Cutoff {
    fn default() -> Self {
        Cutoff { ramp: 0.25 }
    }
}

fn smoothstep(t: f64) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    if t >= 1.0 {
        return 1.0;
    }
    let a = (-1.0 / t).exp();
    let b = (-1.0 / (1.0 - t)).exp();
    a / (a + b)
}

/// ∫₀ᵗ ψ for t ∈ [0, 1].
fn smoothstep_integral(t: f64) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    composite_gauss(|s| Ok(smoothstep(s)), 0.0, t.min(1.0), 6, 12).expect("finite integrand")
        + (t - 1.0).max(0.0)
}

impl Cutoff {
    pub fn new(ramp: f64) -> Result<Self> {
        if !(ramp > 0.0 && ramp < 1.0 - std::f64::consts::LN_2) {
            return Err(Error::InvalidInput(format!(
                "cutoff ramp {ramp} outside (0, 1 - log 2)"
            )));
        }
        Ok(Cutoff { ramp })
    }

    pub fn max_slope(&self) -> f64 {
        2.0 / (1.0 - self.ramp)
    }

    fn bump(&self, s: f64) -> f64 {
        smoothstep(s / self.ramp) * smoothstep((1.0 - s) / self.ramp)
    }

    pub fn chi(&self, r: f64) -> f64 {
        let s = 2.0 * r - 1.0;
        let w = self.ramp;
        let m = 1.0 - w;
        if s <= 0.0 {
            0.0
        } else if s >= 1.0 {
            1.0
        } else if s <= w {
            w * smoothstep_integral(s / w) / m
        } else if s <= 1.0 - w {
            (0.5 * w + (s - w)) / m
        } else {
            1.0 - w * smoothstep_integral((1.0 - s) / w) / m
        }
    }

    pub fn chi_prime(&self, r: f64) -> f64 {
        let s = 2.0 * r - 1.0;
        if s <= 0.0 || s >= 1.0 {
            return 0.0;
        }
        2.0 * self.bump(s) / (1.0 - self.ramp)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct AgmonWeight {
    pub b_exponent: f64,
    pub epsilon: f64,
    #[serde(skip)]
    pub cutoff_ramp: f64,
    pub d: Vec<f64>,
    pub g: Vec<f64>,
    pub phi: Vec<f64>,
    /// Realized C′ of e^{d/ε}(1+d/ε)^{−B/2}/C′ ≤ e^{Φ/ε} ≤ C′ e^{d/ε}(1+d/ε)^{−B/2}.
    pub sandwich: f64,
    /// max |second difference of Φ| / ε² over axis and mixed directions.
    pub second_difference: f64,
}

/// Samples `field` at the sites of `domain` (multilinear between field nodes).
pub fn sample_field(field: &DistanceField, domain: &LatticeDomain) -> Result<Vec<f64>> {
    if field.domain().dim() != domain.dim() {
        return Err(Error::DimensionMismatch {
            expected: domain.dim(),
            got: field.domain().dim(),
        });
    }
    (0..domain.len())
        .map(|i| {
            let x = domain.point(i);
            if !field.domain().contains_point(&x) {
                return Err(Error::InvalidInput(format!(
                    "distance field does not cover site {x:?}"
                )));
            }
            let v = field.interpolate(&x);
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::InvalidInput(format!(
                    "distance field gap at {x:?}: {v}"
                )));
            }
            Ok(v)
        })
        .collect()
}

pub fn build_weight(
    field: &DistanceField,
    domain: &LatticeDomain,
    epsilon: f64,
    b: f64,
) -> Result<AgmonWeight> {
    if (domain.epsilon() - epsilon).abs() > 1e-12 * epsilon {
        return Err(Error::InvalidInput(format!(
            "epsilon {epsilon} does not match the lattice spacing {}",
            domain.epsilon()
        )));
    }
    let d = sample_field(field, domain)?;
    weight_from_values(domain, d, b, Cutoff::default())
}

/// Φ = d − (Bε/2) log(B/2) − g (Bε/2) log(2d/(Bε)), g = χ(d/(Bε)).
pub fn weight_from_values(
    domain: &LatticeDomain,
    d: Vec<f64>,
    b: f64,
    cutoff: Cutoff,
) -> Result<AgmonWeight> {
    if !(b > 0.0) {
        return Err(Error::InvalidInput(format!("B = {b} must be positive")));
    }
    if d.len() != domain.len() {
        return Err(Error::DimensionMismatch {
            expected: domain.len(),
            got: d.len(),
        });
    }
    let eps = domain.epsilon();
    let be = b * eps;
    let mut g = Vec::with_capacity(d.len());
    let mut phi = Vec::with_capacity(d.len());
    let mut worst: f64 = 0.0;
    for &di in &d {
        if !(di >= 0.0) {
            return Err(Error::InvalidInput(format!(
                "negative or missing distance {di}"
            )));
        }
        let gi = cutoff.chi(di / be);
        let log_term = if gi > 0.0 {
            gi * 0.5 * be * (2.0 * di / be).ln()
        } else {
            0.0
        };
        let p = di - 0.5 * be * (0.5 * b).ln() - log_term;
        // log of e^{Φ/ε} / (e^{d/ε}(1 + d/ε)^{−B/2})
        let r = (p - di) / eps + 0.5 * b * (di / eps).ln_1p();
        worst = worst.max(r.abs());
        g.push(gi);
        phi.push(p);
    }
    let second_difference = second_differences(domain, &phi);
    Ok(AgmonWeight {
        b_exponent: b,
        epsilon: eps,
        cutoff_ramp: cutoff.ramp,
        d,
        g,
        phi,
        sandwich: worst.exp(),
        second_difference,
    })
}

/// max |Δ²f|/ε² over axis and mixed forward differences.
pub fn second_differences(domain: &LatticeDomain, f: &[f64]) -> f64 {
    let dim = domain.dim();
    let h2 = domain.epsilon().powi(2);
    let mut worst: f64 = 0.0;
    for i in 0..domain.len() {
        for a in 0..dim {
            let mut e = vec![0i64; dim];
            e[a] = 1;
            let m: Vec<i64> = e.iter().map(|x| -x).collect();
            if let (Some(p), Some(q)) = (domain.neighbor(i, &e), domain.neighbor(i, &m)) {
                worst = worst.max((f[p] - 2.0 * f[i] + f[q]).abs() / h2);
            }
            for bb in a + 1..dim {
                let mut eb = vec![0i64; dim];
                eb[bb] = 1;
                let mut eab = e.clone();
                eab[bb] = 1;
                if let (Some(pa), Some(pb), Some(pab)) = (
                    domain.neighbor(i, &e),
                    domain.neighbor(i, &eb),
                    domain.neighbor(i, &eab),
                ) {
                    worst = worst.max((f[pab] - f[pa] - f[pb] + f[i]).abs() / h2);
                }
            }
        }
    }
    worst
}

#[derive(Clone, Debug, Serialize)]
pub struct FSplit {
    pub f_plus: Vec<f64>,
    pub f_minus: Vec<f64>,
    /// max |F₊² − F₋² − (V̂ + V^Φ − E)|
    pub identity_gap: f64,
    /// min (F₊ + F₋)/√ε
    pub min_f_over_sqrt_eps: f64,
    /// Sites of Ω₋ = {V̂ + V^Φ − E < 0} with d ≥ Bε.
    pub omega_minus_outside: Vec<usize>,
    pub omega_minus_size: usize,
}

impl FSplit {
    pub fn omega_minus_contained(&self) -> bool {
        self.omega_minus_outside.is_empty()
    }

    pub fn f(&self) -> Vec<f64> {
        self.f_plus
            .iter()
            .zip(&self.f_minus)
            .map(|(a, b)| a + b)
            .collect()
    }
}

/// F₊ = √(ε·1{d<Bε} + (V̂+V^Φ−E)·1_{Ω₊}), F₋ = √(ε·1{d<Bε} + (E−V̂−V^Φ)·1_{Ω₋}).
pub fn split_f(
    pot: &[f64],
    vphi: &[f64],
    e: f64,
    epsilon: f64,
    b: f64,
    d: &[f64],
) -> Result<FSplit> {
    let n = pot.len();
    if vphi.len() != n || d.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: vphi.len().min(d.len()),
        });
    }
    let mut f_plus = Vec::with_capacity(n);
    let mut f_minus = Vec::with_capacity(n);
    let mut gap: f64 = 0.0;
    let mut min_f = f64::INFINITY;
    let mut outside = Vec::new();
    let mut size = 0;
    for i in 0..n {
        let w = pot[i] + vphi[i] - e;
        let near = d[i] < b * epsilon;
        let base = if near { epsilon } else { 0.0 };
        let minus = w < 0.0;
        if minus {
            size += 1;
            if !near {
                outside.push(i);
            }
        }
        let fp = (base + if minus { 0.0 } else { w }).sqrt();
        let fm = (base + if minus { -w } else { 0.0 }).sqrt();
        gap = gap.max((fp * fp - fm * fm - w).abs());
        min_f = min_f.min((fp + fm) / epsilon.sqrt());
        f_plus.push(fp);
        f_minus.push(fm);
    }
    Ok(FSplit {
        f_plus,
        f_minus,
        identity_gap: gap,
        min_f_over_sqrt_eps: min_f,
        omega_minus_outside: outside,
        omega_minus_size: size,
    })
}

/// Terms of ‖Fv‖² ≤ 4‖F⁻¹ e^{Φ/ε}(H−E)e^{−Φ/ε}v‖² + 8‖F₋v‖² + Cε‖v‖².
#[derive(Clone, Debug, Serialize)]
pub struct WeightedBound {
    pub f_norm: f64,
    pub resolvent_term: f64,
    pub minus_term: f64,
    pub v_norm: f64,
    /// Smallest C ≥ 0 making the inequality hold.
    pub realized_c: f64,
    /// Smallest C with −½Σ a_γ cosh(..)(v(x) − v(x+γ))² ≥ −Cε‖v‖².
    pub form_c: f64,
}

pub fn weighted_bound(
    op: &OperatorMatrix,
    phi: &[f64],
    e: f64,
    split: &FSplit,
    v: &[f64],
) -> Result<WeightedBound> {
    let eps = op.domain().epsilon();
    let f = split.f();
    if f.iter().any(|x| !(*x > 0.0)) {
        return Err(Error::InvalidInput("F vanishes at some site".into()));
    }
    let cv = conjugated_apply(op, phi, e, v)?;
    let f_norm: f64 = f.iter().zip(v).map(|(a, b)| (a * b).powi(2)).sum();
    let resolvent_term = 4.0 * cv.iter().zip(&f).map(|(a, b)| (a / b).powi(2)).sum::<f64>();
    let minus_term = 8.0
        * split
            .f_minus
            .iter()
            .zip(v)
            .map(|(a, b)| (a * b).powi(2))
            .sum::<f64>();
    let v_norm: f64 = v.iter().map(|x| x * x).sum();
    let realized_c = ((f_norm - resolvent_term - minus_term) / (eps * v_norm)).max(0.0);
    let form = conjugated_form(op, phi, v)?;
    let form_c = (-form.gradient_part / (eps * v_norm)).max(0.0);
    Ok(WeightedBound {
        f_norm,
        resolvent_term,
        minus_term,
        v_norm,
        realized_c,
        form_c,
    })
}

/// v = e^{Φ/ε} u.
pub fn weighted_vector(phi: &[f64], epsilon: f64, u: &[f64]) -> Result<Vec<f64>> {
    phi.iter()
        .zip(u)
        .map(|(p, x)| {
            let r = p / epsilon;
            if r > EXP_CLAMP {
                return Err(Error::Overflow {
                    value: r,
                    clamp: EXP_CLAMP,
                });
            }
            Ok(r.exp() * x)
        })
        .collect()
}
