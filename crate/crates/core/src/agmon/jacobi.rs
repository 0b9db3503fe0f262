//! First-variation test: shot trajectories are critical points of the Finsler
//! length among endpoint-fixed curves.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::curve::{Curve, Path};
use crate::error::{Error, Result};
use crate::finsler::FinslerEvaluator;
use crate::quadrature::gauss_legendre;

#[derive(Clone, Debug, Serialize)]
pub struct JacobiTrial {
    pub a: f64,
    pub b: f64,
    pub ratio: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct JacobiReport {
    pub length: f64,
    pub delta0: f64,
    /// max over trials of |a| / (|b|·δ₀).
    pub max_ratio: f64,
    pub threshold: f64,
    pub trials: Vec<JacobiTrial>,
    pub passed: bool,
}

#[derive(Clone, Debug)]
pub struct JacobiOptions {
    pub perturbations: usize,
    pub delta0: f64,
    /// Number of sine modes in each perturbation field.
    pub modes: usize,
    pub gauss_order: usize,
    pub threshold: f64,
    pub seed: u64,
    pub bounds: Option<Vec<[f64; 2]>>,
}

impl Default for JacobiOptions {
    fn default() -> Self {
        JacobiOptions {
            perturbations: 20,
            delta0: 1e-4,
            modes: 3,
            gauss_order: 8,
            threshold: 1e-3,
            seed: 7,
            bounds: None,
        }
    }
}

/// η(t) = Σ_k c_k sin(kπ(t−a)/(b−a)), scaled to max |η| ≈ 1.
struct Perturbation {
    a: f64,
    b: f64,
    coef: Vec<Vec<f64>>,
}

impl Perturbation {
    fn random(rng: &mut ChaCha8Rng, a: f64, b: f64, d: usize, modes: usize) -> Self {
        let mut coef: Vec<Vec<f64>> = (0..modes)
            .map(|k| {
                (0..d)
                    .map(|_| rng.gen_range(-1.0..1.0) / (k + 1) as f64)
                    .collect()
            })
            .collect();
        let mut p = Perturbation {
            a,
            b,
            coef: coef.clone(),
        };
        let peak = (0..=200)
            .map(|i| crate::stencil::norm(&p.value(a + (b - a) * i as f64 / 200.0)))
            .fold(0.0, f64::max);
        if peak > 0.0 {
            coef.iter_mut().flatten().for_each(|c| *c /= peak);
        }
        p.coef = coef;
        p
    }

    fn value(&self, t: f64) -> Vec<f64> {
        let d = self.coef[0].len();
        let u = std::f64::consts::PI * (t - self.a) / (self.b - self.a);
        let mut out = vec![0.0; d];
        for (k, c) in self.coef.iter().enumerate() {
            let s = ((k + 1) as f64 * u).sin();
            for j in 0..d {
                out[j] += c[j] * s;
            }
        }
        out
    }

    fn derivative(&self, t: f64) -> Vec<f64> {
        let d = self.coef[0].len();
        let w = std::f64::consts::PI / (self.b - self.a);
        let u = w * (t - self.a);
        let mut out = vec![0.0; d];
        for (k, c) in self.coef.iter().enumerate() {
            let m = (k + 1) as f64;
            let s = m * w * (m * u).cos();
            for j in 0..d {
                out[j] += c[j] * s;
            }
        }
        out
    }
}

/// Length of γ + δη by Gauss rules aligned with the curve's sample intervals.
fn perturbed_length(
    ev: &FinslerEvaluator,
    c: &Curve,
    eta: Option<&Perturbation>,
    delta: f64,
    nodes: &(Vec<f64>, Vec<f64>),
    bounds: Option<&[[f64; 2]]>,
) -> Result<f64> {
    let t = c.times();
    let mut total = 0.0;
    for w in t.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        let half = 0.5 * (hi - lo);
        let mut s = 0.0;
        for (x, wt) in nodes.0.iter().zip(&nodes.1) {
            let tt = lo + half * (x + 1.0);
            let mut p = c.point(tt);
            let mut v = c.velocity(tt);
            if let Some(e) = eta {
                for (pi, ei) in p.iter_mut().zip(e.value(tt)) {
                    *pi += delta * ei;
                }
                for (vi, ei) in v.iter_mut().zip(e.derivative(tt)) {
                    *vi += delta * ei;
                }
            }
            if let Some(b) = bounds {
                if p.iter().zip(b).any(|(x, r)| *x < r[0] || *x > r[1]) {
                    return Err(Error::InvalidInput(format!(
                        "perturbed curve leaves the domain at {p:?}"
                    )));
                }
            }
            s += wt * ev.ell(&p, &v)?;
        }
        total += half * s;
    }
    Ok(total)
}

/// Fits s(δ) − s(0) = aδ + bδ² on δ ∈ {±δ₀, ±δ₀/2} for random endpoint-fixed perturbations.
pub fn verify_jacobi(
    ev: &FinslerEvaluator,
    curve: &Curve,
    opts: &JacobiOptions,
) -> Result<JacobiReport> {
    let nodes = gauss_legendre(opts.gauss_order);
    let bounds = opts.bounds.as_deref();
    let s0 = perturbed_length(ev, curve, None, 0.0, &nodes, bounds)?;
    let (a0, b0) = curve.interval();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let d0 = opts.delta0;
    let deltas = [-d0, -0.5 * d0, 0.5 * d0, d0];
    let mut trials = Vec::with_capacity(opts.perturbations);
    for _ in 0..opts.perturbations {
        let eta = Perturbation::random(&mut rng, a0, b0, curve.dim(), opts.modes);
        let mut ys = [0.0; 4];
        for (k, &dl) in deltas.iter().enumerate() {
            ys[k] = perturbed_length(ev, curve, Some(&eta), dl, &nodes, bounds)? - s0;
        }
        // least squares for (a, b) on the symmetric design
        let s2: f64 = deltas.iter().map(|x| x * x).sum();
        let s4: f64 = deltas.iter().map(|x| x.powi(4)).sum();
        let a = deltas.iter().zip(&ys).map(|(x, y)| x * y).sum::<f64>() / s2;
        let b = deltas.iter().zip(&ys).map(|(x, y)| x * x * y).sum::<f64>() / s4;
        let ratio = a.abs() / (b.abs() * d0);
        trials.push(JacobiTrial { a, b, ratio });
    }
    let max_ratio = trials.iter().map(|t| t.ratio).fold(0.0, f64::max);
    Ok(JacobiReport {
        length: s0,
        delta0: d0,
        max_ratio,
        threshold: opts.threshold,
        passed: max_ratio <= opts.threshold,
        trials,
    })
}
