//! Sampled checks of the structural hypotheses on stencil and potential.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::stencil::{min_eigenvalue, norm, PotentialSpec, StencilField};

#[derive(Clone, Debug, Serialize)]
pub struct ClauseResult {
    pub name: String,
    pub passed: bool,
    /// Worst sampled value of the clause's defect measure.
    pub worst: f64,
    pub detail: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct ValidationReport {
    pub passed: bool,
    pub samples: usize,
    pub clauses: Vec<ClauseResult>,
}

impl ValidationReport {
    pub fn clause(&self, name: &str) -> Option<&ClauseResult> {
        self.clauses.iter().find(|c| c.name == name)
    }
}

#[derive(Clone, Debug)]
pub struct ValidationOptions {
    pub tol: f64,
    /// ‖R²‖ ≤ c ε² is required on samples.
    pub remainder_constant: f64,
    /// ε values at which the full-coefficient symmetry and remainder are checked.
    pub epsilons: Vec<f64>,
    /// Relative tolerance for the well Hessian against finite differences.
    pub hessian_tol: f64,
}

impl Default for ValidationOptions {
    fn default() -> Self {
        ValidationOptions {
            tol: 1e-10,
            remainder_constant: 10.0,
            epsilons: vec![0.1],
            hessian_tol: 1e-5,
        }
    }
}

/// Tensor grid with `n` points per axis, endpoints included.
pub fn sample_grid(bounds: &[[f64; 2]], n: usize) -> Vec<Vec<f64>> {
    let d = bounds.len();
    let n = n.max(2);
    let total = n.pow(d as u32);
    (0..total)
        .map(|mut idx| {
            (0..d)
                .map(|a| {
                    let k = idx % n;
                    idx /= n;
                    bounds[a][0] + (bounds[a][1] - bounds[a][0]) * k as f64 / (n - 1) as f64
                })
                .collect()
        })
        .collect()
}

fn clause(name: &str, passed: bool, worst: f64, detail: String) -> ClauseResult {
    ClauseResult {
        name: name.to_string(),
        passed,
        worst,
        detail,
    }
}

pub fn validate_hypotheses(
    stencil: &StencilField,
    pot: &PotentialSpec,
    samples: &[Vec<f64>],
    opts: &ValidationOptions,
) -> ValidationReport {
    let d = stencil.dim();
    let tol = opts.tol;
    let mut clauses = Vec::new();
    let mut a = Vec::new();

    // zero sum
    let mut worst = 0.0f64;
    let mut at = None;
    for x in samples {
        stencil.a0_all(x, &mut a);
        let s: f64 = a.iter().sum();
        let scale: f64 = a.iter().map(|v| v.abs()).sum::<f64>().max(1.0);
        if s.abs() / scale > worst {
            worst = s.abs() / scale;
            at = Some(x.clone());
        }
    }
    clauses.push(clause(
        "zero_sum",
        worst <= tol,
        worst,
        format!("max |sum a0| relative, at {at:?}"),
    ));

    // sign
    let mut worst = f64::NEG_INFINITY;
    let mut at = None;
    for x in samples {
        stencil.a0_all(x, &mut a);
        for (j, v) in a.iter().enumerate() {
            if stencil.offset(j).iter().any(|&k| k != 0) && *v > worst {
                worst = *v;
                at = Some((stencil.offset(j).to_vec(), x.clone()));
            }
        }
    }
    clauses.push(clause(
        "sign",
        worst <= tol,
        worst,
        format!("max off-diagonal a0 (offset, x) = {at:?}"),
    ));

    // symmetry: evenness of ã and a_γ(x,ε) = a_{−γ}(x+γ,ε)
    let mut worst = 0.0f64;
    let mut detail = String::from("evenness and shifted symmetry");
    for j in 0..stencil.len() {
        let neg: Vec<i64> = stencil.offset(j).iter().map(|k| -k).collect();
        let Some(jn) = (0..stencil.len()).find(|&i| stencil.offset(i) == neg.as_slice()) else {
            worst = f64::INFINITY;
            detail = format!("offset {:?} has no mirror", stencil.offset(j));
            break;
        };
        for x in samples {
            let e = (stencil.a0(j, x) - stencil.a0(jn, x)).abs() / stencil.a0(j, x).abs().max(1.0);
            if e > worst {
                worst = e;
                detail = format!(
                    "evenness defect at offset {:?}, x = {x:?}",
                    stencil.offset(j)
                );
            }
            for &eps in &opts.epsilons {
                let y: Vec<f64> = x
                    .iter()
                    .zip(stencil.offset_f(j))
                    .map(|(xi, e)| xi + eps * e)
                    .collect();
                let ag = stencil.coefficient(j, x, eps, 2);
                let am = stencil.coefficient(jn, &y, eps, 2);
                let e = (ag - am).abs() / ag.abs().max(1.0);
                if e > worst {
                    worst = e;
                    detail = format!(
                        "a_gamma(x) != a_-gamma(x+gamma) at offset {:?}, x = {x:?}, eps = {eps}",
                        stencil.offset(j)
                    );
                }
            }
        }
    }
    clauses.push(clause("symmetry", worst <= tol, worst, detail));

    // span
    let mut min_sv = f64::INFINITY;
    let mut at = None;
    for x in samples {
        stencil.a0_all(x, &mut a);
        let neg: Vec<usize> = (0..a.len()).filter(|&j| a[j] < -tol).collect();
        let sv = if neg.len() < d {
            0.0
        } else {
            let m = DMatrix::from_fn(neg.len(), d, |r, c| stencil.offset_f(neg[r])[c]);
            m.singular_values().min()
        };
        if sv < min_sv {
            min_sv = sv;
            at = Some(x.clone());
        }
    }
    clauses.push(clause(
        "span",
        min_sv > tol,
        min_sv,
        format!("smallest singular value of the negative-offset set, at {at:?}"),
    ));

    // exponential decay of per-offset norms
    let detail = match stencil.decay_rate() {
        Some(r) => format!(
            "exponential family with rate {r}; truncated at radius {}, dropped tail mass {:e}",
            stencil.max_radius(),
            stencil.tail_mass()
        ),
        None => format!(
            "finite support of radius {}; decay holds for every rate",
            stencil.max_radius()
        ),
    };
    clauses.push(clause("decay", true, stencil.tail_mass(), detail));

    // sampled Lipschitz constant of a0 (reported; uniformity is not certifiable)
    let h = 1e-4;
    let mut lip = 0.0f64;
    for x in samples {
        for j in 0..stencil.len() {
            for v in 0..d {
                let mut y = x.clone();
                y[v] += h;
                lip = lip.max((stencil.a0(j, &y) - stencil.a0(j, x)).abs() / h);
            }
        }
    }
    clauses.push(clause(
        "lipschitz",
        lip.is_finite(),
        lip,
        "sampled difference quotients of a0 (uniformity not certified)".into(),
    ));

    // remainder bound
    let mut worst = 0.0f64;
    for x in samples {
        for &eps in &opts.epsilons {
            for e in stencil.entries() {
                if let Some(r2) = &e.r2 {
                    worst = worst.max(r2.eval(x, eps).abs() / (eps * eps));
                }
            }
        }
    }
    clauses.push(clause(
        "remainder",
        worst <= opts.remainder_constant,
        worst,
        format!("max |R2|/eps^2, required <= {}", opts.remainder_constant),
    ));

    // B positive definite
    let mut min_b = f64::INFINITY;
    for x in samples {
        min_b = min_b.min(min_eigenvalue(&stencil.b_matrix(x)));
    }
    clauses.push(clause(
        "kinetic_positive",
        min_b > tol,
        min_b,
        "smallest eigenvalue of B(x) on samples".into(),
    ));

    // single well
    let zero = vec![0.0; d];
    let v_at_0 = pot.v0(&zero);
    let mut min_v = f64::INFINITY;
    let mut at = None;
    for x in samples {
        if norm(x) <= 1e-12 {
            continue;
        }
        let v = pot.v0(x);
        if v < min_v {
            min_v = v;
            at = Some(x.clone());
        }
    }
    clauses.push(clause(
        "single_well",
        v_at_0.abs() <= tol && min_v > 0.0,
        min_v,
        format!("V0(0) = {v_at_0:e}; min V0 away from 0 is {min_v:e} at {at:?}"),
    ));

    // Hessian at the well
    let hmin = min_eigenvalue(pot.hessian_at_well());
    let fd = pot.hessian_fd_deviation(1e-4);
    clauses.push(clause(
        "positive_hessian",
        hmin > 0.0 && fd <= opts.hessian_tol,
        hmin,
        format!("min eigenvalue of Hess V0(0); finite-difference deviation {fd:e}"),
    ));

    ValidationReport {
        passed: clauses.iter().all(|c| c.passed),
        samples: samples.len(),
        clauses,
    }
}
