//! Lowest eigenpairs of a Dirichlet operator.

use nalgebra::{DMatrix, SymmetricTridiagonal};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::operator::OperatorMatrix;

#[derive(Clone, Debug)]
pub struct EigenOptions {
    pub k: usize,
    /// Residual target relative to ‖H‖∞.
    pub tol: f64,
    pub dense_threshold: usize,
    pub max_krylov: usize,
    pub seed: u64,
}

impl Default for EigenOptions {
    fn default() -> Self {
        EigenOptions {
            k: 4,
            tol: 1e-10,
            dense_threshold: 2000,
            max_krylov: 600,
            seed: 0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Method {
    Dense,
    Lanczos,
}

#[derive(Clone, Debug)]
pub struct Eigenpairs {
    pub values: Vec<f64>,
    /// Unit vectors, first entry of significant size positive.
    pub vectors: Vec<Vec<f64>>,
    /// ‖Hu − Eu‖₂ per pair.
    pub residuals: Vec<f64>,
    pub matrix_norm: f64,
    pub method: Method,
}

impl Eigenpairs {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn fix_sign(v: &mut [f64]) {
    let peak = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if let Some(first) = v.iter().find(|x| x.abs() > 1e-8 * peak) {
        if *first < 0.0 {
            v.iter_mut().for_each(|x| *x = -*x);
        }
    }
}

pub fn residual(op: &OperatorMatrix, e: f64, u: &[f64]) -> Result<f64> {
    let hu = op.apply(u)?;
    Ok(hu
        .iter()
        .zip(u)
        .map(|(a, b)| (a - e * b).powi(2))
        .sum::<f64>()
        .sqrt())
}

/// k smallest eigenpairs; dense below `dense_threshold` unknowns, shift-invert
/// Lanczos with full reorthogonalization above.
pub fn eigensolve_lowest(op: &OperatorMatrix, k: usize, tol: f64) -> Result<Eigenpairs> {
    eigensolve_with(
        op,
        &EigenOptions {
            k,
            tol,
            ..EigenOptions::default()
        },
    )
}

pub fn eigensolve_with(op: &OperatorMatrix, opts: &EigenOptions) -> Result<Eigenpairs> {
    let n = op.len();
    if opts.k == 0 || opts.k > n {
        return Err(Error::InvalidInput(format!(
            "k = {} for {n} unknowns",
            opts.k
        )));
    }
    let (values, vectors, method) = if n <= opts.dense_threshold {
        let (v, u) = dense_lowest(op, opts.k)?;
        (v, u, Method::Dense)
    } else {
        let (v, u) = lanczos_shift_invert(op, opts)?;
        (v, u, Method::Lanczos)
    };
    let matrix_norm = op.norm_inf();
    let mut residuals = Vec::with_capacity(values.len());
    for (e, u) in values.iter().zip(&vectors) {
        residuals.push(residual(op, *e, u)?);
    }
    let worst = residuals.iter().cloned().fold(0.0, f64::max);
    if worst > opts.tol * matrix_norm.max(1e-300) {
        return Err(Error::NoConvergence {
            what: "eigensolver",
            iterations: opts.max_krylov,
            residual: worst,
        });
    }
    Ok(Eigenpairs {
        values,
        vectors,
        residuals,
        matrix_norm,
        method,
    })
}

/// All eigenpairs of a dense symmetric matrix, ascending; eigenvectors are the
/// columns of the returned matrix.
///
/// Householder tridiagonalization (nalgebra) followed by implicit QL with
/// Wilkinson shifts. nalgebra's own QR stage loses accuracy on large
/// operators with clustered spectra.
pub fn symmetric_eigen(a: DMatrix<f64>) -> Result<(Vec<f64>, DMatrix<f64>)> {
    let n = a.nrows();
    if n != a.ncols() {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: a.ncols(),
        });
    }
    if n == 0 {
        return Ok((Vec::new(), a));
    }
    let (mut v, d, off) = SymmetricTridiagonal::new(a).unpack();
    let mut d: Vec<f64> = d.iter().cloned().collect();
    let mut e: Vec<f64> = off.iter().cloned().collect();
    e.push(0.0);
    tql2(&mut d, &mut e, &mut v)?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| d[i].total_cmp(&d[j]));
    let vals = order.iter().map(|&i| d[i]).collect();
    let vecs = DMatrix::from_fn(n, n, |r, c| v[(r, order[c])]);
    Ok((vals, vecs))
}

/// Implicit QL on the tridiagonal (d, e), e[i] coupling i and i+1, e[n−1] = 0;
/// rotations are accumulated into the columns of `v`.
fn tql2(d: &mut [f64], e: &mut [f64], v: &mut DMatrix<f64>) -> Result<()> {
    let n = d.len();
    let eps = f64::EPSILON;
    let mut f = 0.0;
    let mut tst1: f64 = 0.0;
    let mut sweeps = 0usize;
    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n - 1 && e[m].abs() > eps * tst1 {
            m += 1;
        }
        if m > l {
            loop {
                sweeps += 1;
                if sweeps > 30 * n.max(1) || !d[l].is_finite() {
                    return Err(Error::NoConvergence {
                        what: "tridiagonal QL",
                        iterations: sweeps,
                        residual: e[l].abs(),
                    });
                }
                let g = d[l];
                let mut p = (d[l + 1] - g) / (2.0 * e[l]);
                let mut r = p.hypot(1.0);
                if p < 0.0 {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let h = g - d[l];
                for di in d.iter_mut().skip(l + 2) {
                    *di -= h;
                }
                f += h;
                p = d[m];
                let (mut c, mut c2, mut c3) = (1.0, 1.0, 1.0);
                let el1 = e[l + 1];
                let (mut s, mut s2) = (0.0, 0.0);
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    let g = c * e[i];
                    let h = c * p;
                    r = p.hypot(e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);
                    for k in 0..n {
                        let h = v[(k, i + 1)];
                        v[(k, i + 1)] = s * v[(k, i)] + c * h;
                        v[(k, i)] = c * v[(k, i)] - s * h;
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;
                if e[l].abs() <= eps * tst1 {
                    break;
                }
            }
        }
        d[l] += f;
        e[l] = 0.0;
    }
    Ok(())
}

fn dense_lowest(op: &OperatorMatrix, k: usize) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    let (values, vectors) = symmetric_eigen(op.to_dense())?;
    let mut vecs = Vec::with_capacity(k);
    for j in 0..k {
        let mut u: Vec<f64> = vectors.column(j).iter().cloned().collect();
        let s = norm2(&u);
        u.iter_mut().for_each(|x| *x /= s);
        fix_sign(&mut u);
        vecs.push(u);
    }
    Ok((values[..k].to_vec(), vecs))
}

/// Cholesky factor of a symmetric positive definite band matrix.
pub struct BandCholesky {
    n: usize,
    bw: usize,
    /// row i holds L[i][i-bw ..= i]
    l: Vec<f64>,
}

impl BandCholesky {
    /// Factors H − σI.
    pub fn factor(op: &OperatorMatrix, sigma: f64) -> Result<Self> {
        let n = op.len();
        let bw = op.bandwidth();
        let w = bw + 1;
        let mut l = vec![0.0; n * w];
        for i in 0..n {
            for (j, a) in op.kinetic_row(i) {
                if j <= i {
                    l[i * w + (j + bw - i)] += a;
                }
            }
            l[i * w + bw] += op.potential()[i] - sigma;
        }
        for i in 0..n {
            let j0 = i.saturating_sub(bw);
            for j in j0..=i {
                let mut s = l[i * w + (j + bw - i)];
                let k0 = j0.max(j.saturating_sub(bw));
                for k in k0..j {
                    s -= l[i * w + (k + bw - i)] * l[j * w + (k + bw - j)];
                }
                if j == i {
                    if !(s > 0.0) {
                        return Err(Error::InvalidInput(format!(
                            "H - {sigma} is not positive definite (pivot {s:e} at row {i})"
                        )));
                    }
                    l[i * w + bw] = s.sqrt();
                } else {
                    l[i * w + (j + bw - i)] = s / l[j * w + bw];
                }
            }
        }
        Ok(BandCholesky { n, bw, l })
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let (n, bw, w) = (self.n, self.bw, self.bw + 1);
        let mut y = b.to_vec();
        for i in 0..n {
            let mut s = y[i];
            for k in i.saturating_sub(bw)..i {
                s -= self.l[i * w + (k + bw - i)] * y[k];
            }
            y[i] = s / self.l[i * w + bw];
        }
        for i in (0..n).rev() {
            let mut s = y[i];
            for k in i + 1..n.min(i + bw + 1) {
                s -= self.l[k * w + (i + bw - k)] * y[k];
            }
            y[i] = s / self.l[i * w + bw];
        }
        y
    }
}

/// Largest eigenvalue by plain Lanczos with full reorthogonalization.
pub fn largest_eigenvalue(op: &OperatorMatrix, tol: f64) -> Result<f64> {
    let n = op.len();
    let norm_h = op.norm_inf().max(1e-300);
    let m_max = n.min(400);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut q: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let s = norm2(&q);
    q.iter_mut().for_each(|x| *x /= s);
    let mut basis = vec![q];
    let mut alpha: Vec<f64> = Vec::new();
    let mut beta: Vec<f64> = Vec::new();
    loop {
        let j = basis.len() - 1;
        let mut w = op.apply(&basis[j])?;
        alpha.push(dot(&w, &basis[j]));
        for _ in 0..2 {
            for v in &basis {
                let c = dot(&w, v);
                w.iter_mut().zip(v).for_each(|(x, y)| *x -= c * y);
            }
        }
        let b = norm2(&w);
        let m = alpha.len();
        let mut t = DMatrix::zeros(m, m);
        for i in 0..m {
            t[(i, i)] = alpha[i];
            if i + 1 < m {
                t[(i, i + 1)] = beta[i];
                t[(i + 1, i)] = beta[i];
            }
        }
        let (theta, y) = symmetric_eigen(t)?;
        let top = m - 1;
        // Ritz residual = β_m |y_m|
        let est = b * y[(m - 1, top)].abs();
        if est <= tol * norm_h || b < 1e-14 * norm_h || m == m_max {
            if est > tol * norm_h && b >= 1e-14 * norm_h {
                return Err(Error::NoConvergence {
                    what: "lanczos (largest)",
                    iterations: m,
                    residual: est,
                });
            }
            return Ok(theta[top]);
        }
        beta.push(b);
        w.iter_mut().for_each(|x| *x /= b);
        basis.push(w);
    }
}

fn lanczos_shift_invert(
    op: &OperatorMatrix,
    opts: &EigenOptions,
) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    let n = op.len();
    let g = op.gershgorin_lower();
    let sigma = g - 1e-2 * g.abs().max(1.0);
    let chol = BandCholesky::factor(op, sigma)?;
    let norm_h = op.norm_inf().max(1e-300);
    let m_max = opts.max_krylov.min(n);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut q: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let s = norm2(&q);
    q.iter_mut().for_each(|x| *x /= s);
    let mut basis: Vec<Vec<f64>> = vec![q];
    let mut alpha: Vec<f64> = Vec::new();
    let mut beta: Vec<f64> = Vec::new();
    let mut best = f64::INFINITY;
    loop {
        let j = basis.len() - 1;
        let mut w = chol.solve(&basis[j]);
        let a = dot(&w, &basis[j]);
        alpha.push(a);
        // two passes of classical Gram-Schmidt against the whole basis
        for _ in 0..2 {
            for v in &basis {
                let c = dot(&w, v);
                w.iter_mut().zip(v).for_each(|(x, y)| *x -= c * y);
            }
        }
        let b = norm2(&w);
        let m = alpha.len();
        let check = m >= opts.k && (m.is_multiple_of(10) || m == m_max || b < 1e-14);
        if check {
            let (vals, vecs) = ritz(&alpha, &beta, &basis, opts.k, op, sigma)?;
            let mut worst: f64 = 0.0;
            for (e, u) in vals.iter().zip(&vecs) {
                worst = worst.max(residual(op, *e, u)?);
            }
            best = best.min(worst);
            if worst <= 0.1 * opts.tol * norm_h || m == m_max || b < 1e-14 {
                if worst > opts.tol * norm_h {
                    return Err(Error::NoConvergence {
                        what: "lanczos",
                        iterations: m,
                        residual: best,
                    });
                }
                return Ok((vals, vecs));
            }
        }
        beta.push(b);
        w.iter_mut().for_each(|x| *x /= b);
        basis.push(w);
    }
}

fn ritz(
    alpha: &[f64],
    beta: &[f64],
    basis: &[Vec<f64>],
    k: usize,
    op: &OperatorMatrix,
    sigma: f64,
) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    let m = alpha.len();
    let mut t = DMatrix::zeros(m, m);
    for i in 0..m {
        t[(i, i)] = alpha[i];
        if i + 1 < m {
            t[(i, i + 1)] = beta[i];
            t[(i + 1, i)] = beta[i];
        }
    }
    let (_, y_all) = symmetric_eigen(t)?;
    // largest θ = 1/(λ − σ) are the lowest λ
    let order: Vec<usize> = (0..m).rev().collect();
    let n = basis[0].len();
    let mut vals = Vec::with_capacity(k);
    let mut vecs = Vec::with_capacity(k);
    for &j in order.iter().take(k) {
        let y = y_all.column(j);
        let mut u = vec![0.0; n];
        for (i, v) in basis.iter().take(m).enumerate() {
            let c = y[i];
            u.iter_mut().zip(v).for_each(|(a, b)| *a += c * b);
        }
        let s = norm2(&u);
        u.iter_mut().for_each(|x| *x /= s);
        fix_sign(&mut u);
        let hu = op.apply(&u)?;
        let e = dot(&hu, &u);
        debug_assert!(e > sigma);
        vals.push(e);
        vecs.push(u);
    }
    let mut idx: Vec<usize> = (0..vals.len()).collect();
    idx.sort_by(|&a, &b| vals[a].total_cmp(&vals[b]));
    Ok((
        idx.iter().map(|&i| vals[i]).collect(),
        idx.iter().map(|&i| vecs[i].clone()).collect(),
    ))
}

#[derive(Clone, Debug, Serialize)]
pub struct GroundState {
    pub energy: f64,
    pub vector: Vec<f64>,
    pub residual: f64,
    pub iterations: usize,
    /// True when the vector came from the positivity-preserving inverse iteration.
    pub tail_refined: bool,
}

/// Re-solves the ground state by inverse iteration on H − σ, σ = E₀ − ¼(E₁ − E₀).
///
/// For operators with non-positive off-diagonal entries H − σ is a
/// non-singular M-matrix; its band Cholesky factor keeps the sign pattern, so
/// the triangular solves never cancel and every entry of the iterate carries
/// relative accuracy even where it is e^{−d⁰/ε} small.
pub fn refine_ground_state(op: &OperatorMatrix, pairs: &Eigenpairs) -> Result<GroundState> {
    let e0 = pairs.values[0];
    let fallback = || -> Result<GroundState> {
        Ok(GroundState {
            energy: e0,
            vector: pairs.vectors[0].clone(),
            residual: pairs.residuals[0],
            iterations: 0,
            tail_refined: false,
        })
    };
    if pairs.len() < 2 || !op.has_nonpositive_offdiagonal() {
        return fallback();
    }
    let gap = pairs.values[1] - e0;
    if !(gap > 0.0) {
        return fallback();
    }
    let sigma = e0 - 0.25 * gap;
    let chol = BandCholesky::factor(op, sigma)?;
    let n = op.len();
    let mut x = vec![1.0 / (n as f64).sqrt(); n];
    let mut iterations = 0;
    for it in 1..=400 {
        let mut y = chol.solve(&x);
        let s = norm2(&y);
        y.iter_mut().for_each(|v| *v /= s);
        let change = x
            .iter()
            .zip(&y)
            .filter(|(_, b)| **b > 0.0)
            .map(|(a, b)| ((a - b) / b).abs())
            .fold(0.0, f64::max);
        x = y;
        iterations = it;
        if change < 1e-13 {
            break;
        }
    }
    if x.iter().any(|v| !(*v > 0.0)) {
        return fallback();
    }
    let hx = op.apply(&x)?;
    let energy = dot(&hx, &x);
    let residual = residual(op, energy, &x)?;
    Ok(GroundState {
        energy,
        vector: x,
        residual,
        iterations,
        tail_refined: true,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::LatticeDomain;
    use crate::operator::{assemble_operator, Boundary};
    use crate::stencil::{PotentialSpec, StencilField};

    fn free(n: i64, v: f64) -> OperatorMatrix {
        let dom = LatticeDomain::from_index_box(1.0, vec![1], vec![n]).unwrap();
        let pot = PotentialSpec::new(1, crate::expr::Expr::Const(v), vec![], None).unwrap();
        assemble_operator(
            &dom,
            &StencilField::laplacian(1),
            &pot,
            0,
            Boundary::Dirichlet,
        )
        .unwrap()
    }

    #[test]
    fn three_site_laplacian() {
        let p = eigensolve_lowest(&free(3, 0.0), 3, 1e-12).unwrap();
        let s = 2f64.sqrt();
        for (a, b) in p.values.iter().zip([2.0 - s, 2.0, 2.0 + s]) {
            assert!((a - b).abs() < 1e-14);
        }
        for u in &p.vectors {
            assert!((norm2(u) - 1.0).abs() < 1e-14);
            assert!(u[0] > 0.0);
        }
    }

    #[test]
    fn constant_shift() {
        let a = eigensolve_lowest(&free(7, 0.0), 4, 1e-12).unwrap();
        let b = eigensolve_lowest(&free(7, 3.5), 4, 1e-12).unwrap();
        for (x, y) in a.values.iter().zip(&b.values) {
            assert!((y - x - 3.5).abs() < 1e-13);
        }
    }

    #[test]
    fn dense_solver_on_clustered_spectrum() {
        // the isotropic 2D well has exactly repeated levels
        let dom = LatticeDomain::from_box(0.1, &[[-1.5, 1.5], [-1.5, 1.5]]).unwrap();
        let op = assemble_operator(
            &dom,
            &StencilField::laplacian(2),
            &PotentialSpec::quadratic(&[1.0, 1.0]),
            0,
            Boundary::Dirichlet,
        )
        .unwrap();
        let a = op.to_dense();
        let (vals, v) = symmetric_eigen(a.clone()).unwrap();
        let rec =
            &v * DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vals.clone())) * v.transpose();
        assert!((rec - &a).amax() < 1e-12);
        let orth = v.transpose() * &v - DMatrix::identity(a.nrows(), a.nrows());
        assert!(orth.amax() < 1e-12);
        assert!(vals.windows(2).all(|w| w[0] <= w[1]));
        assert!((vals[1] - vals[2]).abs() < 1e-12);
    }

    proptest::proptest! {
        #[test]
        fn dense_solver_reconstructs(seed in 0u64..200, n in 1usize..40) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let b = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
            let a = &b + b.transpose();
            let (vals, v) = symmetric_eigen(a.clone()).unwrap();
            let rec = &v * DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vals)) * v.transpose();
            proptest::prop_assert!((rec - &a).amax() < 1e-12 * (1.0 + a.amax()) * n as f64);
        }
    }

    #[test]
    fn largest_matches_dense() {
        let dom = LatticeDomain::from_box(0.1, &[[-1.0, 1.0], [-1.0, 1.0]]).unwrap();
        let op = assemble_operator(
            &dom,
            &StencilField::laplacian(2),
            &PotentialSpec::quadratic(&[1.0, 1.0]),
            0,
            Boundary::Dirichlet,
        )
        .unwrap();
        let (vals, _) = symmetric_eigen(op.to_dense()).unwrap();
        let top = vals[vals.len() - 1];
        let lz = largest_eigenvalue(&op, 1e-10).unwrap();
        assert!((lz - top).abs() < 1e-8 * top, "{lz} vs {top}");
    }

    #[test]
    fn lanczos_matches_dense() {
        let dom = LatticeDomain::from_box(0.1, &[[-1.5, 1.5], [-1.0, 1.0]]).unwrap();
        let op = assemble_operator(
            &dom,
            &StencilField::laplacian(2),
            &PotentialSpec::quadratic(&[1.0, 2.0]),
            0,
            Boundary::Dirichlet,
        )
        .unwrap();
        let dense = eigensolve_with(
            &op,
            &EigenOptions {
                k: 5,
                ..EigenOptions::default()
            },
        )
        .unwrap();
        let lz = eigensolve_with(
            &op,
            &EigenOptions {
                k: 5,
                dense_threshold: 10,
                ..EigenOptions::default()
            },
        )
        .unwrap();
        assert_eq!(lz.method, Method::Lanczos);
        for (a, b) in dense.values.iter().zip(&lz.values) {
            assert!((a - b).abs() < 1e-9, "{a} {b}");
        }
        for r in &lz.residuals {
            assert!(*r <= 1e-10 * lz.matrix_norm);
        }
        let ov = dot(&dense.vectors[0], &lz.vectors[0]);
        assert!((ov - 1.0).abs() < 1e-8);
    }

    #[test]
    fn band_cholesky_solves() {
        let op = free(9, 0.3);
        let c = BandCholesky::factor(&op, 0.0).unwrap();
        let b: Vec<f64> = (0..9).map(|i| (i as f64).sin()).collect();
        let x = c.solve(&b);
        let r = op.apply(&x).unwrap();
        for (p, q) in r.iter().zip(&b) {
            assert!((p - q).abs() < 1e-13);
        }
        assert!(BandCholesky::factor(&op, 10.0).is_err());
    }

    #[test]
    fn refined_tail_has_relative_accuracy() {
        let eps = 0.025;
        let dom = LatticeDomain::from_box(eps, &[[-2.0, 2.0]]).unwrap();
        let op = assemble_operator(
            &dom,
            &StencilField::laplacian(1),
            &PotentialSpec::quadratic(&[1.0]),
            0,
            Boundary::Dirichlet,
        )
        .unwrap();
        let p = eigensolve_lowest(&op, 2, 1e-10).unwrap();
        let g = refine_ground_state(&op, &p).unwrap();
        assert!(g.tail_refined);
        assert!((g.energy - p.values[0]).abs() < 1e-12);
        let n = op.len();
        // the edge value is far below round-off of the dense vector
        assert!(g.vector[0] < 1e-20 && g.vector[0] > 0.0);
        // componentwise eigen-equation at the edge
        let hu = op.apply(&g.vector).unwrap();
        for i in [0, 1, 2, n - 1] {
            let rel = (hu[i] - g.energy * g.vector[i]).abs() / (op.norm_inf() * g.vector[i]);
            assert!(rel < 1e-10, "site {i}: {rel:e}");
        }
    }
}
