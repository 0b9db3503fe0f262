//! One-dimensional quadrature rules.

use crate::error::{Error, Result};

/// Adaptive Simpson with absolute tolerance `tol`.
pub fn adaptive_simpson<F>(mut f: F, a: f64, b: f64, tol: f64, max_depth: usize) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    if a == b {
        return Ok(0.0);
    }
    let fa = f(a)?;
    let fb = f(b)?;
    let m = 0.5 * (a + b);
    let fm = f(m)?;
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    let mut worst = 0.0f64;
    let v = simpson_rec(&mut f, a, b, fa, fm, fb, whole, tol, max_depth, &mut worst)?;
    if worst > tol {
        return Err(Error::Quadrature { achieved: worst });
    }
    Ok(v)
}

#[allow(clippy::too_many_arguments)]
fn simpson_rec<F>(
    f: &mut F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: usize,
    worst: &mut f64,
) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm)?;
    let frm = f(rm)?;
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        if depth == 0 && delta.abs() > 15.0 * tol {
            *worst += delta.abs() / 15.0;
        }
        return Ok(left + right + delta / 15.0);
    }
    Ok(
        simpson_rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1, worst)?
            + simpson_rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1, worst)?,
    )
}

/// Gauss–Legendre nodes and weights on [−1, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(n, x);
        if d != 0.0 {
            dp = d;
        }
        nodes[i] = x;
        weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    (nodes, weights)
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Composite Gauss–Legendre rule with `panels` equal panels of `order` nodes.
pub fn composite_gauss<F>(mut f: F, a: f64, b: f64, panels: usize, order: usize) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    let (x, w) = gauss_legendre(order);
    let h = (b - a) / panels as f64;
    let mut total = 0.0;
    for p in 0..panels {
        let lo = a + p as f64 * h;
        let mut s = 0.0;
        for k in 0..order {
            s += w[k] * f(lo + 0.5 * h * (x[k] + 1.0))?;
        }
        total += 0.5 * h * s;
    }
    Ok(total)
}
