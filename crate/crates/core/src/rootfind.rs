//! Scalar bracketed root finding.

use crate::error::{Error, Result};

/// Brent's method on a sign-changing bracket. Returns (root, f(root), iterations).
pub fn brent<F>(
    mut f: F,
    a: f64,
    b: f64,
    xtol: f64,
    ftol: f64,
    max_iter: usize,
) -> Result<(f64, f64, usize)>
where
    F: FnMut(f64) -> Result<f64>,
{
    let fa = f(a)?;
    let fb = f(b)?;
    brent_from(f, a, b, fa, fb, xtol, ftol, max_iter)
}

/// [`brent`] with known end values.
#[allow(clippy::too_many_arguments)]
pub fn brent_from<F>(
    mut f: F,
    mut a: f64,
    mut b: f64,
    mut fa: f64,
    mut fb: f64,
    xtol: f64,
    ftol: f64,
    max_iter: usize,
) -> Result<(f64, f64, usize)>
where
    F: FnMut(f64) -> Result<f64>,
{
    if fa == 0.0 {
        return Ok((a, fa, 0));
    }
    if fb == 0.0 {
        return Ok((b, fb, 0));
    }
    if fa.signum() == fb.signum() {
        return Err(Error::InvalidInput(format!("no sign change on [{a}, {b}]")));
    }
    if fa.abs() < fb.abs() {
        std::mem::swap(&mut a, &mut b);
        std::mem::swap(&mut fa, &mut fb);
    }
    let (mut c, mut fc) = (a, fa);
    let mut d = b - a;
    let mut bisected = true;
    for it in 1..=max_iter {
        if fb.abs() <= ftol || (b - a).abs() <= xtol {
            return Ok((b, fb, it - 1));
        }
        let mut s = if fa != fc && fb != fc {
            a * fb * fc / ((fa - fb) * (fa - fc))
                + b * fa * fc / ((fb - fa) * (fb - fc))
                + c * fa * fb / ((fc - fa) * (fc - fb))
        } else {
            b - fb * (b - a) / (fb - fa)
        };
        let lo = (3.0 * a + b) / 4.0;
        let between = if lo < b {
            s > lo && s < b
        } else {
            s > b && s < lo
        };
        let use_bisect = !between
            || (bisected && (s - b).abs() >= 0.5 * (b - c).abs())
            || (!bisected && (s - b).abs() >= 0.5 * (c - d).abs())
            || (bisected && (b - c).abs() < xtol)
            || (!bisected && (c - d).abs() < xtol);
        if use_bisect {
            s = 0.5 * (a + b);
        }
        bisected = use_bisect;
        let fs = f(s)?;
        d = c;
        c = b;
        fc = fb;
        if fa.signum() != fs.signum() {
            b = s;
            fb = fs;
        } else {
            a = s;
            fa = fs;
        }
        if fa.abs() < fb.abs() {
            std::mem::swap(&mut a, &mut b);
            std::mem::swap(&mut fa, &mut fb);
        }
    }
    if fb.abs() <= ftol || (b - a).abs() <= xtol {
        return Ok((b, fb, max_iter));
    }
    Err(Error::NoConvergence {
        what: "brent root",
        iterations: max_iter,
        residual: fb.abs(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_cubic_root() {
        let (x, _, it) = brent(|x| Ok(x * x * x - 2.0), 0.0, 2.0, 1e-15, 0.0, 100).unwrap();
        assert!((x - 2f64.cbrt()).abs() < 1e-14);
        assert!(it < 50);
    }

    #[test]
    fn rejects_no_bracket() {
        assert!(brent(|x| Ok(x * x + 1.0), -1.0, 1.0, 1e-12, 0.0, 50).is_err());
    }

    #[test]
    fn budget_exhaustion_is_reported() {
        let r = brent(|x| Ok(x.cos() - x), 0.0, 1.0, 0.0, 0.0, 2);
        assert!(matches!(r, Err(Error::NoConvergence { .. })));
    }
}
