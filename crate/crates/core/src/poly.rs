//! Truncated multivariate polynomials.
//!
//! A [`PolyRing`] fixes the number of variables and a maximal total degree;
//! products drop every monomial above that degree. This is what the eikonal
//! series needs: Taylor arithmetic around the well.

use std::collections::HashMap;
use std::sync::Arc;

#[derive(Debug)]
pub struct PolyRing {
    nvars: usize,
    degree: usize,
    monomials: Vec<Vec<u32>>,
    index: HashMap<Vec<u32>, usize>,
    // (i, j, k): monomial i times monomial j is monomial k
    products: Vec<(usize, usize, usize)>,
}

impl PolyRing {
    pub fn new(nvars: usize, degree: usize) -> Arc<Self> {
        let mut monomials = Vec::new();
        for total in 0..=degree {
            let mut current = vec![0u32; nvars];
            enumerate_degree(nvars, total as u32, 0, &mut current, &mut monomials);
        }
        let index: HashMap<Vec<u32>, usize> = monomials
            .iter()
            .enumerate()
            .map(|(i, m)| (m.clone(), i))
            .collect();
        let mut products = Vec::new();
        for (i, mi) in monomials.iter().enumerate() {
            let di: u32 = mi.iter().sum();
            for (j, mj) in monomials.iter().enumerate() {
                let dj: u32 = mj.iter().sum();
                if (di + dj) as usize > degree {
                    continue;
                }
                let m: Vec<u32> = mi.iter().zip(mj).map(|(a, b)| a + b).collect();
                products.push((i, j, index[&m]));
            }
        }
        Arc::new(PolyRing {
            nvars,
            degree,
            monomials,
            index,
            products,
        })
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn len(&self) -> usize {
        self.monomials.len()
    }

    pub fn is_empty(&self) -> bool {
        self.monomials.is_empty()
    }

    pub fn monomial(&self, i: usize) -> &[u32] {
        &self.monomials[i]
    }

    pub fn monomial_degree(&self, i: usize) -> usize {
        self.monomials[i].iter().sum::<u32>() as usize
    }

    pub fn index_of(&self, exps: &[u32]) -> Option<usize> {
        self.index.get(exps).copied()
    }

    /// Indices of all monomials of exact total degree `m`.
    pub fn degree_indices(&self, m: usize) -> Vec<usize> {
        (0..self.len())
            .filter(|&i| self.monomial_degree(i) == m)
            .collect()
    }
}

fn enumerate_degree(n: usize, left: u32, pos: usize, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
    if pos + 1 == n {
        cur[pos] = left;
        out.push(cur.clone());
        return;
    }
    if n == 0 {
        if left == 0 {
            out.push(Vec::new());
        }
        return;
    }
    for e in (0..=left).rev() {
        cur[pos] = e;
        enumerate_degree(n, left - e, pos + 1, cur, out);
    }
    cur[pos] = 0;
}

#[derive(Clone, Debug)]
pub struct Poly {
    ring: Arc<PolyRing>,
    pub coef: Vec<f64>,
}

impl Poly {
    pub fn zero(ring: &Arc<PolyRing>) -> Self {
        Poly {
            ring: ring.clone(),
            coef: vec![0.0; ring.len()],
        }
    }

    pub fn constant(ring: &Arc<PolyRing>, c: f64) -> Self {
        let mut p = Self::zero(ring);
        p.coef[0] = c;
        p
    }

    pub fn var(ring: &Arc<PolyRing>, i: usize) -> Self {
        let mut p = Self::zero(ring);
        if ring.degree >= 1 {
            let mut e = vec![0u32; ring.nvars];
            e[i] = 1;
            p.coef[ring.index[&e]] = 1.0;
        }
        p
    }

    pub fn ring(&self) -> &Arc<PolyRing> {
        &self.ring
    }

    pub fn constant_term(&self) -> f64 {
        self.coef[0]
    }

    pub fn add(&self, o: &Poly) -> Poly {
        let coef = self.coef.iter().zip(&o.coef).map(|(a, b)| a + b).collect();
        Poly {
            ring: self.ring.clone(),
            coef,
        }
    }

    pub fn sub(&self, o: &Poly) -> Poly {
        let coef = self.coef.iter().zip(&o.coef).map(|(a, b)| a - b).collect();
        Poly {
            ring: self.ring.clone(),
            coef,
        }
    }

    pub fn scale(&self, s: f64) -> Poly {
        Poly {
            ring: self.ring.clone(),
            coef: self.coef.iter().map(|a| a * s).collect(),
        }
    }

    pub fn add_const(&self, c: f64) -> Poly {
        let mut p = self.clone();
        p.coef[0] += c;
        p
    }

    pub fn mul(&self, o: &Poly) -> Poly {
        let mut out = vec![0.0; self.ring.len()];
        for &(i, j, k) in &self.ring.products {
            let a = self.coef[i];
            if a == 0.0 {
                continue;
            }
            out[k] += a * o.coef[j];
        }
        Poly {
            ring: self.ring.clone(),
            coef: out,
        }
    }

    /// `Σ_k derivs[k]/k! · q^k` where `q` is `self` minus its constant term.
    pub fn compose_taylor(&self, derivs: &[f64]) -> Poly {
        let q = self.add_const(-self.constant_term());
        let mut result = Poly::constant(&self.ring, derivs[0]);
        let mut power = Poly::constant(&self.ring, 1.0);
        let mut fact = 1.0;
        for (k, &dk) in derivs.iter().enumerate().skip(1) {
            power = power.mul(&q);
            fact *= k as f64;
            if dk != 0.0 {
                result = result.add(&power.scale(dk / fact));
            }
        }
        result
    }

    /// Number of derivative terms needed by `compose_taylor`.
    fn series_len(&self) -> usize {
        self.ring.degree + 1
    }

    pub fn exp(&self) -> Poly {
        let e = self.constant_term().exp();
        self.compose_taylor(&vec![e; self.series_len()])
    }

    pub fn sin(&self) -> Poly {
        let c = self.constant_term();
        let cyc = [c.sin(), c.cos(), -c.sin(), -c.cos()];
        let d: Vec<f64> = (0..self.series_len()).map(|k| cyc[k % 4]).collect();
        self.compose_taylor(&d)
    }

    pub fn cos(&self) -> Poly {
        let c = self.constant_term();
        let cyc = [c.cos(), -c.sin(), -c.cos(), c.sin()];
        let d: Vec<f64> = (0..self.series_len()).map(|k| cyc[k % 4]).collect();
        self.compose_taylor(&d)
    }

    pub fn sinh(&self) -> Poly {
        let c = self.constant_term();
        let d: Vec<f64> = (0..self.series_len())
            .map(|k| if k % 2 == 0 { c.sinh() } else { c.cosh() })
            .collect();
        self.compose_taylor(&d)
    }

    pub fn cosh(&self) -> Poly {
        let c = self.constant_term();
        let d: Vec<f64> = (0..self.series_len())
            .map(|k| if k % 2 == 0 { c.cosh() } else { c.sinh() })
            .collect();
        self.compose_taylor(&d)
    }

    /// Requires a positive constant term.
    pub fn ln(&self) -> Option<Poly> {
        let c = self.constant_term();
        if c <= 0.0 {
            return None;
        }
        let mut d = vec![c.ln()];
        let mut fact = 1.0;
        for k in 1..self.series_len() {
            if k > 1 {
                fact *= (k - 1) as f64;
            }
            let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
            d.push(sign * fact / c.powi(k as i32));
        }
        Some(self.compose_taylor(&d))
    }

    /// Real power; needs a positive constant term unless `a` is a nonnegative integer.
    pub fn powf(&self, a: f64) -> Option<Poly> {
        if a.fract() == 0.0 && a.abs() < 64.0 {
            return self.powi(a as i32);
        }
        let c = self.constant_term();
        if c <= 0.0 {
            return None;
        }
        let mut d = Vec::with_capacity(self.series_len());
        let mut falling = 1.0;
        for k in 0..self.series_len() {
            d.push(falling * c.powf(a - k as f64));
            falling *= a - k as f64;
        }
        Some(self.compose_taylor(&d))
    }

    pub fn powi(&self, n: i32) -> Option<Poly> {
        if n < 0 {
            return self.recip()?.powi(-n);
        }
        let mut result = Poly::constant(&self.ring, 1.0);
        let mut base = self.clone();
        let mut e = n as u32;
        while e > 0 {
            if e & 1 == 1 {
                result = result.mul(&base);
            }
            base = base.mul(&base);
            e >>= 1;
        }
        Some(result)
    }

    pub fn recip(&self) -> Option<Poly> {
        let c = self.constant_term();
        if c == 0.0 {
            return None;
        }
        let d: Vec<f64> = (0..self.series_len())
            .scan(1.0 / c, |acc, k| {
                let v = *acc;
                *acc *= -((k + 1) as f64) / c;
                Some(v)
            })
            .collect();
        Some(self.compose_taylor(&d))
    }

    pub fn derivative(&self, var: usize) -> Poly {
        let mut out = Poly::zero(&self.ring);
        for (i, &c) in self.coef.iter().enumerate() {
            let m = &self.ring.monomials[i];
            if c == 0.0 || m[var] == 0 {
                continue;
            }
            let mut e = m.clone();
            e[var] -= 1;
            out.coef[self.ring.index[&e]] += c * m[var] as f64;
        }
        out
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.coef
            .iter()
            .enumerate()
            .filter(|(_, &c)| c != 0.0)
            .map(|(i, &c)| {
                let m = &self.ring.monomials[i];
                c * m
                    .iter()
                    .zip(x)
                    .map(|(&e, &xi)| xi.powi(e as i32))
                    .product::<f64>()
            })
            .sum()
    }

    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        (0..self.ring.nvars)
            .map(|v| self.derivative(v).eval(x))
            .collect()
    }

    /// Keeps only monomials of total degree `m`.
    pub fn homogeneous_part(&self, m: usize) -> Poly {
        let mut out = Poly::zero(&self.ring);
        for i in 0..self.ring.len() {
            if self.ring.monomial_degree(i) == m {
                out.coef[i] = self.coef[i];
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn monomial_counts() {
        assert_eq!(PolyRing::new(1, 5).len(), 6);
        assert_eq!(PolyRing::new(2, 4).len(), 15);
        assert_eq!(PolyRing::new(3, 3).len(), 20);
    }

    #[test]
    fn exp_of_var_matches_series() {
        let r = PolyRing::new(1, 6);
        let e = Poly::var(&r, 0).exp();
        let mut f = 1.0;
        for k in 0..=6 {
            if k > 0 {
                f *= k as f64;
            }
            assert!((e.coef[k] - 1.0 / f).abs() < 1e-15);
        }
    }

    #[test]
    fn cosh_squared_minus_sinh_squared() {
        let r = PolyRing::new(2, 6);
        let p = Poly::var(&r, 0)
            .scale(0.7)
            .add(&Poly::var(&r, 1).scale(-0.3))
            .add_const(0.2);
        let id = p.cosh().mul(&p.cosh()).sub(&p.sinh().mul(&p.sinh()));
        assert!((id.coef[0] - 1.0).abs() < 1e-14);
        for c in &id.coef[1..] {
            assert!(c.abs() < 1e-13);
        }
    }

    #[test]
    fn recip_and_ln_roundtrip() {
        let r = PolyRing::new(2, 5);
        let p = Poly::var(&r, 0)
            .add(&Poly::var(&r, 1).scale(2.0))
            .add_const(1.5);
        let one = p.mul(&p.recip().unwrap());
        assert!((one.coef[0] - 1.0).abs() < 1e-15);
        assert!(one.coef[1..].iter().all(|c| c.abs() < 1e-13));
        let back = p.ln().unwrap().exp();
        for (a, b) in back.coef.iter().zip(&p.coef) {
            assert!((a - b).abs() < 1e-12);
        }
        let sq = p.powf(0.5).unwrap();
        let again = sq.mul(&sq);
        for (a, b) in again.coef.iter().zip(&p.coef) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn derivative_and_eval() {
        let r = PolyRing::new(2, 3);
        let x = Poly::var(&r, 0);
        let y = Poly::var(&r, 1);
        let p = x.mul(&x).mul(&y).add(&y.scale(3.0));
        let g = p.gradient(&[2.0, -1.0]);
        assert!((g[0] - (-4.0)).abs() < 1e-15);
        assert!((g[1] - 7.0).abs() < 1e-15);
        assert!((p.eval(&[2.0, -1.0]) + 7.0).abs() < 1e-15);
    }
}
