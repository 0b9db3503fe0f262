//! Finite boxes in the scaled lattice (εZ)^d.

use serde::Serialize;

use crate::error::Error;

#[derive(Clone, Debug, Serialize)]
pub struct LatticeDomain {
    dim: usize,
    epsilon: f64,
    lo: Vec<i64>,
    hi: Vec<i64>,
    // strides for row-major enumeration, last axis fastest
    strides: Vec<usize>,
    len: usize,
}

impl LatticeDomain {
    /// Box given by inclusive integer index ranges per axis.
    pub fn from_index_box(epsilon: f64, lo: Vec<i64>, hi: Vec<i64>) -> Result<Self, Error> {
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "epsilon must be positive, got {epsilon}"
            )));
        }
        if lo.is_empty() || lo.len() != hi.len() {
            return Err(Error::InvalidInput(
                "box bounds must have matching nonzero length".into(),
            ));
        }
        let dim = lo.len();
        let mut strides = vec![0usize; dim];
        let mut len = 1usize;
        for k in (0..dim).rev() {
            if hi[k] < lo[k] {
                return Err(Error::EmptyDomain);
            }
            strides[k] = len;
            len *= (hi[k] - lo[k] + 1) as usize;
        }
        Ok(LatticeDomain {
            dim,
            epsilon,
            lo,
            hi,
            strides,
            len,
        })
    }

    /// All lattice points εk inside the physical box `[a_k, b_k]` per axis.
    pub fn from_box(epsilon: f64, bounds: &[[f64; 2]]) -> Result<Self, Error> {
        if !(epsilon > 0.0) {
            return Err(Error::InvalidInput(format!(
                "epsilon must be positive, got {epsilon}"
            )));
        }
        let slack = 1e-9;
        let lo = bounds
            .iter()
            .map(|b| (b[0] / epsilon - slack).ceil() as i64)
            .collect();
        let hi = bounds
            .iter()
            .map(|b| (b[1] / epsilon + slack).floor() as i64)
            .collect();
        Self::from_index_box(epsilon, lo, hi)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn index_lo(&self) -> &[i64] {
        &self.lo
    }

    pub fn index_hi(&self) -> &[i64] {
        &self.hi
    }

    pub fn multi_index(&self, i: usize) -> Vec<i64> {
        let mut rem = i;
        (0..self.dim)
            .map(|k| {
                let q = rem / self.strides[k];
                rem %= self.strides[k];
                self.lo[k] + q as i64
            })
            .collect()
    }

    pub fn index_of(&self, k: &[i64]) -> Option<usize> {
        let mut idx = 0usize;
        for a in 0..self.dim {
            if k[a] < self.lo[a] || k[a] > self.hi[a] {
                return None;
            }
            idx += (k[a] - self.lo[a]) as usize * self.strides[a];
        }
        Some(idx)
    }

    pub fn point(&self, i: usize) -> Vec<f64> {
        self.multi_index(i)
            .into_iter()
            .map(|k| k as f64 * self.epsilon)
            .collect()
    }

    /// Index of site `i` shifted by integer offset `eta`, if still inside the box.
    pub fn neighbor(&self, i: usize, eta: &[i64]) -> Option<usize> {
        let mut k = self.multi_index(i);
        for a in 0..self.dim {
            k[a] += eta[a];
        }
        self.index_of(&k)
    }

    /// The site closest to the origin.
    pub fn origin_site(&self) -> usize {
        let k: Vec<i64> = (0..self.dim)
            .map(|a| 0i64.clamp(self.lo[a], self.hi[a]))
            .collect();
        self.index_of(&k).expect("clamped index is inside")
    }

    pub fn contains_point(&self, x: &[f64]) -> bool {
        (0..self.dim).all(|a| {
            x[a] >= self.lo[a] as f64 * self.epsilon - 1e-12
                && x[a] <= self.hi[a] as f64 * self.epsilon + 1e-12
        })
    }

    /// Physical bounds `[ε lo, ε hi]` per axis.
    pub fn bounds(&self) -> Vec<[f64; 2]> {
        (0..self.dim)
            .map(|a| {
                [
                    self.lo[a] as f64 * self.epsilon,
                    self.hi[a] as f64 * self.epsilon,
                ]
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn five_site_box() {
        let d = LatticeDomain::from_box(0.5, &[[-1.0, 1.0]]).unwrap();
        assert_eq!(d.len(), 5);
        assert_eq!(d.point(0), vec![-1.0]);
        assert_eq!(d.point(4), vec![1.0]);
        assert_eq!(d.origin_site(), 2);
        assert_eq!(d.neighbor(4, &[1]), None);
    }

    #[test]
    fn empty_box_rejected() {
        assert!(LatticeDomain::from_box(1.0, &[[0.2, 0.8]]).is_err());
    }

    proptest! {
        #[test]
        fn index_point_roundtrip(
            nx in 1i64..6, ny in 1i64..6, nz in 1i64..4, eps in 0.01f64..1.0
        ) {
            let d = LatticeDomain::from_index_box(eps, vec![-nx, 0, -1], vec![nx, ny, nz]).unwrap();
            for i in 0..d.len() {
                let k = d.multi_index(i);
                prop_assert_eq!(d.index_of(&k), Some(i));
                let x = d.point(i);
                for a in 0..3 {
                    prop_assert_eq!(x[a], k[a] as f64 * eps);
                }
            }
        }
    }
}
