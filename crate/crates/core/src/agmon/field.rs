//! Distance values on lattice sites with per-site provenance.

use std::io::Write;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::lattice::LatticeDomain;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    Series,
    Shooting,
    Dijkstra,
    Blended,
}

impl Provenance {
    pub fn as_str(&self) -> &'static str {
        match self {
            Provenance::Series => "series",
            Provenance::Shooting => "shooting",
            Provenance::Dijkstra => "dijkstra",
            Provenance::Blended => "blended",
        }
    }

    /// Series and shooting values solve the eikonal equation pointwise.
    pub fn is_smooth(&self) -> bool {
        matches!(
            self,
            Provenance::Series | Provenance::Shooting | Provenance::Blended
        )
    }
}

#[derive(Clone, Debug)]
pub struct DistanceField {
    domain: LatticeDomain,
    values: Vec<f64>,
    gradients: Vec<Vec<f64>>,
    provenance: Vec<Provenance>,
}

impl DistanceField {
    /// Gradients default to central differences of `values`.
    pub fn new(
        domain: LatticeDomain,
        values: Vec<f64>,
        provenance: Vec<Provenance>,
    ) -> Result<Self> {
        if values.len() != domain.len() || provenance.len() != domain.len() {
            return Err(Error::DimensionMismatch {
                expected: domain.len(),
                got: values.len().min(provenance.len()),
            });
        }
        let mut f = DistanceField {
            gradients: Vec::new(),
            domain,
            values,
            provenance,
        };
        f.gradients = (0..f.len()).map(|i| f.difference_gradient(i)).collect();
        Ok(f)
    }

    pub fn constant(domain: LatticeDomain, c: f64) -> Self {
        let n = domain.len();
        DistanceField::new(domain, vec![c; n], vec![Provenance::Dijkstra; n])
            .expect("consistent sizes")
    }

    pub fn domain(&self) -> &LatticeDomain {
        &self.domain
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn value(&self, i: usize) -> f64 {
        self.values[i]
    }

    pub fn provenance(&self, i: usize) -> Provenance {
        self.provenance[i]
    }

    pub fn gradient(&self, i: usize) -> &[f64] {
        &self.gradients[i]
    }

    /// Replaces the difference estimate by a known gradient.
    pub fn set_gradient(&mut self, i: usize, g: Vec<f64>) {
        self.gradients[i] = g;
    }

    /// Central differences, one-sided at the box boundary.
    pub fn difference_gradient(&self, i: usize) -> Vec<f64> {
        let d = self.domain.dim();
        let h = self.domain.epsilon();
        (0..d)
            .map(|a| {
                let mut e = vec![0i64; d];
                e[a] = 1;
                let p = self.domain.neighbor(i, &e);
                e[a] = -1;
                let m = self.domain.neighbor(i, &e);
                match (p, m) {
                    (Some(p), Some(m)) => (self.values[p] - self.values[m]) / (2.0 * h),
                    (Some(p), None) => (self.values[p] - self.values[i]) / h,
                    (None, Some(m)) => (self.values[i] - self.values[m]) / h,
                    (None, None) => 0.0,
                }
            })
            .collect()
    }

    /// Multilinear interpolation; points outside the box are clamped to it.
    pub fn interpolate(&self, x: &[f64]) -> f64 {
        let d = self.domain.dim();
        let h = self.domain.epsilon();
        let lo = self.domain.index_lo();
        let hi = self.domain.index_hi();
        let mut base = vec![0i64; d];
        let mut frac = vec![0.0; d];
        for a in 0..d {
            let u = (x[a] / h).clamp(lo[a] as f64, hi[a] as f64);
            let k = (u.floor() as i64).min(hi[a] - 1).max(lo[a]);
            base[a] = k;
            frac[a] = if hi[a] > lo[a] { u - k as f64 } else { 0.0 };
        }
        let mut total = 0.0;
        for corner in 0..(1usize << d) {
            let mut w = 1.0;
            let mut idx = base.clone();
            for a in 0..d {
                if corner >> a & 1 == 1 {
                    idx[a] = (idx[a] + 1).min(hi[a]);
                    w *= frac[a];
                } else {
                    w *= 1.0 - frac[a];
                }
            }
            if w != 0.0 {
                let i = self.domain.index_of(&idx).expect("corner inside box");
                total += w * self.values[i];
            }
        }
        total
    }

    /// Writes `site, x1..xd, d0, provenance` rows.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let d = self.domain.dim();
        let mut wr = csv::Writer::from_writer(w);
        let mut header = vec!["site".to_string()];
        header.extend((1..=d).map(|k| format!("x{k}")));
        header.push("d0".into());
        header.push("provenance".into());
        wr.write_record(&header)?;
        for i in 0..self.len() {
            let mut row = vec![i.to_string()];
            row.extend(self.domain.point(i).iter().map(|v| format!("{v:e}")));
            row.push(format!("{:e}", self.values[i]));
            row.push(self.provenance[i].as_str().into());
            wr.write_record(&row)?;
        }
        wr.flush()?;
        Ok(())
    }

    pub fn count(&self, p: Provenance) -> usize {
        self.provenance.iter().filter(|&&q| q == p).count()
    }
}
