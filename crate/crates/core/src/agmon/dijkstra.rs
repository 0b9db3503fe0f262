//! Shortest paths on the lattice graph with Finsler edge weights: an upper bound
//! for d⁰ that tightens as the mesh shrinks and the neighbourhood grows.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use rayon::prelude::*;

use crate::agmon::field::{DistanceField, Provenance};
use crate::error::{Error, Result};
use crate::finsler::FinslerEvaluator;
use crate::lattice::LatticeDomain;
use crate::stencil::offsets_within;

#[derive(Clone, Copy, PartialEq)]
struct Item(f64, usize);

impl Eq for Item {}

impl Ord for Item {
    fn cmp(&self, o: &Self) -> Ordering {
        o.0.total_cmp(&self.0).then_with(|| o.1.cmp(&self.1))
    }
}

impl PartialOrd for Item {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}

/// Lattice graph with one weight per undirected edge; ℓ is even in v, so the
/// edge weight does not depend on the direction of traversal.
pub struct FinslerGraph {
    domain: LatticeDomain,
    /// Offsets η with η > 0 lexicographically.
    half: Vec<Vec<i64>>,
    /// weights[i * half.len() + k] for the edge i → i + η_k; ∞ if absent.
    weights: Vec<f64>,
}

impl FinslerGraph {
    pub fn build(ev: &FinslerEvaluator, domain: &LatticeDomain, r: i64) -> Result<Self> {
        Self::build_oriented(ev, domain, r, false)
    }

    /// With `reversed`, each edge weight is evaluated as ℓ(mid, x − y) instead of ℓ(mid, y − x).
    pub fn build_oriented(
        ev: &FinslerEvaluator,
        domain: &LatticeDomain,
        r: i64,
        reversed: bool,
    ) -> Result<Self> {
        if r < 1 {
            return Err(Error::InvalidInput(
                "neighbourhood radius must be at least 1".into(),
            ));
        }
        if ev.dim() != domain.dim() {
            return Err(Error::DimensionMismatch {
                expected: ev.dim(),
                got: domain.dim(),
            });
        }
        let half: Vec<Vec<i64>> = offsets_within(domain.dim(), r)
            .into_iter()
            .filter(|e| e.iter().find(|&&c| c != 0).is_some_and(|&c| c > 0))
            .collect();
        let h = domain.epsilon();
        let m = half.len();
        let weights: Vec<f64> = (0..domain.len() * m)
            .into_par_iter()
            .map(|q| {
                let (i, k) = (q / m, q % m);
                let Some(j) = domain.neighbor(i, &half[k]) else {
                    return f64::INFINITY;
                };
                let x = domain.point(i);
                let y = domain.point(j);
                let mid: Vec<f64> = x.iter().zip(&y).map(|(a, b)| 0.5 * (a + b)).collect();
                let sign = if reversed { -h } else { h };
                let v: Vec<f64> = half[k].iter().map(|&c| c as f64 * sign).collect();
                ev.ell(&mid, &v).unwrap_or(f64::INFINITY)
            })
            .collect();
        Ok(FinslerGraph {
            domain: domain.clone(),
            half,
            weights,
        })
    }

    pub fn domain(&self) -> &LatticeDomain {
        &self.domain
    }

    pub fn edge_count(&self) -> usize {
        self.weights.iter().filter(|w| w.is_finite()).count()
    }

    pub fn shortest_paths(&self, source: usize) -> Vec<f64> {
        let n = self.domain.len();
        let m = self.half.len();
        let neg: Vec<Vec<i64>> = self
            .half
            .iter()
            .map(|e| e.iter().map(|c| -c).collect())
            .collect();
        let mut dist = vec![f64::INFINITY; n];
        let mut done = vec![false; n];
        let mut heap = BinaryHeap::new();
        dist[source] = 0.0;
        heap.push(Item(0.0, source));
        while let Some(Item(d, i)) = heap.pop() {
            if done[i] {
                continue;
            }
            done[i] = true;
            for k in 0..m {
                let fwd = self
                    .domain
                    .neighbor(i, &self.half[k])
                    .map(|j| (j, self.weights[i * m + k]));
                let bwd = self
                    .domain
                    .neighbor(i, &neg[k])
                    .map(|j| (j, self.weights[j * m + k]));
                for (j, w) in fwd.into_iter().chain(bwd) {
                    let nd = d + w;
                    if nd < dist[j] {
                        dist[j] = nd;
                        heap.push(Item(nd, j));
                    }
                }
            }
        }
        dist
    }
}

/// Distance from the site nearest 0 with neighbourhood radius `r` (lattice steps).
pub fn dijkstra_distance(
    ev: &FinslerEvaluator,
    domain: &LatticeDomain,
    r: i64,
) -> Result<DistanceField> {
    let g = FinslerGraph::build(ev, domain, r)?;
    let dist = g.shortest_paths(domain.origin_site());
    let unreached = dist.iter().filter(|d| !d.is_finite()).count();
    if unreached > 0 {
        return Err(Error::Disconnected { unreached });
    }
    let n = domain.len();
    DistanceField::new(domain.clone(), dist, vec![Provenance::Dijkstra; n])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamiltonian::HamiltonianEvaluator;
    use crate::stencil::{PotentialSpec, StencilField};
    use std::sync::Arc;

    fn oned() -> FinslerEvaluator {
        let h = HamiltonianEvaluator::new(
            Arc::new(StencilField::laplacian(1)),
            Arc::new(PotentialSpec::quadratic(&[1.0])),
        )
        .unwrap();
        FinslerEvaluator::new(Arc::new(h))
    }

    fn d_exact(x: f64) -> f64 {
        crate::quadrature::composite_gauss(
            |s| Ok(2.0 * (s / 8f64.sqrt()).asinh()),
            0.0,
            x.abs(),
            16,
            12,
        )
        .unwrap()
    }

    #[test]
    fn one_d_fine_mesh() {
        let f = oned();
        let dom = LatticeDomain::from_box(1e-3, &[[-1.2, 1.2]]).unwrap();
        let d = dijkstra_distance(&f, &dom, 1).unwrap();
        assert_eq!(d.value(dom.origin_site()), 0.0);
        let i = dom.index_of(&[1000]).unwrap();
        let rel = (d.value(i) - d_exact(1.0)).abs() / d_exact(1.0);
        assert!(rel < 0.02, "rel {rel}");
        // in 1D the midpoint rule is a second-order quadrature of the exact integral
        assert!(rel < 1e-5);
    }

    #[test]
    fn wider_stencil_is_not_worse_and_reverse_agrees() {
        let s = StencilField::constant(
            2,
            &[
                (vec![0, 0], 4.5),
                (vec![1, 0], -1.0),
                (vec![-1, 0], -1.0),
                (vec![0, 1], -1.0),
                (vec![0, -1], -1.0),
                (vec![1, 1], -0.25),
                (vec![-1, -1], -0.25),
            ],
        )
        .unwrap();
        let h =
            HamiltonianEvaluator::new(Arc::new(s), Arc::new(PotentialSpec::quadratic(&[1.0, 2.0])))
                .unwrap();
        let f = FinslerEvaluator::new(Arc::new(h));
        let dom = LatticeDomain::from_box(0.1, &[[-1.0, 1.0], [-1.0, 1.0]]).unwrap();
        let src = dom.origin_site();
        let d1 = FinslerGraph::build(&f, &dom, 1)
            .unwrap()
            .shortest_paths(src);
        let d2 = FinslerGraph::build(&f, &dom, 2)
            .unwrap()
            .shortest_paths(src);
        let d2r = FinslerGraph::build_oriented(&f, &dom, 2, true)
            .unwrap()
            .shortest_paths(src);
        for i in 0..dom.len() {
            assert!(d2[i] <= d1[i] + 1e-12);
            assert!((d2[i] - d2r[i]).abs() <= 1e-12);
            assert!(i == src || d2[i] > 0.0);
        }
    }
}
