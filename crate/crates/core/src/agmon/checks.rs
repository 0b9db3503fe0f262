//! Consistency checks on a computed distance field.

use serde::Serialize;

use crate::agmon::build::FieldBuild;
use crate::agmon::field::{DistanceField, Provenance};
use crate::error::Result;
use crate::finsler::FinslerEvaluator;
use crate::hamiltonian::HamiltonianEvaluator;
use crate::stencil::{norm, offsets_within};

#[derive(Clone, Debug, Serialize)]
pub struct EikonalReport {
    pub sites: usize,
    pub smooth_sites: usize,
    /// max h̃₀(x, ∇d⁰) over smooth-region sites.
    pub worst_smooth: f64,
    /// max |h̃₀(x, ∇d⁰)| over smooth-region sites.
    pub worst_abs_smooth: f64,
    pub worst_all: f64,
    /// Fraction of all evaluated sites with h̃₀ > tol.
    pub fraction_exceeding: f64,
    pub tol: f64,
    pub passed: bool,
}

fn interior(field: &DistanceField, i: usize) -> bool {
    let d = field.domain().dim();
    (0..d).all(|a| {
        let mut e = vec![0i64; d];
        e[a] = 1;
        let p = field.domain().neighbor(i, &e).is_some();
        e[a] = -1;
        p && field.domain().neighbor(i, &e).is_some()
    })
}

/// h̃₀(x, ∇d⁰(x)) ≤ tol at interior smooth-region sites; other sites are reported only.
pub fn eikonal_inequality_check(
    field: &DistanceField,
    ham: &HamiltonianEvaluator,
    tol: f64,
) -> EikonalReport {
    let mut sites = 0;
    let mut smooth = 0;
    let mut worst_smooth = f64::NEG_INFINITY;
    let mut worst_abs = 0.0f64;
    let mut worst_all = f64::NEG_INFINITY;
    let mut exceeding = 0;
    for i in 0..field.len() {
        let is_smooth = field.provenance(i).is_smooth();
        if !is_smooth && !interior(field, i) {
            continue;
        }
        let x = field.domain().point(i);
        let Ok(h) = ham.h_tilde(&x, field.gradient(i)) else {
            continue;
        };
        sites += 1;
        worst_all = worst_all.max(h);
        if h > tol {
            exceeding += 1;
        }
        if is_smooth {
            smooth += 1;
            worst_smooth = worst_smooth.max(h);
            worst_abs = worst_abs.max(h.abs());
        }
    }
    EikonalReport {
        sites,
        smooth_sites: smooth,
        worst_smooth,
        worst_abs_smooth: worst_abs,
        worst_all,
        fraction_exceeding: exceeding as f64 / sites.max(1) as f64,
        tol,
        passed: smooth == 0 || worst_smooth <= tol,
    }
}

/// sup over unit vectors of ℓ(x, ·), by a direction sweep with parabolic refinement.
pub fn max_unit_ell(ev: &FinslerEvaluator, x: &[f64]) -> Result<f64> {
    let d = ev.dim();
    if d == 1 {
        return ev.ell(x, &[1.0]);
    }
    if d == 2 {
        let n = 72;
        let f = |th: f64| ev.ell(x, &[th.cos(), th.sin()]);
        let mut vals = Vec::with_capacity(n);
        for k in 0..n {
            vals.push(f(std::f64::consts::PI * k as f64 / n as f64)?);
        }
        let (k, _) =
            vals.iter().enumerate().fold(
                (0, f64::NEG_INFINITY),
                |b, (k, &v)| if v > b.1 { (k, v) } else { b },
            );
        let h = std::f64::consts::PI / n as f64;
        let (a, b, c) = (vals[(k + n - 1) % n], vals[k], vals[(k + 1) % n]);
        let den = a - 2.0 * b + c;
        let off = if den < 0.0 { 0.5 * (a - c) / den } else { 0.0 };
        let best = f(std::f64::consts::PI * k as f64 / n as f64 + off.clamp(-1.0, 1.0) * h)?;
        return Ok(best.max(b));
    }
    // axis and diagonal directions
    let mut best = 0.0f64;
    for e in offsets_within(d, 1) {
        if e.iter().all(|&c| c == 0) {
            continue;
        }
        let v: Vec<f64> = e.iter().map(|&c| c as f64).collect();
        let nv = norm(&v);
        best = best.max(ev.ell(x, &v)? / nv);
    }
    Ok(best)
}

#[derive(Clone, Debug, Serialize)]
pub struct LipschitzReport {
    pub pairs: usize,
    pub max_ratio: f64,
    /// max over pairs of ratio / local bound.
    pub worst_relative: f64,
    pub tol: f64,
    pub passed: bool,
}

/// |d(x) − d(y)| / |x − y| over axis-neighbour pairs against the local sup of ℓ on unit vectors.
pub fn lipschitz_check(
    field: &DistanceField,
    ev: &FinslerEvaluator,
    tol: f64,
) -> Result<LipschitzReport> {
    let dom = field.domain();
    let d = dom.dim();
    let h = dom.epsilon();
    let mut pairs = 0;
    let mut max_ratio = 0.0f64;
    let mut worst = 0.0f64;
    let mut cache: Vec<Option<f64>> = vec![None; dom.len()];
    let mut sup_at = |i: usize| -> Result<f64> {
        if let Some(v) = cache[i] {
            return Ok(v);
        }
        let v = max_unit_ell(ev, &dom.point(i))?;
        cache[i] = Some(v);
        Ok(v)
    };
    for i in 0..dom.len() {
        for a in 0..d {
            let mut e = vec![0i64; d];
            e[a] = 1;
            let Some(j) = dom.neighbor(i, &e) else {
                continue;
            };
            let ratio = (field.value(i) - field.value(j)).abs() / h;
            let x = dom.point(i);
            let y = dom.point(j);
            let mid: Vec<f64> = x.iter().zip(&y).map(|(p, q)| 0.5 * (p + q)).collect();
            let bound = sup_at(i)?.max(sup_at(j)?).max(max_unit_ell(ev, &mid)?);
            pairs += 1;
            max_ratio = max_ratio.max(ratio);
            if bound > 0.0 {
                worst = worst.max(ratio / bound);
            } else if ratio > 0.0 {
                worst = f64::INFINITY;
            }
        }
    }
    Ok(LipschitzReport {
        pairs,
        max_ratio,
        worst_relative: worst,
        tol,
        passed: worst <= 1.0 + tol,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct SmoothnessReport {
    /// max |Δ²d|/h² over interior smooth sites and axes.
    pub max_second_difference_smooth: f64,
    pub max_second_difference_all: f64,
}

/// Bounded second differences as a proxy for C² regularity (not a certificate).
pub fn second_differences(field: &DistanceField) -> SmoothnessReport {
    let dom = field.domain();
    let d = dom.dim();
    let h = dom.epsilon();
    let mut sm = 0.0f64;
    let mut all = 0.0f64;
    for i in 0..dom.len() {
        for a in 0..d {
            let mut e = vec![0i64; d];
            e[a] = 1;
            let p = dom.neighbor(i, &e);
            e[a] = -1;
            let m = dom.neighbor(i, &e);
            if let (Some(p), Some(m)) = (p, m) {
                let s = (field.value(p) - 2.0 * field.value(i) + field.value(m)).abs() / (h * h);
                all = all.max(s);
                if [i, p, m].iter().all(|&k| field.provenance(k).is_smooth()) {
                    sm = sm.max(s);
                }
            }
        }
    }
    SmoothnessReport {
        max_second_difference_smooth: sm,
        max_second_difference_all: all,
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct AgreementReport {
    /// max |φ_N − shooting| on sites with series_radius < |x| ≤ 2·series_radius.
    pub series_vs_shooting: Option<f64>,
    /// max |dijkstra − smooth| / max(smooth, atol_floor) over smooth sites.
    pub dijkstra_relative: Option<f64>,
    /// min (dijkstra − smooth); the upper-bound property asks for ≥ −slack.
    pub dijkstra_min_excess: Option<f64>,
    pub passed: bool,
}

#[derive(Clone, Debug)]
pub struct AgreementTolerances {
    pub series: f64,
    pub dijkstra_rtol: f64,
    pub dijkstra_floor: f64,
    pub upper_bound_slack: f64,
}

impl Default for AgreementTolerances {
    fn default() -> Self {
        AgreementTolerances {
            series: 1e-5,
            dijkstra_rtol: 0.05,
            dijkstra_floor: 0.05,
            upper_bound_slack: 1e-3,
        }
    }
}

pub fn three_way_agreement(
    build: &FieldBuild,
    series_radius: f64,
    tol: &AgreementTolerances,
) -> AgreementReport {
    let f = &build.field;
    let dom = f.domain();
    let mut svs: Option<f64> = None;
    for i in 0..f.len() {
        let x = dom.point(i);
        let r = norm(&x);
        let s = build.shooting_values[i];
        if r > series_radius && r <= 2.0 * series_radius && s.is_finite() {
            let e = (build.series.value(&x) - s).abs();
            svs = Some(svs.map_or(e, |v: f64| v.max(e)));
        }
    }
    let (mut rel, mut excess) = (None::<f64>, None::<f64>);
    if let Some(dj) = &build.dijkstra {
        for i in 0..f.len() {
            if f.provenance(i) == Provenance::Dijkstra {
                continue;
            }
            let e = dj.value(i) - f.value(i);
            let r = e.abs() / f.value(i).max(tol.dijkstra_floor);
            rel = Some(rel.map_or(r, |v| v.max(r)));
            excess = Some(excess.map_or(e, |v| v.min(e)));
        }
    }
    let passed = svs.is_none_or(|v| v <= tol.series)
        && rel.is_none_or(|v| v <= tol.dijkstra_rtol)
        && excess.is_none_or(|v| v >= -tol.upper_bound_slack);
    AgreementReport {
        series_vs_shooting: svs,
        dijkstra_relative: rel,
        dijkstra_min_excess: excess,
        passed,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agmon::build::{build_distance_field, FieldOptions};
    use crate::lattice::LatticeDomain;
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

    #[test]
    fn constant_field_has_zero_ratio() {
        let dom = LatticeDomain::from_box(0.1, &[[-1.0, 1.0]]).unwrap();
        let f = DistanceField::constant(dom, 3.0);
        let r = lipschitz_check(&f, &oned(), 1e-3).unwrap();
        assert_eq!(r.max_ratio, 0.0);
        assert!(r.passed);
    }

    #[test]
    fn one_d_checks() {
        let ev = oned();
        let dom = LatticeDomain::from_box(0.01, &[[-1.5, 1.5]]).unwrap();
        let b = build_distance_field(&ev, &dom, &FieldOptions::default()).unwrap();
        let e = eikonal_inequality_check(&b.field, ev.hamiltonian(), 1e-6);
        assert!(e.passed && e.worst_abs_smooth <= 1e-6, "{e:?}");
        assert_eq!(
            ev.hamiltonian()
                .h_tilde(&[0.0], b.field.gradient(dom.origin_site()))
                .unwrap(),
            0.0
        );
        let l = lipschitz_check(&b.field, &ev, 1e-3).unwrap();
        assert!(l.passed, "{l:?}");
        // ratio near x = 1 approximates |∇d⁰(1)| = arcosh(1.25) = ln 2
        let i = dom.index_of(&[100]).unwrap();
        let ratio = (b.field.value(i) - b.field.value(i - 1)) / 0.01;
        assert!((ratio - 2f64.ln()).abs() < 5e-3);
        let a = three_way_agreement(&b, 0.05, &AgreementTolerances::default());
        assert!(a.passed, "{a:?}");
        assert!(second_differences(&b.field).max_second_difference_smooth < 2.0);
    }

    #[test]
    fn flat_gradients_violate_nothing_but_steep_ones_do() {
        let ev = oned();
        let dom = LatticeDomain::from_box(0.1, &[[-1.0, 1.0]]).unwrap();
        let vals: Vec<f64> = (0..dom.len())
            .map(|i| 3.0 * dom.point(i)[0].abs())
            .collect();
        let f =
            DistanceField::new(dom.clone(), vals, vec![Provenance::Shooting; dom.len()]).unwrap();
        let e = eikonal_inequality_check(&f, ev.hamiltonian(), 1e-5);
        assert!(!e.passed && e.fraction_exceeding > 0.5);
    }
}
