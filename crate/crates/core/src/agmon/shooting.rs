//! Distances by integrating Hamilton's equations along the unstable manifold
//! {(x, ∇φ(x))} of the well.

use std::io::Write;

use rayon::prelude::*;

use crate::agmon::series::EikonalSeries;
use crate::curve::Curve;
use crate::error::{Error, Result};
use crate::hamiltonian::HamiltonianEvaluator;
use crate::ode::{Dopri5, Trajectory};
use crate::rootfind::{brent, brent_from};
use crate::stencil::{dot, norm};

#[derive(Clone, Debug)]
pub struct ShootingConfig {
    /// Seed radius on the unstable manifold.
    pub r0: f64,
    pub ode: Dopri5,
    pub t_max: f64,
    /// Number of seed directions in the initial fan (d = 2).
    pub fan: usize,
    pub max_refine: usize,
    /// Accepted perpendicular miss at the point of closest approach.
    pub hit_tol: f64,
    /// Allowed |h̃₀ − h̃₀(seed)| per unit time.
    pub drift_tol: f64,
}

impl Default for ShootingConfig {
    fn default() -> Self {
        ShootingConfig {
            r0: 1e-3,
            ode: Dopri5::default(),
            t_max: 60.0,
            fan: 48,
            max_refine: 64,
            hit_tol: 1e-7,
            drift_tol: 1e-8,
        }
    }
}

/// One integral curve; state layout (x, ξ, s) with s = φ_N(seed) + ∫ ξ·ẋ.
#[derive(Clone, Debug)]
pub struct Geodesic {
    pub seed_direction: Vec<f64>,
    pub traj: Trajectory,
    pub max_drift: f64,
}

impl Geodesic {
    fn dim(&self) -> usize {
        (self.traj.y[0].len() - 1) / 2
    }

    pub fn len(&self) -> usize {
        self.traj.len()
    }

    pub fn is_empty(&self) -> bool {
        self.traj.is_empty()
    }

    pub fn x(&self, i: usize) -> &[f64] {
        &self.traj.y[i][..self.dim()]
    }

    pub fn xi(&self, i: usize) -> &[f64] {
        let d = self.dim();
        &self.traj.y[i][d..2 * d]
    }

    pub fn length(&self, i: usize) -> f64 {
        self.traj.y[i][2 * self.dim()]
    }

    pub fn velocity(&self, i: usize) -> &[f64] {
        &self.traj.f[i][..self.dim()]
    }

    /// Base curve (x, ẋ) on the samples with |x| ≥ r_min.
    pub fn base_curve(&self, r_min: f64) -> Result<Curve> {
        let mut t = Vec::new();
        let mut p = Vec::new();
        let mut v = Vec::new();
        for i in 0..self.len() {
            if norm(self.x(i)) >= r_min {
                t.push(self.traj.t[i]);
                p.push(self.x(i).to_vec());
                v.push(self.velocity(i).to_vec());
            }
        }
        Curve::new(t, p, v)
    }

    /// Writes `t, x1..xd, xi1..xid, length` rows.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let d = self.dim();
        let mut wr = csv::Writer::from_writer(w);
        let mut header = vec!["t".to_string()];
        header.extend((1..=d).map(|k| format!("x{k}")));
        header.extend((1..=d).map(|k| format!("xi{k}")));
        header.push("length".into());
        wr.write_record(&header)?;
        for i in 0..self.len() {
            let mut row = vec![format!("{:e}", self.traj.t[i])];
            row.extend(self.traj.y[i].iter().map(|v| format!("{v:e}")));
            wr.write_record(&row)?;
        }
        wr.flush()?;
        Ok(())
    }
}

#[derive(Clone, Debug, Default)]
pub struct GeodesicBundle {
    pub curves: Vec<Geodesic>,
}

impl GeodesicBundle {
    pub fn max_drift(&self) -> f64 {
        self.curves.iter().map(|c| c.max_drift).fold(0.0, f64::max)
    }
}

/// Distance at one target.
#[derive(Clone, Debug)]
pub struct Shot {
    pub target: Vec<f64>,
    pub distance: f64,
    /// ξ at the closest approach, i.e. ∇d⁰ on the unstable manifold.
    pub gradient: Vec<f64>,
    /// Perpendicular distance between the curve and the target.
    pub miss: f64,
    pub refinements: usize,
    /// Index into the bundle, `None` inside the seed ball.
    pub curve: Option<usize>,
}

#[derive(Clone, Debug)]
pub struct ShootingOutcome {
    pub bundle: GeodesicBundle,
    pub shots: Vec<std::result::Result<Shot, String>>,
}

pub struct Shooter<'a> {
    ham: &'a HamiltonianEvaluator,
    series: &'a EikonalSeries,
    pub cfg: ShootingConfig,
}

struct Approach {
    x: Vec<f64>,
    xi: Vec<f64>,
    xdot: Vec<f64>,
    s: f64,
}

impl<'a> Shooter<'a> {
    pub fn new(
        ham: &'a HamiltonianEvaluator,
        series: &'a EikonalSeries,
        cfg: ShootingConfig,
    ) -> Result<Self> {
        if ham.dim() != series.dim() {
            return Err(Error::DimensionMismatch {
                expected: ham.dim(),
                got: series.dim(),
            });
        }
        if ham.dim() > 2 {
            return Err(Error::InvalidInput(
                "geodesic shooting supports dimension 1 and 2".into(),
            ));
        }
        Ok(Shooter { ham, series, cfg })
    }

    fn rhs(&self, y: &[f64]) -> Result<Vec<f64>> {
        let d = self.ham.dim();
        let (x, xi) = (&y[..d], &y[d..2 * d]);
        let (dx, dxi) = self.ham.vector_field(x, xi)?;
        let ds = dot(xi, &dx);
        let mut out = dx;
        out.extend(dxi);
        out.push(ds);
        Ok(out)
    }

    fn direction(&self, theta: f64) -> Vec<f64> {
        if self.ham.dim() == 1 {
            vec![if theta.cos() >= 0.0 { 1.0 } else { -1.0 }]
        } else {
            vec![theta.cos(), theta.sin()]
        }
    }

    fn seed(&self, u: &[f64]) -> Vec<f64> {
        let x0: Vec<f64> = u.iter().map(|c| self.cfg.r0 * c).collect();
        let mut y = x0.clone();
        y.extend(self.series.gradient(&x0));
        y.push(self.series.value(&x0));
        y
    }

    /// Integrates from the seed in direction `u` until `stop` or |x| > r_stop.
    pub fn launch(
        &self,
        u: &[f64],
        r_stop: f64,
        stop: &mut dyn FnMut(&[f64], &[f64]) -> bool,
    ) -> Result<Geodesic> {
        let d = self.ham.dim();
        let y0 = self.seed(u);
        let h0 = self.ham.h_tilde(&y0[..d], &y0[d..2 * d])?;
        let mut drift = 0.0f64;
        let mut drift_fail = None;
        let mut rhs = |_t: f64, y: &[f64]| self.rhs(y);
        let mut stop_fn = |t: f64, y: &[f64]| -> bool {
            let (x, xi) = (&y[..d], &y[d..2 * d]);
            match self.ham.h_tilde(x, xi) {
                Ok(h) => {
                    let dr = (h - h0).abs();
                    drift = drift.max(dr);
                    if dr > self.cfg.drift_tol * t.max(1.0) {
                        drift_fail = Some(dr);
                        return true;
                    }
                }
                Err(_) => return true,
            }
            if norm(x) > r_stop {
                return true;
            }
            match self.ham.fiber_derivative(x, xi) {
                Ok(v) => stop(x, &v),
                Err(_) => true,
            }
        };
        let traj = self
            .cfg
            .ode
            .integrate(&mut rhs, 0.0, &y0, self.cfg.t_max, &mut stop_fn)?;
        if let Some(dr) = drift_fail {
            return Err(Error::EnergyDrift {
                drift: dr,
                tol: self.cfg.drift_tol,
            });
        }
        Ok(Geodesic {
            seed_direction: u.to_vec(),
            traj,
            max_drift: drift,
        })
    }

    fn state_at(&self, g: &Geodesic, i: usize, t: f64) -> Result<Vec<f64>> {
        if t == g.traj.t[i] {
            return Ok(g.traj.y[i].clone());
        }
        let mut rhs = |_t: f64, y: &[f64]| self.rhs(y);
        let (y, _, _) = self.cfg.ode.step(
            &mut rhs,
            g.traj.t[i],
            &g.traj.y[i],
            &g.traj.f[i],
            t - g.traj.t[i],
        )?;
        Ok(y)
    }

    fn approach_fn(&self, y: &[f64], target: &[f64]) -> Result<(f64, Approach)> {
        let d = self.ham.dim();
        let x = y[..d].to_vec();
        let xi = y[d..2 * d].to_vec();
        let xdot = self.ham.fiber_derivative(&x, &xi)?;
        let diff: Vec<f64> = x.iter().zip(target).map(|(a, b)| a - b).collect();
        let g = dot(&diff, &xdot);
        Ok((
            g,
            Approach {
                x,
                xi,
                xdot,
                s: y[2 * d],
            },
        ))
    }

    /// First closest approach to `target` along `g`, refined with exact steps.
    /// Base curve resampled with `per_step` exact sub-steps per accepted step, keeping |x| ≥ r_min.
    pub fn refined_curve(&self, g: &Geodesic, r_min: f64, per_step: usize) -> Result<Curve> {
        let d = self.ham.dim();
        let mut t = Vec::new();
        let mut p = Vec::new();
        let mut v = Vec::new();
        for i in 0..g.len() {
            let subs = if i + 1 < g.len() { per_step.max(1) } else { 1 };
            for k in 0..subs {
                let tt = if k == 0 {
                    g.traj.t[i]
                } else {
                    g.traj.t[i] + (g.traj.t[i + 1] - g.traj.t[i]) * k as f64 / subs as f64
                };
                let y = self.state_at(g, i, tt)?;
                if norm(&y[..d]) >= r_min {
                    v.push(self.ham.fiber_derivative(&y[..d], &y[d..2 * d])?);
                    p.push(y[..d].to_vec());
                    t.push(tt);
                }
            }
        }
        Curve::new(t, p, v)
    }

    /// With `exact = false` the stored steps are interpolated instead of re-integrated.
    fn closest_approach(
        &self,
        g: &Geodesic,
        target: &[f64],
        exact: bool,
    ) -> Result<Option<Approach>> {
        let d = self.ham.dim();
        let gval = |i: usize| -> f64 {
            let diff: Vec<f64> = g.x(i).iter().zip(target).map(|(a, b)| a - b).collect();
            dot(&diff, &g.traj.f[i][..d])
        };
        if gval(0) >= 0.0 {
            return Ok(None);
        }
        for i in 1..g.len() {
            let cur = gval(i);
            if cur >= 0.0 {
                let (t0, t1) = (g.traj.t[i - 1], g.traj.t[i]);
                let state = |t: f64| -> Result<Vec<f64>> {
                    if exact {
                        self.state_at(g, i - 1, t)
                    } else {
                        Ok(g.traj.hermite(i - 1, t))
                    }
                };
                let xtol = if exact { 1e-15 } else { 1e-9 } * t1.abs().max(1.0);
                let (tc, _, _) = brent(
                    |t| Ok(self.approach_fn(&state(t)?, target)?.0),
                    t0,
                    t1,
                    xtol,
                    0.0,
                    100,
                )?;
                let y = state(tc)?;
                return Ok(Some(self.approach_fn(&y, target)?.1));
            }
        }
        Ok(None)
    }

    fn signed_miss(&self, a: &Approach, target: &[f64]) -> f64 {
        if a.x.len() == 1 {
            return a.x[0] - target[0];
        }
        let w = [target[0] - a.x[0], target[1] - a.x[1]];
        (a.xdot[0] * w[1] - a.xdot[1] * w[0]) / norm(&a.xdot)
    }

    /// φ(target) ≈ s + ξ·(target − x) at the closest approach.
    fn value(a: &Approach, target: &[f64]) -> f64 {
        a.s + a
            .xi
            .iter()
            .zip(target.iter().zip(&a.x))
            .map(|(p, (t, x))| p * (t - x))
            .sum::<f64>()
    }

    fn r_stop(&self, target: &[f64]) -> f64 {
        1.5 * norm(target) + 0.1
    }

    /// Distance at a single target, refining the seed direction in d = 2.
    pub fn shoot_target(
        &self,
        target: &[f64],
        fan: &[(f64, Geodesic)],
    ) -> Result<(Shot, Option<Geodesic>)> {
        let r = norm(target);
        if r <= self.cfg.r0 * (1.0 + 1e-12) {
            return Ok((
                Shot {
                    target: target.to_vec(),
                    distance: self.series.value(target),
                    gradient: self.series.gradient(target),
                    miss: 0.0,
                    refinements: 0,
                    curve: None,
                },
                None,
            ));
        }
        let unreachable = |reason: String| Error::Unreachable {
            target: target.to_vec(),
            reason,
        };
        if self.ham.dim() == 1 {
            let u = vec![target[0].signum()];
            let g = self.launch(&u, self.r_stop(target), &mut past(target))?;
            let a = self
                .closest_approach(&g, target, true)?
                .ok_or_else(|| unreachable("trajectory does not reach the target".into()))?;
            return Ok((
                Shot {
                    target: target.to_vec(),
                    distance: a.s,
                    gradient: a.xi.clone(),
                    miss: (a.x[0] - target[0]).abs(),
                    refinements: 0,
                    curve: None,
                },
                Some(g),
            ));
        }
        // bracket from the fan
        let mut best: Option<(f64, f64, f64, f64, f64)> = None;
        let mut scored = Vec::with_capacity(fan.len());
        for (th, g) in fan {
            let m = self.closest_approach(g, target, false)?.map(|a| {
                (
                    self.signed_miss(&a, target),
                    norm(
                        &a.x.iter()
                            .zip(target)
                            .map(|(p, q)| p - q)
                            .collect::<Vec<_>>(),
                    ),
                )
            });
            scored.push((*th, m));
        }
        for k in 0..scored.len() {
            let (t0, m0) = scored[k];
            let (mut t1, m1) = scored[(k + 1) % scored.len()];
            if k + 1 == scored.len() {
                t1 += 2.0 * std::f64::consts::PI;
            }
            if let (Some((s0, d0)), Some((s1, d1))) = (m0, m1) {
                if s0.signum() != s1.signum() {
                    let dist = d0.max(d1);
                    if best.is_none_or(|b| dist < b.2) {
                        best = Some((t0, t1, dist, s0, s1));
                    }
                }
            }
        }
        let (ta, tb, _, ma, mb) = best.ok_or_else(|| {
            unreachable("no sign change of the miss over the direction fan".into())
        })?;
        let stop = self.r_stop(target);
        let miss_at = |th: f64| -> Result<f64> {
            let g = self.launch(&self.direction(th), stop, &mut past(target))?;
            let a = self
                .closest_approach(&g, target, true)?
                .ok_or_else(|| unreachable("refined trajectory lost the target".into()))?;
            Ok(self.signed_miss(&a, target))
        };
        let (th, _, iters) = brent_from(
            miss_at,
            ta,
            tb,
            ma,
            mb,
            1e-15,
            self.cfg.hit_tol,
            self.cfg.max_refine,
        )
        .map_err(|e| match e {
            Error::NoConvergence { .. } => unreachable(format!(
                "direction refinement exhausted {} iterations",
                self.cfg.max_refine
            )),
            other => other,
        })?;
        let g = self.launch(&self.direction(th), stop, &mut past(target))?;
        let a = self
            .closest_approach(&g, target, true)?
            .ok_or_else(|| unreachable("refined trajectory lost the target".into()))?;
        let miss = self.signed_miss(&a, target).abs();
        if miss > 10.0 * self.cfg.hit_tol {
            return Err(unreachable(format!("miss {miss:e} after refinement")));
        }
        Ok((
            Shot {
                target: target.to_vec(),
                distance: Self::value(&a, target),
                gradient: a.xi.clone(),
                miss,
                refinements: iters,
                curve: None,
            },
            Some(g),
        ))
    }

    /// The initial fan of seed directions integrated to radius `r_stop`.
    pub fn fan(&self, r_stop: f64) -> Result<Vec<(f64, Geodesic)>> {
        if self.ham.dim() == 1 {
            return Ok(Vec::new());
        }
        (0..self.cfg.fan)
            .into_par_iter()
            .map(|k| {
                let th = 2.0 * std::f64::consts::PI * k as f64 / self.cfg.fan as f64;
                Ok((
                    th,
                    self.launch(&self.direction(th), r_stop, &mut |_, _| false)?,
                ))
            })
            .collect()
    }
}

/// Stops a launch once the curve starts moving away from `target`.
fn past(target: &[f64]) -> impl FnMut(&[f64], &[f64]) -> bool + '_ {
    move |x, v| {
        x.iter()
            .zip(target)
            .zip(v)
            .map(|((a, b), c)| (a - b) * c)
            .sum::<f64>()
            >= 0.0
    }
}

/// Shoots every target; failures are recorded per target.
pub fn shoot_distance(
    ham: &HamiltonianEvaluator,
    series: &EikonalSeries,
    targets: &[Vec<f64>],
    cfg: &ShootingConfig,
) -> Result<ShootingOutcome> {
    let shooter = Shooter::new(ham, series, cfg.clone())?;
    let rmax = targets.iter().map(|t| norm(t)).fold(0.0, f64::max);
    let fan = shooter.fan(1.5 * rmax + 0.1)?;
    let results: Vec<Result<(Shot, Option<Geodesic>)>> = targets
        .par_iter()
        .map(|t| shooter.shoot_target(t, &fan))
        .collect();
    let mut bundle = GeodesicBundle::default();
    let mut shots = Vec::with_capacity(targets.len());
    for r in results {
        match r {
            Ok((mut shot, g)) => {
                if let Some(g) = g {
                    shot.curve = Some(bundle.curves.len());
                    bundle.curves.push(g);
                }
                shots.push(Ok(shot));
            }
            Err(e) => shots.push(Err(e.to_string())),
        }
    }
    Ok(ShootingOutcome { bundle, shots })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::finsler::FinslerEvaluator;
    use crate::stencil::{PotentialSpec, StencilField};
    use std::sync::Arc;

    fn oned() -> HamiltonianEvaluator {
        HamiltonianEvaluator::new(
            Arc::new(StencilField::laplacian(1)),
            Arc::new(PotentialSpec::quadratic(&[1.0])),
        )
        .unwrap()
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
    fn one_d_matches_closed_form() {
        let h = oned();
        let s = EikonalSeries::expand(&h, 4).unwrap();
        let out = shoot_distance(
            &h,
            &s,
            &[vec![1.0], vec![-1.0], vec![2.5], vec![1e-3]],
            &ShootingConfig::default(),
        )
        .unwrap();
        for shot in &out.shots {
            let shot = shot.as_ref().unwrap();
            let x = shot.target[0];
            assert!(
                (shot.distance - d_exact(x)).abs() < 1e-8,
                "x={x}: {} vs {}",
                shot.distance,
                d_exact(x)
            );
        }
        let seed = out.shots[3].as_ref().unwrap();
        assert_eq!(seed.distance, s.value(&[1e-3]));
        assert!(out.bundle.max_drift() < 1e-8);
    }

    #[test]
    fn length_rate_equals_ell() {
        let h = Arc::new(oned());
        let s = EikonalSeries::expand(&h, 4).unwrap();
        let f = FinslerEvaluator::new(h.clone());
        let out = shoot_distance(&h, &s, &[vec![1.5]], &ShootingConfig::default()).unwrap();
        let g = &out.bundle.curves[0];
        for i in (0..g.len()).step_by(3) {
            let rate = g.traj.f[i][2];
            let l = f.ell(g.x(i), g.velocity(i)).unwrap();
            assert!((rate - l).abs() <= 1e-6, "{rate} vs {l}");
        }
    }

    #[test]
    fn isotropic_2d_reduces_to_1d() {
        // separable: d(x1,x2) = d1(x1) + d1(x2)
        let h = HamiltonianEvaluator::new(
            Arc::new(StencilField::laplacian(2)),
            Arc::new(PotentialSpec::quadratic(&[1.0, 1.0])),
        )
        .unwrap();
        let s = EikonalSeries::expand(&h, 4).unwrap();
        let targets = vec![vec![0.8, 0.0], vec![0.5, 0.5], vec![-0.3, 0.7]];
        let out = shoot_distance(&h, &s, &targets, &ShootingConfig::default()).unwrap();
        for shot in &out.shots {
            let shot = shot.as_ref().unwrap();
            let want = d_exact(shot.target[0]) + d_exact(shot.target[1]);
            assert!(
                (shot.distance - want).abs() < 1e-7,
                "{:?}: {} vs {want}",
                shot.target,
                shot.distance
            );
        }
    }

    #[test]
    fn csv_export() {
        let h = oned();
        let s = EikonalSeries::expand(&h, 4).unwrap();
        let out = shoot_distance(&h, &s, &[vec![0.5]], &ShootingConfig::default()).unwrap();
        let mut buf = Vec::new();
        out.bundle.curves[0].write_csv(&mut buf).unwrap();
        assert!(String::from_utf8(buf)
            .unwrap()
            .starts_with("t,x1,xi1,length"));
    }
}
