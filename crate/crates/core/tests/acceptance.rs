//! One PASS/FAIL line per acceptance criterion.
//!
//! Lines marked `expected` are criteria that cannot hold for the configured
//! example; the binary fails on any other FAIL and on an unexpected PASS.

use std::path::Path;
use std::sync::Arc;
use std::time::Instant;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use agmon_core::agmon::checks::eikonal_inequality_check;
use agmon_core::agmon::jacobi::{verify_jacobi, JacobiOptions};
use agmon_core::agmon::shooting::Shooter;
use agmon_core::agmon::{
    build_distance_field, dijkstra_distance, shoot_distance, EikonalSeries, ShootingConfig,
};
use agmon_core::config::RunConfig;
use agmon_core::curve::Curve;
use agmon_core::expr::Expr;
use agmon_core::finsler::FinslerEvaluator;
use agmon_core::hamiltonian::HamiltonianEvaluator;
use agmon_core::lattice::LatticeDomain;
use agmon_core::markov::{chain_to_operator, check_chain_operator, metropolis_chain, two_state};
use agmon_core::operator::{assemble_operator, form_positivity_check, Boundary};
use agmon_core::quadrature::composite_gauss;
use agmon_core::spectrum::eigen::symmetric_eigen;
use agmon_core::spectrum::weight::sample_field;
use agmon_core::spectrum::{conjugated_form, eigensolve_lowest, run_sweep, SweepOptions};
use agmon_core::stencil::{PotentialSpec, StencilField};
use agmon_core::validate::sample_grid;
use agmon_core::Result;

const SEED: u64 = 20240;
const EXAMPLES: [&str; 3] = ["oned", "twod_iso", "twod_aniso"];

#[derive(Default)]
struct Tally {
    pass: usize,
    fail: usize,
    expected_fail: usize,
    unexpected: usize,
}

impl Tally {
    fn report(&mut self, id: &str, what: &str, ok: bool, detail: &str) {
        self.report_expecting(id, what, ok, detail, None);
    }

    fn report_expecting(
        &mut self,
        id: &str,
        what: &str,
        ok: bool,
        detail: &str,
        expected_failure: Option<&str>,
    ) {
        let tag = if ok { "PASS" } else { "FAIL" };
        match (ok, expected_failure) {
            (true, None) => {
                self.pass += 1;
                println!("{tag} [{id}] {what}: {detail}");
            }
            (false, None) => {
                self.fail += 1;
                self.unexpected += 1;
                println!("{tag} [{id}] {what}: {detail}");
            }
            (false, Some(why)) => {
                self.fail += 1;
                self.expected_fail += 1;
                println!("{tag} [{id}] {what}: {detail} (expected: {why})");
            }
            (true, Some(why)) => {
                self.pass += 1;
                self.unexpected += 1;
                println!(
                    "{tag} [{id}] {what}: {detail} (unexpected pass; was expected to fail: {why})"
                );
            }
        }
    }

    fn error(&mut self, id: &str, what: &str, e: agmon_core::Error) {
        self.report(id, what, false, &format!("error: {e}"));
    }
}

fn load(name: &str) -> RunConfig {
    let p = Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../configs")
        .join(format!("{name}.toml"));
    RunConfig::load(&p).unwrap_or_else(|e| panic!("{}: {e}", p.display()))
}

fn parts(cfg: &RunConfig) -> Result<(StencilField, PotentialSpec)> {
    Ok((cfg.stencil_field()?, cfg.potential_spec()?))
}

fn hamiltonian(cfg: &RunConfig) -> Result<Arc<HamiltonianEvaluator>> {
    let (s, p) = parts(cfg)?;
    Ok(Arc::new(HamiltonianEvaluator::new(
        Arc::new(s),
        Arc::new(p),
    )?))
}

fn uniform_point(rng: &mut ChaCha8Rng, bounds: &[[f64; 2]]) -> Vec<f64> {
    bounds.iter().map(|b| rng.gen_range(b[0]..b[1])).collect()
}

fn min_eig(m: &DMatrix<f64>) -> f64 {
    m.clone().symmetric_eigenvalues().min()
}

fn sci(v: &[f64]) -> String {
    let parts: Vec<String> = v.iter().map(|x| format!("{x:.2e}")).collect();
    format!("[{}]", parts.join(", "))
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

// ---------------------------------------------------------------------------

fn conjugation(t: &mut Tally) {
    for name in EXAMPLES {
        let what = format!("conjugation identity, {name}");
        let run = || -> Result<(f64, usize)> {
            let cfg = load(name);
            let (s, p) = parts(&cfg)?;
            let eps = 0.1;
            let dom = LatticeDomain::from_box(eps, &cfg.domain.bounds)?;
            let op = assemble_operator(&dom, &s, &p, cfg.spectrum.order, Boundary::Dirichlet)?;
            let mut rng = ChaCha8Rng::seed_from_u64(SEED);
            let mut worst: f64 = 0.0;
            for _ in 0..100 {
                // smooth part with slope up to ~3 plus site noise, scaled by ε
                let k: Vec<f64> = (0..dom.dim()).map(|_| rng.gen_range(-3.0..3.0)).collect();
                let c: f64 = rng.gen_range(0.0..1.5);
                let noise: f64 = rng.gen_range(0.0..0.5);
                let phi: Vec<f64> = (0..dom.len())
                    .map(|i| {
                        let x = dom.point(i);
                        let kx: f64 = k.iter().zip(&x).map(|(a, b)| a * b).sum();
                        c * kx.sin() + eps * noise * rng.gen_range(-1.0..1.0)
                    })
                    .collect();
                let v: Vec<f64> = (0..dom.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
                let f = conjugated_form(&op, &phi, &v)?;
                worst = worst.max(f.gap() / f.scale);
            }
            Ok((worst, dom.len()))
        };
        match run() {
            Ok((w, n)) => t.report(
                "1",
                &what,
                w <= 1e-12,
                &format!("100 pairs on {n} sites, worst relative gap {w:.2e} (tol 1e-12)"),
            ),
            Err(e) => t.error("1", &what, e),
        }
    }
}

fn residual_order(t: &mut Tally) {
    let even =
        "the 1D potential is even, so odd series terms vanish and the residual gains one order";
    let run = |cfg: &RunConfig, dir: &[f64], n: usize| -> Result<f64> {
        let h = hamiltonian(cfg)?;
        let s = EikonalSeries::expand(&h, n)?;
        s.residual_slope(&h, dir, 1e-3, 1e-1, 12)
    };
    let oned = load("oned");
    for n in 2..=4 {
        let what = format!("eikonal residual slope, oned, N={n}");
        match run(&oned, &[1.0], n) {
            Ok(sl) => t.report_expecting(
                "2",
                &what,
                (sl - (n + 1) as f64).abs() <= 0.3,
                &format!("slope {sl:.3}, target {} ± 0.3", n + 1),
                (n % 2 == 0).then_some(even),
            ),
            Err(e) => t.error("2", &what, e),
        }
    }
    let what = "quadratic coefficient, twod_iso";
    let iso = || -> Result<f64> {
        let h = hamiltonian(&load("twod_iso"))?;
        let s = EikonalSeries::expand(&h, 2)?;
        let target = DMatrix::<f64>::identity(2, 2) / 2f64.sqrt();
        Ok((s.quadratic() - target).abs().max())
    };
    match iso() {
        Ok(g) => t.report(
            "2",
            what,
            g <= 1e-10,
            &format!("|A − I/√2| = {g:.2e} (tol 1e-10)"),
        ),
        Err(e) => t.error("2", what, e),
    }
    // supplementary: a configuration without the parity degeneracy
    let aniso = load("twod_aniso");
    for n in 2..=4 {
        let what = format!("eikonal residual slope, twod_aniso, N={n} (supplementary)");
        match run(&aniso, &[0.8, 0.6], n) {
            Ok(sl) => t.report(
                "2s",
                &what,
                (sl - (n + 1) as f64).abs() <= 0.3,
                &format!("slope {sl:.3}, target {} ± 0.3", n + 1),
            ),
            Err(e) => t.error("2s", &what, e),
        }
    }
}

fn oracle(x: f64) -> f64 {
    composite_gauss(|s| Ok((1.0 + s * s / 4.0).acosh()), 0.0, x.abs(), 32, 12).unwrap()
}

fn three_way(t: &mut Tally) {
    let cfg = load("oned");
    let xs = [0.25, 0.5, 1.0];
    let what = "closed form vs shooting, oned";
    let shoot = || -> Result<Vec<f64>> {
        let h = hamiltonian(&cfg)?;
        let s = EikonalSeries::expand(&h, cfg.distance.series_order)?;
        let targets: Vec<Vec<f64>> = xs.iter().map(|&x| vec![x]).collect();
        let out = shoot_distance(&h, &s, &targets, &ShootingConfig::default())?;
        out.shots
            .into_iter()
            .zip(&xs)
            .map(|(r, &x)| {
                r.map(|s| (s.distance - oracle(x)).abs())
                    .map_err(agmon_core::Error::InvalidInput)
            })
            .collect()
    };
    match shoot() {
        Ok(errs) => {
            let w = errs.iter().cloned().fold(0.0, f64::max);
            t.report(
                "3",
                what,
                w <= 1e-6,
                &format!("abs errors {} at x = {xs:?} (tol 1e-6)", sci(&errs)),
            )
        }
        Err(e) => t.error("3", what, e),
    }
    let what = "closed form vs Dijkstra (h = 1e-3, r = 2), oned";
    let dij = || -> Result<Vec<f64>> {
        let h = hamiltonian(&cfg)?;
        let ev = FinslerEvaluator::new(h);
        let dom = LatticeDomain::from_box(1e-3, &[[-1.5, 1.5]])?;
        let f = dijkstra_distance(&ev, &dom, 2)?;
        Ok(xs
            .iter()
            .map(|&x| {
                let i = dom.index_of(&[(x / 1e-3).round() as i64]).expect("inside");
                (f.value(i) - oracle(x)).abs() / oracle(x)
            })
            .collect())
    };
    match dij() {
        Ok(errs) => {
            let w = errs.iter().cloned().fold(0.0, f64::max);
            t.report(
                "3",
                what,
                w <= 0.02,
                &format!("relative errors {} (tol 2%)", sci(&errs)),
            )
        }
        Err(e) => t.error("3", what, e),
    }
}

fn jacobi(t: &mut Tally) {
    for name in ["twod_iso", "twod_aniso"] {
        let cfg = load(name);
        let run = || -> Result<Vec<(Vec<f64>, f64, f64, Curve)>> {
            let h = hamiltonian(&cfg)?;
            let ev = FinslerEvaluator::new(h.clone());
            let s = EikonalSeries::expand(&h, cfg.distance.series_order)?;
            let sc = ShootingConfig::default();
            let out = shoot_distance(&h, &s, &cfg.distance.jacobi_targets, &sc)?;
            let shooter = Shooter::new(&h, &s, sc)?;
            let mut rows = Vec::new();
            for (k, shot) in out.shots.into_iter().enumerate() {
                let shot = shot.map_err(agmon_core::Error::InvalidInput)?;
                let g = &out.bundle.curves[shot.curve.expect("target outside the seed ball")];
                let c = shooter.refined_curve(g, 0.1, 3)?;
                let opts = JacobiOptions {
                    perturbations: 20,
                    seed: SEED + k as u64,
                    ..JacobiOptions::default()
                };
                let rep = verify_jacobi(&ev, &c, &opts)?;
                rows.push((shot.target, rep.max_ratio, rep.threshold, c));
            }
            Ok(rows)
        };
        match run() {
            Ok(rows) => {
                for (target, ratio, thr, c) in &rows {
                    t.report(
                        "4",
                        &format!("first variation of shot geodesic, {name}, target {target:?}"),
                        ratio <= thr,
                        &format!(
                            "max |a|/(|b|δ₀) = {ratio:.2e} over 20 perturbations (tol {thr:.0e})"
                        ),
                    );
                    if name == "twod_aniso" {
                        let what = format!("straight-line control, {name}, target {target:?}");
                        let p = c.points()[0].clone();
                        let q = c.points().last().unwrap().clone();
                        let line = Curve::from_fn(0.0, 1.0, 64, |s| {
                            (
                                p.iter().zip(&q).map(|(a, b)| a + s * (b - a)).collect(),
                                p.iter().zip(&q).map(|(a, b)| b - a).collect(),
                            )
                        });
                        let res = line.and_then(|l| {
                            let ev = FinslerEvaluator::new(hamiltonian(&cfg)?);
                            verify_jacobi(
                                &ev,
                                &l,
                                &JacobiOptions {
                                    perturbations: 20,
                                    seed: SEED,
                                    ..JacobiOptions::default()
                                },
                            )
                        });
                        match res {
                            Ok(neg) => t.report(
                                "4",
                                &what,
                                neg.max_ratio >= 10.0 * thr,
                                &format!(
                                    "max ratio {:.2e}, {:.0}× the bound (need ≥ 10×)",
                                    neg.max_ratio,
                                    neg.max_ratio / thr
                                ),
                            ),
                            Err(e) => t.error("4", &what, e),
                        }
                    }
                }
            }
            Err(e) => t.error("4", &format!("first variation, {name}"), e),
        }
    }
}

fn eikonal_inequality(t: &mut Tally) {
    for name in EXAMPLES {
        let cfg = load(name);
        let what = format!("eikonal inequality on smooth sites, {name}");
        let run = || -> Result<(f64, usize)> {
            let h = hamiltonian(&cfg)?;
            let ev = FinslerEvaluator::new(h.clone());
            let dom = LatticeDomain::from_box(cfg.distance.h, &cfg.distance_bounds())?;
            let b = build_distance_field(&ev, &dom, &cfg.field_options())?;
            let r = eikonal_inequality_check(&b.field, &h, 1e-5);
            Ok((r.worst_smooth, r.smooth_sites))
        };
        match run() {
            Ok((w, n)) => t.report(
                "5",
                &what,
                n > 0 && w <= 1e-5,
                &format!("max h̃₀(x, ∇d⁰) = {w:.2e} over {n} sites (tol 1e-5)"),
            ),
            Err(e) => t.error("5", &what, e),
        }
    }
}

fn decay(t: &mut Tally) {
    let cfg = load("oned");
    let run = |t: &mut Tally| -> Result<()> {
        let (s, p) = parts(&cfg)?;
        let h = hamiltonian(&cfg)?;
        let ev = FinslerEvaluator::new(h);
        let opts: SweepOptions = cfg.sweep_options(SEED);
        let dom = LatticeDomain::from_box(cfg.distance.h, &cfg.distance_bounds())?;
        let field = build_distance_field(&ev, &dom, &cfg.field_options())?.field;
        let provider = |d: &LatticeDomain| sample_field(&field, d);
        let rep = run_sweep(&s, &p, &provider, &opts)?;
        let b = rep.certificate.smallest_passing_b;
        let detail = match b.and_then(|b| rep.certificate.row(b)) {
            Some(r) => format!(
                "ε = {:?}, smallest passing B = {}, max/min W = {:.3}, slope {:.4}",
                opts.epsilons, r.b, r.ratio, r.slope
            ),
            None => format!(
                "no B in {:?} passed; ratios {:?}",
                opts.decay.b_list,
                rep.certificate
                    .rows
                    .iter()
                    .map(|r| r.ratio)
                    .collect::<Vec<_>>()
            ),
        };
        let ok = rep.passed && b.is_some_and(|b| rep.certificate.row(b).unwrap().ratio <= 10.0);
        t.report("6", "weighted ground-state norm bounded, oned", ok, &detail);

        let what = "inflated distance (×1.5) control, oned";
        let neg = run_sweep(
            &s,
            &p,
            &provider,
            &SweepOptions {
                distance_scale: 1.5,
                ..opts.clone()
            },
        )?;
        match b.and_then(|b| neg.certificate.row(b)) {
            Some(r) => t.report(
                "6",
                what,
                !r.passed && r.min_step_growth >= 10.0,
                &format!(
                    "at B = {}: smallest growth per halving {:.3e} (need ≥ 10)",
                    r.b, r.min_step_growth
                ),
            ),
            None => t.report("6", what, false, "no reference B from the real sweep"),
        }
        Ok(())
    };
    if let Err(e) = run(t) {
        t.error("6", "decay certificate, oned", e);
    }
}

fn positivity(t: &mut Tally) {
    for name in EXAMPLES {
        let cfg = load(name);
        let run = || -> Result<(f64, f64, f64, f64)> {
            let (s, p) = parts(&cfg)?;
            let dom = LatticeDomain::from_box(0.1, &cfg.domain.bounds)?;
            let f = form_positivity_check(&dom, &s, 0, 1000, SEED)?;
            let op = assemble_operator(&dom, &s, &p, 0, Boundary::Dirichlet)?;
            let vmin = op.potential().iter().cloned().fold(f64::INFINITY, f64::min);
            let e = eigensolve_lowest(&op, 1, 1e-10)?.values[0];
            let zero = PotentialSpec::new(dom.dim(), Expr::Const(0.0), vec![], None)?;
            let op0 = assemble_operator(&dom, &s, &zero, 0, Boundary::Dirichlet)?;
            let e0 = eigensolve_lowest(&op0, 1, 1e-10)?.values[0];
            Ok((f.min_ratio, vmin, e, e0))
        };
        match run() {
            Ok((q, vmin, e, e0)) => {
                t.report(
                    "7",
                    &format!("form positivity of T, {name}"),
                    q >= -1e-12,
                    &format!("min Rayleigh quotient over 1000 vectors {q:.3e} (tol −1e-12)"),
                );
                t.report(
                    "7",
                    &format!("Dirichlet eigenvalues nonnegative, {name}"),
                    vmin >= 0.0 && e >= 0.0 && e0 >= 0.0,
                    &format!(
                        "min V on sites {vmin:.2e}; lowest eigenvalue {e:.4e}, with V = 0 {e0:.4e}"
                    ),
                );
            }
            Err(e) => t.error("7", &format!("positivity, {name}"), e),
        }
    }
}

fn convexity(t: &mut Tally) {
    for name in EXAMPLES {
        let cfg = load(name);
        let bounds = cfg.domain.bounds.clone();
        let run = || -> Result<(f64, f64, usize, usize)> {
            let (s, p) = parts(&cfg)?;
            let h = HamiltonianEvaluator::new(Arc::new(s), Arc::new(p))?
                .with_alpha_samples(&sample_grid(&bounds, 10))?;
            let d = h.dim();
            let mut rng = ChaCha8Rng::seed_from_u64(SEED);
            let mut worst = f64::INFINITY;
            for _ in 0..1000 {
                let x = uniform_point(&mut rng, &bounds);
                let xi: Vec<f64> = (0..d).map(|_| rng.gen_range(-2.0..2.0)).collect();
                worst = worst.min(min_eig(&h.xi_hessian(&x, &xi)?));
            }
            let mut inversions = 0;
            let mut rays = 0;
            for _ in 0..1000 {
                let x = uniform_point(&mut rng, &bounds);
                let u: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect();
                let nu = norm(&u);
                if nu < 1e-3 {
                    continue;
                }
                rays += 1;
                let mut prev = f64::NEG_INFINITY;
                for k in 0..=30 {
                    let lam = 0.1 * k as f64;
                    let v: Vec<f64> = u.iter().map(|c| lam * c / nu).collect();
                    let e = h.energy(&x, &v)?;
                    if !(e > prev) {
                        inversions += 1;
                    }
                    prev = e;
                }
            }
            Ok((h.alpha_floor(), worst, inversions, rays))
        };
        match run() {
            Ok((alpha, worst, inv, rays)) => {
                t.report(
                    "8",
                    &format!("hyperconvexity, {name}"),
                    alpha > 0.0 && worst >= alpha,
                    &format!("min ξ-Hessian eigenvalue {worst:.4} ≥ alpha_floor {alpha:.4} at 1000 (x, ξ)"),
                );
                t.report(
                    "8",
                    &format!("monotonicity of λ ↦ E(x, λu), {name}"),
                    inv == 0,
                    &format!("{inv} inversions on {rays} rays × 31 values of λ"),
                );
            }
            Err(e) => t.error("8", &format!("hyperconvexity, {name}"), e),
        }
    }
}

fn markov(t: &mut Tally) {
    for (p, q) in [(0.3, 0.3), (0.1, 0.5)] {
        let what = format!("two-state chain eigenvalues, (p, q) = ({p}, {q})");
        let run = || -> Result<Vec<f64>> {
            let c = two_state(p, q)?;
            let co = chain_to_operator(&c)?;
            Ok(symmetric_eigen(co.op.to_dense())?.0)
        };
        match run() {
            Ok(ev) => {
                let gap = ev[0].abs().max((ev[1] - (p + q)).abs());
                t.report(
                    "9",
                    &what,
                    gap <= 1e-12,
                    &format!("{ev:.15?} vs {{0, {}}}, gap {gap:.1e} (tol 1e-12)", p + q),
                );
            }
            Err(e) => t.error("9", &what, e),
        }
    }
    let cfg = load("markov_metropolis");
    let run = || -> Result<(f64, f64, usize)> {
        let v = cfg.markov_potential()?.expect("metropolis config");
        let mut ground: f64 = 0.0;
        let mut round: f64 = 0.0;
        for &eps in &cfg.domain.epsilons {
            let dom = LatticeDomain::from_box(eps, &cfg.domain.bounds)?;
            let c = metropolis_chain(&dom, &v)?;
            let co = chain_to_operator(&c)?;
            let r = check_chain_operator(&c, &co)?;
            ground = ground.max(r.ground_residual);
            round = round.max(r.round_trip_gap);
        }
        Ok((ground, round, cfg.domain.epsilons.len()))
    };
    match run() {
        Ok((g, r, n)) => {
            t.report(
                "9",
                "H μ^{1/2} = 0, Metropolis one-well chain",
                g <= 1e-13,
                &format!("max ‖H μ^(1/2)‖∞ over {n} values of ε = {g:.1e} (tol 1e-13)"),
            );
            t.report(
                "9",
                "operator round trip, Metropolis one-well chain",
                r <= 1e-13,
                &format!("max entrywise gap {r:.1e} (tol 1e-13)"),
            );
        }
        Err(e) => t.error("9", "Metropolis one-well chain", e),
    }
}

fn finsler_axioms(t: &mut Tally) {
    for name in EXAMPLES {
        let cfg = load(name);
        let bounds = cfg.domain.bounds.clone();
        let run = || -> Result<(f64, f64, f64, f64)> {
            let ev = FinslerEvaluator::new(hamiltonian(&cfg)?);
            let d = ev.dim();
            let mut rng = ChaCha8Rng::seed_from_u64(SEED);
            let (mut hom, mut even, mut euler) = (0.0f64, 0.0f64, 0.0f64);
            let mut gmin = f64::INFINITY;
            let mut n = 0;
            while n < 100 {
                let x = uniform_point(&mut rng, &bounds);
                let v: Vec<f64> = (0..d).map(|_| rng.gen_range(-2.0..2.0)).collect();
                if norm(&x) < 0.05 || norm(&v) < 1e-3 {
                    continue;
                }
                n += 1;
                let l = ev.ell(&x, &v)?;
                for s in [-2.0, -0.5, 0.5, 2.0] {
                    let sv: Vec<f64> = v.iter().map(|c| s * c).collect();
                    let ls = ev.ell(&x, &sv)?;
                    hom = hom.max((ls - f64::abs(s) * l).abs() / (f64::abs(s) * l));
                }
                let mv: Vec<f64> = v.iter().map(|c| -c).collect();
                even = even.max((ev.ell(&x, &mv)? - l).abs() / l);
                let g = ev.metric_tensor(&x, &v)?;
                gmin = gmin.min(min_eig(&g));
                let gv = &g * nalgebra::DVector::from_column_slice(&v);
                let vgv: f64 = v.iter().zip(gv.iter()).map(|(a, b)| a * b).sum();
                euler = euler.max((vgv - l * l).abs() / (l * l));
            }
            Ok((hom, even, gmin, euler))
        };
        match run() {
            Ok((hom, even, gmin, euler)) => {
                t.report(
                    "10",
                    &format!("homogeneity and evenness of ℓ, {name}"),
                    hom <= 1e-9 && even <= 1e-9,
                    &format!("relative defects {hom:.1e} and {even:.1e} at 100 (x, v) (tol 1e-9)"),
                );
                t.report(
                    "10",
                    &format!("metric tensor positive definite, {name}"),
                    gmin > 0.0,
                    &format!("smallest eigenvalue over 100 (x, v) {gmin:.3e}"),
                );
                t.report(
                    "10",
                    &format!("Euler relation ⟨v, g v⟩ = ℓ², {name}"),
                    euler <= 1e-6,
                    &format!("max relative gap {euler:.1e} (tol 1e-6)"),
                );
            }
            Err(e) => t.error("10", &format!("Finsler axioms, {name}"), e),
        }
    }
}

fn main() {
    let mut t = Tally::default();
    let start = Instant::now();
    let steps: [(&str, fn(&mut Tally)); 10] = [
        ("conjugation", conjugation),
        ("residual order", residual_order),
        ("distance agreement", three_way),
        ("first variation", jacobi),
        ("eikonal inequality", eikonal_inequality),
        ("decay certificate", decay),
        ("positivity", positivity),
        ("convexity", convexity),
        ("markov bridge", markov),
        ("finsler axioms", finsler_axioms),
    ];
    for (name, f) in steps {
        let t0 = Instant::now();
        f(&mut t);
        eprintln!("  ({name}: {:.1} s)", t0.elapsed().as_secs_f64());
    }
    println!(
        "\n{} passed, {} failed ({} expected), {:.0} s",
        t.pass,
        t.fail,
        t.expected_fail,
        start.elapsed().as_secs_f64()
    );
    if t.unexpected > 0 {
        println!("{} unexpected result(s)", t.unexpected);
        std::process::exit(1);
    }
}
