use std::sync::Arc;

use agmon_core::agmon::{build_distance_field, FieldOptions};
use agmon_core::finsler::FinslerEvaluator;
use agmon_core::hamiltonian::HamiltonianEvaluator;
use agmon_core::lattice::LatticeDomain;
use agmon_core::spectrum::conjugation::v_phi;
use agmon_core::spectrum::sweep::sweep_operator;
use agmon_core::spectrum::weight::{
    sample_field, weight_from_values, weighted_bound, weighted_vector, Cutoff,
};
use agmon_core::spectrum::{run_sweep, split_f, SweepOptions};
use agmon_core::stencil::{PotentialSpec, StencilField};

fn one_d() -> (StencilField, PotentialSpec) {
    (StencilField::laplacian(1), PotentialSpec::quadratic(&[1.0]))
}

fn field_1d(bounds: &[[f64; 2]], h: f64) -> agmon_core::agmon::DistanceField {
    let (s, p) = one_d();
    let ham = HamiltonianEvaluator::new(Arc::new(s), Arc::new(p)).unwrap();
    let ev = FinslerEvaluator::new(Arc::new(ham));
    let dom = LatticeDomain::from_box(h, bounds).unwrap();
    let opts = FieldOptions {
        dijkstra: false,
        ..FieldOptions::default()
    };
    build_distance_field(&ev, &dom, &opts).unwrap().field
}

#[test]
fn ground_state_decay_is_bounded_and_inflated_distance_is_not() {
    let (s, p) = one_d();
    let opts = SweepOptions::default();
    let field = field_1d(&opts.bounds, 0.025);
    let provider = |d: &LatticeDomain| sample_field(&field, d);
    let rep = run_sweep(&s, &p, &provider, &opts).unwrap();
    for e in &rep.entries {
        println!(
            "eps {} E0 {:.6e} refined {} W {:?}",
            e.epsilon, e.ground_energy, e.tail_refined, e.weighted_norms
        );
    }
    for r in &rep.certificate.rows {
        println!(
            "B {} ratio {:.3} slope {:.4} growth {:.3}",
            r.b, r.ratio, r.slope, r.max_step_growth
        );
    }
    assert!(rep.passed);
    assert!(rep.entries.iter().all(|e| e.tail_refined));

    let neg = run_sweep(
        &s,
        &p,
        &provider,
        &SweepOptions {
            distance_scale: 1.5,
            ..opts.clone()
        },
    )
    .unwrap();
    for r in &neg.certificate.rows {
        println!(
            "neg B {} ratio {:.3e} growth {:.3e}",
            r.b, r.ratio, r.min_step_growth
        );
    }
    // judged at the B that certified the real distance
    let b = rep.certificate.smallest_passing_b.unwrap();
    let row = neg.certificate.row(b).unwrap();
    assert!(!row.passed);
    assert!(row.min_step_growth >= 10.0, "{}", row.min_step_growth);
}

#[test]
fn splitting_and_weighted_bound_on_the_ground_state() {
    let (s, p) = one_d();
    let opts = SweepOptions::default();
    let field = field_1d(&opts.bounds, 0.025);
    let provider = |d: &LatticeDomain| sample_field(&field, d);
    let rep = run_sweep(&s, &p, &provider, &opts).unwrap();
    let b_phi = 2.0 * rep.certificate.smallest_passing_b.unwrap();
    let mut sandwich: f64 = 1.0;
    let mut second: Vec<f64> = Vec::new();
    for e in &rep.entries {
        let op = sweep_operator(&s, &p, e.epsilon, &opts).unwrap();
        let w =
            weight_from_values(&e.domain, e.distance.clone(), b_phi, Cutoff::default()).unwrap();
        sandwich = sandwich.max(w.sandwich);
        second.push(w.second_difference);
        let vp = v_phi(&op, &w.phi).unwrap();
        let split = split_f(op.potential(), &vp, e.ground_energy, e.epsilon, b_phi, &w.d).unwrap();
        assert!(
            split.identity_gap <= 1e-14 * (1.0 + op.norm_inf()),
            "{}",
            split.identity_gap
        );
        assert!(split.min_f_over_sqrt_eps > 0.0);
        let v = weighted_vector(&w.phi, e.epsilon, &e.ground_state).unwrap();
        let wb = weighted_bound(&op, &w.phi, e.ground_energy, &split, &v).unwrap();
        println!(
            "eps {} omega- {} outside {} minF {:.3} C {:.3e} formC {:.3e} sandwich {:.3} d2 {:.3}",
            e.epsilon,
            split.omega_minus_size,
            split.omega_minus_outside.len(),
            split.min_f_over_sqrt_eps,
            wb.realized_c,
            wb.form_c,
            w.sandwich,
            w.second_difference
        );
        assert!(wb.realized_c.is_finite());
    }
    assert!(sandwich.is_finite());
    // the continuum sup of |∂²Φ| for this example is about 17
    assert!(second.iter().all(|s| *s < 20.0), "{second:?}");
}
