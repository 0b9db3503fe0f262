use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use agmon_core::agmon::checks::{
    eikonal_inequality_check, lipschitz_check, second_differences, three_way_agreement,
    AgreementReport, EikonalReport, LipschitzReport, SmoothnessReport,
};
use agmon_core::agmon::jacobi::{verify_jacobi, JacobiOptions, JacobiReport};
use agmon_core::agmon::shooting::Shooter;
use agmon_core::agmon::{
    build_distance_field, shoot_distance, EikonalSeries, FieldBuild, ShootingConfig,
};
use agmon_core::config::{DistanceMethod, MarkovConfig, RunConfig};
use agmon_core::finsler::FinslerEvaluator;
use agmon_core::hamiltonian::HamiltonianEvaluator;
use agmon_core::lattice::LatticeDomain;
use agmon_core::markov::{
    chain_to_operator, chain_well_check, check_chain_operator, metropolis_chain, metropolis_decay,
    metropolis_leading_order, read_chain_csv, spectral_bounds_check, two_state, write_chain_csv,
    ChainDecayReport, ChainOperatorReport, ChainWellReport, MarkovChain, SpectralBounds,
};
use agmon_core::operator::{form_positivity_check, FormPositivity};
use agmon_core::spectrum::weight::sample_field;
use agmon_core::spectrum::{run_sweep, SpectralReport};
use agmon_core::validate::{sample_grid, validate_hypotheses, ValidationReport};
use agmon_core::{Error, Result};
use serde::Serialize;

use crate::report::{
    config_hash, create, exit_code_for, write_json, write_rows, Envelope, CERTIFICATE_FAILURE,
    IO_FAILURE, PASS, VALIDATION_FAILURE,
};

/// Operator identities for chains are checked to this absolute level.
const CHAIN_TOL: f64 = 1e-13;

struct Ctx {
    cfg: RunConfig,
    hash: String,
    seed: u64,
    dir: PathBuf,
}

impl Ctx {
    fn emit<T: Serialize>(
        &self,
        command: &str,
        code: u8,
        warnings: Vec<String>,
        report: T,
    ) -> Result<u8> {
        let env = Envelope {
            command,
            config: &self.cfg.name,
            config_hash: &self.hash,
            seed: self.seed,
            exit_code: code,
            passed: code == PASS,
            warnings,
            report,
        };
        write_json(&self.dir, &format!("{command}.json"), &env)?;
        println!(
            "{command} {}: {} (exit {code})",
            self.cfg.name,
            if code == PASS { "pass" } else { "fail" }
        );
        Ok(code)
    }
}

pub fn run(command: &str, config: &Path, out: Option<&Path>, seed: Option<u64>) -> u8 {
    let bytes = match fs::read(config) {
        Ok(b) => b,
        Err(e) => {
            eprintln!("{command}: cannot read {}: {e}", config.display());
            return IO_FAILURE;
        }
    };
    let cfg = match RunConfig::load(config) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("{command}: {e}");
            return exit_code_for(&e);
        }
    };
    let dir = match (out, &cfg.output) {
        (Some(o), _) => o.to_path_buf(),
        (None, Some(o)) => cfg.resolve(o),
        (None, None) => PathBuf::from("out"),
    };
    let ctx = Ctx {
        seed: seed.unwrap_or(cfg.seed),
        hash: config_hash(&bytes),
        cfg,
        dir,
    };
    let result = match command {
        "validate" => validate(&ctx),
        "distance" => distance(&ctx),
        "spectrum" => spectrum(&ctx),
        "markov" => markov(&ctx),
        _ => unreachable!("clap restricts the command set"),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            let code = exit_code_for(&e);
            eprintln!("{command}: {e}");
            #[derive(Serialize)]
            struct Failure {
                error: String,
            }
            let _ = ctx.emit(
                command,
                code,
                vec![],
                Failure {
                    error: e.to_string(),
                },
            );
            code
        }
    }
}

#[derive(Serialize)]
struct ValidateOut {
    hypotheses: ValidationReport,
    form_positivity: FormPositivity,
    form_passed: bool,
}

fn run_validation(ctx: &Ctx) -> Result<ValidateOut> {
    let cfg = &ctx.cfg;
    let stencil = cfg.stencil_field()?;
    let pot = cfg.potential_spec()?;
    let samples = sample_grid(&cfg.domain.bounds, cfg.validation.samples_per_axis);
    let hypotheses = validate_hypotheses(&stencil, &pot, &samples, &cfg.validation_options());
    let dom = LatticeDomain::from_box(cfg.domain.epsilons[0], &cfg.domain.bounds)?;
    let form = form_positivity_check(&dom, &stencil, 0, cfg.validation.form_trials, ctx.seed)?;
    Ok(ValidateOut {
        hypotheses,
        form_passed: form.min_ratio >= -1e-12,
        form_positivity: form,
    })
}

fn validate(ctx: &Ctx) -> Result<u8> {
    let out = run_validation(ctx)?;
    let code = if out.hypotheses.passed && out.form_passed {
        PASS
    } else {
        VALIDATION_FAILURE
    };
    let warnings = out
        .hypotheses
        .clauses
        .iter()
        .filter(|c| !c.passed)
        .map(|c| format!("{}: {}", c.name, c.detail))
        .collect();
    ctx.emit("validate", code, warnings, out)
}

fn evaluators(cfg: &RunConfig) -> Result<FinslerEvaluator> {
    let ham = HamiltonianEvaluator::new(
        Arc::new(cfg.stencil_field()?),
        Arc::new(cfg.potential_spec()?),
    )?;
    Ok(FinslerEvaluator::new(Arc::new(ham)))
}

fn field(cfg: &RunConfig, ev: &FinslerEvaluator, bounds: &[[f64; 2]]) -> Result<FieldBuild> {
    let dom = LatticeDomain::from_box(cfg.distance.h, bounds)?;
    build_distance_field(ev, &dom, &cfg.field_options())
}

#[derive(Serialize)]
struct DistanceOut {
    sites: usize,
    three_way: bool,
    shooting_failures: usize,
    max_energy_drift: f64,
    eikonal: EikonalReport,
    lipschitz: LipschitzReport,
    smoothness: SmoothnessReport,
    agreement: Option<AgreementReport>,
    jacobi: Vec<JacobiReport>,
}

fn distance(ctx: &Ctx) -> Result<u8> {
    let cfg = &ctx.cfg;
    let c = &cfg.distance;
    let ev = evaluators(cfg)?;
    let ham = ev.hamiltonian().clone();
    let build = field(cfg, &ev, &cfg.distance_bounds())?;
    let eikonal = eikonal_inequality_check(&build.field, &ham, c.eikonal_tol);
    let lipschitz = lipschitz_check(&build.field, &ev, c.lipschitz_tol)?;
    let smoothness = second_differences(&build.field);
    let dij = cfg.has_method(DistanceMethod::Dijkstra);
    let smooth_methods =
        cfg.has_method(DistanceMethod::Series) || cfg.has_method(DistanceMethod::Shooting);
    let three_way =
        dij && cfg.has_method(DistanceMethod::Series) && cfg.has_method(DistanceMethod::Shooting);
    let agreement = (dij && smooth_methods).then(|| {
        three_way_agreement(
            &build,
            cfg.field_options().series_radius,
            &cfg.agreement_tolerances(),
        )
    });

    let mut jacobi = Vec::new();
    if !c.jacobi_targets.is_empty() {
        let series = EikonalSeries::expand(&ham, c.series_order)?;
        let sc = ShootingConfig::default();
        let shooter = Shooter::new(&ham, &series, sc.clone())?;
        let shots = shoot_distance(&ham, &series, &c.jacobi_targets, &sc)?;
        for (k, g) in shots.bundle.curves.iter().enumerate() {
            g.write_csv(create(&ctx.dir, &format!("geodesic_{k}.csv"))?)?;
            let curve = shooter.refined_curve(g, 0.1, 3)?;
            let opts = JacobiOptions {
                perturbations: c.jacobi_perturbations,
                delta0: c.jacobi_delta0,
                threshold: c.jacobi_threshold,
                seed: ctx.seed.wrapping_add(k as u64),
                ..JacobiOptions::default()
            };
            jacobi.push(verify_jacobi(&ev, &curve, &opts)?);
        }
        if jacobi.len() < c.jacobi_targets.len() {
            return Err(Error::Unreachable {
                target: c.jacobi_targets[jacobi.len()].clone(),
                reason: "no geodesic for the first-variation check".into(),
            });
        }
    }
    build.field.write_csv(create(&ctx.dir, "distance.csv")?)?;

    let mut warnings = Vec::new();
    let agree_ok = agreement.as_ref().is_none_or(|a| a.passed);
    if !agree_ok && !three_way {
        warnings.push(format!(
            "cross-method disagreement beyond tolerance (not all three methods enabled): {:?}",
            agreement
        ));
    }
    if !build.shooting_failures.is_empty() {
        warnings.push(format!(
            "{} sites fell back to Dijkstra after failed shots",
            build.shooting_failures.len()
        ));
    }
    let passed = eikonal.passed
        && lipschitz.passed
        && jacobi.iter().all(|j| j.passed)
        && (agree_ok || !three_way);
    let out = DistanceOut {
        sites: build.field.len(),
        three_way,
        shooting_failures: build.shooting_failures.len(),
        max_energy_drift: build.bundle.max_drift(),
        eikonal,
        lipschitz,
        smoothness,
        agreement,
        jacobi,
    };
    let code = if passed { PASS } else { CERTIFICATE_FAILURE };
    ctx.emit("distance", code, warnings, out)
}

#[derive(Serialize)]
struct EigenRow {
    epsilon: f64,
    index: usize,
    eigenvalue: f64,
    residual: f64,
    in_window: bool,
}

#[derive(Serialize)]
struct NormRow {
    epsilon: f64,
    b: f64,
    w: f64,
}

#[derive(Serialize)]
struct DecayCsvRow {
    b: f64,
    ratio: f64,
    slope: f64,
    max_step_growth: f64,
    min_step_growth: f64,
    passed: bool,
}

fn spectrum(ctx: &Ctx) -> Result<u8> {
    let cfg = &ctx.cfg;
    let val = run_validation(ctx)?;
    if !(val.hypotheses.passed && val.form_passed) {
        #[derive(Serialize)]
        struct Refused {
            validation: ValidateOut,
        }
        return ctx.emit(
            "spectrum",
            VALIDATION_FAILURE,
            vec!["hypotheses fail; spectrum not computed".into()],
            Refused { validation: val },
        );
    }
    let ev = evaluators(cfg)?;
    let build = field(cfg, &ev, &cfg.domain.bounds)?;
    let provider = |d: &LatticeDomain| sample_field(&build.field, d);
    let stencil = cfg.stencil_field()?;
    let pot = cfg.potential_spec()?;
    let rep: SpectralReport = run_sweep(&stencil, &pot, &provider, &cfg.sweep_options(ctx.seed))?;
    let mut eig = Vec::new();
    let mut norms = Vec::new();
    for e in &rep.entries {
        for (k, v) in e.eigenvalues.iter().enumerate() {
            eig.push(EigenRow {
                epsilon: e.epsilon,
                index: k,
                eigenvalue: *v,
                residual: e.residuals[k],
                in_window: e.in_window[k],
            });
        }
        for w in &e.weighted_norms {
            norms.push(NormRow {
                epsilon: e.epsilon,
                b: w.b,
                w: w.w,
            });
        }
    }
    write_rows(&ctx.dir, "eigenvalues.csv", &eig)?;
    write_rows(&ctx.dir, "weighted_norms.csv", &norms)?;
    let rows: Vec<DecayCsvRow> = rep
        .certificate
        .rows
        .iter()
        .map(|r| DecayCsvRow {
            b: r.b,
            ratio: r.ratio,
            slope: r.slope,
            max_step_growth: r.max_step_growth,
            min_step_growth: r.min_step_growth,
            passed: r.passed,
        })
        .collect();
    write_rows(&ctx.dir, "decay_rows.csv", &rows)?;
    let code = if rep.passed {
        PASS
    } else {
        CERTIFICATE_FAILURE
    };
    ctx.emit("spectrum", code, vec![], rep)
}

#[derive(Serialize)]
struct ChainEntry {
    epsilon: f64,
    sites: usize,
    operator: ChainOperatorReport,
    bounds: SpectralBounds,
    well: Option<ChainWellReport>,
}

#[derive(Serialize)]
struct MarkovOut {
    kind: &'static str,
    chains: Vec<ChainEntry>,
    leading_order_validation: Option<ValidationReport>,
    decay: Option<ChainDecayReport>,
}

#[derive(Serialize)]
struct PotentialRow {
    site: usize,
    x: String,
    v_eps: f64,
}

fn check_chain(chain: &MarkovChain, well: bool) -> Result<ChainEntry> {
    let co = chain_to_operator(chain)?;
    Ok(ChainEntry {
        epsilon: chain.domain().epsilon(),
        sites: chain.domain().len(),
        operator: check_chain_operator(chain, &co)?,
        bounds: spectral_bounds_check(chain, 1e-12)?,
        well: if well {
            Some(chain_well_check(chain)?)
        } else {
            None
        },
    })
}

fn operator_ok(e: &ChainEntry) -> bool {
    let o = &e.operator;
    o.symmetry_gap <= CHAIN_TOL
        && o.ground_residual <= CHAIN_TOL
        && o.potential_identity_gap <= CHAIN_TOL
        && o.coefficient_sum_gap <= CHAIN_TOL
        && o.round_trip_gap <= CHAIN_TOL
        && o.signs_ok
}

fn markov(ctx: &Ctx) -> Result<u8> {
    let cfg = &ctx.cfg;
    let spec = cfg
        .markov
        .as_ref()
        .ok_or_else(|| Error::Config("missing [markov] section".into()))?;
    let mut chains = Vec::new();
    let mut kept: Option<MarkovChain> = None;
    let mut leading = None;
    let mut decay = None;
    let kind = match spec {
        MarkovConfig::TwoState { p, q } => {
            let c = two_state(*p, *q)?;
            chains.push(check_chain(&c, false)?);
            kept = Some(c);
            "two_state"
        }
        MarkovConfig::Csv {
            transitions,
            measure,
            epsilon,
            lo,
            hi,
        } => {
            let dom = LatticeDomain::from_index_box(*epsilon, lo.clone(), hi.clone())?;
            let c = read_chain_csv(
                &dom,
                fs::File::open(cfg.resolve(transitions))?,
                fs::File::open(cfg.resolve(measure))?,
            )?;
            chains.push(check_chain(&c, false)?);
            kept = Some(c);
            "csv"
        }
        MarkovConfig::Metropolis {
            decay: run_decay, ..
        } => {
            let v = cfg.markov_potential()?.expect("metropolis potential");
            for &eps in &cfg.domain.epsilons {
                let dom = LatticeDomain::from_box(eps, &cfg.domain.bounds)?;
                let c = metropolis_chain(&dom, &v)?;
                chains.push(check_chain(&c, true)?);
                kept.get_or_insert(c);
            }
            let (st, pot) = metropolis_leading_order(&v, cfg.dim())?;
            let samples = sample_grid(&cfg.domain.bounds, cfg.validation.samples_per_axis);
            leading = Some(validate_hypotheses(
                &st,
                &pot,
                &samples,
                &cfg.validation_options(),
            ));
            if *run_decay {
                decay = Some(metropolis_decay(
                    &v,
                    &cfg.domain.bounds,
                    &cfg.domain.epsilons,
                    &cfg.eigen_options(ctx.seed),
                    &cfg.decay_options(),
                )?);
            }
            "metropolis"
        }
    };
    if let Some(c) = &kept {
        write_chain_csv(
            c,
            create(&ctx.dir, "chain_transitions.csv")?,
            create(&ctx.dir, "chain_measure.csv")?,
        )?;
        let co = chain_to_operator(c)?;
        let rows: Vec<PotentialRow> = (0..c.domain().len())
            .map(|i| PotentialRow {
                site: i,
                x: format!("{:?}", c.domain().point(i)),
                v_eps: co.potential[i],
            })
            .collect();
        write_rows(&ctx.dir, "chain_potential.csv", &rows)?;
    }

    let mut warnings = Vec::new();
    if let Some(l) = &leading {
        for cl in l.clauses.iter().filter(|c| !c.passed) {
            warnings.push(format!(
                "leading-order operator, {}: {}",
                cl.name, cl.detail
            ));
        }
    }
    let well_ok = chains
        .iter()
        .all(|e| e.well.as_ref().is_none_or(|w| w.passed));
    let numeric_ok = chains.iter().all(|e| operator_ok(e) && e.bounds.passed)
        && decay.as_ref().is_none_or(|d| d.passed);
    let code = if !well_ok {
        VALIDATION_FAILURE
    } else if !numeric_ok {
        CERTIFICATE_FAILURE
    } else {
        PASS
    };
    ctx.emit(
        "markov",
        code,
        warnings,
        MarkovOut {
            kind,
            chains,
            leading_order_validation: leading,
            decay,
        },
    )
}
