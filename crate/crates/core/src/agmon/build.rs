//! Assembles a [`DistanceField`] from the series, shooting and Dijkstra routes.

use crate::agmon::dijkstra::dijkstra_distance;
use crate::agmon::field::{DistanceField, Provenance};
use crate::agmon::series::EikonalSeries;
use crate::agmon::shooting::{shoot_distance, GeodesicBundle, ShootingConfig};
use crate::error::{Error, Result};
use crate::finsler::FinslerEvaluator;
use crate::lattice::LatticeDomain;
use crate::stencil::norm;

#[derive(Clone, Debug)]
pub struct FieldOptions {
    pub series_order: usize,
    pub series_radius: f64,
    /// Width of the band beyond `series_radius` where series and shooting are mixed.
    pub blend_width: f64,
    pub shooting: Option<ShootingConfig>,
    /// Sites farther out are left to Dijkstra.
    pub shooting_radius: f64,
    pub dijkstra: bool,
    pub dijkstra_radius: i64,
}

impl Default for FieldOptions {
    fn default() -> Self {
        FieldOptions {
            series_order: 4,
            series_radius: 0.05,
            blend_width: 0.0,
            shooting: Some(ShootingConfig::default()),
            shooting_radius: f64::INFINITY,
            dijkstra: true,
            dijkstra_radius: 2,
        }
    }
}

#[derive(Clone, Debug)]
pub struct FieldBuild {
    pub field: DistanceField,
    pub series: EikonalSeries,
    pub dijkstra: Option<DistanceField>,
    pub bundle: GeodesicBundle,
    /// Raw shooting values per site (NaN where not shot or failed).
    pub shooting_values: Vec<f64>,
    pub shooting_failures: Vec<(usize, String)>,
}

fn smoothstep(t: f64) -> f64 {
    let t = t.clamp(0.0, 1.0);
    t * t * (3.0 - 2.0 * t)
}

pub fn build_distance_field(
    ev: &FinslerEvaluator,
    domain: &LatticeDomain,
    opts: &FieldOptions,
) -> Result<FieldBuild> {
    let ham = ev.hamiltonian();
    let series = EikonalSeries::expand(ham, opts.series_order)?;
    let n = domain.len();
    let dij = if opts.dijkstra {
        Some(dijkstra_distance(ev, domain, opts.dijkstra_radius)?)
    } else {
        None
    };

    let mut shoot_val = vec![f64::NAN; n];
    let mut shoot_grad: Vec<Option<Vec<f64>>> = vec![None; n];
    let mut failures = Vec::new();
    let mut bundle = GeodesicBundle::default();
    if let Some(cfg) = &opts.shooting {
        let sites: Vec<usize> = (0..n)
            .filter(|&i| {
                let r = norm(&domain.point(i));
                r > opts.series_radius && r <= opts.shooting_radius
            })
            .collect();
        let targets: Vec<Vec<f64>> = sites.iter().map(|&i| domain.point(i)).collect();
        if !targets.is_empty() {
            let out = shoot_distance(ham, &series, &targets, cfg)?;
            for (&i, s) in sites.iter().zip(out.shots) {
                match s {
                    Ok(shot) => {
                        shoot_val[i] = shot.distance;
                        shoot_grad[i] = Some(shot.gradient);
                    }
                    Err(e) => failures.push((i, e)),
                }
            }
            bundle = out.bundle;
        }
    }

    let mut values = vec![0.0; n];
    let mut prov = vec![Provenance::Dijkstra; n];
    let mut grads: Vec<Option<Vec<f64>>> = vec![None; n];
    for i in 0..n {
        let x = domain.point(i);
        let r = norm(&x);
        if r <= opts.series_radius {
            values[i] = series.value(&x);
            grads[i] = Some(series.gradient(&x));
            prov[i] = Provenance::Series;
        } else if shoot_val[i].is_finite() {
            let sg = shoot_grad[i].take().expect("gradient with value");
            if r <= opts.series_radius + opts.blend_width {
                let w = smoothstep((r - opts.series_radius) / opts.blend_width);
                values[i] = (1.0 - w) * series.value(&x) + w * shoot_val[i];
                let pg = series.gradient(&x);
                grads[i] = Some(
                    pg.iter()
                        .zip(&sg)
                        .map(|(a, b)| (1.0 - w) * a + w * b)
                        .collect(),
                );
                prov[i] = Provenance::Blended;
            } else {
                values[i] = shoot_val[i];
                grads[i] = Some(sg);
                prov[i] = Provenance::Shooting;
            }
        } else if let Some(d) = &dij {
            values[i] = d.value(i);
        } else {
            return Err(Error::Unreachable {
                target: x,
                reason: "no shooting value and Dijkstra disabled".into(),
            });
        }
    }
    let mut field = DistanceField::new(domain.clone(), values, prov)?;
    for (i, g) in grads.into_iter().enumerate() {
        if let Some(g) = g {
            field.set_gradient(i, g);
        }
    }
    Ok(FieldBuild {
        field,
        series,
        dijkstra: dij,
        bundle,
        shooting_values: shoot_val,
        shooting_failures: failures,
    })
}
