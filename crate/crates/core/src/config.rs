//! TOML run configuration.

use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::agmon::checks::AgreementTolerances;
use crate::agmon::{FieldOptions, ShootingConfig};
use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::spectrum::decay::DecayOptions;
use crate::spectrum::eigen::EigenOptions;
use crate::spectrum::sweep::{check_epsilons, SweepOptions};
use crate::stencil::{PotentialSpec, StencilEntry, StencilField};
use crate::validate::ValidationOptions;

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub name: String,
    #[serde(default)]
    pub seed: u64,
    /// Output directory, relative to the config file.
    pub output: Option<PathBuf>,
    pub domain: DomainConfig,
    pub stencil: Option<StencilConfig>,
    pub potential: Option<PotentialConfig>,
    #[serde(default)]
    pub distance: DistanceConfig,
    #[serde(default)]
    pub spectrum: SpectrumConfig,
    pub markov: Option<MarkovConfig>,
    #[serde(default)]
    pub validation: ValidationConfig,
    #[serde(skip)]
    pub base_dir: PathBuf,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct DomainConfig {
    pub bounds: Vec<[f64; 2]>,
    /// Strictly decreasing.
    pub epsilons: Vec<f64>,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum StencilConfig {
    Laplacian,
    Exponential {
        radius: i64,
        rate: f64,
        strength: f64,
    },
    Entries {
        entries: Vec<EntryConfig>,
        #[serde(default)]
        midpoint_symmetric: bool,
    },
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct EntryConfig {
    pub offset: Vec<i64>,
    pub a0: String,
    pub a1: Option<String>,
    pub r2: Option<String>,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct PotentialConfig {
    pub v0: String,
    #[serde(default)]
    pub corrections: Vec<String>,
    pub hessian: Option<Vec<Vec<f64>>>,
}

#[derive(Clone, Debug, Deserialize, Serialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum DistanceMethod {
    Series,
    Shooting,
    Dijkstra,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(default, deny_unknown_fields)]
pub struct DistanceConfig {
    pub methods: Vec<DistanceMethod>,
    /// Lattice spacing of the distance grid.
    pub h: f64,
    /// Defaults to the domain bounds.
    pub bounds: Option<Vec<[f64; 2]>>,
    pub series_order: usize,
    pub series_radius: f64,
    pub blend_width: f64,
    pub shooting_radius: Option<f64>,
    pub dijkstra_radius: i64,
    pub series_tol: f64,
    pub dijkstra_rtol: f64,
    pub dijkstra_floor: f64,
    pub upper_bound_slack: f64,
    pub eikonal_tol: f64,
    pub lipschitz_tol: f64,
    /// Endpoints of shot geodesics given to the first-variation check.
    pub jacobi_targets: Vec<Vec<f64>>,
    pub jacobi_perturbations: usize,
    pub jacobi_delta0: f64,
    pub jacobi_threshold: f64,
}

impl Default for DistanceConfig {
    fn default() -> Self {
        let t = AgreementTolerances::default();
        DistanceConfig {
            methods: vec![
                DistanceMethod::Series,
                DistanceMethod::Shooting,
                DistanceMethod::Dijkstra,
            ],
            h: 0.025,
            bounds: None,
            series_order: 4,
            series_radius: 0.05,
            blend_width: 0.0,
            shooting_radius: None,
            dijkstra_radius: 2,
            series_tol: t.series,
            dijkstra_rtol: t.dijkstra_rtol,
            dijkstra_floor: t.dijkstra_floor,
            upper_bound_slack: t.upper_bound_slack,
            eikonal_tol: 1e-5,
            lipschitz_tol: 1e-3,
            jacobi_targets: Vec::new(),
            jacobi_perturbations: 20,
            jacobi_delta0: 1e-4,
            jacobi_threshold: 1e-3,
        }
    }
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpectrumConfig {
    pub k: usize,
    pub r0: f64,
    pub order: u8,
    pub tol: f64,
    pub dense_threshold: usize,
    pub b_list: Vec<f64>,
    pub boundedness: f64,
    pub slope_slack: f64,
    /// d⁰ is multiplied by this before weighting.
    pub distance_scale: f64,
}

impl Default for SpectrumConfig {
    fn default() -> Self {
        let d = DecayOptions::default();
        let e = EigenOptions::default();
        SpectrumConfig {
            k: e.k,
            r0: 5.0,
            order: 0,
            tol: e.tol,
            dense_threshold: e.dense_threshold,
            b_list: d.b_list,
            boundedness: d.boundedness,
            slope_slack: d.slope_slack,
            distance_scale: 1.0,
        }
    }
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MarkovConfig {
    TwoState {
        p: f64,
        q: f64,
    },
    /// Metropolis chain for μ ∝ e^{−V/ε} on the domain box at each swept ε.
    Metropolis {
        v: String,
        #[serde(default = "yes")]
        decay: bool,
    },
    /// `row,col,prob` and `site,mu` tables on the index box [lo, hi].
    Csv {
        transitions: PathBuf,
        measure: PathBuf,
        epsilon: f64,
        lo: Vec<i64>,
        hi: Vec<i64>,
    },
}

fn yes() -> bool {
    true
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(default, deny_unknown_fields)]
pub struct ValidationConfig {
    /// Points per axis of the sample grid.
    pub samples_per_axis: usize,
    pub tol: f64,
    pub remainder_constant: f64,
    pub epsilons: Vec<f64>,
    pub hessian_tol: f64,
    pub form_trials: usize,
}

impl Default for ValidationConfig {
    fn default() -> Self {
        let v = ValidationOptions::default();
        ValidationConfig {
            samples_per_axis: 10,
            tol: v.tol,
            remainder_constant: v.remainder_constant,
            epsilons: v.epsilons,
            hessian_tol: v.hessian_tol,
            form_trials: 1000,
        }
    }
}

fn parse_expr(src: &str, dim: usize, what: &str) -> Result<Expr> {
    Expr::parse(src, dim).map_err(|e| Error::Config(format!("{what}: {e}")))
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.check()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut cfg = Self::from_toml(&text)?;
        cfg.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(cfg)
    }

    pub fn dim(&self) -> usize {
        self.domain.bounds.len()
    }

    fn check(&self) -> Result<()> {
        let d = self.dim();
        if d == 0 {
            return Err(Error::Config("domain.bounds is empty".into()));
        }
        if self.domain.bounds.iter().any(|b| !(b[0] < b[1])) {
            return Err(Error::Config("domain.bounds must have lo < hi".into()));
        }
        check_epsilons(&self.domain.epsilons).map_err(|e| Error::Config(e.to_string()))?;
        if let Some(b) = &self.distance.bounds {
            if b.len() != d {
                return Err(Error::Config(
                    "distance.bounds dimension differs from domain".into(),
                ));
            }
        }
        if let Some(StencilConfig::Entries { entries, .. }) = &self.stencil {
            if let Some(e) = entries.iter().find(|e| e.offset.len() != d) {
                return Err(Error::Config(format!(
                    "stencil offset {:?} has wrong dimension",
                    e.offset
                )));
            }
        }
        if !(self.distance.h > 0.0) {
            return Err(Error::Config("distance.h must be positive".into()));
        }
        if self.spectrum.b_list.is_empty() {
            return Err(Error::Config("spectrum.b_list is empty".into()));
        }
        if self.stencil.is_some() != self.potential.is_some() {
            return Err(Error::Config(
                "[stencil] and [potential] must be given together".into(),
            ));
        }
        // surface expression errors at load time
        if self.stencil.is_some() {
            self.stencil_field()?;
            self.potential_spec()?;
        }
        if let Some(MarkovConfig::Metropolis { v, .. }) = &self.markov {
            parse_expr(v, d, "markov.v")?;
        }
        Ok(())
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    pub fn stencil_field(&self) -> Result<StencilField> {
        let d = self.dim();
        match &self.stencil {
            None => Err(Error::Config("missing [stencil] section".into())),
            Some(StencilConfig::Laplacian) => Ok(StencilField::laplacian(d)),
            Some(StencilConfig::Exponential {
                radius,
                rate,
                strength,
            }) => StencilField::exponential_family(d, *radius, *rate, *strength),
            Some(StencilConfig::Entries {
                entries,
                midpoint_symmetric,
            }) => {
                let mut out = Vec::with_capacity(entries.len());
                for e in entries {
                    let what = format!("stencil offset {:?}", e.offset);
                    out.push(StencilEntry {
                        offset: e.offset.clone(),
                        a0: parse_expr(&e.a0, d, &what)?,
                        a1: e
                            .a1
                            .as_deref()
                            .map(|s| parse_expr(s, d, &what))
                            .transpose()?,
                        r2: e
                            .r2
                            .as_deref()
                            .map(|s| parse_expr(s, d, &what))
                            .transpose()?,
                    });
                }
                let s = StencilField::new(d, out)?;
                if *midpoint_symmetric {
                    s.midpoint_symmetric()
                } else {
                    Ok(s)
                }
            }
        }
    }

    pub fn potential_spec(&self) -> Result<PotentialSpec> {
        let d = self.dim();
        let p = self
            .potential
            .as_ref()
            .ok_or_else(|| Error::Config("missing [potential] section".into()))?;
        let v0 = parse_expr(&p.v0, d, "potential.v0")?;
        let corr = p
            .corrections
            .iter()
            .map(|s| parse_expr(s, d, "potential.corrections"))
            .collect::<Result<Vec<_>>>()?;
        let hess = match &p.hessian {
            None => None,
            Some(rows) => {
                if rows.len() != d || rows.iter().any(|r| r.len() != d) {
                    return Err(Error::Config("potential.hessian must be d×d".into()));
                }
                Some(DMatrix::from_fn(d, d, |a, b| rows[a][b]))
            }
        };
        PotentialSpec::new(d, v0, corr, hess)
    }

    pub fn markov_potential(&self) -> Result<Option<Expr>> {
        match &self.markov {
            Some(MarkovConfig::Metropolis { v, .. }) => {
                Ok(Some(parse_expr(v, self.dim(), "markov.v")?))
            }
            _ => Ok(None),
        }
    }

    pub fn distance_bounds(&self) -> Vec<[f64; 2]> {
        self.distance
            .bounds
            .clone()
            .unwrap_or_else(|| self.domain.bounds.clone())
    }

    pub fn has_method(&self, m: DistanceMethod) -> bool {
        self.distance.methods.contains(&m)
    }

    pub fn field_options(&self) -> FieldOptions {
        let c = &self.distance;
        FieldOptions {
            series_order: c.series_order,
            series_radius: if self.has_method(DistanceMethod::Series) {
                c.series_radius
            } else {
                0.0
            },
            blend_width: c.blend_width,
            shooting: self
                .has_method(DistanceMethod::Shooting)
                .then(ShootingConfig::default),
            shooting_radius: c.shooting_radius.unwrap_or(f64::INFINITY),
            dijkstra: self.has_method(DistanceMethod::Dijkstra),
            dijkstra_radius: c.dijkstra_radius,
        }
    }

    pub fn agreement_tolerances(&self) -> AgreementTolerances {
        let c = &self.distance;
        AgreementTolerances {
            series: c.series_tol,
            dijkstra_rtol: c.dijkstra_rtol,
            dijkstra_floor: c.dijkstra_floor,
            upper_bound_slack: c.upper_bound_slack,
        }
    }

    pub fn validation_options(&self) -> ValidationOptions {
        let c = &self.validation;
        ValidationOptions {
            tol: c.tol,
            remainder_constant: c.remainder_constant,
            epsilons: c.epsilons.clone(),
            hessian_tol: c.hessian_tol,
        }
    }

    pub fn eigen_options(&self, seed: u64) -> EigenOptions {
        EigenOptions {
            k: self.spectrum.k,
            tol: self.spectrum.tol,
            dense_threshold: self.spectrum.dense_threshold,
            seed,
            ..EigenOptions::default()
        }
    }

    pub fn decay_options(&self) -> DecayOptions {
        DecayOptions {
            b_list: self.spectrum.b_list.clone(),
            boundedness: self.spectrum.boundedness,
            slope_slack: self.spectrum.slope_slack,
        }
    }

    pub fn sweep_options(&self, seed: u64) -> SweepOptions {
        SweepOptions {
            epsilons: self.domain.epsilons.clone(),
            bounds: self.domain.bounds.clone(),
            order: self.spectrum.order,
            eigen: self.eigen_options(seed),
            r0: self.spectrum.r0,
            decay: self.decay_options(),
            distance_scale: self.spectrum.distance_scale,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const ONED: &str = r#"
name = "oned"
[domain]
bounds = [[-3.0, 3.0]]
epsilons = [0.2, 0.1, 0.05]
[stencil]
kind = "laplacian"
[potential]
v0 = "0.5*x1^2"
"#;

    #[test]
    fn parses_minimal() {
        let c = RunConfig::from_toml(ONED).unwrap();
        assert_eq!(c.dim(), 1);
        assert_eq!(c.spectrum.b_list, vec![2.0, 4.0, 8.0]);
        assert_eq!(c.stencil_field().unwrap().len(), 3);
        assert!((c.potential_spec().unwrap().v0(&[2.0]) - 2.0).abs() < 1e-15);
        assert!(c.field_options().dijkstra);
    }

    #[test]
    fn rejects_bad_input() {
        let inc = ONED.replace("[0.2, 0.1, 0.05]", "[0.1, 0.2]");
        assert!(matches!(RunConfig::from_toml(&inc), Err(Error::Config(_))));
        let bad = ONED.replace("0.5*x1^2", "0.5*x1^");
        assert!(matches!(RunConfig::from_toml(&bad), Err(Error::Config(_))));
        let unknown = format!("{ONED}\n[spectrum]\nkk = 3\n");
        assert!(matches!(
            RunConfig::from_toml(&unknown),
            Err(Error::Config(_))
        ));
        let lone = ONED.replace("[potential]\nv0 = \"0.5*x1^2\"\n", "");
        assert!(matches!(RunConfig::from_toml(&lone), Err(Error::Config(_))));
    }

    #[test]
    fn entries_and_markov() {
        let text = r#"
name = "e"
[domain]
bounds = [[-1.0, 1.0], [-1.0, 1.0]]
epsilons = [0.1]
[stencil]
kind = "entries"
midpoint_symmetric = true
entries = [
  { offset = [1, 0], a0 = "-1 - 0.1*cos(x2)" },
  { offset = [-1, 0], a0 = "-1 - 0.1*cos(x2)" },
  { offset = [0, 1], a0 = "-1" },
  { offset = [0, -1], a0 = "-1" },
  { offset = [0, 0], a0 = "4 + 0.2*cos(x2)" },
]
[potential]
v0 = "0.5*x1^2 + x2^2"
[markov]
kind = "metropolis"
v = "0.5*x1^2 + x2^2"
"#;
        let c = RunConfig::from_toml(text).unwrap();
        assert_eq!(c.stencil_field().unwrap().len(), 5);
        assert!(c.markov_potential().unwrap().is_some());
        assert!(matches!(
            c.markov,
            Some(MarkovConfig::Metropolis { decay: true, .. })
        ));
    }
}
