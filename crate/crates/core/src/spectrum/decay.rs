//! Weighted norms W(ε) = ‖(1+d⁰/ε)^{−B} e^{d⁰/ε} u_ε‖ over an ε sweep.

use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Clone, Debug)]
pub struct DecayOptions {
    pub b_list: Vec<f64>,
    /// Allowed max_ε W / min_ε W.
    pub boundedness: f64,
    /// Allowed slope of log W against 1/ε.
    pub slope_slack: f64,
}

impl Default for DecayOptions {
    fn default() -> Self {
        DecayOptions {
            b_list: vec![2.0, 4.0, 8.0],
            boundedness: 10.0,
            slope_slack: 0.05,
        }
    }
}

/// One ε of the sweep: a normalized state and d⁰ at the same sites.
#[derive(Clone, Debug)]
pub struct DecaySample {
    pub epsilon: f64,
    pub energy: f64,
    pub state: Vec<f64>,
    pub distance: Vec<f64>,
}

/// log ‖(1+d/ε)^{−B} e^{d/ε} u‖ by log-sum-exp.
pub fn weighted_log_norm(d: &[f64], u: &[f64], epsilon: f64, b: f64) -> Result<f64> {
    if d.len() != u.len() {
        return Err(Error::DimensionMismatch {
            expected: u.len(),
            got: d.len(),
        });
    }
    let terms: Vec<f64> = d
        .iter()
        .zip(u)
        .filter(|(_, x)| **x != 0.0)
        .map(|(di, x)| 2.0 * (di / epsilon - b * (di / epsilon).ln_1p() + x.abs().ln()))
        .collect();
    if terms.is_empty() {
        return Ok(f64::NEG_INFINITY);
    }
    let m = terms.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    Ok(0.5 * (m + terms.iter().map(|t| (t - m).exp()).sum::<f64>().ln()))
}

#[derive(Clone, Debug, Serialize)]
pub struct DecayRow {
    pub b: f64,
    /// W(ε) in sweep order.
    pub w: Vec<f64>,
    pub log_w: Vec<f64>,
    pub ratio: f64,
    /// least-squares slope of log W against 1/ε
    pub slope: f64,
    /// max and min over consecutive sweep members of W(next)/W(prev)
    pub max_step_growth: f64,
    pub min_step_growth: f64,
    pub passed: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct DecayCertificate {
    pub epsilons: Vec<f64>,
    pub energies: Vec<f64>,
    pub rows: Vec<DecayRow>,
    pub smallest_passing_b: Option<f64>,
    pub passed: bool,
}

impl DecayCertificate {
    pub fn row(&self, b: f64) -> Option<&DecayRow> {
        self.rows.iter().find(|r| r.b == b)
    }
}

pub fn verify_decay(samples: &[DecaySample], opts: &DecayOptions) -> Result<DecayCertificate> {
    if samples.len() < 2 {
        return Err(Error::InvalidInput(
            "decay check needs at least two epsilons".into(),
        ));
    }
    let inv: Vec<f64> = samples.iter().map(|s| 1.0 / s.epsilon).collect();
    let mut rows = Vec::with_capacity(opts.b_list.len());
    for &b in &opts.b_list {
        let log_w = samples
            .iter()
            .map(|s| weighted_log_norm(&s.distance, &s.state, s.epsilon, b))
            .collect::<Result<Vec<_>>>()?;
        let hi = log_w.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let lo = log_w.iter().cloned().fold(f64::INFINITY, f64::min);
        let ratio = (hi - lo).exp();
        let slope = fit_slope(&inv, &log_w);
        let steps: Vec<f64> = log_w.windows(2).map(|p| (p[1] - p[0]).exp()).collect();
        let max_step_growth = steps.iter().cloned().fold(0.0, f64::max);
        let min_step_growth = steps.iter().cloned().fold(f64::INFINITY, f64::min);
        rows.push(DecayRow {
            b,
            w: log_w.iter().map(|l| l.exp()).collect(),
            passed: ratio <= opts.boundedness && slope <= opts.slope_slack,
            log_w,
            ratio,
            slope,
            max_step_growth,
            min_step_growth,
        });
    }
    let smallest_passing_b = rows
        .iter()
        .filter(|r| r.passed)
        .map(|r| r.b)
        .fold(None, |m: Option<f64>, b| Some(m.map_or(b, |m| m.min(b))));
    Ok(DecayCertificate {
        epsilons: samples.iter().map(|s| s.epsilon).collect(),
        energies: samples.iter().map(|s| s.energy).collect(),
        rows,
        passed: smallest_passing_b.is_some(),
        smallest_passing_b,
    })
}

fn fit_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_distance_gives_plain_norm() {
        let u = [0.6, 0.0, -0.8];
        let l = weighted_log_norm(&[0.0; 3], &u, 0.1, 4.0).unwrap();
        assert!(l.abs() < 1e-15);
    }

    #[test]
    fn log_space_survives_large_exponents() {
        // e^{d/ε} = e^{800} would overflow directly
        let l = weighted_log_norm(&[8.0], &[1e-300], 0.01, 2.0).unwrap();
        let expect = 800.0 - 2.0 * 801f64.ln() + (1e-300f64).ln();
        assert!((l - expect).abs() < 1e-9);
    }

    #[test]
    fn growth_is_flagged() {
        let flat: Vec<_> = [0.2, 0.1, 0.05]
            .iter()
            .map(|&e| DecaySample {
                epsilon: e,
                energy: 0.0,
                state: vec![1.0],
                distance: vec![0.0],
            })
            .collect();
        assert!(
            verify_decay(&flat, &DecayOptions::default())
                .unwrap()
                .passed
        );
        let grow: Vec<_> = [0.2, 0.1, 0.05]
            .iter()
            .map(|&e| DecaySample {
                epsilon: e,
                energy: 0.0,
                state: vec![(-0.5 / e).exp()],
                distance: vec![1.0],
            })
            .collect();
        let c = verify_decay(&grow, &DecayOptions::default()).unwrap();
        assert!(!c.passed);
        assert!(c.rows[0].max_step_growth > 10.0);
    }
}
