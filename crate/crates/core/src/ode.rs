//! Explicit Runge–Kutta integrators.

use crate::error::{Error, Result};

/// Adaptive Dormand–Prince 5(4) with error control on the 5th-order solution.
#[derive(Clone, Debug)]
pub struct Dopri5 {
    pub rtol: f64,
    pub atol: f64,
    pub h_init: f64,
    pub h_max: f64,
    pub max_steps: usize,
}

impl Default for Dopri5 {
    fn default() -> Self {
        Dopri5 {
            rtol: 1e-10,
            atol: 1e-12,
            h_init: 1e-3,
            h_max: f64::INFINITY,
            max_steps: 200_000,
        }
    }
}

/// Accepted steps with right-hand side values for Hermite dense output.
#[derive(Clone, Debug, Default)]
pub struct Trajectory {
    pub t: Vec<f64>,
    pub y: Vec<Vec<f64>>,
    pub f: Vec<Vec<f64>>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    /// Cubic Hermite value in step `i` (between samples i and i+1).
    pub fn hermite(&self, i: usize, t: f64) -> Vec<f64> {
        let (t0, t1) = (self.t[i], self.t[i + 1]);
        let h = t1 - t0;
        let s = (t - t0) / h;
        let h00 = 2.0 * s.powi(3) - 3.0 * s * s + 1.0;
        let h10 = s.powi(3) - 2.0 * s * s + s;
        let h01 = -2.0 * s.powi(3) + 3.0 * s * s;
        let h11 = s.powi(3) - s * s;
        (0..self.y[i].len())
            .map(|k| {
                h00 * self.y[i][k]
                    + h10 * h * self.f[i][k]
                    + h01 * self.y[i + 1][k]
                    + h11 * h * self.f[i + 1][k]
            })
            .collect()
    }
}

const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

pub type Rhs<'a> = dyn FnMut(f64, &[f64]) -> Result<Vec<f64>> + 'a;

impl Dopri5 {
    /// One step of size `h` from (t, y) with f0 = f(t, y). Returns (y1, f1, error norm).
    pub fn step(
        &self,
        rhs: &mut Rhs,
        t: f64,
        y: &[f64],
        f0: &[f64],
        h: f64,
    ) -> Result<(Vec<f64>, Vec<f64>, f64)> {
        let n = y.len();
        let mut k: Vec<Vec<f64>> = Vec::with_capacity(7);
        k.push(f0.to_vec());
        let mut tmp = vec![0.0; n];
        for s in 1..7 {
            for i in 0..n {
                let mut acc = y[i];
                for (j, kj) in k.iter().enumerate() {
                    acc += h * A[s][j] * kj[i];
                }
                tmp[i] = acc;
            }
            k.push(rhs(t + C[s] * h, &tmp)?);
        }
        // FSAL: stage 7 is evaluated at the 5th-order solution
        let y1 = tmp;
        let mut err = 0.0f64;
        for i in 0..n {
            let e: f64 = (0..7).map(|s| E[s] * k[s][i]).sum::<f64>() * h;
            let sc = self.atol + self.rtol * y[i].abs().max(y1[i].abs());
            err += (e / sc).powi(2);
        }
        let f1 = k.pop().expect("seven stages");
        Ok((y1, f1, (err / n as f64).sqrt()))
    }

    /// Integrates until `stop(t, y)` returns true or `t_max` is reached.
    pub fn integrate(
        &self,
        rhs: &mut Rhs,
        t0: f64,
        y0: &[f64],
        t_max: f64,
        stop: &mut dyn FnMut(f64, &[f64]) -> bool,
    ) -> Result<Trajectory> {
        let f0 = rhs(t0, y0)?;
        let mut tr = Trajectory {
            t: vec![t0],
            y: vec![y0.to_vec()],
            f: vec![f0],
        };
        let mut h = self.h_init.min(self.h_max);
        let mut t = t0;
        let mut steps = 0;
        while t < t_max {
            if steps == self.max_steps {
                return Err(Error::NoConvergence {
                    what: "ode step budget",
                    iterations: steps,
                    residual: t_max - t,
                });
            }
            steps += 1;
            let h_try = h.min(t_max - t);
            let y = tr.y.last().expect("nonempty").clone();
            let f = tr.f.last().expect("nonempty").clone();
            let (y1, f1, err) = match self.step(rhs, t, &y, &f, h_try) {
                Ok(r) => r,
                Err(Error::Overflow { .. }) => {
                    h = 0.25 * h_try;
                    if h < 1e-14 * t.abs().max(1.0) {
                        return Err(Error::NoConvergence {
                            what: "ode step size underflow",
                            iterations: steps,
                            residual: h,
                        });
                    }
                    continue;
                }
                Err(e) => return Err(e),
            };
            if err <= 1.0 {
                t += h_try;
                tr.t.push(t);
                tr.y.push(y1);
                tr.f.push(f1);
                let fac = if err == 0.0 {
                    5.0
                } else {
                    (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
                };
                h = (h_try * fac).min(self.h_max);
                if stop(t, tr.y.last().expect("nonempty")) {
                    break;
                }
            } else {
                h = h_try * (0.9 * err.powf(-0.2)).max(0.1);
                if h < 1e-14 * t.abs().max(1.0) {
                    return Err(Error::NoConvergence {
                        what: "ode step size underflow",
                        iterations: steps,
                        residual: err,
                    });
                }
            }
        }
        Ok(tr)
    }
}

/// Classical fixed-step RK4; returns all n+1 states.
pub fn rk4(rhs: &mut Rhs, t0: f64, y0: &[f64], h: f64, n: usize) -> Result<Vec<Vec<f64>>> {
    let mut out = vec![y0.to_vec()];
    let mut t = t0;
    let m = y0.len();
    for _ in 0..n {
        let y = out.last().expect("nonempty").clone();
        let k1 = rhs(t, &y)?;
        let y2: Vec<f64> = (0..m).map(|i| y[i] + 0.5 * h * k1[i]).collect();
        let k2 = rhs(t + 0.5 * h, &y2)?;
        let y3: Vec<f64> = (0..m).map(|i| y[i] + 0.5 * h * k2[i]).collect();
        let k3 = rhs(t + 0.5 * h, &y3)?;
        let y4: Vec<f64> = (0..m).map(|i| y[i] + h * k3[i]).collect();
        let k4 = rhs(t + h, &y4)?;
        out.push(
            (0..m)
                .map(|i| y[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
                .collect(),
        );
        t += h;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn harmonic_oscillator_period() {
        let ode = Dopri5::default();
        let mut rhs = |_t: f64, y: &[f64]| Ok(vec![y[1], -y[0]]);
        let tp = 2.0 * std::f64::consts::PI;
        let tr = ode
            .integrate(&mut rhs, 0.0, &[1.0, 0.0], tp, &mut |_, _| false)
            .unwrap();
        let y = tr.y.last().unwrap();
        assert!((tr.t.last().unwrap() - tp).abs() < 1e-14);
        assert!((y[0] - 1.0).abs() < 1e-8 && y[1].abs() < 1e-8);
        let mid = tr.len() / 2;
        let tm = 0.5 * (tr.t[mid] + tr.t[mid + 1]);
        assert!((tr.hermite(mid, tm)[0] - tm.cos()).abs() < 1e-5);
    }

    #[test]
    fn exponential_growth_and_stop() {
        let ode = Dopri5::default();
        let mut rhs = |_t: f64, y: &[f64]| Ok(vec![y[0]]);
        let tr = ode
            .integrate(&mut rhs, 0.0, &[1.0], 10.0, &mut |_, y| y[0] > 100.0)
            .unwrap();
        let t = *tr.t.last().unwrap();
        assert!(t < 10.0);
        assert!((tr.y.last().unwrap()[0] - t.exp()).abs() < 1e-8 * t.exp());
    }

    #[test]
    fn rk4_fourth_order() {
        let mut rhs = |_t: f64, y: &[f64]| Ok(vec![-y[0]]);
        let e1 = (rk4(&mut rhs, 0.0, &[1.0], 0.1, 10).unwrap()[10][0] - (-1f64).exp()).abs();
        let e2 = (rk4(&mut rhs, 0.0, &[1.0], 0.05, 20).unwrap()[20][0] - (-1f64).exp()).abs();
        assert!((e1 / e2).log2() > 3.8);
    }
}
