//! Sampled curves with cubic Hermite interpolation.

use std::io::Write;

use crate::error::{Error, Result};

/// A parametrized path with point and velocity at any parameter value.
pub trait Path: Sync {
    fn interval(&self) -> (f64, f64);
    fn point(&self, t: f64) -> Vec<f64>;
    fn velocity(&self, t: f64) -> Vec<f64>;
}

#[derive(Clone, Debug)]
pub struct Curve {
    times: Vec<f64>,
    points: Vec<Vec<f64>>,
    velocities: Vec<Vec<f64>>,
}

impl Curve {
    pub fn new(times: Vec<f64>, points: Vec<Vec<f64>>, velocities: Vec<Vec<f64>>) -> Result<Self> {
        if times.len() < 2 || points.len() != times.len() || velocities.len() != times.len() {
            return Err(Error::InvalidInput(
                "curve needs >= 2 samples with matching points and velocities".into(),
            ));
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidInput(
                "curve sample times must increase strictly".into(),
            ));
        }
        let d = points[0].len();
        if points.iter().chain(&velocities).any(|p| p.len() != d) {
            return Err(Error::InvalidInput("inconsistent curve dimension".into()));
        }
        Ok(Curve {
            times,
            points,
            velocities,
        })
    }

    /// Samples `n+1` equally spaced parameter values of a closure path.
    pub fn from_fn(
        a: f64,
        b: f64,
        n: usize,
        f: impl Fn(f64) -> (Vec<f64>, Vec<f64>),
    ) -> Result<Self> {
        let mut times = Vec::with_capacity(n + 1);
        let mut points = Vec::with_capacity(n + 1);
        let mut velocities = Vec::with_capacity(n + 1);
        for k in 0..=n {
            let t = a + (b - a) * k as f64 / n as f64;
            let (x, v) = f(t);
            times.push(t);
            points.push(x);
            velocities.push(v);
        }
        Self::new(times, points, velocities)
    }

    /// Straight segment from `p` to `q` on [0, 1].
    pub fn segment(p: &[f64], q: &[f64]) -> Self {
        let v: Vec<f64> = q.iter().zip(p).map(|(a, b)| a - b).collect();
        Curve::new(
            vec![0.0, 1.0],
            vec![p.to_vec(), q.to_vec()],
            vec![v.clone(), v],
        )
        .expect("valid segment")
    }

    pub fn dim(&self) -> usize {
        self.points[0].len()
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn velocities(&self) -> &[Vec<f64>] {
        &self.velocities
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    fn segment_of(&self, t: f64) -> usize {
        let n = self.times.len();
        match self.times.binary_search_by(|s| s.total_cmp(&t)) {
            Ok(i) => i.min(n - 2),
            Err(i) => i.saturating_sub(1).min(n - 2),
        }
    }

    fn hermite(&self, t: f64, derivative: bool) -> Vec<f64> {
        let i = self.segment_of(t);
        let (t0, t1) = (self.times[i], self.times[i + 1]);
        let h = t1 - t0;
        let s = (t - t0) / h;
        let (p0, p1) = (&self.points[i], &self.points[i + 1]);
        let (m0, m1) = (&self.velocities[i], &self.velocities[i + 1]);
        let (a, b, c, d) = if derivative {
            (
                (6.0 * s * s - 6.0 * s) / h,
                3.0 * s * s - 4.0 * s + 1.0,
                (-6.0 * s * s + 6.0 * s) / h,
                3.0 * s * s - 2.0 * s,
            )
        } else {
            (
                2.0 * s.powi(3) - 3.0 * s * s + 1.0,
                (s.powi(3) - 2.0 * s * s + s) * h,
                -2.0 * s.powi(3) + 3.0 * s * s,
                (s.powi(3) - s * s) * h,
            )
        };
        (0..p0.len())
            .map(|k| a * p0[k] + b * m0[k] + c * p1[k] + d * m1[k])
            .collect()
    }

    /// Restriction to the samples inside `[t0, t1]`, with interpolated endpoints.
    pub fn restrict(&self, t0: f64, t1: f64) -> Result<Curve> {
        let mut times = vec![t0];
        let mut points = vec![self.point(t0)];
        let mut vel = vec![self.velocity(t0)];
        for (k, &t) in self.times.iter().enumerate() {
            if t > t0 + 1e-14 * t0.abs().max(1.0) && t < t1 - 1e-14 * t1.abs().max(1.0) {
                times.push(t);
                points.push(self.points[k].clone());
                vel.push(self.velocities[k].clone());
            }
        }
        times.push(t1);
        points.push(self.point(t1));
        vel.push(self.velocity(t1));
        Curve::new(times, points, vel)
    }

    /// Writes `t, x1..xd, v1..vd` rows.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let d = self.dim();
        let mut wr = csv::Writer::from_writer(w);
        let mut header = vec!["t".to_string()];
        header.extend((1..=d).map(|k| format!("x{k}")));
        header.extend((1..=d).map(|k| format!("v{k}")));
        wr.write_record(&header)?;
        for i in 0..self.len() {
            let mut row = vec![format!("{:e}", self.times[i])];
            row.extend(self.points[i].iter().map(|v| format!("{v:e}")));
            row.extend(self.velocities[i].iter().map(|v| format!("{v:e}")));
            wr.write_record(&row)?;
        }
        wr.flush()?;
        Ok(())
    }
}

impl Path for Curve {
    fn interval(&self) -> (f64, f64) {
        (self.times[0], *self.times.last().expect("nonempty"))
    }

    fn point(&self, t: f64) -> Vec<f64> {
        self.hermite(t, false)
    }

    fn velocity(&self, t: f64) -> Vec<f64> {
        self.hermite(t, true)
    }
}

/// A path given by closures.
pub struct FnPath<P, V> {
    pub a: f64,
    pub b: f64,
    pub p: P,
    pub v: V,
}

impl<P, V> Path for FnPath<P, V>
where
    P: Fn(f64) -> Vec<f64> + Sync,
    V: Fn(f64) -> Vec<f64> + Sync,
{
    fn interval(&self) -> (f64, f64) {
        (self.a, self.b)
    }

    fn point(&self, t: f64) -> Vec<f64> {
        (self.p)(t)
    }

    fn velocity(&self, t: f64) -> Vec<f64> {
        (self.v)(t)
    }
}

/// Monotone reparametrization s = α(t) with α′ = 1/λ, stored at samples.
#[derive(Clone, Debug)]
pub struct TimeMap {
    pub t: Vec<f64>,
    pub s: Vec<f64>,
    pub lambda: Vec<f64>,
}

impl TimeMap {
    fn interp(xs: &[f64], ys: &[f64], dys: &[f64], x: f64) -> f64 {
        let n = xs.len();
        let i = match xs.binary_search_by(|v| v.total_cmp(&x)) {
            Ok(i) => i.min(n - 2),
            Err(i) => i.saturating_sub(1).min(n - 2),
        };
        let h = xs[i + 1] - xs[i];
        let u = (x - xs[i]) / h;
        let h00 = 2.0 * u.powi(3) - 3.0 * u * u + 1.0;
        let h10 = u.powi(3) - 2.0 * u * u + u;
        let h01 = -2.0 * u.powi(3) + 3.0 * u * u;
        let h11 = u.powi(3) - u * u;
        h00 * ys[i] + h10 * h * dys[i] + h01 * ys[i + 1] + h11 * h * dys[i + 1]
    }

    pub fn alpha(&self, t: f64) -> f64 {
        let d: Vec<f64> = self.lambda.iter().map(|l| 1.0 / l).collect();
        Self::interp(&self.t, &self.s, &d, t)
    }

    pub fn alpha_inverse(&self, s: f64) -> f64 {
        Self::interp(&self.s, &self.t, &self.lambda, s)
    }

    /// b_E⁻¹: recovers η = γ∘α at the original sample times.
    pub fn pull_back(&self, gamma: &Curve) -> Result<Curve> {
        let points = self.t.iter().map(|&t| gamma.point(self.alpha(t))).collect();
        let vel = self
            .t
            .iter()
            .zip(&self.lambda)
            .map(|(&t, &l)| {
                gamma
                    .velocity(self.alpha(t))
                    .into_iter()
                    .map(|v| v / l)
                    .collect()
            })
            .collect();
        Curve::new(self.t.clone(), points, vel)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hermite_reproduces_cubics() {
        let c = Curve::from_fn(0.0, 2.0, 5, |t| {
            (vec![t.powi(3) - t], vec![3.0 * t * t - 1.0])
        })
        .unwrap();
        for k in 0..=40 {
            let t = 2.0 * k as f64 / 40.0;
            assert!((c.point(t)[0] - (t.powi(3) - t)).abs() < 1e-13);
            assert!((c.velocity(t)[0] - (3.0 * t * t - 1.0)).abs() < 1e-12);
        }
    }

    #[test]
    fn csv_has_header_and_rows() {
        let c = Curve::segment(&[0.0, 0.0], &[1.0, 2.0]);
        let mut buf = Vec::new();
        c.write_csv(&mut buf).unwrap();
        let s = String::from_utf8(buf).unwrap();
        assert!(s.starts_with("t,x1,x2,v1,v2"));
        assert_eq!(s.lines().count(), 3);
    }

    #[test]
    fn rejects_bad_times() {
        assert!(Curve::new(
            vec![0.0, 0.0],
            vec![vec![0.0], vec![1.0]],
            vec![vec![1.0], vec![1.0]]
        )
        .is_err());
    }
}
