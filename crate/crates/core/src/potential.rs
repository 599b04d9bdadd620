use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::{self, Pair};

pub const MIN_POINTS: usize = 16;

/// A complex field `u(x)` sampled on the uniform grid
/// `x_i = x_min + i (x_max - x_min) / (n - 1)`, endpoints included.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledPotential {
    x_min: f64,
    x_max: f64,
    samples: Vec<Complex64>,
}

impl SampledPotential {
    pub fn new(x_min: f64, x_max: f64, samples: Vec<Complex64>) -> Result<Self> {
        if !(x_min.is_finite() && x_max.is_finite()) || x_min >= x_max {
            return Err(Error::InvalidInput(format!(
                "window [{x_min}, {x_max}] is empty or not finite"
            )));
        }
        if samples.len() < MIN_POINTS {
            return Err(Error::InvalidInput(format!(
                "need at least {MIN_POINTS} samples, got {}",
                samples.len()
            )));
        }
        if let Some(index) = samples
            .iter()
            .position(|u| !(u.re.is_finite() && u.im.is_finite()))
        {
            return Err(Error::InvalidSample {
                index,
                reason: "non-finite value".into(),
            });
        }
        Ok(Self {
            x_min,
            x_max,
            samples,
        })
    }

    /// Samples `f` on `n` uniformly spaced nodes of `[x_min, x_max]`.
    pub fn from_fn(x_min: f64, x_max: f64, n: usize, f: impl Fn(f64) -> Complex64) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidInput(format!(
                "need at least {MIN_POINTS} samples, got {n}"
            )));
        }
        let dx = (x_max - x_min) / (n - 1) as f64;
        let samples = (0..n).map(|i| f(x_min + i as f64 * dx)).collect();
        Self::new(x_min, x_max, samples)
    }

    /// Builds a potential from explicit nodes, which must be uniformly spaced.
    pub fn from_nodes(xs: &[f64], samples: Vec<Complex64>) -> Result<Self> {
        if xs.len() != samples.len() {
            return Err(Error::InvalidInput(
                "x and sample columns differ in length".into(),
            ));
        }
        if xs.len() < MIN_POINTS {
            return Err(Error::InvalidInput(format!(
                "need at least {MIN_POINTS} samples, got {}",
                xs.len()
            )));
        }
        let n = xs.len();
        let (x_min, x_max) = (xs[0], xs[n - 1]);
        let dx = (x_max - x_min) / (n - 1) as f64;
        for (i, &x) in xs.iter().enumerate() {
            let expected = x_min + i as f64 * dx;
            if (x - expected).abs() > 1e-6 * dx.abs().max(f64::MIN_POSITIVE) {
                return Err(Error::InvalidInput(format!(
                    "grid is not uniform at row {i}: x = {x}, expected {expected}"
                )));
            }
        }
        Self::new(x_min, x_max, samples)
    }

    pub fn x_min(&self) -> f64 {
        self.x_min
    }

    pub fn x_max(&self) -> f64 {
        self.x_max
    }

    pub fn n_points(&self) -> usize {
        self.samples.len()
    }

    pub fn dx(&self) -> f64 {
        (self.x_max - self.x_min) / (self.samples.len() - 1) as f64
    }

    pub fn x(&self, i: usize) -> f64 {
        self.x_min + i as f64 * self.dx()
    }

    pub fn grid(&self) -> Vec<f64> {
        (0..self.n_points()).map(|i| self.x(i)).collect()
    }

    pub fn samples(&self) -> &[Complex64] {
        &self.samples
    }

    pub fn map(&self, f: impl Fn(f64, Complex64) -> Complex64) -> Self {
        let samples = self
            .samples
            .iter()
            .enumerate()
            .map(|(i, &u)| f(self.x(i), u))
            .collect();
        Self {
            x_min: self.x_min,
            x_max: self.x_max,
            samples,
        }
    }

    /// The pointwise complex conjugate `x ↦ ū(x)`.
    pub fn conj(&self) -> Self {
        self.map(|_, u| u.conj())
    }

    /// Largest modulus at the two window ends.
    pub fn tail_magnitude(&self) -> f64 {
        let n = self.samples.len();
        self.samples[0].norm().max(self.samples[n - 1].norm())
    }

    /// Fails unless the potential is effectively supported inside the window.
    pub fn check_tails(&self, tail_tol: f64) -> Result<()> {
        let tail = self.tail_magnitude();
        if tail > tail_tol {
            return Err(Error::InvalidInput(format!(
                "potential does not decay inside the window: |u| = {tail:e} at the edge (tolerance {tail_tol:e})"
            )));
        }
        Ok(())
    }

    /// Grid L² mass `Σ |u_i|² dx`.
    pub fn mass(&self) -> f64 {
        self.samples.iter().map(|u| u.norm_sqr()).sum::<f64>() * self.dx()
    }

    pub fn max_modulus(&self) -> f64 {
        self.samples.iter().map(|u| u.norm()).fold(0.0, f64::max)
    }

    pub fn to_envelope(&self) -> PotentialEnvelope {
        PotentialEnvelope {
            x_min: self.x_min,
            x_max: self.x_max,
            n_points: self.n_points(),
            samples: io::to_pairs(&self.samples),
            meta: None,
        }
    }

    pub fn from_envelope(env: &PotentialEnvelope) -> Result<Self> {
        if env.samples.len() != env.n_points {
            return Err(Error::InvalidInput(format!(
                "n_points = {} but {} samples given",
                env.n_points,
                env.samples.len()
            )));
        }
        Self::new(env.x_min, env.x_max, io::from_pairs(&env.samples))
    }

    pub fn write_csv<W: std::io::Write>(&self, w: W) -> Result<()> {
        io::write_field_csv(w, &self.grid(), &self.samples)
    }

    pub fn read_csv<R: std::io::Read>(r: R) -> Result<Self> {
        let (xs, us) = io::read_field_csv(r)?;
        Self::from_nodes(&xs, us)
    }

    /// Loads a potential from `.csv` or `.json` (chosen by extension).
    pub fn load(path: &Path) -> Result<Self> {
        match path.extension().and_then(|e| e.to_str()) {
            Some("json") => Self::from_envelope(&io::read_json(path)?),
            _ => Self::read_csv(std::fs::File::open(path)?),
        }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        match path.extension().and_then(|e| e.to_str()) {
            Some("json") => io::write_json(path, &self.to_envelope()),
            _ => self.write_csv(std::fs::File::create(path)?),
        }
    }
}

/// JSON form of a [`SampledPotential`].
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct PotentialEnvelope {
    pub x_min: f64,
    pub x_max: f64,
    pub n_points: usize,
    pub samples: Vec<Pair>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub meta: Option<serde_json::Value>,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sech(x: f64) -> f64 {
        1.0 / x.cosh()
    }

    #[test]
    fn rejects_short_and_inverted_windows() {
        let s = vec![Complex64::new(0.0, 0.0); 8];
        assert!(SampledPotential::new(0.0, 1.0, s).is_err());
        let s = vec![Complex64::new(0.0, 0.0); 32];
        assert!(SampledPotential::new(1.0, 0.0, s.clone()).is_err());
        assert!(SampledPotential::new(0.0, 1.0, s).is_ok());
    }

    #[test]
    fn nan_sample_is_reported_with_index() {
        let mut s = vec![Complex64::new(0.0, 0.0); 32];
        s[7] = Complex64::new(f64::NAN, 0.0);
        match SampledPotential::new(0.0, 1.0, s) {
            Err(Error::InvalidSample { index, .. }) => assert_eq!(index, 7),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn tail_check() {
        let p = SampledPotential::from_fn(-30.0, 30.0, 601, |x| sech(x).into()).unwrap();
        assert!(p.check_tails(1e-8).is_ok());
        let p = SampledPotential::from_fn(-5.0, 5.0, 101, |x| sech(x).into()).unwrap();
        assert!(p.check_tails(1e-8).is_err());
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let p = SampledPotential::from_fn(-10.0, 10.0, 64, |x| {
            Complex64::new(sech(x), 0.1 * x * sech(x))
        })
        .unwrap();
        let mut buf = Vec::new();
        p.write_csv(&mut buf).unwrap();
        let q = SampledPotential::read_csv(buf.as_slice()).unwrap();
        assert_eq!(p.samples(), q.samples());
        assert_eq!(p.x_min(), q.x_min());
        assert!((p.x_max() - q.x_max()).abs() < 1e-12);
    }

    #[test]
    fn csv_with_nan_is_invalid_sample() {
        let text = "x,re_u,im_u\n0,0,0\n1,nan,0\n";
        match SampledPotential::read_csv(text.as_bytes()) {
            Err(e) => assert_eq!(e.code(), "invalid-sample"),
            Ok(_) => panic!("accepted NaN"),
        }
    }

    #[test]
    fn non_uniform_csv_grid_is_rejected() {
        let mut text = String::from("x,re,im\n");
        for i in 0..20 {
            let x = if i == 10 { 10.3 } else { i as f64 };
            text.push_str(&format!("{x},0,0\n"));
        }
        assert!(SampledPotential::read_csv(text.as_bytes()).is_err());
    }

    #[test]
    fn mass_of_sech_squared() {
        let p = SampledPotential::from_fn(-40.0, 40.0, 8001, |x| sech(x).into()).unwrap();
        assert!((p.mass() - 2.0).abs() < 1e-10);
    }
}
