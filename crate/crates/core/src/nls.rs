//! Strang split-step Fourier solver for `i u_t + u_xx + 2|u|²u = 0` on a
//! periodic window.
//!
//! The dispersive flow is the exact multiplier `e^{-ik²τ}` in Fourier
//! space and the nonlinear flow is the exact phase rotation
//! `u ↦ u e^{2i|u|²τ}`; both preserve `‖u‖²` exactly, so mass drifts only by
//! rounding.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::potential::SampledPotential;
use crate::scattering::{self, SearchBox, Tolerances};
use crate::{c64, I};

/// Fraction of the window on each side counted as "edge" for wrap-around
/// monitoring.
const EDGE_FRACTION: f64 = 0.025;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvolutionConfig {
    pub dt: f64,
    /// May be negative for backward evolution.
    pub t_final: f64,
    pub n_modes: usize,
    pub x_min: f64,
    pub x_max: f64,
    /// Largest tolerated `∫|u|²` over the edge strips at the final time.
    pub edge_mass_tol: f64,
    /// Blow-up guard as a multiple of the initial `max|u|`.
    pub blowup_factor: f64,
}

impl EvolutionConfig {
    /// Configuration matching the grid of `pot`.
    pub fn for_potential(pot: &SampledPotential, dt: f64, t_final: f64) -> Self {
        Self {
            dt,
            t_final,
            n_modes: pot.n_points(),
            x_min: pot.x_min(),
            x_max: pot.x_max(),
            edge_mass_tol: 1e-10,
            blowup_factor: 10.0,
        }
    }

    pub fn dx(&self) -> f64 {
        (self.x_max - self.x_min) / (self.n_modes - 1) as f64
    }

    pub fn validate(&self) -> Result<()> {
        if !self.n_modes.is_power_of_two() || self.n_modes < 16 {
            return Err(Error::InvalidInput(format!(
                "n_modes = {} must be a power of two ≥ 16",
                self.n_modes
            )));
        }
        if !(self.x_min < self.x_max) {
            return Err(Error::InvalidInput("empty evolution window".into()));
        }
        if !(self.dt > 0.0) || !self.t_final.is_finite() {
            return Err(Error::InvalidInput(format!(
                "dt = {} must be positive and t_final finite",
                self.dt
            )));
        }
        if self.dt > self.dx() {
            return Err(Error::InvalidInput(format!(
                "dt = {} exceeds dx = {}; refine the time step",
                self.dt,
                self.dx()
            )));
        }
        Ok(())
    }

    /// Evolution grid `x_min + j dx`, `j < n_modes`.
    pub fn grid(&self) -> Vec<f64> {
        let dx = self.dx();
        (0..self.n_modes)
            .map(|j| self.x_min + j as f64 * dx)
            .collect()
    }
}

/// Conserved quantities at one time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub t: f64,
    pub mass: f64,
    /// `∫ |u_x|² - |u|⁴ dx`.
    pub energy: f64,
    pub edge_mass: f64,
    pub max_abs: f64,
}

/// Split-step propagator on one grid.
pub struct SplitStep {
    n: usize,
    dx: f64,
    k: Vec<f64>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl SplitStep {
    pub fn new(n: usize, dx: f64) -> Self {
        let mut planner = FftPlanner::new();
        let len = n as f64 * dx;
        let k = (0..n)
            .map(|j| {
                let m = if j < n / 2 {
                    j as f64
                } else {
                    j as f64 - n as f64
                };
                2.0 * std::f64::consts::PI * m / len
            })
            .collect();
        Self {
            n,
            dx,
            k,
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
        }
    }

    fn nonlinear(u: &mut [Complex64], tau: f64) {
        for v in u.iter_mut() {
            *v *= (2.0 * I * v.norm_sqr() * tau).exp();
        }
    }

    /// Advances `u` by `steps` Strang steps of signed size `h`. Adjacent
    /// nonlinear half-steps are merged.
    pub fn run(&self, u: &mut [Complex64], h: f64, steps: usize) {
        if steps == 0 {
            return;
        }
        let mult: Vec<Complex64> = self
            .k
            .iter()
            .map(|k| (-I * k * k * h).exp() / self.n as f64)
            .collect();
        Self::nonlinear(u, 0.5 * h);
        for s in 0..steps {
            self.forward.process(u);
            for (v, m) in u.iter_mut().zip(&mult) {
                *v *= m;
            }
            self.inverse.process(u);
            Self::nonlinear(u, if s + 1 == steps { 0.5 * h } else { h });
        }
    }

    pub fn trace(&self, u: &[Complex64], t: f64) -> TraceEntry {
        let mut hat = u.to_vec();
        self.forward.process(&mut hat);
        for (v, k) in hat.iter_mut().zip(&self.k) {
            *v *= I * k / self.n as f64;
        }
        self.inverse.process(&mut hat);
        let mass: f64 = u.iter().map(|v| v.norm_sqr()).sum::<f64>() * self.dx;
        let kinetic: f64 = hat.iter().map(|v| v.norm_sqr()).sum::<f64>() * self.dx;
        let quartic: f64 = u.iter().map(|v| v.norm_sqr() * v.norm_sqr()).sum::<f64>() * self.dx;
        let strip = ((EDGE_FRACTION * self.n as f64).ceil() as usize).max(1);
        let edge_mass = (u[..strip].iter().chain(&u[self.n - strip..]))
            .map(|v| v.norm_sqr())
            .sum::<f64>()
            * self.dx;
        TraceEntry {
            t,
            mass,
            energy: kinetic - quartic,
            edge_mass,
            max_abs: u.iter().map(|v| v.norm()).fold(0.0, f64::max),
        }
    }
}

/// Final state plus conserved-quantity trace and any requested snapshots.
#[derive(Debug, Clone)]
pub struct Evolution {
    pub snapshots: Vec<(f64, SampledPotential)>,
    pub trace: Vec<TraceEntry>,
}

impl Evolution {
    pub fn last(&self) -> &SampledPotential {
        &self.snapshots.last().expect("at least one snapshot").1
    }

    pub fn max_relative_mass_drift(&self) -> f64 {
        let m0 = self.trace[0].mass;
        self.trace
            .iter()
            .map(|e| (e.mass - m0).abs() / m0.max(f64::MIN_POSITIVE))
            .fold(0.0, f64::max)
    }

    pub fn max_relative_energy_drift(&self) -> f64 {
        let e0 = self.trace[0].energy;
        self.trace
            .iter()
            .map(|e| (e.energy - e0).abs() / e0.abs().max(f64::MIN_POSITIVE))
            .fold(0.0, f64::max)
    }
}

fn check_grid(pot: &SampledPotential, cfg: &EvolutionConfig) -> Result<()> {
    cfg.validate()?;
    let tol = 1e-9 * (cfg.x_max - cfg.x_min);
    if pot.n_points() != cfg.n_modes
        || (pot.x_min() - cfg.x_min).abs() > tol
        || (pot.x_max() - cfg.x_max).abs() > tol
    {
        return Err(Error::InvalidInput(format!(
            "potential grid ({} points on [{}, {}]) does not match the evolution grid ({} modes on [{}, {}])",
            pot.n_points(),
            pot.x_min(),
            pot.x_max(),
            cfg.n_modes,
            cfg.x_min,
            cfg.x_max
        )));
    }
    Ok(())
}

/// Evolves `pot` and records snapshots at each time in `times` (all of one
/// sign, ordered away from 0). The trace samples every snapshot time.
pub fn evolve_snapshots(
    pot: &SampledPotential,
    cfg: &EvolutionConfig,
    times: &[f64],
) -> Result<Evolution> {
    check_grid(pot, cfg)?;
    if times.iter().any(|t| !t.is_finite()) {
        return Err(Error::InvalidInput("snapshot times must be finite".into()));
    }
    let monotone = times
        .windows(2)
        .all(|w| (w[1].abs() >= w[0].abs()) && w[0] * w[1] >= 0.0);
    if !monotone {
        return Err(Error::InvalidInput(
            "snapshot times must share a sign and move away from 0".into(),
        ));
    }
    let solver = SplitStep::new(cfg.n_modes, cfg.dx());
    let mut u = pot.samples().to_vec();
    let guard = cfg.blowup_factor * pot.max_modulus().max(f64::MIN_POSITIVE);
    let mut trace = vec![solver.trace(&u, 0.0)];
    let mut snapshots = Vec::with_capacity(times.len());
    let mut now = 0.0;
    for &target in times {
        let span = target - now;
        let steps = (span.abs() / cfg.dt).ceil() as usize;
        if steps > 0 {
            solver.run(&mut u, span / steps as f64, steps);
        }
        now = target;
        let entry = solver.trace(&u, now);
        if !(entry.max_abs <= guard) {
            return Err(Error::BlowUp {
                max: entry.max_abs,
                guard,
            });
        }
        trace.push(entry);
        snapshots.push((
            now,
            SampledPotential::new(pot.x_min(), pot.x_max(), u.clone())?,
        ));
    }
    if let Some(last) = trace.last() {
        if last.edge_mass > cfg.edge_mass_tol {
            return Err(Error::EdgeMass {
                mass: last.edge_mass,
                t: last.t,
            });
        }
    }
    Ok(Evolution { snapshots, trace })
}

/// Doubles the window of `pot` at unchanged spacing, padding with zeros on
/// both sides.
pub fn widen(pot: &SampledPotential) -> Result<SampledPotential> {
    let n = pot.n_points();
    let dx = pot.dx();
    let pad = n / 2;
    let mut samples = vec![c64(0.0, 0.0); 2 * n];
    samples[pad..pad + n].copy_from_slice(pot.samples());
    let x_min = pot.x_min() - pad as f64 * dx;
    SampledPotential::new(x_min, x_min + (2 * n - 1) as f64 * dx, samples)
}

/// [`evolve_snapshots`], doubling the window (and mode count) up to
/// `max_widenings` times while mass reaches the edges. Returns the
/// evolution together with the initial data on the window finally used.
pub fn evolve_snapshots_widening(
    pot: &SampledPotential,
    cfg: &EvolutionConfig,
    times: &[f64],
    max_widenings: usize,
) -> Result<(Evolution, SampledPotential)> {
    let mut pot = pot.clone();
    let mut cfg = *cfg;
    for attempt in 0..=max_widenings {
        match evolve_snapshots(&pot, &cfg, times) {
            Err(Error::EdgeMass { .. }) if attempt < max_widenings => {
                pot = widen(&pot)?;
                cfg = EvolutionConfig {
                    n_modes: pot.n_points(),
                    x_min: pot.x_min(),
                    x_max: pot.x_max(),
                    ..cfg
                };
            }
            other => return other.map(|evo| (evo, pot)),
        }
    }
    unreachable!("loop returns on its last attempt")
}

/// Evolves `pot` to `cfg.t_final`.
pub fn evolve(pot: &SampledPotential, cfg: &EvolutionConfig) -> Result<SampledPotential> {
    Ok(evolve_with_trace(pot, cfg, 1)?.last().clone())
}

/// Evolves to `cfg.t_final`, tracing conserved quantities at `samples`
/// equally spaced times.
pub fn evolve_with_trace(
    pot: &SampledPotential,
    cfg: &EvolutionConfig,
    samples: usize,
) -> Result<Evolution> {
    let samples = samples.max(1);
    let times: Vec<f64> = (1..=samples)
        .map(|i| cfg.t_final * i as f64 / samples as f64)
        .collect();
    evolve_snapshots(pot, cfg, &times)
}

/// Places `pot` on a power-of-two periodic grid with spacing close to
/// `dx_target`, wide enough to hold `[x_min, x_max]`; samples outside the
/// original window are zero and interior values are interpolated linearly.
pub fn embed(
    pot: &SampledPotential,
    x_min: f64,
    x_max: f64,
    n_modes: usize,
) -> Result<SampledPotential> {
    let dx = (x_max - x_min) / (n_modes - 1) as f64;
    let src = pot.samples();
    let h = pot.dx();
    let samples: Vec<Complex64> = (0..n_modes)
        .map(|j| {
            let x = x_min + j as f64 * dx;
            let s = (x - pot.x_min()) / h;
            if s < 0.0 || s > (pot.n_points() - 1) as f64 {
                return c64(0.0, 0.0);
            }
            let i = (s.floor() as usize).min(pot.n_points() - 2);
            let f = s - i as f64;
            src[i] * (1.0 - f) + src[i + 1] * f
        })
        .collect();
    SampledPotential::new(x_min, x_max, samples)
}

/// Outcome of comparing scattering data before and after evolution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IsospectralityReport {
    pub t: f64,
    pub max_a_change: f64,
    pub max_r_defect: f64,
    pub pole_drift: f64,
    pub coupling_defect: f64,
    pub mass_drift: f64,
    pub poles_before: usize,
    pub poles_after: usize,
}

/// Evolves `pot0` to `t` and compares `a(z)` on `grid`, the zeros of `a`
/// in `bx`, `r(z)` against `e^{4iz²t} r₀(z)` and the norming constants
/// against `e^{4iz_k²t} c_k(0)`.
pub fn isospectrality_check(
    pot0: &SampledPotential,
    t: f64,
    cfg: &EvolutionConfig,
    grid: &[f64],
    bx: &SearchBox,
    tol: &Tolerances,
) -> Result<IsospectralityReport> {
    let cfg = EvolutionConfig { t_final: t, ..*cfg };
    let evo = evolve_with_trace(pot0, &cfg, 1)?;
    let pot_t = evo.last();
    let before = scattering::reflection_coefficient(pot0, grid, tol)?;
    let after = scattering::reflection_coefficient(pot_t, grid, tol)?;
    let max_a_change = before
        .a
        .iter()
        .zip(&after.a)
        .map(|(a, b)| (a - b).norm())
        .fold(0.0, f64::max);
    let max_r_defect = before
        .r
        .iter()
        .zip(&after.r)
        .zip(grid)
        .map(|((r0, rt), &z)| (rt - (4.0 * I * z * z * t).exp() * r0).norm())
        .fold(0.0, f64::max);
    let p0 = scattering::pole_search(pot0, bx, tol)?;
    let pt = scattering::pole_search(pot_t, bx, tol)?;
    let mut pole_drift = 0.0f64;
    let mut coupling_defect = 0.0f64;
    if p0.len() == pt.len() {
        let z0: Vec<Complex64> = p0.iter().map(|p| p.z).collect();
        let c0 = scattering::norming_constants(
            pot0,
            &z0,
            &p0.iter().map(|p| p.a_prime).collect::<Vec<_>>(),
            tol,
        )?;
        let zt: Vec<Complex64> = pt.iter().map(|p| p.z).collect();
        let ct = scattering::norming_constants(
            pot_t,
            &zt,
            &pt.iter().map(|p| p.a_prime).collect::<Vec<_>>(),
            tol,
        )?;
        for (k, &z) in z0.iter().enumerate() {
            let (j, d) = zt
                .iter()
                .enumerate()
                .map(|(j, w)| (j, (w - z).norm()))
                .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
                .unwrap();
            pole_drift = pole_drift.max(d);
            let expected = c0[k] * (4.0 * I * z * z * t).exp();
            coupling_defect = coupling_defect.max((ct[j] / expected - 1.0).norm());
        }
    } else {
        pole_drift = f64::INFINITY;
        coupling_defect = f64::INFINITY;
    }
    Ok(IsospectralityReport {
        t,
        max_a_change,
        max_r_defect,
        pole_drift,
        coupling_defect,
        mass_drift: evo.max_relative_mass_drift(),
        poles_before: p0.len(),
        poles_after: pt.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_stays_zero() {
        let pot = SampledPotential::from_fn(-20.0, 20.0, 256, |_| c64(0.0, 0.0)).unwrap();
        let cfg = EvolutionConfig::for_potential(&pot, 0.01, 1.0);
        let out = evolve(&pot, &cfg).unwrap();
        assert!(out.samples().iter().all(|v| v.norm() == 0.0));
    }

    #[test]
    fn rejects_bad_config() {
        let pot = SampledPotential::from_fn(-20.0, 20.0, 200, |_| c64(0.0, 0.0)).unwrap();
        let cfg = EvolutionConfig::for_potential(&pot, 0.01, 1.0);
        assert!(evolve(&pot, &cfg).is_err());
        let pot = SampledPotential::from_fn(-20.0, 20.0, 256, |_| c64(0.0, 0.0)).unwrap();
        let cfg = EvolutionConfig::for_potential(&pot, 1.0, 1.0);
        assert!(evolve(&pot, &cfg).is_err());
    }

    #[test]
    fn stationary_soliton_keeps_its_profile() {
        let n = 1024;
        let (a, b) = (-32.0, 32.0);
        let pot = SampledPotential::from_fn(a, b, n, |x| c64(1.0 / x.cosh(), 0.0)).unwrap();
        let cfg = EvolutionConfig::for_potential(&pot, 1e-3, 5.0);
        let evo = evolve_with_trace(&pot, &cfg, 5).unwrap();
        let dev = evo
            .last()
            .samples()
            .iter()
            .zip(pot.grid())
            .map(|(u, x)| (u.norm() - 1.0 / x.cosh()).abs())
            .fold(0.0, f64::max);
        assert!(dev < 1e-6, "{dev}");
        assert!(evo.max_relative_mass_drift() < 1e-12);
    }

    #[test]
    fn backward_then_forward_returns() {
        let n = 512;
        let pot =
            SampledPotential::from_fn(-25.0, 25.0, n, |x| c64(1.2 / x.cosh(), 0.1 * x / x.cosh()))
                .unwrap();
        let back = evolve(&pot, &EvolutionConfig::for_potential(&pot, 1e-3, -0.5)).unwrap();
        let fwd = evolve(&back, &EvolutionConfig::for_potential(&pot, 1e-3, 0.5)).unwrap();
        let err = fwd
            .samples()
            .iter()
            .zip(pot.samples())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        assert!(err < 1e-9, "{err}");
    }
}
