//! Direct scattering for the Zakharov–Shabat system `v_x = P(z; x) v`,
//! `P = [[-iz, u], [-ū, iz]]`.
//!
//! Jost solutions are propagated in the gauge-transformed variables
//! `ψ₁⁽⁻⁾ e^{izx}` and `ψ₂⁽⁺⁾ e^{-izx}`, which stay bounded in the closed
//! upper half-plane. Each grid interval is advanced with the fourth-order
//! Magnus exponential built from `u` at the two Gauss–Legendre points; on
//! the real axis the step is exactly unitary, so `|a|² + |b|² = 1` holds up
//! to rounding.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::{self, Envelope};
use crate::mat2::{self, Mat2, Vec2};
use crate::potential::SampledPotential;
use crate::{c64, I};

/// Numerical thresholds for the scattering transform.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Newton stops once `|a(z_j)| <= root_tol`.
    pub root_tol: f64,
    pub unitarity_tol: f64,
    /// Relative residual allowed in the `ψ₁⁽⁻⁾ = γ ψ₂⁽⁺⁾` fit.
    pub gamma_tol: f64,
    pub tail_tol: f64,
    /// `|a|` below this on the real axis is a spectral singularity.
    pub a_floor: f64,
    pub deriv_floor: f64,
    pub pole_sep_tol: f64,
    /// Step for the central difference `a'(z) ≈ (a(z+h) - a(z-h)) / 2h`.
    pub h_deriv: f64,
    /// Bound on the step-doubling error estimate of the Jost integrator.
    pub step_tol: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            root_tol: 1e-10,
            unitarity_tol: 1e-7,
            gamma_tol: 1e-6,
            tail_tol: 1e-8,
            a_floor: 1e-8,
            deriv_floor: 1e-8,
            pole_sep_tol: 1e-6,
            h_deriv: 1e-5,
            step_tol: 1e-7,
        }
    }
}

const GAUSS_OFFSET: f64 = 0.288_675_134_594_812_9; // sqrt(3)/6

/// Cubic Lagrange weights for nodes at 0, 1, 2, 3 evaluated at `s`.
fn lagrange4(s: f64) -> [f64; 4] {
    [
        -(s - 1.0) * (s - 2.0) * (s - 3.0) / 6.0,
        s * (s - 2.0) * (s - 3.0) / 2.0,
        -s * (s - 1.0) * (s - 3.0) / 2.0,
        s * (s - 1.0) * (s - 2.0) / 6.0,
    ]
}

/// Propagator for the ZS system on one potential grid. Holds the potential
/// interpolated to the Gauss points of every grid interval.
pub(crate) struct ZsIntegrator<'a> {
    pot: &'a SampledPotential,
    gauss: Vec<(Complex64, Complex64)>,
}

impl<'a> ZsIntegrator<'a> {
    pub(crate) fn new(pot: &'a SampledPotential) -> Self {
        let n = pot.n_points();
        let gauss = (0..n - 1)
            .map(|i| {
                let x = pot.x(i);
                let h = pot.dx();
                (
                    interpolate(pot, x + (0.5 - GAUSS_OFFSET) * h),
                    interpolate(pot, x + (0.5 + GAUSS_OFFSET) * h),
                )
            })
            .collect();
        Self { pot, gauss }
    }

    /// Magnus exponential over `[x, x + h]`, given `u` at the Gauss points.
    fn step_exp(z: Complex64, h: f64, u1: Complex64, u2: Complex64, inverse: bool) -> Mat2 {
        let a1 = [[-I * z, u1], [-u1.conj(), I * z]];
        let a2 = [[-I * z, u2], [-u2.conj(), I * z]];
        let comm = commutator(&a2, &a1);
        let k = 3f64.sqrt() * h * h / 12.0;
        let mut om = [[c64(0.0, 0.0); 2]; 2];
        for r in 0..2 {
            for c in 0..2 {
                om[r][c] = 0.5 * h * (a1[r][c] + a2[r][c]) + k * comm[r][c];
            }
        }
        if inverse {
            for row in om.iter_mut() {
                for v in row.iter_mut() {
                    *v = -*v;
                }
            }
        }
        expm_traceless(&om)
    }

    fn interval_step(&self, z: Complex64, i: usize, stride: usize, inverse: bool) -> (Mat2, f64) {
        let n = self.pot.n_points();
        let j = (i + stride).min(n - 1);
        let h = self.pot.x(j) - self.pot.x(i);
        let (u1, u2) = if j == i + 1 {
            self.gauss[i]
        } else {
            let x = self.pot.x(i);
            (
                interpolate(self.pot, x + (0.5 - GAUSS_OFFSET) * h),
                interpolate(self.pot, x + (0.5 + GAUSS_OFFSET) * h),
            )
        };
        (Self::step_exp(z, h, u1, u2, inverse), h)
    }

    fn node_steps(&self, stride: usize) -> Vec<usize> {
        let n = self.pot.n_points();
        let mut nodes: Vec<usize> = (0..n).step_by(stride).collect();
        if *nodes.last().unwrap() != n - 1 {
            nodes.push(n - 1);
        }
        nodes
    }

    /// `ψ₁⁽⁻⁾ e^{izx}` at the right end of the window.
    pub(crate) fn left_end(&self, z: Complex64, stride: usize) -> Vec2 {
        let nodes = self.node_steps(stride);
        let mut y = [c64(1.0, 0.0), c64(0.0, 0.0)];
        for w in nodes.windows(2) {
            let (e, h) = self.interval_step(z, w[0], w[1] - w[0], false);
            y = scale(&mat2::apply(&e, &y), (I * z * h).exp());
        }
        y
    }

    /// Gauge-transformed left solution at every node.
    fn left_trajectory(&self, z: Complex64) -> Vec<Vec2> {
        let n = self.pot.n_points();
        let mut out = Vec::with_capacity(n);
        let mut y = [c64(1.0, 0.0), c64(0.0, 0.0)];
        out.push(y);
        for i in 0..n - 1 {
            let (e, h) = self.interval_step(z, i, 1, false);
            y = scale(&mat2::apply(&e, &y), (I * z * h).exp());
            out.push(y);
        }
        out
    }

    /// Gauge-transformed right solution `ψ₂⁽⁺⁾ e^{-izx}` at every node.
    fn right_trajectory(&self, z: Complex64) -> Vec<Vec2> {
        let n = self.pot.n_points();
        let mut out = vec![[c64(0.0, 0.0); 2]; n];
        let mut y = [c64(0.0, 0.0), c64(1.0, 0.0)];
        out[n - 1] = y;
        for i in (0..n - 1).rev() {
            let (e, h) = self.interval_step(z, i, 1, true);
            y = scale(&mat2::apply(&e, &y), (I * z * h).exp());
            out[i] = y;
        }
        out
    }

    pub(crate) fn a(&self, z: Complex64) -> Complex64 {
        self.left_end(z, 1)[0]
    }

    fn a_and_b(&self, z: f64) -> (Complex64, Complex64) {
        let y = self.left_end(c64(z, 0.0), 1);
        let b = (-2.0 * I * z * self.pot.x_max()).exp() * y[1];
        (y[0], b)
    }

    fn derivative(&self, z: Complex64, h: f64) -> Complex64 {
        (self.a(z + h) - self.a(z - h)) / (2.0 * h)
    }
}

fn interpolate(pot: &SampledPotential, x: f64) -> Complex64 {
    let n = pot.n_points();
    let h = pot.dx();
    let s = (x - pot.x_min()) / h;
    let base = (s.floor() as isize - 1).clamp(0, n as isize - 4) as usize;
    let w = lagrange4(s - base as f64);
    let u = pot.samples();
    w[0] * u[base] + w[1] * u[base + 1] + w[2] * u[base + 2] + w[3] * u[base + 3]
}

fn commutator(a: &Mat2, b: &Mat2) -> Mat2 {
    mat2::sub(&mat2::mul(a, b), &mat2::mul(b, a))
}

fn scale(v: &Vec2, s: Complex64) -> Vec2 {
    [v[0] * s, v[1] * s]
}

/// `exp(Ω)` for traceless 2×2 `Ω`, using `Ω² = s² I`.
fn expm_traceless(om: &Mat2) -> Mat2 {
    let s2 = om[0][0] * om[0][0] + om[0][1] * om[1][0];
    let (ch, sh_over_s) = if s2.norm() < 1e-6 {
        // Even series in s²; truncation error below 1e-25.
        (
            1.0 + s2 / 2.0 + s2 * s2 / 24.0 + s2 * s2 * s2 / 720.0,
            1.0 + s2 / 6.0 + s2 * s2 / 120.0 + s2 * s2 * s2 / 5040.0,
        )
    } else {
        let s = s2.sqrt();
        (s.cosh(), s.sinh() / s)
    };
    [
        [ch + sh_over_s * om[0][0], sh_over_s * om[0][1]],
        [sh_over_s * om[1][0], ch + sh_over_s * om[1][1]],
    ]
}

fn check_upper(z: Complex64) -> Result<()> {
    if !(z.re.is_finite() && z.im.is_finite()) {
        return Err(Error::Domain {
            z,
            reason: "not finite",
        });
    }
    if z.im < 0.0 {
        return Err(Error::Domain {
            z,
            reason: "Jost solutions ψ₁⁽⁻⁾, ψ₂⁽⁺⁾ exist only for Im z ≥ 0",
        });
    }
    Ok(())
}

/// The Jost solutions `ψ₁⁽⁻⁾` (normalised at the left end) and `ψ₂⁽⁺⁾`
/// (normalised at the right end), sampled on the potential grid.
#[derive(Debug, Clone)]
pub struct JostPair {
    pub z: Complex64,
    pub x: Vec<f64>,
    pub left: Vec<Vec2>,
    pub right: Vec<Vec2>,
    /// Step-doubling estimate of the error in `a(z)`.
    pub error_estimate: f64,
}

impl JostPair {
    /// `det[ψ₁⁽⁻⁾ | ψ₂⁽⁺⁾]` at node `i`; independent of `i` up to
    /// integration error.
    pub fn wronskian(&self, i: usize) -> Complex64 {
        let l = self.left[i];
        let r = self.right[i];
        l[0] * r[1] - l[1] * r[0]
    }
}

/// Integrates both Jost solutions across the window.
pub fn jost_solutions(pot: &SampledPotential, z: Complex64, tol: &Tolerances) -> Result<JostPair> {
    check_upper(z)?;
    let zs = ZsIntegrator::new(pot);
    let left = zs.left_trajectory(z);
    let right = zs.right_trajectory(z);
    let fine = left[left.len() - 1][0];
    let coarse = zs.left_end(z, 2)[0];
    let error_estimate = (fine - coarse).norm() / 15.0;
    if !error_estimate.is_finite() || error_estimate > tol.step_tol {
        return Err(Error::Accuracy(format!(
            "step-doubling error {error_estimate:e} at z = {z} exceeds {:e}; refine the grid",
            tol.step_tol
        )));
    }
    let x = pot.grid();
    let left = left
        .iter()
        .zip(&x)
        .map(|(y, &x)| scale(y, (-I * z * x).exp()))
        .collect();
    let right = right
        .iter()
        .zip(&x)
        .map(|(y, &x)| scale(y, (I * z * x).exp()))
        .collect();
    Ok(JostPair {
        z,
        x,
        left,
        right,
        error_estimate,
    })
}

/// `a(z) = det[ψ₁⁽⁻⁾ | ψ₂⁽⁺⁾]` for `Im z ≥ 0`.
pub fn transmission_a(pot: &SampledPotential, z: Complex64) -> Result<Complex64> {
    check_upper(z)?;
    Ok(ZsIntegrator::new(pot).a(z))
}

/// `r`, `a` and `b` on a real grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ReflectionSamples {
    pub grid: Vec<f64>,
    pub r: Vec<Complex64>,
    pub a: Vec<Complex64>,
    pub b: Vec<Complex64>,
}

impl ReflectionSamples {
    pub fn max_unitarity_defect(&self) -> f64 {
        self.a
            .iter()
            .zip(&self.b)
            .map(|(a, b)| (a.norm_sqr() + b.norm_sqr() - 1.0).abs())
            .fold(0.0, f64::max)
    }

    pub fn max_abs_r(&self) -> f64 {
        self.r.iter().map(|r| r.norm()).fold(0.0, f64::max)
    }
}

/// `r(z) = b(z)/a(z)` on a real grid; `b` comes from the second Wronskian
/// `det[ψ₁⁽⁺⁾ | ψ₁⁽⁻⁾]` evaluated at the right end of the window.
pub fn reflection_coefficient(
    pot: &SampledPotential,
    grid: &[f64],
    tol: &Tolerances,
) -> Result<ReflectionSamples> {
    if let Some(z) = grid.iter().find(|z| !z.is_finite()) {
        return Err(Error::InvalidInput(format!("reflection grid contains {z}")));
    }
    let zs = ZsIntegrator::new(pot);
    let ab: Vec<(Complex64, Complex64)> = grid.par_iter().map(|&z| zs.a_and_b(z)).collect();
    let mut r = Vec::with_capacity(grid.len());
    for (&z, &(a, b)) in grid.iter().zip(&ab) {
        if a.norm() < tol.a_floor {
            return Err(Error::SpectralSingularity {
                z,
                modulus: a.norm(),
            });
        }
        let defect = (a.norm_sqr() + b.norm_sqr() - 1.0).abs();
        if defect > tol.unitarity_tol {
            return Err(Error::Accuracy(format!(
                "|a|² + |b|² - 1 = {defect:e} at z = {z}"
            )));
        }
        r.push(b / a);
    }
    Ok(ReflectionSamples {
        grid: grid.to_vec(),
        r,
        a: ab.iter().map(|p| p.0).collect(),
        b: ab.iter().map(|p| p.1).collect(),
    })
}

/// Axis-aligned rectangle `[re_min, re_max] × [im_min, im_max]` in ℂ⁺.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchBox {
    pub re_min: f64,
    pub re_max: f64,
    pub im_min: f64,
    pub im_max: f64,
}

impl SearchBox {
    pub fn new(re_min: f64, re_max: f64, im_min: f64, im_max: f64) -> Result<Self> {
        let b = Self {
            re_min,
            re_max,
            im_min,
            im_max,
        };
        if !(re_min < re_max && im_min < im_max)
            || ![re_min, re_max, im_min, im_max]
                .iter()
                .all(|v| v.is_finite())
        {
            return Err(Error::InvalidInput(format!("degenerate search box {b:?}")));
        }
        if im_min <= 0.0 {
            return Err(Error::InvalidInput(format!(
                "search box must lie in the open upper half-plane (im_min = {im_min})"
            )));
        }
        Ok(b)
    }

    fn corners(&self) -> [Complex64; 4] {
        [
            c64(self.re_min, self.im_min),
            c64(self.re_max, self.im_min),
            c64(self.re_max, self.im_max),
            c64(self.re_min, self.im_max),
        ]
    }

    fn contains(&self, z: Complex64, margin: f64) -> bool {
        z.re >= self.re_min - margin
            && z.re <= self.re_max + margin
            && z.im >= self.im_min - margin
            && z.im <= self.im_max + margin
    }

    fn edge_distance(&self, z: Complex64) -> f64 {
        (z.re - self.re_min)
            .min(self.re_max - z.re)
            .min(z.im - self.im_min)
            .min(self.im_max - z.im)
    }

    fn split(&self, fx: f64, fy: f64) -> [SearchBox; 4] {
        let xm = self.re_min + fx * (self.re_max - self.re_min);
        let ym = self.im_min + fy * (self.im_max - self.im_min);
        [
            SearchBox {
                re_min: self.re_min,
                re_max: xm,
                im_min: self.im_min,
                im_max: ym,
            },
            SearchBox {
                re_min: xm,
                re_max: self.re_max,
                im_min: self.im_min,
                im_max: ym,
            },
            SearchBox {
                re_min: self.re_min,
                re_max: xm,
                im_min: ym,
                im_max: self.im_max,
            },
            SearchBox {
                re_min: xm,
                re_max: self.re_max,
                im_min: ym,
                im_max: self.im_max,
            },
        ]
    }

    fn scale(&self) -> f64 {
        (self.re_max - self.re_min).min(self.im_max - self.im_min)
    }
}

/// A simple zero of `a` with its derivative.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoleEstimate {
    pub z: Complex64,
    pub a_prime: Complex64,
}

/// Winding number of `a` around the boundary of `bx`, tracked by summing
/// principal phase increments between boundary samples. Segments are
/// bisected until every increment is below π/4.
fn winding_number(zs: &ZsIntegrator, bx: &SearchBox) -> std::result::Result<i64, Complex64> {
    const SAMPLES_PER_EDGE: usize = 24;
    let corners = bx.corners();
    let mut total = 0.0;
    for k in 0..4 {
        let p = corners[k];
        let q = corners[(k + 1) % 4];
        let mut prev_z = p;
        let mut prev_a = zs.a(p);
        for s in 1..=SAMPLES_PER_EDGE {
            let z = p + (q - p) * (s as f64 / SAMPLES_PER_EDGE as f64);
            let a = zs.a(z);
            total += phase_increment(zs, prev_z, prev_a, z, a, 0)?;
            prev_z = z;
            prev_a = a;
        }
    }
    let w = total / (2.0 * PI);
    let rounded = w.round();
    if (w - rounded).abs() > 0.05 {
        return Err(corners[0]);
    }
    Ok(rounded as i64)
}

fn phase_increment(
    zs: &ZsIntegrator,
    z0: Complex64,
    a0: Complex64,
    z1: Complex64,
    a1: Complex64,
    depth: u32,
) -> std::result::Result<f64, Complex64> {
    const NEAR_ZERO: f64 = 1e-9;
    if a0.norm() < NEAR_ZERO {
        return Err(z0);
    }
    if a1.norm() < NEAR_ZERO {
        return Err(z1);
    }
    let d = (a1 / a0).arg();
    if d.abs() <= PI / 4.0 {
        return Ok(d);
    }
    if depth >= 30 {
        return Err(z0);
    }
    let zm = 0.5 * (z0 + z1);
    let am = zs.a(zm);
    Ok(phase_increment(zs, z0, a0, zm, am, depth + 1)?
        + phase_increment(zs, zm, am, z1, a1, depth + 1)?)
}

fn newton(zs: &ZsIntegrator, start: Complex64, tol: &Tolerances) -> Option<Complex64> {
    let mut z = start;
    for _ in 0..60 {
        let a = zs.a(z);
        if a.norm() <= tol.root_tol {
            return Some(z);
        }
        let da = zs.derivative(z, tol.h_deriv);
        if da.norm() < tol.deriv_floor {
            return None;
        }
        let step = a / da;
        z -= step;
        if !(z.re.is_finite() && z.im.is_finite()) || z.im <= 0.0 {
            return None;
        }
        if step.norm() < 1e-15 * (1.0 + z.norm()) {
            return (zs.a(z).norm() <= tol.root_tol).then_some(z);
        }
    }
    None
}

/// Off-centre split fractions; a symmetric bisection would place cell
/// edges on the imaginary axis, where symmetric potentials put their zeros.
const SPLITS: [(f64, f64); 3] = [(0.4853, 0.5147), (0.4219, 0.5731), (0.5581, 0.4467)];

fn search_cell(
    zs: &ZsIntegrator,
    cell: &SearchBox,
    count: i64,
    depth: u32,
    tol: &Tolerances,
    out: &mut Vec<Complex64>,
) -> Result<()> {
    if count <= 0 {
        return Ok(());
    }
    if count == 1 {
        let centre = c64(
            0.5 * (cell.re_min + cell.re_max),
            0.5 * (cell.im_min + cell.im_max),
        );
        if let Some(z) = newton(zs, centre, tol) {
            if cell.contains(z, 1e-9 * (1.0 + cell.scale())) {
                out.push(z);
                return Ok(());
            }
        }
    }
    if depth >= 24 {
        return Err(Error::CountMismatch {
            expected: count as usize,
            found: 0,
        });
    }
    'splits: for &(fx, fy) in &SPLITS {
        let children = cell.split(fx, fy);
        let mut counts = [0i64; 4];
        for (k, child) in children.iter().enumerate() {
            match winding_number(zs, child) {
                Ok(w) => counts[k] = w,
                Err(_) => continue 'splits,
            }
        }
        if counts.iter().sum::<i64>() != count {
            continue;
        }
        for (child, &w) in children.iter().zip(&counts) {
            search_cell(zs, child, w, depth + 1, tol, out)?;
        }
        return Ok(());
    }
    Err(Error::CountMismatch {
        expected: count as usize,
        found: 0,
    })
}

/// All zeros of `a` inside `bx`, located by argument-principle counting,
/// quad-tree isolation and Newton refinement.
pub fn pole_search(
    pot: &SampledPotential,
    bx: &SearchBox,
    tol: &Tolerances,
) -> Result<Vec<PoleEstimate>> {
    let bx = SearchBox::new(bx.re_min, bx.re_max, bx.im_min, bx.im_max)?;
    let zs = ZsIntegrator::new(pot);
    let total = winding_number(&zs, &bx).map_err(|z| Error::PoleNearBoundary { z })?;
    if total < 0 {
        return Err(Error::Accuracy(format!(
            "negative winding number {total} for an analytic a(z)"
        )));
    }
    let mut roots = Vec::new();
    search_cell(&zs, &bx, total, 0, tol, &mut roots)?;
    roots.sort_by(|a, b| {
        a.im.partial_cmp(&b.im)
            .unwrap()
            .then(a.re.partial_cmp(&b.re).unwrap())
    });
    let mut distinct: Vec<Complex64> = Vec::with_capacity(roots.len());
    for z in roots {
        if distinct.iter().all(|w| (w - z).norm() > tol.pole_sep_tol) {
            distinct.push(z);
        }
    }
    if distinct.len() != total as usize {
        return Err(Error::CountMismatch {
            expected: total as usize,
            found: distinct.len(),
        });
    }
    let margin = 1e-3 * bx.scale();
    let mut out = Vec::with_capacity(distinct.len());
    for z in distinct {
        if bx.edge_distance(z) < margin {
            return Err(Error::PoleNearBoundary { z });
        }
        let a_prime = zs.derivative(z, tol.h_deriv);
        if a_prime.norm() <= tol.deriv_floor {
            return Err(Error::Accuracy(format!(
                "zero at {z} is not simple: |a'| = {:e}",
                a_prime.norm()
            )));
        }
        out.push(PoleEstimate { z, a_prime });
    }
    Ok(out)
}

/// Nodes whose `|ψ⁻||ψ⁺|` falls below this fraction of its maximum are
/// excluded from the `γ` fit.
const GAMMA_MAGNITUDE_FLOOR: f64 = 1e-3;

/// Norming constants `c_k = γ_k / a'(z_k)`, with `γ_k` the least-squares
/// ratio in `ψ₁⁽⁻⁾(z_k; x) = γ_k ψ₂⁽⁺⁾(z_k; x)`.
pub fn norming_constants(
    pot: &SampledPotential,
    poles: &[Complex64],
    a_primes: &[Complex64],
    tol: &Tolerances,
) -> Result<Vec<Complex64>> {
    if poles.len() != a_primes.len() {
        return Err(Error::InvalidInput(
            "poles and a' lists differ in length".into(),
        ));
    }
    poles
        .iter()
        .zip(a_primes)
        .map(|(&z, &ap)| {
            let jp = jost_solutions(pot, z, tol)?;
            let gamma = proportionality(&jp, tol)?;
            Ok(gamma / ap)
        })
        .collect()
}

// Each Jost solution carries a small admixture of the solution growing
// away from its own end (from the residual of `a(z_k)`), so far from the
// bound state one of the two is wrong. The product `|ψ⁻||ψ⁺|` is
// largest where the bound state lives and where both are accurate.
fn proportionality(jp: &JostPair, tol: &Tolerances) -> Result<Complex64> {
    let n = jp.x.len();
    let interior = n / 20..n - n / 20;
    let vnorm = |v: &[Complex64; 2]| (v[0].norm_sqr() + v[1].norm_sqr()).sqrt();
    let weight = |i: usize| vnorm(&jp.left[i]) * vnorm(&jp.right[i]);
    let max_w = interior.clone().map(weight).fold(0.0, f64::max);
    let mut num = c64(0.0, 0.0);
    let mut den = 0.0;
    let mut used = Vec::new();
    for i in interior {
        if !(weight(i) >= GAMMA_MAGNITUDE_FLOOR * max_w) {
            continue;
        }
        for c in 0..2 {
            let p = jp.left[i][c];
            let q = jp.right[i][c];
            num += q.conj() * p;
            den += q.norm_sqr();
            used.push((p, q));
        }
    }
    if used.is_empty() || !(den > 0.0) {
        return Err(Error::Dependence {
            pole: jp.z,
            spread: f64::INFINITY,
        });
    }
    let gamma = num / den;
    let resid: f64 = used.iter().map(|(p, q)| (p - gamma * q).norm_sqr()).sum();
    let spread = (resid / (gamma.norm_sqr() * den)).sqrt();
    if !(spread <= tol.gamma_tol) {
        return Err(Error::Dependence { pole: jp.z, spread });
    }
    Ok(gamma)
}

/// Scattering data `(r; z_1..z_N; c_1..c_N)` of a potential.
#[derive(Debug, Clone, PartialEq)]
pub struct ScatteringData {
    pub r_grid: Vec<f64>,
    pub r_values: Vec<Complex64>,
    pub poles: Vec<Complex64>,
    pub couplings: Vec<Complex64>,
    pub a_prime_at_poles: Vec<Complex64>,
    pub meta: ScatteringMeta,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ScatteringMeta {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerances: Option<Tolerances>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window: Option<Window>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub search_box: Option<SearchBox>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Window {
    pub x_min: f64,
    pub x_max: f64,
    pub n_points: usize,
}

impl ScatteringData {
    /// Checks the structural invariants: upper half-plane, distinct poles,
    /// nonzero couplings, consistent lengths and a sorted real grid.
    pub fn validate(&self, pole_sep_tol: f64) -> Result<()> {
        if self.r_grid.len() != self.r_values.len() {
            return Err(Error::InvalidInput(
                "r grid and r values differ in length".into(),
            ));
        }
        if self.r_grid.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidInput(
                "r grid must be strictly increasing".into(),
            ));
        }
        if self.poles.len() != self.couplings.len()
            || self.poles.len() != self.a_prime_at_poles.len()
        {
            return Err(Error::InvalidInput(
                "poles, couplings and a' differ in length".into(),
            ));
        }
        crate::soliton::validate_poles(&self.poles, &self.couplings, pole_sep_tol)
    }

    pub fn soliton_params(&self) -> Result<crate::soliton::SolitonParams> {
        crate::soliton::SolitonParams::new(self.poles.clone(), self.couplings.clone())
    }

    pub fn max_abs_r(&self) -> f64 {
        self.r_values.iter().map(|r| r.norm()).fold(0.0, f64::max)
    }

    /// Reflectionless data with the given poles and couplings.
    pub fn reflectionless(poles: Vec<Complex64>, couplings: Vec<Complex64>) -> Self {
        let n = poles.len();
        Self {
            r_grid: Vec::new(),
            r_values: Vec::new(),
            poles,
            couplings,
            a_prime_at_poles: vec![c64(0.0, 0.0); n],
            meta: ScatteringMeta::default(),
        }
    }

    pub fn to_envelope(&self) -> Envelope {
        Envelope {
            grid: Some(self.r_grid.clone()),
            r: Some(io::to_pairs(&self.r_values)),
            poles: io::to_pairs(&self.poles),
            couplings: io::to_pairs(&self.couplings),
            a_prime: Some(io::to_pairs(&self.a_prime_at_poles)),
            meta: Some(serde_json::to_value(&self.meta).expect("meta serialises")),
            ..Envelope::default()
        }
    }

    pub fn from_envelope(env: &Envelope) -> Result<Self> {
        let r_grid = env.grid.clone().unwrap_or_default();
        let r_values = env.r.as_deref().map(io::from_pairs).unwrap_or_default();
        let poles = io::from_pairs(&env.poles);
        let couplings = io::from_pairs(&env.couplings);
        let a_prime_at_poles = env
            .a_prime
            .as_deref()
            .map(io::from_pairs)
            .unwrap_or_else(|| vec![c64(0.0, 0.0); poles.len()]);
        let meta = match &env.meta {
            Some(v) => serde_json::from_value(v.clone())?,
            None => ScatteringMeta::default(),
        };
        let sd = Self {
            r_grid,
            r_values,
            poles,
            couplings,
            a_prime_at_poles,
            meta,
        };
        sd.validate(Tolerances::default().pole_sep_tol)?;
        Ok(sd)
    }
}

/// Scattering data at time `t` from data at time 0: poles fixed,
/// `r ↦ e^{4iz²t} r`, `c_k ↦ e^{4iz_k²t} c_k`.
pub fn evolve_scattering(sd: &ScatteringData, t: f64) -> ScatteringData {
    let mut out = sd.clone();
    for (r, &z) in out.r_values.iter_mut().zip(&sd.r_grid) {
        *r *= (4.0 * I * z * z * t).exp();
    }
    for (c, &z) in out.couplings.iter_mut().zip(&sd.poles) {
        *c *= (4.0 * I * z * z * t).exp();
    }
    out
}

/// Full forward transform: reflection coefficient on `grid`, zeros of `a`
/// in `bx` and their norming constants.
pub fn scatter(
    pot: &SampledPotential,
    grid: &[f64],
    bx: &SearchBox,
    tol: &Tolerances,
) -> Result<ScatteringData> {
    pot.check_tails(tol.tail_tol)?;
    let refl = reflection_coefficient(pot, grid, tol)?;
    let found = pole_search(pot, bx, tol)?;
    let poles: Vec<Complex64> = found.iter().map(|p| p.z).collect();
    let a_primes: Vec<Complex64> = found.iter().map(|p| p.a_prime).collect();
    let couplings = norming_constants(pot, &poles, &a_primes, tol)?;
    let sd = ScatteringData {
        r_grid: refl.grid,
        r_values: refl.r,
        poles,
        couplings,
        a_prime_at_poles: a_primes,
        meta: ScatteringMeta {
            tolerances: Some(*tol),
            window: Some(Window {
                x_min: pot.x_min(),
                x_max: pot.x_max(),
                n_points: pot.n_points(),
            }),
            search_box: Some(*bx),
        },
    };
    sd.validate(tol.pole_sep_tol)?;
    Ok(sd)
}

/// Uniform grid helper: `n` points from `lo` to `hi` inclusive.
pub fn uniform_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    (0..n)
        .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn zero_potential() -> SampledPotential {
        SampledPotential::from_fn(-10.0, 10.0, 201, |_| c64(0.0, 0.0)).unwrap()
    }

    fn sech_potential() -> SampledPotential {
        SampledPotential::from_fn(-30.0, 30.0, 6001, |x| c64(1.0 / x.cosh(), 0.0)).unwrap()
    }

    #[test]
    fn zero_potential_gives_plane_waves() {
        let pot = zero_potential();
        let tol = Tolerances::default();
        for z in [c64(0.7, 0.0), c64(-1.2, 0.4), c64(0.0, 2.0)] {
            let jp = jost_solutions(&pot, z, &tol).unwrap();
            for (i, &x) in jp.x.iter().enumerate() {
                let e1 = (-I * z * x).exp();
                let e2 = (I * z * x).exp();
                assert!((jp.left[i][0] - e1).norm() <= 1e-12 * e1.norm().max(1.0));
                assert!(jp.left[i][1].norm() == 0.0);
                assert!((jp.right[i][1] - e2).norm() <= 1e-12 * e2.norm().max(1.0));
                assert!(jp.right[i][0].norm() == 0.0);
            }
            assert!((transmission_a(&pot, z).unwrap() - 1.0).norm() < 1e-13);
        }
    }

    #[test]
    fn scaled_by_zero_matches_zero_potential() {
        let pot = sech_potential().map(|_, u| u * 0.0);
        assert!((transmission_a(&pot, c64(0.3, 0.2)).unwrap() - 1.0).norm() < 1e-13);
    }

    #[test]
    fn lower_half_plane_is_a_domain_error() {
        let pot = zero_potential();
        let err = transmission_a(&pot, c64(0.0, -0.1)).unwrap_err();
        assert_eq!(err.code(), "domain");
        assert!(jost_solutions(&pot, c64(1.0, -1e-3), &Tolerances::default()).is_err());
    }

    #[test]
    fn wronskian_is_x_independent() {
        let pot = sech_potential();
        let jp = jost_solutions(&pot, c64(0.3, 0.0), &Tolerances::default()).unwrap();
        let w1 = jp.wronskian(1500);
        let w2 = jp.wronskian(4200);
        assert!((w1 - w2).norm() < 1e-10, "{w1} vs {w2}");
    }

    #[test]
    fn zero_potential_has_no_reflection_and_no_poles() {
        let pot = zero_potential();
        let tol = Tolerances::default();
        let refl = reflection_coefficient(&pot, &uniform_grid(-3.0, 3.0, 31), &tol).unwrap();
        assert!(refl.r.iter().all(|r| r.norm() == 0.0));
        let bx = SearchBox::new(-2.0, 2.0, 0.1, 2.0).unwrap();
        assert!(pole_search(&pot, &bx, &tol).unwrap().is_empty());
    }

    #[test]
    fn sech_has_a_single_eigenvalue_at_half_i() {
        let pot = sech_potential();
        let tol = Tolerances::default();
        let bx = SearchBox::new(-1.0, 1.0, 0.1, 1.0).unwrap();
        let found = pole_search(&pot, &bx, &tol).unwrap();
        assert_eq!(found.len(), 1);
        assert!((found[0].z - c64(0.0, 0.5)).norm() < 1e-6, "{}", found[0].z);
        let c = norming_constants(&pot, &[found[0].z], &[found[0].a_prime], &tol).unwrap();
        assert!((c[0] - c64(0.0, -1.0)).norm() < 1e-4, "{}", c[0]);
    }

    #[test]
    fn sech_is_reflectionless() {
        let pot = sech_potential();
        let refl =
            reflection_coefficient(&pot, &uniform_grid(-4.0, 4.0, 81), &Tolerances::default())
                .unwrap();
        assert!(refl.max_abs_r() <= 1e-6, "{}", refl.max_abs_r());
        assert!(
            refl.max_unitarity_defect() <= 1e-10,
            "{}",
            refl.max_unitarity_defect()
        );
    }

    #[test]
    fn box_in_lower_half_plane_is_rejected() {
        assert!(SearchBox::new(-1.0, 1.0, 0.0, 1.0).is_err());
        assert!(SearchBox::new(-1.0, 1.0, -0.5, 1.0).is_err());
    }

    #[test]
    fn pole_on_box_edge_is_reported() {
        let pot = sech_potential();
        let bx = SearchBox::new(-1.0, 1.0, 0.5, 1.0).unwrap();
        let err = pole_search(&pot, &bx, &Tolerances::default()).unwrap_err();
        assert_eq!(err.code(), "pole-near-boundary");
    }

    #[test]
    fn evolution_of_scattering_data() {
        let sd = ScatteringData {
            r_grid: vec![-1.0, 0.0, 1.0],
            r_values: vec![c64(0.1, 0.0); 3],
            poles: vec![c64(0.0, 0.5)],
            couplings: vec![c64(1.0, 0.0)],
            a_prime_at_poles: vec![c64(0.0, -1.0)],
            meta: ScatteringMeta::default(),
        };
        assert_eq!(evolve_scattering(&sd, 0.0), sd);
        let later = evolve_scattering(&sd, PI / 2.0);
        assert!((later.r_values[2] - c64(0.1, 0.0)).norm() < 1e-14);
        assert_eq!(later.poles, sd.poles);
        let one = evolve_scattering(&sd, 1.0);
        assert!((one.couplings[0] - (-I).exp()).norm() < 1e-14);
    }

    #[test]
    fn envelope_round_trip() {
        let sd = ScatteringData {
            r_grid: vec![-1.0, 1.0],
            r_values: vec![c64(0.1, -0.2), c64(0.0, 0.3)],
            poles: vec![c64(0.2, 0.5)],
            couplings: vec![c64(1.0, 2.0)],
            a_prime_at_poles: vec![c64(0.0, -1.0)],
            meta: ScatteringMeta {
                tolerances: Some(Tolerances::default()),
                ..Default::default()
            },
        };
        let text = serde_json::to_string(&sd.to_envelope()).unwrap();
        let back = ScatteringData::from_envelope(&serde_json::from_str(&text).unwrap()).unwrap();
        assert_eq!(back, sd);
    }

    #[test]
    fn expm_matches_series() {
        let om = [
            [c64(0.1, 0.2), c64(0.3, -0.1)],
            [c64(-0.2, 0.05), c64(-0.1, -0.2)],
        ];
        let e = expm_traceless(&om);
        // Taylor series to high order.
        let mut term = [
            [c64(1.0, 0.0), c64(0.0, 0.0)],
            [c64(0.0, 0.0), c64(1.0, 0.0)],
        ];
        let mut sum = term;
        for k in 1..30 {
            term = mat2::mul(&term, &om);
            for r in 0..2 {
                for c in 0..2 {
                    term[r][c] /= k as f64;
                    sum[r][c] += term[r][c];
                }
            }
        }
        for r in 0..2 {
            for c in 0..2 {
                assert!((e[r][c] - sum[r][c]).norm() < 1e-15);
            }
        }
    }
}
