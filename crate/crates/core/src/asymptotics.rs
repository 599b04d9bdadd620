//! Long-time asymptotic ingredients indexed by `ξ = -x/(4t)`.
//!
//! Poles split into `∇` (`Re z_k < ξ`, where `e^{φ_k}` grows for `t > 0`)
//! and `△` (`Re z_k ≥ ξ`), with `□` the poles within `1/√|t|` of the ray
//! `Re z = ξ`. The coupling modifiers `Λ_j^±` depend only on `|r|` on the
//! real line and turn the couplings `c_j` into the `c_j^± = c_j (Λ_j^±)²`
//! of the soliton that `u` approaches as `t → ±∞`.

use std::f64::consts::PI;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::{self, Envelope};
use crate::quadrature::{adaptive_simpson_panels, CubicSpline};
use crate::scattering::ScatteringData;
use crate::soliton::{self, SolitonParams};
use crate::{c64, I};

pub use crate::soliton::phase;

/// Tolerance used to decide that two poles share a real part.
const SAME_REAL_PART: f64 = 1e-12;

/// A point `(x, t)` with its pole classification.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseFrame {
    pub x: f64,
    pub t: f64,
    pub xi: f64,
    pub nabla: Vec<usize>,
    pub triangle: Vec<usize>,
    pub square: Vec<usize>,
    /// Set when `□` contains poles with different real parts, so the
    /// single-real-part structure only reached for large `|t|` fails.
    pub warning: Option<String>,
}

impl PhaseFrame {
    /// False when the frame is flagged ambiguous.
    pub fn is_asymptotic(&self) -> bool {
        self.warning.is_none()
    }

    pub fn in_nabla(&self, k: usize) -> bool {
        self.nabla.contains(&k)
    }

    pub fn in_square(&self, k: usize) -> bool {
        self.square.contains(&k)
    }
}

/// Classifies the poles relative to `ξ = -x/(4t)`. Ties `Re z_k = ξ` go to
/// `△`.
pub fn classify(poles: &[Complex64], x: f64, t: f64) -> Result<PhaseFrame> {
    if t == 0.0 || !t.is_finite() || !x.is_finite() {
        return Err(Error::InvalidInput(format!(
            "classification needs finite x and t ≠ 0 (x = {x}, t = {t})"
        )));
    }
    let xi = -x / (4.0 * t);
    let radius = 1.0 / t.abs().sqrt();
    let mut nabla = Vec::new();
    let mut triangle = Vec::new();
    let mut square = Vec::new();
    for (k, z) in poles.iter().enumerate() {
        if z.re < xi {
            nabla.push(k);
        } else {
            triangle.push(k);
        }
        if (z.re - xi).abs() <= radius {
            square.push(k);
        }
    }
    let warning = match square.split_first() {
        Some((&first, rest)) if rest.iter().any(|&k| (poles[k].re - poles[first].re).abs() > SAME_REAL_PART) => {
            Some(format!(
                "poles {square:?} lie within 1/sqrt|t| = {radius:.4} of xi = {xi:.4} but have different real parts; frame is not asymptotic"
            ))
        }
        _ => None,
    };
    Ok(PhaseFrame {
        x,
        t,
        xi,
        nabla,
        triangle,
        square,
        warning,
    })
}

/// `T(z) = Π_{k∈∇} (z - z_k)/(z - z̄_k)`.
pub fn blaschke_t(z: Complex64, frame: &PhaseFrame, poles: &[Complex64]) -> Result<Complex64> {
    let mut t = c64(1.0, 0.0);
    for &k in &frame.nabla {
        let zk = poles[k];
        let den = z - zk.conj();
        if den.norm() <= 1e-14 * (1.0 + zk.norm()) {
            return Err(Error::PoleOfT { z });
        }
        t *= (z - zk) / den;
    }
    Ok(t)
}

/// `T'(z_k)` for `k ∈ ∇`, where `T` has a simple zero.
pub fn blaschke_t_derivative_at_zero(
    k: usize,
    frame: &PhaseFrame,
    poles: &[Complex64],
) -> Complex64 {
    let zk = poles[k];
    let mut d = 1.0 / (zk - zk.conj());
    for &j in &frame.nabla {
        if j != k {
            d *= (zk - poles[j]) / (zk - poles[j].conj());
        }
    }
    d
}

/// `|r|` on a real grid, with `L(s) = log(1 + |r(s)|²)` interpolated by a
/// natural cubic spline and taken as zero outside the grid.
#[derive(Debug, Clone)]
pub struct ReflectionProfile {
    grid: Vec<f64>,
    r: Vec<Complex64>,
    log_spline: Option<CubicSpline>,
}

impl ReflectionProfile {
    pub fn new(grid: Vec<f64>, r: Vec<Complex64>) -> Result<Self> {
        if grid.len() != r.len() {
            return Err(Error::InvalidInput(
                "reflection grid and values differ in length".into(),
            ));
        }
        if r.iter().any(|v| !(v.re.is_finite() && v.im.is_finite())) {
            return Err(Error::InvalidInput(
                "reflection values must be finite".into(),
            ));
        }
        let log_spline = if r.iter().all(|v| v.norm() == 0.0) {
            None
        } else {
            let l = r.iter().map(|v| v.norm_sqr().ln_1p()).collect();
            Some(CubicSpline::new(grid.clone(), l)?)
        };
        Ok(Self {
            grid,
            r,
            log_spline,
        })
    }

    pub fn zero() -> Self {
        Self {
            grid: Vec::new(),
            r: Vec::new(),
            log_spline: None,
        }
    }

    pub fn from_scattering(sd: &ScatteringData) -> Result<Self> {
        Self::new(sd.r_grid.clone(), sd.r_values.clone())
    }

    pub fn from_fn(grid: Vec<f64>, r: impl Fn(f64) -> Complex64) -> Result<Self> {
        let vals = grid.iter().map(|&s| r(s)).collect();
        Self::new(grid, vals)
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.r
    }

    pub fn is_zero(&self) -> bool {
        self.log_spline.is_none()
    }

    /// `log(1 + |r(s)|²)`.
    pub fn log_weight(&self, s: f64) -> f64 {
        self.log_spline
            .as_ref()
            .and_then(|sp| sp.eval(s))
            .unwrap_or(0.0)
    }

    /// `ř(s) = conj r(-s)`, the reflection coefficient of `conj u(x)`.
    pub fn mirrored(&self) -> Self {
        let grid: Vec<f64> = self.grid.iter().rev().map(|s| -s).collect();
        let r: Vec<Complex64> = self.r.iter().rev().map(|v| v.conj()).collect();
        Self::new(grid, r).expect("mirror of a valid profile is valid")
    }

    /// Largest `L` at the two grid edges.
    pub fn edge_weight(&self) -> f64 {
        match (self.r.first(), self.r.last()) {
            (Some(a), Some(b)) => a.norm_sqr().ln_1p().max(b.norm_sqr().ln_1p()),
            _ => 0.0,
        }
    }

    /// `‖r‖²_{L²}` by the trapezoid rule on the grid.
    pub fn l2_norm_sqr(&self) -> f64 {
        self.grid
            .windows(2)
            .zip(self.r.windows(2))
            .map(|(g, v)| 0.5 * (g[1] - g[0]) * (v[0].norm_sqr() + v[1].norm_sqr()))
            .sum()
    }

    fn check_tails(&self, tol: f64) -> Result<()> {
        let edge = self.edge_weight();
        if edge > tol {
            return Err(Error::TailTruncation { mass: edge });
        }
        Ok(())
    }

    /// `∫_a^b L(s)/(s - z) ds` with `a`, `b` possibly infinite, clipped to
    /// the grid. The value `L(s₀)` at the nearest real point is subtracted
    /// and integrated exactly, leaving a bounded integrand.
    pub fn cauchy_integral(
        &self,
        a: f64,
        b: f64,
        z: Complex64,
        tol: f64,
    ) -> Result<(Complex64, f64)> {
        if self.is_zero() {
            return Ok((c64(0.0, 0.0), 0.0));
        }
        let lo = a.max(self.grid[0]);
        let hi = b.min(*self.grid.last().unwrap());
        if !(lo < hi) {
            return Ok((c64(0.0, 0.0), 0.0));
        }
        let s0 = z.re.clamp(lo, hi);
        let l0 = self.log_weight(s0);
        let f = |s: f64| c64(self.log_weight(s) - l0, 0.0) / (c64(s, 0.0) - z);
        let width = z.im.abs().max(1e-3);
        let mut breaks = vec![lo];
        for p in [
            s0 - 4.0 * width,
            s0 - width,
            s0,
            s0 + width,
            s0 + 4.0 * width,
        ] {
            if p > *breaks.last().unwrap() && p < hi {
                breaks.push(p);
            }
        }
        breaks.push(hi);
        let integral = adaptive_simpson_panels(&f, &breaks, tol)?;
        let logs = if l0 == 0.0 {
            c64(0.0, 0.0)
        } else {
            l0 * ((hi - z).ln() - (lo - z).ln())
        };
        Ok((integral.value + logs, integral.error))
    }
}

/// `δ(z) = exp((2πi)⁻¹ ∫_{-∞}^{ξ} log(1+|r(s)|²)/(s - z) ds)`.
pub fn delta_function(
    z: Complex64,
    xi: f64,
    profile: &ReflectionProfile,
    opts: &AsymptoticOptions,
) -> Result<Complex64> {
    let dist = if z.re <= xi {
        z.im.abs()
    } else {
        (z - xi).norm()
    };
    if dist < opts.ray_tol {
        return Err(Error::RayProximity {
            z,
            tol: opts.ray_tol,
        });
    }
    let (integral, _) = profile.cauchy_integral(f64::NEG_INFINITY, xi, z, opts.quad_tol)?;
    Ok((integral / (2.0 * PI * I)).exp())
}

/// `ν₀ = -(2π)⁻¹ log(1 + |r(ξ)|²)`.
pub fn nu0(xi: f64, profile: &ReflectionProfile) -> f64 {
    -profile.log_weight(xi) / (2.0 * PI)
}

/// Accuracy knobs for the asymptotic integrals.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticOptions {
    /// Absolute tolerance of the adaptive quadrature.
    pub quad_tol: f64,
    /// Largest `log(1+|r|²)` tolerated at the grid edges.
    pub lambda_tail_tol: f64,
    /// Minimum distance from `(-∞, ξ]` for evaluating `δ`.
    pub ray_tol: f64,
}

impl Default for AsymptoticOptions {
    fn default() -> Self {
        Self {
            quad_tol: 1e-10,
            lambda_tail_tol: 1e-12,
            ray_tol: 1e-12,
        }
    }
}

/// `+` selects `t → +∞`, `-` selects `t → -∞`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sign {
    Plus,
    Minus,
}

impl FromStr for Sign {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "+" | "plus" | "+1" => Ok(Sign::Plus),
            "-" | "minus" | "-1" => Ok(Sign::Minus),
            _ => Err(Error::InvalidInput(format!(
                "sign must be '+' or '-', got '{s}'"
            ))),
        }
    }
}

impl std::fmt::Display for Sign {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Sign::Plus => "+",
            Sign::Minus => "-",
        })
    }
}

/// Per-pole numbers reported alongside the `Λ` factors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LambdaDiagnostics {
    pub quadrature_error_plus: Vec<f64>,
    pub quadrature_error_minus: Vec<f64>,
    pub one_minus_lambda_plus: Vec<f64>,
    pub r_l2_norm_sqr: f64,
    /// `|1 - Λ_j^+| / ‖r‖²`; empty when `r ≡ 0`.
    pub smallness_ratio: Vec<f64>,
    pub edge_weight: f64,
}

/// `Λ_j^±` and the modified couplings `c_j^± = c_j (Λ_j^±)²`.
#[derive(Debug, Clone, PartialEq)]
pub struct AsymptoticCouplings {
    pub poles: Vec<Complex64>,
    pub couplings: Vec<Complex64>,
    pub lambdas_plus: Vec<Complex64>,
    pub lambdas_minus: Vec<Complex64>,
    pub c_plus: Vec<Complex64>,
    pub c_minus: Vec<Complex64>,
    pub diagnostics: LambdaDiagnostics,
}

impl AsymptoticCouplings {
    pub fn lambdas(&self, sign: Sign) -> &[Complex64] {
        match sign {
            Sign::Plus => &self.lambdas_plus,
            Sign::Minus => &self.lambdas_minus,
        }
    }

    pub fn couplings_for(&self, sign: Sign) -> &[Complex64] {
        match sign {
            Sign::Plus => &self.c_plus,
            Sign::Minus => &self.c_minus,
        }
    }

    /// Parameters of `u^{sol}_±`.
    pub fn soliton_params(&self, sign: Sign) -> Result<SolitonParams> {
        SolitonParams::new(self.poles.clone(), self.couplings_for(sign).to_vec())
    }

    pub fn to_envelope(&self) -> Envelope {
        Envelope {
            poles: io::to_pairs(&self.poles),
            couplings: io::to_pairs(&self.couplings),
            lambda_plus: Some(io::to_pairs(&self.lambdas_plus)),
            lambda_minus: Some(io::to_pairs(&self.lambdas_minus)),
            c_plus: Some(io::to_pairs(&self.c_plus)),
            c_minus: Some(io::to_pairs(&self.c_minus)),
            meta: Some(serde_json::json!({ "diagnostics": self.diagnostics })),
            ..Envelope::default()
        }
    }
}

/// `log Λ^+ = -(2πi)⁻¹ ∫_{-∞}^{Re z} L(s)/(s - z) ds`.
fn log_lambda_plus(
    z: Complex64,
    profile: &ReflectionProfile,
    tol: f64,
) -> Result<(Complex64, f64)> {
    let (v, e) = profile.cauchy_integral(f64::NEG_INFINITY, z.re, z, tol)?;
    Ok((-v / (2.0 * PI * I), e / (2.0 * PI)))
}

/// `log Λ^- = -(2πi)⁻¹ ∫_{Re z}^{+∞} L(s)/(s - z) ds`, i.e. the `+∞`-based
/// integral `∫_{+∞}^{Re z}` with the opposite prefactor sign.
fn log_lambda_minus(
    z: Complex64,
    profile: &ReflectionProfile,
    tol: f64,
) -> Result<(Complex64, f64)> {
    let (v, e) = profile.cauchy_integral(z.re, f64::INFINITY, z, tol)?;
    Ok((-v / (2.0 * PI * I), e / (2.0 * PI)))
}

/// Computes `Λ_j^±` and `c_j^±` for poles `z_j` with couplings `c_j`.
pub fn lambda_factors(
    poles: &[Complex64],
    couplings: &[Complex64],
    profile: &ReflectionProfile,
    opts: &AsymptoticOptions,
) -> Result<AsymptoticCouplings> {
    soliton::validate_poles(poles, couplings, 0.0)?;
    profile.check_tails(opts.lambda_tail_tol)?;
    let mut lp = Vec::with_capacity(poles.len());
    let mut lm = Vec::with_capacity(poles.len());
    let mut ep = Vec::with_capacity(poles.len());
    let mut em = Vec::with_capacity(poles.len());
    for &z in poles {
        let (p, e1) = log_lambda_plus(z, profile, opts.quad_tol)?;
        let (m, e2) = log_lambda_minus(z, profile, opts.quad_tol)?;
        lp.push(p.exp());
        lm.push(m.exp());
        ep.push(e1);
        em.push(e2);
    }
    let r2 = profile.l2_norm_sqr();
    let one_minus: Vec<f64> = lp.iter().map(|l| (1.0 - l).norm()).collect();
    let smallness_ratio = if r2 > 0.0 {
        one_minus.iter().map(|d| d / r2).collect()
    } else {
        Vec::new()
    };
    let c_plus = couplings.iter().zip(&lp).map(|(c, l)| c * l * l).collect();
    let c_minus = couplings.iter().zip(&lm).map(|(c, l)| c * l * l).collect();
    Ok(AsymptoticCouplings {
        poles: poles.to_vec(),
        couplings: couplings.to_vec(),
        lambdas_plus: lp,
        lambdas_minus: lm,
        c_plus,
        c_minus,
        diagnostics: LambdaDiagnostics {
            quadrature_error_plus: ep,
            quadrature_error_minus: em,
            one_minus_lambda_plus: one_minus,
            r_l2_norm_sqr: r2,
            smallness_ratio,
            edge_weight: profile.edge_weight(),
        },
    })
}

/// `Λ_j^-` obtained through the conjugation symmetry: the data
/// `(ř; -z̄_j; -c̄_j)` of `conj u(x, -t)` have `Λ̌_j^+`, and
/// `Λ_j^- = conj(Λ̌_j^+)`.
pub fn lambda_minus_via_conjugation(
    poles: &[Complex64],
    profile: &ReflectionProfile,
    opts: &AsymptoticOptions,
) -> Result<Vec<Complex64>> {
    profile.check_tails(opts.lambda_tail_tol)?;
    let mirror = profile.mirrored();
    poles
        .iter()
        .map(|&z| {
            Ok(log_lambda_plus(-z.conj(), &mirror, opts.quad_tol)?
                .0
                .exp()
                .conj())
        })
        .collect()
}

/// The asymptotic soliton `u^{sol}_±` for given scattering data, with the
/// couplings precomputed so that repeated evaluation is cheap.
#[derive(Debug, Clone)]
pub struct AsymptoticSoliton {
    pub sign: Sign,
    pub couplings: AsymptoticCouplings,
    params: SolitonParams,
}

impl AsymptoticSoliton {
    pub fn new(sd: &ScatteringData, sign: Sign, opts: &AsymptoticOptions) -> Result<Self> {
        let profile = ReflectionProfile::from_scattering(sd)?;
        let couplings = lambda_factors(&sd.poles, &sd.couplings, &profile, opts)?;
        let params = couplings.soliton_params(sign)?;
        Ok(Self {
            sign,
            couplings,
            params,
        })
    }

    pub fn params(&self) -> &SolitonParams {
        &self.params
    }

    pub fn eval(&self, x: f64, t: f64) -> Result<Complex64> {
        soliton::n_soliton(&self.params, x, t)
    }

    pub fn field(&self, xs: &[f64], t: f64) -> Result<Vec<Complex64>> {
        soliton::n_soliton_field(&self.params, xs, t)
    }
}

/// One-shot `u^{sol}_±(x, t)`.
pub fn asymptotic_soliton(sd: &ScatteringData, sign: Sign, x: f64, t: f64) -> Result<Complex64> {
    AsymptoticSoliton::new(sd, sign, &AsymptoticOptions::default())?.eval(x, t)
}

/// Scattering data of `conj u(x, -t)` given those of `u`:
/// `(conj r(-z); -z̄_j; -c̄_j)`.
pub fn conjugate_mirror_data(sd: &ScatteringData) -> ScatteringData {
    let mut out = sd.clone();
    out.r_grid = sd.r_grid.iter().rev().map(|s| -s).collect();
    out.r_values = sd.r_values.iter().rev().map(|v| v.conj()).collect();
    out.poles = sd.poles.iter().map(|z| -z.conj()).collect();
    out.couplings = sd.couplings.iter().map(|c| -c.conj()).collect();
    out.a_prime_at_poles = sd.a_prime_at_poles.iter().map(|a| -a.conj()).collect();
    out
}

/// `u^{sol}_-(x, t)` evaluated as `conj(ǔ^{sol}_+(x, -t))` from the mirrored
/// data.
pub fn asymptotic_soliton_minus_via_conjugation(
    sd: &ScatteringData,
    x: f64,
    t: f64,
    opts: &AsymptoticOptions,
) -> Result<Complex64> {
    let mirrored = conjugate_mirror_data(sd);
    Ok(AsymptoticSoliton::new(&mirrored, Sign::Plus, opts)?
        .eval(x, -t)?
        .conj())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gaussian_profile(eps: f64) -> ReflectionProfile {
        let grid: Vec<f64> = (0..=800).map(|i| -8.0 + 0.02 * i as f64).collect();
        ReflectionProfile::from_fn(grid, |s| {
            c64(eps * (-s * s).exp(), 0.3 * eps * s * (-s * s).exp())
        })
        .unwrap()
    }

    #[test]
    fn phase_examples() {
        assert!((phase(I, 0.0, 1.0) - c64(0.0, -4.0)).norm() < 1e-15);
        assert!((phase(c64(1.0, 1.0), -8.0, 1.0).re - 8.0).abs() < 1e-12);
        assert_eq!(phase(c64(0.7, 0.0), 3.0, 2.0).re, 0.0);
    }

    #[test]
    fn classification_examples() {
        let poles = [c64(1.0, 1.0), c64(-1.0, 0.5)];
        let f = classify(&poles, 0.0, 1.0).unwrap();
        assert_eq!(f.nabla, vec![1]);
        assert_eq!(f.triangle, vec![0]);
        let f = classify(&poles, -40.0, 1.0).unwrap();
        assert_eq!(f.nabla, vec![0, 1]);
        assert!(f.triangle.is_empty());
        let f = classify(&[I, c64(0.01, 1.0)], 0.0, 100.0).unwrap();
        assert_eq!(f.square, vec![0, 1]);
        assert!(!f.is_asymptotic());
        assert!(classify(&poles, 1.0, 0.0).is_err());
    }

    #[test]
    fn tie_goes_to_triangle() {
        let f = classify(&[c64(0.5, 1.0)], -2.0, 1.0).unwrap();
        assert_eq!(f.xi, 0.5);
        assert_eq!(f.triangle, vec![0]);
    }

    #[test]
    fn blaschke_examples() {
        let poles = [I];
        let empty = classify(&poles, -400.0, -1.0).unwrap();
        assert!(empty.nabla.is_empty());
        assert_eq!(
            blaschke_t(c64(0.3, 0.2), &empty, &poles).unwrap(),
            c64(1.0, 0.0)
        );
        let f = classify(&poles, -4.0, 1.0).unwrap();
        assert_eq!(f.nabla, vec![0]);
        assert!((blaschke_t(c64(0.0, 0.0), &f, &poles).unwrap() + 1.0).norm() < 1e-15);
        assert_eq!(blaschke_t(-I, &f, &poles).unwrap_err().code(), "pole-of-t");
    }

    #[test]
    fn blaschke_derivative_matches_difference() {
        let poles = [c64(-1.0, 0.5), c64(-0.3, 0.8), c64(2.0, 0.4)];
        let f = classify(&poles, 0.0, 1.0).unwrap();
        for &k in &f.nabla {
            let h = 1e-6;
            let fd = (blaschke_t(poles[k] + h, &f, &poles).unwrap()
                - blaschke_t(poles[k] - h, &f, &poles).unwrap())
                / (2.0 * h);
            assert!((fd - blaschke_t_derivative_at_zero(k, &f, &poles)).norm() < 1e-8);
        }
    }

    #[test]
    fn nu0_examples() {
        let flat = |v: f64| {
            ReflectionProfile::from_fn(vec![-1.0, 0.0, 1.0], move |_| c64(v, 0.0)).unwrap()
        };
        assert_eq!(nu0(0.0, &ReflectionProfile::zero()), 0.0);
        assert!((nu0(0.0, &flat(1.0)) + 2f64.ln() / (2.0 * PI)).abs() < 1e-15);
        let big = ((2.0 * PI).exp() - 1.0).sqrt();
        assert!((nu0(0.0, &flat(big)) + 1.0).abs() < 1e-12);
    }

    #[test]
    fn zero_reflection_gives_trivial_factors() {
        let opts = AsymptoticOptions::default();
        let p = ReflectionProfile::zero();
        assert_eq!(
            delta_function(c64(0.3, 0.4), 0.0, &p, &opts).unwrap(),
            c64(1.0, 0.0)
        );
        let ac = lambda_factors(
            &[I, c64(0.5, 0.3)],
            &[c64(1.0, 0.0), c64(0.0, 2.0)],
            &p,
            &opts,
        )
        .unwrap();
        assert!(ac
            .lambdas_plus
            .iter()
            .chain(&ac.lambdas_minus)
            .all(|&l| l == c64(1.0, 0.0)));
        assert_eq!(ac.c_plus, ac.couplings);
        assert_eq!(ac.c_minus, ac.couplings);
    }

    #[test]
    fn delta_conjugation_symmetry_and_far_field() {
        let p = gaussian_profile(0.5);
        let opts = AsymptoticOptions::default();
        for z in [c64(0.3, 0.4), c64(-1.0, 0.1), c64(2.0, 1.5)] {
            let d = delta_function(z, 0.2, &p, &opts).unwrap();
            let db = delta_function(z.conj(), 0.2, &p, &opts).unwrap();
            assert!((db - 1.0 / d.conj()).norm() < 1e-8);
        }
        let far = delta_function(c64(600.0, 800.0), 0.2, &p, &opts).unwrap();
        assert!((far - 1.0).norm() < 1e-3);
    }

    #[test]
    fn delta_jump_on_the_ray() {
        let p = gaussian_profile(0.5);
        let opts = AsymptoticOptions::default();
        let s = -0.4;
        let expected = p.log_weight(s).exp();
        for eps in [1e-4, 1e-6] {
            let up = delta_function(c64(s, eps), 0.1, &p, &opts).unwrap();
            let dn = delta_function(c64(s, -eps), 0.1, &p, &opts).unwrap();
            assert!(
                ((up / dn).norm() - expected).abs() < 1e-4,
                "{}",
                (up / dn).norm()
            );
        }
        assert_eq!(
            delta_function(c64(-1.0, 0.0), 0.1, &p, &opts)
                .unwrap_err()
                .code(),
            "ray-proximity"
        );
    }

    #[test]
    fn lambda_sum_spans_the_line() {
        let p = gaussian_profile(0.4);
        let opts = AsymptoticOptions::default();
        let z = c64(0.3, 0.7);
        let ac = lambda_factors(&[z], &[c64(1.0, 0.0)], &p, &opts).unwrap();
        let (full, _) = p
            .cauchy_integral(f64::NEG_INFINITY, f64::INFINITY, z, 1e-11)
            .unwrap();
        let lhs = ac.lambdas_plus[0].ln() + ac.lambdas_minus[0].ln();
        assert!((lhs + full / (2.0 * PI * I)).norm() < 1e-9);
    }

    #[test]
    fn conjugation_route_agrees() {
        let p = gaussian_profile(0.4);
        let opts = AsymptoticOptions::default();
        let poles = [c64(0.3, 0.7), c64(-0.6, 0.4)];
        let ac = lambda_factors(&poles, &[c64(1.0, 0.0), c64(0.0, 1.0)], &p, &opts).unwrap();
        let via = lambda_minus_via_conjugation(&poles, &p, &opts).unwrap();
        for (a, b) in ac.lambdas_minus.iter().zip(&via) {
            assert!((a - b).norm() < 1e-8, "{a} vs {b}");
        }
    }

    #[test]
    fn truncated_profile_is_rejected() {
        let grid: Vec<f64> = (0..=100).map(|i| -1.0 + 0.02 * i as f64).collect();
        let p = ReflectionProfile::from_fn(grid, |_| c64(0.1, 0.0)).unwrap();
        let err =
            lambda_factors(&[I], &[c64(1.0, 0.0)], &p, &AsymptoticOptions::default()).unwrap_err();
        assert_eq!(err.code(), "tail-truncation");
    }
}
