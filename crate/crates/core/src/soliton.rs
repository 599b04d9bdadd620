//! Reflectionless Riemann–Hilbert problems.
//!
//! With `r ≡ 0` the solution `m(z)` is rational:
//! `m = 1 + Σ_k A_k/(z - z_k) + Σ_k Ã_k/(z - z̄_k)`, where each `A_k` has only
//! a first column and each `Ã_k` only a second. The residue conditions
//! become a linear system for those columns and
//! `u = 2i Σ_k ([A_k]₁₂ + [Ã_k]₁₂)`.
//!
//! The solver here works with a general list of [`ResiduePole`]s so that
//! the same code evaluates plain N-solitons, solitons with modified
//! couplings, and the Blaschke-conjugated problems of the asymptotic
//! analysis (where a pole may carry its residue in either column).

use std::path::Path;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::io::{self, Envelope};
use crate::{c64, I};

/// Relative residual accepted after the dense solve.
pub const LINSYS_TOL: f64 = 1e-9;

/// Default minimum pole separation.
pub const POLE_SEP_TOL: f64 = 1e-6;

/// Reflectionless scattering data `(z_1..z_N; c_1..c_N)`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SolitonParams {
    poles: Vec<Complex64>,
    couplings: Vec<Complex64>,
}

pub(crate) fn validate_poles(
    poles: &[Complex64],
    couplings: &[Complex64],
    sep_tol: f64,
) -> Result<()> {
    if poles.len() != couplings.len() {
        return Err(Error::InvalidInput(format!(
            "{} poles but {} couplings",
            poles.len(),
            couplings.len()
        )));
    }
    for (k, (&z, &c)) in poles.iter().zip(couplings).enumerate() {
        if !(z.re.is_finite() && z.im.is_finite() && z.im > 0.0) {
            return Err(Error::InvalidInput(format!(
                "pole {k} = {z} is not in the open upper half-plane"
            )));
        }
        if !(c.re.is_finite() && c.im.is_finite()) || c.norm() == 0.0 {
            return Err(Error::InvalidInput(format!(
                "coupling {k} = {c} must be finite and nonzero"
            )));
        }
        for (j, &w) in poles[..k].iter().enumerate() {
            if (z - w).norm() <= sep_tol {
                return Err(Error::InvalidInput(format!(
                    "poles {j} and {k} are closer than {sep_tol:e}"
                )));
            }
        }
    }
    Ok(())
}

impl SolitonParams {
    pub fn new(poles: Vec<Complex64>, couplings: Vec<Complex64>) -> Result<Self> {
        validate_poles(&poles, &couplings, POLE_SEP_TOL)?;
        Ok(Self { poles, couplings })
    }

    pub fn empty() -> Self {
        Self::default()
    }

    pub fn poles(&self) -> &[Complex64] {
        &self.poles
    }

    pub fn couplings(&self) -> &[Complex64] {
        &self.couplings
    }

    pub fn len(&self) -> usize {
        self.poles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.poles.is_empty()
    }

    /// Same poles with every coupling multiplied by `factors[k]`.
    pub fn with_scaled_couplings(&self, factors: &[Complex64]) -> Result<Self> {
        if factors.len() != self.len() {
            return Err(Error::InvalidInput(format!(
                "expected {} coupling factors, got {}",
                self.len(),
                factors.len()
            )));
        }
        let couplings = self
            .couplings
            .iter()
            .zip(factors)
            .map(|(c, f)| c * f)
            .collect();
        Self::new(self.poles.clone(), couplings)
    }

    /// Parameters of the time-reversed conjugate solution
    /// `conj(u(x, -t))`: poles `-z̄_k`, couplings `-c̄_k`.
    pub fn conjugate_mirror(&self) -> Self {
        Self {
            poles: self.poles.iter().map(|z| -z.conj()).collect(),
            couplings: self.couplings.iter().map(|c| -c.conj()).collect(),
        }
    }

    /// `L²` mass predicted by the trace formula, `4 Σ Im z_k`.
    pub fn trace_mass(&self) -> f64 {
        4.0 * self.poles.iter().map(|z| z.im).sum::<f64>()
    }

    pub fn to_envelope(&self) -> Envelope {
        Envelope {
            poles: io::to_pairs(&self.poles),
            couplings: io::to_pairs(&self.couplings),
            ..Envelope::default()
        }
    }

    pub fn from_envelope(env: &Envelope) -> Result<Self> {
        Self::new(io::from_pairs(&env.poles), io::from_pairs(&env.couplings))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_envelope(&io::read_json(path)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        io::write_json(path, &self.to_envelope())
    }
}

/// `φ(z) = 2ixz + 4iz²t`.
pub fn phase(z: Complex64, x: f64, t: f64) -> Complex64 {
    2.0 * I * x * z + 4.0 * I * z * z * t
}

/// Closed-form 1-soliton.
pub fn one_soliton(z1: Complex64, c1: Complex64, x: f64, t: f64) -> Result<Complex64> {
    SolitonParams::new(vec![z1], vec![c1])?;
    let (a, b) = (z1.re, z1.im);
    let arg = c1.arg() + 2.0 * a * x + 4.0 * (a * a - b * b) * t;
    let s = 2.0 * b * (x + 4.0 * a * t) - (c1.norm() / (2.0 * b)).ln();
    Ok(-2.0 * I * b * (-I * arg).exp() / s.cosh())
}

/// Centre `x₀(t)` of the 1-soliton: the maximum of `|u(·, t)|`.
pub fn one_soliton_center(z1: Complex64, c1: Complex64, t: f64) -> f64 {
    (c1.norm() / (2.0 * z1.im)).ln() / (2.0 * z1.im) - 4.0 * z1.re * t
}

/// Which column of `m` carries the residue at a pole.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ResidueColumn {
    /// `Res m = lim m · [[0, 0], [κ, 0]]`: residue in column 1.
    First,
    /// `Res m = lim m · [[0, κ], [0, 0]]`: residue in column 2.
    Second,
}

/// A pole of `m` with residue constant `κ = coef · e^{expo}`; the split
/// keeps `κ` representable when `Re expo` is far outside `f64` range.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResiduePole {
    pub at: Complex64,
    pub column: ResidueColumn,
    pub coef: Complex64,
    pub expo: Complex64,
}

impl ResiduePole {
    fn ln_abs_kappa(&self) -> f64 {
        self.coef.norm().ln() + self.expo.re
    }

    fn kappa(&self) -> Complex64 {
        self.coef * self.expo.exp()
    }

    fn inv_kappa(&self) -> Complex64 {
        (-self.expo).exp() / self.coef
    }
}

/// The assembled and solved residue system. Row `i` belongs to pole `i`;
/// the two right-hand sides and solutions correspond to the two components
/// of the residue column.
#[derive(Debug, Clone)]
pub struct ResidueSystem {
    pub poles: Vec<ResiduePole>,
    pub matrix: DMatrix<Complex64>,
    pub rhs: DMatrix<Complex64>,
    pub solution: DMatrix<Complex64>,
    pub condition: f64,
    pub residual: f64,
}

impl ResidueSystem {
    /// The empty system (`m ≡ 1`).
    pub fn trivial() -> Self {
        Self {
            poles: Vec::new(),
            matrix: DMatrix::zeros(0, 0),
            rhs: DMatrix::zeros(0, 2),
            solution: DMatrix::zeros(0, 2),
            condition: 1.0,
            residual: 0.0,
        }
    }

    /// Assembles and solves the residue conditions
    /// `v_i = κ_i (e_other + Σ_{j in the other column} v_j / (p_i - p_j))`.
    pub fn solve(poles: Vec<ResiduePole>) -> Result<Self> {
        let n = poles.len();
        if n == 0 {
            return Ok(Self::trivial());
        }
        let mut matrix = DMatrix::<Complex64>::zeros(n, n);
        let mut rhs = DMatrix::<Complex64>::zeros(n, 2);
        for (i, pi) in poles.iter().enumerate() {
            // Rows with |κ| > 1 are divided by κ so no entry overflows.
            let scaled = pi.ln_abs_kappa() > 0.0;
            let (diag, k) = if scaled {
                (pi.inv_kappa(), c64(1.0, 0.0))
            } else {
                (c64(1.0, 0.0), pi.kappa())
            };
            matrix[(i, i)] = diag;
            for (j, pj) in poles.iter().enumerate() {
                if pj.column != pi.column {
                    matrix[(i, j)] = -k / (pi.at - pj.at);
                }
            }
            let comp = match pi.column {
                ResidueColumn::First => 1,
                ResidueColumn::Second => 0,
            };
            rhs[(i, comp)] = k;
        }
        if matrix
            .iter()
            .any(|v| !(v.re.is_finite() && v.im.is_finite()))
        {
            return Err(Error::SingularSystem {
                cond: f64::INFINITY,
            });
        }
        let lu = matrix.clone().lu();
        let inverse = lu.try_inverse().ok_or(Error::SingularSystem {
            cond: f64::INFINITY,
        })?;
        let condition = norm1(&matrix) * norm1(&inverse);
        let solution = &inverse * &rhs;
        let residual = (&matrix * &solution - &rhs).norm()
            / (norm1(&matrix) * solution.norm() + rhs.norm()).max(f64::MIN_POSITIVE);
        if !(residual <= LINSYS_TOL) || !condition.is_finite() {
            return Err(Error::SingularSystem { cond: condition });
        }
        Ok(Self {
            poles,
            matrix,
            rhs,
            solution,
            condition,
            residual,
        })
    }

    /// Residue column at pole `i`.
    pub fn residue(&self, i: usize) -> [Complex64; 2] {
        [self.solution[(i, 0)], self.solution[(i, 1)]]
    }

    /// `2i lim z m₁₂(z)`: twice `i` times the sum of the (1,2) entries of
    /// all residue matrices.
    pub fn reconstruct(&self) -> Complex64 {
        reconstruct_from_residues(self)
    }

    /// Evaluates `m(z)` from the partial-fraction ansatz.
    pub fn m_at(&self, z: Complex64) -> [[Complex64; 2]; 2] {
        let mut m = [
            [c64(1.0, 0.0), c64(0.0, 0.0)],
            [c64(0.0, 0.0), c64(1.0, 0.0)],
        ];
        for (i, p) in self.poles.iter().enumerate() {
            let v = self.residue(i);
            let col = match p.column {
                ResidueColumn::First => 0,
                ResidueColumn::Second => 1,
            };
            m[0][col] += v[0] / (z - p.at);
            m[1][col] += v[1] / (z - p.at);
        }
        m
    }
}

fn norm1(m: &DMatrix<Complex64>) -> f64 {
    m.column_iter()
        .map(|c| c.iter().map(|v| v.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// `u = 2i Σ [residue]₁₂`; only second-column residues contribute.
pub fn reconstruct_from_residues(sys: &ResidueSystem) -> Complex64 {
    let s: Complex64 = sys
        .poles
        .iter()
        .enumerate()
        .filter(|(_, p)| p.column == ResidueColumn::Second)
        .map(|(i, _)| sys.solution[(i, 0)])
        .sum();
    2.0 * I * s
}

/// Residue poles of the N-soliton RHP at `(x, t)`: column-1 residues at
/// `z_k` with `κ = c_k e^{φ(z_k)}`, column-2 residues at `z̄_k` with
/// `κ = -c̄_k e^{conj φ(z_k)}`.
pub fn soliton_residue_poles(params: &SolitonParams, x: f64, t: f64) -> Vec<ResiduePole> {
    let mut out = Vec::with_capacity(2 * params.len());
    for (&z, &c) in params.poles.iter().zip(&params.couplings) {
        let ph = phase(z, x, t);
        out.push(ResiduePole {
            at: z,
            column: ResidueColumn::First,
            coef: c,
            expo: ph,
        });
    }
    for (&z, &c) in params.poles.iter().zip(&params.couplings) {
        let ph = phase(z, x, t);
        out.push(ResiduePole {
            at: z.conj(),
            column: ResidueColumn::Second,
            coef: -c.conj(),
            expo: ph.conj(),
        });
    }
    out
}

/// Solves the N-soliton residue system at `(x, t)` and checks the
/// symmetry `Ã_k = σ₂-conjugate of A_k` that the data imply.
pub fn n_soliton_system(params: &SolitonParams, x: f64, t: f64) -> Result<ResidueSystem> {
    let sys = ResidueSystem::solve(soliton_residue_poles(params, x, t))?;
    let n = params.len();
    let scale = 1.0 + sys.solution.norm();
    for k in 0..n {
        let a = sys.residue(k);
        let at = sys.residue(n + k);
        let defect = (at[0] + a[1].conj()).norm() + (at[1] - a[0].conj()).norm();
        if defect > 1e-8 * scale {
            return Err(Error::Accuracy(format!(
                "residue symmetry violated by {defect:e} at pole {k}"
            )));
        }
    }
    Ok(sys)
}

/// N-soliton value `u(x, t)`.
pub fn n_soliton(params: &SolitonParams, x: f64, t: f64) -> Result<Complex64> {
    Ok(n_soliton_system(params, x, t)?.reconstruct())
}

/// `u(·, t)` on a set of points, evaluated in parallel.
pub fn n_soliton_field(params: &SolitonParams, xs: &[f64], t: f64) -> Result<Vec<Complex64>> {
    xs.par_iter().map(|&x| n_soliton(params, x, t)).collect()
}

/// N-soliton from the symmetry-reduced `N×N` system: with
/// `G_kj = κ_k/(z_k - z̄_j)` solve `(1 + G Ḡ) β = κ`, then
/// `u = -2i Σ conj(β_k)`. Used as an independent check of the full system;
/// it has no overflow guard.
pub fn n_soliton_reduced(params: &SolitonParams, x: f64, t: f64) -> Result<Complex64> {
    let n = params.len();
    if n == 0 {
        return Ok(c64(0.0, 0.0));
    }
    let kappa: Vec<Complex64> = params
        .poles
        .iter()
        .zip(&params.couplings)
        .map(|(&z, &c)| c * phase(z, x, t).exp())
        .collect();
    let g = DMatrix::from_fn(n, n, |k, j| {
        kappa[k] / (params.poles[k] - params.poles[j].conj())
    });
    let gbar = g.map(|v| v.conj());
    let m = DMatrix::<Complex64>::identity(n, n) + &g * &gbar;
    let rhs = DMatrix::from_fn(n, 1, |k, _| kappa[k]);
    let beta = m.lu().solve(&rhs).ok_or(Error::SingularSystem {
        cond: f64::INFINITY,
    })?;
    Ok(-2.0 * I * beta.iter().map(|b| b.conj()).sum::<Complex64>())
}

/// N-soliton with couplings `c_k Λ_k²`.
pub fn modified_soliton(
    params: &SolitonParams,
    lambdas: &[Complex64],
    x: f64,
    t: f64,
) -> Result<Complex64> {
    if lambdas
        .iter()
        .any(|l| l.norm() == 0.0 || !l.re.is_finite() || !l.im.is_finite())
    {
        return Err(Error::InvalidInput(
            "Λ factors must be finite and nonzero".into(),
        ));
    }
    let factors: Vec<Complex64> = lambdas.iter().map(|l| l * l).collect();
    n_soliton(&params.with_scaled_couplings(&factors)?, x, t)
}
