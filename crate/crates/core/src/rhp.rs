//! Small-norm Riemann–Hilbert problems on unions of circles.
//!
//! For reflectionless data the pole-removal transformation replaces the
//! residue conditions at every pole away from `Re z = ξ` by a jump on a
//! circle of radius `1/√t` around it. Dividing out the exactly solvable
//! residue problem `m⁽²⁾` of the remaining poles leaves an error matrix
//! `C = m⁽¹⁾ (m⁽²⁾)⁻¹` that has jumps only and tends to `1` at infinity;
//! it is found from `(1 - C_V) μ = 1` by collocation, and
//! `u = u⁽²⁾ + 2i [C₁]₁₂` with `C = 1 + C₁/z + …`.
//!
//! Circles are oriented counter-clockwise, so the `+` side is the inside
//! and `C⁻` is the boundary value from outside.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::asymptotics::{self, PhaseFrame};
use crate::error::{Error, Result};
use crate::mat2::{self, Mat2};
use crate::soliton::{self, phase, ResidueColumn, ResiduePole, ResidueSystem, SolitonParams};
use crate::{c64, I};

/// Collocation settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SmallNormOptions {
    pub nodes_per_circle: usize,
    /// Allowed change of `C₁` when the node count doubles, relative to
    /// `1 + ‖C₁‖`.
    pub c1_tol: f64,
    /// Largest accepted estimate of `‖C_V‖`.
    pub max_contraction: f64,
}

impl Default for SmallNormOptions {
    fn default() -> Self {
        Self {
            nodes_per_circle: 64,
            c1_tol: 1e-8,
            max_contraction: 0.5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Circle {
    pub center: Complex64,
    pub radius: f64,
}

/// Circles with their trapezoid nodes `ζ_j` and weights `w_j ≈ dζ`.
#[derive(Debug, Clone)]
pub struct ContourSystem {
    pub circles: Vec<Circle>,
    pub nodes_per_circle: usize,
    pub nodes: Vec<Complex64>,
    pub weights: Vec<Complex64>,
}

impl ContourSystem {
    pub fn new(circles: Vec<Circle>, nodes_per_circle: usize) -> Result<Self> {
        if nodes_per_circle < 8 || !nodes_per_circle.is_multiple_of(2) {
            return Err(Error::InvalidInput(format!(
                "nodes per circle must be even and at least 8, got {nodes_per_circle}"
            )));
        }
        for (i, a) in circles.iter().enumerate() {
            if !(a.radius > 0.0) {
                return Err(Error::InvalidInput(format!(
                    "circle {i} has radius {}",
                    a.radius
                )));
            }
            for (j, b) in circles[..i].iter().enumerate() {
                if (a.center - b.center).norm() <= a.radius + b.radius {
                    return Err(Error::CircleOverlap(format!(
                        "circles {j} at {} and {i} at {} intersect (radii {:.4}, {:.4})",
                        b.center, a.center, b.radius, a.radius
                    )));
                }
            }
        }
        let n = nodes_per_circle;
        let mut nodes = Vec::with_capacity(n * circles.len());
        let mut weights = Vec::with_capacity(n * circles.len());
        for c in &circles {
            for j in 0..n {
                let e = (I * (2.0 * PI * j as f64 / n as f64)).exp();
                nodes.push(c.center + c.radius * e);
                weights.push(I * c.radius * e * (2.0 * PI / n as f64));
            }
        }
        Ok(Self {
            circles,
            nodes_per_circle: n,
            nodes,
            weights,
        })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn circle_of(&self, node: usize) -> usize {
        node / self.nodes_per_circle
    }
}

/// Jump matrices at the contour nodes, stored as `V` and `V - 1` (the
/// latter computed directly so tiny deviations keep full relative
/// precision).
#[derive(Debug, Clone)]
pub struct JumpData {
    pub values: Vec<Mat2>,
    pub deviations: Vec<Mat2>,
}

impl JumpData {
    pub fn identity(n: usize) -> Self {
        Self {
            values: vec![mat2::IDENTITY; n],
            deviations: vec![mat2::ZEROS; n],
        }
    }

    pub fn max_deviation(&self) -> f64 {
        self.deviations
            .iter()
            .map(mat2::max_abs)
            .fold(0.0, f64::max)
    }

    pub fn max_det_defect(&self) -> f64 {
        self.values
            .iter()
            .map(|v| (mat2::det(v) - 1.0).norm())
            .fold(0.0, f64::max)
    }
}

/// Which of the four triangular jumps a circle carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum JumpCase {
    /// Around `z_k`, `k ∈ ∇`: upper triangular.
    NablaPole,
    /// Around `z_k`, `k ∈ △`: lower triangular.
    TrianglePole,
    /// Around `z̄_k`, `k ∈ ∇`: lower triangular.
    NablaConjugate,
    /// Around `z̄_k`, `k ∈ △`: upper triangular.
    TriangleConjugate,
}

#[derive(Debug, Clone, Copy)]
struct CircleJump {
    circle: Circle,
    case: JumpCase,
    pole: usize,
}

/// Analytic description of the jump on `Σ⁽¹⁾` for one `(x, t)`, able to
/// produce [`JumpData`] at any node count.
#[derive(Debug, Clone)]
pub struct JumpModel {
    params: SolitonParams,
    pub frame: PhaseFrame,
    jumps: Vec<CircleJump>,
    /// Residue problem of the poles kept inside `□`.
    pub inner: ResidueSystem,
}

impl JumpModel {
    pub fn new(params: &SolitonParams, frame: &PhaseFrame) -> Result<Self> {
        let t = frame.t;
        if !(t > 0.0) {
            return Err(Error::InvalidInput(format!(
                "pole removal on circles needs t > 0, got {t}"
            )));
        }
        let poles = params.poles();
        let radius = 1.0 / t.sqrt();
        let mut jumps = Vec::new();
        for k in 0..params.len() {
            if frame.in_square(k) {
                continue;
            }
            let nabla = frame.in_nabla(k);
            let (pc, cc) = if nabla {
                (JumpCase::NablaPole, JumpCase::NablaConjugate)
            } else {
                (JumpCase::TrianglePole, JumpCase::TriangleConjugate)
            };
            jumps.push(CircleJump {
                circle: Circle {
                    center: poles[k],
                    radius,
                },
                case: pc,
                pole: k,
            });
            jumps.push(CircleJump {
                circle: Circle {
                    center: poles[k].conj(),
                    radius,
                },
                case: cc,
                pole: k,
            });
        }
        for j in &jumps {
            for &k in &frame.square {
                for p in [poles[k], poles[k].conj()] {
                    if (p - j.circle.center).norm() <= radius {
                        return Err(Error::CircleOverlap(format!(
                            "pole {p} kept in the residue problem lies inside the circle around {}",
                            j.circle.center
                        )));
                    }
                }
            }
        }
        let inner = ResidueSystem::solve(square_residue_poles(params, frame)?)?;
        Ok(Self {
            params: params.clone(),
            frame: frame.clone(),
            jumps,
            inner,
        })
    }

    pub fn circles(&self) -> Vec<Circle> {
        self.jumps.iter().map(|j| j.circle).collect()
    }

    pub fn cases(&self) -> Vec<(usize, JumpCase)> {
        self.jumps.iter().map(|j| (j.pole, j.case)).collect()
    }

    /// `V⁽¹⁾(z) - 1` on the circle `jump`, counter-clockwise convention.
    fn pole_removal_deviation(&self, jump: &CircleJump, z: Complex64) -> Result<Mat2> {
        let poles = self.params.poles();
        let k = jump.pole;
        let zk = poles[k];
        let ck = self.params.couplings()[k];
        let ph = phase(zk, self.frame.x, self.frame.t);
        let tz = asymptotics::blaschke_t(z, &self.frame, poles)?;
        let t2 = tz * tz;
        let zero = c64(0.0, 0.0);
        // These are the inverses of the jumps for the clockwise orientation
        // in which `+` is the outside; for unipotent triangular matrices
        // that only flips the sign of the off-diagonal entry.
        let dev = match jump.case {
            JumpCase::NablaPole => {
                let e = (-ph).exp() * (z - zk) / (ck * t2);
                [[zero, -e], [zero, zero]]
            }
            JumpCase::TrianglePole => {
                let e = ck * ph.exp() * t2 / (z - zk);
                [[zero, zero], [-e, zero]]
            }
            JumpCase::NablaConjugate => {
                let e = -(z - zk.conj()) * t2 * (-ph.conj()).exp() / ck.conj();
                [[zero, zero], [-e, zero]]
            }
            JumpCase::TriangleConjugate => {
                let e = -ck.conj() * ph.conj().exp() / ((z - zk.conj()) * t2);
                [[zero, -e], [zero, zero]]
            }
        };
        Ok(dev)
    }

    /// Samples `V - 1` for the error problem, `m⁽²⁾ (V⁽¹⁾ - 1) (m⁽²⁾)⁻¹`.
    pub fn sample(&self, nodes_per_circle: usize) -> Result<(ContourSystem, JumpData)> {
        let cs = ContourSystem::new(self.circles(), nodes_per_circle)?;
        let mut values = Vec::with_capacity(cs.len());
        let mut deviations = Vec::with_capacity(cs.len());
        for (i, &z) in cs.nodes.iter().enumerate() {
            let jump = &self.jumps[cs.circle_of(i)];
            let n = self.pole_removal_deviation(jump, z)?;
            let dev = if self.inner.poles.is_empty() {
                n
            } else {
                let m2 = self.inner.m_at(z);
                mat2::mul(&mat2::mul(&m2, &n), &mat2::inv(&m2))
            };
            if dev
                .iter()
                .flatten()
                .any(|v| !(v.re.is_finite() && v.im.is_finite()))
            {
                return Err(Error::Accuracy(format!("jump matrix is not finite at {z}")));
            }
            values.push(mat2::add(&mat2::IDENTITY, &dev));
            deviations.push(dev);
        }
        Ok((cs, JumpData { values, deviations }))
    }

    /// `max |V - 1|` on each circle at the given resolution.
    pub fn per_circle_deviation(&self, jd: &JumpData, nodes_per_circle: usize) -> Vec<f64> {
        jd.deviations
            .chunks(nodes_per_circle)
            .map(|c| c.iter().map(mat2::max_abs).fold(0.0, f64::max))
            .collect()
    }
}

/// Residue conditions left at the poles in `□` after the Blaschke
/// conjugation: for `k ∈ ∇` the residues swap columns and the constants
/// become `1/(c_k e^{φ_k} T'(z_k)²)`; for `k ∈ △` they pick up `T(z_k)²`.
fn square_residue_poles(params: &SolitonParams, frame: &PhaseFrame) -> Result<Vec<ResiduePole>> {
    let poles = params.poles();
    let mut out = Vec::new();
    for &k in &frame.square {
        let zk = poles[k];
        let ck = params.couplings()[k];
        let ph = phase(zk, frame.x, frame.t);
        if frame.in_nabla(k) {
            let tp = asymptotics::blaschke_t_derivative_at_zero(k, frame, poles);
            let coef = 1.0 / (ck * tp * tp);
            out.push(ResiduePole {
                at: zk,
                column: ResidueColumn::Second,
                coef,
                expo: -ph,
            });
            out.push(ResiduePole {
                at: zk.conj(),
                column: ResidueColumn::First,
                coef: -coef.conj(),
                expo: -ph.conj(),
            });
        } else {
            let tk = asymptotics::blaschke_t(zk, frame, poles)?;
            let coef = ck * tk * tk;
            out.push(ResiduePole {
                at: zk,
                column: ResidueColumn::First,
                coef,
                expo: ph,
            });
            out.push(ResiduePole {
                at: zk.conj(),
                column: ResidueColumn::Second,
                coef: -coef.conj(),
                expo: ph.conj(),
            });
        }
    }
    Ok(out)
}

/// Builds the contour and jump data of the pole-removed problem at
/// `(frame.x, frame.t)` with the default node count.
pub fn build_jump(params: &SolitonParams, frame: &PhaseFrame) -> Result<(ContourSystem, JumpData)> {
    JumpModel::new(params, frame)?.sample(SmallNormOptions::default().nodes_per_circle)
}

/// Solution of the discretised `(1 - C_V) μ = 1`.
#[derive(Debug, Clone)]
pub struct SmallNormSolution {
    pub mu: Vec<Mat2>,
    pub c1: Mat2,
    /// Power-iteration estimate of `‖C_V‖₂` on the collocation space.
    pub contraction: f64,
    pub max_deviation: f64,
}

/// Self-interaction of one circle: minus-side (outer) boundary value of
/// the Cauchy integral of the trigonometric interpolant, i.e. minus the
/// projection onto negative Fourier modes, Nyquist mode halved.
fn outer_projection(n: usize) -> DMatrix<Complex64> {
    let half = n / 2;
    DMatrix::from_fn(n, n, |i, j| {
        let d = 2.0 * PI * (i as f64 - j as f64) / n as f64;
        let mut s = c64(0.0, 0.0);
        for m in 1..=half {
            let w = if m == half { 0.5 } else { 1.0 };
            s += w * (-I * (m as f64 * d)).exp();
        }
        -s / n as f64
    })
}

/// Above this many nodes the collocation operator is applied matrix-free
/// and the system solved by Neumann iteration instead of dense LU.
pub const DENSE_NODE_LIMIT: usize = 2048;

const NEUMANN_TOL: f64 = 1e-15;
const NEUMANN_MAX_ITER: usize = 500;

/// The collocation operator `C_V` acting on one row of `μ` per node,
/// flattened as `(node, column)`.
struct Collocation<'a> {
    cs: &'a ContourSystem,
    jd: &'a JumpData,
    local: DMatrix<Complex64>,
}

impl Collocation<'_> {
    fn kernel(&self, i: usize, j: usize) -> Complex64 {
        let n = self.cs.nodes_per_circle;
        let (ci, cj) = (self.cs.circle_of(i), self.cs.circle_of(j));
        if ci == cj {
            self.local[(i - ci * n, j - cj * n)]
        } else {
            self.cs.weights[j] / (2.0 * PI * I * (self.cs.nodes[j] - self.cs.nodes[i]))
        }
    }

    fn dense(&self) -> DMatrix<Complex64> {
        let m = self.cs.len();
        let mut b = DMatrix::<Complex64>::zeros(2 * m, 2 * m);
        for i in 0..m {
            for j in 0..m {
                let k = self.kernel(i, j);
                let dev = &self.jd.deviations[j];
                for c in 0..2 {
                    for bb in 0..2 {
                        b[(2 * i + c, 2 * j + bb)] = k * dev[bb][c];
                    }
                }
            }
        }
        b
    }

    fn apply(&self, v: &[Complex64]) -> Vec<Complex64> {
        let m = self.cs.len();
        // (μ (V - 1))_j computed once per source node
        let src: Vec<[Complex64; 2]> = (0..m)
            .map(|j| {
                let d = &self.jd.deviations[j];
                [0, 1].map(|c| v[2 * j] * d[0][c] + v[2 * j + 1] * d[1][c])
            })
            .collect();
        (0..m)
            .into_par_iter()
            .flat_map_iter(|i| {
                let mut acc = [c64(0.0, 0.0); 2];
                for (j, s) in src.iter().enumerate() {
                    let k = self.kernel(i, j);
                    acc[0] += k * s[0];
                    acc[1] += k * s[1];
                }
                acc
            })
            .collect()
    }

    fn apply_adjoint(&self, v: &[Complex64]) -> Vec<Complex64> {
        let m = self.cs.len();
        (0..m)
            .into_par_iter()
            .flat_map_iter(|j| {
                let mut acc = [c64(0.0, 0.0); 2];
                for i in 0..m {
                    let k = self.kernel(i, j).conj();
                    acc[0] += k * v[2 * i];
                    acc[1] += k * v[2 * i + 1];
                }
                let d = &self.jd.deviations[j];
                [0, 1].map(|bb| d[bb][0].conj() * acc[0] + d[bb][1].conj() * acc[1])
            })
            .collect()
    }
}

/// Collocation solve of `(1 - C_V) μ = 1` and
/// `C₁ = -(2πi)⁻¹ ∮ μ (V - 1) dζ`.
pub fn solve_small_norm(
    cs: &ContourSystem,
    jd: &JumpData,
    opts: &SmallNormOptions,
) -> Result<SmallNormSolution> {
    let m = cs.len();
    if jd.deviations.len() != m {
        return Err(Error::InvalidInput(
            "jump data and contour disagree in size".into(),
        ));
    }
    let max_deviation = jd.max_deviation();
    if m == 0 || max_deviation == 0.0 {
        return Ok(SmallNormSolution {
            mu: vec![mat2::IDENTITY; m],
            c1: mat2::ZEROS,
            contraction: 0.0,
            max_deviation,
        });
    }
    let op = Collocation {
        cs,
        jd,
        local: outer_projection(cs.nodes_per_circle),
    };
    let dim = 2 * m;
    if m <= DENSE_NODE_LIMIT {
        let b = op.dense();
        let bh = b.adjoint();
        let contraction = spectral_norm_estimate(dim, |v| dense_mul(&b, v), |v| dense_mul(&bh, v));
        if !(contraction < opts.max_contraction) {
            return Err(Error::NonContraction {
                estimate: contraction,
            });
        }
        let a = DMatrix::<Complex64>::identity(dim, dim) - &b;
        let rhs = DMatrix::from_fn(dim, 2, |row, r| {
            if row % 2 == r {
                c64(1.0, 0.0)
            } else {
                c64(0.0, 0.0)
            }
        });
        let x = a.lu().solve(&rhs).ok_or(Error::SingularSystem {
            cond: f64::INFINITY,
        })?;
        let cols = [0, 1].map(|r| x.column(r).iter().copied().collect());
        Ok(finish(cs, jd, cols, contraction, max_deviation))
    } else {
        let contraction = spectral_norm_estimate(dim, |v| op.apply(v), |v| op.apply_adjoint(v));
        if !(contraction < opts.max_contraction) {
            return Err(Error::NonContraction {
                estimate: contraction,
            });
        }
        let cols = [neumann(&op, dim, 0)?, neumann(&op, dim, 1)?];
        Ok(finish(cs, jd, cols, contraction, max_deviation))
    }
}

/// `μ = 1 + C_V μ` by fixed-point iteration; converges since `‖C_V‖ < 1`.
fn neumann(op: &Collocation, dim: usize, r: usize) -> Result<Vec<Complex64>> {
    let rhs: Vec<Complex64> = (0..dim)
        .map(|row| {
            if row % 2 == r {
                c64(1.0, 0.0)
            } else {
                c64(0.0, 0.0)
            }
        })
        .collect();
    let mut x = rhs.clone();
    for _ in 0..NEUMANN_MAX_ITER {
        let bx = op.apply(&x);
        let next: Vec<Complex64> = rhs.iter().zip(&bx).map(|(a, b)| a + b).collect();
        let change = next
            .iter()
            .zip(&x)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        x = next;
        if change <= NEUMANN_TOL {
            return Ok(x);
        }
    }
    Err(Error::Accuracy(format!(
        "Neumann iteration did not converge in {NEUMANN_MAX_ITER} steps"
    )))
}

fn finish(
    cs: &ContourSystem,
    jd: &JumpData,
    cols: [Vec<Complex64>; 2],
    contraction: f64,
    max_deviation: f64,
) -> SmallNormSolution {
    let m = cs.len();
    let mu: Vec<Mat2> = (0..m)
        .map(|i| {
            [
                [cols[0][2 * i], cols[0][2 * i + 1]],
                [cols[1][2 * i], cols[1][2 * i + 1]],
            ]
        })
        .collect();
    let mut acc = mat2::ZEROS;
    for j in 0..m {
        acc = mat2::add(
            &acc,
            &mat2::scale(&mat2::mul(&mu[j], &jd.deviations[j]), cs.weights[j]),
        );
    }
    let c1 = mat2::scale(&acc, -1.0 / (2.0 * PI * I));
    SmallNormSolution {
        mu,
        c1,
        contraction,
        max_deviation,
    }
}

fn dense_mul(b: &DMatrix<Complex64>, v: &[Complex64]) -> Vec<Complex64> {
    (b * DVector::from_column_slice(v))
        .iter()
        .copied()
        .collect()
}

/// Power iteration on `B^H B`.
fn spectral_norm_estimate(
    dim: usize,
    apply: impl Fn(&[Complex64]) -> Vec<Complex64>,
    apply_adjoint: impl Fn(&[Complex64]) -> Vec<Complex64>,
) -> f64 {
    let mut v: Vec<Complex64> = (0..dim)
        .map(|i| c64(1.0 + (i % 7) as f64 * 0.1, 0.3 * ((i % 5) as f64 - 2.0)))
        .collect();
    let mut est = 0.0;
    for _ in 0..40 {
        let norm = v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 {
            return 0.0;
        }
        v.iter_mut().for_each(|x| *x /= norm);
        let w = apply_adjoint(&apply(&v));
        let next = w.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt().sqrt();
        let done = (next - est).abs() <= 1e-6 * next;
        est = next;
        v = w;
        if done {
            break;
        }
    }
    est
}

/// Flat diagnostic record of one decomposition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RhpDiagnostics {
    pub x: f64,
    pub t: f64,
    pub xi: f64,
    pub square: Vec<usize>,
    pub circle_count: usize,
    pub per_circle_v_minus_1: Vec<f64>,
    pub contraction: f64,
    /// `‖C_V‖ / ‖V - 1‖_∞`.
    pub operator_kappa: f64,
    pub c1_norm: f64,
    pub node_count: usize,
    pub doubling_change: f64,
    pub frame_warning: Option<String>,
}

/// `u = u⁽²⁾ + 2i [C₁]₁₂` at one point.
#[derive(Debug, Clone)]
pub struct Decomposition {
    pub u_inner: Complex64,
    pub c1: Mat2,
    pub u: Complex64,
    pub diagnostics: RhpDiagnostics,
}

/// Solves the pole-removed problem at `(x, t)` and reassembles `u`. The
/// collocation is repeated with twice the nodes and must agree to
/// `c1_tol`.
pub fn decompose(
    params: &SolitonParams,
    x: f64,
    t: f64,
    opts: &SmallNormOptions,
) -> Result<Decomposition> {
    let frame = asymptotics::classify(params.poles(), x, t)?;
    let model = JumpModel::new(params, &frame)?;
    let n = opts.nodes_per_circle;
    let (cs, jd) = model.sample(n)?;
    let sol = solve_small_norm(&cs, &jd, opts)?;
    let (cs2, jd2) = model.sample(2 * n)?;
    let sol2 = solve_small_norm(&cs2, &jd2, opts)?;
    let change = mat2::norm(&mat2::sub(&sol2.c1, &sol.c1));
    let c1_norm = mat2::norm(&sol2.c1);
    if change > opts.c1_tol * (1.0 + c1_norm) {
        return Err(Error::Resolution { change });
    }
    let u_inner = soliton::reconstruct_from_residues(&model.inner);
    let u = u_inner + 2.0 * I * sol2.c1[0][1];
    let diagnostics = RhpDiagnostics {
        x,
        t,
        xi: frame.xi,
        square: frame.square.clone(),
        circle_count: cs.circles.len(),
        per_circle_v_minus_1: model.per_circle_deviation(&jd2, 2 * n),
        contraction: sol2.contraction,
        operator_kappa: if sol2.max_deviation > 0.0 {
            sol2.contraction / sol2.max_deviation
        } else {
            0.0
        },
        c1_norm,
        node_count: cs2.len(),
        doubling_change: change,
        frame_warning: frame.warning.clone(),
    };
    Ok(Decomposition {
        u_inner,
        c1: sol2.c1,
        u,
        diagnostics,
    })
}
