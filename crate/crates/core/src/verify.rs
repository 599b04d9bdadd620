//! The stability experiment: perturb an N-soliton, measure the scattering
//! data of the perturbed initial value, evolve it with the split-step
//! solver and compare with the asymptotic soliton `u^{sol}_±`.

use std::str::FromStr;

use num_complex::Complex64;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use serde::{Deserialize, Serialize};

use crate::asymptotics::{self, AsymptoticOptions, AsymptoticSoliton, Sign};
use crate::error::{Error, Result};
use crate::io::{self, Pair};
use crate::nls::{self, EvolutionConfig};
use crate::potential::SampledPotential;
use crate::scattering::{self, uniform_grid, ScatteringData, SearchBox, Tolerances};
use crate::soliton::{self, SolitonParams};
use crate::{c64, I};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Shape {
    Gaussian,
    SechBump,
    PhaseNoise,
}

impl FromStr for Shape {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gaussian" => Ok(Shape::Gaussian),
            "sech-bump" => Ok(Shape::SechBump),
            "phase-noise" => Ok(Shape::PhaseNoise),
            _ => Err(Error::InvalidInput(format!(
                "unknown shape '{s}' (expected gaussian, sech-bump or phase-noise)"
            ))),
        }
    }
}

/// Additive (`gaussian`, `sech-bump`) or multiplicative (`phase-noise`)
/// perturbation of amplitude `eps`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Perturbation {
    pub shape: Shape,
    pub center: f64,
    pub width: f64,
    pub eps: f64,
    #[serde(default)]
    pub seed: u64,
}

const NOISE_MODES: usize = 6;

impl Perturbation {
    pub fn none() -> Self {
        Self {
            shape: Shape::Gaussian,
            center: 0.0,
            width: 1.0,
            eps: 0.0,
            seed: 0,
        }
    }

    fn noise_coefficients(&self) -> Vec<(f64, f64)> {
        let mut rng = StdRng::seed_from_u64(self.seed);
        (1..=NOISE_MODES)
            .map(|m| {
                (
                    rng.random_range(-1.0..1.0) / m as f64,
                    rng.random_range(0.0..std::f64::consts::TAU),
                )
            })
            .collect()
    }

    /// Applies the perturbation to the unperturbed value `u` at `x`.
    fn apply(&self, x: f64, u: Complex64, noise: &[(f64, f64)]) -> Complex64 {
        let s = (x - self.center) / self.width;
        match self.shape {
            Shape::Gaussian => u + self.eps * (-s * s).exp(),
            Shape::SechBump => u + self.eps / s.cosh(),
            Shape::PhaseNoise => {
                let phase: f64 = noise
                    .iter()
                    .enumerate()
                    .map(|(m, &(a, p))| a * ((m + 1) as f64 * s + p).sin())
                    .sum();
                u * (I * self.eps * phase).exp()
            }
        }
    }
}

/// Soliton parameters plus a perturbation: the initial value
/// `u₀ = u_N(x, 0) + perturbation`.
#[derive(Debug, Clone, PartialEq)]
pub struct Recipe {
    pub params: SolitonParams,
    pub perturbation: Perturbation,
}

#[derive(Serialize, Deserialize)]
struct RecipeFile {
    poles: Vec<Pair>,
    couplings: Vec<Pair>,
    perturbation: Perturbation,
}

impl Recipe {
    pub fn field(&self, xs: &[f64]) -> Result<Vec<Complex64>> {
        let base = soliton::n_soliton_field(&self.params, xs, 0.0)?;
        let noise = self.perturbation.noise_coefficients();
        Ok(xs
            .iter()
            .zip(base)
            .map(|(&x, u)| self.perturbation.apply(x, u, &noise))
            .collect())
    }

    pub fn potential(&self, x_min: f64, x_max: f64, n: usize) -> Result<SampledPotential> {
        let xs = uniform_grid(x_min, x_max, n);
        SampledPotential::new(x_min, x_max, self.field(&xs)?)
    }

    pub fn with_eps(&self, eps: f64) -> Self {
        Self {
            params: self.params.clone(),
            perturbation: Perturbation {
                eps,
                ..self.perturbation
            },
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(RecipeFile {
            poles: io::to_pairs(self.params.poles()),
            couplings: io::to_pairs(self.params.couplings()),
            perturbation: self.perturbation,
        })
        .expect("recipe serialises")
    }

    pub fn from_json(v: &serde_json::Value) -> Result<Self> {
        let f: RecipeFile = serde_json::from_value(v.clone())?;
        let params = SolitonParams::new(io::from_pairs(&f.poles), io::from_pairs(&f.couplings))?;
        if !(f.perturbation.width > 0.0) || !f.perturbation.eps.is_finite() {
            return Err(Error::InvalidInput(
                "perturbation needs width > 0 and finite eps".into(),
            ));
        }
        Ok(Self {
            params,
            perturbation: f.perturbation,
        })
    }
}

/// Numerical set-up of the experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityConfig {
    pub scatter_window: (f64, f64),
    pub scatter_points: usize,
    pub r_grid: (f64, f64, usize),
    pub search_box: SearchBox,
    pub evolution_window: (f64, f64),
    pub n_modes: usize,
    pub dt: f64,
    pub tolerances: Tolerances,
    pub asymptotic: AsymptoticOptions,
    /// For `-`: evolve `conj u₀` forward and map back instead of evolving
    /// `u₀` backward.
    pub via_conjugation: bool,
}

impl Default for StabilityConfig {
    fn default() -> Self {
        Self {
            scatter_window: (-30.0, 30.0),
            scatter_points: 6001,
            r_grid: (-8.0, 8.0, 641),
            search_box: SearchBox {
                re_min: -3.0,
                re_max: 3.0,
                im_min: 0.05,
                im_max: 3.0,
            },
            evolution_window: (-1200.0, 1200.0),
            n_modes: 32768,
            dt: 0.0025,
            tolerances: Tolerances::default(),
            asymptotic: AsymptoticOptions::default(),
            via_conjugation: false,
        }
    }
}

/// One line of the decay table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayRow {
    pub t: f64,
    pub sup_residual: Option<f64>,
    pub scaled_residual: Option<f64>,
    pub edge_mass: f64,
    pub skipped: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    pub sign: Sign,
    pub eps: Option<f64>,
    pub measured_poles: Vec<Pair>,
    pub measured_couplings: Vec<Pair>,
    pub lambdas: Vec<Pair>,
    pub asymptotic_couplings: Vec<Pair>,
    /// `|z_j - z'_j| + |c_j - c_j^±|` per reference pole, paired by
    /// proximity; only for recipes.
    pub closeness: Option<Vec<f64>>,
    pub closeness_total: Option<f64>,
    pub max_abs_r: f64,
    pub rows: Vec<DecayRow>,
    /// Scaled residuals non-increasing within 25% slack.
    pub decay_ok: bool,
}

impl StabilityReport {
    pub fn scaled_series(&self) -> Vec<(f64, f64)> {
        self.rows
            .iter()
            .filter_map(|r| r.scaled_residual.map(|s| (r.t, s)))
            .collect()
    }
}

/// `s_{k+1} ≤ (1 + slack) s_k` along the series.
pub fn non_increasing_within(series: &[f64], slack: f64) -> bool {
    series.windows(2).all(|w| w[1] <= (1.0 + slack) * w[0])
}

/// Reason a time is skipped: some `ξ` would put poles with different real
/// parts in `□` at once.
pub fn ambiguity_at(poles: &[Complex64], t: f64) -> Result<Option<String>> {
    for (i, a) in poles.iter().enumerate() {
        for b in &poles[i + 1..] {
            if (a.re - b.re).abs() <= 1e-12 {
                continue;
            }
            let xi = 0.5 * (a.re + b.re);
            let frame = asymptotics::classify(poles, -4.0 * t * xi, t)?;
            if let Some(w) = frame.warning {
                return Ok(Some(w));
            }
        }
    }
    Ok(None)
}

/// Initial value of the experiment.
#[derive(Debug, Clone, PartialEq)]
pub enum InitialValue {
    Recipe(Recipe),
    /// Sampled data; placed on the evolution grid by linear interpolation
    /// and zero extension.
    Sampled(SampledPotential),
}

impl InitialValue {
    fn reference(&self) -> Option<&SolitonParams> {
        match self {
            InitialValue::Recipe(r) => Some(&r.params),
            InitialValue::Sampled(_) => None,
        }
    }

    fn eps(&self) -> Option<f64> {
        match self {
            InitialValue::Recipe(r) => Some(r.perturbation.eps),
            InitialValue::Sampled(_) => None,
        }
    }

    fn on_evolution_grid(&self, cfg: &StabilityConfig) -> Result<SampledPotential> {
        let (x0, x1) = cfg.evolution_window;
        match self {
            InitialValue::Recipe(r) => r.potential(x0, x1, cfg.n_modes),
            InitialValue::Sampled(p) => nls::embed(p, x0, x1, cfg.n_modes),
        }
    }
}

/// Scattering data of the initial value: recipes are sampled on the
/// configured scattering window, sampled data are used as given.
pub fn measure(init: &InitialValue, cfg: &StabilityConfig) -> Result<ScatteringData> {
    let grid = uniform_grid(cfg.r_grid.0, cfg.r_grid.1, cfg.r_grid.2);
    match init {
        InitialValue::Recipe(r) => {
            let pot = r.potential(
                cfg.scatter_window.0,
                cfg.scatter_window.1,
                cfg.scatter_points,
            )?;
            scattering::scatter(&pot, &grid, &cfg.search_box, &cfg.tolerances)
        }
        InitialValue::Sampled(p) => scattering::scatter(p, &grid, &cfg.search_box, &cfg.tolerances),
    }
}

/// Pairs each reference pole with the nearest measured one and returns
/// `|z_j - z'_j| + |c_j - c_j'|`.
pub fn closeness(
    reference: &SolitonParams,
    poles: &[Complex64],
    couplings: &[Complex64],
) -> Result<Vec<f64>> {
    if poles.len() != reference.len() {
        return Err(Error::CountMismatch {
            expected: reference.len(),
            found: poles.len(),
        });
    }
    Ok(reference
        .poles()
        .iter()
        .zip(reference.couplings())
        .map(|(z0, c0)| {
            let j = (0..poles.len())
                .min_by(|&a, &b| {
                    (poles[a] - z0)
                        .norm()
                        .partial_cmp(&(poles[b] - z0).norm())
                        .unwrap()
                })
                .unwrap();
            (poles[j] - z0).norm() + (couplings[j] - c0).norm()
        })
        .collect())
}

/// Times the evolution window may be doubled when radiation reaches its
/// edges.
const MAX_WIDENINGS: usize = 2;

/// Earliest `|t|` at which the asymptotic soliton is compared.
pub const MIN_TIME: f64 = 1.0;

/// Runs the experiment for `times` (positive for `+`, negative for `-`).
pub fn run_stability(
    init: &InitialValue,
    sign: Sign,
    times: &[f64],
    cfg: &StabilityConfig,
) -> Result<StabilityReport> {
    if times.is_empty() {
        return Err(Error::InvalidInput("empty t-list".into()));
    }
    let wrong_sign = match sign {
        Sign::Plus => times.iter().any(|&t| !(t > 0.0)),
        Sign::Minus => times.iter().any(|&t| !(t < 0.0)),
    };
    if wrong_sign {
        return Err(Error::InvalidInput(format!(
            "sign {sign} needs every t in the list to have that sign"
        )));
    }
    if times.iter().any(|t| t.abs() < MIN_TIME) {
        return Err(Error::InvalidInput(format!(
            "asymptotic comparison starts at |t| = {MIN_TIME}"
        )));
    }
    let sd = measure(init, cfg)?;
    let (x0, x1) = cfg.evolution_window;
    let u0 = init.on_evolution_grid(cfg)?;
    let ecfg = EvolutionConfig {
        dt: cfg.dt,
        t_final: 0.0,
        n_modes: cfg.n_modes,
        x_min: x0,
        x_max: x1,
        edge_mass_tol: 1e-10,
        blowup_factor: 10.0,
    };

    let use_mirror = sign == Sign::Minus && cfg.via_conjugation;
    let (asym, (evo, start)) = if use_mirror {
        let mirrored = asymptotics::conjugate_mirror_data(&sd);
        let asym = AsymptoticSoliton::new(&mirrored, Sign::Plus, &cfg.asymptotic)?;
        let fwd: Vec<f64> = times.iter().map(|t| -t).collect();
        (
            asym,
            nls::evolve_snapshots_widening(&u0.conj(), &ecfg, &fwd, MAX_WIDENINGS)?,
        )
    } else {
        let asym = AsymptoticSoliton::new(&sd, sign, &cfg.asymptotic)?;
        (
            asym,
            nls::evolve_snapshots_widening(&u0, &ecfg, times, MAX_WIDENINGS)?,
        )
    };
    let xs = start.grid();

    let mut rows = Vec::with_capacity(times.len());
    for (k, &t) in times.iter().enumerate() {
        let (_, snap) = &evo.snapshots[k];
        let edge_mass = evo.trace[k + 1].edge_mass;
        if let Some(w) = ambiguity_at(&sd.poles, t)? {
            rows.push(DecayRow {
                t,
                sup_residual: None,
                scaled_residual: None,
                edge_mass,
                skipped: Some(w),
            });
            continue;
        }
        let t_eval = if use_mirror { -t } else { t };
        let model = asym.field(&xs, t_eval)?;
        let sup = snap
            .samples()
            .iter()
            .zip(&model)
            .map(|(u, v)| (u - v).norm())
            .fold(0.0, f64::max);
        rows.push(DecayRow {
            t,
            sup_residual: Some(sup),
            scaled_residual: Some(sup * t.abs().sqrt()),
            edge_mass,
            skipped: None,
        });
    }

    let lambdas = AsymptoticSoliton::new(&sd, sign, &cfg.asymptotic)?.couplings;
    let c_sign = lambdas.couplings_for(sign).to_vec();
    let close = init
        .reference()
        .map(|p| closeness(p, &sd.poles, &c_sign))
        .transpose()?;
    let series: Vec<f64> = rows.iter().filter_map(|r| r.scaled_residual).collect();
    Ok(StabilityReport {
        sign,
        eps: init.eps(),
        measured_poles: io::to_pairs(&sd.poles),
        measured_couplings: io::to_pairs(&sd.couplings),
        lambdas: io::to_pairs(lambdas.lambdas(sign)),
        asymptotic_couplings: io::to_pairs(&c_sign),
        closeness_total: close.as_ref().map(|c| c.iter().sum()),
        closeness: close,
        max_abs_r: sd.max_abs_r(),
        decay_ok: non_increasing_within(&series, 0.25),
        rows,
    })
}

/// Writes the decay table as CSV: `t, sup_residual, scaled_residual,
/// edge_mass, skipped`.
pub fn write_decay_csv<W: std::io::Write>(w: W, report: &StabilityReport) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record([
        "t",
        "sup_residual",
        "scaled_residual",
        "edge_mass",
        "skipped",
    ])?;
    let opt = |v: Option<f64>| v.map(|v| format!("{v:.10e}")).unwrap_or_default();
    for r in &report.rows {
        wtr.write_record([
            format!("{}", r.t),
            opt(r.sup_residual),
            opt(r.scaled_residual),
            format!("{:.3e}", r.edge_mass),
            r.skipped.clone().unwrap_or_default(),
        ])?;
    }
    wtr.flush()?;
    Ok(())
}

/// The single-soliton recipe used in examples: `z₁ = i/2`, `c₁ = -i`
/// (so `u₀ = sech x` before perturbation) plus a centred gaussian.
pub fn sech_recipe(eps: f64) -> Recipe {
    Recipe {
        params: SolitonParams::new(vec![c64(0.0, 0.5)], vec![c64(0.0, -1.0)]).expect("valid"),
        perturbation: Perturbation {
            shape: Shape::Gaussian,
            center: 0.0,
            width: 1.0,
            eps,
            seed: 0,
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shapes_parse() {
        assert_eq!("sech-bump".parse::<Shape>().unwrap(), Shape::SechBump);
        assert!("square".parse::<Shape>().is_err());
    }

    #[test]
    fn zero_eps_is_the_soliton() {
        let r = sech_recipe(0.0);
        let xs = uniform_grid(-5.0, 5.0, 11);
        for (u, x) in r.field(&xs).unwrap().iter().zip(&xs) {
            assert!((u - 1.0 / x.cosh()).norm() < 1e-12);
        }
    }

    #[test]
    fn phase_noise_keeps_modulus_and_is_seeded() {
        let mut r = sech_recipe(0.1);
        r.perturbation.shape = Shape::PhaseNoise;
        r.perturbation.seed = 7;
        let xs = uniform_grid(-5.0, 5.0, 21);
        let a = r.field(&xs).unwrap();
        let b = r.field(&xs).unwrap();
        assert_eq!(a, b);
        for (u, x) in a.iter().zip(&xs) {
            assert!((u.norm() - 1.0 / x.cosh()).abs() < 1e-12);
        }
    }

    #[test]
    fn recipe_json_round_trip() {
        let r = sech_recipe(0.05);
        assert_eq!(Recipe::from_json(&r.to_json()).unwrap(), r);
    }

    #[test]
    fn ambiguity_detection() {
        let poles = [c64(-0.5, 0.6), c64(0.6, 0.5)];
        assert!(ambiguity_at(&poles, 5.0).unwrap().is_none());
        assert!(ambiguity_at(&poles, 1.0).unwrap().is_some());
    }

    #[test]
    fn monotone_with_slack() {
        assert!(non_increasing_within(&[1.0, 1.2, 1.1], 0.25));
        assert!(!non_increasing_within(&[1.0, 1.3], 0.25));
    }
}
