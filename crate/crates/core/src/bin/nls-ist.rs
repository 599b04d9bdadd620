//! `nls-ist` command-line front end.
//!
//! Every command writes its outputs plus a `manifest.json` into
//! `--out-dir`. Failures print `{"error": code, "message": ...}` on stderr
//! and exit with 2 for invalid input or 1 for numerical failures.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde_json::json;
use sha2::{Digest, Sha256};

use nls_ist::asymptotics::Sign;
use nls_ist::io;
use nls_ist::scattering::{self, uniform_grid, SearchBox, Tolerances};
use nls_ist::soliton::{self, SolitonParams};
use nls_ist::verify::{self, InitialValue, Recipe, Shape, StabilityConfig};
use nls_ist::{Error, Result, SampledPotential};

#[derive(Parser)]
#[command(
    name = "nls-ist",
    version,
    about = "Inverse scattering toolkit for the focusing cubic NLS equation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Scattering data (r, poles, couplings) of a sampled potential.
    Scatter(ScatterArgs),
    /// N-soliton field from a parameter file.
    Synthesize(SynthArgs),
    /// Decay of u - u_sol along a list of times for a perturbed soliton.
    VerifyStability(StabilityArgs),
}

#[derive(Args, Clone)]
struct TolArgs {
    #[arg(long, default_value_t = 1e-10)]
    tol_root: f64,
    #[arg(long, default_value_t = 1e-7)]
    tol_unitarity: f64,
    #[arg(long, default_value_t = 1e-6)]
    tol_gamma: f64,
    #[arg(long, default_value_t = 1e-8)]
    tol_tail: f64,
    #[arg(long, default_value_t = 1e-8)]
    tol_a_floor: f64,
    #[arg(long, default_value_t = 1e-7)]
    tol_step: f64,
}

impl TolArgs {
    fn tolerances(&self) -> Tolerances {
        Tolerances {
            root_tol: self.tol_root,
            unitarity_tol: self.tol_unitarity,
            gamma_tol: self.tol_gamma,
            tail_tol: self.tol_tail,
            a_floor: self.tol_a_floor,
            step_tol: self.tol_step,
            ..Tolerances::default()
        }
    }
}

#[derive(Args)]
struct ScatterArgs {
    /// Potential as CSV (x, re u, im u) or JSON envelope.
    input: PathBuf,
    /// Real grid for r(z) as lo:hi:n.
    #[arg(long, default_value = "-8:8:321", allow_hyphen_values = true)]
    grid: String,
    /// Eigenvalue search box as re_min,re_max,im_min,im_max.
    #[arg(
        long = "box",
        default_value = "-3,3,0.05,3",
        allow_hyphen_values = true
    )]
    search_box: String,
    #[command(flatten)]
    tol: TolArgs,
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
}

#[derive(Args)]
struct SynthArgs {
    /// Parameter file (JSON envelope with poles and couplings).
    params: PathBuf,
    /// x grid as lo:hi:n.
    #[arg(long, default_value = "-20:20:2001", allow_hyphen_values = true)]
    grid: String,
    /// Comma-separated times; one CSV per time.
    #[arg(long, default_value = "0", allow_hyphen_values = true)]
    t_list: String,
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
}

#[derive(Args)]
struct StabilityArgs {
    /// Sampled initial value (CSV or JSON); excludes --recipe.
    #[arg(long, conflicts_with = "recipe")]
    u0: Option<PathBuf>,
    /// Recipe JSON: {"poles", "couplings", "perturbation"}. Without either
    /// input the sech soliton (z = i/2, c = -i) is used.
    #[arg(long)]
    recipe: Option<PathBuf>,
    #[arg(long, default_value = "+", allow_hyphen_values = true)]
    sign: String,
    #[arg(long, default_value = "5,10,20,40", allow_hyphen_values = true)]
    t_list: String,
    /// Overrides the recipe's perturbation amplitude.
    #[arg(long)]
    eps: Option<f64>,
    /// Overrides the recipe's perturbation shape: gaussian, sech-bump, phase-noise.
    #[arg(long)]
    shape: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    /// For sign '-', evolve conj(u0) forward and map back.
    #[arg(long)]
    via_conjugation: bool,
    /// Evolution modes (power of two).
    #[arg(long, default_value_t = 32768)]
    n_modes: usize,
    /// Half-width of the evolution window.
    #[arg(long, default_value_t = 1200.0)]
    half_width: f64,
    #[arg(long, default_value_t = 0.0025)]
    dt: f64,
    /// Real grid for r(z) as lo:hi:n.
    #[arg(long, default_value = "-8:8:641", allow_hyphen_values = true)]
    grid: String,
    #[arg(
        long = "box",
        default_value = "-3,3,0.05,3",
        allow_hyphen_values = true
    )]
    search_box: String,
    #[command(flatten)]
    tol: TolArgs,
    /// Also render the decay curve as PNG.
    #[arg(long)]
    plot: bool,
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
}

fn parse_grid(s: &str) -> Result<(f64, f64, usize)> {
    let parts: Vec<&str> = s.split(':').collect();
    let bad = || Error::InvalidInput(format!("grid '{s}' must be lo:hi:n"));
    if parts.len() != 3 {
        return Err(bad());
    }
    let lo: f64 = parts[0].trim().parse().map_err(|_| bad())?;
    let hi: f64 = parts[1].trim().parse().map_err(|_| bad())?;
    let n: usize = parts[2].trim().parse().map_err(|_| bad())?;
    if lo.partial_cmp(&hi) != Some(std::cmp::Ordering::Less) || n < 2 {
        return Err(bad());
    }
    Ok((lo, hi, n))
}

fn parse_list(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|p| {
            p.trim()
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| {
                    Error::InvalidInput(format!("'{p}' in list '{s}' is not a finite number"))
                })
        })
        .collect()
}

fn parse_box(s: &str) -> Result<SearchBox> {
    let v = parse_list(s)?;
    if v.len() != 4 {
        return Err(Error::InvalidInput(format!(
            "box '{s}' must be re_min,re_max,im_min,im_max"
        )));
    }
    SearchBox::new(v[0], v[1], v[2], v[3])
}

fn sha256_file(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path)?;
    Ok(format!("{:x}", Sha256::digest(&bytes)))
}

struct Manifest {
    command: &'static str,
    config: serde_json::Value,
    inputs: Vec<(PathBuf, String)>,
    outputs: Vec<PathBuf>,
    tolerances: Option<Tolerances>,
    started: Instant,
}

impl Manifest {
    fn new(command: &'static str, config: serde_json::Value) -> Self {
        Self {
            command,
            config,
            inputs: Vec::new(),
            outputs: Vec::new(),
            tolerances: None,
            started: Instant::now(),
        }
    }

    fn input(&mut self, path: &Path) -> Result<()> {
        self.inputs.push((path.to_path_buf(), sha256_file(path)?));
        Ok(())
    }

    fn write(self, out_dir: &Path) -> Result<()> {
        let inputs: serde_json::Map<String, serde_json::Value> = self
            .inputs
            .iter()
            .map(|(p, h)| (p.display().to_string(), json!(h)))
            .collect();
        let manifest = json!({
            "command": self.command,
            "config": self.config,
            "input_hashes": inputs,
            "outputs": self.outputs.iter().map(|p| p.display().to_string()).collect::<Vec<_>>(),
            "tolerances": self.tolerances,
            "wall_time_s": self.started.elapsed().as_secs_f64(),
            "version": env!("CARGO_PKG_VERSION"),
        });
        io::write_json(&out_dir.join("manifest.json"), &manifest)
    }
}

fn scatter(args: &ScatterArgs) -> Result<()> {
    let (lo, hi, n) = parse_grid(&args.grid)?;
    let bx = parse_box(&args.search_box)?;
    let tol = args.tol.tolerances();
    let mut manifest = Manifest::new(
        "scatter",
        json!({ "input": args.input.display().to_string(), "grid": [lo, hi, n], "box": bx }),
    );
    manifest.input(&args.input)?;
    manifest.tolerances = Some(tol);
    let pot = SampledPotential::load(&args.input)?;
    let sd = scattering::scatter(&pot, &uniform_grid(lo, hi, n), &bx, &tol)?;
    std::fs::create_dir_all(&args.out_dir)?;
    let out = args.out_dir.join("scattering.json");
    io::write_json(&out, &sd.to_envelope())?;
    manifest.outputs.push(out);
    manifest.write(&args.out_dir)
}

fn synthesize(args: &SynthArgs) -> Result<()> {
    let (lo, hi, n) = parse_grid(&args.grid)?;
    let times = parse_list(&args.t_list)?;
    let mut manifest = Manifest::new(
        "synthesize",
        json!({ "params": args.params.display().to_string(), "grid": [lo, hi, n], "t_list": times }),
    );
    manifest.input(&args.params)?;
    let params = SolitonParams::load(&args.params)?;
    let xs = uniform_grid(lo, hi, n);
    std::fs::create_dir_all(&args.out_dir)?;
    for &t in &times {
        let u = soliton::n_soliton_field(&params, &xs, t)?;
        let out = args.out_dir.join(format!("field_t{t}.csv"));
        io::write_field_csv(std::fs::File::create(&out)?, &xs, &u)?;
        manifest.outputs.push(out);
    }
    manifest.write(&args.out_dir)
}

fn verify_stability(args: &StabilityArgs) -> Result<()> {
    let sign: Sign = args.sign.parse()?;
    let times = parse_list(&args.t_list)?;
    let (glo, ghi, gn) = parse_grid(&args.grid)?;
    let cfg = StabilityConfig {
        r_grid: (glo, ghi, gn),
        search_box: parse_box(&args.search_box)?,
        evolution_window: (-args.half_width, args.half_width),
        n_modes: args.n_modes,
        dt: args.dt,
        tolerances: args.tol.tolerances(),
        via_conjugation: args.via_conjugation,
        ..StabilityConfig::default()
    };
    let mut manifest = Manifest::new("verify-stability", serde_json::Value::Null);
    let init = match (&args.u0, &args.recipe) {
        (Some(path), _) => {
            manifest.input(path)?;
            InitialValue::Sampled(SampledPotential::load(path)?)
        }
        (None, recipe_path) => {
            let mut recipe = match recipe_path {
                Some(path) => {
                    manifest.input(path)?;
                    Recipe::from_json(&io::read_json(path)?)?
                }
                None => verify::sech_recipe(0.05),
            };
            let p = &mut recipe.perturbation;
            if let Some(eps) = args.eps {
                p.eps = eps;
            }
            if let Some(shape) = &args.shape {
                p.shape = shape.parse::<Shape>()?;
            }
            if let Some(seed) = args.seed {
                p.seed = seed;
            }
            InitialValue::Recipe(recipe)
        }
    };
    manifest.config = json!({
        "sign": sign,
        "t_list": times,
        "stability": cfg,
        "recipe": match &init { InitialValue::Recipe(r) => r.to_json(), _ => serde_json::Value::Null },
    });
    manifest.tolerances = Some(cfg.tolerances);
    let report = verify::run_stability(&init, sign, &times, &cfg)?;
    std::fs::create_dir_all(&args.out_dir)?;
    let table = args.out_dir.join("decay.csv");
    verify::write_decay_csv(std::fs::File::create(&table)?, &report)?;
    let rep = args.out_dir.join("report.json");
    io::write_json(&rep, &report)?;
    manifest.outputs.extend([table, rep]);
    if args.plot {
        let png = args.out_dir.join("decay.png");
        plot::decay_png(&png, &report.scaled_series())?;
        manifest.outputs.push(png);
    }
    for row in &report.rows {
        match (row.scaled_residual, &row.skipped) {
            (Some(s), _) => println!(
                "t = {:>8}  sup|u - u_sol| = {:.3e}  sqrt|t| * sup = {:.3e}",
                row.t,
                row.sup_residual.unwrap(),
                s
            ),
            (None, Some(w)) => println!("t = {:>8}  skipped: {w}", row.t),
            _ => {}
        }
    }
    println!("decay non-increasing within 25%: {}", report.decay_ok);
    if let Some(c) = report.closeness_total {
        println!("|z - z'| + |c - c_sign| = {c:.3e}");
    }
    manifest.write(&args.out_dir)
}

mod plot {
    use std::path::Path;

    use image::{Rgb, RgbImage};
    use nls_ist::{Error, Result};

    const W: u32 = 640;
    const H: u32 = 420;
    const MARGIN: f64 = 40.0;

    fn line(img: &mut RgbImage, a: (f64, f64), b: (f64, f64), color: Rgb<u8>) {
        let steps = ((b.0 - a.0).abs().max((b.1 - a.1).abs()).ceil() as usize).max(1);
        for s in 0..=steps {
            let f = s as f64 / steps as f64;
            let x = a.0 + f * (b.0 - a.0);
            let y = a.1 + f * (b.1 - a.1);
            if x >= 0.0 && y >= 0.0 && (x as u32) < W && (y as u32) < H {
                img.put_pixel(x as u32, y as u32, color);
            }
        }
    }

    /// `sqrt|t| · sup|u - u_sol|` against `|t|` on log-log axes, with a
    /// flat dashed reference at the first value.
    pub fn decay_png(path: &Path, series: &[(f64, f64)]) -> Result<()> {
        let mut img = RgbImage::from_pixel(W, H, Rgb([255, 255, 255]));
        let (x0, y0, x1, y1) = (MARGIN, MARGIN, W as f64 - MARGIN, H as f64 - MARGIN);
        let axis = Rgb([0, 0, 0]);
        line(&mut img, (x0, y1), (x1, y1), axis);
        line(&mut img, (x0, y0), (x0, y1), axis);
        let pts: Vec<(f64, f64)> = series
            .iter()
            .filter(|(t, s)| t.abs() > 0.0 && *s > 0.0)
            .map(|(t, s)| (t.abs().ln(), s.ln()))
            .collect();
        if pts.len() >= 2 {
            let (tmin, tmax) = pts
                .iter()
                .fold((f64::MAX, f64::MIN), |a, p| (a.0.min(p.0), a.1.max(p.0)));
            let (smin, smax) = pts
                .iter()
                .fold((f64::MAX, f64::MIN), |a, p| (a.0.min(p.1), a.1.max(p.1)));
            let pad = 0.5 * (smax - smin).max(0.5);
            let map = |p: (f64, f64)| {
                (
                    x0 + (p.0 - tmin) / (tmax - tmin) * (x1 - x0),
                    y1 - (p.1 - (smin - pad)) / (smax - smin + 2.0 * pad) * (y1 - y0),
                )
            };
            let reference = map((tmin, pts[0].1)).1;
            let mut x = x0;
            while x < x1 {
                line(
                    &mut img,
                    (x, reference),
                    ((x + 6.0).min(x1), reference),
                    Rgb([160, 160, 160]),
                );
                x += 12.0;
            }
            for w in pts.windows(2) {
                line(&mut img, map(w[0]), map(w[1]), Rgb([200, 30, 30]));
            }
            for &p in &pts {
                let (cx, cy) = map(p);
                for dx in -2..=2 {
                    line(
                        &mut img,
                        (cx + dx as f64, cy - 2.0),
                        (cx + dx as f64, cy + 2.0),
                        Rgb([30, 30, 200]),
                    );
                }
            }
        }
        img.save(path)
            .map_err(|e| Error::InvalidInput(format!("cannot write {}: {e}", path.display())))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Scatter(a) => scatter(a),
        Command::Synthesize(a) => synthesize(a),
        Command::VerifyStability(a) => verify_stability(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", json!({ "error": e.code(), "message": e.to_string() }));
            ExitCode::from(if e.is_input_error() { 2 } else { 1 })
        }
    }
}
