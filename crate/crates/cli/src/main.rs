//! `entire-lab`: command-line experiments over the function models.
//!
//! Every command that is given `--out DIR` writes `config.json` (the resolved
//! job) next to its outputs; `entire-lab replay DIR/config.json` reruns it.

use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use entire_lab::dimension::{estimate_edim, DimensionError, DimensionEstimate, DimensionRun, Target};
use entire_lab::dynamics::{classify_grid, iterate_orbit, DynamicsError, Window, DEFAULT_ESCAPE_RADIUS, DEFAULT_R};
use entire_lab::model::{log_max_modulus, AffineMap, ModelConfig, ModelError, DEFAULT_QUAD_TOL, GROWTH_SAMPLES};
use entire_lab::rigidity::{
    affine_pushforward, dilatation_at, disc_radius, equivalence_residual, qc_dim_lower_bound, RigidityError,
};
use entire_lab::{eval_cauchy_integral, Density, EvalError};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug)]
enum CliError {
    Config(String),
    Eval(String),
    Empty(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Config(_) => 1,
            CliError::Eval(_) => 2,
            CliError::Empty(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::Eval(m) => write!(f, "evaluation error: {m}"),
            CliError::Empty(m) => write!(f, "empty result: {m}"),
        }
    }
}

impl From<EvalError> for CliError {
    fn from(e: EvalError) -> Self {
        CliError::Eval(e.to_string())
    }
}

impl From<ModelError> for CliError {
    fn from(e: ModelError) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<DynamicsError> for CliError {
    fn from(e: DynamicsError) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<DimensionError> for CliError {
    fn from(e: DimensionError) -> Self {
        match e {
            DimensionError::EmptySet => CliError::Empty(e.to_string()),
            DimensionError::Model(m) => m.into(),
            DimensionError::Dynamics(d) => d.into(),
            other => CliError::Config(other.to_string()),
        }
    }
}

impl From<RigidityError> for CliError {
    fn from(e: RigidityError) -> Self {
        match e {
            RigidityError::Domain(m) => CliError::Eval(m),
            RigidityError::AllSamplesFiltered(_) => CliError::Empty(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Config(format!("i/o: {e}"))
    }
}

type Result<T> = std::result::Result<T, CliError>;

#[derive(Parser)]
#[command(name = "entire-lab", version, about = "Evaluate, iterate and measure Cauchy-integral entire functions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate a model at one point; prints "re im err_estimate".
    Eval(EvalArgs),
    /// Iterate a model from one point; writes orbit.csv.
    Orbit(OrbitArgs),
    /// Classify a grid; writes escape_map.pgm and escape_map.csv.
    EscapeMap(GridArgs),
    /// Box-counting dimension of I_R or J_R candidates.
    Dim(DimArgs),
    /// Maximum modulus and growth statistic over radii; writes growth.csv.
    Growth(GrowthArgs),
    /// Disc radius, dilatation bound, dimension bound and optional equivalence residual.
    Rigidity(RigidityArgs),
    /// Rerun a resolved config.json.
    Replay {
        config: PathBuf,
        /// Output directory (defaults to the directory holding the config).
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args, Clone)]
struct ModelArgs {
    /// Model as JSON, a path to a JSON file, or one of "exp", "F0", "fp".
    #[arg(long, default_value = "exp")]
    model: String,
    /// Override kappa ("re" or "re,im").
    #[arg(long, allow_hyphen_values = true)]
    kappa: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    p: Option<f64>,
    #[arg(long = "K", allow_hyphen_values = true)]
    k: Option<f64>,
    #[arg(long)]
    quad_tol: Option<f64>,
}

#[derive(Args)]
struct EvalArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Point "re,im".
    #[arg(long, allow_hyphen_values = true)]
    z: String,
    #[arg(long)]
    tol: Option<f64>,
    /// Evaluate the bare contour integral, without continuation or recentring.
    #[arg(long)]
    integral_only: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct OrbitArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long, allow_hyphen_values = true)]
    z0: String,
    #[arg(long, default_value_t = 50)]
    max_iter: usize,
    #[arg(long, default_value_t = DEFAULT_ESCAPE_RADIUS)]
    escape_radius: f64,
    #[arg(long = "R", default_value_t = DEFAULT_R)]
    r: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct GridArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// "cx,cy,hx,hy".
    #[arg(long, allow_hyphen_values = true)]
    window: String,
    /// "nx,ny" or "n".
    #[arg(long)]
    res: String,
    #[arg(long, default_value_t = 30)]
    max_iter: usize,
    #[arg(long, default_value_t = DEFAULT_ESCAPE_RADIUS)]
    escape_radius: f64,
    #[arg(long = "R", default_value_t = DEFAULT_R)]
    r: f64,
    /// Resolution multiplier (1, 2 or 4).
    #[arg(long, default_value_t = 1)]
    supersample: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct DimArgs {
    #[command(flatten)]
    grid: GridArgs,
    /// "ir" or "jr".
    #[arg(long, default_value = "ir")]
    target: String,
    /// Comma-separated R values for an R-sweep of J_R (edim proxy).
    #[arg(long = "R-list")]
    r_list: Option<String>,
    /// Comma-separated kappa values; the model must be F0.
    #[arg(long, allow_hyphen_values = true)]
    kappa_list: Option<String>,
    /// Comma-separated box sides, strictly decreasing.
    #[arg(long)]
    scales: Option<String>,
    /// Sum counts over four shifted anchors.
    #[arg(long)]
    offsets: bool,
    /// Also estimate g = ψ∘f∘φ⁻¹ with φ given as "a_re,a_im,b_re,b_im".
    #[arg(long, allow_hyphen_values = true)]
    pair_phi: Option<String>,
    /// ψ for the pair, "a_re,a_im,b_re,b_im".
    #[arg(long, allow_hyphen_values = true)]
    pair_psi: Option<String>,
}

#[derive(Args)]
struct GrowthArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Comma-separated radii, each > e.
    #[arg(long)]
    radii: String,
    #[arg(long, default_value_t = GROWTH_SAMPLES)]
    samples: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct RigidityArgs {
    #[arg(long = "K")]
    k: f64,
    /// "re,im"; defaults to 1.
    #[arg(long, allow_hyphen_values = true)]
    lambda: Option<String>,
    /// Dimension to push through the bound.
    #[arg(long)]
    dim: Option<f64>,
    /// Check ψ∘f = g∘φ for g = ψ∘f∘φ⁻¹ on random samples.
    #[arg(long)]
    residual: bool,
    /// Base model for the residual check (JSON, path, or "exp", "F0", "fp").
    #[arg(long, default_value = "exp")]
    model: String,
    #[arg(long, allow_hyphen_values = true)]
    phi: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    psi: Option<String>,
    #[arg(long, default_value_t = 50)]
    samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Sample box "cx,cy,hx,hy".
    #[arg(long, default_value = "0,0,5,5", allow_hyphen_values = true)]
    sample_window: String,
    #[arg(long)]
    out: Option<PathBuf>,
}

/// A fully resolved job; the contents of `config.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "kebab-case")]
enum Job {
    Eval {
        model: ModelConfig,
        z: [f64; 2],
        tol: f64,
        integral_only: bool,
    },
    Orbit {
        model: ModelConfig,
        z0: [f64; 2],
        max_iter: usize,
        escape_radius: f64,
        #[serde(rename = "R")]
        r: f64,
    },
    EscapeMap(GridJob),
    Dim {
        grid: GridJob,
        target: Target,
        #[serde(rename = "R_list")]
        r_list: Option<Vec<f64>>,
        kappa_list: Option<Vec<f64>>,
        scales: Option<Vec<f64>>,
        offsets: bool,
        pair: Option<(AffineMap, AffineMap)>,
    },
    Growth {
        model: ModelConfig,
        radii: Vec<f64>,
        samples: usize,
    },
    Rigidity {
        #[serde(rename = "K")]
        k: f64,
        lambda: [f64; 2],
        dim: Option<f64>,
        residual: Option<ResidualJob>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct GridJob {
    model: ModelConfig,
    window: [f64; 4],
    resolution: [usize; 2],
    max_iter: usize,
    escape_radius: f64,
    #[serde(rename = "R")]
    r: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct ResidualJob {
    model: ModelConfig,
    phi: AffineMap,
    psi: AffineMap,
    samples: usize,
    seed: u64,
    sample_window: [f64; 4],
}

fn parse_floats(s: &str, what: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|_| CliError::Config(format!("{what}: cannot parse {t:?}"))))
        .collect()
}

fn parse_fixed<const N: usize>(s: &str, what: &str) -> Result<[f64; N]> {
    let v = parse_floats(s, what)?;
    v.try_into().map_err(|_| CliError::Config(format!("{what}: expected {N} comma-separated numbers")))
}

fn parse_complex(s: &str, what: &str) -> Result<Complex64> {
    let v = parse_floats(s, what)?;
    match v.as_slice() {
        [re] => Ok(Complex64::new(*re, 0.0)),
        [re, im] => Ok(Complex64::new(*re, *im)),
        _ => Err(CliError::Config(format!("{what}: expected \"re\" or \"re,im\""))),
    }
}

fn parse_affine(s: &str, what: &str) -> Result<AffineMap> {
    let [ar, ai, br, bi] = parse_fixed::<4>(s, what)?;
    Ok(AffineMap::new(Complex64::new(ar, ai), Complex64::new(br, bi))?)
}

fn parse_resolution(s: &str) -> Result<[usize; 2]> {
    let parts: Vec<usize> = s
        .split(',')
        .map(|t| t.trim().parse::<usize>().map_err(|_| CliError::Config(format!("res: cannot parse {t:?}"))))
        .collect::<Result<_>>()?;
    match parts.as_slice() {
        [n] => Ok([*n, *n]),
        [nx, ny] => Ok([*nx, *ny]),
        _ => Err(CliError::Config("res: expected \"n\" or \"nx,ny\"".into())),
    }
}

impl ModelArgs {
    fn resolve(&self) -> Result<ModelConfig> {
        let text = self.model.trim();
        let mut cfg: ModelConfig = match text {
            "exp" | "F0" | "fp" => {
                serde_json::from_value(serde_json::json!({ "family": text })).expect("static config")
            }
            t if t.starts_with('{') => {
                serde_json::from_str(t).map_err(|e| CliError::Config(format!("model JSON: {e}")))?
            }
            path => {
                let body = fs::read_to_string(path).map_err(|e| CliError::Config(format!("model file {path}: {e}")))?;
                serde_json::from_str(&body).map_err(|e| CliError::Config(format!("model file {path}: {e}")))?
            }
        };
        if let Some(k) = &self.kappa {
            let c = parse_complex(k, "kappa")?;
            cfg.kappa = Some([c.re, c.im]);
        }
        if self.p.is_some() {
            cfg.p = self.p;
        }
        if self.k.is_some() {
            cfg.k = self.k;
        }
        if self.quad_tol.is_some() {
            cfg.quad_tol = self.quad_tol;
        }
        if cfg.quad_tol.is_none() {
            cfg.quad_tol = Some(DEFAULT_QUAD_TOL);
        }
        // validate now so config errors surface before any work
        cfg.build()?;
        Ok(cfg)
    }
}

impl GridArgs {
    fn resolve(&self) -> Result<GridJob> {
        if ![1, 2, 4].contains(&self.supersample) {
            return Err(CliError::Config("supersample must be 1, 2 or 4".into()));
        }
        let [nx, ny] = parse_resolution(&self.res)?;
        Ok(GridJob {
            model: self.model.resolve()?,
            window: parse_fixed::<4>(&self.window, "window")?,
            resolution: [nx * self.supersample, ny * self.supersample],
            max_iter: self.max_iter,
            escape_radius: self.escape_radius,
            r: self.r,
        })
    }
}

impl GridJob {
    fn window(&self) -> Result<Window> {
        let [cx, cy, hx, hy] = self.window;
        Ok(Window::new(Complex64::new(cx, cy), hx, hy)?)
    }

    fn dimension_run(&self, target: Target, scales: Option<Vec<f64>>, offsets: bool) -> Result<DimensionRun> {
        Ok(DimensionRun {
            model: self.model.clone(),
            window: self.window()?,
            resolution: (self.resolution[0], self.resolution[1]),
            max_iter: self.max_iter,
            escape_radius: self.escape_radius,
            r: self.r,
            target,
            scales,
            offsets,
        })
    }
}

fn build_job(command: Command) -> Result<(Job, Option<PathBuf>)> {
    Ok(match command {
        Command::Eval(a) => {
            let z = parse_complex(&a.z, "z")?;
            let model = a.model.resolve()?;
            let tol = a.tol.or(model.quad_tol).unwrap_or(DEFAULT_QUAD_TOL);
            (Job::Eval { model, z: [z.re, z.im], tol, integral_only: a.integral_only }, a.out)
        }
        Command::Orbit(a) => {
            let z0 = parse_complex(&a.z0, "z0")?;
            let job = Job::Orbit {
                model: a.model.resolve()?,
                z0: [z0.re, z0.im],
                max_iter: a.max_iter,
                escape_radius: a.escape_radius,
                r: a.r,
            };
            (job, Some(a.out))
        }
        Command::EscapeMap(a) => (Job::EscapeMap(a.resolve()?), Some(a.out)),
        Command::Dim(a) => {
            let target = match a.target.to_ascii_lowercase().as_str() {
                "ir" => Target::IR,
                "jr" => Target::JR,
                other => return Err(CliError::Config(format!("target must be ir or jr, got {other:?}"))),
            };
            let pair = match (&a.pair_phi, &a.pair_psi) {
                (None, None) => None,
                (phi, psi) => Some((
                    phi.as_deref()
                        .map(|s| parse_affine(s, "pair-phi"))
                        .transpose()?
                        .unwrap_or_else(AffineMap::identity),
                    psi.as_deref()
                        .map(|s| parse_affine(s, "pair-psi"))
                        .transpose()?
                        .unwrap_or_else(AffineMap::identity),
                )),
            };
            let job = Job::Dim {
                grid: a.grid.resolve()?,
                target,
                r_list: a.r_list.as_deref().map(|s| parse_floats(s, "R-list")).transpose()?,
                kappa_list: a.kappa_list.as_deref().map(|s| parse_floats(s, "kappa-list")).transpose()?,
                scales: a.scales.as_deref().map(|s| parse_floats(s, "scales")).transpose()?,
                offsets: a.offsets,
                pair,
            };
            (job, Some(a.grid.out))
        }
        Command::Growth(a) => {
            let job =
                Job::Growth { model: a.model.resolve()?, radii: parse_floats(&a.radii, "radii")?, samples: a.samples };
            (job, Some(a.out))
        }
        Command::Rigidity(a) => {
            let lambda = a
                .lambda
                .as_deref()
                .map(|s| parse_complex(s, "lambda"))
                .transpose()?
                .unwrap_or(Complex64::new(1.0, 0.0));
            let residual = if a.residual {
                let model = ModelArgs { model: a.model.clone(), kappa: None, p: None, k: None, quad_tol: None };
                Some(ResidualJob {
                    model: model.resolve()?,
                    phi: a
                        .phi
                        .as_deref()
                        .map(|s| parse_affine(s, "phi"))
                        .transpose()?
                        .unwrap_or_else(AffineMap::identity),
                    psi: a
                        .psi
                        .as_deref()
                        .map(|s| parse_affine(s, "psi"))
                        .transpose()?
                        .unwrap_or_else(AffineMap::identity),
                    samples: a.samples,
                    seed: a.seed,
                    sample_window: parse_fixed::<4>(&a.sample_window, "sample-window")?,
                })
            } else {
                None
            };
            (Job::Rigidity { k: a.k, lambda: [lambda.re, lambda.im], dim: a.dim, residual }, a.out)
        }
        Command::Replay { config, out } => {
            let body =
                fs::read_to_string(&config).map_err(|e| CliError::Config(format!("{}: {e}", config.display())))?;
            let job: Job =
                serde_json::from_str(&body).map_err(|e| CliError::Config(format!("{}: {e}", config.display())))?;
            let dir = out.or_else(|| config.parent().map(Path::to_path_buf)).unwrap_or_else(|| PathBuf::from("."));
            (job, Some(dir))
        }
    })
}

/// Write-temp-then-rename inside `dir`.
fn write_atomic(dir: &Path, name: &str, bytes: &[u8]) -> Result<()> {
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.flush()?;
    tmp.persist(dir.join(name)).map_err(|e| CliError::Config(format!("i/o: {e}")))?;
    Ok(())
}

/// Collects output files and prints to stdout.
struct Outputs {
    files: Vec<(String, Vec<u8>)>,
    stdout: String,
}

impl Outputs {
    fn new() -> Outputs {
        Outputs { files: Vec::new(), stdout: String::new() }
    }

    fn file(&mut self, name: &str, bytes: Vec<u8>) {
        self.files.push((name.to_string(), bytes));
    }

    fn say(&mut self, line: impl AsRef<str>) {
        self.stdout.push_str(line.as_ref());
        self.stdout.push('\n');
    }
}

fn c(v: [f64; 2]) -> Complex64 {
    Complex64::new(v[0], v[1])
}

fn run_job(job: &Job, out: &mut Outputs) -> Result<()> {
    match job {
        Job::Eval { model, z, tol, integral_only } => {
            let m = model.build()?;
            let (value, err, flag) = if *integral_only {
                let integ = m.integrator().ok_or_else(|| CliError::Config("model has no defining contour".into()))?;
                let q = eval_cauchy_integral(integ.contour(), Density::Family, c(*z), *tol)?;
                (q.value, q.error, false)
            } else {
                let e = m.eval(c(*z), *tol)?;
                (e.value, e.error, e.reduced_accuracy)
            };
            let line = format!("{:?} {:?} {:?}", value.re, value.im, err);
            if flag {
                eprintln!("warning: reduced accuracy near the contour");
            }
            out.file("eval.txt", format!("{line}\n").into_bytes());
            out.say(line);
        }
        Job::Orbit { model, z0, max_iter, escape_radius, r } => {
            let m = model.build()?;
            let rec = iterate_orbit(&m, c(*z0), *max_iter, *escape_radius, *r)?;
            let mut csv = String::from("n,re,im,modulus\n");
            for (k, (w, modulus)) in rec.iterates.iter().zip(&rec.moduli).enumerate() {
                csv.push_str(&format!("{},{:?},{:?},{:?}\n", k + 1, w.re, w.im, modulus));
            }
            let step = rec.status.escape_step().map(|s| s.to_string()).unwrap_or_default();
            csv.push_str(&format!("status,{},{step},{}\n", rec.status.label(), rec.stayed_above_r));
            out.file("orbit.csv", csv.into_bytes());
            out.say(format!("status {} {step}", rec.status.label()));
            if let Some(d) = &rec.diagnostic {
                out.say(format!("diagnostic {d}"));
            }
        }
        Job::EscapeMap(g) => {
            let m = g.model.build()?;
            let grid =
                classify_grid(&m, g.window()?, (g.resolution[0], g.resolution[1]), g.max_iter, g.escape_radius, g.r)?;
            let mut pgm = Vec::new();
            grid.write_pgm(&mut pgm)?;
            let mut csv = Vec::new();
            grid.write_csv(&mut csv)?;
            out.file("escape_map.pgm", pgm);
            out.file("escape_map.csv", csv);
            out.say(format!("escaped_fraction {:?}", grid.escaped_fraction()));
        }
        Job::Dim { grid, target, r_list, kappa_list, scales, offsets, pair } => {
            run_dim(
                grid,
                *target,
                r_list.as_deref(),
                kappa_list.as_deref(),
                scales.clone(),
                *offsets,
                pair.as_ref(),
                out,
            )?;
        }
        Job::Growth { model, radii, samples } => {
            let m = model.build()?;
            let mut csv = String::from("r,M,log_M,q_hat\n");
            for &r in radii {
                if !(r > std::f64::consts::E) {
                    return Err(CliError::Eval(format!("radius {r} must exceed e")));
                }
                let log_m = log_max_modulus(&m, r, *samples)?;
                let q = if log_m > std::f64::consts::E { log_m.ln().ln() / r.ln().ln() } else { f64::NAN };
                csv.push_str(&format!("{r:?},{:?},{log_m:?},{q:?}\n", log_m.exp()));
                out.say(format!("r {r:?} q_hat {q:?}"));
            }
            out.file("growth.csv", csv.into_bytes());
        }
        Job::Rigidity { k, lambda, dim, residual } => {
            let d = disc_radius(*k)?;
            let kl = dilatation_at(d, c(*lambda))?;
            let mut text = format!("D {d:?}\nK_lambda {kl:?}\n");
            if let Some(dim) = dim {
                text.push_str(&format!("dim_lower_bound {:?}\n", qc_dim_lower_bound(*dim, kl)?));
            }
            if let Some(rj) = residual {
                let f = rj.model.build()?;
                let g = affine_pushforward(&f, rj.phi, rj.psi);
                let [cx, cy, hx, hy] = rj.sample_window;
                let mut rng = ChaCha8Rng::seed_from_u64(rj.seed);
                let samples: Vec<Complex64> = (0..rj.samples)
                    .map(|_| Complex64::new(cx + hx * rng.gen_range(-1.0..=1.0), cy + hy * rng.gen_range(-1.0..=1.0)))
                    .collect();
                let res = equivalence_residual(&f, &g, rj.phi, rj.psi, &samples, f.quad_tol())?;
                text.push_str(&format!(
                    "residual {:?}\nretained {}\nfiltered {}\n",
                    res.residual,
                    res.retained,
                    res.filtered.len()
                ));
            }
            out.stdout.push_str(&text);
            out.file("rigidity.txt", text.into_bytes());
        }
    }
    Ok(())
}

fn estimate_row(label: &str, est: &DimensionEstimate) -> String {
    format!("{label},{:?},{:?},{:?}\n", est.slope, est.r2, est.ci95)
}

#[allow(clippy::too_many_arguments)]
fn run_dim(
    grid: &GridJob,
    target: Target,
    r_list: Option<&[f64]>,
    kappa_list: Option<&[f64]>,
    scales: Option<Vec<f64>>,
    offsets: bool,
    pair: Option<&(AffineMap, AffineMap)>,
    out: &mut Outputs,
) -> Result<()> {
    if let Some(rs) = r_list {
        let m = grid.model.build()?;
        let w = grid.window()?;
        let rep =
            estimate_edim(&m, w, (grid.resolution[0], grid.resolution[1]), grid.max_iter, grid.escape_radius, rs)?;
        let mut csv = String::from("R,slope,r2,ci95\n");
        for (r, e) in &rep.entries {
            match e {
                Ok(est) => csv.push_str(&estimate_row(&format!("{r:?}"), est)),
                Err(err) => {
                    csv.push_str(&format!("{r:?},,,\n"));
                    eprintln!("R = {r:?}: {err}");
                }
            }
        }
        out.file("dim_rsweep.csv", csv.into_bytes());
        match rep.edim {
            Some(edim) => out.say(format!("edim {edim:?}")),
            None => return Err(CliError::Empty("no R produced a nonempty J_R set".into())),
        }
        if let Some(ok) = rep.sandwich_ok {
            out.say(format!("sandwich_ok {ok}"));
        }
        return Ok(());
    }
    if let Some(ks) = kappa_list {
        if grid.model.family != "F0" {
            return Err(CliError::Config("--kappa-list needs the F0 model".into()));
        }
        let mut csv = String::from("kappa,slope,r2,ci95\n");
        let mut sidecars = Vec::new();
        for &kappa in ks {
            let mut job = grid.clone();
            job.model.kappa = Some([kappa, 0.0]);
            let est = job.dimension_run(target, scales.clone(), offsets)?.execute()?;
            csv.push_str(&estimate_row(&format!("{kappa:?}"), &est));
            out.say(format!("kappa {kappa:?} slope {:?}", est.slope));
            sidecars.push(est.sidecar());
        }
        out.file("dim_kappa.csv", csv.into_bytes());
        out.file("dim_kappa.json", json_bytes(&serde_json::Value::Array(sidecars)));
        return Ok(());
    }
    let run = grid.dimension_run(target, scales.clone(), offsets)?;
    let est = run.execute()?;
    let mut csv = Vec::new();
    est.write_csv(&mut csv)?;
    out.file("dim.csv", csv);
    out.file("dim.json", json_bytes(&est.sidecar()));
    out.say(format!("slope {:?} r2 {:?} ci95 {:?}", est.slope, est.r2, est.ci95));
    if let Some((phi, psi)) = pair {
        let f = grid.model.build()?;
        let g = affine_pushforward(&f, *phi, *psi);
        let mut gjob = grid.clone();
        gjob.model = ModelConfig::from(&g);
        let w = grid.window()?;
        if phi.linear().im == 0.0 && phi.linear().re > 0.0 {
            let a = phi.linear().re;
            let center = phi.apply(w.center);
            gjob.window = [center.re, center.im, a * w.half_width, a * w.half_height];
        }
        let gest = gjob.dimension_run(target, scales, offsets)?.execute()?;
        let mut csv = Vec::new();
        gest.write_csv(&mut csv)?;
        out.file("dim_pair.csv", csv);
        out.file("dim_pair.json", json_bytes(&gest.sidecar()));
        out.say(format!("pair_slope {:?}", gest.slope));
        out.say(format!("slope_difference {:?}", (est.slope - gest.slope).abs()));
    }
    Ok(())
}

fn json_bytes(v: &impl Serialize) -> Vec<u8> {
    let mut s = serde_json::to_string_pretty(v).expect("serializable");
    s.push('\n');
    s.into_bytes()
}

fn execute(cli: Cli) -> Result<String> {
    let (job, dir) = build_job(cli.command)?;
    let mut out = Outputs::new();
    run_job(&job, &mut out)?;
    if let Some(dir) = dir {
        fs::create_dir_all(&dir)?;
        write_atomic(&dir, "config.json", &json_bytes(&job))?;
        for (name, bytes) in &out.files {
            write_atomic(&dir, name, bytes)?;
        }
    }
    Ok(out.stdout)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            // usage errors are configuration errors; --help and --version are not errors
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match execute(cli) {
        Ok(text) => {
            print!("{text}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.code())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parsers() {
        assert_eq!(parse_complex("1.5", "z").unwrap(), Complex64::new(1.5, 0.0));
        assert_eq!(parse_complex("-1,2", "z").unwrap(), Complex64::new(-1.0, 2.0));
        assert!(parse_complex("a", "z").is_err());
        assert_eq!(parse_resolution("64").unwrap(), [64, 64]);
        assert_eq!(parse_resolution("32,16").unwrap(), [32, 16]);
        assert_eq!(parse_fixed::<4>("0,0,2,2", "w").unwrap(), [0.0, 0.0, 2.0, 2.0]);
        assert!(parse_fixed::<4>("0,0,2", "w").is_err());
        assert!(parse_affine("0,0,1,1", "phi").is_err());
    }

    #[test]
    fn job_round_trips() {
        let job = Job::Dim {
            grid: GridJob {
                model: serde_json::from_str(r#"{"family":"F0","kappa":[-1.0,0.0],"quad_tol":1e-8}"#).unwrap(),
                window: [0.1, -0.2, 2.0, 2.0],
                resolution: [128, 128],
                max_iter: 20,
                escape_radius: 1000.0,
                r: 150.0,
            },
            target: Target::JR,
            r_list: Some(vec![150.0, 200.0]),
            kappa_list: None,
            scales: None,
            offsets: true,
            pair: Some((AffineMap::identity(), AffineMap::translation(Complex64::new(0.5, 0.0)))),
        };
        let text = serde_json::to_string(&job).unwrap();
        assert_eq!(serde_json::from_str::<Job>(&text).unwrap(), job);
    }

    #[test]
    fn error_codes() {
        assert_eq!(CliError::from(DimensionError::EmptySet).code(), 3);
        assert_eq!(CliError::from(EvalError::Domain("x".into())).code(), 2);
        assert_eq!(CliError::from(ModelError::DegenerateAffine).code(), 1);
    }
}
