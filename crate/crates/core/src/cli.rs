//! Command-line front end: `segment`, `compare` and `gen`.

use std::ffi::OsString;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::error::{Error, Result};
use crate::grid::{BinaryMask, ImageGrid};
use crate::init::InitShape;
use crate::io;
use crate::models::{LifParams, Model};
use crate::solver::{run_observed, Outcome, SolverParams, Termination};
use crate::synthetic::{generate, Scene, SyntheticSpec, RNG_ALGORITHM};
use crate::topology::{component_counts, ConnectivityPair};

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_MAX_ITER: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "tpictm", version, about = "Topology-preserving two-phase image segmentation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Segment an image from an initial mask.
    Segment(RunArgs),
    /// Run with and without topology preservation and summarize both.
    Compare(RunArgs),
    /// Generate a synthetic scene and its ground truth.
    Gen(GenArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModelKind {
    Cv,
    Lif,
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    /// Input image (PNG, PGM or PPM).
    #[arg(long)]
    pub input: PathBuf,
    /// Initial mask image.
    #[arg(long, conflicts_with = "init_shape", required_unless_present = "init_shape")]
    pub init: Option<PathBuf>,
    /// Named initializer such as `circle:0.5,0.5,0.3`.
    #[arg(long, value_name = "NAME:ARGS")]
    pub init_shape: Option<String>,
    #[arg(long, value_enum, default_value_t = ModelKind::Cv)]
    pub model: ModelKind,
    #[arg(long, default_value_t = 1e-3)]
    pub tau1: f64,
    #[arg(long, default_value_t = 1e-3)]
    pub tau2: f64,
    #[arg(long, default_value_t = 1e-2)]
    pub lambda: f64,
    /// LIF window time.
    #[arg(long, default_value_t = 1e-4)]
    pub delta: f64,
    #[arg(long, default_value_t = 1.0)]
    pub lambda1: f64,
    #[arg(long, default_value_t = 1.0)]
    pub lambda2: f64,
    #[arg(long, default_value_t = 1e-8)]
    pub eps: f64,
    /// Stop once an iteration flips at most this many pixels.
    #[arg(long, default_value_t = 0)]
    pub tol: usize,
    #[arg(long, default_value_t = 500)]
    pub max_iter: usize,
    /// Foreground-background adjacency pair.
    #[arg(long, default_value = "4-8", value_name = "4-8|8-4")]
    pub connectivity: String,
    #[arg(long)]
    pub no_topology: bool,
    /// Write an overlay every N iterations (0 disables).
    #[arg(long, default_value_t = 0)]
    pub snapshot_every: usize,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    /// Energy trace path; defaults to `<out>/energy.csv`.
    #[arg(long)]
    pub energy_csv: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct GenArgs {
    #[arg(long, value_name = "two-discs-line|star-noise|discs-with-holes|pattern-interior")]
    pub scene: String,
    #[arg(long, default_value_t = 256)]
    pub size: usize,
    /// Gaussian noise standard deviation.
    #[arg(long, default_value_t = 0.0)]
    pub sigma: f64,
    /// Hole density for `pattern-interior`.
    #[arg(long, default_value_t = 0.1)]
    pub density: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, PartialEq)]
pub enum InitSource {
    File(PathBuf),
    Shape(InitShape),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub input: PathBuf,
    pub init: InitSource,
    pub model: Model,
    pub params: SolverParams,
    pub snapshot_every: usize,
    pub out_dir: PathBuf,
    pub energy_csv: PathBuf,
}

impl RunConfig {
    pub fn from_args(args: &RunArgs) -> Result<Self> {
        let init = match (&args.init, &args.init_shape) {
            (Some(path), None) => InitSource::File(path.clone()),
            (None, Some(spec)) => InitSource::Shape(spec.parse().map_err(for_flag("init-shape"))?),
            _ => {
                return Err(Error::InvalidParameter {
                    name: "init",
                    reason: "give exactly one of --init and --init-shape".into(),
                })
            }
        };
        let pair: ConnectivityPair = args.connectivity.parse()?;
        let model = match args.model {
            ModelKind::Cv => Model::ChanVese,
            ModelKind::Lif => {
                let p = LifParams {
                    delta: args.delta,
                    lambda1: args.lambda1,
                    lambda2: args.lambda2,
                    eps: args.eps,
                };
                p.validate()?;
                Model::Lif(p)
            }
        };
        let params = SolverParams {
            tau1: args.tau1,
            tau2: args.tau2,
            lambda: args.lambda,
            tol: args.tol,
            max_iter: args.max_iter,
            pair,
            topology: !args.no_topology,
        };
        params.validate()?;
        Ok(RunConfig {
            input: args.input.clone(),
            init,
            model,
            params,
            snapshot_every: args.snapshot_every,
            out_dir: args.out.clone(),
            energy_csv: args
                .energy_csv
                .clone()
                .unwrap_or_else(|| args.out.join("energy.csv")),
        })
    }

    /// Loads the image and builds the initial mask.
    pub fn load(&self) -> Result<(ImageGrid, BinaryMask)> {
        let image = io::load_image(&self.input)?;
        let mask = match &self.init {
            InitSource::File(path) => {
                let mask = io::load_mask(path)?;
                image.shape().ensure_same(mask.shape())?;
                mask
            }
            InitSource::Shape(shape) => shape.rasterize(image.shape()),
        };
        Ok((image, mask))
    }
}

/// One line of run statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub label: &'static str,
    pub iterations: usize,
    pub termination: Termination,
    /// Energy at the last evaluated iterate.
    pub final_energy: f64,
    pub fg_components: usize,
    pub bg_components: usize,
}

impl RunSummary {
    fn new(label: &'static str, outcome: &Outcome, pair: ConnectivityPair) -> Self {
        let (fg, bg) = component_counts(&outcome.mask, pair);
        RunSummary {
            label,
            iterations: outcome.iterations(),
            termination: outcome.termination,
            final_energy: outcome.trace.last().map_or(f64::NAN, |r| r.total),
            fg_components: fg,
            bg_components: bg,
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self.termination {
            Termination::MaxIterations => EXIT_MAX_ITER,
            Termination::Converged | Termination::Collapsed => EXIT_OK,
        }
    }
}

impl fmt::Display for RunSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let term = match self.termination {
            Termination::Converged => "converged",
            Termination::MaxIterations => "max-iter",
            Termination::Collapsed => "collapsed",
        };
        write!(
            f,
            "{}: iterations={} termination={} energy={:.9e} fg_components={} bg_components={}",
            self.label, self.iterations, term, self.final_energy, self.fg_components, self.bg_components
        )
    }
}

fn for_flag(name: &'static str) -> impl FnOnce(Error) -> Error {
    move |e| match e {
        Error::UnknownName { .. } => Error::InvalidParameter {
            name,
            reason: e.to_string(),
        },
        e => e,
    }
}

fn create_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn ensure_parent(path: &Path) -> Result<()> {
    match path.parent() {
        Some(parent) if !parent.as_os_str().is_empty() => create_dir(parent),
        _ => Ok(()),
    }
}

fn solve_into(
    label: &'static str,
    image: &ImageGrid,
    u0: &BinaryMask,
    config: &RunConfig,
    params: SolverParams,
    out_dir: &Path,
    energy_csv: &Path,
) -> Result<RunSummary> {
    create_dir(out_dir)?;
    ensure_parent(energy_csv)?;
    let every = config.snapshot_every;
    if every > 0 {
        io::save_overlay(image, u0, out_dir.join("snapshot_00000.png"))?;
    }
    let mut snapshot_error = None;
    let outcome = run_observed(image, u0, &config.model, &params, |record, mask| {
        let step = record.iter + 1;
        if every > 0 && step % every == 0 && snapshot_error.is_none() {
            let path = out_dir.join(format!("snapshot_{step:05}.png"));
            snapshot_error = io::save_overlay(image, mask, path).err();
        }
    })?;
    if let Some(e) = snapshot_error {
        return Err(e);
    }
    io::save_mask(&outcome.mask, out_dir.join("mask.png"))?;
    io::write_energy_csv(&outcome.trace, energy_csv)?;
    Ok(RunSummary::new(label, &outcome, params.pair))
}

/// Runs one segmentation and writes its mask, trace and snapshots.
pub fn segment_command(config: &RunConfig) -> Result<RunSummary> {
    let (image, u0) = config.load()?;
    let label = if config.params.topology { "tp" } else { "plain" };
    solve_into(
        label,
        &image,
        &u0,
        config,
        config.params,
        &config.out_dir,
        &config.energy_csv,
    )
}

fn suffixed(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("energy");
    let ext = path.extension().and_then(|s| s.to_str()).unwrap_or("csv");
    path.with_file_name(format!("{stem}_{suffix}.{ext}"))
}

/// Runs the instance with and without topology preservation. Outputs go to
/// `<out>/tp` and `<out>/plain`; traces to `<energy>_tp.csv` and
/// `<energy>_plain.csv`.
pub fn compare_command(config: &RunConfig) -> Result<(RunSummary, RunSummary)> {
    let (image, u0) = config.load()?;
    let tp = SolverParams {
        topology: true,
        ..config.params
    };
    let plain = SolverParams {
        topology: false,
        ..config.params
    };
    let a = solve_into(
        "tp",
        &image,
        &u0,
        config,
        tp,
        &config.out_dir.join("tp"),
        &suffixed(&config.energy_csv, "tp"),
    )?;
    let b = solve_into(
        "plain",
        &image,
        &u0,
        config,
        plain,
        &config.out_dir.join("plain"),
        &suffixed(&config.energy_csv, "plain"),
    )?;
    Ok((a, b))
}

/// Writes `image.png`, `truth.png` and `scene.txt` into the output directory.
pub fn gen_command(args: &GenArgs) -> Result<SyntheticSpec> {
    let scene: Scene = args.scene.parse().map_err(for_flag("scene"))?;
    let spec = SyntheticSpec {
        scene,
        size: args.size,
        sigma: args.sigma,
        density: args.density,
        seed: args.seed,
    };
    let (image, truth) = generate(&spec)?;
    create_dir(&args.out)?;
    io::save_image(&image, args.out.join("image.png"))?;
    io::save_mask(&truth, args.out.join("truth.png"))?;
    let meta = format!(
        "scene={}\nsize={}\nsigma={}\ndensity={}\nseed={}\nrng={}\n",
        spec.scene, spec.size, spec.sigma, spec.density, spec.seed, RNG_ALGORITHM
    );
    let meta_path = args.out.join("scene.txt");
    fs::write(&meta_path, meta).map_err(|source| Error::Io {
        path: meta_path,
        source,
    })?;
    Ok(spec)
}

/// User-facing rendering of an error; parameter errors name the flag.
pub fn describe(err: &Error) -> String {
    match err {
        Error::InvalidParameter { name, reason } => format!("invalid value for `--{name}`: {reason}"),
        other => other.to_string(),
    }
}

fn report(err: Error) -> i32 {
    eprintln!("error: {}", describe(&err));
    EXIT_ERROR
}

/// Executes a parsed command and returns the process exit code.
pub fn execute(cli: Cli) -> i32 {
    match cli.command {
        Command::Segment(args) => {
            match RunConfig::from_args(&args).and_then(|c| segment_command(&c)) {
                Ok(summary) => {
                    println!("{summary}");
                    summary.exit_code()
                }
                Err(e) => report(e),
            }
        }
        Command::Compare(args) => {
            match RunConfig::from_args(&args).and_then(|c| compare_command(&c)) {
                Ok((tp, plain)) => {
                    println!("{tp}");
                    println!("{plain}");
                    tp.exit_code().max(plain.exit_code())
                }
                Err(e) => report(e),
            }
        }
        Command::Gen(args) => match gen_command(&args) {
            Ok(spec) => {
                println!("wrote {} ({}x{}) to {}", spec.scene, spec.size, spec.size, args.out.display());
                EXIT_OK
            }
            Err(e) => report(e),
        },
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn run_from<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    match Cli::try_parse_from(args) {
        Ok(cli) => execute(cli),
        Err(e) => {
            let code = if e.use_stderr() { EXIT_ERROR } else { EXIT_OK };
            let _ = e.print();
            code
        }
    }
}
