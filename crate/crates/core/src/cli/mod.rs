//! Command-line interface.

mod commands;
mod scene;
mod selftest;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::error::{Error, ErrorCategory, Result};
use crate::inverse::FitMode;

pub use scene::{MaterialSpec, MeshSpec, SceneFile};
pub use selftest::{run_selftest, Check};

/// Environment variable holding the default worker thread count.
pub const THREADS_ENV: &str = "POLCAP_THREADS";

#[derive(Debug, Parser)]
#[command(name = "polcap", version, about = "Polarized flash capture simulation and SVBRDF/shape recovery")]
pub struct Cli {
    /// Worker threads (0 = all cores).
    #[arg(long, global = true, env = THREADS_ENV, default_value_t = 0)]
    pub threads: usize,
    /// Overrides the seed of the command's configuration.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// TOML configuration for the command (scene, dataset, fit or eval).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory; nothing is written outside it.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// More log output (repeatable).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Render a scene file into a capture directory.
    Render(RenderArgs),
    /// Generate a synthetic dataset.
    GenDataset(GenDatasetArgs),
    /// Extract Stokes and diffuse-color cues from a capture directory.
    Cues(CuesArgs),
    /// Recover the five maps from a capture directory or a whole manifest.
    Fit(FitArgs),
    /// Score predictions against a dataset manifest.
    Eval(EvalArgs),
    /// 8-bit visualizations of Stokes, normal and depth maps.
    Viz(VizArgs),
    /// Run the built-in invariant checks.
    Selftest,
}

#[derive(Debug, Args)]
pub struct RenderArgs {
    /// Scene file (TOML); `--config` is used when absent, then a default sphere.
    pub scene: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SplitArg {
    Train,
    Test,
    All,
}

#[derive(Debug, Args)]
pub struct GenDatasetArgs {
    #[arg(long, value_enum, default_value_t = SplitArg::All)]
    pub split: SplitArg,
    /// Keep complete samples from an earlier, interrupted run.
    #[arg(long)]
    pub resume: bool,
    /// Overrides the image resolution.
    #[arg(long)]
    pub resolution: Option<usize>,
}

#[derive(Debug, Args)]
pub struct CuesArgs {
    /// Capture directory (`i000.png` … and `meta.json`).
    pub capture: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Full,
    NoPolarizedLoss,
    NoPolarization,
}

impl From<ModeArg> for FitMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Full => FitMode::Full,
            ModeArg::NoPolarizedLoss => FitMode::NoPolarizedLoss,
            ModeArg::NoPolarization => FitMode::NoPolarization,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DepthPriorArg {
    /// Constant working distance from the capture metadata.
    Distance,
    /// The ground-truth depth map, as known acquisition geometry.
    Gt,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    /// Capture directory, or a manifest (file or the directory holding it).
    pub input: PathBuf,
    #[arg(long, value_enum)]
    pub mode: Option<ModeArg>,
    #[arg(long, value_enum, default_value_t = DepthPriorArg::Distance)]
    pub depth_prior: DepthPriorArg,
    #[arg(long)]
    pub iterations: Option<usize>,
    /// Use the stored (noisy) `stokes_norm.png` for the polarization
    /// orientation instead of deriving it from the images.
    #[arg(long)]
    pub stored_cue: bool,
    /// Fit at most this many manifest samples.
    #[arg(long)]
    pub limit: Option<usize>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Directory with `<sample dir>/{diffuse,specular,roughness,normal,depth}.png`.
    pub results: PathBuf,
    /// Ground-truth manifest (file or directory); defaults to the config's.
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    #[arg(long)]
    pub relights: Option<usize>,
    #[arg(long)]
    pub method: Option<String>,
    /// Samples shown in the comparison grid image.
    #[arg(long, default_value_t = 4)]
    pub grid: usize,
}

#[derive(Debug, Args)]
pub struct VizArgs {
    /// Capture, sample or prediction directory.
    pub input: PathBuf,
}

fn init_logging(verbose: u8) {
    let level = match verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .try_init();
}

fn report(category: ErrorCategory, message: &str) -> i32 {
    let line = serde_json::json!({
        "error": category.as_str(),
        "code": category.exit_code(),
        "message": message,
    });
    eprintln!("{line}");
    category.exit_code()
}

/// Runs the CLI on `args` (including the program name) and returns the
/// process exit code. Failures print one JSON object on stderr.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                return 0;
            }
            let _ = e.print();
            return report(ErrorCategory::Usage, &e.kind().to_string());
        }
    };
    init_logging(cli.verbose);
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => report(e.category(), &e.to_string()),
    }
}

/// Executes a parsed command inside a pool capped at `--threads`.
pub fn execute(cli: &Cli) -> Result<()> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.threads)
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    pool.install(|| commands::dispatch(cli))
}
