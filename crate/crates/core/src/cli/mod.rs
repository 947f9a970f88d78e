//! Command-line experiment driver.

pub mod commands;
pub mod config;
pub mod io;
pub mod plot;
pub mod sweep;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::error::Result;
use crate::headmap::Weighting;
use config::{ExperimentConfig, PoolInit};

#[derive(Debug, Parser)]
#[command(name = "valley", version, about = "Train and evaluate valley-seeking hyperplane pools")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Draw train/calib/test sample files from a mixture.
    Gen(GenArgs),
    /// Train a pool on a sample file; writes the snapshot and trace.
    Train(TrainArgs),
    /// Associate labels and report Top-n errors and the confusion matrix.
    Eval(EvalArgs),
    /// Run a kNN or k-Means reference.
    Baseline(BaselineArgs),
    /// Draw a 2-D pool and samples as SVG.
    Plot(PlotArgs),
    /// Measure training work across dimensions.
    Sweep(SweepArgs),
}

/// Settings shared by the commands; each flag overrides the config file.
#[derive(Debug, Clone, Default, Args)]
pub struct Overrides {
    /// JSON experiment config.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Builtin mixture (paper2d, paper50d, unequal) or mixture JSON path.
    #[arg(long)]
    pub mixture: Option<String>,
    /// Parameter scale σ.
    #[arg(long)]
    pub sigma: Option<f64>,
    /// Shift step, in units of σ.
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// Activity band half-width, in units of σ.
    #[arg(long)]
    pub phi: Option<f64>,
    /// Rotation angle in radians.
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Mean-estimate band half-width, in units of σ.
    #[arg(long)]
    pub beta: Option<f64>,
    /// Shifts a plane needs before it may rotate.
    #[arg(long)]
    pub warmup: Option<u64>,
    /// Decay ε and α linearly over this many samples.
    #[arg(long)]
    pub decay_horizon: Option<u64>,
    /// Grid pool with this many planes per dimension.
    #[arg(long, conflicts_with = "random")]
    pub grid: Option<usize>,
    /// Random pool with this many planes.
    #[arg(long)]
    pub random: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub train_size: Option<usize>,
    #[arg(long)]
    pub calib_size: Option<usize>,
    #[arg(long)]
    pub test_size: Option<usize>,
    /// Samples between trace checkpoints.
    #[arg(long)]
    pub cadence: Option<usize>,
    /// Comma-separated n values for Top-n errors.
    #[arg(long, value_delimiter = ',')]
    pub ns: Option<Vec<usize>>,
    #[arg(long, value_enum)]
    pub weighting: Option<WeightingArg>,
    /// Take the domain box and σ from the calibration data.
    #[arg(long)]
    pub auto_domain: bool,
    /// Cube domain `LO,HI` for the initial pool.
    #[arg(long, value_delimiter = ',', num_args = 2, conflicts_with = "auto_domain")]
    pub domain: Option<Vec<f64>>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum WeightingArg {
    Balanced,
    RawCount,
}

impl From<WeightingArg> for Weighting {
    fn from(w: WeightingArg) -> Self {
        match w {
            WeightingArg::Balanced => Weighting::Balanced,
            WeightingArg::RawCount => Weighting::RawCount,
        }
    }
}

impl Overrides {
    /// The config file (or defaults) with every given flag applied.
    pub fn resolve(&self) -> Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(path) => ExperimentConfig::load(path)?,
            None => ExperimentConfig::default(),
        };
        macro_rules! set {
            ($flag:expr, $field:expr) => {
                if let Some(v) = $flag.clone() {
                    $field = v;
                }
            };
        }
        set!(self.mixture, cfg.mixture);
        set!(self.epsilon, cfg.learner.epsilon);
        set!(self.phi, cfg.learner.phi);
        set!(self.alpha, cfg.learner.alpha);
        set!(self.beta, cfg.learner.beta);
        set!(self.warmup, cfg.learner.warmup);
        set!(self.seed, cfg.seed);
        set!(self.train_size, cfg.sizes.train);
        set!(self.calib_size, cfg.sizes.calib);
        set!(self.test_size, cfg.sizes.test);
        set!(self.cadence, cfg.cadence);
        set!(self.ns, cfg.ns);
        set!(self.out, cfg.out_dir);
        if self.sigma.is_some() {
            cfg.sigma = self.sigma;
        }
        if self.decay_horizon.is_some() {
            cfg.learner.decay_horizon = self.decay_horizon;
        }
        if let Some(n) = self.grid {
            cfg.init = PoolInit::Grid(n);
        }
        if let Some(n) = self.random {
            cfg.init = PoolInit::Random(n);
        }
        if let Some(w) = self.weighting {
            cfg.weighting = w.into();
        }
        if self.auto_domain {
            cfg.domain = None;
            cfg.auto_domain = true;
        }
        if let Some(d) = &self.domain {
            cfg.domain = Some([d[0], d[1]]);
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[command(flatten)]
    pub common: Overrides,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub common: Overrides,
    /// Training samples (defaults to `<out>/train.csv`).
    #[arg(long)]
    pub train: Option<PathBuf>,
    /// Labelled samples for label association at checkpoints and for the
    /// automatic domain.
    #[arg(long)]
    pub calib: Option<PathBuf>,
    /// Held-out samples for checkpoint errors.
    #[arg(long)]
    pub test: Option<PathBuf>,
    /// Write zeros in the wall-clock fields so reruns are byte-identical.
    #[arg(long)]
    pub no_wall: bool,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[command(flatten)]
    pub common: Overrides,
    #[arg(long)]
    pub snapshot: PathBuf,
    #[arg(long)]
    pub calib: PathBuf,
    #[arg(long)]
    pub test: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BaselineKind {
    Knn,
    Kmeans,
}

#[derive(Debug, Args)]
pub struct BaselineArgs {
    #[arg(value_enum)]
    pub kind: BaselineKind,
    #[command(flatten)]
    pub common: Overrides,
    #[arg(long)]
    pub train: PathBuf,
    #[arg(long)]
    pub test: PathBuf,
    /// Neighbours for kNN (default 5) or clusters for k-Means (default:
    /// number of classes in the training file).
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long, default_value_t = 300)]
    pub max_iters: usize,
}

#[derive(Debug, Args)]
pub struct PlotArgs {
    /// Pool to draw.
    #[arg(long)]
    pub snapshot: PathBuf,
    /// Earlier pool drawn dashed underneath.
    #[arg(long)]
    pub before: Option<PathBuf>,
    #[arg(long)]
    pub samples: Option<PathBuf>,
    /// Output SVG file.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// Comma-separated dimensions.
    #[arg(long, value_delimiter = ',', default_value = "10,50,200")]
    pub dims: Vec<usize>,
    /// Planes per dimension.
    #[arg(long, default_value_t = 4)]
    pub grid: usize,
    #[arg(long, default_value_t = 10_000)]
    pub train_size: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Output CSV file.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub no_wall: bool,
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Gen(a) => commands::gen(&a),
        Command::Train(a) => commands::train(&a),
        Command::Eval(a) => commands::eval(&a),
        Command::Baseline(a) => commands::baseline(&a),
        Command::Plot(a) => commands::plot(&a),
        Command::Sweep(a) => commands::sweep(&a),
    }
}

/// Parses the process arguments, runs the command and maps errors to a
/// nonzero exit code.
pub fn main_entry() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
