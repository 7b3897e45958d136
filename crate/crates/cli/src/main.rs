//! `dsfs`: reproducible flexibility-set estimation experiments.
//!
//! Exit codes: 0 success, 2 bad arguments or configuration, 3 solver
//! failure, 4 training divergence, 5 missing input file.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use dsfs::active::Strategy;
use dsfs::Error;

#[derive(Parser)]
#[command(name = "dsfs", version, about = "Distribution-system flexibility-set estimation")]
struct Cli {
    /// Cap on worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args, Clone)]
pub struct Common {
    /// Run configuration (JSON); flags override its fields.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Root seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Directory receiving output files.
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate a synthetic feeder; writes feeder.json and network.json.
    GenNetwork {
        #[command(flatten)]
        common: Common,
        /// Bus count including the substation.
        #[arg(long)]
        buses: Option<usize>,
        /// Number of DERs.
        #[arg(long)]
        ders: Option<usize>,
        /// Time steps per profile.
        #[arg(long)]
        horizon: Option<usize>,
        /// Clock hour of the first step.
        #[arg(long)]
        start_hour: Option<f64>,
    },
    /// Solve the robust inner hyperbox; writes innerbox.json.
    Innerbox {
        #[command(flatten)]
        common: Common,
        /// network.json to load instead of generating one.
        #[arg(long)]
        network: Option<PathBuf>,
    },
    /// Draw and oracle-label a held-out set; writes test.csv.
    TestSet {
        #[command(flatten)]
        common: Common,
        /// network.json to load instead of generating one.
        #[arg(long)]
        network: Option<PathBuf>,
        /// Number of points.
        #[arg(long)]
        count: Option<usize>,
    },
    /// Active-learning training run; writes model.json, history.csv, innerset.json, samples.csv.
    Train {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        train: TrainArgs,
    },
    /// Classify samples.csv rows; writes the rows with predicted label and posterior.
    Classify {
        #[command(flatten)]
        common: Common,
        /// model.json checkpoint.
        #[arg(long)]
        model: PathBuf,
        /// samples.csv; label columns are optional and ignored.
        #[arg(long)]
        samples: PathBuf,
        /// Output file (default: <out-dir>/classified.csv).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Score a checkpoint on a labeled set; prints and writes report.json.
    Evaluate {
        #[command(flatten)]
        common: Common,
        /// model.json checkpoint.
        #[arg(long)]
        model: PathBuf,
        /// Labeled samples.csv.
        #[arg(long)]
        test: PathBuf,
    },
    /// Posterior, uncertainty and oracle over a 2-D grid; writes grid.csv.
    Heatmap {
        #[command(flatten)]
        common: Common,
        /// model.json checkpoint.
        #[arg(long)]
        model: PathBuf,
        /// network.json to load instead of generating one.
        #[arg(long)]
        network: Option<PathBuf>,
        /// Cells per axis.
        #[arg(long)]
        resolution: Option<usize>,
    },
    /// Warm- vs cold-start training over successive windows; writes rolling.csv.
    Rolling {
        #[command(flatten)]
        common: Common,
        /// Window start hours, comma separated.
        #[arg(long, value_delimiter = ',')]
        windows: Option<Vec<usize>>,
        /// Epochs per window.
        #[arg(long)]
        epochs: Option<usize>,
    },
    /// F1 under perturbed loads and PV; writes robustness.csv.
    Robustness {
        #[command(flatten)]
        common: Common,
        /// model.json trained on the nominal network.
        #[arg(long)]
        model: PathBuf,
        /// feeder.json of the nominal network.
        #[arg(long)]
        feeder: PathBuf,
        /// Perturbation levels as fractions, comma separated.
        #[arg(long, value_delimiter = ',')]
        levels: Option<Vec<f64>>,
        /// Test points per level.
        #[arg(long)]
        count: Option<usize>,
    },
}

#[derive(Args, Clone)]
pub struct TrainArgs {
    /// network.json to load instead of generating one.
    #[arg(long)]
    pub network: Option<PathBuf>,
    /// Sample selection rule.
    #[arg(long, value_parser = ["uncertainty", "random"])]
    pub strategy: Option<String>,
    /// Do not seed the inner set with the robust hyperbox.
    #[arg(long)]
    pub no_inner_box: bool,
    /// Label every point with the oracle.
    #[arg(long)]
    pub no_hull_labeling: bool,
    /// Checkpoint to transfer from (first hidden layers frozen).
    #[arg(long)]
    pub warm_start: Option<PathBuf>,
    /// Active-learning epochs.
    #[arg(long)]
    pub epochs: Option<usize>,
    /// Unlabeled pool size.
    #[arg(long)]
    pub pool_size: Option<usize>,
    /// Write model_epochN.json after every epoch.
    #[arg(long)]
    pub checkpoints: bool,
}

impl TrainArgs {
    fn strategy(&self) -> Option<Strategy> {
        self.strategy.as_deref().map(|s| s.parse().expect("value_parser restricts strategies"))
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::InvalidConfig(_)
        | Error::InvalidCount(_)
        | Error::InvalidArchitecture(_)
        | Error::ArchitectureMismatch(_) => 2,
        Error::Solver(_)
        | Error::SolverAt { .. }
        | Error::InfeasibleModel
        | Error::UnboundedModel
        | Error::EmptyInterior { .. } => 3,
        Error::NonFiniteLoss { .. } => 4,
        Error::Io(io) if io.kind() == std::io::ErrorKind::NotFound => 5,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    let result = match cli.cmd {
        Cmd::GenNetwork { common, buses, ders, horizon, start_hour } => {
            commands::gen_network(&common, buses, ders, horizon, start_hour)
        }
        Cmd::Innerbox { common, network } => commands::innerbox(&common, network),
        Cmd::TestSet { common, network, count } => commands::test_set(&common, network, count),
        Cmd::Train { common, train } => commands::train(&common, &train),
        Cmd::Classify { common, model, samples, out } => commands::classify(&common, &model, &samples, out),
        Cmd::Evaluate { common, model, test } => commands::evaluate(&common, &model, &test),
        Cmd::Heatmap { common, model, network, resolution } => commands::heatmap(&common, &model, network, resolution),
        Cmd::Rolling { common, windows, epochs } => commands::rolling(&common, windows, epochs),
        Cmd::Robustness { common, model, feeder, levels, count } => {
            commands::robustness(&common, &model, &feeder, levels, count)
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
