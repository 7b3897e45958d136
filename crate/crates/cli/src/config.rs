use std::path::{Path, PathBuf};

use dsfs::active::ActiveConfig;
use dsfs::lp::SolverTolerances;
use dsfs::mlp::TrainConfig;
use dsfs::network::{self, DerSpec, FeederSpec, GeneratorConfig};
use dsfs::{io, CompactModel, Error, Result};
use serde::{Deserialize, Serialize};

/// Experiment configuration; every field has a default and flags override it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Root seed; every random stream is derived from it.
    pub seed: u64,
    pub output_dir: PathBuf,
    pub network: NetworkConfig,
    pub active: ActiveConfig,
    pub train: TrainConfig,
    pub eval: EvalConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 7,
            output_dir: PathBuf::from("out"),
            network: NetworkConfig::default(),
            active: ActiveConfig::default(),
            train: TrainConfig::default(),
            eval: EvalConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NetworkConfig {
    /// Existing `network.json`; generated from the fields below when absent.
    pub path: Option<PathBuf>,
    pub buses: usize,
    pub ders: usize,
    pub horizon: usize,
    pub generator: GeneratorConfig,
}

impl Default for NetworkConfig {
    fn default() -> Self {
        Self { path: None, buses: 12, ders: 18, horizon: 2, generator: GeneratorConfig::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    pub test_count: usize,
    pub grid_resolution: usize,
    pub grid_window: (usize, usize),
    pub levels: Vec<f64>,
    pub per_level_count: usize,
    /// Rolling-horizon windows, as clock hours of their first step.
    pub windows: Vec<usize>,
    pub timing_batch: usize,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            test_count: 1000,
            grid_resolution: 200,
            grid_window: (0, 1),
            levels: vec![0.03, 0.10, 0.20, 0.30, 0.40],
            per_level_count: 1000,
            windows: vec![8, 9, 10, 11, 12],
            timing_batch: 1000,
        }
    }
}

impl RunConfig {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let cfg: Self = match path {
            Some(p) => io::read_json(p).map_err(|e| match e {
                Error::Json(j) => Error::InvalidConfig(format!("{}: {j}", p.display())),
                e => e,
            })?,
            None => Self::default(),
        };
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.active.validate()?;
        self.train.validate()?;
        if self.network.ders == 0 {
            return Err(Error::InvalidConfig("at least one DER required".into()));
        }
        Ok(())
    }

    /// Feeder and DER fleet for the configured seed, starting at `start_hour`.
    pub fn generate(&self, start_hour: Option<f64>) -> Result<(FeederSpec<f64>, Vec<DerSpec<f64>>)> {
        let mut gen = self.network.generator.clone();
        if let Some(h) = start_hour {
            gen.profile.start_hour = h;
        }
        network::generate_feeder(self.seed, self.network.buses, self.network.ders, self.network.horizon, &gen)
    }

    /// The model from `network.path`, or a freshly generated one.
    pub fn model(&self) -> Result<CompactModel<f64>> {
        match &self.network.path {
            Some(p) => io::read_network(p),
            None => {
                let (f, d) = self.generate(None)?;
                network::assemble_compact(&f, &d, &SolverTolerances::default())
            }
        }
    }

    pub fn out(&self, name: &str) -> Result<PathBuf> {
        std::fs::create_dir_all(&self.output_dir)?;
        Ok(self.output_dir.join(name))
    }
}
