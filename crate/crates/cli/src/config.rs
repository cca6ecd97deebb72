use std::path::{Path, PathBuf};

use ccl_core::bounds::lambda_grid;
use ccl_core::continual::RunConfig;
use ccl_core::data::{make_blob_sequence, make_rotated_sequence, BlobConfig, IdxSource, ScenarioSpec, TaskSplit};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult, IoContext};

/// Where the task sequence comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Scenario {
    /// Class-incremental Gaussian blobs.
    Blobs(BlobConfig),
    /// One planar blob task under a different seeded rotation per task.
    Rotated { base: BlobConfig, tasks: usize },
    /// Class-incremental split of IDX image files.
    Idx(IdxSource),
    /// Declared weights and losses only; usable by `bounds`.
    Example(ScenarioSpec),
}

impl Default for Scenario {
    fn default() -> Self {
        Scenario::Blobs(BlobConfig::default())
    }
}

impl Scenario {
    pub fn tasks(&self, seed: u64) -> CliResult<Vec<TaskSplit>> {
        match self {
            Scenario::Blobs(b) => make_blob_sequence(b, seed).map_err(|e| CliError::core(e, "building blob tasks")),
            Scenario::Rotated { base, tasks } => {
                let one = BlobConfig { tasks: 1, ..base.clone() };
                let split = make_blob_sequence(&one, seed)
                    .map_err(|e| CliError::core(e, "building the base task"))?
                    .remove(0);
                make_rotated_sequence(*tasks, &split, seed).map_err(|e| CliError::core(e, "rotating the base task"))
            }
            Scenario::Idx(src) => src.load().map_err(|e| CliError::core(e, "loading IDX data")),
            Scenario::Example(_) => Err(CliError::config("an example scenario has no data; use `bounds` with it")),
        }
    }
}

/// Property-suite sizes for `verify`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VerifyConfig {
    pub lemma_trials: usize,
    pub residual_trials: usize,
    pub ks: Vec<usize>,
    pub gradient_seeds: usize,
    /// Largest support of the random distributions.
    pub max_points: usize,
    /// Added to α before the suites run. Fault injection only; any nonzero
    /// value must make `verify` fail.
    pub alpha_offset: f64,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig {
            lemma_trials: 1000,
            residual_trials: 200,
            ks: vec![1, 2, 5],
            gradient_seeds: 20,
            max_points: 4,
            alpha_offset: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub scenario: Scenario,
    /// Encoder, optimizer, temperatures, λ schedule, buffer, probe.
    #[serde(default)]
    pub run: RunConfig,
    /// Negatives in the population losses.
    #[serde(default = "one")]
    pub k: usize,
    /// Seeds both the data and the run; overrides `run.seed`.
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub verify: VerifyConfig,
    /// λ grid for `bounds` as `lo:hi:n`.
    #[serde(default)]
    pub grid: Option<String>,
}

fn one() -> usize {
    1
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            scenario: Scenario::default(),
            run: RunConfig::default(),
            k: one(),
            seed: 0,
            out: None,
            verify: VerifyConfig::default(),
            grid: None,
        }
    }
}

/// `lo:hi:n` into `n` evenly spaced values.
pub fn parse_grid(spec: &str) -> CliResult<Vec<f64>> {
    let parts: Vec<&str> = spec.split(':').collect();
    let bad = || CliError::config(format!("grid `{spec}` is not of the form lo:hi:n"));
    if parts.len() != 3 {
        return Err(bad());
    }
    let lo: f64 = parts[0].trim().parse().map_err(|_| bad())?;
    let hi: f64 = parts[1].trim().parse().map_err(|_| bad())?;
    let n: usize = parts[2].trim().parse().map_err(|_| bad())?;
    lambda_grid(lo, hi, n).map_err(|e| CliError::core(e, format!("grid `{spec}`")))
}

impl ExperimentConfig {
    /// Reads `path` (defaults when `None`), applies overrides and validates.
    pub fn load(path: Option<&Path>, seed: Option<u64>, grid: Option<String>) -> CliResult<Self> {
        let mut cfg = match path {
            None => ExperimentConfig::default(),
            Some(p) => {
                let text = std::fs::read_to_string(p).io_ctx(|| format!("reading config {}", p.display()))?;
                serde_json::from_str(&text)
                    .map_err(|e| CliError::Config(anyhow::Error::new(e).context(format!("parsing {}", p.display()))))?
            }
        };
        if let Some(s) = seed {
            cfg.seed = s;
        }
        if grid.is_some() {
            cfg.grid = grid;
        }
        cfg.run.seed = cfg.seed;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> CliResult<()> {
        self.run.validate().map_err(|e| CliError::core(e, "run settings"))?;
        if self.k == 0 {
            return Err(CliError::config("k must be at least 1"));
        }
        let v = &self.verify;
        if v.ks.contains(&0) || v.max_points < 2 || !v.alpha_offset.is_finite() {
            return Err(CliError::config("verify needs k ≥ 1, max_points ≥ 2 and a finite alpha_offset"));
        }
        if let Some(g) = &self.grid {
            parse_grid(g)?;
        }
        match &self.scenario {
            Scenario::Blobs(b) => {
                make_blob_sequence(b, self.seed).map_err(|e| CliError::core(e, "scenario"))?;
            }
            Scenario::Rotated { base, tasks } => {
                if *tasks == 0 || base.dim != 2 {
                    return Err(CliError::config("rotated scenarios need tasks ≥ 1 and a planar base"));
                }
            }
            Scenario::Idx(_) => {}
            Scenario::Example(spec) => {
                spec.all_weights().map_err(|e| CliError::core(e, "example weights"))?;
                spec.train_losses().map_err(|e| CliError::core(e, "example losses"))?;
            }
        }
        Ok(())
    }

    /// `--out` beats the config, which beats `./ccl-out`.
    pub fn out_dir(&self, flag: Option<PathBuf>) -> PathBuf {
        flag.or_else(|| self.out.clone()).unwrap_or_else(|| PathBuf::from("ccl-out"))
    }
}
