//! Run configuration: one JSON document drives every subcommand.
//!
//! Sections: `system`, `grammar`, `depth`, `outputs`, `train`, `prune`,
//! `data`, plus `seed` and `out_dir`. Optional fields fall back to the
//! benchmark defaults. Every artifact embeds a hash of the effective
//! (post-override) configuration for provenance.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use dpasr_core::datasets::{AphConfig, BenchmarkSystem, SampleParams};
use dpasr_core::optimizer::TrainConfig;
use dpasr_core::pruner::PruneConfig;
use dpasr_core::GrammarSpec;

use crate::error::CliError;

pub const ARTIFACT_SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunConfig {
    pub system: String,
    pub grammar: GrammarSpec,
    pub depth: u32,
    /// Output variables to fit, one architecture each.
    pub outputs: Vec<String>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub out_dir: Option<PathBuf>,
    #[serde(default)]
    pub data: DataSection,
    #[serde(default)]
    pub train: TrainSection,
    #[serde(default)]
    pub prune: PruneSection,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct DataSection {
    pub validation_fraction: Option<f64>,
    /// Held-out evaluation sample size (default 10000).
    pub test_points: Option<usize>,
    pub kovasznay_reynolds: Option<f64>,
    pub taylor_green_nu: Option<f64>,
    pub aph: Option<AphSection>,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct AphSection {
    pub ntu: Option<[f64; 3]>,
    pub pe: Option<[f64; 3]>,
    pub inlet_temps: Option<[f64; 3]>,
    pub grid: Option<(usize, usize)>,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct TrainSection {
    pub max_epochs: Option<usize>,
    pub initial_lr: Option<f64>,
    pub lr_decay_factor: Option<f64>,
    pub lr_decay_every: Option<usize>,
    pub l1_coefficient: Option<f64>,
    pub early_stop_patience: Option<usize>,
    pub seed: Option<u64>,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct PruneSection {
    pub finetune_epochs: Option<usize>,
    pub finetune_lr: Option<f64>,
    pub score_tolerance: Option<f64>,
    pub seed: Option<u64>,
}

impl RunConfig {
    pub fn load(path: &std::path::Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::config(format!("cannot read config {}: {e}", path.display())))?;
        let config: RunConfig = serde_json::from_str(&text)
            .map_err(|e| CliError::config(format!("invalid config {}: {e}", path.display())))?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let system = self.system()?;
        if self.outputs.is_empty() {
            return Err(CliError::config("config lists no output variables"));
        }
        let known = system.output_names();
        for output in &self.outputs {
            if !known.contains(output) {
                return Err(CliError::config(format!(
                    "output `{output}` is not produced by system `{}` (has: {})",
                    system.id(),
                    known.join(", ")
                )));
            }
        }
        let variables = system.variable_names();
        for terminal in self.grammar.terminals() {
            if !variables.contains(terminal) {
                return Err(CliError::config(format!(
                    "grammar terminal `{terminal}` is not an input variable of `{}` (has: {})",
                    system.id(),
                    variables.join(", ")
                )));
            }
        }
        Ok(())
    }

    pub fn system(&self) -> Result<BenchmarkSystem, CliError> {
        BenchmarkSystem::parse(&self.system).map_err(|e| CliError::config(e.to_string()))
    }

    pub fn sample_params(&self) -> SampleParams {
        let defaults = SampleParams::default();
        let aph_defaults = AphConfig::default();
        let aph = self.data.aph.clone().unwrap_or_default();
        SampleParams {
            validation_fraction: self
                .data
                .validation_fraction
                .unwrap_or(defaults.validation_fraction),
            kovasznay_reynolds: self
                .data
                .kovasznay_reynolds
                .unwrap_or(defaults.kovasznay_reynolds),
            taylor_green_nu: self.data.taylor_green_nu.unwrap_or(defaults.taylor_green_nu),
            aph: AphConfig {
                ntu: aph.ntu.unwrap_or(aph_defaults.ntu),
                pe: aph.pe.unwrap_or(aph_defaults.pe),
                inlet_temps: aph.inlet_temps.unwrap_or(aph_defaults.inlet_temps),
                grid: aph.grid.unwrap_or(aph_defaults.grid),
                ..aph_defaults
            },
        }
    }

    pub fn test_points(&self) -> usize {
        self.data.test_points.unwrap_or(10_000)
    }

    pub fn train_config(&self) -> TrainConfig {
        let d = TrainConfig::default();
        TrainConfig {
            max_epochs: self.train.max_epochs.unwrap_or(d.max_epochs),
            initial_lr: self.train.initial_lr.unwrap_or(d.initial_lr),
            lr_decay_factor: self.train.lr_decay_factor.unwrap_or(d.lr_decay_factor),
            lr_decay_every: self.train.lr_decay_every.unwrap_or(d.lr_decay_every),
            l1_coefficient: self.train.l1_coefficient.unwrap_or(d.l1_coefficient),
            early_stop_patience: self.train.early_stop_patience.unwrap_or(d.early_stop_patience),
            seed: self.train.seed.unwrap_or(self.seed),
        }
    }

    pub fn prune_config(&self) -> PruneConfig {
        let d = PruneConfig::default();
        PruneConfig {
            finetune_epochs: self.prune.finetune_epochs.unwrap_or(d.finetune_epochs),
            finetune_lr: self.prune.finetune_lr.unwrap_or(d.finetune_lr),
            score_tolerance: self.prune.score_tolerance.unwrap_or(d.score_tolerance),
            seed: self.prune.seed.unwrap_or(self.seed),
        }
    }

    /// FNV-1a hash of the effective configuration's canonical JSON. The
    /// output directory is excluded: where artifacts land is not part of
    /// the experiment, and identical runs into different directories must
    /// produce identical bytes.
    pub fn config_hash(&self) -> String {
        let mut identity = self.clone();
        identity.out_dir = None;
        let canonical = serde_json::to_string(&identity).expect("config serialization cannot fail");
        let mut hash: u64 = 0xcbf29ce484222325;
        for byte in canonical.as_bytes() {
            hash ^= u64::from(*byte);
            hash = hash.wrapping_mul(0x100000001b3);
        }
        format!("{hash:016x}")
    }
}
