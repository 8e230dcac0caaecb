//! The JSON experiment configuration.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::baselines::{MetabenchConfig, TinybenchConfig};
use crate::error::{Error, Result};
use crate::experiments::SynthConfig;
use crate::ltr::{LossConfig, LossVariant, TrainConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataPaths {
    pub models: PathBuf,
    pub questions: PathBuf,
    pub responses: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SplitSpec {
    /// Every model is both trained on and evaluated.
    None,
    /// Hold out models with more than `threshold` parameters.
    Size { threshold: u64 },
    /// Hold out a seeded random fraction. The seed defaults to the
    /// experiment seed.
    Random { fraction: f64, seed: Option<u64> },
    /// Read a `model_id,role` file.
    File { path: PathBuf },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct LtrSpec {
    pub loss: LossConfig,
    pub train: TrainConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct BaselineSpec {
    pub metabench: MetabenchConfig,
    pub tinybenchmarks: TinybenchConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSpec {
    pub step: usize,
    pub variants: Vec<LossVariant>,
}

impl Default for SweepSpec {
    fn default() -> Self {
        Self {
            step: 100,
            variants: vec![LossVariant::RankNet],
        }
    }
}

fn default_exclusions() -> BTreeSet<String> {
    BTreeSet::from(["IFEval".to_string()])
}

fn default_output() -> PathBuf {
    PathBuf::from("out")
}

/// One experiment. Relative paths are resolved against the directory of
/// the config file.
///
/// `seed` is mandatory and is the only source of randomness: it replaces
/// the `seed` fields of the nested training, baseline and synthetic
/// configurations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub data: Option<DataPaths>,
    #[serde(default)]
    pub target: Option<PathBuf>,
    #[serde(default = "default_exclusions")]
    pub exclude_benchmarks: BTreeSet<String>,
    #[serde(default)]
    pub exclude_models: BTreeSet<String>,
    #[serde(default = "default_split")]
    pub split: SplitSpec,
    #[serde(default)]
    pub ltr: LtrSpec,
    #[serde(default)]
    pub baselines: BaselineSpec,
    #[serde(default)]
    pub sweep: SweepSpec,
    #[serde(default)]
    pub synth: SynthConfig,
    #[serde(default = "default_output")]
    pub output_dir: PathBuf,
    pub seed: u64,
}

fn default_split() -> SplitSpec {
    SplitSpec::None
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let mut config: Self = serde_json::from_str(text)?;
        config.propagate_seed();
        config.validate()?;
        Ok(config)
    }

    /// Reads a config file and resolves its relative paths.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut config = Self::from_json(&text)?;
        let base = path.parent().unwrap_or(Path::new("")).to_path_buf();
        config.resolve(&base);
        Ok(config)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("config serializes");
        s.push('\n');
        s
    }

    pub fn set_seed(&mut self, seed: u64) {
        self.seed = seed;
        self.propagate_seed();
    }

    fn propagate_seed(&mut self) {
        self.ltr.train.seed = self.seed;
        self.baselines.metabench.seed = self.seed;
        self.baselines.tinybenchmarks.seed = self.seed;
        self.synth.seed = self.seed;
    }

    pub(crate) fn resolve(&mut self, base: &Path) {
        let join = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        if let Some(d) = &mut self.data {
            join(&mut d.models);
            join(&mut d.questions);
            join(&mut d.responses);
        }
        if let Some(t) = &mut self.target {
            join(t);
        }
        if let SplitSpec::File { path } = &mut self.split {
            join(path);
        }
        join(&mut self.output_dir);
    }

    pub fn validate(&self) -> Result<()> {
        self.ltr.loss.validate()?;
        self.ltr.train.validate()?;
        self.synth.validate()?;
        if self.sweep.step == 0 {
            return Err(Error::invalid("sweep step must be positive"));
        }
        if self.sweep.variants.is_empty() {
            return Err(Error::invalid("sweep needs at least one variant"));
        }
        if let SplitSpec::Random { fraction, .. } = self.split {
            if !(fraction > 0.0 && fraction < 1.0) {
                return Err(Error::invalid("random split fraction must be in (0, 1)"));
            }
        }
        Ok(())
    }

    pub fn data(&self) -> Result<&DataPaths> {
        self.data
            .as_ref()
            .ok_or_else(|| Error::invalid("config has no data section"))
    }

    pub fn target(&self) -> Result<&Path> {
        self.target
            .as_deref()
            .ok_or_else(|| Error::invalid("config has no target ranking path"))
    }
}
