//! Run configuration: one documented TOML schema shared by every CLI mode.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use hinforge_core::model::Hyperparams;
use hinforge_core::synth::PlantedConfig;
use hinforge_core::team::IdentificationConfig;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema_version: u32,
    /// Root seed: every random stream (generation, init, sampling, splits)
    /// derives from it. Mandatory; there is no wall-clock fallback.
    pub seed: u64,
    #[serde(default)]
    pub graph: GraphSection,
    #[serde(default)]
    pub meta_paths: MetaPathSection,
    #[serde(default)]
    pub model: ModelSection,
    #[serde(default)]
    pub split: SplitSection,
    #[serde(default)]
    pub fed: FedSection,
    #[serde(default)]
    pub identify: IdentifySection,
    #[serde(default)]
    pub synthetic: SyntheticSection,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphSection {
    /// Graph file; written by `gen`, read by every other mode.
    #[serde(default)]
    pub path: Option<PathBuf>,
    /// Ground-truth team file `node_id\tteam_id` for evaluation.
    #[serde(default)]
    pub truth: Option<PathBuf>,
    /// Parameter checkpoint to load instead of training.
    #[serde(default)]
    pub checkpoint: Option<PathBuf>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetaPathSection {
    pub target_type: String,
    /// Type-name sequences, e.g. [["author","paper","author"]].
    pub paths: Vec<Vec<String>>,
}

impl Default for MetaPathSection {
    fn default() -> Self {
        Self {
            target_type: "author".to_string(),
            paths: vec![
                vec!["author".into(), "paper".into(), "author".into()],
                vec![
                    "author".into(),
                    "paper".into(),
                    "venue".into(),
                    "paper".into(),
                    "author".into(),
                ],
            ],
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    pub embed_dim: usize,
    pub semantic_dim: usize,
    /// 0 disables the cap (full neighborhoods).
    pub neighbor_cap: usize,
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
}

impl Default for ModelSection {
    fn default() -> Self {
        Self {
            embed_dim: 8,
            semantic_dim: 4,
            neighbor_cap: 10,
            learning_rate: 0.5,
            epochs: 100,
            batch_size: 16,
        }
    }
}

impl ModelSection {
    pub fn hyperparams(&self, seed: u64) -> Hyperparams {
        Hyperparams {
            embed_dim: self.embed_dim,
            semantic_dim: self.semantic_dim,
            neighbor_cap: match self.neighbor_cap {
                0 => None,
                s => Some(s),
            },
            learning_rate: self.learning_rate,
            epochs: self.epochs,
            batch_size: self.batch_size,
            seed,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplitSection {
    pub train_fraction: f64,
    pub val_fraction: f64,
}

impl Default for SplitSection {
    fn default() -> Self {
        Self {
            train_fraction: 0.6,
            val_fraction: 0.2,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FedSection {
    pub clients: usize,
    pub alpha: f64,
    pub threshold: u64,
    pub rounds: usize,
    /// Per-worker participation period (1 = every round). Length must be
    /// `clients`; shorter lists pad with 1.
    pub speeds: Vec<u32>,
    pub async_mode: bool,
}

impl Default for FedSection {
    fn default() -> Self {
        Self {
            clients: 3,
            alpha: 0.5,
            threshold: 4,
            rounds: 10,
            speeds: Vec::new(),
            async_mode: false,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IdentifySection {
    pub similar_count: usize,
    pub influential_count: usize,
    pub min_publications: u32,
    pub min_coauthor_frequency: u32,
    /// 0 = unlimited.
    pub max_teams: usize,
    pub singleton_teams: bool,
}

impl Default for IdentifySection {
    fn default() -> Self {
        Self {
            similar_count: 15,
            influential_count: 10,
            min_publications: 0,
            min_coauthor_frequency: 0,
            max_teams: 0,
            singleton_teams: true,
        }
    }
}

impl IdentifySection {
    pub fn to_core(&self) -> IdentificationConfig {
        IdentificationConfig {
            similar_count: self.similar_count,
            influential_count: self.influential_count,
            min_publications: self.min_publications,
            min_coauthor_frequency: self.min_coauthor_frequency,
            max_teams: match self.max_teams {
                0 => None,
                m => Some(m),
            },
            singleton_teams: self.singleton_teams,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticSection {
    pub teams: usize,
    pub team_size: [usize; 2],
    pub papers_per_team: [usize; 2],
    pub p_in: f64,
    pub p_out: f64,
}

impl Default for SyntheticSection {
    fn default() -> Self {
        Self {
            teams: 5,
            team_size: [8, 15],
            papers_per_team: [8, 14],
            p_in: 0.6,
            p_out: 0.02,
        }
    }
}

impl SyntheticSection {
    pub fn planted(&self, seed: u64) -> PlantedConfig {
        PlantedConfig {
            team_count: self.teams,
            team_size: (self.team_size[0], self.team_size[1]),
            papers_per_team: (self.papers_per_team[0], self.papers_per_team[1]),
            p_in: self.p_in,
            p_out: self.p_out,
            seed,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub dir: PathBuf,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self {
            dir: PathBuf::from("out"),
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read config {}", path.display()))?;
        let cfg: RunConfig = toml::from_str(&text)
            .with_context(|| format!("cannot parse config {}", path.display()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            bail!(
                "config schema_version {} is not the supported version {SCHEMA_VERSION}",
                self.schema_version
            );
        }
        if self.meta_paths.paths.is_empty() {
            bail!("meta_paths.paths: at least one meta-path is required");
        }
        let s = &self.split;
        if !(s.train_fraction > 0.0
            && s.val_fraction >= 0.0
            && s.train_fraction + s.val_fraction < 1.0 + 1e-12)
        {
            bail!("split fractions must satisfy 0 < train, 0 <= val, train + val <= 1");
        }
        if self.fed.clients == 0 {
            bail!("fed.clients must be >= 1");
        }
        if self.fed.speeds.len() > self.fed.clients {
            bail!("fed.speeds lists more workers than fed.clients");
        }
        if self.fed.speeds.iter().any(|&s| s == 0) {
            bail!("fed.speeds entries must be >= 1");
        }
        Ok(())
    }

    /// Per-worker participation periods, padded with 1.
    pub fn worker_speeds(&self) -> Vec<u32> {
        let mut speeds = self.fed.speeds.clone();
        speeds.resize(self.fed.clients, 1);
        speeds
    }
}
