use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_with::{DeserializeFromStr, SerializeDisplay};

use crate::error::{Error, Result};
use crate::predictor::{ModelKind, TrainConfig};
use crate::search::{ScoreVariant, Termination};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Problem {
    Misp,
    Dsp,
    Vcp,
    Cap,
}

impl Problem {
    pub fn is_graph(self) -> bool {
        self != Problem::Cap
    }
}

impl fmt::Display for Problem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Problem::Misp => "misp",
            Problem::Dsp => "dsp",
            Problem::Vcp => "vcp",
            Problem::Cap => "cap",
        })
    }
}

/// Dataset split: the training pool or one of the three test scales.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Scale {
    Train,
    Small,
    Medium,
    Large,
}

impl Scale {
    pub const TEST: [Scale; 3] = [Scale::Small, Scale::Medium, Scale::Large];

    fn index(self) -> u64 {
        match self {
            Scale::Train => 0,
            Scale::Small => 1,
            Scale::Medium => 2,
            Scale::Large => 3,
        }
    }
}

impl fmt::Display for Scale {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scale::Train => "train",
            Scale::Small => "small",
            Scale::Medium => "medium",
            Scale::Large => "large",
        })
    }
}

/// Heuristic run by `cmd_heuristic`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, SerializeDisplay, DeserializeFromStr)]
pub enum Method {
    PbdfsGcn,
    PbdfsLr,
    PbdfsOracle,
    Dfs,
    Rounding,
}

impl Method {
    pub const ALL: [Method; 5] = [
        Method::PbdfsGcn,
        Method::PbdfsLr,
        Method::PbdfsOracle,
        Method::Dfs,
        Method::Rounding,
    ];

    /// Model whose predictions drive the method, if any.
    pub fn model(self) -> Option<ModelKind> {
        match self {
            Method::PbdfsGcn => Some(ModelKind::Gcn),
            Method::PbdfsLr => Some(ModelKind::Lr),
            _ => None,
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::PbdfsGcn => "pbdfs-gcn",
            Method::PbdfsLr => "pbdfs-lr",
            Method::PbdfsOracle => "pbdfs-oracle",
            Method::Dfs => "dfs",
            Method::Rounding => "rounding",
        })
    }
}

impl FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.to_string() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown method {s:?}")))
    }
}

/// Instance size: node count for graph problems, item count for auctions.
/// `affinity` applies to graphs and `bids` to auctions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Size {
    pub n: usize,
    #[serde(default = "default_affinity")]
    pub affinity: usize,
    #[serde(default)]
    pub bids: usize,
}

/// Training instances draw `n` uniformly from `[min_n, max_n]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SizeRange {
    pub min_n: usize,
    pub max_n: usize,
    #[serde(default = "default_affinity")]
    pub affinity: usize,
    #[serde(default)]
    pub bids: usize,
}

fn default_affinity() -> usize {
    4
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sizes {
    pub small: Size,
    pub medium: Size,
    pub large: Size,
}

impl Sizes {
    pub fn get(&self, scale: Scale) -> Option<Size> {
        match scale {
            Scale::Train => None,
            Scale::Small => Some(self.small),
            Scale::Medium => Some(self.medium),
            Scale::Large => Some(self.large),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Counts {
    pub train: usize,
    pub test: usize,
}

impl Default for Counts {
    fn default() -> Self {
        Counts { train: 100, test: 20 }
    }
}

/// Per-instance budget of the exact solver. Instances that hit it keep their
/// best solution but are flagged and left out of training.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LabelLimits {
    pub node_limit: Option<usize>,
    pub time_limit: Option<f64>,
}

impl Default for LabelLimits {
    fn default() -> Self {
        LabelLimits {
            node_limit: None,
            time_limit: Some(60.0),
        }
    }
}

/// Everything a pipeline run depends on besides the dataset directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub problem: Problem,
    pub seed: u64,
    pub counts: Counts,
    /// Problem-specific defaults apply when absent.
    pub train_size: Option<SizeRange>,
    pub sizes: Option<Sizes>,
    pub model: ModelKind,
    pub score: ScoreVariant,
    pub termination: Termination,
    /// Wall-clock budget the best-solution time is judged against.
    pub cutoff_s: f64,
    pub methods: Vec<Method>,
    pub label: LabelLimits,
    pub training: TrainConfig,
    /// Worker threads for per-instance work; 0 uses every core.
    pub workers: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            problem: Problem::Misp,
            seed: 0,
            counts: Counts::default(),
            train_size: None,
            sizes: None,
            model: ModelKind::Gcn,
            score: ScoreVariant::MaxP1mp,
            termination: Termination::TimeLimit(20.0),
            cutoff_s: 20.0,
            methods: Method::ALL.to_vec(),
            label: LabelLimits::default(),
            training: TrainConfig::default(),
            workers: 1,
        }
    }
}

impl ExperimentConfig {
    /// Reads TOML or JSON, chosen by extension (anything but `.json` is TOML).
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| match e.kind() {
            std::io::ErrorKind::NotFound => Error::Missing(path.to_path_buf()),
            _ => Error::io(path, e),
        })?;
        let config: ExperimentConfig = if path.extension().is_some_and(|e| e == "json") {
            serde_json::from_str(&text).map_err(|e| Error::parse(path, e))?
        } else {
            toml::from_str(&text).map_err(|e| Error::parse(path, e))?
        };
        config.validate()?;
        Ok(config)
    }

    pub fn train_size(&self) -> SizeRange {
        self.train_size.unwrap_or(match self.problem {
            Problem::Cap => SizeRange {
                min_n: 40,
                max_n: 40,
                affinity: 4,
                bids: 150,
            },
            _ => SizeRange {
                min_n: 50,
                max_n: 100,
                affinity: 4,
                bids: 0,
            },
        })
    }

    pub fn sizes(&self) -> Sizes {
        self.sizes.unwrap_or(match self.problem {
            Problem::Cap => Sizes {
                small: Size { n: 40, affinity: 4, bids: 150 },
                medium: Size { n: 60, affinity: 4, bids: 225 },
                large: Size { n: 80, affinity: 4, bids: 300 },
            },
            _ => Sizes {
                small: Size { n: 200, affinity: 4, bids: 0 },
                medium: Size { n: 300, affinity: 4, bids: 0 },
                large: Size { n: 500, affinity: 4, bids: 0 },
            },
        })
    }

    pub fn count(&self, scale: Scale) -> usize {
        match scale {
            Scale::Train => self.counts.train,
            _ => self.counts.test,
        }
    }

    /// Seed of the `i`-th instance of a split. Splits never share seeds.
    pub fn instance_seed(&self, scale: Scale, i: usize) -> u64 {
        self.seed * 10_000_000 + scale.index() * 1_000_000 + i as u64
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidArgument(msg));
        if self.counts.train == 0 || self.counts.test == 0 {
            return bad("instance counts must be at least 1".into());
        }
        let s = self.sizes();
        if !(s.small.n < s.medium.n && s.medium.n < s.large.n) {
            return bad(format!(
                "sizes must increase strictly: {} / {} / {}",
                s.small.n, s.medium.n, s.large.n
            ));
        }
        let t = self.train_size();
        if t.min_n > t.max_n {
            return bad(format!("train size range {}..{} is empty", t.min_n, t.max_n));
        }
        let min_n = t.min_n.min(s.small.n);
        if self.problem.is_graph() {
            if min_n < 2 {
                return bad("graphs need at least 2 nodes".into());
            }
            if [t.affinity, s.small.affinity, s.medium.affinity, s.large.affinity].contains(&0) {
                return bad("affinity must be at least 1".into());
            }
        } else if min_n < 1 || [t.bids, s.small.bids, s.medium.bids, s.large.bids].contains(&0) {
            return bad("auctions need at least one item and one bid".into());
        }
        if self.cutoff_s <= 0.0 {
            return bad("cutoff must be positive".into());
        }
        Ok(())
    }
}
