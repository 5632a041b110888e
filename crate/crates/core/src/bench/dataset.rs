//! On-disk layout shared by every pipeline command:
//!
//! ```text
//! {root}/{problem}/{scale}/{seed}.json           instance
//! {root}/{problem}/{scale}/{seed}.meta.json      generator metadata
//! {root}/{problem}/{scale}/{seed}.sol.json       exact solution
//! {root}/{problem}/{scale}/{seed}.{model}.prob.json
//! {root}/{problem}/models/{model}.json
//! {root}/{problem}/results/...
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::bench::config::{Problem, Scale};
use crate::error::{Error, Result};
use crate::io;
use crate::mip::Assignment;
use crate::predictor::ModelKind;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceMeta {
    pub generator: String,
    pub problem: Problem,
    pub scale: Scale,
    pub seed: u64,
    pub n: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub affinity: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bids: Option<usize>,
}

/// Exact solve outcome; `objective` is absent when no solution was found.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionFile {
    pub objective: Option<f64>,
    pub values: Vec<u8>,
    pub proved_optimal: bool,
}

impl SolutionFile {
    pub fn assignment(&self) -> Option<Assignment> {
        self.objective.map(|_| Assignment::from_bits(&self.values))
    }

    /// Usable as a training label: solved and proven optimal.
    pub fn is_label(&self) -> bool {
        self.proved_optimal && self.objective.is_some()
    }
}

#[derive(Debug, Clone)]
pub struct Dataset {
    pub root: PathBuf,
}

impl Dataset {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Dataset { root: root.into() }
    }

    pub fn scale_dir(&self, problem: Problem, scale: Scale) -> PathBuf {
        self.root.join(problem.to_string()).join(scale.to_string())
    }

    fn file(&self, problem: Problem, scale: Scale, seed: u64, suffix: &str) -> PathBuf {
        self.scale_dir(problem, scale).join(format!("{seed}{suffix}"))
    }

    pub fn instance_path(&self, problem: Problem, scale: Scale, seed: u64) -> PathBuf {
        self.file(problem, scale, seed, ".json")
    }

    pub fn meta_path(&self, problem: Problem, scale: Scale, seed: u64) -> PathBuf {
        self.file(problem, scale, seed, ".meta.json")
    }

    pub fn solution_path(&self, problem: Problem, scale: Scale, seed: u64) -> PathBuf {
        self.file(problem, scale, seed, ".sol.json")
    }

    pub fn prob_path(&self, problem: Problem, scale: Scale, seed: u64, kind: ModelKind) -> PathBuf {
        let kind = match kind {
            ModelKind::Gcn => "gcn",
            ModelKind::Lr => "lr",
        };
        self.file(problem, scale, seed, &format!(".{kind}.prob.json"))
    }

    pub fn model_path(&self, problem: Problem, kind: ModelKind) -> PathBuf {
        let name = match kind {
            ModelKind::Gcn => "gcn.json",
            ModelKind::Lr => "lr.json",
        };
        self.root.join(problem.to_string()).join("models").join(name)
    }

    pub fn results_dir(&self, problem: Problem) -> PathBuf {
        self.root.join(problem.to_string()).join("results")
    }

    /// Seeds of the instances present in a split, ascending.
    pub fn seeds(&self, problem: Problem, scale: Scale) -> Result<Vec<u64>> {
        let dir = self.scale_dir(problem, scale);
        let entries = match std::fs::read_dir(&dir) {
            Ok(e) => e,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Vec::new()),
            Err(e) => return Err(Error::io(&dir, e)),
        };
        let mut seeds = Vec::new();
        for entry in entries {
            let entry = entry.map_err(|e| Error::io(&dir, e))?;
            let name = entry.file_name();
            let Some(stem) = name.to_str().and_then(|n| n.strip_suffix(".json")) else {
                continue;
            };
            if let Ok(seed) = stem.parse::<u64>() {
                seeds.push(seed);
            }
        }
        seeds.sort_unstable();
        Ok(seeds)
    }

    pub fn read_solution(&self, problem: Problem, scale: Scale, seed: u64) -> Result<SolutionFile> {
        io::read_json(&self.solution_path(problem, scale, seed))
    }
}

/// Ensures a path's parent exists; used before writing CSV outputs.
pub(crate) fn ensure_parent(path: &Path) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn layout() {
        let d = Dataset::new("/data");
        assert_eq!(
            d.instance_path(Problem::Misp, Scale::Small, 7),
            PathBuf::from("/data/misp/small/7.json")
        );
        assert_eq!(
            d.solution_path(Problem::Cap, Scale::Train, 1),
            PathBuf::from("/data/cap/train/1.sol.json")
        );
        assert_eq!(
            d.prob_path(Problem::Vcp, Scale::Large, 2, ModelKind::Lr),
            PathBuf::from("/data/vcp/large/2.lr.prob.json")
        );
        assert_eq!(d.model_path(Problem::Dsp, ModelKind::Gcn), PathBuf::from("/data/dsp/models/gcn.json"));
    }

    #[test]
    fn seeds_ignore_sidecars() {
        let tmp = tempfile::tempdir().unwrap();
        let d = Dataset::new(tmp.path());
        let dir = d.scale_dir(Problem::Misp, Scale::Train);
        std::fs::create_dir_all(&dir).unwrap();
        for name in ["3.json", "3.meta.json", "3.sol.json", "10.json", "notes.txt", "3.gcn.prob.json"] {
            std::fs::write(dir.join(name), "{}").unwrap();
        }
        assert_eq!(d.seeds(Problem::Misp, Scale::Train).unwrap(), vec![3, 10]);
        assert!(d.seeds(Problem::Misp, Scale::Small).unwrap().is_empty());
    }
}
