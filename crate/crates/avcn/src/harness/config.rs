//! Run configuration, validation, seed derivation, and content digests.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Everything a run needs; every field maps to a CLI flag.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub dataset_dir: PathBuf,
    pub dataset: String,
    /// Prototype count M: rows of every aligned grid.
    pub prototypes: usize,
    /// Largest expansion depth L; grids average depths 1..=L.
    pub depth: usize,
    /// Output channels of every convolution layer.
    pub channels: usize,
    pub filter_sizes: Vec<usize>,
    pub layers_per_branch: usize,
    pub dense_units: usize,
    pub dropout: f64,
    pub lr: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub folds: usize,
    pub repeats: usize,
    pub seed: u64,
    pub out: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            dataset_dir: PathBuf::new(),
            dataset: String::new(),
            prototypes: 64,
            depth: 10,
            channels: 32,
            filter_sizes: vec![3, 5, 7, 9],
            layers_per_branch: 3,
            dense_units: 64,
            dropout: 0.5,
            lr: 1e-3,
            epochs: 100,
            batch_size: 32,
            folds: 10,
            repeats: 1,
            seed: 7,
            out: PathBuf::from("avcn-report.txt"),
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        let err = |msg: String| Err(Error::InvalidParameter(msg));
        if self.prototypes < 1 || self.depth < 1 {
            return err("prototypes and depth must be >= 1".into());
        }
        if self.filter_sizes.is_empty() {
            return err("need at least one filter size".into());
        }
        let max_filter = *self.filter_sizes.iter().max().unwrap();
        // Conservative row budget: the largest filter plus two rows of
        // slack per stacked layer must fit in the grid.
        if self.prototypes < max_filter + 2 * self.layers_per_branch {
            return err(format!(
                "prototypes = {} too small for filter {} with {} layers per branch",
                self.prototypes, max_filter, self.layers_per_branch
            ));
        }
        for &m in &self.filter_sizes {
            if m < 1 {
                return err("filter sizes must be >= 1".into());
            }
            if self.layers_per_branch * (m - 1) >= self.prototypes {
                return err(format!("branch with filter {m} consumes all {} grid rows", self.prototypes));
            }
        }
        if self.layers_per_branch < 1 || self.channels < 1 || self.dense_units < 1 {
            return err("channels, layers_per_branch and dense_units must be >= 1".into());
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return err(format!("dropout {} outside [0, 1)", self.dropout));
        }
        if !self.lr.is_finite() || self.lr <= 0.0 {
            return err(format!("learning rate {} must be positive and finite", self.lr));
        }
        if self.batch_size < 1 {
            return err("batch_size must be >= 1".into());
        }
        if self.folds < 2 {
            return err("folds must be >= 2".into());
        }
        if self.repeats < 1 {
            return err("repeats must be >= 1".into());
        }
        Ok(())
    }

    /// Canonical key=value rendering of the semantic fields (paths excluded;
    /// dataset identity is captured by file digests instead).
    pub fn semantic_lines(&self) -> String {
        let mut s = String::new();
        let fs: Vec<String> = self.filter_sizes.iter().map(|m| m.to_string()).collect();
        let _ = writeln!(s, "dataset = {}", self.dataset);
        let _ = writeln!(s, "prototypes = {}", self.prototypes);
        let _ = writeln!(s, "depth = {}", self.depth);
        let _ = writeln!(s, "channels = {}", self.channels);
        let _ = writeln!(s, "filter_sizes = {}", fs.join(","));
        let _ = writeln!(s, "layers_per_branch = {}", self.layers_per_branch);
        let _ = writeln!(s, "dense_units = {}", self.dense_units);
        let _ = writeln!(s, "dropout = {}", self.dropout);
        let _ = writeln!(s, "lr = {}", self.lr);
        let _ = writeln!(s, "epochs = {}", self.epochs);
        let _ = writeln!(s, "batch_size = {}", self.batch_size);
        let _ = writeln!(s, "folds = {}", self.folds);
        let _ = writeln!(s, "repeats = {}", self.repeats);
        let _ = writeln!(s, "seed = {}", self.seed);
        s
    }

    /// Digest over the full semantic configuration plus the dataset files.
    /// Grid caches and reports carry this value; a mismatch forces
    /// recomputation rather than silent reuse.
    pub fn digest(&self) -> Result<String> {
        let mut hasher = Sha256::new();
        hasher.update(self.semantic_lines().as_bytes());
        for suffix in ["A", "graph_indicator", "graph_labels", "node_labels"] {
            let path = self.dataset_dir.join(format!("{}_{suffix}.txt", self.dataset));
            hasher.update(suffix.as_bytes());
            if path.exists() {
                hasher.update(b"+");
                hasher.update(sha256_file(&path)?);
            } else {
                hasher.update(b"-");
            }
        }
        Ok(hex(&hasher.finalize()))
    }
}

fn sha256_file(path: &Path) -> Result<Vec<u8>> {
    let bytes = std::fs::read(path)?;
    Ok(Sha256::digest(&bytes).to_vec())
}

fn hex(bytes: &[u8]) -> String {
    let mut s = String::with_capacity(bytes.len() * 2);
    for b in bytes {
        let _ = write!(s, "{b:02x}");
    }
    s
}

/// Independent RNG streams per pipeline stage, derived from the run seed.
pub mod seeds {
    const KMEANS: u64 = 1;
    const FOLDS: u64 = 2;
    const TRAIN: u64 = 3;

    /// splitmix64 finalizer: decorrelates structured (stage, index) salts.
    fn mix(mut z: u64) -> u64 {
        z = z.wrapping_add(0x9E3779B97F4A7C15);
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
        z ^ (z >> 31)
    }

    fn derive(base: u64, stage: u64, index: u64) -> u64 {
        mix(base ^ mix(stage << 56 | index))
    }

    pub fn kmeans(base: u64, depth: usize) -> u64 {
        derive(base, KMEANS, depth as u64)
    }

    pub fn folds(base: u64, repeat: usize) -> u64 {
        derive(base, FOLDS, repeat as u64)
    }

    pub fn train(base: u64, repeat: usize, fold: usize) -> u64 {
        derive(base, TRAIN, (repeat as u64) << 32 | fold as u64)
    }
}
