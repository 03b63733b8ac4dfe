//! Pipeline orchestration: representations, prototypes, grids, fold
//! training, and cross-validation.

use std::path::Path;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::align::{build_grid, kmeans, PrototypeSet};
use crate::depth::{db_representations, DbRepresentationSet};
use crate::error::{Error, Result};
use crate::graph::{load_tu_dataset, one_hot_features, Dataset};
use crate::harness::cache::{read_grid_cache, write_grid_cache, GridSet};
use crate::harness::config::{seeds, RunConfig};
use crate::harness::folds::{split_folds, FoldSplit};
use crate::harness::report::{summarize, CvReport, FoldRecord};
use crate::mat::Mat;
use crate::neural::{adam_step, forward, loss_and_gradients, AdamState, Architecture, NetworkParams};

/// Depth-based representations of every graph for depths 1..=L, in graph
/// order.
pub fn representations(dataset: &Dataset, depth: usize) -> Result<Vec<Vec<DbRepresentationSet>>> {
    dataset
        .graphs
        .iter()
        .map(|g| (1..=depth).map(|k| db_representations(g, k)).collect())
        .collect()
}

/// One prototype set per depth, clustered over the pooled vertex
/// representations of every graph (vertices visited in graph-then-vertex
/// order). Transductive by construction: graph structures of all folds
/// contribute, class labels never enter.
pub fn compute_prototypes(
    reps: &[Vec<DbRepresentationSet>],
    prototypes: usize,
    depth: usize,
    seed: u64,
) -> Result<Vec<PrototypeSet>> {
    let mut out = Vec::with_capacity(depth);
    for k in 1..=depth {
        let mut points = Vec::new();
        for graph_reps in reps {
            points.extend(graph_reps[k - 1].vectors.iter().cloned());
        }
        let result = kmeans(&points, prototypes, seeds::kmeans(seed, k), 300, 1e-6)?;
        out.push(PrototypeSet::new(result.centroids)?);
    }
    Ok(out)
}

/// Runs the alignment pipeline: load, represent, cluster, and grid every
/// graph. The returned grids are what the network trains on.
pub fn prepare(config: &RunConfig) -> Result<GridSet> {
    config.validate()?;
    let dataset = load_tu_dataset(&config.dataset_dir, &config.dataset)?;
    prepare_dataset(&dataset, config)
}

/// `prepare` for an already-loaded dataset.
pub fn prepare_dataset(dataset: &Dataset, config: &RunConfig) -> Result<GridSet> {
    let reps = representations(dataset, config.depth)?;
    let prototypes = compute_prototypes(&reps, config.prototypes, config.depth, config.seed)?;
    let mut grids = Vec::with_capacity(dataset.graphs.len());
    for (graph, graph_reps) in dataset.graphs.iter().zip(&reps) {
        let f = one_hot_features(graph, &dataset.label_alphabet)?;
        grids.push(build_grid(&f, &prototypes, graph_reps)?);
    }
    Ok(GridSet { grids, labels: dataset.class_labels(), num_classes: dataset.num_classes })
}

/// Whether `prepare_cached` served grids from disk or recomputed them.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CacheStatus {
    Hit,
    Recomputed,
}

/// Loads the grid cache at `path` when its digest matches `config`'s;
/// otherwise recomputes and rewrites it. Unreadable or stale caches are never
/// silently reused.
pub fn prepare_cached(config: &RunConfig, path: &Path) -> Result<(GridSet, CacheStatus)> {
    config.validate()?;
    let digest = config.digest()?;
    if path.exists() {
        if let Ok((stored_digest, grids)) = read_grid_cache(path) {
            if stored_digest == digest {
                return Ok((grids, CacheStatus::Hit));
            }
        }
    }
    let grids = prepare(config)?;
    write_grid_cache(path, &digest, &grids)?;
    Ok((grids, CacheStatus::Recomputed))
}

/// A trained fold: final parameters, held-out accuracy, per-epoch mean
/// training loss.
#[derive(Debug, Clone)]
pub struct FoldOutcome {
    pub params: NetworkParams,
    pub accuracy: f64,
    pub loss_curve: Vec<f64>,
}

fn architecture(config: &RunConfig, in_channels: usize, num_classes: usize) -> Architecture {
    Architecture {
        grid_rows: config.prototypes,
        in_channels,
        channels: config.channels,
        filter_sizes: config.filter_sizes.clone(),
        layers_per_branch: config.layers_per_branch,
        dense_units: config.dense_units,
        num_classes,
    }
}

/// Trains one fold with mini-batch Adam and scores the held-out fold.
///
/// Only train-side labels reach the optimizer; test labels are read once at
/// the end to compute accuracy. Fully deterministic in `seed`.
pub fn train_fold(grids: &GridSet, split: &FoldSplit, config: &RunConfig, seed: u64) -> Result<FoldOutcome> {
    if split.train.is_empty() && config.epochs > 0 {
        return Err(Error::EmptyInput("training fold is empty".into()));
    }
    let in_channels = grids.grids.first().map_or(0, Mat::cols);
    let arch = architecture(config, in_channels, grids.num_classes);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut params = NetworkParams::init(&arch, &mut rng)?;
    let mut state = AdamState::new(&params);

    let mut order = split.train.clone();
    let mut loss_curve = Vec::with_capacity(config.epochs);
    for epoch in 0..config.epochs {
        order.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        for chunk in order.chunks(config.batch_size) {
            let batch: Vec<(&Mat, usize)> = chunk.iter().map(|&i| (&grids.grids[i], grids.labels[i])).collect();
            let (loss, tape) = loss_and_gradients(&batch, &params, config.dropout, &mut rng)?;
            if !loss.is_finite() {
                return Err(Error::NumericalError(format!("loss diverged at epoch {epoch}")));
            }
            adam_step(&mut params, &tape, &mut state, config.lr, 0.9, 0.999, 1e-8)?;
            loss_sum += loss * chunk.len() as f64;
        }
        loss_curve.push(loss_sum / split.train.len() as f64);
    }

    let mut correct = 0usize;
    for &i in &split.test {
        let probs = forward(&grids.grids[i], &params, 0.0, false, &mut rng)?;
        let predicted = argmax(&probs);
        if predicted == grids.labels[i] {
            correct += 1;
        }
    }
    let accuracy = if split.test.is_empty() { 0.0 } else { correct as f64 / split.test.len() as f64 };
    Ok(FoldOutcome { params, accuracy, loss_curve })
}

/// Highest-probability class, ties to the lowest index.
fn argmax(probs: &[f64]) -> usize {
    let mut best = 0;
    for (i, &p) in probs.iter().enumerate() {
        if p > probs[best] {
            best = i;
        }
    }
    best
}

/// Full cross-validation: prepare grids, split stratified folds, train each
/// fold, and aggregate mean accuracy with its standard error. With
/// `repeats > 1` the whole experiment reruns on fresh fold splits and all
/// fold accuracies pool into the summary.
pub fn run_cv(config: &RunConfig) -> Result<CvReport> {
    run_cv_with_cache(config, None)
}

/// `run_cv`, optionally reusing (or creating) a grid cache file.
pub fn run_cv_with_cache(config: &RunConfig, cache: Option<&Path>) -> Result<CvReport> {
    config.validate()?;
    let digest = config.digest()?;
    let started = Instant::now();
    let grids = match cache {
        Some(path) => prepare_cached(config, path)?.0,
        None => prepare(config)?,
    };

    let mut records = Vec::with_capacity(config.folds * config.repeats);
    for repeat in 0..config.repeats {
        let splits = split_folds(&grids.labels, config.folds, seeds::folds(config.seed, repeat))?;
        for (fold, split) in splits.iter().enumerate() {
            let fold_start = Instant::now();
            let outcome = train_fold(&grids, split, config, seeds::train(config.seed, repeat, fold))?;
            records.push(FoldRecord {
                repeat,
                fold,
                accuracy: outcome.accuracy,
                loss_curve: outcome.loss_curve,
                seconds: fold_start.elapsed().as_secs_f64(),
            });
        }
    }

    let accuracies: Vec<f64> = records.iter().map(|r| r.accuracy).collect();
    let (mean_accuracy, std_error) = summarize(&accuracies);
    Ok(CvReport {
        config: config.clone(),
        digest,
        folds: records,
        mean_accuracy,
        std_error,
        total_seconds: started.elapsed().as_secs_f64(),
    })
}
