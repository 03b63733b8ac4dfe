//! Experiment harness: configuration, stratified folds, grid caching,
//! checkpoints, training loops, and cross-validation reports.

pub mod cache;
pub mod checkpoint;
pub mod config;
pub mod folds;
pub mod report;
pub mod train;

pub use cache::{read_grid_cache, write_grid_cache, GridSet};
pub use checkpoint::{load_checkpoint, save_checkpoint};
pub use config::RunConfig;
pub use folds::{split_folds, FoldSplit};
pub use report::{read_report, report_render, report_to_string, summarize, write_report, CvReport, FoldRecord};
pub use train::{
    compute_prototypes, prepare, prepare_cached, prepare_dataset, representations, run_cv,
    run_cv_with_cache, train_fold, CacheStatus, FoldOutcome,
};
