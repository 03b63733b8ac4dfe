//! Cross-validation report: a deterministic structured text file plus a
//! human-readable rendering.
//!
//! # File schema (version 1)
//!
//! ```text
//! avcn-report 1
//! [config]
//! dataset_dir = <path>
//! dataset = <name>
//! prototypes = <int>          depth, channels, layers_per_branch,
//! ...                         dense_units, epochs, batch_size, folds,
//! filter_sizes = 3,5,7,9      repeats, seed: one `key = value` per line
//! dropout = <float>           floats in shortest round-trip form
//! lr = <float>
//! out = <path>
//! digest = <hex sha-256 of config + dataset files>
//! [folds]
//! <repeat> <fold> <accuracy>       one line per trained fold
//! [curves]
//! <repeat> <fold> <l1,l2,...>      mean training loss per epoch
//! [summary]
//! mean_accuracy = <float>
//! std_error = <float>
//! ```
//!
//! Identical configuration and seed produce a byte-identical file: floats are
//! written in Rust's shortest round-trip form and every section is emitted in
//! a fixed order. Wall-clock timings are real measurements and therefore live
//! in a sidecar (`<path>.timings`, same key-value style) that the determinism
//! guarantee does not cover.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::harness::config::RunConfig;

/// One trained fold within a cross-validation run.
#[derive(Debug, Clone, PartialEq)]
pub struct FoldRecord {
    pub repeat: usize,
    pub fold: usize,
    pub accuracy: f64,
    /// Mean training loss per epoch.
    pub loss_curve: Vec<f64>,
    /// Wall-clock training time; excluded from the deterministic file.
    pub seconds: f64,
}

/// Aggregated cross-validation results.
#[derive(Debug, Clone, PartialEq)]
pub struct CvReport {
    pub config: RunConfig,
    pub digest: String,
    pub folds: Vec<FoldRecord>,
    pub mean_accuracy: f64,
    pub std_error: f64,
    /// Wall-clock total; excluded from the deterministic file.
    pub total_seconds: f64,
}

/// Mean and standard error (sample standard deviation over sqrt n) of fold
/// accuracies. A single fold has standard error 0.
pub fn summarize(accuracies: &[f64]) -> (f64, f64) {
    if accuracies.is_empty() {
        return (0.0, 0.0);
    }
    let n = accuracies.len() as f64;
    let mean = accuracies.iter().sum::<f64>() / n;
    if accuracies.len() < 2 {
        return (mean, 0.0);
    }
    let var = accuracies.iter().map(|a| (a - mean) * (a - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt() / n.sqrt())
}

/// Serializes the deterministic report body.
pub fn report_to_string(report: &CvReport) -> String {
    let c = &report.config;
    let mut s = String::new();
    let fs: Vec<String> = c.filter_sizes.iter().map(|m| m.to_string()).collect();
    let _ = writeln!(s, "avcn-report 1");
    let _ = writeln!(s, "[config]");
    let _ = writeln!(s, "dataset_dir = {}", c.dataset_dir.display());
    let _ = writeln!(s, "dataset = {}", c.dataset);
    let _ = writeln!(s, "prototypes = {}", c.prototypes);
    let _ = writeln!(s, "depth = {}", c.depth);
    let _ = writeln!(s, "channels = {}", c.channels);
    let _ = writeln!(s, "filter_sizes = {}", fs.join(","));
    let _ = writeln!(s, "layers_per_branch = {}", c.layers_per_branch);
    let _ = writeln!(s, "dense_units = {}", c.dense_units);
    let _ = writeln!(s, "dropout = {}", c.dropout);
    let _ = writeln!(s, "lr = {}", c.lr);
    let _ = writeln!(s, "epochs = {}", c.epochs);
    let _ = writeln!(s, "batch_size = {}", c.batch_size);
    let _ = writeln!(s, "folds = {}", c.folds);
    let _ = writeln!(s, "repeats = {}", c.repeats);
    let _ = writeln!(s, "seed = {}", c.seed);
    let _ = writeln!(s, "out = {}", c.out.display());
    let _ = writeln!(s, "digest = {}", report.digest);
    let _ = writeln!(s, "[folds]");
    for f in &report.folds {
        let _ = writeln!(s, "{} {} {}", f.repeat, f.fold, f.accuracy);
    }
    let _ = writeln!(s, "[curves]");
    for f in &report.folds {
        let curve: Vec<String> = f.loss_curve.iter().map(|l| l.to_string()).collect();
        let _ = writeln!(s, "{} {} {}", f.repeat, f.fold, curve.join(","));
    }
    let _ = writeln!(s, "[summary]");
    let _ = writeln!(s, "mean_accuracy = {}", report.mean_accuracy);
    let _ = writeln!(s, "std_error = {}", report.std_error);
    s
}

fn timings_path(path: &Path) -> PathBuf {
    let mut os = path.as_os_str().to_os_string();
    os.push(".timings");
    PathBuf::from(os)
}

/// Writes the deterministic report to `path` and the wall-clock measurements
/// to `path.timings`.
pub fn write_report(report: &CvReport, path: &Path) -> Result<()> {
    std::fs::write(path, report_to_string(report))?;
    let mut t = String::new();
    let _ = writeln!(t, "total_seconds = {}", report.total_seconds);
    for f in &report.folds {
        let _ = writeln!(t, "fold {} {} seconds = {}", f.repeat, f.fold, f.seconds);
    }
    std::fs::write(timings_path(path), t)?;
    Ok(())
}

/// Parses a report written by `write_report`; restores timings from the
/// sidecar when present.
pub fn read_report(path: &Path) -> Result<CvReport> {
    let text = std::fs::read_to_string(path)?;
    let mut report = parse_report(&text, path)?;
    let tpath = timings_path(path);
    if tpath.exists() {
        let ttext = std::fs::read_to_string(&tpath)?;
        for line in ttext.lines() {
            if let Some(rest) = line.strip_prefix("total_seconds = ") {
                report.total_seconds = parse_f64(rest, path)?;
            } else if let Some(rest) = line.strip_prefix("fold ") {
                let mut it = rest.split_whitespace();
                let bad = || Error::MalformedDataset(format!("{}: bad timings line {line:?}", path.display()));
                let repeat: usize = it.next().ok_or_else(bad)?.parse().map_err(|_| bad())?;
                let fold: usize = it.next().ok_or_else(bad)?.parse().map_err(|_| bad())?;
                let seconds: f64 = match (it.next(), it.next(), it.next()) {
                    (Some("seconds"), Some("="), Some(v)) => v.parse().map_err(|_| bad())?,
                    _ => return Err(bad()),
                };
                if let Some(f) = report.folds.iter_mut().find(|f| f.repeat == repeat && f.fold == fold) {
                    f.seconds = seconds;
                }
            }
        }
    }
    Ok(report)
}

fn parse_f64(text: &str, path: &Path) -> Result<f64> {
    text.trim()
        .parse::<f64>()
        .map_err(|_| Error::MalformedDataset(format!("{}: expected float, got {text:?}", path.display())))
}

fn parse_report(text: &str, path: &Path) -> Result<CvReport> {
    let bad = |msg: &str| Error::MalformedDataset(format!("{}: {msg}", path.display()));
    let mut lines = text.lines().peekable();
    if lines.next() != Some("avcn-report 1") {
        return Err(bad("missing `avcn-report 1` header"));
    }
    if lines.next() != Some("[config]") {
        return Err(bad("missing [config] section"));
    }
    let mut config = RunConfig::default();
    let mut digest = String::new();
    while let Some(&line) = lines.peek() {
        if line.starts_with('[') {
            break;
        }
        lines.next();
        let (key, value) = line
            .split_once(" = ")
            .ok_or_else(|| bad(&format!("bad config line {line:?}")))?;
        let int = |v: &str| -> Result<usize> { v.parse().map_err(|_| bad(&format!("bad integer {v:?}"))) };
        match key {
            "dataset_dir" => config.dataset_dir = PathBuf::from(value),
            "dataset" => config.dataset = value.to_string(),
            "prototypes" => config.prototypes = int(value)?,
            "depth" => config.depth = int(value)?,
            "channels" => config.channels = int(value)?,
            "filter_sizes" => {
                config.filter_sizes = value
                    .split(',')
                    .map(|v| int(v.trim()))
                    .collect::<Result<Vec<_>>>()?;
            }
            "layers_per_branch" => config.layers_per_branch = int(value)?,
            "dense_units" => config.dense_units = int(value)?,
            "dropout" => config.dropout = parse_f64(value, path)?,
            "lr" => config.lr = parse_f64(value, path)?,
            "epochs" => config.epochs = int(value)?,
            "batch_size" => config.batch_size = int(value)?,
            "folds" => config.folds = int(value)?,
            "repeats" => config.repeats = int(value)?,
            "seed" => config.seed = value.parse().map_err(|_| bad(&format!("bad seed {value:?}")))?,
            "out" => config.out = PathBuf::from(value),
            "digest" => digest = value.to_string(),
            other => return Err(bad(&format!("unknown config key {other:?}"))),
        }
    }

    if lines.next() != Some("[folds]") {
        return Err(bad("missing [folds] section"));
    }
    let mut folds: Vec<FoldRecord> = Vec::new();
    while let Some(&line) = lines.peek() {
        if line.starts_with('[') {
            break;
        }
        lines.next();
        let mut it = line.split_whitespace();
        let parse_idx = |v: Option<&str>| -> Result<usize> {
            v.ok_or_else(|| bad(&format!("bad fold line {line:?}")))?
                .parse()
                .map_err(|_| bad(&format!("bad fold line {line:?}")))
        };
        let repeat = parse_idx(it.next())?;
        let fold = parse_idx(it.next())?;
        let accuracy = parse_f64(it.next().ok_or_else(|| bad(&format!("bad fold line {line:?}")))?, path)?;
        folds.push(FoldRecord { repeat, fold, accuracy, loss_curve: Vec::new(), seconds: 0.0 });
    }

    if lines.next() != Some("[curves]") {
        return Err(bad("missing [curves] section"));
    }
    while let Some(&line) = lines.peek() {
        if line.starts_with('[') {
            break;
        }
        lines.next();
        let mut it = line.splitn(3, ' ');
        let badl = || bad(&format!("bad curve line {line:?}"));
        let repeat: usize = it.next().ok_or_else(badl)?.parse().map_err(|_| badl())?;
        let fold: usize = it.next().ok_or_else(badl)?.parse().map_err(|_| badl())?;
        let curve_text = it.next().unwrap_or("");
        let mut curve = Vec::new();
        if !curve_text.is_empty() {
            for v in curve_text.split(',') {
                curve.push(parse_f64(v, path)?);
            }
        }
        let record = folds
            .iter_mut()
            .find(|f| f.repeat == repeat && f.fold == fold)
            .ok_or_else(|| bad(&format!("curve for unknown fold {repeat} {fold}")))?;
        record.loss_curve = curve;
    }

    if lines.next() != Some("[summary]") {
        return Err(bad("missing [summary] section"));
    }
    let mut mean_accuracy = 0.0;
    let mut std_error = 0.0;
    for line in lines {
        if let Some(v) = line.strip_prefix("mean_accuracy = ") {
            mean_accuracy = parse_f64(v, path)?;
        } else if let Some(v) = line.strip_prefix("std_error = ") {
            std_error = parse_f64(v, path)?;
        }
    }

    Ok(CvReport { config, digest, folds, mean_accuracy, std_error, total_seconds: 0.0 })
}

/// Fixed-layout human-readable summary.
pub fn report_render(report: &CvReport) -> String {
    let c = &report.config;
    let fs: Vec<String> = c.filter_sizes.iter().map(|m| m.to_string()).collect();
    let mut s = String::new();
    let _ = writeln!(s, "dataset {}  graphs into {} folds x {} repeats  seed {}", c.dataset, c.folds, c.repeats, c.seed);
    let _ = writeln!(
        s,
        "prototypes {}  depth {}  channels {}  filters {}  layers {}  dense {}",
        c.prototypes, c.depth, c.channels, fs.join(","), c.layers_per_branch, c.dense_units
    );
    let _ = writeln!(s, "dropout {}  lr {}  epochs {}  batch {}", c.dropout, c.lr, c.epochs, c.batch_size);
    let _ = writeln!(s, "config digest {}", &report.digest[..report.digest.len().min(16)]);
    let _ = writeln!(s);
    let _ = writeln!(s, "repeat  fold  accuracy");
    for f in &report.folds {
        let _ = writeln!(s, "{:>6}  {:>4}  {:>8.4}", f.repeat, f.fold, f.accuracy);
    }
    let _ = writeln!(s);
    let _ = writeln!(s, "mean accuracy  {:.4}", report.mean_accuracy);
    let _ = writeln!(s, "std error      {:.4}", report.std_error);
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_report() -> CvReport {
        let config = RunConfig {
            dataset_dir: PathBuf::from("data/SAMPLE"),
            dataset: "SAMPLE".into(),
            out: PathBuf::from("out.txt"),
            ..RunConfig::default()
        };
        let folds = vec![
            FoldRecord { repeat: 0, fold: 0, accuracy: 0.8, loss_curve: vec![0.7, 0.6], seconds: 1.25 },
            FoldRecord { repeat: 0, fold: 1, accuracy: 0.9, loss_curve: vec![0.71, 0.59], seconds: 1.5 },
        ];
        let (mean_accuracy, std_error) = summarize(&[0.8, 0.9]);
        CvReport { config, digest: "feedc0de".into(), folds, mean_accuracy, std_error, total_seconds: 2.75 }
    }

    #[test]
    fn two_point_summary_matches_hand_calculation() {
        // std dev of {0.8, 0.9} is 0.0707...; over sqrt(2) gives exactly 0.05.
        let (mean, se) = summarize(&[0.8, 0.9]);
        assert!((mean - 0.85).abs() < 1e-12);
        assert!((se - 0.05).abs() < 1e-12);
        let (m1, se1) = summarize(&[1.0, 1.0, 1.0]);
        assert_eq!((m1, se1), (1.0, 0.0));
        assert_eq!(summarize(&[0.75]), (0.75, 0.0));
    }

    #[test]
    fn report_round_trips_through_disk() {
        let report = sample_report();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("report.txt");
        write_report(&report, &path).unwrap();
        let back = read_report(&path).unwrap();
        assert_eq!(back, report);
    }

    #[test]
    fn serialization_is_deterministic() {
        let report = sample_report();
        assert_eq!(report_to_string(&report), report_to_string(&report));
    }

    #[test]
    fn summary_recomputes_from_folds_to_1e12() {
        let report = sample_report();
        let accs: Vec<f64> = report.folds.iter().map(|f| f.accuracy).collect();
        let (mean, se) = summarize(&accs);
        assert!((mean - report.mean_accuracy).abs() < 1e-12);
        assert!((se - report.std_error).abs() < 1e-12);
    }

    #[test]
    fn render_prints_mean_and_std_error() {
        let rendered = report_render(&sample_report());
        assert!(rendered.contains("mean accuracy  0.85"), "{rendered}");
        assert!(rendered.contains("std error      0.05"), "{rendered}");
        assert!(rendered.contains("feedc0de"));
        // Digest line changes iff config digest changes.
        let mut other = sample_report();
        other.digest = "0ddba11".into();
        assert_ne!(report_render(&other), rendered);
    }

    #[test]
    fn malformed_reports_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("report.txt");
        std::fs::write(&path, "not a report\n").unwrap();
        assert!(matches!(read_report(&path), Err(Error::MalformedDataset(_))));
    }
}
