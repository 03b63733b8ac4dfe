//! Binary grid cache.
//!
//! Layout (all integers little-endian):
//!   magic  b"AVCNGRD1"
//!   digest_len u32, digest bytes (ascii hex of the producing config digest)
//!   n_graphs u64, rows u64, cols u64, num_classes u64
//!   labels   n_graphs x u32
//!   grids    n_graphs x rows x cols x f64
//!
//! A cache is only reused when its stored digest equals the digest of the
//! requesting configuration; any mismatch or decode failure forces a
//! recomputation.

use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::mat::Mat;

/// Aligned grids plus class labels for every graph of a dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSet {
    pub grids: Vec<Mat>,
    pub labels: Vec<usize>,
    pub num_classes: usize,
}

const MAGIC: &[u8; 8] = b"AVCNGRD1";

pub fn write_grid_cache(path: &Path, digest: &str, grids: &GridSet) -> Result<()> {
    let mut buf: Vec<u8> = Vec::new();
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&(digest.len() as u32).to_le_bytes());
    buf.extend_from_slice(digest.as_bytes());
    let rows = grids.grids.first().map_or(0, Mat::rows);
    let cols = grids.grids.first().map_or(0, Mat::cols);
    for h in [grids.grids.len() as u64, rows as u64, cols as u64, grids.num_classes as u64] {
        buf.extend_from_slice(&h.to_le_bytes());
    }
    for &label in &grids.labels {
        buf.extend_from_slice(&(label as u32).to_le_bytes());
    }
    for grid in &grids.grids {
        debug_assert!(grid.rows() == rows && grid.cols() == cols);
        for v in grid.as_slice() {
            buf.extend_from_slice(&v.to_le_bytes());
        }
    }
    let mut file = std::fs::File::create(path)?;
    file.write_all(&buf)?;
    Ok(())
}

/// Reads a cache file and the digest it was produced under.
pub fn read_grid_cache(path: &Path) -> Result<(String, GridSet)> {
    let mut bytes = Vec::new();
    std::fs::File::open(path)?.read_to_end(&mut bytes)?;
    let mut cursor = 0usize;
    let take = |cursor: &mut usize, n: usize| -> Result<&[u8]> {
        if *cursor + n > bytes.len() {
            return Err(Error::MalformedDataset(format!("grid cache {} is truncated", path.display())));
        }
        let s = &bytes[*cursor..*cursor + n];
        *cursor += n;
        Ok(s)
    };
    if take(&mut cursor, 8)? != MAGIC {
        return Err(Error::MalformedDataset(format!("{} is not a grid cache", path.display())));
    }
    let digest_len = u32::from_le_bytes(take(&mut cursor, 4)?.try_into().unwrap()) as usize;
    let digest = String::from_utf8(take(&mut cursor, digest_len)?.to_vec())
        .map_err(|_| Error::MalformedDataset("grid cache digest is not utf-8".into()))?;
    let mut header = [0u64; 4];
    for h in &mut header {
        *h = u64::from_le_bytes(take(&mut cursor, 8)?.try_into().unwrap());
    }
    let [n, rows, cols, num_classes] = header.map(|v| v as usize);
    let mut labels = Vec::with_capacity(n);
    for _ in 0..n {
        labels.push(u32::from_le_bytes(take(&mut cursor, 4)?.try_into().unwrap()) as usize);
    }
    let mut grids = Vec::with_capacity(n);
    for _ in 0..n {
        let mut data = Vec::with_capacity(rows * cols);
        for _ in 0..rows * cols {
            data.push(f64::from_le_bytes(take(&mut cursor, 8)?.try_into().unwrap()));
        }
        grids.push(Mat::from_vec(rows, cols, data));
    }
    if cursor != bytes.len() {
        return Err(Error::MalformedDataset(format!("grid cache {} has trailing bytes", path.display())));
    }
    Ok((digest, GridSet { grids, labels, num_classes }))
}
