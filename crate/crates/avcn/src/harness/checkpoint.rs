//! Parameter checkpoints: the architecture header plus a flat list of named
//! f64 tensors.
//!
//! Layout (integers little-endian):
//!   magic  b"AVCNPAR1"
//!   grid_rows, in_channels, channels, layers_per_branch, dense_units,
//!     num_classes, n_filters u64, then n_filters x u64 filter sizes
//!   n_tensors u64
//!   per tensor: name_len u64, name utf-8, len u64, len x f64

use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::neural::{Architecture, NetworkParams};

const MAGIC: &[u8; 8] = b"AVCNPAR1";

pub fn save_checkpoint(path: &Path, params: &NetworkParams) -> Result<()> {
    let mut buf: Vec<u8> = Vec::new();
    buf.extend_from_slice(MAGIC);
    let a = &params.arch;
    for v in [a.grid_rows, a.in_channels, a.channels, a.layers_per_branch, a.dense_units, a.num_classes, a.filter_sizes.len()] {
        buf.extend_from_slice(&(v as u64).to_le_bytes());
    }
    for &m in &a.filter_sizes {
        buf.extend_from_slice(&(m as u64).to_le_bytes());
    }
    let tensors = params.tensors();
    buf.extend_from_slice(&(tensors.len() as u64).to_le_bytes());
    for (name, tensor) in tensors {
        buf.extend_from_slice(&(name.len() as u64).to_le_bytes());
        buf.extend_from_slice(name.as_bytes());
        buf.extend_from_slice(&(tensor.len() as u64).to_le_bytes());
        for v in tensor {
            buf.extend_from_slice(&v.to_le_bytes());
        }
    }
    std::fs::File::create(path)?.write_all(&buf)?;
    Ok(())
}

pub fn load_checkpoint(path: &Path) -> Result<NetworkParams> {
    let mut bytes = Vec::new();
    std::fs::File::open(path)?.read_to_end(&mut bytes)?;
    let mut cursor = 0usize;
    let take = |cursor: &mut usize, n: usize| -> Result<&[u8]> {
        if *cursor + n > bytes.len() {
            return Err(Error::MalformedDataset(format!("checkpoint {} is truncated", path.display())));
        }
        let s = &bytes[*cursor..*cursor + n];
        *cursor += n;
        Ok(s)
    };
    let take_u64 = |cursor: &mut usize| -> Result<u64> {
        Ok(u64::from_le_bytes(take(cursor, 8)?.try_into().unwrap()))
    };
    if take(&mut cursor, 8)? != MAGIC {
        return Err(Error::MalformedDataset(format!("{} is not a parameter checkpoint", path.display())));
    }
    let mut header = [0usize; 7];
    for h in &mut header {
        *h = take_u64(&mut cursor)? as usize;
    }
    let [grid_rows, in_channels, channels, layers_per_branch, dense_units, num_classes, n_filters] = header;
    let mut filter_sizes = Vec::with_capacity(n_filters);
    for _ in 0..n_filters {
        filter_sizes.push(take_u64(&mut cursor)? as usize);
    }
    let arch = Architecture {
        grid_rows,
        in_channels,
        channels,
        filter_sizes,
        layers_per_branch,
        dense_units,
        num_classes,
    };
    let mut params = NetworkParams::zeros(&arch)?;

    let n_tensors = take_u64(&mut cursor)? as usize;
    let mut stored: Vec<(String, Vec<f64>)> = Vec::with_capacity(n_tensors);
    for _ in 0..n_tensors {
        let name_len = take_u64(&mut cursor)? as usize;
        let name = String::from_utf8(take(&mut cursor, name_len)?.to_vec())
            .map_err(|_| Error::MalformedDataset("checkpoint tensor name is not utf-8".into()))?;
        let len = take_u64(&mut cursor)? as usize;
        let mut data = Vec::with_capacity(len);
        for _ in 0..len {
            data.push(f64::from_le_bytes(take(&mut cursor, 8)?.try_into().unwrap()));
        }
        stored.push((name, data));
    }
    if cursor != bytes.len() {
        return Err(Error::MalformedDataset(format!("checkpoint {} has trailing bytes", path.display())));
    }

    let mut targets = params.tensors_mut();
    if stored.len() != targets.len() {
        return Err(Error::MalformedDataset(format!(
            "checkpoint has {} tensors, architecture needs {}",
            stored.len(),
            targets.len()
        )));
    }
    for ((name, data), (want_name, target)) in stored.into_iter().zip(targets.iter_mut()) {
        if &name != want_name || data.len() != target.len() {
            return Err(Error::MalformedDataset(format!(
                "checkpoint tensor {name} ({} values) does not match expected {want_name} ({})",
                data.len(),
                target.len()
            )));
        }
        **target = data;
    }
    drop(targets);
    Ok(params)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn checkpoint_round_trips_bitwise() {
        let arch = Architecture {
            grid_rows: 10,
            in_channels: 2,
            channels: 4,
            filter_sizes: vec![2, 3],
            layers_per_branch: 2,
            dense_units: 6,
            num_classes: 3,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let params = NetworkParams::init(&arch, &mut rng).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("net.params");
        save_checkpoint(&path, &params).unwrap();
        let back = load_checkpoint(&path).unwrap();
        assert_eq!(back, params);
    }

    #[test]
    fn truncated_checkpoint_is_rejected() {
        let arch = Architecture {
            grid_rows: 4,
            in_channels: 1,
            channels: 2,
            filter_sizes: vec![2],
            layers_per_branch: 1,
            dense_units: 3,
            num_classes: 2,
        };
        let params = NetworkParams::zeros(&arch).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("net.params");
        save_checkpoint(&path, &params).unwrap();
        let mut bytes = std::fs::read(&path).unwrap();
        bytes.truncate(bytes.len() / 2);
        std::fs::write(&path, &bytes).unwrap();
        assert!(matches!(load_checkpoint(&path), Err(Error::MalformedDataset(_))));
    }
}
