use std::path::{Path, PathBuf};

use macau_core::model::detect_degree;
use macau_core::{holdout_indices, load_observations, save_observations, Observation, RngStream};

use crate::error::{CliError, Result};

const SPLIT_STREAM: u64 = 0x5311;

/// Generator for the holdout of relation `relation` in split round `round`.
/// `macau split` uses relation 0, round 0, so it reproduces the split a
/// single-relation `run` makes with the same seed.
pub fn split_stream(seed: u64, relation: usize, round: usize) -> RngStream {
    RngStream::new(seed, SPLIT_STREAM).derive(&[relation as u64, round as u64])
}

/// Train and test index lists of a holdout split.
pub fn holdout(n: usize, fraction: f64, stream: &RngStream) -> Result<(Vec<usize>, Vec<usize>)> {
    holdout_indices(n, fraction, &mut stream.rng()).map_err(|e| CliError::Config(e.to_string()))
}

fn sibling(path: &Path, out_dir: Option<&Path>, tag: &str) -> PathBuf {
    let stem = path
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("observations");
    let name = match path.extension().and_then(|s| s.to_str()) {
        Some(ext) => format!("{stem}.{tag}.{ext}"),
        None => format!("{stem}.{tag}"),
    };
    out_dir
        .unwrap_or_else(|| path.parent().unwrap_or(Path::new(".")))
        .join(name)
}

/// Splits an observation file into `<stem>.train.<ext>` and
/// `<stem>.test.<ext>`, written next to the input unless `out_dir` is given.
pub fn split_file(
    path: &Path,
    fraction: f64,
    seed: u64,
    out_dir: Option<&Path>,
) -> Result<(PathBuf, PathBuf)> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(CliError::Config(format!(
            "fraction must lie in (0, 1), got {fraction}"
        )));
    }
    let degree = detect_degree(path)?;
    let obs = load_observations(path, degree)?;
    let (train, test) = holdout(obs.len(), fraction, &split_stream(seed, 0, 0))?;
    let pick = |ix: &[usize]| -> Vec<&Observation> { ix.iter().map(|&i| &obs[i]).collect() };
    let (train_path, test_path) = (
        sibling(path, out_dir, "train"),
        sibling(path, out_dir, "test"),
    );
    save_observations(&train_path, pick(&train))?;
    save_observations(&test_path, pick(&test))?;
    Ok((train_path, test_path))
}
