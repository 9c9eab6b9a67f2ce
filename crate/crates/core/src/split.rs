//! Random train/test partitions.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{Error, Result};

/// Sorted `(train, test)` positions of a random partition of `0..n` with
/// `round(fraction·n)` test items.
pub fn holdout_indices<R: Rng + ?Sized>(
    n: usize,
    fraction: f64,
    rng: &mut R,
) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "holdout fraction must be in (0, 1), got {fraction}"
        )));
    }
    if n < 2 {
        return Err(Error::InvalidParameter(format!(
            "need at least 2 observations to split, have {n}"
        )));
    }
    let n_test = (fraction * n as f64).round() as usize;
    if n_test == 0 || n_test == n {
        return Err(Error::InvalidParameter(format!(
            "fraction {fraction} of {n} observations leaves an empty side"
        )));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let mut test = order[..n_test].to_vec();
    let mut train = order[n_test..].to_vec();
    test.sort_unstable();
    train.sort_unstable();
    Ok((train, test))
}

/// Splits `items` into `(train, test)` preserving the original order on each side.
pub fn split_holdout<T: Clone, R: Rng + ?Sized>(
    items: &[T],
    fraction: f64,
    rng: &mut R,
) -> Result<(Vec<T>, Vec<T>)> {
    let (train, test) = holdout_indices(items.len(), fraction, rng)?;
    Ok((
        train.iter().map(|&i| items[i].clone()).collect(),
        test.iter().map(|&i| items[i].clone()).collect(),
    ))
}
