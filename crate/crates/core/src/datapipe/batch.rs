use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Splits `0..n` into consecutive batches of `batch_size`, keeping the final
/// partial batch. With `shuffle`, a seeded Fisher-Yates permutation is
/// applied first.
pub fn batch_indices(n: usize, batch_size: usize, seed: u64, shuffle: bool) -> Result<Vec<Vec<usize>>> {
    if batch_size == 0 {
        return Err(Error::Config("batch size must be at least 1".into()));
    }
    let mut order: Vec<usize> = (0..n).collect();
    if shuffle {
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    }
    Ok(order.chunks(batch_size).map(<[usize]>::to_vec).collect())
}

pub fn batches<T>(items: &[T], batch_size: usize, seed: u64, shuffle: bool) -> Result<Vec<Vec<&T>>> {
    Ok(batch_indices(items.len(), batch_size, seed, shuffle)?
        .into_iter()
        .map(|b| b.into_iter().map(|i| &items[i]).collect())
        .collect())
}
