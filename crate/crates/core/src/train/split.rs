use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{self, Stream};

/// Disjoint train/validation/test node sets, each sorted.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Split {
    pub seed: u64,
    pub index: usize,
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub test: Vec<usize>,
}

/// `count` random 50/25/25 splits of `0..n`.
///
/// Split `i` shuffles `0..n` with the `(seed, Split, i)` stream, then takes the
/// first `⌊n/2⌋` nodes for training, the next `⌊n/4⌋` for validation and the
/// rest for testing.
pub fn make_splits(n: usize, seed: u64, count: usize) -> Result<Vec<Split>> {
    if n < 4 {
        return Err(Error::Invalid(format!("need at least 4 nodes to split, got {n}")));
    }
    (0..count)
        .map(|index| {
            let mut perm: Vec<usize> = (0..n).collect();
            perm.shuffle(&mut rng::stream(seed, Stream::Split, index as u32));
            let (n_train, n_val) = (n / 2, n / 4);
            let sorted = |s: &[usize]| {
                let mut v = s.to_vec();
                v.sort_unstable();
                v
            };
            Ok(Split {
                seed,
                index,
                train: sorted(&perm[..n_train]),
                val: sorted(&perm[n_train..n_train + n_val]),
                test: sorted(&perm[n_train + n_val..]),
            })
        })
        .collect()
}
