use meterdp::tape::derive_seed;
use meterdp::BitTape;
use rayon::prelude::*;

use crate::Result;

/// Runs `trials` independent invocations in parallel. Trial `i` gets its own
/// tape seeded with `derive_seed(base_seed, i)`, so results do not depend on
/// scheduling. Output order follows the trial index.
pub fn run_batch<T, F>(trials: u64, base_seed: u64, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(&mut BitTape) -> meterdp::Result<T> + Sync,
{
    (0..trials)
        .into_par_iter()
        .map(|i| {
            let mut tape = BitTape::seeded(derive_seed(base_seed, i));
            f(&mut tape).map_err(Into::into)
        })
        .collect()
}
