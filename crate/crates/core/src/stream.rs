//! Per-trial random streams.
//!
//! Trial `k` of an experiment seeded with `seed` draws from ChaCha8 keyed by
//! `seed` on stream `k`. ChaCha is counter based, so a trial's numbers do not
//! depend on which worker runs it or in what order.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type TrialRng = ChaCha8Rng;

pub fn trial_rng(seed: u64, trial: u64) -> TrialRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

// Keeps derived seeds away from the trial streams of `seed` itself.
const DERIVE_DOMAIN: u64 = 0x6d61_6a73_696d_5f64;

/// A child seed for sub-experiment `label` (a grid point, a battery member).
pub fn derive_seed(seed: u64, label: u64) -> u64 {
    trial_rng(seed ^ DERIVE_DOMAIN, label).next_u64()
}
