//! Certified Lipschitz constants for classical feed-forward networks,
//! quantum variational circuits and hybrid compositions of the two.

pub mod classical;
pub mod error;
pub mod hybrid;
pub mod numerics;
pub mod qlip;
pub mod quantum;
pub mod train;

pub use error::{Error, Result};

/// Independent per-index seed derived from a base seed (splitmix64 finalizer).
///
/// Every sampled item draws from `stream_seed(seed, index)`, so results do not
/// depend on the order in which items are evaluated.
pub fn stream_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed
        .wrapping_add(index.wrapping_add(1).wrapping_mul(0x9e37_79b9_7f4a_7c15));
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
