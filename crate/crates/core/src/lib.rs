//! Stratified graph sampling via weighted random walks.
//!
//! The crate provides the pieces needed to sample a large undirected graph by
//! crawling, while controlling how much effort lands in each node category:
//!
//! * [`graph`] — immutable weighted graph plus category bookkeeping,
//! * [`walk`] — UIS/WIS independence samplers and RW/MHRW/WRW walkers,
//! * [`estimate`] — Hansen-Hurwitz re-weighted estimators and NRMSE,
//! * [`stratify`] — closed-form allocation objectives, weights and gains,
//! * [`pipeline`] — the stratified weighted random walk (S-WRW) heuristic,
//! * [`generate`] / [`experiment`] — synthetic scenarios and the replication
//!   harness,
//! * [`io`] — file formats (edge lists, category files, CSV reports).

pub mod error;
pub mod estimate;
pub mod experiment;
pub mod generate;
pub mod graph;
pub mod io;
pub mod pipeline;
pub mod stratify;
pub mod walk;

pub use error::{Error, Result};

/// Derive a per-task seed from a master seed and a task index.
///
/// Splitmix64 over `master ^ rotate(index)`; replications, pilot walks, and
/// retries all take their RNG streams from here so that a single master seed
/// reproduces an entire run.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    let mut z = master ^ index.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
