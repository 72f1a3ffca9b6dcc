//! Stochastic experiments.
//!
//! Every experiment draws sample `i` from stream `(seed, domain, i)` and
//! reduces per-sample results in index order, so outputs do not depend on
//! the number of rayon workers.

pub mod bridge;
pub mod corridor;
mod estimate;
pub mod local_time;
pub mod martingale;
pub mod naive;
pub mod srw;
pub mod strip;

pub use bridge::{bridge_hit_experiment, BridgeConfig, BridgeGeometry, BridgeReport, BridgeRow};
pub use corridor::{
    corridor_n, corridor_sample, default_gamma, is_lower_bound, toy_one_step_check, CorridorEstimate,
    CorridorRun, ToyCheck,
};
pub use estimate::{Estimate, SeedRecord};
pub use local_time::{local_time_profile, local_time_tail, LocalTimeProfile, TailReport};
pub use martingale::{fit_c0, martingale_experiment, martingale_track, MartingaleConfig, MartingaleReport, TrackReport};
pub use naive::{naive_mc, naive_mc_sweep, xi_on_common_paths, NaiveResult, NaiveSweep, XiSummary};
pub use srw::{srw_cover, SrwReport};
pub use strip::{strip_conditioning_check, StripReport};

use rayon::prelude::*;

use crate::error::Result;

/// Runs `f(i)` for `i < n` in parallel and returns results in index order.
pub(crate) fn par_samples<T: Send>(n: u64, f: impl Fn(u64) -> Result<T> + Sync + Send) -> Result<Vec<T>> {
    (0..n).into_par_iter().map(f).collect()
}
