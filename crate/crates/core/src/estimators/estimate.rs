use serde::{Deserialize, Serialize};

use crate::rng::StreamId;
use crate::stats::wilson_stderr;

/// Seed provenance of an estimate built from many per-sample streams.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeedRecord {
    pub seed: u64,
    pub domain: u64,
}

impl From<StreamId> for SeedRecord {
    fn from(id: StreamId) -> Self {
        SeedRecord {
            seed: id.seed,
            domain: id.domain,
        }
    }
}

/// A Monte Carlo result. With `log_domain` set, `mean` is the natural log of
/// the quantity and `stderr` the (delta-method) standard error of that log.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub stderr: f64,
    pub n: u64,
    pub seed_record: Option<SeedRecord>,
    pub log_domain: bool,
}

impl Estimate {
    pub fn new(mean: f64, stderr: f64, n: u64, seed_record: Option<SeedRecord>) -> Self {
        Estimate {
            mean,
            stderr,
            n,
            seed_record,
            log_domain: false,
        }
    }

    /// Proportion of successes with a Wilson standard error.
    pub fn proportion(successes: u64, n: u64, seed_record: Option<SeedRecord>) -> Self {
        Estimate::new(successes as f64 / n as f64, wilson_stderr(successes, n), n, seed_record)
    }

    /// Exact value (no sampling noise).
    pub fn exact(value: f64, n: u64, seed_record: Option<SeedRecord>) -> Self {
        Estimate::new(value, 0.0, n, seed_record)
    }

    /// `|a − b| / √(σa² + σb²)`; infinite when both are exact and differ.
    pub fn z_distance(&self, other: &Estimate) -> f64 {
        let diff = (self.mean - other.mean).abs();
        let se = self.stderr.hypot(other.stderr);
        if se == 0.0 {
            if diff == 0.0 {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            diff / se
        }
    }

    pub fn agrees_with(&self, other: &Estimate, sigmas: f64) -> bool {
        self.z_distance(other) <= sigmas
    }
}
