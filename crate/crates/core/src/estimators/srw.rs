//! Simple random walk analogue: `n²` steps covering the sites `(1,0)…(n,0)`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{par_samples, Estimate, SeedRecord};
use crate::error::{Error, Result};
use crate::rng::{domain, StreamId};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SrwReport {
    pub n_sites: u32,
    /// Sites required: `⌈θ·n_sites⌉`.
    pub required: u32,
    /// Probability of visiting every marked site.
    pub p_all: Estimate,
    /// Probability of visiting at least `required` marked sites.
    pub p_theta: Estimate,
}

/// Number of marked sites visited by one walk of `n_sites²` steps.
fn visited_sites(n_sites: u32, rng: &mut impl Rng) -> u32 {
    let n = n_sites as i64;
    let mut seen = vec![false; n_sites as usize];
    let mut count = 0;
    let (mut x, mut y) = (0i64, 0i64);
    for _ in 0..n * n {
        match rng.random_range(0..4u8) {
            0 => x += 1,
            1 => x -= 1,
            2 => y += 1,
            _ => y -= 1,
        }
        if y == 0 && (1..=n).contains(&x) && !seen[(x - 1) as usize] {
            seen[(x - 1) as usize] = true;
            count += 1;
        }
    }
    count
}

pub fn srw_cover(n_sites: u32, n_walks: u64, theta: f64, seed: u64) -> Result<SrwReport> {
    if n_sites < 2 {
        return Err(Error::invalid("n_sites", "must be at least 2"));
    }
    if !(0.0..=1.0).contains(&theta) {
        return Err(Error::invalid("theta", "must lie in [0, 1]"));
    }
    if n_walks == 0 {
        return Err(Error::invalid("n_walks", "must be at least 1"));
    }
    let required = (theta * n_sites as f64 - 1e-9).ceil().max(0.0) as u32;
    let base = StreamId::new(seed, domain::SRW, 0);
    const CHUNK: u64 = 4096;
    let chunks = n_walks.div_ceil(CHUNK);
    let counts = par_samples(chunks, |k| {
        let mut rng = base.with_index(k).stream();
        let m = CHUNK.min(n_walks - k * CHUNK);
        let (mut all, mut enough) = (0u64, 0u64);
        for _ in 0..m {
            let v = visited_sites(n_sites, &mut rng);
            all += (v == n_sites) as u64;
            enough += (v >= required) as u64;
        }
        Ok((all, enough))
    })?;
    let (all, enough) = counts.iter().fold((0, 0), |a, b| (a.0 + b.0, a.1 + b.1));
    let seed_record = Some(SeedRecord::from(base));
    Ok(SrwReport {
        n_sites,
        required,
        p_all: Estimate::proportion(all, n_walks, seed_record),
        p_theta: Estimate::proportion(enough, n_walks, seed_record),
    })
}
