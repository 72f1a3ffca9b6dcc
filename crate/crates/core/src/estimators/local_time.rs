//! Binned local time of one-dimensional Brownian motion and the tail of its
//! supremum `U = sup_x L(x, 1)`.

use serde::{Deserialize, Serialize};

use super::par_samples;
use crate::error::{ensure_finite, Error, Result};
use crate::paths::sample_walk_1d;
use crate::rng::{domain, StreamId};
use crate::stats::{linear_fit, LinearFit};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalTimeProfile {
    pub bin_width: f64,
    /// Bin `k` is centred at `k·bin_width`.
    pub bin_centers: Vec<f64>,
    /// Occupation time in the bin divided by its width.
    pub density: Vec<f64>,
    pub sup_stat: f64,
}

impl LocalTimeProfile {
    /// `Σ density·bin_width`, which equals the path duration.
    pub fn total_time(&self) -> f64 {
        self.density.iter().sum::<f64>() * self.bin_width
    }

    /// Density of the bin containing `x` (0 outside the visited range).
    pub fn density_at(&self, x: f64) -> f64 {
        let k = (x / self.bin_width).round();
        let k0 = (self.bin_centers[0] / self.bin_width).round();
        let i = k - k0;
        if i < 0.0 || i as usize >= self.density.len() {
            0.0
        } else {
            self.density[i as usize]
        }
    }
}

/// Each step contributes `dt` to the bin of its left endpoint.
pub fn local_time_profile(xs: &[f64], dt: f64, bin_width: f64) -> Result<LocalTimeProfile> {
    ensure_finite("bin_width", bin_width)?;
    if bin_width <= 0.0 {
        return Err(Error::invalid("bin_width", "must be positive"));
    }
    if xs.len() < 2 {
        return Err(Error::invalid("xs", "need at least one step"));
    }
    let bin = |x: f64| (x / bin_width).round() as i64;
    let left = &xs[..xs.len() - 1];
    let lo = left.iter().map(|&x| bin(x)).min().expect("nonempty");
    let hi = left.iter().map(|&x| bin(x)).max().expect("nonempty");
    let mut occupation = vec![0.0; (hi - lo + 1) as usize];
    for &x in left {
        occupation[(bin(x) - lo) as usize] += dt;
    }
    let density: Vec<f64> = occupation.iter().map(|o| o / bin_width).collect();
    let sup_stat = density.iter().copied().fold(0.0, f64::max);
    Ok(LocalTimeProfile {
        bin_width,
        bin_centers: (lo..=hi).map(|k| k as f64 * bin_width).collect(),
        density,
        sup_stat,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailReport {
    pub n_paths: u64,
    pub dt: f64,
    pub bin_width: f64,
    pub u_mean: f64,
    pub u_median: f64,
    pub u_max: f64,
    /// `(u, log P̂[U ≥ u])` used in the fit.
    pub tail_points: Vec<(f64, f64)>,
    /// Least squares of `log P̂[U ≥ u]` on `u²`.
    pub fit: Option<LinearFit>,
    pub inconclusive: bool,
    /// `max |Σ density·bin_width − 1|` over all profiles.
    pub max_conservation_error: f64,
    /// Smallest density of the bin at the origin over all paths.
    pub min_origin_density: f64,
}

/// Minimum number of exceedances for a tail point.
pub const MIN_EXCEEDANCES: usize = 20;
const TAIL_LEVELS: usize = 40;

/// Samples `n_paths` unit-duration walks, records `U` per path and fits the
/// Gaussian-type tail.
pub fn local_time_tail(n_paths: u64, dt: f64, bin_width: f64, seed: u64) -> Result<TailReport> {
    ensure_finite("dt", dt)?;
    if !(dt > 0.0 && dt <= 1.0) {
        return Err(Error::invalid("dt", "must lie in (0, 1]"));
    }
    if !(bin_width >= dt.sqrt() * (1.0 - 1e-12)) {
        return Err(Error::invalid("bin_width", "must be at least sqrt(dt)"));
    }
    if n_paths == 0 {
        return Err(Error::invalid("n_paths", "must be at least 1"));
    }
    let base = StreamId::new(seed, domain::LOCAL_TIME, 0);
    let mut actual_dt = dt;
    let rows = par_samples(n_paths, |i| {
        let (xs, dt) = sample_walk_1d(dt, 1.0, &mut base.with_index(i).stream())?;
        let prof = local_time_profile(&xs, dt, bin_width)?;
        Ok((prof.sup_stat, (prof.total_time() - 1.0).abs(), prof.density_at(0.0), dt))
    })?;
    if let Some(r) = rows.first() {
        actual_dt = r.3;
    }
    let mut us: Vec<f64> = rows.iter().map(|r| r.0).collect();
    us.sort_by(f64::total_cmp);
    let n = us.len();
    let median = us[n / 2];
    let beyond = us.iter().filter(|&&u| u > median).count();
    let inconclusive = beyond < 50 || n < MIN_EXCEEDANCES + 2;
    let mut tail_points = Vec::new();
    let mut fit = None;
    if !inconclusive {
        let top = us[n - MIN_EXCEEDANCES];
        for k in 0..TAIL_LEVELS {
            let u = median + (top - median) * k as f64 / (TAIL_LEVELS - 1) as f64;
            let exceed = n - us.partition_point(|&x| x < u);
            tail_points.push((u, (exceed as f64 / n as f64).ln()));
        }
        let xs: Vec<f64> = tail_points.iter().map(|p| p.0 * p.0).collect();
        let ys: Vec<f64> = tail_points.iter().map(|p| p.1).collect();
        fit = linear_fit(&xs, &ys);
    }
    Ok(TailReport {
        n_paths,
        dt: actual_dt,
        bin_width,
        u_mean: us.iter().sum::<f64>() / n as f64,
        u_median: median,
        u_max: us[n - 1],
        tail_points,
        inconclusive: inconclusive || fit.is_none(),
        fit,
        max_conservation_error: rows.iter().map(|r| r.1).fold(0.0, f64::max),
        min_origin_density: rows.iter().map(|r| r.2).fold(f64::INFINITY, f64::min),
    })
}
