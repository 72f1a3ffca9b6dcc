//! Direct Monte Carlo of the coverage probabilities.

use serde::{Deserialize, Serialize};

use super::{par_samples, Estimate, SeedRecord};
use crate::error::{Error, Result};
use crate::paths::sample_path;
use crate::rng::{domain, StreamId};
use crate::sausage::{adaptive_cover, cover_intervals, covers_segment, xi_measure, RefineBudget, SausageParams};
use crate::stats::mean_sd;

/// Histogram and moments of the per-path Ξ values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct XiSummary {
    pub mean: f64,
    pub sd: f64,
    pub min: f64,
    pub max: f64,
    /// 20 equal bins on `[0, 1]`; Ξ = 1 lands in the last bin.
    pub histogram: Vec<u64>,
}

impl XiSummary {
    pub const BINS: usize = 20;

    pub fn from_samples(xs: &[f64]) -> Self {
        let (mean, sd) = mean_sd(xs);
        let mut histogram = vec![0u64; Self::BINS];
        for &x in xs {
            let b = ((x * Self::BINS as f64) as usize).min(Self::BINS - 1);
            histogram[b] += 1;
        }
        XiSummary {
            mean,
            sd,
            min: xs.iter().copied().fold(f64::INFINITY, f64::min),
            max: xs.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            histogram,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NaiveResult {
    pub p_cover: Estimate,
    pub p_theta: Estimate,
    pub xi: XiSummary,
    pub dt: f64,
    /// Paths whose adaptive refinement hit its budget.
    pub budget_limited: u64,
}

fn check_n(n: u64) -> Result<()> {
    if n == 0 {
        return Err(Error::invalid("n", "must be at least 1"));
    }
    Ok(())
}

/// Samples `n` unit-duration paths from the origin and estimates
/// `P[covers [0,1]]` and `P[Ξ ≥ θ]`.
pub fn naive_mc(params: &SausageParams, n: u64, dt: f64, seed: u64) -> Result<NaiveResult> {
    params.validate()?;
    let s = naive_mc_sweep(params.epsilon, &[params.theta], params.refine_margin, n, dt, seed)?;
    Ok(NaiveResult {
        p_cover: s.p_cover,
        p_theta: s.p_theta[0],
        xi: s.xi,
        dt: s.dt,
        budget_limited: s.budget_limited,
    })
}

/// [`naive_mc`] at several thresholds on the same paths.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NaiveSweep {
    pub epsilon: f64,
    pub thetas: Vec<f64>,
    pub p_cover: Estimate,
    /// One entry per threshold, in input order.
    pub p_theta: Vec<Estimate>,
    pub xi: XiSummary,
    pub dt: f64,
    pub budget_limited: u64,
}

pub fn naive_mc_sweep(
    epsilon: f64,
    thetas: &[f64],
    refine_margin: f64,
    n: u64,
    dt: f64,
    seed: u64,
) -> Result<NaiveSweep> {
    let params: Vec<SausageParams> = thetas
        .iter()
        .map(|&t| SausageParams::new(epsilon, t, refine_margin))
        .collect::<Result<_>>()?;
    // θ only enters the final threshold; covering uses the first entry.
    let params = params.first().copied().ok_or_else(|| Error::invalid("theta", "must not be empty"))?;
    check_n(n)?;
    let base = StreamId::new(seed, domain::NAIVE, 0);
    let per_path = par_samples(n, |i| {
        let mut stream = base.with_index(i).stream();
        let path = sample_path(dt, 1.0, &mut stream)?;
        if params.refine_margin > 0.0 {
            let c = adaptive_cover(&path, &params, RefineBudget::for_path(&path), &mut stream)?;
            Ok((xi_measure(&c.union), covers_segment(&c.union, 0.0), c.budget_limited))
        } else {
            let u = cover_intervals(&path, params.epsilon, None);
            Ok((xi_measure(&u), covers_segment(&u, 0.0), false))
        }
    })?;
    let xs: Vec<f64> = per_path.iter().map(|r| r.0).collect();
    let covered = per_path.iter().filter(|r| r.1).count() as u64;
    let seed_record = Some(SeedRecord::from(base));
    let p_theta = thetas
        .iter()
        .map(|&t| Estimate::proportion(xs.iter().filter(|&&x| x >= t).count() as u64, n, seed_record))
        .collect();
    Ok(NaiveSweep {
        epsilon,
        thetas: thetas.to_vec(),
        p_cover: Estimate::proportion(covered, n, seed_record),
        p_theta,
        xi: XiSummary::from_samples(&xs),
        dt: crate::paths::grid_steps(dt, 1.0)?.1,
        budget_limited: per_path.iter().filter(|r| r.2).count() as u64,
    })
}

/// Ξ for each radius in `epsilons` on the same `n` paths (common random
/// numbers); row `k` holds the values for `epsilons[k]`.
pub fn xi_on_common_paths(epsilons: &[f64], n: u64, dt: f64, seed: u64) -> Result<Vec<Vec<f64>>> {
    check_n(n)?;
    if epsilons.iter().any(|&e| !(e > 0.0 && e.is_finite())) {
        return Err(Error::invalid("epsilon", "must be positive"));
    }
    let base = StreamId::new(seed, domain::NAIVE, 0);
    let per_path = par_samples(n, |i| {
        let path = sample_path(dt, 1.0, &mut base.with_index(i).stream())?;
        Ok(epsilons
            .iter()
            .map(|&e| xi_measure(&cover_intervals(&path, e, None)))
            .collect::<Vec<_>>())
    })?;
    Ok((0..epsilons.len())
        .map(|k| per_path.iter().map(|row| row[k]).collect())
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trivial_thresholds() {
        let p = SausageParams::new(0.1, 0.0, 0.0).unwrap();
        let r = naive_mc(&p, 200, 1e-3, 1).unwrap();
        assert_eq!(r.p_theta.mean, 1.0);
        let p = SausageParams::new(2.0, 1.0, 0.0).unwrap();
        let r = naive_mc(&p, 200, 1e-3, 1).unwrap();
        assert_eq!(r.p_cover.mean, 1.0);
        assert_eq!(r.p_theta.mean, 1.0);
        assert!(naive_mc(&p, 0, 1e-3, 1).is_err());
    }

    #[test]
    fn sweep_matches_single_threshold_runs() {
        let thetas = [0.0, 0.3, 0.6];
        let s = naive_mc_sweep(0.1, &thetas, 0.0, 300, 1e-3, 4).unwrap();
        for (k, &t) in thetas.iter().enumerate() {
            let r = naive_mc(&SausageParams::new(0.1, t, 0.0).unwrap(), 300, 1e-3, 4).unwrap();
            assert_eq!(r.p_theta, s.p_theta[k]);
            assert_eq!(r.p_cover, s.p_cover);
        }
        assert!(naive_mc_sweep(0.1, &[], 0.0, 10, 1e-3, 4).is_err());
    }

    #[test]
    fn independent_seeds_agree() {
        let p = SausageParams::new(0.1, 0.5, 0.0).unwrap();
        let a = naive_mc(&p, 2000, 1e-3, 1).unwrap();
        let b = naive_mc(&p, 2000, 1e-3, 2).unwrap();
        assert!(a.p_theta.agrees_with(&b.p_theta, 3.0), "{:?} {:?}", a.p_theta, b.p_theta);
        assert!(a.p_theta.mean > 0.0 && a.p_theta.mean < 1.0);
        assert_eq!(a.xi.histogram.iter().sum::<u64>(), 2000);
    }

    #[test]
    fn common_paths_are_monotone() {
        let eps = [0.05, 0.1, 0.2];
        let rows = xi_on_common_paths(&eps, 300, 1e-3, 5).unwrap();
        for i in 0..300 {
            assert!(rows[0][i] <= rows[1][i] && rows[1][i] <= rows[2][i]);
        }
        let thetas = [0.1, 0.3, 0.5, 0.7];
        let counts: Vec<usize> = thetas
            .iter()
            .map(|&t| rows[1].iter().filter(|&&x| x >= t).count())
            .collect();
        assert!(counts.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn matches_common_path_values() {
        let p = SausageParams::new(0.1, 0.4, 0.0).unwrap();
        let r = naive_mc(&p, 300, 1e-3, 5).unwrap();
        let rows = xi_on_common_paths(&[0.1], 300, 1e-3, 5).unwrap();
        let above = rows[0].iter().filter(|&&x| x >= 0.4).count() as f64 / 300.0;
        assert_eq!(r.p_theta.mean, above);
    }
}
