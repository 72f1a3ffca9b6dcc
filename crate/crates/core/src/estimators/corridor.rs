//! Importance sampling along the boustrophedon corridor of balls.
//!
//! Checkpoint `j` is drawn from the Gaussian transition conditioned to land
//! in ball `C_j`; the likelihood ratio against unconditioned Brownian motion
//! on `H_N` is the product of the transition probabilities `p_j`. The mean of
//! `weight · indicator` is therefore an unbiased estimate of
//! `P[target ∩ H_N]`, a lower bound for `P[target]`.

use serde::{Deserialize, Serialize};

use super::{par_samples, Estimate, SeedRecord};
use crate::analytic::{corridor_centers, gaussian_disk_prob, CorridorSpec};
use crate::error::{ensure_finite, Error, Result};
use crate::geom::Point;
use crate::paths::{gaussian_pair, grid_steps, push_bridge, PathSample};
use crate::rng::{domain, Stream, StreamId};
use crate::sausage::{cover_intervals, covers_segment, xi_measure, SausageParams};
use crate::stats::log_sum_exp;

const MAX_REJECTIONS: u64 = 10_000_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorridorRun {
    pub spec: CorridorSpec,
    pub checkpoint_points: Vec<Point>,
    /// `log p_j` for each checkpoint.
    pub step_log_probs: Vec<f64>,
    pub log_weight: f64,
    pub fine_path: PathSample,
    /// Proposals drawn in total by the rejection sampler.
    pub proposals: u64,
}

/// `N = ⌈γ·K·|log(ε/2)|⌉`.
pub fn corridor_n(epsilon: f64, gamma: f64, k_tune: f64) -> u32 {
    (gamma * k_tune * (0.5 * epsilon).ln().abs()).ceil().max(1.0) as u32
}

/// `γ = |log((1−θ)/3)|`, chosen so that `e^{−γ} = (1−θ)/3`.
pub fn default_gamma(theta: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&theta) {
        return Err(Error::invalid("theta", "default gamma needs theta in [0, 1)"));
    }
    Ok(((1.0 - theta) / 3.0).ln().abs())
}

fn check_args(epsilon: f64, gamma: f64, k_tune: f64) -> Result<()> {
    ensure_finite("epsilon", epsilon)?;
    ensure_finite("gamma", gamma)?;
    ensure_finite("k_tune", k_tune)?;
    if !(epsilon > 0.0 && epsilon < 0.5) {
        return Err(Error::invalid("epsilon", "must lie in (0, 1/2)"));
    }
    if gamma <= 0.0 {
        return Err(Error::invalid("gamma", "must be positive"));
    }
    if k_tune <= 0.0 {
        return Err(Error::invalid("k_tune", "must be positive"));
    }
    Ok(())
}

/// Draws a point of `N(z, σ²I)` conditioned on the disk of radius `σ`
/// around `c`; returns the point and the number of proposals used.
fn conditioned_step(z: Point, c: Point, sigma: f64, rng: &mut Stream) -> Result<(Point, u64)> {
    for tries in 1..=MAX_REJECTIONS {
        let p = z + gaussian_pair(rng, sigma);
        if p.dist(c) <= sigma {
            return Ok((p, tries));
        }
    }
    Err(Error::numerical(
        "corridor_sample",
        format!("acceptance below 1e-6 from {z:?} toward ball at {c:?}"),
    ))
}

/// One corridor-conditioned path.
///
/// Checkpoints come from one sub-stream of `stream` and the bridge infill
/// from another, so the checkpoints and the weight do not depend on `dt_fine`.
pub fn corridor_sample(epsilon: f64, gamma: f64, k_tune: f64, dt_fine: f64, stream: &Stream) -> Result<CorridorRun> {
    check_args(epsilon, gamma, k_tune)?;
    let n = corridor_n(epsilon, gamma, k_tune);
    let spec = corridor_centers(n);
    let sigma = spec.radius;
    let (steps, _) = grid_steps(dt_fine, spec.checkpoint_dt)?;

    let mut checkpoints_rng = stream.id().subdomain(1).stream();
    let mut z = Point::ORIGIN;
    let mut checkpoint_points = Vec::with_capacity(spec.len());
    let mut step_log_probs = Vec::with_capacity(spec.len());
    let mut proposals = 0;
    for j in 0..spec.len() {
        let c = spec.center(j);
        let p = gaussian_disk_prob(z.dist(c), sigma, sigma)?;
        let (next, tries) = conditioned_step(z, c, sigma, &mut checkpoints_rng)?;
        proposals += tries;
        step_log_probs.push(p.ln());
        checkpoint_points.push(next);
        z = next;
    }
    let log_weight = step_log_probs.iter().sum();

    let mut bridge_rng = stream.id().subdomain(2).stream();
    let mut points = Vec::with_capacity(spec.len() * steps + 1);
    points.push(Point::ORIGIN);
    let mut from = Point::ORIGIN;
    for &to in &checkpoint_points {
        push_bridge(&mut points, from, to, spec.checkpoint_dt, steps, &mut bridge_rng);
        from = to;
    }
    let fine_path = PathSample::new(spec.checkpoint_dt / steps as f64, points, Some(stream.id()))?;
    Ok(CorridorRun {
        spec,
        checkpoint_points,
        step_log_probs,
        log_weight,
        fine_path,
        proposals,
    })
}

/// A weighted-indicator estimate reported on the log scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogEstimate {
    /// `log p̂` with the relative standard error of `p̂` as its stderr.
    pub estimate: Option<Estimate>,
    /// With zero successes: `log(mean weight) + log(3/n)`, an approximate
    /// 95% upper confidence bound.
    pub upper_bound: Option<f64>,
    pub successes: u64,
}

impl LogEstimate {
    fn from_weights(log_w: &[f64], hits: &[bool], seed: Option<SeedRecord>) -> Self {
        let n = log_w.len() as u64;
        let sel: Vec<f64> = log_w.iter().zip(hits).filter(|p| *p.1).map(|p| *p.0).collect();
        let successes = sel.len() as u64;
        if sel.is_empty() {
            let nf = n as f64;
            return LogEstimate {
                estimate: None,
                upper_bound: Some(log_sum_exp(log_w) - nf.ln() + (3.0 / nf).ln()),
                successes,
            };
        }
        let m = sel.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let nf = n as f64;
        let (s1, s2) = sel.iter().fold((0.0, 0.0), |(a, b), &lw| {
            let y = (lw - m).exp();
            (a + y, b + y * y)
        });
        let mean = s1 / nf;
        let var = if n > 1 { ((s2 - nf * mean * mean) / (nf - 1.0)).max(0.0) } else { 0.0 };
        let rel = (var / nf).sqrt() / mean;
        let mut e = Estimate::new(m + mean.ln(), rel, n, seed);
        e.log_domain = true;
        LogEstimate {
            estimate: Some(e),
            upper_bound: None,
            successes,
        }
    }

    /// Linear-scale estimate by the delta method; `None` without successes.
    pub fn linear(&self) -> Option<Estimate> {
        self.estimate.map(|e| {
            let p = e.mean.exp();
            Estimate::new(p, p * e.stderr, e.n, e.seed_record)
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorridorEstimate {
    pub epsilon: f64,
    pub theta: f64,
    pub gamma: f64,
    pub k_tune: f64,
    pub n_side: u32,
    pub n_samples: u64,
    /// `P[Ξ ≥ θ ∩ H_N]`.
    pub p_theta: LogEstimate,
    /// `P[covers ∩ H_N]`.
    pub p_cover: LogEstimate,
    /// `P[#{j < b : z_j ∉ R_{ε/2}} < (1−θ)b − 1 ∩ H_N]`.
    pub p_discrete: LogEstimate,
    /// `P[H_N]` itself.
    pub p_corridor: LogEstimate,
    /// Unweighted success fractions, i.e. conditional probabilities given `H_N`.
    pub conditional_theta_fraction: f64,
    pub conditional_cover_fraction: f64,
    pub conditional_discrete_fraction: f64,
    pub mean_log_weight: f64,
    pub mean_xi: f64,
}

impl CorridorEstimate {
    pub fn has_lower_bound(&self) -> bool {
        self.p_theta.estimate.is_some()
    }
}

/// Importance-sampling lower bound for `P[Ξ ≥ θ]` (and `P[covers]`).
pub fn is_lower_bound(
    params: &SausageParams,
    gamma: f64,
    k_tune: f64,
    n: u64,
    dt_fine: f64,
    seed: u64,
) -> Result<CorridorEstimate> {
    params.validate()?;
    check_args(params.epsilon, gamma, k_tune)?;
    if n == 0 {
        return Err(Error::invalid("n", "must be at least 1"));
    }
    let eps = params.epsilon;
    let theta = params.theta;
    let b = (1.0 / eps).ceil() as usize;
    let base = StreamId::new(seed, domain::CORRIDOR, 0);
    let rows = par_samples(n, |i| {
        let run = corridor_sample(eps, gamma, k_tune, dt_fine, &base.with_index(i).stream())?;
        let u = cover_intervals(&run.fine_path, eps, None);
        let half = cover_intervals(&run.fine_path, 0.5 * eps, None);
        let misses = (1..b).filter(|&j| !half.contains(j as f64 * eps)).count();
        let xi = xi_measure(&u);
        Ok((
            run.log_weight,
            xi,
            xi >= theta,
            covers_segment(&u, 0.0),
            (misses as f64) < (1.0 - theta) * b as f64 - 1.0,
        ))
    })?;
    let lw: Vec<f64> = rows.iter().map(|r| r.0).collect();
    let pick = |k: usize| -> Vec<bool> {
        rows.iter()
            .map(|r| match k {
                0 => r.2,
                1 => r.3,
                2 => r.4,
                _ => true,
            })
            .collect()
    };
    let seed_record = Some(SeedRecord::from(base));
    let frac = |v: &[bool]| v.iter().filter(|&&x| x).count() as f64 / n as f64;
    let (ht, hc, hd) = (pick(0), pick(1), pick(2));
    Ok(CorridorEstimate {
        epsilon: eps,
        theta,
        gamma,
        k_tune,
        n_side: corridor_n(eps, gamma, k_tune),
        n_samples: n,
        p_theta: LogEstimate::from_weights(&lw, &ht, seed_record),
        p_cover: LogEstimate::from_weights(&lw, &hc, seed_record),
        p_discrete: LogEstimate::from_weights(&lw, &hd, seed_record),
        p_corridor: LogEstimate::from_weights(&lw, &pick(3), seed_record),
        conditional_theta_fraction: frac(&ht),
        conditional_cover_fraction: frac(&hc),
        conditional_discrete_fraction: frac(&hd),
        mean_log_weight: lw.iter().sum::<f64>() / n as f64,
        mean_xi: rows.iter().map(|r| r.1).sum::<f64>() / n as f64,
    })
}

/// One-step validation of the weight: with `N = 2`, estimates
/// `P[B_{1/4} ∈ C_1, x > 1/2]` both by importance sampling and directly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToyCheck {
    pub p1_analytic: f64,
    /// Direct estimate of `P[B_{1/4} ∈ C_1]`.
    pub p1_direct: Estimate,
    pub is_estimate: Estimate,
    pub direct_estimate: Estimate,
}

impl ToyCheck {
    pub fn agrees(&self, sigmas: f64) -> bool {
        self.is_estimate.agrees_with(&self.direct_estimate, sigmas)
            && Estimate::exact(self.p1_analytic, 1, None).agrees_with(&self.p1_direct, sigmas)
    }
}

pub fn toy_one_step_check(n_is: u64, n_direct: u64, seed: u64) -> Result<ToyCheck> {
    if n_is == 0 || n_direct == 0 {
        return Err(Error::invalid("n", "must be at least 1"));
    }
    let spec = corridor_centers(2);
    let c = spec.center(0);
    let sigma = spec.radius;
    let p1 = gaussian_disk_prob(c.norm(), sigma, sigma)?;
    let base = StreamId::new(seed, domain::CORRIDOR, 0).subdomain(0x70);
    const CHUNK: u64 = 10_000;
    let chunks = |n: u64| n.div_ceil(CHUNK);
    let is_hits: u64 = par_samples(chunks(n_is), |k| {
        let mut rng = base.subdomain(1).with_index(k).stream();
        let m = CHUNK.min(n_is - k * CHUNK);
        let mut hits = 0u64;
        for _ in 0..m {
            let (p, _) = conditioned_step(Point::ORIGIN, c, sigma, &mut rng)?;
            hits += (p.x > c.x) as u64;
        }
        Ok(hits)
    })?
    .iter()
    .sum();
    let direct: (u64, u64) = par_samples(chunks(n_direct), |k| {
        let mut rng = base.subdomain(2).with_index(k).stream();
        let m = CHUNK.min(n_direct - k * CHUNK);
        let (mut inside, mut both) = (0u64, 0u64);
        for _ in 0..m {
            let p = gaussian_pair(&mut rng, sigma);
            if p.dist(c) <= sigma {
                inside += 1;
                both += (p.x > c.x) as u64;
            }
        }
        Ok((inside, both))
    })?
    .iter()
    .fold((0, 0), |a, b| (a.0 + b.0, a.1 + b.1));
    let f = is_hits as f64 / n_is as f64;
    Ok(ToyCheck {
        p1_analytic: p1,
        p1_direct: Estimate::proportion(direct.0, n_direct, None),
        is_estimate: Estimate::new(p1 * f, p1 * (f * (1.0 - f) / n_is as f64).sqrt(), n_is, None),
        direct_estimate: Estimate::proportion(direct.1, n_direct, None),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn stream(i: u64) -> Stream {
        StreamId::new(1, domain::CORRIDOR, i).stream()
    }

    #[test]
    fn construction_invariants() {
        let run = corridor_sample(0.1, 1.0, 1.0, 1e-3, &stream(0)).unwrap();
        let n = corridor_n(0.1, 1.0, 1.0);
        assert_eq!(n, 3);
        assert_eq!(run.checkpoint_points.len(), 9);
        for (j, p) in run.checkpoint_points.iter().enumerate() {
            assert!(p.dist(run.spec.center(j)) <= 1.0 / n as f64);
        }
        assert!(run.step_log_probs.iter().all(|&l| l < 0.0 && l.is_finite()));
        assert!((run.log_weight - run.step_log_probs.iter().sum::<f64>()).abs() < 1e-12);
        assert!(run.log_weight <= 0.0);
        let steps = (run.fine_path.len() - 1) / 9;
        for (j, p) in run.checkpoint_points.iter().enumerate() {
            assert_eq!(run.fine_path.points[(j + 1) * steps], *p);
        }
        assert!((run.fine_path.duration() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn weight_independent_of_fine_grid() {
        let a = corridor_sample(0.05, 1.5, 1.0, 1e-3, &stream(4)).unwrap();
        let b = corridor_sample(0.05, 1.5, 1.0, 1e-5, &stream(4)).unwrap();
        assert_eq!(a.log_weight, b.log_weight);
        assert_eq!(a.checkpoint_points, b.checkpoint_points);
        assert_ne!(a.fine_path.len(), b.fine_path.len());
    }

    #[test]
    fn n_tuning_rule() {
        let g = default_gamma(0.5).unwrap();
        assert!(((-g).exp() - 0.5 / 3.0).abs() < 1e-15);
        assert_eq!(corridor_n(0.02, g, 1.0), (g * 100f64.ln()).ceil() as u32);
        assert!(default_gamma(1.0).is_err());
        assert!(corridor_sample(0.6, 1.0, 1.0, 1e-3, &stream(0)).is_err());
        assert!(corridor_sample(0.1, 0.0, 1.0, 1e-3, &stream(0)).is_err());
    }

    #[test]
    fn toy_event_matches_direct_sampling() {
        let t = toy_one_step_check(100_000, 400_000, 3).unwrap();
        assert!(t.agrees(4.0), "{t:?}");
        assert!((t.p1_analytic - gaussian_disk_prob(0.5, 0.5, 0.5).unwrap()).abs() < 1e-15);
    }

    #[test]
    fn log_estimate_bookkeeping() {
        let lw = [-1.0, -2.0, -3.0, -4.0];
        let e = LogEstimate::from_weights(&lw, &[true, false, true, false], None);
        let expect = (((-1f64).exp() + (-3f64).exp()) / 4.0).ln();
        assert!((e.estimate.unwrap().mean - expect).abs() < 1e-12);
        assert_eq!(e.successes, 2);
        let none = LogEstimate::from_weights(&lw, &[false; 4], None);
        assert!(none.estimate.is_none() && none.upper_bound.is_some());
    }

    #[test]
    fn lower_bound_below_naive_at_feasible_scale() {
        let params = SausageParams::new(0.15, 0.3, 0.0).unwrap();
        let g = default_gamma(0.3).unwrap();
        let c = is_lower_bound(&params, g, 1.0, 300, 1e-3, 2).unwrap();
        let naive = super::super::naive_mc(&params, 2000, 1e-3, 2).unwrap();
        let lb = c.p_theta.linear().unwrap();
        assert!(lb.mean <= naive.p_theta.mean + 3.0 * lb.stderr.hypot(naive.p_theta.stderr));
        assert!(c.conditional_theta_fraction > 0.0);
    }
}
