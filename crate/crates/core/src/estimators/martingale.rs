//! Tracks the coverage martingale `M_t = m(A_t) + ∫_{[0,1]∖A_t} f(B_t, α) dα`
//! along stopped paths, with `f` estimated by walk on spheres.

use serde::{Deserialize, Serialize};

use super::{par_samples, Estimate, SeedRecord};
use crate::error::{Error, Result};
use crate::paths::{first_exit_index, sample_path, PathSample};
use crate::rng::{domain, StreamId};
use crate::sausage::{cover_intervals, IntervalUnion};
use crate::stats::mean_sd;
use crate::wos::{lemma4_shape_checks, wos_estimate, AlphaGrid, C7Request, WosConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MartingaleConfig {
    pub epsilon: f64,
    pub n_paths: u64,
    pub dt: f64,
    pub n_checkpoints: usize,
    /// Cell width of the α partition of `[0,1]`; at most ε.
    pub alpha_spacing: f64,
    /// Walks per `f̂` evaluation.
    pub n_walks: u64,
    /// Ceiling constant; fitted from the shape checks when absent.
    #[serde(default)]
    pub c0: Option<f64>,
    /// Walks per point of the shape checks that fit `c0`.
    pub calibration_walks: u64,
}

impl MartingaleConfig {
    pub fn new(epsilon: f64, n_paths: u64) -> Self {
        MartingaleConfig {
            epsilon,
            n_paths,
            dt: (epsilon / 4.0).powi(2),
            n_checkpoints: 50,
            alpha_spacing: epsilon,
            n_walks: 1000,
            c0: None,
            calibration_walks: 20_000,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon < 0.25) {
            return Err(Error::invalid("epsilon", "must lie in (0, 1/4)"));
        }
        if !(self.alpha_spacing > 0.0 && self.alpha_spacing <= self.epsilon) {
            return Err(Error::invalid("alpha_spacing", "must lie in (0, epsilon]"));
        }
        if self.n_checkpoints == 0 || self.n_paths == 0 || self.n_walks == 0 {
            return Err(Error::invalid("n_checkpoints", "counts must be positive"));
        }
        if let Some(c0) = self.c0 {
            if !(c0 > 0.0 && c0.is_finite()) {
                return Err(Error::invalid("c0", "must be positive"));
            }
        }
        Ok(())
    }

    fn wos(&self) -> WosConfig {
        WosConfig::new(self.epsilon, self.n_walks)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CheckpointRow {
    pub t: f64,
    pub index: usize,
    pub m_hat: f64,
    pub stderr: f64,
    /// `m(A_t)`.
    pub covered: f64,
    pub y: f64,
    pub frozen: bool,
    /// A walk exceeded its step budget.
    pub skipped: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IncrementRow {
    pub t0: f64,
    pub t1: f64,
    pub dm: f64,
    pub stderr: f64,
    /// `c0·Σ ((1 + |log|Y_s||)/|log ε|)²·ds` over the live part of the interval.
    pub ceiling: f64,
    pub frozen: bool,
    pub skipped: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrackReport {
    pub tau: Option<f64>,
    pub checkpoints: Vec<CheckpointRow>,
    pub increments: Vec<IncrementRow>,
}

/// Midpoints of the cells `[kΔ, (k+1)Δ]` partitioning `[0,1]`.
fn alpha_cells(spacing: f64) -> Vec<(f64, f64, f64)> {
    let k = (1.0 / spacing - 1e-9).ceil().max(1.0) as usize;
    let d = 1.0 / k as f64;
    (0..k).map(|i| (i as f64 * d, (i as f64 + 0.5) * d, (i as f64 + 1.0) * d)).collect()
}

fn uncovered_length(a: &IntervalUnion, lo: f64, hi: f64) -> f64 {
    let covered: f64 = a
        .intervals()
        .iter()
        .map(|&(l, r)| (r.min(hi) - l.max(lo)).max(0.0))
        .sum();
    (hi - lo - covered).max(0.0)
}

/// `M̂` at ~`n_checkpoints` evenly spaced grid indices of `path`.
///
/// The integral over uncovered α uses a midpoint rule whose cell weights are
/// the exact uncovered lengths. After the strip exit the value is frozen at
/// `m(A_τ)`.
pub fn martingale_track(
    path: &PathSample,
    epsilon: f64,
    alpha_spacing: f64,
    wos_cfg: &WosConfig,
    n_checkpoints: usize,
    c0: f64,
    base: StreamId,
) -> Result<TrackReport> {
    if !(alpha_spacing > 0.0 && alpha_spacing <= epsilon) {
        return Err(Error::invalid("alpha_spacing", "must lie in (0, epsilon]"));
    }
    if n_checkpoints == 0 || path.len() < 2 {
        return Err(Error::invalid("n_checkpoints", "need at least one checkpoint interval"));
    }
    let cfg = if wos_cfg.epsilon == epsilon { *wos_cfg } else { wos_cfg.with_epsilon(epsilon) };
    cfg.validate()?;
    let steps = path.len() - 1;
    let tau = first_exit_index(path, 1.0);
    let cells = alpha_cells(alpha_spacing);
    let mut idx: Vec<usize> = (0..=n_checkpoints)
        .map(|k| (k as f64 * steps as f64 / n_checkpoints as f64).round() as usize)
        .collect();
    idx.dedup();

    let mut checkpoints = Vec::with_capacity(idx.len());
    for (k, &i) in idx.iter().enumerate() {
        let frozen = tau.is_some_and(|t| i >= t);
        let stop = if frozen { tau.unwrap() } else { i };
        let a = cover_intervals(path, epsilon, Some(stop));
        let covered = a.measure();
        let b = path.points[i];
        let mut m_hat = covered;
        let mut var = 0.0;
        let mut skipped = false;
        if !frozen {
            let ck = base.subdomain(k as u64 + 1);
            for (j, &(lo, mid, hi)) in cells.iter().enumerate() {
                let w = uncovered_length(&a, lo, hi);
                if w == 0.0 {
                    continue;
                }
                let e = wos_estimate(b, mid, &cfg, &mut ck.with_index(j as u64).stream())?;
                skipped |= e.truncated > 0;
                m_hat += w * e.estimate.mean;
                var += w * w * e.estimate.stderr * e.estimate.stderr;
            }
        }
        checkpoints.push(CheckpointRow {
            t: path.time(i),
            index: i,
            m_hat,
            stderr: var.sqrt(),
            covered,
            y: b.y,
            frozen,
            skipped,
        });
    }

    let log_eps2 = epsilon.ln().powi(2);
    let increments = checkpoints
        .windows(2)
        .map(|w| {
            let (c, d) = (w[0], w[1]);
            let live_end = tau.map_or(d.index, |t| t.min(d.index));
            let integral: f64 = (c.index..live_end.max(c.index))
                .map(|s| {
                    let y = 0.5 * (path.points[s].y + path.points[s + 1].y);
                    (1.0 + y.abs().ln().abs()).powi(2)
                })
                .sum::<f64>()
                * path.dt;
            IncrementRow {
                t0: c.t,
                t1: d.t,
                dm: d.m_hat - c.m_hat,
                stderr: c.stderr.hypot(d.stderr),
                ceiling: c0 * integral / log_eps2,
                frozen: c.frozen,
                skipped: c.skipped || d.skipped,
            }
        })
        .collect();
    Ok(TrackReport {
        tau: tau.map(|t| path.time(t)),
        checkpoints,
        increments,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MartingaleReport {
    pub config: MartingaleConfig,
    pub c5: Option<f64>,
    pub c7: Option<f64>,
    pub c0: f64,
    /// Average of `M̂_0` over paths.
    pub m0: Estimate,
    /// Mean of live checkpoint increments.
    pub mean_increment: Estimate,
    /// Live, non-skipped increments with `ΔM̂² ≤ ceiling`.
    pub fraction_below_ceiling: f64,
    pub live_increments: u64,
    pub frozen_increments: u64,
    /// Frozen increments that were not exactly zero (must be 0).
    pub nonzero_frozen: u64,
    pub skipped_checkpoints: u64,
    pub paths_exited: u64,
    pub tracks: Vec<TrackReport>,
}

/// Fits `c0 = 4ĉ5² + ĉ7²` from shape checks at a single radius.
pub fn fit_c0(epsilon: f64, n_walks: u64, base: StreamId) -> Result<(f64, f64, f64)> {
    let cfg = WosConfig::new(epsilon, n_walks);
    let req = C7Request {
        grid: AlphaGrid::default(),
        heights: vec![0.0, 0.5],
    };
    let r = lemma4_shape_checks(&[epsilon], &cfg, Some(&req), base)?;
    let s = &r.per_epsilon[0];
    let c7 = s.c7.expect("requested");
    Ok((4.0 * s.c5 * s.c5 + c7 * c7, s.c5, c7))
}

pub fn martingale_experiment(cfg: &MartingaleConfig, seed: u64) -> Result<MartingaleReport> {
    cfg.validate()?;
    let base = StreamId::new(seed, domain::MARTINGALE, 0);
    let (c0, c5, c7) = match cfg.c0 {
        Some(c0) => (c0, None, None),
        None => {
            let (c0, c5, c7) = fit_c0(cfg.epsilon, cfg.calibration_walks, base.subdomain(0xc0))?;
            (c0, Some(c5), Some(c7))
        }
    };
    let wos = cfg.wos();
    let tracks = par_samples(cfg.n_paths, |i| {
        let id = base.with_index(i);
        let path = sample_path(cfg.dt, 1.0, &mut id.subdomain(0).stream())?;
        martingale_track(&path, cfg.epsilon, cfg.alpha_spacing, &wos, cfg.n_checkpoints, c0, id)
    })?;
    let seed_record = Some(SeedRecord::from(base));
    let live: Vec<&IncrementRow> = tracks
        .iter()
        .flat_map(|t| &t.increments)
        .filter(|r| !r.frozen && !r.skipped)
        .collect();
    let frozen: Vec<&IncrementRow> = tracks.iter().flat_map(|t| &t.increments).filter(|r| r.frozen).collect();
    let dms: Vec<f64> = live.iter().map(|r| r.dm).collect();
    let (mean, sd) = mean_sd(&dms);
    let n_live = dms.len() as u64;
    let below = live.iter().filter(|r| r.dm * r.dm <= r.ceiling).count();
    let m0s: Vec<f64> = tracks.iter().map(|t| t.checkpoints[0].m_hat).collect();
    let (m0_mean, m0_sd) = mean_sd(&m0s);
    Ok(MartingaleReport {
        config: cfg.clone(),
        c5,
        c7,
        c0,
        m0: Estimate::new(m0_mean, m0_sd / (m0s.len() as f64).sqrt(), m0s.len() as u64, seed_record),
        mean_increment: Estimate::new(mean, sd / (n_live.max(1) as f64).sqrt(), n_live, seed_record),
        fraction_below_ceiling: if n_live > 0 { below as f64 / n_live as f64 } else { 0.0 },
        live_increments: n_live,
        frozen_increments: frozen.len() as u64,
        nonzero_frozen: frozen.iter().filter(|r| r.dm != 0.0).count() as u64,
        skipped_checkpoints: tracks
            .iter()
            .flat_map(|t| &t.checkpoints)
            .filter(|c| c.skipped)
            .count() as u64,
        paths_exited: tracks.iter().filter(|t| t.tau.is_some()).count() as u64,
        tracks,
    })
}
