//! Small-ball hitting by a unit-duration Brownian bridge.

use serde::{Deserialize, Serialize};

use super::{par_samples, Estimate, SeedRecord};
use crate::error::{ensure_finite, Error, Result};
use crate::geom::{point_segment_dist, Point};
use crate::paths::{bridge_midpoint, push_bridge};
use crate::rng::{domain, StreamId};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BridgeGeometry {
    pub q1: Point,
    pub q2: Point,
    pub q3: Point,
}

impl Default for BridgeGeometry {
    fn default() -> Self {
        BridgeGeometry {
            q1: Point::new(-0.5, 0.0),
            q2: Point::new(0.5, 0.0),
            q3: Point::new(0.0, 0.5),
        }
    }
}

impl BridgeGeometry {
    pub fn validate(&self) -> Result<()> {
        for p in [self.q1, self.q2, self.q3] {
            ensure_finite("geometry", p.x)?;
            ensure_finite("geometry", p.y)?;
        }
        let pairs = [(self.q1, self.q2), (self.q1, self.q3), (self.q2, self.q3)];
        if pairs.iter().any(|(a, b)| a.dist(*b) > 3.0) {
            return Err(Error::invalid("geometry", "points must be pairwise within distance 3"));
        }
        Ok(())
    }
}

/// Discretisation of the hitting experiment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BridgeConfig {
    /// Initial grid spacing.
    pub dt_coarse: f64,
    /// Finest spacing; `None` uses `(δ/8)²` for each δ.
    pub dt_min: Option<f64>,
}

impl Default for BridgeConfig {
    fn default() -> Self {
        BridgeConfig {
            dt_coarse: 1.0 / 1024.0,
            dt_min: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BridgeRow {
    pub delta: f64,
    pub estimate: Estimate,
    /// `p̂(δ)·|log δ|`.
    pub scaled: f64,
    pub scaled_stderr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BridgeReport {
    pub geometry: BridgeGeometry,
    pub rows: Vec<BridgeRow>,
    /// `min_δ p̂(δ)·|log δ|`.
    pub fitted_inv_k: f64,
    /// `p̂` nonincreasing as δ shrinks, within 3σ.
    pub monotone: bool,
    /// Every `p̂(δ)·|log δ|` exceeds three of its standard errors.
    pub positive: bool,
}

/// For each δ, whether a node of the adaptively refined bridge lands inside
/// the δ-ball around `q3`. Segments are bisected while they could still
/// reach an unresolved ball within the Lévy modulus `3√(h|log h|)`.
fn hits_for_bridge(
    geom: &BridgeGeometry,
    deltas: &[f64],
    dt_min: &[f64],
    cfg: &BridgeConfig,
    stream: &mut crate::rng::Stream,
) -> Vec<bool> {
    let steps = (1.0 / cfg.dt_coarse).round().max(1.0) as usize;
    let h0 = 1.0 / steps as f64;
    let mut coarse = Vec::with_capacity(steps + 1);
    coarse.push(geom.q1);
    push_bridge(&mut coarse, geom.q1, geom.q2, 1.0, steps, stream);
    let q3 = geom.q3;
    let mut hit = vec![false; deltas.len()];
    let mark = |p: Point, hit: &mut [bool]| {
        let d = p.dist(q3);
        for (k, &delta) in deltas.iter().enumerate() {
            if d <= delta {
                hit[k] = true;
            }
        }
    };
    mark(geom.q1, &mut hit);
    let mut stack = Vec::new();
    for w in coarse.windows(2) {
        mark(w[1], &mut hit);
        stack.push((w[0], w[1], h0));
        while let Some((a, b, h)) = stack.pop() {
            let d = point_segment_dist(q3, a, b);
            let band = 3.0 * (h * h.ln().abs()).sqrt();
            let split = deltas
                .iter()
                .zip(dt_min)
                .zip(&hit)
                .any(|((&delta, &hmin), &done)| !done && h > hmin && d < delta + band);
            if split {
                let m = bridge_midpoint(a, b, h, stream);
                mark(m, &mut hit);
                stack.push((m, b, 0.5 * h));
                stack.push((a, m, 0.5 * h));
            }
        }
        if hit.iter().all(|&x| x) {
            break;
        }
    }
    hit
}

/// Estimates `P[bridge from q1 to q2 enters the δ-ball around q3]` for
/// every δ on common paths.
pub fn bridge_hit_experiment(
    deltas: &[f64],
    n: u64,
    geometry: &BridgeGeometry,
    cfg: &BridgeConfig,
    seed: u64,
) -> Result<BridgeReport> {
    geometry.validate()?;
    if deltas.is_empty() {
        return Err(Error::invalid("delta_list", "must not be empty"));
    }
    if n == 0 {
        return Err(Error::invalid("n", "must be at least 1"));
    }
    if !(cfg.dt_coarse > 0.0 && cfg.dt_coarse <= 1.0) {
        return Err(Error::invalid("dt_coarse", "must lie in (0, 1]"));
    }
    let mut dt_min = Vec::with_capacity(deltas.len());
    for &delta in deltas {
        ensure_finite("delta", delta)?;
        if !(delta > 0.0 && delta < 0.5) {
            return Err(Error::invalid("delta", "each delta must lie in (0, 1/2)"));
        }
        let h = cfg.dt_min.unwrap_or((delta / 8.0).powi(2));
        if delta < 4.0 * h.sqrt() {
            return Err(Error::invalid("delta", format!("delta {delta} < 4 sqrt(dt_min) = {}", 4.0 * h.sqrt())));
        }
        dt_min.push(h);
    }
    let base = StreamId::new(seed, domain::BRIDGE, 0);
    let hits = par_samples(n, |i| Ok(hits_for_bridge(geometry, deltas, &dt_min, cfg, &mut base.with_index(i).stream())))?;
    let seed_record = Some(SeedRecord::from(base));
    let rows: Vec<BridgeRow> = deltas
        .iter()
        .enumerate()
        .map(|(k, &delta)| {
            let count = hits.iter().filter(|h| h[k]).count() as u64;
            let e = Estimate::proportion(count, n, seed_record);
            let l = delta.ln().abs();
            BridgeRow {
                delta,
                estimate: e,
                scaled: e.mean * l,
                scaled_stderr: e.stderr * l,
            }
        })
        .collect();
    let mut order: Vec<usize> = (0..rows.len()).collect();
    order.sort_by(|&a, &b| rows[b].delta.total_cmp(&rows[a].delta));
    let monotone = order.windows(2).all(|w| {
        let (big, small) = (rows[w[0]].estimate, rows[w[1]].estimate);
        big.mean >= small.mean - 3.0 * big.stderr.hypot(small.stderr)
    });
    Ok(BridgeReport {
        geometry: *geometry,
        fitted_inv_k: rows.iter().map(|r| r.scaled).fold(f64::INFINITY, f64::min),
        positive: rows.iter().all(|r| r.scaled > 3.0 * r.scaled_stderr),
        monotone,
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ball_covering_start_is_certain() {
        let g = BridgeGeometry::default();
        let r = bridge_hit_experiment(&[0.49], 200, &g, &BridgeConfig::default(), 1).unwrap();
        // |q1 − q3| ≈ 0.707 > 0.49, so not trivially certain.
        assert!(r.rows[0].estimate.mean < 1.0);
        let g = BridgeGeometry {
            q3: Point::new(-0.4, 0.1),
            ..g
        };
        let r = bridge_hit_experiment(&[0.2], 100, &g, &BridgeConfig::default(), 1).unwrap();
        assert_eq!(r.rows[0].estimate.mean, 1.0);
    }

    #[test]
    fn rejects_bad_configurations() {
        let g = BridgeGeometry::default();
        let cfg = BridgeConfig {
            dt_min: Some(1e-4),
            ..BridgeConfig::default()
        };
        assert!(bridge_hit_experiment(&[0.01], 10, &g, &cfg, 1).is_err());
        assert!(bridge_hit_experiment(&[0.6], 10, &g, &BridgeConfig::default(), 1).is_err());
        let far = BridgeGeometry {
            q3: Point::new(0.0, 4.0),
            ..g
        };
        assert!(bridge_hit_experiment(&[0.1], 10, &far, &BridgeConfig::default(), 1).is_err());
    }

    #[test]
    fn nested_balls_give_nested_hits() {
        let g = BridgeGeometry::default();
        let r = bridge_hit_experiment(&[0.1, 0.03, 0.01], 3000, &g, &BridgeConfig::default(), 4).unwrap();
        let p: Vec<f64> = r.rows.iter().map(|x| x.estimate.mean).collect();
        assert!(p[0] >= p[1] && p[1] >= p[2]);
        assert!(r.monotone && r.positive);
        assert!(r.fitted_inv_k > 0.0);
    }
}
