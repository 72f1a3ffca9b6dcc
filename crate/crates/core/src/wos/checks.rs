//! Integrated hitting function `g(y) = ∫ f((0,y),α) dα`, the identity
//! `−g′(y) = g(y)/(1−y)` and the shape checks on `f`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::walk::{wos_estimate, WosConfig};
use crate::error::{ensure_finite, Error, Result};
use crate::estimators::Estimate;
use crate::geom::Point;
use crate::rng::StreamId;

/// Symmetric trapezoid grid `α = 0, Δ, …, alpha_max` standing in for `α ∈ R`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlphaGrid {
    pub spacing: f64,
    pub alpha_max: f64,
}

impl Default for AlphaGrid {
    fn default() -> Self {
        AlphaGrid {
            spacing: 0.05,
            alpha_max: 6.0,
        }
    }
}

impl AlphaGrid {
    pub fn validate(&self, cfg: &WosConfig) -> Result<()> {
        if !(self.spacing > 0.0 && self.spacing.is_finite()) {
            return Err(Error::invalid("alpha_grid.spacing", "must be positive"));
        }
        if !(self.alpha_max >= self.spacing && self.alpha_max <= cfg.x_cutoff) {
            return Err(Error::invalid("alpha_grid.alpha_max", "must lie in [spacing, x_cutoff]"));
        }
        Ok(())
    }

    /// Nodes and weights of the trapezoid rule on `[−alpha_max, alpha_max]`
    /// folded onto the nonnegative half.
    pub fn nodes(&self) -> Vec<(f64, f64)> {
        let n = (self.alpha_max / self.spacing - 1e-9).ceil().max(1.0) as usize;
        let d = self.alpha_max / n as f64;
        (0..=n)
            .map(|k| {
                let w = if k == 0 || k == n { d } else { 2.0 * d };
                (k as f64 * d, w)
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GEstimate {
    pub y: f64,
    pub estimate: Estimate,
    /// Bound on the mass of `f` beyond `±alpha_max`, from the `e^{−α}` decay.
    pub tail_bias_bound: f64,
    /// `(α, f̂((0,y),α))` at every node.
    pub nodes: Vec<(f64, Estimate)>,
    pub truncated: u64,
}

fn effective(cfg: &WosConfig, epsilon: f64) -> WosConfig {
    if cfg.epsilon == epsilon {
        *cfg
    } else {
        cfg.with_epsilon(epsilon)
    }
}

/// Trapezoid estimate of `g(y)`. Each node uses its own stream derived from
/// `base`, `y` and the node index.
pub fn g_of_y(y: f64, epsilon: f64, cfg: &WosConfig, grid: &AlphaGrid, base: StreamId) -> Result<GEstimate> {
    ensure_finite("y", y)?;
    if y.abs() >= 1.0 {
        return Err(Error::invalid("y", "need |y| < 1"));
    }
    let cfg = effective(cfg, epsilon);
    cfg.validate()?;
    grid.validate(&cfg)?;
    let nodes = grid.nodes();
    let id = base.subdomain(y.to_bits());
    let per_node = nodes
        .par_iter()
        .enumerate()
        .map(|(k, &(alpha, _))| wos_estimate(Point::new(0.0, y), alpha, &cfg, &mut id.with_index(k as u64).stream()))
        .collect::<Result<Vec<_>>>()?;
    let mut mean = 0.0;
    let mut var = 0.0;
    let mut truncated = 0;
    for (&(_, w), e) in nodes.iter().zip(&per_node) {
        mean += w * e.estimate.mean;
        var += w * w * e.estimate.stderr * e.estimate.stderr;
        truncated += e.truncated;
    }
    let last = per_node.last().expect("grid has nodes").estimate;
    let tail_bias_bound = 2.0 * (last.mean + 3.0 * last.stderr);
    Ok(GEstimate {
        y,
        estimate: Estimate::new(mean, var.sqrt(), cfg.n_walks * nodes.len() as u64, Some(id.into())),
        tail_bias_bound,
        nodes: nodes.iter().map(|n| n.0).zip(per_node.iter().map(|e| e.estimate)).collect(),
        truncated,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Eq9Report {
    pub y: f64,
    pub dy: f64,
    pub epsilon: f64,
    /// `−sgn(y)·(g(y+dy) − g(y−dy))/(2dy)`.
    pub lhs: Estimate,
    /// `g(y)/(1−|y|)`.
    pub rhs: Estimate,
    pub ratio: f64,
    pub ratio_stderr: f64,
    /// Standard error of `lhs − rhs`.
    pub combined_stderr: f64,
    pub inconclusive: bool,
    /// `|lhs − rhs| ≤ 3·combined_stderr` and not inconclusive.
    pub passed: bool,
    pub g: [GEstimate; 3],
}

/// Compares the central difference of `g` with `g(y)/(1−|y|)`.
///
/// Works for either sign of `y`; for negative `y` the derivative flips sign.
pub fn eq9_identity_check(
    y: f64,
    epsilon: f64,
    dy: f64,
    cfg: &WosConfig,
    grid: &AlphaGrid,
    base: StreamId,
) -> Result<Eq9Report> {
    ensure_finite("y", y)?;
    ensure_finite("dy", dy)?;
    if y == 0.0 || y.abs() >= 1.0 {
        return Err(Error::invalid("y", "need 0 < |y| < 1"));
    }
    if !(dy > 0.0 && dy < (1.0 - y.abs()) / 4.0) {
        return Err(Error::invalid("dy", "need 0 < dy < (1 - |y|)/4"));
    }
    let minus = g_of_y(y - dy, epsilon, cfg, grid, base)?;
    let center = g_of_y(y, epsilon, cfg, grid, base)?;
    let plus = g_of_y(y + dy, epsilon, cfg, grid, base)?;
    let sign = y.signum();
    let (gm, gc, gp) = (minus.estimate, center.estimate, plus.estimate);
    let n = gm.n + gc.n + gp.n;
    let seed = gc.seed_record;
    let lhs = Estimate::new(
        -sign * (gp.mean - gm.mean) / (2.0 * dy),
        gp.stderr.hypot(gm.stderr) / (2.0 * dy),
        n,
        seed,
    );
    let scale = 1.0 / (1.0 - y.abs());
    let rhs = Estimate::new(gc.mean * scale, gc.stderr * scale, gc.n, seed);
    let combined_stderr = lhs.stderr.hypot(rhs.stderr);
    let ratio = lhs.mean / rhs.mean;
    let ratio_stderr = ratio.abs() * (lhs.stderr / lhs.mean).hypot(rhs.stderr / rhs.mean);
    let inconclusive = !(rhs.mean > 0.0) || combined_stderr > 0.25 * rhs.mean;
    let passed = !inconclusive && (lhs.mean - rhs.mean).abs() <= 3.0 * combined_stderr;
    Ok(Eq9Report {
        y,
        dy,
        epsilon,
        lhs,
        rhs,
        ratio,
        ratio_stderr,
        combined_stderr,
        inconclusive,
        passed,
        g: [minus, center, plus],
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Lemma4Point {
    /// `y` for the vertical scan, `α` for the horizontal one.
    pub coord: f64,
    pub estimate: Estimate,
    /// The normalised quantity whose supremum defines the fitted constant.
    pub scaled: f64,
    /// Relative stderr above 25% (or a zero estimate).
    pub inconclusive: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Lemma4Summary {
    pub epsilon: f64,
    pub y_scan: Vec<Lemma4Point>,
    pub alpha_scan: Vec<Lemma4Point>,
    /// `sup_y f((0,y),0)·|log ε|/|log y|`.
    pub c5: f64,
    /// `sup_α f((α,0),0)·|log ε|·e^α/(1 + max(0, log(1/α)))`.
    pub c6: f64,
    /// `sup_y g(y)·|log ε|/(1−|y|)` when requested.
    pub c7: Option<f64>,
    pub g_points: Vec<GEstimate>,
    pub monotone_y: bool,
    pub monotone_alpha: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Lemma4Report {
    pub per_epsilon: Vec<Lemma4Summary>,
    /// `max c5 / min c5` across ε.
    pub c5_spread: f64,
    pub c6_spread: f64,
    pub c7_spread: Option<f64>,
    pub inconclusive_points: usize,
}

/// Requests `c7` from `g(y)` at the given heights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct C7Request {
    pub grid: AlphaGrid,
    pub heights: Vec<f64>,
}

pub const LEMMA4_Y_GRID: [f64; 9] = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9];
pub const LEMMA4_ALPHA_GRID: [f64; 8] = [0.5, 1.0, 1.5, 2.0, 2.5, 3.0, 3.5, 4.0];

fn scan(
    coords: &[f64],
    at: impl Fn(f64) -> Point + Sync,
    scale: impl Fn(f64) -> f64 + Sync,
    cfg: &WosConfig,
    id: StreamId,
) -> Result<Vec<Lemma4Point>> {
    coords
        .par_iter()
        .enumerate()
        .map(|(k, &c)| {
            let e = wos_estimate(at(c), 0.0, cfg, &mut id.with_index(k as u64).stream())?.estimate;
            Ok(Lemma4Point {
                coord: c,
                estimate: e,
                scaled: e.mean * scale(c),
                inconclusive: !(e.mean > 0.0) || e.stderr > 0.25 * e.mean,
            })
        })
        .collect()
}

fn monotone(points: &[Lemma4Point]) -> bool {
    points
        .windows(2)
        .all(|w| w[0].estimate.mean >= w[1].estimate.mean - 3.0 * w[0].estimate.stderr.hypot(w[1].estimate.stderr))
}

fn spread(values: impl Iterator<Item = f64>) -> f64 {
    let (lo, hi) = values.fold((f64::INFINITY, 0.0f64), |(lo, hi), v| (lo.min(v), hi.max(v)));
    hi / lo
}

/// Shape of `f` near the ball: log decay in `y`, exponential decay in `α`,
/// and monotonicity in both, for each radius in `epsilons`.
pub fn lemma4_shape_checks(
    epsilons: &[f64],
    cfg: &WosConfig,
    c7: Option<&C7Request>,
    base: StreamId,
) -> Result<Lemma4Report> {
    if epsilons.is_empty() {
        return Err(Error::invalid("epsilon_list", "must not be empty"));
    }
    let mut per_epsilon = Vec::with_capacity(epsilons.len());
    for (i, &eps) in epsilons.iter().enumerate() {
        ensure_finite("epsilon", eps)?;
        if !(eps > 0.0 && eps < 0.25) {
            return Err(Error::invalid("epsilon", "each epsilon must lie in (0, 1/4)"));
        }
        let cfg = effective(cfg, eps);
        cfg.validate()?;
        let id = base.subdomain(i as u64);
        let log_eps = eps.ln().abs();
        let y_scan = scan(
            &LEMMA4_Y_GRID,
            |y| Point::new(0.0, y),
            |y| log_eps / y.ln().abs(),
            &cfg,
            id.subdomain(1),
        )?;
        let alpha_scan = scan(
            &LEMMA4_ALPHA_GRID,
            |a| Point::new(a, 0.0),
            |a| log_eps * a.exp() / (1.0 + (1.0 / a).ln().max(0.0)),
            &cfg,
            id.subdomain(2),
        )?;
        let sup = |pts: &[Lemma4Point]| pts.iter().map(|p| p.scaled).fold(0.0, f64::max);
        let mut g_points = Vec::new();
        let c7_value = match c7 {
            Some(req) => {
                let mut best = 0.0f64;
                for &h in &req.heights {
                    let g = g_of_y(h, eps, &cfg, &req.grid, id.subdomain(3))?;
                    best = best.max(g.estimate.mean * log_eps / (1.0 - h.abs()));
                    g_points.push(g);
                }
                Some(best)
            }
            None => None,
        };
        per_epsilon.push(Lemma4Summary {
            epsilon: eps,
            c5: sup(&y_scan),
            c6: sup(&alpha_scan),
            c7: c7_value,
            monotone_y: monotone(&y_scan),
            monotone_alpha: monotone(&alpha_scan),
            y_scan,
            alpha_scan,
            g_points,
        });
    }
    let inconclusive_points = per_epsilon
        .iter()
        .flat_map(|s| s.y_scan.iter().chain(&s.alpha_scan))
        .filter(|p| p.inconclusive)
        .count();
    Ok(Lemma4Report {
        c5_spread: spread(per_epsilon.iter().map(|s| s.c5)),
        c6_spread: spread(per_epsilon.iter().map(|s| s.c6)),
        c7_spread: c7.map(|_| spread(per_epsilon.iter().filter_map(|s| s.c7))),
        inconclusive_points,
        per_epsilon,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::domain;

    fn base() -> StreamId {
        StreamId::new(11, domain::EQ9, 0)
    }

    #[test]
    fn grid_weights_integrate_constants() {
        let g = AlphaGrid::default();
        let total: f64 = g.nodes().iter().map(|n| n.1).sum();
        assert!((total - 2.0 * g.alpha_max).abs() < 1e-12);
        let odd = AlphaGrid {
            spacing: 0.3,
            alpha_max: 1.0,
        };
        let nodes = odd.nodes();
        assert_eq!(nodes.len(), 5);
        assert!((nodes[4].0 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn g_symmetric_and_vanishes_at_edge() {
        let cfg = WosConfig::new(0.05, 2000);
        let grid = AlphaGrid {
            spacing: 0.1,
            alpha_max: 5.0,
        };
        let up = g_of_y(0.4, 0.05, &cfg, &grid, base()).unwrap();
        let down = g_of_y(-0.4, 0.05, &cfg, &grid, base()).unwrap();
        assert!(up.estimate.agrees_with(&down.estimate, 3.0), "{:?} {:?}", up.estimate, down.estimate);
        let edge = g_of_y(0.999, 0.05, &cfg, &grid, base()).unwrap();
        assert!(edge.estimate.mean < 0.05 * up.estimate.mean);
        assert!(g_of_y(1.0, 0.05, &cfg, &grid, base()).is_err());
    }

    #[test]
    fn identity_check_rejects_bad_dy_and_handles_sign() {
        let cfg = WosConfig::new(0.05, 2000);
        let grid = AlphaGrid {
            spacing: 0.1,
            alpha_max: 5.0,
        };
        assert!(eq9_identity_check(0.5, 0.05, 0.125, &cfg, &grid, base()).is_err());
        assert!(eq9_identity_check(0.5, 0.05, 0.0, &cfg, &grid, base()).is_err());
        let pos = eq9_identity_check(0.5, 0.05, 0.1, &cfg, &grid, base()).unwrap();
        let neg = eq9_identity_check(-0.5, 0.05, 0.1, &cfg, &grid, base()).unwrap();
        assert!(pos.lhs.mean > 0.0 && neg.lhs.mean > 0.0);
        assert!((pos.ratio - 1.0).abs() < 4.0 * pos.ratio_stderr + 0.05, "{}", pos.ratio);
    }

    #[test]
    fn starved_identity_check_is_inconclusive() {
        let cfg = WosConfig::new(0.05, 5);
        let grid = AlphaGrid {
            spacing: 0.5,
            alpha_max: 5.0,
        };
        let r = eq9_identity_check(0.5, 0.05, 0.02, &cfg, &grid, base()).unwrap();
        assert!(r.inconclusive && !r.passed);
    }

    #[test]
    fn shape_checks_monotone_and_bounded() {
        let cfg = WosConfig::new(0.1, 4000);
        let r = lemma4_shape_checks(&[0.1, 0.05], &cfg, None, base()).unwrap();
        for s in &r.per_epsilon {
            assert!(s.monotone_y && s.monotone_alpha);
            assert!(s.c5 > 0.0 && s.c5.is_finite());
            let f3 = s.y_scan[2].estimate;
            let f6 = s.y_scan[5].estimate;
            assert!(f3.mean >= f6.mean - 3.0 * f3.stderr.hypot(f6.stderr));
        }
        assert!(r.c5_spread < 2.0);
        assert!(lemma4_shape_checks(&[0.3], &cfg, None, base()).is_err());
    }
}
