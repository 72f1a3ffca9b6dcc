use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, Error, Result};
use crate::estimators::Estimate;
use crate::geom::Point;
use crate::rng::Stream;

/// Walk-on-spheres settings.
///
/// The domain is the rectangle `|x − α| ≤ x_cutoff, |y| ≤ 1` minus the
/// ε-ball; the cutoff is measured from the ball centre so the truncated
/// problem keeps translation invariance in α.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WosConfig {
    pub epsilon: f64,
    pub stop_shell: f64,
    pub x_cutoff: f64,
    pub max_steps: u64,
    pub n_walks: u64,
}

impl WosConfig {
    /// Defaults: shell ε/100, cutoff 12, 10⁶ steps per walk.
    pub fn new(epsilon: f64, n_walks: u64) -> Self {
        WosConfig {
            epsilon,
            stop_shell: epsilon / 100.0,
            x_cutoff: 12.0,
            max_steps: 1_000_000,
            n_walks,
        }
    }

    /// Same settings at another radius, shell rescaled to ε/100.
    pub fn with_epsilon(&self, epsilon: f64) -> Self {
        WosConfig {
            epsilon,
            stop_shell: epsilon / 100.0,
            ..*self
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon.is_finite() && self.epsilon > 0.0) {
            return Err(Error::invalid("epsilon", "must be positive"));
        }
        if !(self.stop_shell > 0.0 && self.stop_shell < self.epsilon) {
            return Err(Error::invalid("stop_shell", "must lie in (0, epsilon)"));
        }
        if !(self.x_cutoff >= 5.0 && self.x_cutoff.is_finite()) {
            return Err(Error::invalid("x_cutoff", "must be at least 5"));
        }
        if self.max_steps < 1000 {
            return Err(Error::invalid("max_steps", "must be at least 1000"));
        }
        if self.n_walks == 0 {
            return Err(Error::invalid("n_walks", "must be positive"));
        }
        Ok(())
    }
}

/// How a single walk ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WalkEnd {
    Hit,
    StripExit,
    Cutoff,
    Truncated,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WosEstimate {
    pub estimate: Estimate,
    /// Walks that exceeded `max_steps` (scored 0).
    pub truncated: u64,
    pub total_steps: u64,
}

/// Classifies `p` if it is already absorbed; otherwise returns the radius of
/// the largest admissible jump.
#[inline]
fn absorb_or_radius(p: Point, alpha: f64, cfg: &WosConfig) -> std::result::Result<f64, WalkEnd> {
    let dx = p.x - alpha;
    let d_ball = dx.hypot(p.y) - cfg.epsilon;
    if d_ball <= cfg.stop_shell {
        return Err(WalkEnd::Hit);
    }
    let d_strip = 1.0 - p.y.abs();
    if d_strip <= cfg.stop_shell {
        return Err(WalkEnd::StripExit);
    }
    let d_cut = cfg.x_cutoff - dx.abs();
    if d_cut <= cfg.stop_shell {
        return Err(WalkEnd::Cutoff);
    }
    Ok(d_ball.min(d_strip).min(d_cut))
}

pub(crate) fn walk_once(start: Point, alpha: f64, cfg: &WosConfig, rng: &mut impl Rng) -> (WalkEnd, u64) {
    let mut p = start;
    let mut steps = 0u64;
    loop {
        match absorb_or_radius(p, alpha, cfg) {
            Err(end) => return (end, steps),
            Ok(r) => {
                if steps >= cfg.max_steps {
                    return (WalkEnd::Truncated, steps);
                }
                let angle = rng.random::<f64>() * std::f64::consts::TAU;
                let (s, c) = angle.sin_cos();
                p = Point::new(p.x + r * c, p.y + r * s);
                steps += 1;
            }
        }
    }
}

/// Walk-on-spheres estimate of `f(start, α)`: the mean of `n_walks`
/// Bernoulli trials scoring 1 on reaching the ball's shell.
pub fn wos_estimate(start: Point, alpha: f64, cfg: &WosConfig, stream: &mut Stream) -> Result<WosEstimate> {
    cfg.validate()?;
    ensure_finite("start.x", start.x)?;
    ensure_finite("start.y", start.y)?;
    ensure_finite("alpha", alpha)?;
    if start.y.abs() > 1.0 {
        return Err(Error::invalid("start", format!("|y| = {} exceeds the strip", start.y.abs())));
    }
    let seed = Some(stream.id().into());
    let n = cfg.n_walks;
    // Absorbed starts are deterministic; no randomness consumed.
    if let Err(end) = absorb_or_radius(start, alpha, cfg) {
        let value = if end == WalkEnd::Hit { 1.0 } else { 0.0 };
        return Ok(WosEstimate {
            estimate: Estimate::exact(value, n, seed),
            truncated: 0,
            total_steps: 0,
        });
    }
    let mut hits = 0u64;
    let mut truncated = 0u64;
    let mut total_steps = 0u64;
    for _ in 0..n {
        let (end, steps) = walk_once(start, alpha, cfg, stream);
        total_steps += steps;
        match end {
            WalkEnd::Hit => hits += 1,
            WalkEnd::Truncated => truncated += 1,
            _ => {}
        }
    }
    let p = hits as f64 / n as f64;
    let se = (p * (1.0 - p) / n as f64).sqrt();
    Ok(WosEstimate {
        estimate: Estimate::new(p, se, n, seed),
        truncated,
        total_steps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytic::annulus_hit_prob;
    use crate::rng::{domain, StreamId};

    fn stream(i: u64) -> Stream {
        StreamId::new(3, domain::WOS, i).stream()
    }

    #[test]
    fn absorbed_starts() {
        let cfg = WosConfig::new(0.05, 1000);
        let inside = wos_estimate(Point::new(0.01, 0.02), 0.0, &cfg, &mut stream(0)).unwrap();
        assert_eq!(inside.estimate.mean, 1.0);
        assert_eq!(inside.estimate.stderr, 0.0);
        let edge = wos_estimate(Point::new(0.3, 1.0), 0.0, &cfg, &mut stream(0)).unwrap();
        assert_eq!(edge.estimate.mean, 0.0);
        let edge = wos_estimate(Point::new(0.3, -1.0), 0.0, &cfg, &mut stream(0)).unwrap();
        assert_eq!(edge.estimate.mean, 0.0);
        assert!(wos_estimate(Point::new(0.0, 1.5), 0.0, &cfg, &mut stream(0)).is_err());
    }

    #[test]
    fn config_validation() {
        let mut cfg = WosConfig::new(0.05, 10);
        assert!(cfg.validate().is_ok());
        cfg.stop_shell = 0.06;
        assert!(cfg.validate().is_err());
        let mut cfg = WosConfig::new(0.05, 10);
        cfg.x_cutoff = 4.0;
        assert!(cfg.validate().is_err());
        let mut cfg = WosConfig::new(0.05, 10);
        cfg.max_steps = 10;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn estimates_are_probabilities_with_bounded_stderr() {
        let cfg = WosConfig::new(0.05, 2000);
        for (i, &(x, y)) in [(0.0, 0.5), (1.0, 0.2), (-0.3, -0.7), (4.0, 0.0)].iter().enumerate() {
            let e = wos_estimate(Point::new(x, y), 0.0, &cfg, &mut stream(i as u64)).unwrap();
            assert!((0.0..=1.0).contains(&e.estimate.mean));
            assert!(e.estimate.stderr <= 0.5 / (cfg.n_walks as f64).sqrt() + 1e-15);
        }
    }

    #[test]
    fn translation_invariance() {
        let cfg = WosConfig::new(0.05, 20_000);
        let mut r = stream(99);
        for i in 0..5 {
            let x = r.random_range(-1.0..1.0);
            let y = r.random_range(-0.9..0.9);
            let alpha = r.random_range(-2.0..2.0);
            let a = wos_estimate(Point::new(x, y), alpha, &cfg, &mut stream(2 * i)).unwrap();
            let b = wos_estimate(Point::new(x - alpha, y), 0.0, &cfg, &mut stream(2 * i + 1)).unwrap();
            assert!(a.estimate.agrees_with(&b.estimate, 3.0), "{a:?} vs {b:?}");
        }
    }

    #[test]
    fn bracketed_by_annulus_formula() {
        // Inside the unit disk around the ball, which fits in the strip.
        let eps = 0.05;
        let cfg = WosConfig::new(eps, 20_000);
        let r_out = cfg.x_cutoff.hypot(1.0);
        for (i, &r) in [0.1, 0.3, 0.6].iter().enumerate() {
            let e = wos_estimate(Point::new(r, 0.0), 0.0, &cfg, &mut stream(50 + i as u64)).unwrap();
            let lo = annulus_hit_prob(r, eps, 1.0).unwrap();
            let hi = annulus_hit_prob(r, eps, r_out).unwrap();
            let s = 3.0 * e.estimate.stderr;
            assert!(e.estimate.mean >= lo - s && e.estimate.mean <= hi + s, "r={r} {e:?} [{lo}, {hi}]");
        }
    }
}
