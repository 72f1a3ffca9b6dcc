//! Brownian paths, bridges and simple random walks on uniform time grids.

use std::io::Write;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, Error, Result};
use crate::geom::Point;
use crate::rng::{Stream, StreamId};

/// A planar trajectory sampled on a uniform grid of spacing `dt`.
///
/// `points[0]` is the start; the path spans `(points.len() - 1)·dt` time units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathSample {
    pub dt: f64,
    pub points: Vec<Point>,
    pub seed_record: Option<StreamId>,
}

impl PathSample {
    pub fn new(dt: f64, points: Vec<Point>, seed_record: Option<StreamId>) -> Result<Self> {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::invalid("dt", "must be positive"));
        }
        if points.is_empty() {
            return Err(Error::invalid("points", "a path needs at least one point"));
        }
        Ok(PathSample {
            dt,
            points,
            seed_record,
        })
    }

    pub fn start(&self) -> Point {
        self.points[0]
    }

    pub fn end(&self) -> Point {
        *self.points.last().expect("paths are never empty")
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn duration(&self) -> f64 {
        (self.points.len() - 1) as f64 * self.dt
    }

    pub fn time(&self, index: usize) -> f64 {
        index as f64 * self.dt
    }

    /// Shifts every point by `offset`.
    pub fn translated(&self, offset: Point) -> PathSample {
        PathSample {
            dt: self.dt,
            points: self.points.iter().map(|&p| p + offset).collect(),
            seed_record: self.seed_record,
        }
    }

    /// Debug dump: header `t,x,y` then one row per grid point.
    pub fn write_csv(&self, mut out: impl Write) -> std::io::Result<()> {
        writeln!(out, "t,x,y")?;
        for (i, p) in self.points.iter().enumerate() {
            writeln!(out, "{:.16e},{:.16e},{:.16e}", self.time(i), p.x, p.y)?;
        }
        Ok(())
    }
}

/// Number of grid steps and the exact spacing that tiles `duration`.
///
/// The requested `dt` is rounded so an integer number of steps spans the
/// duration exactly.
pub fn grid_steps(dt: f64, duration: f64) -> Result<(usize, f64)> {
    ensure_finite("dt", dt)?;
    ensure_finite("duration", duration)?;
    if dt <= 0.0 {
        return Err(Error::invalid("dt", "must be positive"));
    }
    if dt > duration * (1.0 + 1e-12) {
        return Err(Error::invalid("dt", format!("dt={dt} exceeds duration={duration}")));
    }
    let steps = ((duration / dt).round() as usize).max(1);
    Ok((steps, duration / steps as f64))
}

pub(crate) fn gaussian_pair(rng: &mut impl Rng, sd: f64) -> Point {
    let gx: f64 = rng.sample(StandardNormal);
    let gy: f64 = rng.sample(StandardNormal);
    Point::new(gx * sd, gy * sd)
}

/// Standard planar Brownian motion from the origin.
pub fn sample_path(dt: f64, duration: f64, stream: &mut Stream) -> Result<PathSample> {
    sample_path_from(Point::ORIGIN, dt, duration, stream)
}

pub fn sample_path_from(
    start: Point,
    dt: f64,
    duration: f64,
    stream: &mut Stream,
) -> Result<PathSample> {
    ensure_finite("start.x", start.x)?;
    ensure_finite("start.y", start.y)?;
    let (steps, dt) = grid_steps(dt, duration)?;
    let sd = dt.sqrt();
    let mut points = Vec::with_capacity(steps + 1);
    let mut p = start;
    points.push(p);
    for _ in 0..steps {
        p = p + gaussian_pair(stream, sd);
        points.push(p);
    }
    Ok(PathSample {
        dt,
        points,
        seed_record: Some(stream.id()),
    })
}

/// One-dimensional Brownian motion from 0; returns the grid values and spacing.
pub fn sample_walk_1d(dt: f64, duration: f64, stream: &mut Stream) -> Result<(Vec<f64>, f64)> {
    let (steps, dt) = grid_steps(dt, duration)?;
    let sd = dt.sqrt();
    let mut xs = Vec::with_capacity(steps + 1);
    let mut x = 0.0;
    xs.push(x);
    for _ in 0..steps {
        let g: f64 = stream.sample(StandardNormal);
        x += sd * g;
        xs.push(x);
    }
    Ok((xs, dt))
}

/// Endpoints and duration of a Brownian bridge.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BridgeSpec {
    pub q1: Point,
    pub q2: Point,
    pub duration: f64,
}

impl BridgeSpec {
    pub fn new(q1: Point, q2: Point, duration: f64) -> Result<Self> {
        ensure_finite("duration", duration)?;
        if duration <= 0.0 {
            return Err(Error::invalid("duration", "must be positive"));
        }
        Ok(BridgeSpec { q1, q2, duration })
    }
}

/// Draws the bridge value `h` time units after `from`, given the bridge must
/// reach `to` after `remaining` time units.
pub(crate) fn bridge_step(from: Point, to: Point, h: f64, remaining: f64, rng: &mut impl Rng) -> Point {
    if h >= remaining {
        return to;
    }
    let frac = h / remaining;
    let mean = from + (to - from) * frac;
    let sd = (h * (remaining - h) / remaining).sqrt();
    mean + gaussian_pair(rng, sd)
}

/// Midpoint of a bridge of duration `h` between `a` and `b`.
pub(crate) fn bridge_midpoint(a: Point, b: Point, h: f64, rng: &mut impl Rng) -> Point {
    (a + b) * 0.5 + gaussian_pair(rng, (0.25 * h).sqrt())
}

/// Fills `out` (which already ends with `from`) with `steps` bridge points
/// from `from` to `to` over `duration`; the last pushed point is exactly `to`.
pub(crate) fn push_bridge(
    out: &mut Vec<Point>,
    from: Point,
    to: Point,
    duration: f64,
    steps: usize,
    rng: &mut impl Rng,
) {
    let h = duration / steps as f64;
    let mut p = from;
    for k in 1..steps {
        let remaining = duration - (k - 1) as f64 * h;
        p = bridge_step(p, to, h, remaining, rng);
        out.push(p);
    }
    out.push(to);
}

/// Brownian bridge from `q1` to `q2` by sequential conditional Gaussians.
pub fn sample_bridge(spec: &BridgeSpec, dt: f64, stream: &mut Stream) -> Result<PathSample> {
    let (steps, dt) = grid_steps(dt, spec.duration)?;
    let mut points = Vec::with_capacity(steps + 1);
    points.push(spec.q1);
    push_bridge(&mut points, spec.q1, spec.q2, spec.duration, steps, stream);
    Ok(PathSample {
        dt,
        points,
        seed_record: Some(stream.id()),
    })
}

/// Refines the grid by an integer `factor`, keeping the original points and
/// filling each gap with a conditional bridge.
pub fn refine(path: &PathSample, factor: usize, stream: &mut Stream) -> Result<PathSample> {
    if factor == 0 {
        return Err(Error::invalid("factor", "must be at least 1"));
    }
    if factor == 1 {
        return Ok(path.clone());
    }
    let mut points = Vec::with_capacity((path.len() - 1) * factor + 1);
    points.push(path.points[0]);
    for w in path.points.windows(2) {
        push_bridge(&mut points, w[0], w[1], path.dt, factor, stream);
    }
    Ok(PathSample {
        dt: path.dt / factor as f64,
        points,
        seed_record: path.seed_record,
    })
}

/// First grid index with `|y| ≥ band`.
pub fn first_exit_index(path: &PathSample, band: f64) -> Option<usize> {
    path.points.iter().position(|p| p.y.abs() >= band)
}

/// Simple random walk on ℤ² from the origin; `n_steps + 1` sites.
pub fn sample_srw(n_steps: usize, rng: &mut impl Rng) -> Vec<(i64, i64)> {
    let mut out = Vec::with_capacity(n_steps + 1);
    let (mut x, mut y) = (0i64, 0i64);
    out.push((x, y));
    for _ in 0..n_steps {
        match rng.random_range(0..4u8) {
            0 => x += 1,
            1 => x -= 1,
            2 => y += 1,
            _ => y -= 1,
        }
        out.push((x, y));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{domain, StreamId};
    use crate::stats::{ks_critical_1pct, ks_statistic, mean_sd, normal_cdf};

    fn stream(i: u64) -> Stream {
        StreamId::new(11, domain::PATH, i).stream()
    }

    #[test]
    fn path_is_deterministic() {
        let a = sample_path(0.01, 1.0, &mut stream(3)).unwrap();
        let b = sample_path(0.01, 1.0, &mut stream(3)).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.start(), Point::ORIGIN);
        assert_eq!(a.len(), 101);
        assert!((a.duration() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn single_increment_path() {
        let p = sample_path(1.0, 1.0, &mut stream(0)).unwrap();
        assert_eq!(p.len(), 2);
        assert!(sample_path(2.0, 1.0, &mut stream(0)).is_err());
        assert!(sample_path(f64::NAN, 1.0, &mut stream(0)).is_err());
        assert!(sample_path(0.1, f64::INFINITY, &mut stream(0)).is_err());
    }

    #[test]
    fn endpoint_variance_is_duration() {
        let n = 100_000;
        let xs: Vec<f64> = (0..n)
            .map(|i| sample_path(0.25, 1.0, &mut stream(i)).unwrap().end().x)
            .collect();
        let (_, sd) = mean_sd(&xs);
        let var = sd * sd;
        assert!((var - 1.0).abs() < 3.0 * (2.0 / n as f64).sqrt(), "var = {var}");
    }

    #[test]
    fn half_duration_marginal_matches_short_path() {
        // X at T/2 of a duration-T path vs N(0, T/2).
        let n = 10_000;
        let t = 2.0;
        let mut xs: Vec<f64> = (0..n)
            .map(|i| {
                let p = sample_path(0.1, t, &mut stream(i)).unwrap();
                p.points[p.len() / 2].x
            })
            .collect();
        let sd = (t / 2.0).sqrt();
        let d = ks_statistic(&mut xs, |x| normal_cdf(x / sd));
        assert!(d < ks_critical_1pct(n as usize), "KS D = {d}");
    }

    #[test]
    fn bridge_is_pinned() {
        let spec = BridgeSpec::new(Point::new(0.3, -1.0), Point::new(2.0, 0.5), 0.7).unwrap();
        let b = sample_bridge(&spec, 0.01, &mut stream(1)).unwrap();
        assert_eq!(b.points[0], spec.q1);
        assert_eq!(b.end(), spec.q2);
        let two = sample_bridge(&spec, 0.7, &mut stream(1)).unwrap();
        assert_eq!(two.points, vec![spec.q1, spec.q2]);
        assert!(BridgeSpec::new(spec.q1, spec.q2, 0.0).is_err());
    }

    #[test]
    fn bridge_midpoint_law() {
        let t = 2.0;
        let spec = BridgeSpec::new(Point::ORIGIN, Point::ORIGIN, t).unwrap();
        let n = 100_000;
        let pts: Vec<Point> = (0..n)
            .map(|i| sample_bridge(&spec, 0.25, &mut stream(i)).unwrap().points[4])
            .collect();
        let xs: Vec<f64> = pts.iter().map(|p| p.x).collect();
        let ys: Vec<f64> = pts.iter().map(|p| p.y).collect();
        let tol = 3.0 * (t / 4.0 / n as f64).sqrt();
        let (mx, sx) = mean_sd(&xs);
        let (my, _) = mean_sd(&ys);
        assert!(mx.abs() < tol && my.abs() < tol);
        let var_tol = 3.0 * (t / 4.0) * (2.0 / n as f64).sqrt();
        assert!((sx * sx - t / 4.0).abs() < var_tol);
    }

    #[test]
    fn bridge_marginal_at_quarter_time() {
        let q1 = Point::new(1.0, -2.0);
        let q2 = Point::new(-1.0, 2.0);
        let t = 1.0;
        let s = 0.25;
        let spec = BridgeSpec::new(q1, q2, t).unwrap();
        let n = 50_000;
        let xs: Vec<f64> = (0..n)
            .map(|i| sample_bridge(&spec, 0.05, &mut stream(i)).unwrap().points[5].x)
            .collect();
        let (m, sd) = mean_sd(&xs);
        let want_var = s * (t - s) / t;
        let want_mean = q1.x + (s / t) * (q2.x - q1.x);
        assert!((m - want_mean).abs() < 3.0 * (want_var / n as f64).sqrt());
        assert!((sd * sd - want_var).abs() < 3.0 * want_var * (2.0 / n as f64).sqrt());
    }

    #[test]
    fn refine_identity_and_structure() {
        let p = sample_path(0.1, 1.0, &mut stream(5)).unwrap();
        assert_eq!(refine(&p, 1, &mut stream(6)).unwrap(), p);
        let r = refine(&p, 4, &mut stream(6)).unwrap();
        assert_eq!(r.len(), 41);
        assert!((r.dt - 0.025).abs() < 1e-15);
        for (i, q) in p.points.iter().enumerate() {
            assert_eq!(r.points[4 * i], *q);
        }
        let two = PathSample::new(1.0, vec![Point::ORIGIN, Point::new(1.0, 0.0)], None).unwrap();
        assert_eq!(refine(&two, 2, &mut stream(1)).unwrap().len(), 3);
    }

    #[test]
    fn refined_increment_variance() {
        let two = PathSample::new(1.0, vec![Point::ORIGIN, Point::ORIGIN], None).unwrap();
        let n = 100_000;
        let factor = 4;
        let incs: Vec<f64> = (0..n)
            .map(|i| {
                let r = refine(&two, factor, &mut stream(i)).unwrap();
                r.points[1].x - r.points[0].x
            })
            .collect();
        let (_, sd) = mean_sd(&incs);
        // First increment of a bridge pinned at both ends: variance h(T-h)/T.
        let dt = 1.0 / factor as f64;
        let want = dt * (1.0 - dt);
        assert!((sd * sd - want).abs() < 3.0 * want * (2.0 / n as f64).sqrt());
    }

    #[test]
    fn exit_index_examples() {
        let still = PathSample::new(0.1, vec![Point::ORIGIN; 5], None).unwrap();
        assert_eq!(first_exit_index(&still, 1.0), None);
        let p = PathSample::new(
            0.1,
            vec![Point::new(0.0, 0.0), Point::new(0.0, 0.5), Point::new(0.0, 1.2)],
            None,
        )
        .unwrap();
        assert_eq!(first_exit_index(&p, 1.0), Some(2));
        assert_eq!(first_exit_index(&p, 0.4), Some(1));
    }

    #[test]
    fn srw_examples() {
        let mut rng = stream(9);
        assert_eq!(sample_srw(0, &mut rng), vec![(0, 0)]);
        let w = sample_srw(500, &mut rng);
        assert!(w.windows(2).all(|s| (s[1].0 - s[0].0).abs() + (s[1].1 - s[0].1).abs() == 1));
        let n = 100_000;
        let ends: Vec<(i64, i64)> = (0..n)
            .map(|i| *sample_srw(100, &mut stream(i)).last().unwrap())
            .collect();
        let mx = ends.iter().map(|e| e.0 as f64).sum::<f64>() / n as f64;
        let my = ends.iter().map(|e| e.1 as f64).sum::<f64>() / n as f64;
        let tol = 3.0 * (50.0 / n as f64).sqrt();
        assert!(mx.abs() < tol && my.abs() < tol);
    }

    #[test]
    fn csv_dump_has_header() {
        let p = sample_path(0.5, 1.0, &mut stream(0)).unwrap();
        let mut buf = Vec::new();
        p.write_csv(&mut buf).unwrap();
        let s = String::from_utf8(buf).unwrap();
        assert!(s.starts_with("t,x,y\n"));
        assert_eq!(s.lines().count(), 4);
    }
}
