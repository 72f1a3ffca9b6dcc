//! Exact geometry of a polyline's ε-sausage on the target segment `[0,1]×{0}`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{segment_dist_to_unit_interval, Point};
use crate::paths::{bridge_midpoint, PathSample};

/// Intervals closer than this are merged.
pub const MERGE_TOL: f64 = 1e-12;

/// Sorted, disjoint closed subintervals of `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct IntervalUnion {
    intervals: Vec<(f64, f64)>,
}

impl IntervalUnion {
    pub fn empty() -> Self {
        IntervalUnion::default()
    }

    /// Clips to `[0,1]`, drops empty pieces, sorts and merges. Endpoints
    /// within the merge tolerance of 0 or 1 snap onto them.
    pub fn from_intervals(raw: impl IntoIterator<Item = (f64, f64)>) -> Self {
        let snap = |l: f64, r: f64| {
            let l = if l <= MERGE_TOL { 0.0 } else { l };
            let r = if r >= 1.0 - MERGE_TOL { 1.0 } else { r };
            (l, r)
        };
        let mut v: Vec<(f64, f64)> = raw
            .into_iter()
            .map(|(l, r)| snap(l, r))
            .filter(|(l, r)| r > l)
            .collect();
        v.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut out: Vec<(f64, f64)> = Vec::with_capacity(v.len());
        for (l, r) in v {
            match out.last_mut() {
                Some(last) if l <= last.1 + MERGE_TOL => last.1 = last.1.max(r),
                _ => out.push((l, r)),
            }
        }
        IntervalUnion { intervals: out }
    }

    pub fn intervals(&self) -> &[(f64, f64)] {
        &self.intervals
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    pub fn measure(&self) -> f64 {
        self.intervals.iter().map(|(l, r)| r - l).sum::<f64>().min(1.0)
    }

    pub fn contains(&self, x: f64) -> bool {
        let idx = self.intervals.partition_point(|&(l, _)| l <= x);
        idx > 0 && x <= self.intervals[idx - 1].1
    }

    /// Set containment up to the merge tolerance.
    pub fn is_subset_of(&self, other: &IntervalUnion) -> bool {
        self.intervals.iter().all(|&(l, r)| {
            other
                .intervals
                .iter()
                .any(|&(ol, or)| ol <= l + MERGE_TOL && r <= or + MERGE_TOL)
        })
    }

    pub fn union(&self, other: &IntervalUnion) -> IntervalUnion {
        IntervalUnion::from_intervals(self.intervals.iter().chain(&other.intervals).copied())
    }
}

/// Total length of the union, `Ξ` when the union is the final covered set.
pub fn xi_measure(u: &IntervalUnion) -> f64 {
    u.measure()
}

/// Whether the union contains `[slack, 1 - slack]`.
pub fn covers_segment(u: &IntervalUnion, slack: f64) -> bool {
    let lo = slack;
    let hi = 1.0 - slack;
    if lo > hi {
        return true;
    }
    u.intervals
        .iter()
        .any(|&(l, r)| l <= lo + MERGE_TOL && r >= hi - MERGE_TOL)
}

fn disk_chord(c: Point, eps: f64) -> Option<(f64, f64)> {
    let h2 = eps * eps - c.y * c.y;
    if h2 < 0.0 {
        return None;
    }
    let h = h2.sqrt();
    Some((c.x - h, c.x + h))
}

/// `{t : lo ≤ slope·t + offset ≤ hi}`.
fn linear_band(slope: f64, offset: f64, lo: f64, hi: f64) -> Option<(f64, f64)> {
    if slope == 0.0 {
        return (lo <= offset && offset <= hi).then_some((f64::NEG_INFINITY, f64::INFINITY));
    }
    let a = (lo - offset) / slope;
    let b = (hi - offset) / slope;
    Some((a.min(b), a.max(b)))
}

/// The x-interval `{x : dist((x,0), [a,b]) ≤ ε}`, unclipped.
///
/// The capsule around the segment is convex, so its trace on the axis is one
/// interval: the hull of the two end-disk chords and the trace of the
/// rectangle swept by the segment.
pub fn segment_chord(a: Point, b: Point, eps: f64) -> Option<(f64, f64)> {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    let mut take = |iv: Option<(f64, f64)>| {
        if let Some((l, r)) = iv {
            lo = lo.min(l);
            hi = hi.max(r);
        }
    };
    take(disk_chord(a, eps));
    take(disk_chord(b, eps));
    let d = b - a;
    let len = d.norm();
    if len > 0.0 {
        let u = d * (1.0 / len);
        let n = Point::new(-u.y, u.x);
        // With t = x - a.x: n·(q - a) = n.x t - n.y a.y, u·(q - a) = u.x t - u.y a.y.
        let across = linear_band(n.x, -n.y * a.y, -eps, eps);
        let along = linear_band(u.x, -u.y * a.y, 0.0, len);
        if let (Some(c1), Some(c2)) = (across, along) {
            let l = c1.0.max(c2.0);
            let r = c1.1.min(c2.1);
            if l <= r {
                take(Some((a.x + l, a.x + r)));
            }
        }
    }
    (lo <= hi).then_some((lo, hi))
}

/// Streams segment chords, merging consecutive overlapping runs before
/// the final sort.
struct CoverAccumulator {
    eps: f64,
    runs: Vec<(f64, f64)>,
    current: Option<(f64, f64)>,
}

impl CoverAccumulator {
    fn new(eps: f64) -> Self {
        CoverAccumulator {
            eps,
            runs: Vec::new(),
            current: None,
        }
    }

    fn push(&mut self, iv: (f64, f64)) {
        if iv.1 < 0.0 || iv.0 > 1.0 {
            return;
        }
        match &mut self.current {
            Some(cur) if iv.0 <= cur.1 + MERGE_TOL && iv.1 >= cur.0 - MERGE_TOL => {
                cur.0 = cur.0.min(iv.0);
                cur.1 = cur.1.max(iv.1);
            }
            _ => {
                if let Some(cur) = self.current.take() {
                    self.runs.push(cur);
                }
                self.current = Some(iv);
            }
        }
    }

    fn push_point(&mut self, p: Point) {
        if let Some(iv) = disk_chord(p, self.eps) {
            self.push(iv);
        }
    }

    fn push_segment(&mut self, a: Point, b: Point) {
        let eps = self.eps;
        if (a.y > eps && b.y > eps) || (a.y < -eps && b.y < -eps) {
            return;
        }
        if (a.x < -eps && b.x < -eps) || (a.x > 1.0 + eps && b.x > 1.0 + eps) {
            return;
        }
        if let Some(iv) = segment_chord(a, b, eps) {
            self.push(iv);
        }
    }

    fn finish(mut self) -> IntervalUnion {
        if let Some(cur) = self.current.take() {
            self.runs.push(cur);
        }
        IntervalUnion::from_intervals(self.runs)
    }
}

/// `{x ∈ [0,1] : dist((x,0), polyline) ≤ ε}` for the polyline through
/// `path.points[0..=stop_index]` (the whole path when `stop_index` is `None`).
pub fn cover_intervals(path: &PathSample, epsilon: f64, stop_index: Option<usize>) -> IntervalUnion {
    let last = stop_index.unwrap_or(path.len() - 1).min(path.len() - 1);
    cover_points(&path.points[..=last], epsilon)
}

pub(crate) fn cover_points(points: &[Point], epsilon: f64) -> IntervalUnion {
    let mut acc = CoverAccumulator::new(epsilon);
    if points.len() == 1 {
        acc.push_point(points[0]);
    }
    for w in points.windows(2) {
        acc.push_segment(w[0], w[1]);
    }
    acc.finish()
}

/// Sausage radius, coverage threshold and refinement margin.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SausageParams {
    pub epsilon: f64,
    pub theta: f64,
    /// Refinement band half-width in units of the Lévy modulus `√(dt·|log dt|)`.
    #[serde(default)]
    pub refine_margin: f64,
}

impl SausageParams {
    pub fn new(epsilon: f64, theta: f64, refine_margin: f64) -> Result<Self> {
        let p = SausageParams {
            epsilon,
            theta,
            refine_margin,
        };
        p.validate()?;
        Ok(p)
    }

    /// `θ = 0` is accepted as the trivial threshold (every path qualifies).
    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon.is_finite() && self.epsilon > 0.0) {
            return Err(Error::invalid("epsilon", format!("must be positive, got {}", self.epsilon)));
        }
        if !(0.0..=1.0).contains(&self.theta) {
            return Err(Error::invalid("theta", format!("must lie in [0, 1], got {}", self.theta)));
        }
        if !(self.refine_margin.is_finite() && self.refine_margin >= 0.0) {
            return Err(Error::invalid("refine_margin", "must be nonnegative"));
        }
        Ok(())
    }
}

/// Limits for [`adaptive_cover`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RefineBudget {
    /// Segments are not split below this duration.
    pub dt_min: f64,
    /// Maximum number of inserted bridge points.
    pub max_inserted: usize,
}

impl RefineBudget {
    pub fn for_path(path: &PathSample) -> Self {
        RefineBudget {
            dt_min: path.dt / 64.0,
            max_inserted: 16 * path.len(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdaptiveCover {
    pub union: IntervalUnion,
    pub inserted: usize,
    pub budget_limited: bool,
}

/// Lévy-modulus refinement band `margin·√(h·|log h|)`.
pub fn refine_band(margin: f64, h: f64) -> f64 {
    margin * (h * h.ln().abs()).sqrt()
}

/// Cover computation that bisects, by conditional bridge midpoints, every
/// segment whose distance to the target lies within the refinement band
/// around ε, until the segment duration reaches `dt_min`.
pub fn adaptive_cover(
    path: &PathSample,
    params: &SausageParams,
    budget: RefineBudget,
    rng: &mut impl Rng,
) -> Result<AdaptiveCover> {
    params.validate()?;
    let eps = params.epsilon;
    let mut acc = CoverAccumulator::new(eps);
    let mut inserted = 0usize;
    let mut budget_limited = false;
    if path.len() == 1 {
        acc.push_point(path.points[0]);
    }
    let mut stack: Vec<(Point, Point, f64)> = Vec::new();
    for w in path.points.windows(2) {
        stack.push((w[0], w[1], path.dt));
        while let Some((a, b, h)) = stack.pop() {
            let m = refine_band(params.refine_margin, h);
            let dist = segment_dist_to_unit_interval(a, b);
            let wants_split = m > 0.0 && dist > eps - m && dist < eps + m && h > budget.dt_min;
            if wants_split && inserted < budget.max_inserted {
                let mid = bridge_midpoint(a, b, h, rng);
                inserted += 1;
                // Right half first so the left half is processed next.
                stack.push((mid, b, 0.5 * h));
                stack.push((a, mid, 0.5 * h));
            } else {
                if wants_split {
                    budget_limited = true;
                }
                acc.push_segment(a, b);
            }
        }
    }
    Ok(AdaptiveCover {
        union: acc.finish(),
        inserted,
        budget_limited,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::paths::{refine, sample_path};
    use crate::rng::{domain, StreamId};
    use crate::geom::point_segment_dist;
    use proptest::prelude::*;

    fn path(points: Vec<Point>) -> PathSample {
        PathSample::new(0.01, points, None).unwrap()
    }

    /// Brute-force measure by scanning evenly spaced abscissas.
    fn scan_measure(points: &[Point], eps: f64, n: usize) -> f64 {
        let hits = (0..n)
            .filter(|&i| {
                let q = Point::new((i as f64 + 0.5) / n as f64, 0.0);
                if points.len() == 1 {
                    return q.dist(points[0]) <= eps;
                }
                points.windows(2).any(|w| point_segment_dist(q, w[0], w[1]) <= eps)
            })
            .count();
        hits as f64 / n as f64
    }

    #[test]
    fn stationary_path_chord() {
        let u = cover_intervals(&path(vec![Point::new(0.5, 0.0); 3]), 0.1, None);
        assert_eq!(u.intervals().len(), 1);
        let (l, r) = u.intervals()[0];
        assert!((l - 0.4).abs() < 1e-15 && (r - 0.6).abs() < 1e-15);
        assert!((xi_measure(&u) - 0.2).abs() < 1e-15);
        let single = cover_intervals(&path(vec![Point::new(0.5, 0.0)]), 0.1, None);
        assert_eq!(single, u);
    }

    #[test]
    fn axis_path_covers_everything() {
        for eps in [1e-6, 0.01, 0.3, 5.0] {
            let u = cover_intervals(&path(vec![Point::ORIGIN, Point::new(1.0, 0.0)]), eps, None);
            assert_eq!(u.intervals(), &[(0.0, 1.0)]);
            assert_eq!(xi_measure(&u), 1.0);
            assert!(covers_segment(&u, 0.0));
        }
    }

    #[test]
    fn high_path_covers_nothing() {
        let eps = 0.05;
        let u = cover_intervals(
            &path(vec![Point::new(-1.0, 2.0 * eps), Point::new(2.0, 2.0 * eps)]),
            eps,
            None,
        );
        assert!(u.is_empty());
    }

    #[test]
    fn measure_examples() {
        assert_eq!(xi_measure(&IntervalUnion::empty()), 0.0);
        assert_eq!(xi_measure(&IntervalUnion::from_intervals([(0.0, 1.0)])), 1.0);
        let u = IntervalUnion::from_intervals([(0.1, 0.2), (0.5, 0.9)]);
        assert!((xi_measure(&u) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn touching_intervals_merge() {
        let u = IntervalUnion::from_intervals([(0.0, 0.5), (0.5, 1.0)]);
        assert_eq!(u.intervals(), &[(0.0, 1.0)]);
        assert!(covers_segment(&u, 0.0));
        let seam = IntervalUnion::from_intervals([(0.0, 0.5), (0.5 + 1e-13, 1.0)]);
        assert!(covers_segment(&seam, 0.0));
        let gap = IntervalUnion::from_intervals([(0.0, 0.4), (0.6, 1.0)]);
        assert!(!covers_segment(&gap, 0.0));
        assert!(covers_segment(&IntervalUnion::from_intervals([(0.1, 0.9)]), 0.1));
    }

    #[test]
    fn contains_is_closed() {
        let u = IntervalUnion::from_intervals([(0.1, 0.2), (0.5, 0.9)]);
        assert!(u.contains(0.1) && u.contains(0.2) && u.contains(0.7));
        assert!(!u.contains(0.3) && !u.contains(0.95) && !u.contains(0.0));
    }

    #[test]
    fn chord_of_diagonal_segment() {
        // Segment from (0, -1) to (1, 1) crosses the axis at 0.5 at angle atan(2).
        let (l, r) = segment_chord(Point::new(0.0, -1.0), Point::new(1.0, 1.0), 0.1).unwrap();
        let half = 0.1 / (2.0f64.atan()).sin();
        assert!((l - (0.5 - half)).abs() < 1e-14);
        assert!((r - (0.5 + half)).abs() < 1e-14);
        // Vertical segment: chord is at most 2ε wide.
        let (l, r) = segment_chord(Point::new(0.3, -1.0), Point::new(0.3, 1.0), 0.1).unwrap();
        assert!((l - 0.2).abs() < 1e-14 && (r - 0.4).abs() < 1e-14);
    }

    #[test]
    fn polylines_match_brute_force_scan() {
        let mut rng = StreamId::new(1, domain::PATH, 0).stream();
        for _ in 0..50 {
            let pts: Vec<Point> = (0..5)
                .map(|_| Point::new(rng.random_range(-0.3..1.3), rng.random_range(-0.4..0.4)))
                .collect();
            for eps in [0.05, 0.1, 0.3] {
                let exact = xi_measure(&cover_points(&pts, eps));
                let scan = scan_measure(&pts, eps, 100_000);
                assert!((exact - scan).abs() < 2e-4, "{exact} vs {scan}");
            }
        }
    }

    #[test]
    fn zero_margin_adaptive_is_plain_cover() {
        let mut s = StreamId::new(4, domain::PATH, 1).stream();
        let p = sample_path(0.001, 1.0, &mut s).unwrap();
        let params = SausageParams::new(0.1, 0.5, 0.0).unwrap();
        let a = adaptive_cover(&p, &params, RefineBudget::for_path(&p), &mut s).unwrap();
        assert_eq!(a.union, cover_intervals(&p, 0.1, None));
        assert_eq!(a.inserted, 0);
    }

    #[test]
    fn adaptive_on_axis_path() {
        let p = path(vec![Point::ORIGIN, Point::new(0.5, 0.0), Point::new(1.0, 0.0)]);
        let params = SausageParams::new(0.1, 0.5, 3.0).unwrap();
        let mut s = StreamId::new(4, domain::PATH, 2).stream();
        let a = adaptive_cover(&p, &params, RefineBudget::for_path(&p), &mut s).unwrap();
        assert_eq!(a.union.intervals(), &[(0.0, 1.0)]);
    }

    #[test]
    fn adaptive_budget_is_reported() {
        let mut s = StreamId::new(4, domain::PATH, 3).stream();
        let p = sample_path(0.01, 1.0, &mut s).unwrap();
        let params = SausageParams::new(0.1, 0.5, 50.0).unwrap();
        let budget = RefineBudget {
            dt_min: 1e-9,
            max_inserted: 10,
        };
        let a = adaptive_cover(&p, &params, budget, &mut s).unwrap();
        assert!(a.budget_limited);
        assert_eq!(a.inserted, 10);
    }

    #[test]
    fn adaptive_refinement_moves_toward_fine_grid() {
        // Coarse cover underestimates Ξ; adaptive refinement recovers part of the gap
        // measured against a uniform 64x bridge refinement of the same coarse paths.
        let eps = 0.1;
        let params = SausageParams::new(eps, 0.5, 3.0).unwrap();
        let n = 400;
        let (mut coarse, mut adapt, mut fine) = (0.0, 0.0, 0.0);
        for i in 0..n {
            let mut s = StreamId::new(21, domain::PATH, i).stream();
            let p = sample_path(0.01, 1.0, &mut s).unwrap();
            coarse += xi_measure(&cover_intervals(&p, eps, None));
            let mut s_a = StreamId::new(22, domain::PATH, i).stream();
            let budget = RefineBudget {
                dt_min: p.dt / 64.0,
                max_inserted: usize::MAX,
            };
            adapt += xi_measure(&adaptive_cover(&p, &params, budget, &mut s_a).unwrap().union);
            let mut s_f = StreamId::new(23, domain::PATH, i).stream();
            fine += xi_measure(&cover_intervals(&refine(&p, 64, &mut s_f).unwrap(), eps, None));
        }
        let (coarse, adapt, fine) = (coarse / n as f64, adapt / n as f64, fine / n as f64);
        assert!(adapt > coarse, "adaptive {adapt} vs coarse {coarse}");
        assert!((fine - adapt).abs() < (fine - coarse).abs(), "fine {fine} adapt {adapt} coarse {coarse}");
    }

    fn arb_polyline() -> impl Strategy<Value = Vec<Point>> {
        prop::collection::vec((-0.5f64..1.5, -0.5f64..0.5), 1..12)
            .prop_map(|v| v.into_iter().map(|(x, y)| Point::new(x, y)).collect())
    }

    proptest! {
        #[test]
        fn monotone_in_epsilon(pts in arb_polyline(), e1 in 0.001f64..0.3, de in 0.0f64..0.3) {
            let p = path(pts);
            let small = cover_intervals(&p, e1, None);
            let big = cover_intervals(&p, e1 + de, None);
            prop_assert!(small.is_subset_of(&big));
        }

        #[test]
        fn monotone_in_time(pts in arb_polyline(), eps in 0.01f64..0.3, i in 0usize..12, j in 0usize..12) {
            let p = path(pts);
            let (i, j) = (i.min(j).min(p.len() - 1), i.max(j).min(p.len() - 1));
            let early = cover_intervals(&p, eps, Some(i));
            let late = cover_intervals(&p, eps, Some(j));
            prop_assert!(early.is_subset_of(&late));
        }

        #[test]
        fn translation_shifts_union(
            pts in prop::collection::vec((0.35f64..0.65, -0.2f64..0.2), 1..8),
            eps in 0.01f64..0.1,
            shift in -0.1f64..0.1,
        ) {
            let p = path(pts.into_iter().map(|(x, y)| Point::new(x, y)).collect());
            let a = cover_intervals(&p, eps, None);
            let b = cover_intervals(&p.translated(Point::new(shift, 0.0)), eps, None);
            prop_assert_eq!(a.intervals().len(), b.intervals().len());
            for (x, y) in a.intervals().iter().zip(b.intervals()) {
                prop_assert!((x.0 + shift - y.0).abs() < 1e-12 && (x.1 + shift - y.1).abs() < 1e-12);
            }
        }

        #[test]
        fn full_cover_means_unit_measure(pts in arb_polyline(), eps in 0.05f64..1.0) {
            let u = cover_intervals(&path(pts), eps, None);
            if covers_segment(&u, 0.0) {
                prop_assert_eq!(xi_measure(&u), 1.0);
            }
            let m = xi_measure(&u);
            prop_assert!((0.0..=1.0).contains(&m));
            for w in u.intervals().windows(2) {
                prop_assert!(w[0].1 < w[1].0);
            }
        }
    }
}
