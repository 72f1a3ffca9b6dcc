use std::ops::{Add, Mul, Sub};

use serde::{Deserialize, Serialize};

/// A point (or vector) in the plane.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const ORIGIN: Point = Point { x: 0.0, y: 0.0 };

    pub const fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn dot(self, other: Point) -> f64 {
        self.x * other.x + self.y * other.y
    }

    pub fn dist(self, other: Point) -> f64 {
        (self - other).norm()
    }

    pub fn lerp(self, other: Point, s: f64) -> Point {
        self + (other - self) * s
    }
}

impl Add for Point {
    type Output = Point;
    fn add(self, rhs: Point) -> Point {
        Point::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl Sub for Point {
    type Output = Point;
    fn sub(self, rhs: Point) -> Point {
        Point::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl Mul<f64> for Point {
    type Output = Point;
    fn mul(self, rhs: f64) -> Point {
        Point::new(self.x * rhs, self.y * rhs)
    }
}

/// Euclidean distance from `q` to the closed segment `[a, b]`.
pub fn point_segment_dist(q: Point, a: Point, b: Point) -> f64 {
    let d = b - a;
    let len2 = d.dot(d);
    if len2 == 0.0 {
        return q.dist(a);
    }
    let s = ((q - a).dot(d) / len2).clamp(0.0, 1.0);
    q.dist(a + d * s)
}

/// Distance from the segment `[a, b]` to the target segment `[0,1]×{0}`.
pub fn segment_dist_to_unit_interval(a: Point, b: Point) -> f64 {
    // Crossing the x-axis inside [0,1] means distance zero.
    if (a.y <= 0.0 && b.y >= 0.0) || (a.y >= 0.0 && b.y <= 0.0) {
        let x_cross = if a.y == b.y {
            // Both on the axis: distance is the gap between [min,max] and [0,1].
            let lo = a.x.min(b.x);
            let hi = a.x.max(b.x);
            let gap = if hi < 0.0 {
                -hi
            } else if lo > 1.0 {
                lo - 1.0
            } else {
                0.0
            };
            return gap;
        } else {
            a.x + (b.x - a.x) * (a.y / (a.y - b.y))
        };
        if (0.0..=1.0).contains(&x_cross) {
            return 0.0;
        }
    }
    let o = Point::ORIGIN;
    let e = Point::new(1.0, 0.0);
    point_segment_dist(a, o, e)
        .min(point_segment_dist(b, o, e))
        .min(point_segment_dist(o, a, b))
        .min(point_segment_dist(e, a, b))
}
