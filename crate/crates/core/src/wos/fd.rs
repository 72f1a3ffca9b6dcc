use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, Error, Result};
use crate::geom::Point;

/// Grid solution of the strip hitting problem with the ball at the origin.
///
/// Dirichlet data: 1 on and inside the ε-circle, 0 on `|y| = 1` and on the
/// cutoff columns `|x| = x_cutoff`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FdGrid {
    pub h: f64,
    pub epsilon: f64,
    /// Effective cutoff after snapping to the grid.
    pub x_cutoff: f64,
    pub nx: usize,
    pub ny: usize,
    /// Row-major, `(nx + 1) × (ny + 1)` nodes; index `j·(nx+1) + i`.
    pub values: Vec<f64>,
    pub residual: f64,
    pub sweeps: usize,
}

impl FdGrid {
    pub fn node(&self, i: usize, j: usize) -> Point {
        Point::new(-self.x_cutoff + i as f64 * self.h, -1.0 + j as f64 * self.h)
    }

    pub fn value(&self, i: usize, j: usize) -> f64 {
        self.values[j * (self.nx + 1) + i]
    }

    /// Bilinear interpolation; exact at nodes. Zero outside the rectangle.
    pub fn value_at(&self, p: Point) -> f64 {
        let fx = (p.x + self.x_cutoff) / self.h;
        let fy = (p.y + 1.0) / self.h;
        if fx < 0.0 || fy < 0.0 || fx > self.nx as f64 || fy > self.ny as f64 {
            return 0.0;
        }
        let i = (fx.floor() as usize).min(self.nx - 1);
        let j = (fy.floor() as usize).min(self.ny - 1);
        let tx = fx - i as f64;
        let ty = fy - j as f64;
        let v00 = self.value(i, j);
        let v10 = self.value(i + 1, j);
        let v01 = self.value(i, j + 1);
        let v11 = self.value(i + 1, j + 1);
        (v00 * (1.0 - tx) + v10 * tx) * (1.0 - ty) + (v01 * (1.0 - tx) + v11 * tx) * ty
    }
}

const FIXED: u8 = 0;
const REGULAR: u8 = 1;
const IRREGULAR: u8 = 2;

/// Shortley–Weller stencil for a node next to the circle: weights on the
/// four neighbours (zero where the arm is cut) and the constant
/// contribution of the cut arms, which carry boundary value 1.
#[derive(Debug, Clone, Copy)]
struct Irregular {
    weights: [f64; 4],
    constant: f64,
    total: f64,
}

/// Fraction of an arm of length `h` from `p` along unit `dir` before the ε-circle.
fn arm_fraction(p: Point, dir: Point, h: f64, eps: f64) -> Option<f64> {
    let b = p.dot(dir);
    let c = p.dot(p) - eps * eps;
    let disc = b * b - c;
    if disc < 0.0 {
        return None;
    }
    let s = (-b - disc.sqrt()) / h;
    (s > 0.0 && s <= 1.0).then_some(s.max(1e-6))
}

const TOL: f64 = 1e-8;

/// Five-point Laplace solve with red-black successive over-relaxation to a
/// max-norm residual of 1e-8.
///
/// The circle is resolved with Shortley–Weller arms, so the scheme is
/// second order despite the curved boundary. `h` is snapped so that `2/h`
/// and `2·x_cutoff/h` are integers.
pub fn fd_oracle(epsilon: f64, h: f64, x_cutoff: f64) -> Result<FdGrid> {
    fd_oracle_with_budget(epsilon, h, x_cutoff, 2_000_000)
}

pub fn fd_oracle_with_budget(epsilon: f64, h: f64, x_cutoff: f64, max_sweeps: usize) -> Result<FdGrid> {
    ensure_finite("epsilon", epsilon)?;
    ensure_finite("h", h)?;
    ensure_finite("x_cutoff", x_cutoff)?;
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::invalid("epsilon", "must lie in (0, 1)"));
    }
    if !(h > 0.0 && h <= epsilon / 4.0 * (1.0 + 1e-12)) {
        return Err(Error::invalid("h", format!("need 0 < h <= epsilon/4, got {h}")));
    }
    if x_cutoff <= 2.0 * epsilon {
        return Err(Error::invalid("x_cutoff", "must exceed the ball"));
    }
    let ny = (2.0 / h).round() as usize;
    let h = 2.0 / ny as f64;
    let nx = (2.0 * x_cutoff / h).round() as usize;
    let x_cut = nx as f64 * h / 2.0;
    let w = nx + 1;
    let n_nodes = w * (ny + 1);

    let node = |i: usize, j: usize| Point::new(-x_cut + i as f64 * h, -1.0 + j as f64 * h);
    let eps2 = epsilon * epsilon;
    let inside = |p: Point| p.dot(p) <= eps2;

    let mut kind = vec![FIXED; n_nodes];
    let mut values = vec![0.0; n_nodes];
    let mut irregular_idx = vec![u32::MAX; n_nodes];
    let mut irregular: Vec<Irregular> = Vec::new();
    // Neighbour order: east, west, north, south.
    let dirs = [Point::new(1.0, 0.0), Point::new(-1.0, 0.0), Point::new(0.0, 1.0), Point::new(0.0, -1.0)];
    for j in 0..=ny {
        for i in 0..=nx {
            let idx = j * w + i;
            let p = node(i, j);
            if inside(p) {
                values[idx] = 1.0;
                continue;
            }
            if i == 0 || i == nx || j == 0 || j == ny {
                continue;
            }
            let nbrs = [node(i + 1, j), node(i - 1, j), node(i, j + 1), node(i, j - 1)];
            if nbrs.iter().all(|&q| !inside(q)) {
                kind[idx] = REGULAR;
                continue;
            }
            let mut arms = [1.0; 4];
            let mut cut = [false; 4];
            for k in 0..4 {
                if inside(nbrs[k]) {
                    arms[k] = arm_fraction(p, dirs[k], h, epsilon).unwrap_or(1.0);
                    cut[k] = true;
                }
            }
            let mut weights = [0.0; 4];
            let mut constant = 0.0;
            let mut total = 0.0;
            for (axis, (a, b)) in [(0usize, 1usize), (2, 3)].into_iter().enumerate() {
                let _ = axis;
                let (ha, hb) = (arms[a] * h, arms[b] * h);
                for (k, hk) in [(a, ha), (b, hb)] {
                    let c = 2.0 / ((ha + hb) * hk);
                    total += c;
                    if cut[k] {
                        constant += c;
                    } else {
                        weights[k] = c;
                    }
                }
            }
            kind[idx] = IRREGULAR;
            irregular_idx[idx] = irregular.len() as u32;
            irregular.push(Irregular {
                weights,
                constant,
                total,
            });
        }
    }

    let rho = 0.5 * ((std::f64::consts::PI / nx as f64).cos() + (std::f64::consts::PI / ny as f64).cos());
    let omega = 2.0 / (1.0 + (1.0 - rho * rho).sqrt());

    let target = |values: &[f64], idx: usize| -> f64 {
        match kind[idx] {
            REGULAR => 0.25 * (values[idx + 1] + values[idx - 1] + values[idx + w] + values[idx - w]),
            IRREGULAR => {
                let s = irregular[irregular_idx[idx] as usize];
                let nb = [values[idx + 1], values[idx - 1], values[idx + w], values[idx - w]];
                (s.constant + s.weights.iter().zip(nb).map(|(a, v)| a * v).sum::<f64>()) / s.total
            }
            _ => values[idx],
        }
    };

    let mut sweeps = 0usize;
    let mut residual = f64::INFINITY;
    while sweeps < max_sweeps {
        for color in 0..2 {
            for j in 1..ny {
                let start = 1 + (j + 1 + color) % 2;
                let row = j * w;
                let mut i = start;
                while i < nx {
                    let idx = row + i;
                    if kind[idx] != FIXED {
                        let t = target(&values, idx);
                        values[idx] += omega * (t - values[idx]);
                    }
                    i += 2;
                }
            }
        }
        sweeps += 1;
        if sweeps % 25 == 0 {
            residual = (0..n_nodes)
                .filter(|&idx| kind[idx] != FIXED)
                .map(|idx| (target(&values, idx) - values[idx]).abs())
                .fold(0.0, f64::max);
            if residual <= TOL {
                break;
            }
        }
    }
    if residual > TOL {
        return Err(Error::numerical(
            "fd_oracle",
            format!("residual {residual:e} after {sweeps} sweeps"),
        ));
    }
    for v in &mut values {
        *v = v.clamp(0.0, 1.0);
    }
    Ok(FdGrid {
        h,
        epsilon,
        x_cutoff: x_cut,
        nx,
        ny,
        values,
        residual,
        sweeps,
    })
}
