//! Closed-form probabilities and asymptotic bound curves.
//!
//! Everything here is pure and reentrant. Probabilities are clamped to
//! `[0, 1]` because callers take logarithms of them.

use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, Error, Result};
use crate::geom::Point;

fn clamp_prob(p: f64) -> f64 {
    p.clamp(0.0, 1.0)
}

/// Probability that planar Brownian motion started at radius `z_radius`
/// hits the circle of radius `a` before the circle of radius `b`.
pub fn annulus_hit_prob(z_radius: f64, a: f64, b: f64) -> Result<f64> {
    ensure_finite("z_radius", z_radius)?;
    ensure_finite("a", a)?;
    ensure_finite("b", b)?;
    if a <= 0.0 {
        return Err(Error::invalid("a", format!("inner radius must be positive, got {a}")));
    }
    if a >= b {
        return Err(Error::invalid("b", format!("need a < b, got a={a}, b={b}")));
    }
    if z_radius < a || z_radius > b {
        return Err(Error::invalid(
            "z_radius",
            format!("start radius {z_radius} outside [{a}, {b}]"),
        ));
    }
    Ok(clamp_prob((b / z_radius).ln() / (b / a).ln()))
}

/// Probability that one-dimensional Brownian motion from `y` exits
/// `[lo, hi]` through `lo`.
pub fn exit_below_prob(y: f64, lo: f64, hi: f64) -> Result<f64> {
    ensure_finite("y", y)?;
    ensure_finite("lo", lo)?;
    ensure_finite("hi", hi)?;
    if lo >= hi {
        return Err(Error::invalid("hi", format!("degenerate interval [{lo}, {hi}]")));
    }
    if y < lo || y > hi {
        return Err(Error::invalid("y", format!("{y} outside [{lo}, {hi}]")));
    }
    Ok(clamp_prob((hi - y) / (hi - lo)))
}

/// Exponentially scaled modified Bessel function `e^{-z} I₀(z)` for `z ≥ 0`.
pub fn bessel_i0e(z: f64) -> f64 {
    let z = z.abs();
    if z <= 50.0 {
        let q = 0.25 * z * z;
        let mut term = 1.0;
        let mut sum = 1.0;
        let mut k = 1.0;
        loop {
            term *= q / (k * k);
            sum += term;
            if term < 1e-17 * sum {
                break;
            }
            k += 1.0;
        }
        sum * (-z).exp()
    } else {
        // Asymptotic expansion; past z = 50 the terms reach double
        // precision long before they start growing again.
        let mut term = 1.0;
        let mut sum = 1.0;
        let mut k = 0.0;
        loop {
            let odd = 2.0 * k + 1.0;
            let next = term * odd * odd / (8.0 * (k + 1.0) * z);
            if next >= term {
                break;
            }
            term = next;
            sum += term;
            if term < 1e-17 * sum {
                break;
            }
            k += 1.0;
        }
        sum / (2.0 * std::f64::consts::PI * z).sqrt()
    }
}

const GK_NODES: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const GK_KRONROD_WEIGHTS: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const GK_GAUSS_WEIGHTS: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// One 15-point Kronrod panel with its embedded 7-point Gauss estimate.
fn gk15(f: &impl Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kronrod = GK_KRONROD_WEIGHTS[7] * fc;
    let mut gauss = GK_GAUSS_WEIGHTS[3] * fc;
    for i in 0..7 {
        let dx = h * GK_NODES[i];
        let pair = f(c - dx) + f(c + dx);
        kronrod += GK_KRONROD_WEIGHTS[i] * pair;
        if i % 2 == 1 {
            gauss += GK_GAUSS_WEIGHTS[i / 2] * pair;
        }
    }
    (kronrod * h, ((kronrod - gauss) * h).abs())
}

/// Globally adaptive Gauss–Kronrod quadrature.
pub(crate) fn integrate_adaptive(
    f: impl Fn(f64) -> f64,
    a: f64,
    b: f64,
    abs_tol: f64,
    max_panels: usize,
) -> std::result::Result<f64, (f64, f64)> {
    let (v, e) = gk15(&f, a, b);
    let mut panels = vec![(a, b, v, e)];
    loop {
        let total: f64 = panels.iter().map(|p| p.2).sum();
        let err: f64 = panels.iter().map(|p| p.3).sum();
        if err <= abs_tol {
            return Ok(total);
        }
        if panels.len() >= max_panels {
            return Err((total, err));
        }
        let (idx, _) = panels
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .3.total_cmp(&y.1 .3))
            .expect("at least one panel");
        let (pa, pb, _, _) = panels.swap_remove(idx);
        let mid = 0.5 * (pa + pb);
        let (v1, e1) = gk15(&f, pa, mid);
        let (v2, e2) = gk15(&f, mid, pb);
        panels.push((pa, mid, v1, e1));
        panels.push((mid, pb, v2, e2));
    }
}

/// Target absolute error of [`gaussian_disk_prob`].
pub const DISK_PROB_TOL: f64 = 1e-10;

/// Probability that an isotropic planar Gaussian with per-coordinate standard
/// deviation `sigma`, whose mean lies at distance `center_dist` from the
/// centre of a disk of radius `radius`, falls inside the disk.
///
/// Integrates the Rician radial density `u·exp(-(u-δ)²/2)·I₀ₑ(uδ)` in
/// units of `sigma` with adaptive Gauss–Kronrod quadrature.
pub fn gaussian_disk_prob(center_dist: f64, sigma: f64, radius: f64) -> Result<f64> {
    ensure_finite("center_dist", center_dist)?;
    ensure_finite("sigma", sigma)?;
    ensure_finite("radius", radius)?;
    if center_dist < 0.0 {
        return Err(Error::invalid("center_dist", "must be nonnegative"));
    }
    if sigma <= 0.0 {
        return Err(Error::invalid("sigma", "must be positive"));
    }
    if radius < 0.0 {
        return Err(Error::invalid("radius", "must be nonnegative"));
    }
    if radius == 0.0 {
        return Ok(0.0);
    }
    let delta = center_dist / sigma;
    let rho = radius / sigma;
    if delta == 0.0 {
        return Ok(clamp_prob(-(-0.5 * rho * rho).exp_m1()));
    }
    // Outside |u - δ| < 40 the integrand is below e^{-800}.
    let lo = (delta - 40.0).max(0.0);
    let hi = rho.min(delta + 40.0);
    if hi <= lo {
        return Ok(if rho >= delta + 40.0 { 1.0 } else { 0.0 });
    }
    let integrand = |u: f64| {
        let t = u - delta;
        u * (-0.5 * t * t).exp() * bessel_i0e(u * delta)
    };
    let inner = integrate_adaptive(integrand, lo, hi, 0.01 * DISK_PROB_TOL, 4000).map_err(
        |(value, err)| {
            Error::numerical(
                "gaussian_disk_prob",
                format!("quadrature stalled at {value} with error estimate {err:e}"),
            )
        },
    )?;
    // Mass below `lo` is negligible; mass above `hi` (when rho was capped) is ~all remaining.
    Ok(clamp_prob(inner))
}

/// Bound constants `c₁…c₄`; the asymptotic bounds only assert they exist,
/// so these are configuration or fit parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundParams {
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub c4: f64,
}

impl Default for BoundParams {
    fn default() -> Self {
        BoundParams {
            c1: 1.0,
            c2: 1.0,
            c3: 1.0,
            c4: 1.0,
        }
    }
}

impl BoundParams {
    pub fn new(c1: f64, c2: f64, c3: f64, c4: f64) -> Result<Self> {
        let p = BoundParams { c1, c2, c3, c4 };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("c1", self.c1), ("c2", self.c2), ("c3", self.c3), ("c4", self.c4)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::invalid(name, format!("must be positive and finite, got {v}")));
            }
        }
        Ok(())
    }
}

/// The four bound curves at one `(ε, θ)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Theorem1Bounds {
    /// Upper bound on the full-coverage probability.
    pub upper: f64,
    /// Lower bound on the full-coverage probability.
    pub lower: f64,
    /// Upper bound on `P[Ξ ≥ θ]`.
    pub upper_measure: f64,
    /// Lower bound on `P[Ξ ≥ θ]`.
    pub lower_measure: f64,
}

impl Theorem1Bounds {
    /// The constants are unconstrained relative to each other, so an upper
    /// curve below a lower curve is a property of the parameter set, not an error.
    pub fn is_ordered(&self) -> bool {
        self.upper >= self.lower && self.upper_measure >= self.lower_measure
    }
}

/// Log-domain pieces of the bound curves, shared with the report fits.
pub mod bound_terms {
    /// `|log ε|² / log²|log ε|`.
    pub fn upper_rate(epsilon: f64) -> f64 {
        let l = epsilon.ln().abs();
        l * l / (l.ln() * l.ln())
    }

    /// `|log ε|⁴`.
    pub fn lower_rate(epsilon: f64) -> f64 {
        epsilon.ln().powi(4)
    }

    /// `|log((1-θ)/3)|² |log ε|²`.
    pub fn lower_measure_rate(epsilon: f64, theta: f64) -> f64 {
        let g = ((1.0 - theta) / 3.0).ln();
        g * g * epsilon.ln() * epsilon.ln()
    }
}

pub fn theorem1_bounds(epsilon: f64, theta: f64, params: &BoundParams) -> Result<Theorem1Bounds> {
    ensure_finite("epsilon", epsilon)?;
    ensure_finite("theta", theta)?;
    params.validate()?;
    let inv_e = (-1.0f64).exp();
    if !(epsilon > 0.0 && epsilon < inv_e) {
        return Err(Error::invalid(
            "epsilon",
            format!("bounds need 0 < epsilon < 1/e, got {epsilon}"),
        ));
    }
    if !(theta > 0.0 && theta <= 1.0) {
        return Err(Error::invalid("theta", format!("must lie in (0, 1], got {theta}")));
    }
    let up = bound_terms::upper_rate(epsilon);
    Ok(Theorem1Bounds {
        upper: params.c1 * (-up / params.c2).exp(),
        lower: (-params.c4 * bound_terms::lower_rate(epsilon)).exp(),
        upper_measure: (-up * theta * theta / params.c3).exp(),
        lower_measure: (-params.c4 * bound_terms::lower_measure_rate(epsilon, theta)).exp(),
    })
}

/// Exponential martingale tail term `exp(-(u - m0)² / 2L)`.
pub fn martingale_tail_bound(u: f64, m0: f64, qv_bound: f64) -> f64 {
    if u <= m0 {
        return 1.0;
    }
    (-(u - m0) * (u - m0) / (2.0 * qv_bound)).exp()
}

/// The boustrophedon ball sequence of the corridor construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorridorSpec {
    pub n: u32,
    /// Abscissas of the `n²` ball centres on the x-axis.
    pub centers: Vec<f64>,
    pub radius: f64,
    pub checkpoint_dt: f64,
}

impl CorridorSpec {
    pub fn len(&self) -> usize {
        self.centers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centers.is_empty()
    }

    pub fn center(&self, j: usize) -> Point {
        Point::new(self.centers[j], 0.0)
    }

    pub fn check_invariants(&self) -> Result<()> {
        let n = self.n as f64;
        if self.centers.len() != (self.n as usize).pow(2) {
            return Err(Error::invalid("centers", "must hold exactly N² entries"));
        }
        if (self.centers[0] - 1.0 / n).abs() > 1e-12 {
            return Err(Error::invalid("centers", "first abscissa must be 1/N"));
        }
        for w in self.centers.windows(2) {
            if ((w[1] - w[0]).abs() - 1.0 / n).abs() > 1e-12 {
                return Err(Error::invalid("centers", "consecutive abscissas must differ by 1/N"));
            }
        }
        if self.centers.iter().any(|&c| !(0.0..=1.0).contains(&c)) {
            return Err(Error::invalid("centers", "abscissas must lie in [0,1]"));
        }
        if (self.radius * n - 1.0).abs() > 1e-12 || (self.checkpoint_dt * n * n - 1.0).abs() > 1e-12 {
            return Err(Error::invalid("radius", "radius must be 1/N and checkpoint_dt 1/N²"));
        }
        Ok(())
    }
}

/// Ball centres `1/N, 2/N, …, 1, (N-1)/N, …, 0, 1/N, …` swept `N` times.
pub fn corridor_centers(n: u32) -> CorridorSpec {
    assert!(n >= 1, "corridor needs N >= 1");
    let two_n = 2 * n as u64;
    let nf = n as f64;
    let centers = (1..=(n as u64).pow(2))
        .map(|j| {
            let m = j % two_n;
            if m <= n as u64 {
                m as f64 / nf
            } else {
                (two_n - m) as f64 / nf
            }
        })
        .collect();
    CorridorSpec {
        n,
        centers,
        radius: 1.0 / nf,
        checkpoint_dt: 1.0 / (nf * nf),
    }
}
