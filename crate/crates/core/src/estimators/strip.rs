//! Conditioning on staying in the strip `|y| < 1` up to time 1 does not
//! lower the chance of `Ξ ≥ θ`.

use serde::{Deserialize, Serialize};

use super::{par_samples, Estimate, SeedRecord};
use crate::error::{Error, Result};
use crate::paths::{first_exit_index, sample_path};
use crate::rng::{domain, StreamId};
use crate::sausage::{cover_intervals, xi_measure, SausageParams};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StripReport {
    /// `P̂[Ξ ≥ θ]`.
    pub p_g2: Estimate,
    /// `P̂[Ξ ≥ θ | τ ≥ 1]`.
    pub p_g2_given_g1: Estimate,
    pub p_g1: Estimate,
    pub n_g1: u64,
    /// `p̂(G₂|G₁) − p̂(G₂)`.
    pub difference: f64,
    pub difference_stderr: f64,
    pub inconclusive: bool,
    /// `difference ≥ −3σ` and not inconclusive.
    pub passed: bool,
}

/// Minimum number of `G₁` paths for a conclusive comparison.
pub const MIN_G1: u64 = 1000;

pub fn strip_conditioning_check(params: &SausageParams, n: u64, dt: f64, seed: u64) -> Result<StripReport> {
    params.validate()?;
    if n == 0 {
        return Err(Error::invalid("n", "must be at least 1"));
    }
    let base = StreamId::new(seed, domain::STRIP, 0);
    let rows = par_samples(n, |i| {
        let path = sample_path(dt, 1.0, &mut base.with_index(i).stream())?;
        let g1 = first_exit_index(&path, 1.0).is_none();
        let xi = xi_measure(&cover_intervals(&path, params.epsilon, None));
        Ok((g1, xi >= params.theta))
    })?;
    let n1 = rows.iter().filter(|r| r.0).count() as u64;
    let n0 = n - n1;
    let s1 = rows.iter().filter(|r| r.0 && r.1).count() as u64;
    let s0 = rows.iter().filter(|r| !r.0 && r.1).count() as u64;
    let seed_record = Some(SeedRecord::from(base));
    let p_g2 = Estimate::proportion(s1 + s0, n, seed_record);
    let p_g1 = Estimate::proportion(n1, n, seed_record);
    let p_g2_given_g1 = if n1 > 0 {
        Estimate::proportion(s1, n1, seed_record)
    } else {
        Estimate::new(0.0, 0.0, 0, seed_record)
    };
    // a − (q·a + (1−q)·b) = (1−q)(a − b) with independent conditional proportions.
    let q = n1 as f64 / n as f64;
    let a = if n1 > 0 { s1 as f64 / n1 as f64 } else { 0.0 };
    let b = if n0 > 0 { s0 as f64 / n0 as f64 } else { 0.0 };
    let var_a = if n1 > 0 { a * (1.0 - a) / n1 as f64 } else { 0.0 };
    let var_b = if n0 > 0 { b * (1.0 - b) / n0 as f64 } else { 0.0 };
    let difference = p_g2_given_g1.mean - p_g2.mean;
    let difference_stderr = (1.0 - q) * (var_a + var_b).sqrt();
    let inconclusive = n1 < MIN_G1;
    Ok(StripReport {
        passed: !inconclusive && difference >= -3.0 * difference_stderr,
        p_g2,
        p_g2_given_g1,
        p_g1,
        n_g1: n1,
        difference,
        difference_stderr,
        inconclusive,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trivial_cases() {
        let p = SausageParams::new(0.1, 0.0, 0.0).unwrap();
        let r = strip_conditioning_check(&p, 2000, 1e-3, 1).unwrap();
        assert_eq!(r.p_g2.mean, 1.0);
        assert_eq!(r.p_g2_given_g1.mean, 1.0);
        assert_eq!(r.difference, 0.0);
        let p = SausageParams::new(2.0, 1.0, 0.0).unwrap();
        let r = strip_conditioning_check(&p, 4000, 1e-3, 1).unwrap();
        assert_eq!(r.difference, 0.0);
        assert!(r.passed);
    }

    #[test]
    fn small_sample_is_inconclusive() {
        let p = SausageParams::new(0.1, 0.2, 0.0).unwrap();
        let r = strip_conditioning_check(&p, 500, 1e-3, 1).unwrap();
        assert!(r.inconclusive && !r.passed);
    }

    #[test]
    fn sign_holds_at_moderate_n() {
        let p = SausageParams::new(0.1, 0.2, 0.0).unwrap();
        let r = strip_conditioning_check(&p, 5000, 1e-3, 3).unwrap();
        assert!(r.n_g1 > 1000);
        assert!(r.passed, "{r:?}");
    }
}
