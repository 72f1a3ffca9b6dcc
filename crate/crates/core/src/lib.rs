//! Wiener sausage coverage laboratory.
//!
//! Estimates the probability that the ε-neighbourhood of a planar Brownian
//! path run to time 1 covers (a fraction of) the unit segment `[0,1]×{0}`.
//! The crate bundles:
//!
//! * [`analytic`]: closed-form hitting probabilities and the asymptotic
//!   bound curves used as oracles and report overlays,
//! * [`paths`]: Brownian paths, bridges and simple random walks on uniform grids,
//! * [`sausage`]: exact polyline sausage ∩ segment geometry,
//! * [`wos`]: walk-on-spheres for the strip hitting function plus a
//!   finite-difference oracle,
//! * [`estimators`]: every stochastic experiment (naive, corridor importance
//!   sampling, local time, bridge hitting, strip conditioning, martingale
//!   tracking, discrete walks),
//! * [`cli`]: configuration, orchestration and report generation.
//!
//! Randomness always flows through [`rng::Stream`], a counter-based stream keyed
//! by `(seed, domain, index)`, so results do not depend on worker scheduling.

pub mod analytic;
pub mod cli;
pub mod error;
pub mod estimators;
pub mod geom;
pub mod paths;
pub mod rng;
pub mod sausage;
pub mod stats;
pub mod wos;

pub use error::{Error, Result};
pub use estimators::Estimate;
pub use geom::Point;
pub use rng::{Stream, StreamId};
