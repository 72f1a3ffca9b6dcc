//! The strip hitting function `f((x,y), α)`: the probability that Brownian
//! motion from `(x,y)` reaches the ε-ball around `(α, 0)` before leaving the
//! strip `|y| ≤ 1`.
//!
//! [`wos_estimate`] samples it by walk on spheres; [`fd_oracle`] solves the
//! same Dirichlet problem on a grid. [`checks`] builds the integrated
//! function `g(y)` and the identity and shape checks on top of both.

pub mod checks;
pub mod fd;
mod walk;

pub use checks::{
    eq9_identity_check, g_of_y, lemma4_shape_checks, AlphaGrid, Eq9Report, GEstimate,
    C7Request, Lemma4Point, Lemma4Report, Lemma4Summary, LEMMA4_ALPHA_GRID, LEMMA4_Y_GRID,
};
pub use fd::{fd_oracle, FdGrid};
pub use walk::{wos_estimate, WalkEnd, WosConfig, WosEstimate};
