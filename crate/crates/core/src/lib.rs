//! Numerical laboratory for the random bipartite matching problem on the
//! flat 2-torus with power cost d^p, p > 1.
//!
//! The crate bundles everything needed to study the problem at desk scale:
//!
//! - [`torus`] — canonical coordinates and the quotient (flat) distance on
//!   T² = R²/Z².
//! - [`grid`] — periodic scalar fields on uniform N×N grids with spectral
//!   and finite-difference calculus.
//! - [`sampling`] — reproducible uniform point clouds (one ChaCha stream per
//!   (seed, tag, trial) key, so trials can run in any order, in parallel).
//! - [`heat`] — the torus heat kernel, smoothing of clouds and fields, and
//!   the dispersion constant of the shift-coupling bound.
//! - [`qpoisson`] — the nonlinear q-Poisson equation
//!   −div(|∇φ|^{q−2}∇φ) = ρ₁ − ρ₀ solved by preconditioned minimization of
//!   its convex energy, plus the exact spectral q = 2 solver.
//! - [`hopflax`] — the Hopf-Lax semigroup Q_t, the energy curve
//!   Λ(t) = ∫|∇Q_tφ|^q, and the Kantorovich dual objective.
//! - [`wasserstein`] — exact p-Wasserstein costs: assignment between clouds,
//!   a transportation network simplex between grid densities, an entropic
//!   upper bound, and the deterministic sandwich certificate.
//! - [`experiment`] — the Monte Carlo pipeline tying it all together, with
//!   deterministic CSV/JSON reporting.
//!
//! Data-parallel inner loops (trials, grid nodes, Hopf-Lax minimizations)
//! run on rayon when the default `parallel` feature is enabled and fall back
//! to plain sequential iterators without it. Results are bit-identical
//! either way: parallelism is only ever over disjoint outputs, never over
//! floating-point reductions.

pub mod error;
pub mod experiment;
pub mod grid;
pub mod heat;
pub mod hopflax;
pub(crate) mod parallel;
pub mod qpoisson;
pub mod sampling;
pub mod torus;
pub mod wasserstein;

pub use error::{Error, Result};
pub use grid::{GridField, Scheme, SpectralField};
pub use sampling::{PointCloud, StreamTag};
pub use torus::TorusPoint;
