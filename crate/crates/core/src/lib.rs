//! Desk-scale laboratory for ODE systems with an irregular singular point,
//!
//! ```text
//!     x^(p+1) y' = A(x, y),      A(0,0) = 0,  p >= 1,  y in C^r,
//! ```
//!
//! where `A` is a polynomial vector field whose linear part `A_0 = dA/dy(0,0)`
//! is invertible. Such systems admit a unique formal power-series solution
//! `H^(x)` with zero constant term; it is divergent in general, of Gevrey
//! order `1/p`. This crate computes that solution, resums it by Borel-Laplace
//! along directions, measures the Stokes jumps between neighbouring sector
//! sums, and runs the quasi-analyticity / transcendence probes that the
//! surrounding theory turns on.
//!
//! The crate is `no_std` (with `alloc`); IO, file formats, and the command
//! line front end live in the companion `stokeslab` crate.
//!
//! Module map:
//!
//! * [`series`] — truncated formal power series, jets `J_k` and tails `T_k`.
//! * [`poly`] — sparse multivariate polynomials (right-hand sides, probe
//!   functions, formal flows).
//! * [`odesys`] — the system model: spectrum, singular directions, formal
//!   solution, derived tail systems, and the formal flow of the rescaled
//!   equation.
//! * [`resum`] — Borel transform of order `p`, Gevrey-order estimation, Padé
//!   continuation, directional Laplace quadrature, sector sums.
//! * [`stokes`] — lateral-sum jumps, decay-rate fits, Stokes multiplier
//!   estimates, and the (SD) nonvanishing check.
//! * [`dynamics`] — adaptive trajectories on `(0, eps]`, remainder constants,
//!   flow-identity checks, winding and zero-count diagnostics.
//! * [`probes`] — SAT (formal) and SQA (numeric) probes plus the polynomial
//!   normalization step.
//!
//! Coefficients are generic over [`coeff::Coeff`]: double-precision complex
//! ([`coeff::C64`]) for numerics and exact complex rationals ([`coeff::CRat`])
//! for golden-coefficient work, where factorial growth would overflow doubles
//! near `n = 170`.

#![cfg_attr(not(test), no_std)]
#![forbid(unsafe_code)]

extern crate alloc;

pub mod coeff;
pub mod dynamics;
pub mod error;
pub mod fitting;
pub mod gamma;
pub mod linalg;
pub mod odesys;
pub mod poly;
pub mod probes;
pub mod quad;
pub mod resum;
pub mod roots;
pub mod series;
pub mod stokes;

pub use coeff::{C64, CRat, Coeff};
pub use error::Error;
pub use odesys::OdeSystem;
pub use series::{SeriesVec, TruncatedSeries};

/// Crate-wide result alias.
pub type Result<T> = core::result::Result<T, Error>;
