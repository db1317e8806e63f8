//! Numerical toolkit for reiterated (two-scale) periodic homogenization of
//! divergence-form elliptic operators `-div(A(x/eps, x/eps^2) grad u) = f`.
//!
//! The crate is organised bottom-up:
//!
//! * [`coeff`]: trigonometric coefficient fields `A(y, z)`, their DSL and
//!   ellipticity certificates.
//! * [`spectral`] and [`krylov`]: periodic grids, FFT plumbing and the
//!   iterative solvers shared by every linear solve.
//! * [`cell`]: inner and outer cell problems, the tabulated corrector set and
//!   the homogenized tensor.
//! * [`flux`]: divergence-free flux fields and their antisymmetric potentials.
//! * [`mollifier`]: the `eps`-smoothing operator and boundary cutoffs.
//! * [`domain`]: Dirichlet solvers on bounded domains, norms and dumps.
//! * [`expansion`]: the first-order two-scale approximation `w_eps`.
//! * [`harness`]: convergence sweeps, large-scale Lipschitz scans and reports.
//! * [`config`] and [`cli`]: the run configuration and command entry points.

pub mod cell;
pub mod coeff;
pub mod config;
pub mod domain;
pub mod error;
pub mod expansion;
pub mod flux;
pub mod harness;
pub mod krylov;
pub mod linalg;
pub mod mollifier;
pub mod spectral;

#[cfg(feature = "cli")]
pub mod cli;

pub use error::{Error, Result};
