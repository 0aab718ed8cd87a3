//! Numerical toolkit for the crack-tip / crack-front family of stationary
//! solutions of the Mumford-Shah functional.
//!
//! * [`geometry`]: exact domains, crack sets and branch-cut aware polar maps.
//! * [`analytic`]: the closed-form family `phi0`, `u0`, `u_delta` and their energies.
//! * [`stationarity`]: weak Euler-Lagrange residuals with crack-adapted quadrature.
//! * [`competitors`]: energy ledgers for cut-ball, drilled-sphere and cylinder-shell competitors.
//! * [`atsolver`]: Ambrosio-Tortorelli phase-field minimization on masked grids.
//! * [`postproc`]: surface extraction, co-area slicing, twist metrics and file export.
//! * [`cli`]: command implementations behind the `crackfront` binary.

pub mod analytic;
pub mod atsolver;
pub mod cli;
pub mod competitors;
pub mod energy;
pub mod error;
pub mod geometry;
pub mod postproc;
pub mod quadrature;
pub mod stationarity;

pub use energy::{EnergyBreakdown, Provenance};
pub use error::{Error, Result};
