//! Matrix-free IMEX discontinuous Galerkin solver for the rotating compressible
//! Euler equations on a periodic vertical-slice channel.
//!
//! The crate is organised bottom-up:
//!
//! * [`discretization`]: channel mesh, Gauss–Legendre tensor basis, dof layout;
//! * [`thermo`]: conserved storage and ideal-gas closures;
//! * [`operators`]: matrix-free actions of the stage operators plus a dense
//!   quadrature oracle used for verification;
//! * [`imex`]: TR-BDF2 additive Runge–Kutta tableaux and the time step;
//! * [`solver`]: Picard stage solves (strategies R1/R2), Schur complements, GMRES;
//! * [`scenarios`]: inertia-gravity-wave initial states;
//! * [`diagnostics`]: norms, EOC, Courant numbers, geostrophic residual;
//! * [`cli_io`]: run configuration, CSV output and convergence studies.

pub mod cli_io;
pub mod diagnostics;
pub mod discretization;
pub mod error;
pub mod imex;
pub mod operators;
pub mod scenarios;
pub mod solver;
pub mod thermo;

pub use error::{Error, Result};
