//! Self-similar blow-up profiles of the spherically symmetric co-rotational
//! SU(2) sigma model in 3+1 dimensions, and the spectrum of their linear
//! perturbations.
//!
//! Two independent routes to the eigenvalues are provided:
//!
//! * [`mode_ode`]: two-sided shooting on the singular eigenmode ODE, and
//! * [`evolve`] + [`spectra`]: second-order characteristic evolution of the
//!   linearized first-order system, with per-step Gram–Schmidt filtering to
//!   expose sub-dominant growth rates.
//!
//! [`profiles`] builds the background solutions both routes linearize around;
//! [`cli`] wires everything into the `sigma-eigen` binary.

pub mod cli;
pub mod error;
pub mod evolve;
pub mod mode_ode;
pub mod ode;
pub mod parallel;
pub mod profiles;
pub mod spectra;

pub use error::{Error, Result};
pub use parallel::Exec;
