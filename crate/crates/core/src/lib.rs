//! Incremental Green's-function and stochastic-path solvers for
//! drift-diffusion problems.
//!
//! The toolkit pairs every analytic propagator with an independent
//! stochastic (Monte Carlo) route so the two can be cross-checked:
//!
//! - [`kernels`]: Gaussian transition densities (heat, frozen-drift,
//!   Ornstein-Uhlenbeck) and the strain functionals they depend on.
//! - [`burgers`]: time-incremental convolution solver for Burgers' equation,
//!   the Cole-Hopf quadrature solution and the KPZ transforms.
//! - [`nls`]: split-step propagator for the cubic Schrödinger equation.
//! - [`stochastic`]: Euler-Maruyama path ensembles, Feynman-Kac estimates and
//!   checks that expectations equal kernel convolutions.
//! - [`vortex`]: Burgers vortex sheets in deterministic and random strain.
//! - [`hydromodes`]: hydrodynamic dispersion relations.
//! - [`experiment`]: config-driven runner behind the command line tool.

// `!(x > 0.0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod burgers;
pub mod error;
pub mod experiment;
pub mod grid;
pub mod hydromodes;
pub mod kernels;
pub mod nls;
pub mod quad;
pub mod stochastic;
pub mod vortex;

pub use error::{Error, Result};
pub use grid::{Field, Grid1D};
