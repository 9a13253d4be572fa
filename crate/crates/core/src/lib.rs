//! Delta-shock front tracking for pressureless gas dynamics and
//! generalized-flux conservation systems.

// `!(a < b)` is used on purpose so that NaN fails the test
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod balance;
pub mod error;
pub mod expr;
pub mod fluxes;
pub mod geometry;
pub mod ode;
pub mod quadrature;
pub mod rh;
pub mod riemann1d;
pub mod scenario;
pub mod solution;
pub mod spherical;
pub mod sticky;
pub mod testfn;
pub mod tolerances;
pub mod vecops;
pub mod weakcheck;

pub use error::{Error, Result};
pub use fluxes::{relativistic_flux, standard_flux, FluxModel, FluxSpec};
