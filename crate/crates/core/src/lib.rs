//! Radiation-reaction position shift of a relativistic charge.
//!
//! A charge crosses a smooth localised four-potential. Its position at
//! `t = 0` is shifted at first order in the fine-structure constant by the
//! Lorentz–Dirac force; the same shift follows from the leading `ℏ → 0`
//! limit of one-photon emission. This crate computes the shift by several
//! independent routes and checks that they agree.

pub mod dynamics;
pub mod error;
pub mod lorentz_dirac;
pub mod ode;
pub mod potentials;
pub mod quadrature;
pub mod scenario;
pub mod semiclassical;
pub mod shift;
pub mod variational;
pub mod verify;

pub use error::{Error, Result};
