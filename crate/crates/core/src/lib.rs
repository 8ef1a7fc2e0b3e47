//! Three-body recombination and Efimov trimers in three-component
//! ultracold Fermi gases.
//!
//! The crate covers the universal Efimov spectrum, the zero-range
//! recombination rate constant `L3` with its finite-temperature cap, the
//! harmonic-trap gas model, atom-loss dynamics, and least-squares fits of
//! decay curves and of `L3(B)` across a Feshbach landscape. All library
//! quantities are SI unless a name says otherwise (`_gauss`, `_inv_a0`,
//! `_cm6_per_s`); scattering lengths in tables are in Bohr radii.

pub mod cli;
pub mod dynamics;
pub mod efimov;
pub mod error;
pub mod fitting;
mod ode;
pub mod recombination;
pub mod scattering;
pub mod trap;
pub mod units;

pub use error::{Error, Result};
