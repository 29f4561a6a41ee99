//! Minimum-energy point configurations and discretized equilibrium measures
//! for logarithmic and Riesz interactions on surfaces of revolution.
//!
//! A surface is given by a generator curve in the right half-plane, rotated
//! about the `y`-axis. Rotationally symmetric problems reduce to the
//! non-singular half-plane kernel `K` (see [`kernels`]); discrete
//! configurations are optimized in [`energy`], discretized equilibrium
//! measures are solved in [`equilibrium`], and [`checks`] verifies the
//! support and convexity properties on concrete instances.

pub mod checks;
pub mod energy;
pub mod equilibrium;
pub mod error;
pub mod geometry;
pub mod io;
pub mod kernels;
pub mod plot;
mod sum;

pub use error::{Error, Result};
pub use geometry::{GeneratorCurve, PlanePoint, SpacePoint};
pub use kernels::KernelSpec;
