//! Forward and inverse spectral solvers for the conformable fractional
//! Sturm–Liouville operator
//!
//! ```text
//! -D^a D^a y + q(x) y = lambda y,  0 < x < pi,
//! D^a y(0) - h y(0) = 0,  D^a y(pi) + H y(pi) = 0,
//! ```
//!
//! where `D^a` is the conformable derivative of order `0 < a <= 1`.
//!
//! The forward side ([`forward`], [`spectrum`]) computes fundamental
//! solutions, both spectra, norming constants and the Weyl function. The
//! inverse side ([`inverse`]) fits a cosine-basis potential together with
//! `h`, `H` to one of the four data sets in [`data`].

pub mod conformable;
pub mod data;
pub mod error;
pub mod forward;
pub mod inverse;
pub mod json;
pub mod ode;
pub mod problem;
pub mod quadrature;
pub mod spectrum;
pub mod spline;
pub mod verify;

pub use conformable::{Coordinate, Order, SampledFunction};
pub use error::{Error, Result};
pub use forward::{SolveOptions, Trajectory};
pub use ode::{Complex64, Dopri5};
pub use data::{DatasetKind, OmegaEstimate, Payload, SpectralDataset};
pub use inverse::{InverseConfig, InverseReport, PotentialModel};
pub use problem::{CosineSeries, HalfPotential, Potential, Problem};
pub use spectrum::{EigenRecord, SpectrumKind};
