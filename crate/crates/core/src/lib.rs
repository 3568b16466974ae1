//! Numerical laboratory for thick sets and spectral estimates on hyperbolic
//! surfaces with funnel and cusp ends.
//!
//! Modules, bottom-up:
//! * [`geom`]: half-plane points, isometries, geodesic balls, volumes.
//! * [`quad`], [`rows`], [`interval`]: quadrature against `dx dy / y²`.
//! * [`quotient`]: funnel/cusp end models, reduction, lifts.
//! * [`covering`]: saturated separated sets and intersection numbers.
//! * [`sensor`], [`thickness`]: sensor sets and thickness certification.
//! * [`spectral`]: truncated-cusp eigenmodes, projectors, spectral constants,
//!   harmonic extensions, propagation-of-smallness fits.
//! * [`heat`]: volume doubling, Gaussian quotients, heat-kernel envelopes,
//!   observability and the thickness constants derived from them.

pub mod covering;
pub mod error;
pub mod geom;
pub mod heat;
pub mod interval;
pub mod quad;
pub mod quotient;
pub mod rng;
pub mod rows;
pub mod sensor;
pub mod spectral;
pub mod thickness;

pub use error::{Error, Result};
