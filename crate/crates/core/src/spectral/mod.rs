//! Truncated-cusp eigenmodes, spectral projectors, spectral-estimate
//! constants, harmonic extensions and propagation-of-smallness fits.

pub mod extension;
pub mod gram;
pub mod modes;
pub mod smallness;
pub mod tridiag;

pub use extension::{
    energy_bound_check, extension_residual, harmonic_extension, EnergyReport, HarmonicExtension, ResidualMode,
};
pub use gram::{fit_exponential, gram_matrix, spectral_constant, spectral_constant_profile, ExponentialFit};
pub use modes::{
    multiplier_bound_check, solve_modes, Angular, CuspGrid, EigenMode, ModeBasis, SpectralWindow, TruncatedCusp,
};
pub use smallness::{smallness_experiment, SmallnessConfig, SmallnessReport};
