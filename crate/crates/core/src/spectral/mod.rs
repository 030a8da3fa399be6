//! Periodic-box spectral infrastructure.

mod fft;
mod field;
mod grid;
mod ops;

pub use field::{real_fields, real_spectra, ScalarField, Spectrum, VectorField, VectorSpectrum};
pub use grid::Grid;
pub use ops::{
    bessel_potential, curl, dealias, divergence, forward_transform, gradient, inv_neg_laplacian,
    inv_neg_laplacian_spectrum, inverse_transform, laplacian, leray_project, sobolev_norm,
    yosida_smooth, Spectral,
};

