//! Electromagnetic Green tensors of planar vacuum gaps.
//!
//! [`bulk_green`] is the free-space tensor, [`scattering_green`] the part
//! reflected by the surrounding media, evaluated as a Sommerfeld integral
//! over the in-plane wavenumber.

mod bessel;
mod bulk;
mod fresnel;
mod quadrature;
mod scattering;

use num_complex::Complex64;
use thiserror::Error;

use crate::materials::MaterialError;

pub use bessel::bessel_j012;
pub use bulk::{bulk_green, bulk_green_imag, vacuum_coupling};
pub use fresnel::{fresnel, normal_wavenumber, sqrt_upper, Polarization};
pub use quadrature::{sommerfeld_integrate, Contour, PathParams, QuadResult};
pub use scattering::{scattering_green, scattering_contour, GreenResult, LayerStack};

/// Complex 3×3 tensor, row index = field component, column = source.
pub type Tensor3C = nalgebra::Matrix3<Complex64>;

#[derive(Debug, Error)]
pub enum GreensError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error(
        "Sommerfeld integral did not converge after {evaluations} evaluations \
         (error bound {error_bound:.3e})"
    )]
    Convergence {
        /// Best estimate of the integral at the point of giving up.
        estimate: Vec<Complex64>,
        error_bound: f64,
        evaluations: usize,
    },
    #[error(transparent)]
    Material(#[from] MaterialError),
}
