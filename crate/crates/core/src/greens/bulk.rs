//! Free-space dyadic Green tensor and the closed-form vacuum couplings.

use nalgebra::{Matrix3, Vector3};
use num_complex::Complex64;
use std::f64::consts::PI;

use super::{GreensError, Tensor3C};

/// `G⁰(r) = (∇∇ + k²𝟙) e^{ikr} / (4πk²r)` for a separation vector `r` (nm)
/// and wavenumber `k` (nm⁻¹).
///
/// Diverges at `r = 0`; use [`bulk_green_imag`] there.
pub fn bulk_green(r: &Vector3<f64>, k: f64) -> Result<Tensor3C, GreensError> {
    let dist = r.norm();
    if dist == 0.0 || !dist.is_finite() {
        return Err(GreensError::Domain(
            "bulk Green tensor real part is singular at zero separation; \
             use the coincident-point imaginary part instead"
                .into(),
        ));
    }
    let x = k * dist;
    let i = Complex64::new(0.0, 1.0);
    let prefactor = Complex64::from_polar(1.0 / (4.0 * PI * dist), x);
    let iso = prefactor * (1.0 + i / x - 1.0 / (x * x));
    let aniso = prefactor * (-1.0 - 3.0 * i / x + 3.0 / (x * x));
    let u = r / dist;
    Ok(Matrix3::from_fn(|a, b| {
        let delta = if a == b { 1.0 } else { 0.0 };
        iso * delta + aniso * (u[a] * u[b])
    }))
}

/// `Im G⁰(r)`, regular everywhere including `r = 0` where it equals
/// `k/(6π) 𝟙`.
pub fn bulk_green_imag(r: &Vector3<f64>, k: f64) -> Matrix3<f64> {
    let dist = r.norm();
    let x = k * dist;
    let (j0, j2) = spherical_j0_j2(x);
    let scale = k / (4.0 * PI);
    let iso = scale * (2.0 * j0 - j2) / 3.0;
    let aniso = scale * j2;
    let u = if dist > 0.0 { r / dist } else { Vector3::zeros() };
    Matrix3::from_fn(|a, b| {
        let delta = if a == b { 1.0 } else { 0.0 };
        iso * delta + aniso * u[a] * u[b]
    })
}

/// Spherical Bessel functions `j₀(x)`, `j₂(x)`, with a series near 0.
fn spherical_j0_j2(x: f64) -> (f64, f64) {
    if x < 0.1 {
        let x2 = x * x;
        (
            1.0 - x2 / 6.0 * (1.0 - x2 / 20.0 * (1.0 - x2 / 42.0)),
            x2 / 15.0 * (1.0 - x2 / 14.0 * (1.0 - x2 / 36.0)),
        )
    } else {
        let (s, c) = x.sin_cos();
        (s / x, (3.0 / (x * x) - 1.0) * s / x - 3.0 * c / (x * x))
    }
}

/// Closed-form vacuum exchange and collective decay, `(V⁰/γ, Γ⁰/γ)`, for two
/// atoms separated by `r` (nm) with shared unit dipole `d` at wavelength
/// `lambda` (nm).
pub fn vacuum_coupling(
    r: &Vector3<f64>,
    d: &Vector3<f64>,
    lambda: f64,
) -> Result<(f64, f64), GreensError> {
    let dist = r.norm();
    if dist == 0.0 || !dist.is_finite() {
        return Err(GreensError::Domain(
            "vacuum coupling needs a non-zero separation".into(),
        ));
    }
    let kappa = 2.0 * PI * dist / lambda;
    let cos2 = (d.dot(r) / dist).powi(2);
    let transverse = 1.0 - cos2;
    let longitudinal = 1.0 - 3.0 * cos2;
    let (s, c) = kappa.sin_cos();
    let k2 = kappa * kappa;
    let k3 = k2 * kappa;
    let v = 0.75 * (transverse * c / kappa - longitudinal * (s / k2 + c / k3));
    let g = if kappa < 0.1 {
        // Same expression rewritten in j₀, j₂ to avoid cancellation.
        let (j0, j2) = spherical_j0_j2(kappa);
        j0 - 0.5 * j2 + 1.5 * j2 * cos2
    } else {
        1.5 * (transverse * s / kappa + longitudinal * (c / k2 - s / k3))
    };
    Ok((v, g))
}
