//! Planar-interface Fresnel reflection coefficients.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::materials::Permittivity;
use crate::units::wavenumber;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Polarization {
    S,
    P,
}

/// Square root on the branch `Im ≥ 0`, with `Re ≥ 0` when `Im = 0`.
#[inline]
pub fn sqrt_upper(w: Complex64) -> Complex64 {
    let s = w.sqrt();
    if s.im < 0.0 || (s.im == 0.0 && s.re < 0.0) {
        -s
    } else {
        s
    }
}

/// Normal wavenumber `√(ε k² − k_ρ²)` in a medium of permittivity `eps`.
#[inline]
pub fn normal_wavenumber(eps: Complex64, k: f64, k_rho: Complex64) -> Complex64 {
    sqrt_upper(eps * (k * k) - k_rho * k_rho)
}

/// `(r^s, r^p)` for an interface between vacuum (normal wavenumber `kz`)
/// and a medium of permittivity `eps`.
#[inline]
pub(crate) fn reflection_pair(
    eps: Permittivity,
    k: f64,
    k_rho: Complex64,
    kz: Complex64,
) -> (Complex64, Complex64) {
    match eps {
        Permittivity::PerfectConductor => (Complex64::new(-1.0, 0.0), Complex64::new(1.0, 0.0)),
        Permittivity::Finite(eps) => {
            let kiz = normal_wavenumber(eps, k, k_rho);
            let rs = (kz - kiz) / (kz + kiz);
            let rp = (eps * kz - kiz) / (eps * kz + kiz);
            (rs, rp)
        }
    }
}

/// Reflection coefficient of polarization `pol` at in-plane wavenumber
/// `k_rho` (nm⁻¹) and photon energy `omega` (eV), for light incident from
/// vacuum on a medium of permittivity `eps`.
pub fn fresnel(pol: Polarization, k_rho: Complex64, omega: f64, eps: Permittivity) -> Complex64 {
    let k = wavenumber(omega);
    let kz = normal_wavenumber(Complex64::new(1.0, 0.0), k, k_rho);
    let (rs, rp) = reflection_pair(eps, k, k_rho, kz);
    match pol {
        Polarization::S => rs,
        Polarization::P => rp,
    }
}
