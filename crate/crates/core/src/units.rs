//! Physical constants and frequency/length conversions.

use std::f64::consts::PI;

/// ħc in eV·nm (CODATA 2018).
pub const HBAR_C_EV_NM: f64 = 197.326_980_4;

/// Vacuum wavenumber `k = ω/c` in nm⁻¹ for a photon energy in eV.
#[inline]
pub fn wavenumber(omega_ev: f64) -> f64 {
    omega_ev / HBAR_C_EV_NM
}

/// Vacuum wavelength in nm for a photon energy in eV.
#[inline]
pub fn wavelength(omega_ev: f64) -> f64 {
    2.0 * PI * HBAR_C_EV_NM / omega_ev
}

/// Photon energy in eV for a vacuum wavelength in nm.
#[inline]
pub fn energy_from_wavelength(lambda_nm: f64) -> f64 {
    2.0 * PI * HBAR_C_EV_NM / lambda_nm
}
