//! Parametric dielectric functions.
//!
//! All frequencies are photon energies in eV; `ħ` is absorbed throughout.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::MaterialError;

/// Free-electron (Drude) metal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DrudeParams {
    /// Plasma energy `ħω_p` in eV.
    pub plasma_energy: f64,
    /// Damping energy `ħγ_p` in eV.
    pub damping: f64,
}

impl DrudeParams {
    pub fn new(plasma_energy: f64, damping: f64) -> Result<Self, MaterialError> {
        let p = Self {
            plasma_energy,
            damping,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), MaterialError> {
        if !(self.plasma_energy.is_finite() && self.plasma_energy > 0.0) {
            return Err(MaterialError::invalid("plasma energy must be positive"));
        }
        if !(self.damping.is_finite() && self.damping >= 0.0) {
            return Err(MaterialError::invalid("damping must be non-negative"));
        }
        Ok(())
    }
}

/// One term `f_j ω_p² / (ω_j² − ω² − iωγ_j)` of the Drude-Lorentz sum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LorentzOscillator {
    pub weight: f64,
    /// Resonance energy `ħω_j` in eV; zero for the free-electron term.
    pub resonance: f64,
    /// Damping energy `ħγ_j` in eV.
    pub damping: f64,
}

/// Drude-Lorentz metal: a free-electron term plus bound-electron oscillators.
///
/// By convention the first oscillator is the free-electron term and has zero
/// resonance energy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DrudeLorentzParams {
    pub plasma_energy: f64,
    pub oscillators: Vec<LorentzOscillator>,
}

impl DrudeLorentzParams {
    pub fn validate(&self) -> Result<(), MaterialError> {
        if !(self.plasma_energy.is_finite() && self.plasma_energy > 0.0) {
            return Err(MaterialError::invalid("plasma energy must be positive"));
        }
        let Some(first) = self.oscillators.first() else {
            return Err(MaterialError::invalid("at least the free-electron term is required"));
        };
        if first.resonance != 0.0 {
            return Err(MaterialError::invalid(
                "the first oscillator is the free-electron term and must have zero resonance",
            ));
        }
        for (j, o) in self.oscillators.iter().enumerate() {
            if !(o.weight.is_finite() && o.weight >= 0.0) {
                return Err(MaterialError::invalid(format!("oscillator {j}: weight must be >= 0")));
            }
            if !(o.resonance.is_finite() && o.resonance >= 0.0) {
                return Err(MaterialError::invalid(format!(
                    "oscillator {j}: resonance must be >= 0"
                )));
            }
            if !(o.damping.is_finite() && o.damping >= 0.0) {
                return Err(MaterialError::invalid(format!("oscillator {j}: damping must be >= 0")));
            }
        }
        Ok(())
    }
}

/// Oscillator of the modified Lorentz model with Gaussian-broadened damping.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModifiedLorentzOscillator {
    pub weight: f64,
    pub resonance: f64,
    pub damping: f64,
    /// Dimensionless broadening shape parameter `α_j`.
    pub alpha: f64,
}

impl ModifiedLorentzOscillator {
    /// Frequency-dependent damping `γ'_j(ω) = γ_j exp[−α_j ((ω − ω_j)/γ_j)²]`.
    pub fn effective_damping(&self, omega: f64) -> f64 {
        let x = (omega - self.resonance) / self.damping;
        self.damping * (-self.alpha * x * x).exp()
    }
}

/// Insulator described by the modified Lorentz model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModifiedLorentzParams {
    pub eps_infinity: f64,
    pub oscillators: Vec<ModifiedLorentzOscillator>,
}

impl ModifiedLorentzParams {
    pub fn validate(&self) -> Result<(), MaterialError> {
        if !(self.eps_infinity.is_finite() && self.eps_infinity >= 1.0) {
            return Err(MaterialError::invalid("eps_infinity must be >= 1"));
        }
        for (j, o) in self.oscillators.iter().enumerate() {
            if !(o.weight.is_finite() && o.weight >= 0.0) {
                return Err(MaterialError::invalid(format!("oscillator {j}: weight must be >= 0")));
            }
            if !(o.resonance.is_finite() && o.resonance > 0.0) {
                return Err(MaterialError::invalid(format!(
                    "oscillator {j}: resonance must be > 0"
                )));
            }
            if !(o.damping.is_finite() && o.damping > 0.0) {
                return Err(MaterialError::invalid(format!("oscillator {j}: damping must be > 0")));
            }
            if !(o.alpha.is_finite() && o.alpha >= 0.0) {
                return Err(MaterialError::invalid(format!("oscillator {j}: alpha must be >= 0")));
            }
        }
        Ok(())
    }
}

fn check_frequency(omega: f64) -> Result<(), MaterialError> {
    if omega.is_finite() && omega > 0.0 {
        Ok(())
    } else {
        Err(MaterialError::Domain { omega })
    }
}

/// `ε(ω) = 1 − ω_p² / (ω² + iωγ_p)`.
pub fn eval_drude(p: &DrudeParams, omega: f64) -> Result<Complex64, MaterialError> {
    check_frequency(omega)?;
    let wp2 = p.plasma_energy * p.plasma_energy;
    Ok(1.0 - wp2 / Complex64::new(omega * omega, omega * p.damping))
}

/// `ε(ω) = 1 + Σ_j f_j ω_p² / (ω_j² − ω² − iωγ_j)`.
pub fn eval_drude_lorentz(p: &DrudeLorentzParams, omega: f64) -> Result<Complex64, MaterialError> {
    check_frequency(omega)?;
    let wp2 = p.plasma_energy * p.plasma_energy;
    let sum: Complex64 = p
        .oscillators
        .iter()
        .map(|o| {
            let den = Complex64::new(
                o.resonance * o.resonance - omega * omega,
                -omega * o.damping,
            );
            o.weight * wp2 / den
        })
        .sum();
    Ok(1.0 + sum)
}

/// `ε(ω) = ε_∞ + Σ_j f_j ω_j² / (ω² − ω_j² − iωγ'_j(ω))`.
pub fn eval_modified_lorentz(
    p: &ModifiedLorentzParams,
    omega: f64,
) -> Result<Complex64, MaterialError> {
    check_frequency(omega)?;
    let sum: Complex64 = p
        .oscillators
        .iter()
        .map(|o| {
            let wj2 = o.resonance * o.resonance;
            let den = Complex64::new(omega * omega - wj2, -omega * o.effective_damping(omega));
            o.weight * wj2 / den
        })
        .sum();
    Ok(p.eps_infinity + sum)
}
