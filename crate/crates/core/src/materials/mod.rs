//! Dielectric functions of the media bounding the atomic layer.

mod db;
mod models;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use db::{MaterialDb, BUNDLED_MATERIALS};
pub use models::{
    eval_drude, eval_drude_lorentz, eval_modified_lorentz, DrudeLorentzParams, DrudeParams,
    LorentzOscillator, ModifiedLorentzOscillator, ModifiedLorentzParams,
};

#[derive(Debug, Error)]
pub enum MaterialError {
    #[error("photon energy must be positive and finite, got {omega} eV")]
    Domain { omega: f64 },

    #[error("material not found: {0}")]
    NotFound(String),

    #[error("cannot read material file {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed material file {path}: {message}")]
    Parse { path: String, message: String },

    #[error("material {name}: unknown model tag {model:?}")]
    UnknownModel { name: String, model: String },

    #[error("material {name}: {reason}")]
    InvalidEntry { name: String, reason: String },

    #[error("duplicate material name {0}")]
    Duplicate(String),

    #[error("invalid parameters: {0}")]
    InvalidParams(String),
}

impl MaterialError {
    pub(crate) fn invalid(reason: impl Into<String>) -> Self {
        MaterialError::InvalidParams(reason.into())
    }
}

/// Relative permittivity of a half-space at one frequency.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Permittivity {
    Finite(Complex64),
    /// The `ε → −∞` limit: `r^p = +1`, `r^s = −1` at every in-plane wavenumber.
    PerfectConductor,
}

impl Permittivity {
    pub fn finite(self) -> Option<Complex64> {
        match self {
            Permittivity::Finite(eps) => Some(eps),
            Permittivity::PerfectConductor => None,
        }
    }
}

/// A complete dielectric model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum DielectricModel {
    Drude(DrudeParams),
    DrudeLorentz(DrudeLorentzParams),
    ModifiedLorentz(ModifiedLorentzParams),
    /// Frequency-independent permittivity, e.g. vacuum (`ε = 1`).
    Constant { re: f64, im: f64 },
    PerfectConductor,
}

impl DielectricModel {
    pub fn vacuum() -> Self {
        DielectricModel::Constant { re: 1.0, im: 0.0 }
    }

    pub fn validate(&self) -> Result<(), MaterialError> {
        match self {
            DielectricModel::Drude(p) => p.validate(),
            DielectricModel::DrudeLorentz(p) => p.validate(),
            DielectricModel::ModifiedLorentz(p) => p.validate(),
            DielectricModel::Constant { re, im } => {
                if re.is_finite() && im.is_finite() && *im >= 0.0 {
                    Ok(())
                } else {
                    Err(MaterialError::invalid("constant permittivity must be finite with Im >= 0"))
                }
            }
            DielectricModel::PerfectConductor => Ok(()),
        }
    }

    pub fn permittivity(&self, omega: f64) -> Result<Permittivity, MaterialError> {
        Ok(match self {
            DielectricModel::Drude(p) => Permittivity::Finite(eval_drude(p, omega)?),
            DielectricModel::DrudeLorentz(p) => Permittivity::Finite(eval_drude_lorentz(p, omega)?),
            DielectricModel::ModifiedLorentz(p) => {
                Permittivity::Finite(eval_modified_lorentz(p, omega)?)
            }
            DielectricModel::Constant { re, im } => {
                if !(omega.is_finite() && omega > 0.0) {
                    return Err(MaterialError::Domain { omega });
                }
                Permittivity::Finite(Complex64::new(*re, *im))
            }
            DielectricModel::PerfectConductor => {
                if !(omega.is_finite() && omega > 0.0) {
                    return Err(MaterialError::Domain { omega });
                }
                Permittivity::PerfectConductor
            }
        })
    }

    /// Plasma energy of metallic models, used to normalize frequency axes.
    pub fn plasma_energy(&self) -> Option<f64> {
        match self {
            DielectricModel::Drude(p) => Some(p.plasma_energy),
            DielectricModel::DrudeLorentz(p) => Some(p.plasma_energy),
            _ => None,
        }
    }

    pub fn is_vacuum(&self) -> bool {
        matches!(self, DielectricModel::Constant { re, im } if *re == 1.0 && *im == 0.0)
    }
}

/// A named dielectric model with its literature source.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Material {
    pub name: String,
    pub model: DielectricModel,
    pub source: String,
}

impl Material {
    pub fn new(name: impl Into<String>, model: DielectricModel) -> Self {
        Self {
            name: name.into(),
            model,
            source: String::new(),
        }
    }

    pub fn vacuum() -> Self {
        Material::new("vacuum", DielectricModel::vacuum())
    }

    pub fn perfect_conductor() -> Self {
        Material::new("PEC", DielectricModel::PerfectConductor)
    }

    pub fn permittivity(&self, omega: f64) -> Result<Permittivity, MaterialError> {
        self.model.permittivity(omega)
    }
}
