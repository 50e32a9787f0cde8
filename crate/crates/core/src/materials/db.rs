use std::collections::BTreeMap;
use std::path::Path;

use serde::Deserialize;

use super::{
    DielectricModel, DrudeLorentzParams, DrudeParams, LorentzOscillator, Material, MaterialError,
    ModifiedLorentzOscillator, ModifiedLorentzParams,
};

/// Contents of the material file shipped with the crate.
pub const BUNDLED_MATERIALS: &str = include_str!("../../data/materials.toml");

const FORMAT_VERSION: u32 = 1;

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDb {
    format_version: u32,
    #[serde(default)]
    data_version: Option<String>,
    #[serde(default, rename = "material")]
    materials: Vec<RawMaterial>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
#[allow(non_snake_case)]
struct RawMaterial {
    name: String,
    model: String,
    source: String,
    plasma_energy_eV: Option<f64>,
    damping_eV: Option<f64>,
    eps_infinity: Option<f64>,
    eps: Option<[f64; 2]>,
    oscillators: Option<Vec<Vec<f64>>>,
}

impl RawMaterial {
    fn present_keys(&self) -> Vec<&'static str> {
        let mut keys = Vec::new();
        if self.plasma_energy_eV.is_some() {
            keys.push("plasma_energy_eV");
        }
        if self.damping_eV.is_some() {
            keys.push("damping_eV");
        }
        if self.eps_infinity.is_some() {
            keys.push("eps_infinity");
        }
        if self.eps.is_some() {
            keys.push("eps");
        }
        if self.oscillators.is_some() {
            keys.push("oscillators");
        }
        keys
    }

    fn into_material(self) -> Result<Material, MaterialError> {
        let invalid = |reason: String| MaterialError::InvalidEntry {
            name: self.name.clone(),
            reason,
        };
        let allowed: &[&str] = match self.model.as_str() {
            "drude" => &["plasma_energy_eV", "damping_eV"],
            "drude-lorentz" => &["plasma_energy_eV", "oscillators"],
            "modified-lorentz" => &["eps_infinity", "oscillators"],
            "constant" => &["eps"],
            "perfect-conductor" => &[],
            _ => {
                return Err(MaterialError::UnknownModel {
                    name: self.name.clone(),
                    model: self.model.clone(),
                })
            }
        };
        for key in self.present_keys() {
            if !allowed.contains(&key) {
                return Err(invalid(format!("key {key:?} is not valid for model {:?}", self.model)));
            }
        }
        let require = |v: Option<f64>, key: &str| {
            v.ok_or_else(|| invalid(format!("missing {key:?} for model {:?}", self.model)))
        };
        let rows = |width: usize| -> Result<Vec<Vec<f64>>, MaterialError> {
            let rows = self
                .oscillators
                .clone()
                .ok_or_else(|| invalid("missing \"oscillators\"".to_string()))?;
            for (j, row) in rows.iter().enumerate() {
                if row.len() != width {
                    return Err(invalid(format!(
                        "oscillator {j} has {} entries, expected {width}",
                        row.len()
                    )));
                }
            }
            Ok(rows)
        };

        let model = match self.model.as_str() {
            "drude" => DielectricModel::Drude(DrudeParams {
                plasma_energy: require(self.plasma_energy_eV, "plasma_energy_eV")?,
                damping: require(self.damping_eV, "damping_eV")?,
            }),
            "drude-lorentz" => DielectricModel::DrudeLorentz(DrudeLorentzParams {
                plasma_energy: require(self.plasma_energy_eV, "plasma_energy_eV")?,
                oscillators: rows(3)?
                    .into_iter()
                    .map(|r| LorentzOscillator {
                        weight: r[0],
                        resonance: r[1],
                        damping: r[2],
                    })
                    .collect(),
            }),
            "modified-lorentz" => DielectricModel::ModifiedLorentz(ModifiedLorentzParams {
                eps_infinity: require(self.eps_infinity, "eps_infinity")?,
                oscillators: rows(4)?
                    .into_iter()
                    .map(|r| ModifiedLorentzOscillator {
                        weight: r[0],
                        resonance: r[1],
                        damping: r[2],
                        alpha: r[3],
                    })
                    .collect(),
            }),
            "constant" => {
                let [re, im] = self.eps.ok_or_else(|| invalid("missing \"eps\"".to_string()))?;
                DielectricModel::Constant { re, im }
            }
            _ => DielectricModel::PerfectConductor,
        };
        model.validate().map_err(|e| match e {
            MaterialError::InvalidParams(reason) => invalid(reason),
            other => other,
        })?;
        Ok(Material {
            name: self.name,
            model,
            source: self.source,
        })
    }
}

/// Name → material map.
#[derive(Debug, Clone, Default)]
pub struct MaterialDb {
    materials: BTreeMap<String, Material>,
    data_version: Option<String>,
}

impl MaterialDb {
    /// The database compiled into the crate.
    pub fn bundled() -> Self {
        Self::from_toml_str(BUNDLED_MATERIALS, "<bundled>").expect("bundled material file is valid")
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, MaterialError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| MaterialError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_toml_str(&text, &path.display().to_string())
    }

    /// Parses a material document; `origin` only labels diagnostics.
    pub fn from_toml_str(text: &str, origin: &str) -> Result<Self, MaterialError> {
        let raw: RawDb = toml::from_str(text).map_err(|e| MaterialError::Parse {
            path: origin.to_string(),
            message: e.to_string(),
        })?;
        if raw.format_version != FORMAT_VERSION {
            return Err(MaterialError::Parse {
                path: origin.to_string(),
                message: format!(
                    "unsupported format_version {} (expected {FORMAT_VERSION})",
                    raw.format_version
                ),
            });
        }
        let mut materials = BTreeMap::new();
        for entry in raw.materials {
            let m = entry.into_material()?;
            if materials.contains_key(&m.name) {
                return Err(MaterialError::Duplicate(m.name));
            }
            materials.insert(m.name.clone(), m);
        }
        Ok(Self {
            materials,
            data_version: raw.data_version,
        })
    }

    pub fn get(&self, name: &str) -> Result<&Material, MaterialError> {
        self.materials
            .get(name)
            .ok_or_else(|| MaterialError::NotFound(name.to_string()))
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.materials.keys().map(String::as_str)
    }

    pub fn iter(&self) -> impl Iterator<Item = &Material> {
        self.materials.values()
    }

    pub fn data_version(&self) -> Option<&str> {
        self.data_version.as_deref()
    }

    pub fn len(&self) -> usize {
        self.materials.len()
    }

    pub fn is_empty(&self) -> bool {
        self.materials.is_empty()
    }

    /// Adds every entry of `other`, replacing entries with the same name.
    pub fn merge(&mut self, other: MaterialDb) {
        self.materials.extend(other.materials);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::materials::Permittivity;

    #[test]
    fn bundled_silver_plasma_energy() {
        let db = MaterialDb::bundled();
        let ag = db.get("Ag").unwrap();
        match &ag.model {
            DielectricModel::DrudeLorentz(p) => assert_eq!(p.plasma_energy, 9.01),
            other => panic!("unexpected model {other:?}"),
        }
        for name in ["Ag", "Au", "Ti", "SiO2", "GaAs", "PEC", "vacuum"] {
            assert!(db.get(name).is_ok(), "{name}");
        }
    }

    #[test]
    fn unknown_material_is_not_found() {
        let err = MaterialDb::bundled().get("unobtainium").unwrap_err();
        assert!(matches!(err, MaterialError::NotFound(_)));
        assert!(err.to_string().contains("material not found"));
    }

    #[test]
    fn silver_real_part_changes_sign_near_040_and_060() {
        let db = MaterialDb::bundled();
        let ag = db.get("Ag").unwrap();
        let wp = 9.01;
        let mut crossings = Vec::new();
        let mut prev: Option<f64> = None;
        for i in 0..=2000 {
            let x = 0.05 + 1.35 * i as f64 / 2000.0;
            let eps = ag.permittivity(x * wp).unwrap().finite().unwrap();
            if let Some(p) = prev {
                if p.signum() != eps.re.signum() {
                    crossings.push(x);
                }
            }
            prev = Some(eps.re);
        }
        assert!(crossings.iter().any(|x| (x - 0.4).abs() < 0.05), "{crossings:?}");
        assert!(crossings.iter().any(|x| (x - 0.6).abs() < 0.05), "{crossings:?}");
    }

    #[test]
    fn bundled_materials_are_passive() {
        let db = MaterialDb::bundled();
        for m in db.iter() {
            for i in 0..=600 {
                let w = 10f64.powf(-2.0 + 4.0 * i as f64 / 600.0);
                if let Permittivity::Finite(eps) = m.permittivity(w).unwrap() {
                    assert!(eps.im >= 0.0, "{} at {w} eV: {eps}", m.name);
                }
            }
        }
    }

    #[test]
    fn bundled_models_approach_background_at_high_frequency() {
        let db = MaterialDb::bundled();
        for m in db.iter() {
            let limit = match &m.model {
                DielectricModel::ModifiedLorentz(p) => p.eps_infinity,
                DielectricModel::PerfectConductor => continue,
                _ => 1.0,
            };
            let eps = m.permittivity(1e4).unwrap().finite().unwrap();
            assert!((eps - limit).norm() < 1e-4, "{}: {eps}", m.name);
        }
    }

    #[test]
    fn missing_file_is_io_error() {
        let err = MaterialDb::load("/nonexistent/materials.toml").unwrap_err();
        assert!(matches!(err, MaterialError::Io { .. }), "{err}");
    }

    #[test]
    fn unknown_key_is_rejected() {
        let text = r#"
format_version = 1
[[material]]
name = "X"
model = "drude"
source = "test"
plasma_energy_eV = 9.0
damping_eV = 0.1
colour = "blue"
"#;
        let err = MaterialDb::from_toml_str(text, "t").unwrap_err();
        assert!(matches!(err, MaterialError::Parse { .. }), "{err}");
    }

    #[test]
    fn unknown_model_tag_is_distinct() {
        let text = r#"
format_version = 1
[[material]]
name = "X"
model = "brendel-bormann"
source = "test"
"#;
        let err = MaterialDb::from_toml_str(text, "t").unwrap_err();
        assert!(matches!(err, MaterialError::UnknownModel { .. }), "{err}");
    }

    #[test]
    fn malformed_entries_are_reported() {
        let cases = [
            // wrong key for model
            "name = \"X\"\nmodel = \"drude\"\nsource = \"s\"\nplasma_energy_eV = 9.0\ndamping_eV = 0.1\neps_infinity = 2.0",
            // missing parameter
            "name = \"X\"\nmodel = \"drude\"\nsource = \"s\"\nplasma_energy_eV = 9.0",
            // wrong oscillator width
            "name = \"X\"\nmodel = \"drude-lorentz\"\nsource = \"s\"\nplasma_energy_eV = 9.0\noscillators = [[1.0, 0.0]]",
            // invariant violation
            "name = \"X\"\nmodel = \"modified-lorentz\"\nsource = \"s\"\neps_infinity = 2.0\noscillators = [[1.0, 2.0, 0.0, 1.0]]",
        ];
        for body in cases {
            let text = format!("format_version = 1\n[[material]]\n{body}\n");
            let err = MaterialDb::from_toml_str(&text, "t").unwrap_err();
            assert!(matches!(err, MaterialError::InvalidEntry { .. }), "{body}: {err}");
        }
    }

    #[test]
    fn duplicate_names_are_rejected() {
        let entry = "[[material]]\nname = \"X\"\nmodel = \"perfect-conductor\"\nsource = \"s\"\n";
        let text = format!("format_version = 1\n{entry}{entry}");
        assert!(matches!(
            MaterialDb::from_toml_str(&text, "t"),
            Err(MaterialError::Duplicate(_))
        ));
    }

    #[test]
    fn load_round_trips_through_a_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.toml");
        std::fs::write(&path, BUNDLED_MATERIALS).unwrap();
        let db = MaterialDb::load(&path).unwrap();
        assert_eq!(db.len(), MaterialDb::bundled().len());
        assert_eq!(db.data_version(), Some("2026.10-1"));
    }
}
