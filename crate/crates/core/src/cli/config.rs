//! Scenario files: TOML schema, validation and expansion into cases.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::couplings::DipoleOrientation;
use crate::dynamics::{Propagator, DEFAULT_DT, DEFAULT_T_MAX};
use crate::greens::{LayerStack, PathParams};
use crate::materials::{Material, MaterialDb};
use crate::units::energy_from_wavelength;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Task {
    Epsilon,
    SingleRate,
    CouplingMap,
    CouplingCut,
    Shift,
    Modes,
    Transport,
}

impl Task {
    pub fn tag(self) -> &'static str {
        match self {
            Task::Epsilon => "epsilon",
            Task::SingleRate => "single-rate",
            Task::CouplingMap => "coupling-map",
            Task::CouplingCut => "coupling-cut",
            Task::Shift => "shift",
            Task::Modes => "modes",
            Task::Transport => "transport",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Surfaces {
    None,
    One,
    Two,
}

impl Surfaces {
    pub fn tag(self) -> &'static str {
        match self {
            Surfaces::None => "none",
            Surfaces::One => "one",
            Surfaces::Two => "two",
        }
    }
}

/// A sweep axis: one value, an explicit list, or a linear range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Axis {
    Value(f64),
    List(Vec<f64>),
    Range(LinearRange),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinearRange {
    pub start: f64,
    pub stop: f64,
    pub steps: usize,
}

impl Axis {
    pub fn values(&self) -> Vec<f64> {
        match self {
            Axis::Value(v) => vec![*v],
            Axis::List(v) => v.clone(),
            Axis::Range(r) if r.steps == 1 => vec![r.start],
            Axis::Range(r) => (0..r.steps)
                .map(|i| r.start + (r.stop - r.start) * i as f64 / (r.steps - 1) as f64)
                .collect(),
        }
    }

    fn check(&self, field: &str, positive: bool, diags: &mut Vec<String>) {
        if let Axis::Range(r) = self {
            if r.steps == 0 {
                diags.push(format!("{field}: range must have steps ≥ 1"));
            }
        }
        let values = self.values();
        if values.is_empty() {
            diags.push(format!("{field}: sweep is empty"));
        }
        for v in values {
            if !v.is_finite() {
                diags.push(format!("{field}: value {v} is not finite"));
                break;
            }
            if positive && v <= 0.0 {
                diags.push(format!("{field}: values must be > 0, got {v}"));
                break;
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AtomsSpec {
    pub count: Option<usize>,
    pub spacing_nm: Option<Axis>,
    #[serde(default)]
    pub orientations: Vec<DipoleOrientation>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrequencySpec {
    #[serde(rename = "omega_eV")]
    pub omega_ev: Option<Axis>,
    pub omega_over_plasma: Option<Axis>,
    pub wavelength_nm: Option<Axis>,
    /// Reference for `omega_over_plasma`; defaults to the first material's.
    #[serde(rename = "plasma_energy_eV")]
    pub plasma_energy_ev: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransportSpec {
    #[serde(default = "default_t_max")]
    pub t_max: f64,
    #[serde(default = "default_dt")]
    pub dt: f64,
    #[serde(default)]
    pub propagator: Propagator,
}

fn default_t_max() -> f64 {
    DEFAULT_T_MAX
}

fn default_dt() -> f64 {
    DEFAULT_DT
}

impl Default for TransportSpec {
    fn default() -> Self {
        Self { t_max: DEFAULT_T_MAX, dt: DEFAULT_DT, propagator: Propagator::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShiftSpec {
    /// Free-space linewidth `ħγ` in eV.
    #[serde(rename = "hbar_gamma_eV")]
    pub hbar_gamma_ev: f64,
}

/// Raw scenario as written in the file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub task: Task,
    /// Output file stem.
    pub name: Option<String>,
    /// Lower-surface materials (or the materials to tabulate for `epsilon`).
    pub materials: Option<Vec<String>>,
    /// Upper-surface material for two surfaces; defaults to the lower one.
    pub upper_material: Option<String>,
    /// Extra material database merged over the bundled one.
    pub materials_file: Option<PathBuf>,
    #[serde(default)]
    pub surfaces: Vec<Surfaces>,
    pub z_nm: Option<Axis>,
    /// Gap for two surfaces; defaults to `2 z`.
    pub gap_nm: Option<f64>,
    pub atoms: Option<AtomsSpec>,
    pub frequency: Option<FrequencySpec>,
    #[serde(default)]
    pub quadrature: PathParams,
    pub transport: Option<TransportSpec>,
    pub shift: Option<ShiftSpec>,
}

/// One geometry/material combination.
#[derive(Debug, Clone)]
pub struct Case {
    pub material: String,
    pub surfaces: Surfaces,
    pub z: f64,
    pub gap: f64,
    pub orientation: DipoleOrientation,
    pub stack: LayerStack,
}

/// A validated scenario, ready to run.
#[derive(Debug, Clone)]
pub struct Plan {
    pub task: Task,
    pub name: String,
    pub source_text: String,
    pub db: MaterialDb,
    /// Materials for the `epsilon` task.
    pub materials: Vec<Material>,
    pub cases: Vec<Case>,
    /// Transition energies in eV.
    pub omegas: Vec<f64>,
    /// Plasma energy used to normalize ω, if any.
    pub plasma_energy: Option<f64>,
    pub spacings: Vec<f64>,
    pub count: usize,
    pub params: PathParams,
    pub transport: TransportSpec,
    pub hbar_gamma: Option<f64>,
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{}", .0.join("\n"))]
    Invalid(Vec<String>),
}

impl ConfigError {
    pub fn diagnostics(&self) -> Vec<String> {
        match self {
            ConfigError::Io { .. } => vec![self.to_string()],
            ConfigError::Invalid(d) => d.clone(),
        }
    }
}

/// Reads and validates a scenario file, reporting every violation found.
pub fn validate_config(path: &Path) -> Result<Plan, ConfigError> {
    let text = std::fs::read_to_string(path)
        .map_err(|source| ConfigError::Io { path: path.to_path_buf(), source })?;
    let base = path.parent().unwrap_or(Path::new("."));
    let default_name = path.file_stem().and_then(|s| s.to_str()).unwrap_or("scenario");
    plan_from_str(&text, base, default_name)
}

/// Same as [`validate_config`] for in-memory text; relative paths resolve
/// against `base`.
pub fn plan_from_str(text: &str, base: &Path, default_name: &str) -> Result<Plan, ConfigError> {
    let scenario: Scenario = toml::from_str(text)
        .map_err(|e| ConfigError::Invalid(vec![format!("schema: {}", e.to_string().trim_end())]))?;
    let mut diags = Vec::new();
    let plan = build_plan(&scenario, text, base, default_name, &mut diags);
    match plan {
        Some(p) if diags.is_empty() => Ok(p),
        _ => Err(ConfigError::Invalid(diags)),
    }
}

fn build_plan(
    s: &Scenario,
    text: &str,
    base: &Path,
    default_name: &str,
    diags: &mut Vec<String>,
) -> Option<Plan> {
    let task = s.task;
    let name = s.name.clone().unwrap_or_else(|| default_name.to_string());
    if name.is_empty() || name.contains(['/', '\\']) {
        diags.push(format!("name: must be a plain file stem, got {name:?}"));
    }

    let mut db = MaterialDb::bundled();
    if let Some(file) = &s.materials_file {
        let path = if file.is_absolute() { file.clone() } else { base.join(file) };
        match MaterialDb::load(&path) {
            Ok(extra) => db.merge(extra),
            Err(e) => diags.push(format!("materials_file: {e}")),
        }
    }

    if let Err(e) = s.quadrature.validate() {
        diags.push(format!("quadrature: {e}"));
    }

    let surfaces = if s.surfaces.is_empty() { vec![Surfaces::One] } else { s.surfaces.clone() };
    let needs_surface_material = task != Task::Epsilon && surfaces.iter().any(|x| *x != Surfaces::None);
    let needs_geometry = task != Task::Epsilon;

    // Materials.
    let mut lower = Vec::new();
    match &s.materials {
        None if task == Task::Epsilon || needs_surface_material => {
            diags.push(format!("materials: required for task {}", task.tag()));
        }
        None => {}
        Some(list) if list.is_empty() => diags.push("materials: list is empty".into()),
        Some(list) => {
            for m in list {
                match db.get(m) {
                    Ok(mat) => lower.push(mat.clone()),
                    Err(_) => diags.push(format!("materials: unknown material {m:?} (see list-materials)")),
                }
            }
        }
    }
    let upper = match &s.upper_material {
        Some(m) => match db.get(m) {
            Ok(mat) => Some(mat.clone()),
            Err(_) => {
                diags.push(format!("upper_material: unknown material {m:?}"));
                None
            }
        },
        None => None,
    };

    // Frequencies.
    let mut plasma_energy = None;
    let mut omegas = Vec::new();
    match &s.frequency {
        None => diags.push("frequency: required (one of omega_eV, omega_over_plasma, wavelength_nm)".into()),
        Some(f) => {
            let given = [f.omega_ev.is_some(), f.omega_over_plasma.is_some(), f.wavelength_nm.is_some()]
                .iter()
                .filter(|x| **x)
                .count();
            if given != 1 {
                diags.push(format!(
                    "frequency: exactly one of omega_eV, omega_over_plasma, wavelength_nm is required, got {given}"
                ));
            }
            plasma_energy = f.plasma_energy_ev.or_else(|| lower.first().and_then(|m| m.model.plasma_energy()));
            if let Some(p) = f.plasma_energy_ev {
                if !(p > 0.0 && p.is_finite()) {
                    diags.push(format!("frequency.plasma_energy_eV: must be > 0, got {p}"));
                }
            }
            if let Some(a) = &f.omega_ev {
                a.check("frequency.omega_eV", true, diags);
                omegas = a.values();
            }
            if let Some(a) = &f.wavelength_nm {
                a.check("frequency.wavelength_nm", true, diags);
                omegas = a.values().into_iter().map(energy_from_wavelength).collect();
            }
            if let Some(a) = &f.omega_over_plasma {
                a.check("frequency.omega_over_plasma", true, diags);
                match plasma_energy {
                    Some(p) => omegas = a.values().into_iter().map(|x| x * p).collect(),
                    None => diags.push(
                        "frequency.omega_over_plasma: material has no plasma energy; set frequency.plasma_energy_eV".into(),
                    ),
                }
            }
        }
    }

    // Atoms.
    let atoms = s.atoms.clone().unwrap_or(AtomsSpec { count: None, spacing_nm: None, orientations: vec![] });
    let count = match task {
        Task::Epsilon | Task::SingleRate | Task::Shift => {
            if let Some(c) = atoms.count {
                if c != 1 {
                    diags.push(format!("atoms.count: task {} uses a single atom, got {c}", task.tag()));
                }
            }
            1
        }
        Task::CouplingMap | Task::CouplingCut => {
            if let Some(c) = atoms.count {
                if c != 2 {
                    diags.push(format!("atoms.count: task {} uses two atoms, got {c}", task.tag()));
                }
            }
            2
        }
        Task::Modes | Task::Transport => match atoms.count {
            None => {
                diags.push(format!("atoms.count: required for task {}", task.tag()));
                0
            }
            Some(0) => {
                diags.push("atoms.count: chain length must be ≥ 1".into());
                0
            }
            Some(c) => c,
        },
    };
    let mut spacings = vec![0.0];
    match &atoms.spacing_nm {
        Some(a) => {
            a.check("atoms.spacing_nm", true, diags);
            if count > 1 {
                spacings = a.values();
            }
        }
        None if count > 1 => diags.push(format!("atoms.spacing_nm: required for task {}", task.tag())),
        None => {}
    }
    if task == Task::Transport && count == 1 {
        diags.push("atoms.count: transport needs at least two atoms".into());
    }
    let orientations = if atoms.orientations.is_empty() {
        if needs_geometry {
            diags.push(format!("atoms.orientations: required for task {}", task.tag()));
        }
        vec![]
    } else {
        atoms.orientations.clone()
    };

    // Heights.
    let mut zs = Vec::new();
    if needs_geometry {
        match &s.z_nm {
            None => diags.push(format!("z_nm: required for task {}", task.tag())),
            Some(a) => {
                let needs_positive = surfaces.iter().any(|x| *x != Surfaces::None);
                a.check("z_nm", needs_positive, diags);
                zs = a.values();
            }
        }
    }
    if let Some(g) = s.gap_nm {
        if !(g > 0.0 && g.is_finite()) {
            diags.push(format!("gap_nm: must be > 0, got {g}"));
        }
    }

    let transport = s.transport.clone().unwrap_or_default();
    if task == Task::Transport {
        if !(transport.dt > 0.0 && transport.dt.is_finite()) {
            diags.push(format!("transport.dt: must be > 0, got {}", transport.dt));
        }
        if !(transport.t_max > 2.0 * transport.dt && transport.t_max.is_finite()) {
            diags.push(format!("transport.t_max: must exceed 2 dt, got {}", transport.t_max));
        }
    }
    let hbar_gamma = s.shift.as_ref().map(|x| x.hbar_gamma_ev);
    if task == Task::Shift {
        match hbar_gamma {
            None => diags.push("shift.hbar_gamma_eV: required for task shift".into()),
            Some(g) if !(g > 0.0 && g.is_finite()) => {
                diags.push(format!("shift.hbar_gamma_eV: must be > 0, got {g}"))
            }
            _ => {}
        }
    }

    // Cases.
    let mut cases = Vec::new();
    if needs_geometry {
        for &surf in &surfaces {
            let mats: Vec<Option<&Material>> =
                if surf == Surfaces::None { vec![None] } else { lower.iter().map(Some).collect() };
            for mat in mats {
                for &z in &zs {
                    let gap = match surf {
                        Surfaces::Two => s.gap_nm.unwrap_or(2.0 * z),
                        _ => f64::NAN,
                    };
                    if surf == Surfaces::Two && !(z < gap) {
                        diags.push(format!("z_nm: height {z} nm lies outside the {gap} nm gap"));
                        continue;
                    }
                    let (material, stack) = match (surf, mat) {
                        (Surfaces::None, _) | (_, None) => ("vacuum".to_string(), LayerStack::Vacuum),
                        (Surfaces::One, Some(m)) => (m.name.clone(), LayerStack::one_surface(m.clone())),
                        (Surfaces::Two, Some(m)) => {
                            let up = upper.clone().unwrap_or_else(|| m.clone());
                            let label = if up.name == m.name { m.name.clone() } else { format!("{}|{}", m.name, up.name) };
                            (label, LayerStack::two_surfaces(m.clone(), up, gap))
                        }
                    };
                    for &orientation in &orientations {
                        cases.push(Case { material: material.clone(), surfaces: surf, z, gap, orientation, stack: stack.clone() });
                    }
                }
            }
        }
    }

    // Every material must be defined at every requested energy.
    for m in lower.iter().chain(upper.iter()) {
        if let Some(&w) = omegas.iter().find(|&&w| m.permittivity(w).is_err()) {
            diags.push(format!("frequency: material {} is undefined at {w} eV", m.name));
        }
    }

    if !diags.is_empty() {
        return None;
    }
    Some(Plan {
        task,
        name,
        source_text: text.to_string(),
        db,
        materials: lower,
        cases,
        omegas,
        plasma_energy,
        spacings,
        count,
        params: s.quadrature,
        transport,
        hbar_gamma,
    })
}
