//! Exchange and dissipation matrices, collective modes and surface shifts.

use std::collections::HashMap;

use nalgebra::{DMatrix, DVector, SymmetricEigen, Vector3};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::greens::{
    bulk_green, scattering_green, GreensError, LayerStack, PathParams, Tensor3C,
};
use crate::units::{wavelength, HBAR_C_EV_NM};

#[derive(Debug, Error)]
pub enum CouplingError {
    #[error("invalid atom array: {0}")]
    InvalidArray(String),
    #[error("Green tensor failed for atoms ({alpha}, {beta}) at {omega} eV: {source}")]
    Greens {
        alpha: usize,
        beta: usize,
        omega: f64,
        #[source]
        source: GreensError,
    },
}

/// Named dipole orientations for chains along `x` above a surface in the
/// `xy` plane.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DipoleOrientation {
    /// In the surface plane, perpendicular to the chain axis (`ŷ`).
    ParallelPerpAxis,
    /// Normal to the surface (`ẑ`).
    PerpendicularToSurface,
    /// In the surface plane, along the chain axis (`x̂`).
    AlignedWithAxis,
}

impl DipoleOrientation {
    pub const ALL: [DipoleOrientation; 3] = [
        DipoleOrientation::ParallelPerpAxis,
        DipoleOrientation::PerpendicularToSurface,
        DipoleOrientation::AlignedWithAxis,
    ];

    pub fn unit_vector(self) -> Vector3<f64> {
        match self {
            DipoleOrientation::ParallelPerpAxis => Vector3::y(),
            DipoleOrientation::PerpendicularToSurface => Vector3::z(),
            DipoleOrientation::AlignedWithAxis => Vector3::x(),
        }
    }

    pub fn tag(self) -> &'static str {
        match self {
            DipoleOrientation::ParallelPerpAxis => "parallel-perp-axis",
            DipoleOrientation::PerpendicularToSurface => "perpendicular-to-surface",
            DipoleOrientation::AlignedWithAxis => "aligned-with-axis",
        }
    }
}

/// Identical two-level atoms with a shared real dipole direction.
#[derive(Debug, Clone, PartialEq)]
pub struct AtomArray {
    /// Positions in nm.
    pub positions: Vec<Vector3<f64>>,
    /// Unit dipole direction.
    pub dipole: Vector3<f64>,
    /// Transition energy in eV.
    pub omega: f64,
}

impl AtomArray {
    pub fn new(
        positions: Vec<Vector3<f64>>,
        dipole: Vector3<f64>,
        omega: f64,
    ) -> Result<Self, CouplingError> {
        let array = Self { positions, dipole, omega };
        array.validate()?;
        Ok(array)
    }

    /// `n` atoms at `x = 0, a, 2a, …` and height `z` (nm).
    pub fn chain(
        n: usize,
        spacing: f64,
        z: f64,
        dipole: Vector3<f64>,
        omega: f64,
    ) -> Result<Self, CouplingError> {
        let positions = (0..n).map(|i| Vector3::new(i as f64 * spacing, 0.0, z)).collect();
        Self::new(positions, dipole, omega)
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    /// Transition wavelength in nm.
    pub fn wavelength(&self) -> f64 {
        wavelength(self.omega)
    }

    pub fn validate(&self) -> Result<(), CouplingError> {
        let bad = |m: String| Err(CouplingError::InvalidArray(m));
        if self.positions.is_empty() {
            return bad("no atoms".into());
        }
        if !(self.omega > 0.0 && self.omega.is_finite()) {
            return bad(format!("transition energy must be > 0, got {}", self.omega));
        }
        if (self.dipole.norm() - 1.0).abs() > 1e-9 {
            return bad(format!("dipole direction must be a unit vector, |d| = {}", self.dipole.norm()));
        }
        for (i, p) in self.positions.iter().enumerate() {
            if p.iter().any(|x| !x.is_finite()) {
                return bad(format!("position {i} is not finite"));
            }
            for (j, q) in self.positions.iter().enumerate().take(i) {
                if p == q {
                    return bad(format!("atoms {j} and {i} coincide"));
                }
            }
        }
        Ok(())
    }

    fn check_inside(&self, stack: &LayerStack) -> Result<(), CouplingError> {
        for (i, p) in self.positions.iter().enumerate() {
            stack
                .check_height(p.z)
                .map_err(|e| CouplingError::InvalidArray(format!("atom {i}: {e}")))?;
        }
        Ok(())
    }
}

/// Eigen-decomposition `Γ = M diag(γ_m) Mᵀ`, columns of `M` are the modes.
#[derive(Debug, Clone, PartialEq)]
pub struct CollectiveModes {
    /// Decay rates in units of γ, descending.
    pub rates: DVector<f64>,
    pub vectors: DMatrix<f64>,
}

/// `V` and `Γ` in units of γ, with quadrature diagnostics.
#[derive(Debug, Clone)]
pub struct CouplingSet {
    pub v: DMatrix<f64>,
    pub gamma: DMatrix<f64>,
    pub modes: CollectiveModes,
    /// Largest quadrature error estimate, propagated into units of γ.
    pub max_error: f64,
    pub evaluations: usize,
}

/// Quantized pair geometry, canonical under exchange of the two atoms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
struct PairKey([i64; 4]);

const KEY_RESOLUTION_NM: f64 = 1e-9;

impl PairKey {
    fn new(a: &Vector3<f64>, b: &Vector3<f64>) -> Self {
        let q = |x: f64| (x / KEY_RESOLUTION_NM).round() as i64;
        let fwd = [q(a.x - b.x), q(a.y - b.y), q(a.z), q(b.z)];
        let rev = [-fwd[0], -fwd[1], fwd[3], fwd[2]];
        // d̂·G(a,b)·d̂ = d̂·G(b,a)·d̂ by reciprocity, so both orders share a slot.
        PairKey(fwd.min(rev))
    }
}

fn project(g: &Tensor3C, d: &Vector3<f64>) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for i in 0..3 {
        for j in 0..3 {
            acc += d[i] * g[(i, j)] * d[j];
        }
    }
    acc
}

/// Builds `V_αβ = (3λ/2) d̂·Re G·d̂` (zero diagonal) and
/// `Γ_αβ = 3λ d̂·Im G·d̂` with `G = G⁰ + G^R` at the transition energy.
pub fn coupling_matrices(
    array: &AtomArray,
    stack: &LayerStack,
    params: &PathParams,
) -> Result<CouplingSet, CouplingError> {
    array.validate()?;
    array.check_inside(stack)?;
    let n = array.len();
    let lambda = array.wavelength();
    let k = 2.0 * std::f64::consts::PI / lambda;
    let d = array.dipole;
    let omega = array.omega;

    // Distinct scattering geometries, each tagged with its first pair.
    let mut first: HashMap<PairKey, (usize, usize)> = HashMap::new();
    let mut order = Vec::new();
    if !matches!(stack, LayerStack::Vacuum) {
        for a in 0..n {
            for b in a..n {
                let key = PairKey::new(&array.positions[a], &array.positions[b]);
                first.entry(key).or_insert_with(|| {
                    order.push(key);
                    (a, b)
                });
            }
        }
    }
    let computed: Vec<Result<(PairKey, Complex64, f64, usize), CouplingError>> = order
        .par_iter()
        .map(|key| {
            let (a, b) = first[key];
            let res = scattering_green(stack, &array.positions[a], &array.positions[b], omega, params)
                .map_err(|source| CouplingError::Greens { alpha: a, beta: b, omega, source })?;
            Ok((*key, project(&res.tensor, &d), res.error, res.evaluations))
        })
        .collect();
    let mut scattered = HashMap::with_capacity(computed.len());
    let mut max_error: f64 = 0.0;
    let mut evaluations = 0;
    for r in computed {
        let (key, value, err, evals) = r?;
        scattered.insert(key, value);
        max_error = max_error.max(3.0 * lambda * err);
        evaluations += evals;
    }
    let surface = |a: usize, b: usize| -> Complex64 {
        if scattered.is_empty() {
            return Complex64::new(0.0, 0.0);
        }
        scattered[&PairKey::new(&array.positions[a], &array.positions[b])]
    };

    let mut v = DMatrix::zeros(n, n);
    let mut gamma = DMatrix::zeros(n, n);
    for a in 0..n {
        gamma[(a, a)] = 1.0 + 3.0 * lambda * surface(a, a).im;
        for b in (a + 1)..n {
            let bulk = bulk_green(&(array.positions[a] - array.positions[b]), k)
                .map_err(|source| CouplingError::Greens { alpha: a, beta: b, omega, source })?;
            let g = project(&bulk, &d) + surface(a, b);
            v[(a, b)] = 1.5 * lambda * g.re;
            v[(b, a)] = v[(a, b)];
            gamma[(a, b)] = 3.0 * lambda * g.im;
            gamma[(b, a)] = gamma[(a, b)];
        }
    }
    let modes = collective_modes(&gamma);
    Ok(CouplingSet { v, gamma, modes, max_error, evaluations })
}

/// Orthogonal diagonalization of a real symmetric `Γ`, rates descending.
/// The first non-negligible component of every eigenvector is positive.
pub fn collective_modes(gamma: &DMatrix<f64>) -> CollectiveModes {
    let n = gamma.nrows();
    let eig = SymmetricEigen::new(gamma.clone());
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
    let rates = DVector::from_iterator(n, idx.iter().map(|&i| eig.eigenvalues[i]));
    let mut vectors = DMatrix::zeros(n, n);
    for (col, &i) in idx.iter().enumerate() {
        let mut v = eig.eigenvectors.column(i).clone_owned();
        let lead = v.iter().copied().find(|x| x.abs() > 1e-12).unwrap_or(0.0);
        if lead < 0.0 {
            v.neg_mut();
        }
        vectors.set_column(col, &v);
    }
    CollectiveModes { rates, vectors }
}

/// Outcome of the self-consistent surface shift iteration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ShiftResult {
    /// Bare transition energy, eV.
    pub omega: f64,
    /// Self-consistent shifted energy `ω̃ = ω − δ`, eV.
    pub omega_shifted: f64,
    /// Shift `δ` in eV.
    pub shift: f64,
    /// Shift in units of γ.
    pub shift_over_gamma: f64,
    pub iterations: usize,
    pub converged: bool,
}

pub const SHIFT_TOLERANCE: f64 = 1e-12;
pub const SHIFT_MAX_ITERATIONS: usize = 50;

/// Surface-induced level shift of one atom at `position` with dipole `d`.
///
/// `hbar_gamma` is the free-space linewidth `ħγ` in eV, which converts the
/// dimensionless coupling into an energy. Iterates
/// `ω̃ ← ω − δ(ω̃)` with `δ(ω̃)/γ = 3πħc (ω̃²/ω³) d̂·Re G^R(r, r, ω̃)·d̂`.
pub fn surface_shift(
    stack: &LayerStack,
    position: &Vector3<f64>,
    d: &Vector3<f64>,
    omega: f64,
    hbar_gamma: f64,
    params: &PathParams,
) -> Result<ShiftResult, CouplingError> {
    if !(hbar_gamma > 0.0 && hbar_gamma.is_finite()) {
        return Err(CouplingError::InvalidArray(format!("ħγ must be > 0, got {hbar_gamma}")));
    }
    let array = AtomArray::new(vec![*position], *d, omega)?;
    array.check_inside(stack)?;
    let delta_over_gamma = |w: f64| -> Result<f64, CouplingError> {
        let g = scattering_green(stack, position, position, w, params)
            .map_err(|source| CouplingError::Greens { alpha: 0, beta: 0, omega: w, source })?;
        Ok(3.0 * std::f64::consts::PI * HBAR_C_EV_NM * w * w / omega.powi(3) * project(&g.tensor, d).re)
    };
    let mut current = omega;
    let mut ratio = 0.0;
    for it in 1..=SHIFT_MAX_ITERATIONS {
        ratio = delta_over_gamma(current)?;
        let next = omega - ratio * hbar_gamma;
        let change = (next - current).abs() / omega;
        current = next;
        if change < SHIFT_TOLERANCE {
            return Ok(ShiftResult {
                omega,
                omega_shifted: current,
                shift: omega - current,
                shift_over_gamma: ratio,
                iterations: it,
                converged: true,
            });
        }
        if !(current > 0.0) {
            break;
        }
    }
    Ok(ShiftResult {
        omega,
        omega_shifted: current,
        shift: omega - current,
        shift_over_gamma: ratio,
        iterations: SHIFT_MAX_ITERATIONS,
        converged: false,
    })
}
