//! Collective radiative properties of two-level atoms near planar surfaces.
//!
//! The crate evaluates the electromagnetic Green tensor of a vacuum gap
//! bounded by zero, one or two planar media, turns it into the coherent
//! exchange matrix `V` and the dissipation matrix `Γ` of the atomic master
//! equation, and propagates single-excitation transport along atomic chains.
//!
//! Conventions used throughout:
//!
//! * photon energies and frequencies are energies in eV,
//! * lengths are in nm and wavenumbers in nm⁻¹,
//! * rates are in units of the free-space single-atom decay rate `γ` and
//!   times in units of `1/γ`.
//!
//! Modules:
//!
//! * [`materials`]: dielectric models and the material database,
//! * [`greens`]: bulk and scattering Green tensors, Fresnel coefficients and
//!   the Sommerfeld contour integrator,
//! * [`couplings`]: `V`/`Γ` assembly, collective modes and surface shifts,
//! * [`dynamics`]: single-excitation propagation and transport observables,
//! * [`cli`]: scenario files, sweeps and CSV/JSON result tables.

pub mod cli;
pub mod couplings;
pub mod dynamics;
pub mod greens;
pub mod materials;
pub mod units;

pub use couplings::{
    collective_modes, coupling_matrices, surface_shift, AtomArray, CollectiveModes, CouplingError,
    CouplingSet, ShiftResult,
};
pub use dynamics::{
    build_effective_hamiltonian, propagate, transport_metrics, DynamicsError,
    EffectiveHamiltonian, Propagator, Trajectory, TransportMetrics,
};
pub use greens::{
    bulk_green, fresnel, scattering_green, sommerfeld_integrate, vacuum_coupling, GreensError,
    LayerStack, PathParams, Polarization, Tensor3C,
};
pub use materials::{DielectricModel, Material, MaterialDb, MaterialError, Permittivity};
