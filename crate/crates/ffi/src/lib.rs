//! C interface to the `nearfield` crate.
//!
//! Every entry point returns an [`NfStatus`]; on failure a message is kept
//! per thread and can be read with [`nf_last_error`]. Handles are opaque and
//! must be released with their `_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use nalgebra::Vector3;
use nearfield::couplings::CouplingError;
use nearfield::dynamics::localized_state;
use nearfield::greens::GreensError;
use nearfield::{
    build_effective_hamiltonian, coupling_matrices, propagate, transport_metrics, AtomArray, LayerStack,
    MaterialDb, MaterialError, PathParams, Permittivity, Propagator, Trajectory,
};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NfStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    NotFound = 3,
    /// A Sommerfeld integral missed its tolerance within the evaluation budget.
    NoConvergence = 4,
    Io = 5,
    /// Transport peak not reached inside the time window.
    WindowTooShort = 6,
    Panic = 7,
}

/// Material database handle.
pub struct NfMaterialDb {
    db: MaterialDb,
}

/// Layered environment handle.
pub struct NfStack {
    stack: LayerStack,
}

/// Single-excitation trajectory handle.
pub struct NfTrajectory {
    traj: Trajectory,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct NfTransportMetrics {
    /// Peak time of the last site, in 1/γ.
    pub t_peak: f64,
    pub peak_population: f64,
    /// Total population left at `t_peak`.
    pub remaining: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<String>) {
    let text = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(text).unwrap_or_default());
}

/// Message of the last failed call on this thread, empty after success.
/// The pointer stays valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn nf_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

type Failure = (NfStatus, String);

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> NfStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            NfStatus::Ok
        }
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            NfStatus::Panic
        }
    }
}

fn null(what: &str) -> Failure {
    (NfStatus::NullPointer, format!("{what} is null"))
}

fn invalid(msg: impl Into<String>) -> Failure {
    (NfStatus::InvalidArgument, msg.into())
}

fn material_failure(e: MaterialError) -> Failure {
    let status = match e {
        MaterialError::NotFound(_) => NfStatus::NotFound,
        MaterialError::Io { .. } => NfStatus::Io,
        _ => NfStatus::InvalidArgument,
    };
    (status, e.to_string())
}

fn coupling_failure(e: CouplingError) -> Failure {
    let status = match &e {
        CouplingError::Greens { source: GreensError::Convergence { .. }, .. } => NfStatus::NoConvergence,
        _ => NfStatus::InvalidArgument,
    };
    (status, e.to_string())
}

/// # Safety
/// `s` must be null or a NUL-terminated string.
unsafe fn text<'a>(s: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if s.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(s).to_str().map_err(|_| invalid(format!("{what} is not UTF-8")))
}

/// # Safety
/// `p` must be null or point to `len` readable values.
unsafe fn slice<'a>(p: *const f64, len: usize, what: &str) -> Result<&'a [f64], Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

/// # Safety
/// `p` must be null or point to a live handle.
unsafe fn handle<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(what))
}

fn give<T>(out: *mut *mut T, value: T) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null("output handle"));
    }
    // SAFETY: checked non-null; the caller provides a writable slot.
    unsafe { *out = Box::into_raw(Box::new(value)) };
    Ok(())
}

// Materials ------------------------------------------------------------------

/// Opens the bundled database.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn nf_material_db_bundled(out: *mut *mut NfMaterialDb) -> NfStatus {
    guard(|| give(out, NfMaterialDb { db: MaterialDb::bundled() }))
}

/// Opens the bundled database extended by the TOML file at `path`; entries
/// in the file replace bundled ones with the same name.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn nf_material_db_load(path: *const c_char, out: *mut *mut NfMaterialDb) -> NfStatus {
    guard(|| {
        let path = text(path, "path")?;
        let extra = MaterialDb::load(path).map_err(material_failure)?;
        let mut db = MaterialDb::bundled();
        db.merge(extra);
        give(out, NfMaterialDb { db })
    })
}

/// # Safety
/// `db` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn nf_material_db_free(db: *mut NfMaterialDb) {
    if !db.is_null() {
        drop(Box::from_raw(db));
    }
}

/// Relative permittivity of `name` at `omega_ev`. For a perfect conductor
/// `*is_perfect_conductor` is set and the real and imaginary parts are NaN.
///
/// # Safety
/// Pointers must be valid; `name` NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn nf_permittivity(
    db: *const NfMaterialDb,
    name: *const c_char,
    omega_ev: f64,
    re: *mut f64,
    im: *mut f64,
    is_perfect_conductor: *mut bool,
) -> NfStatus {
    guard(|| {
        let db = &handle(db, "db")?.db;
        let name = text(name, "name")?;
        if re.is_null() || im.is_null() || is_perfect_conductor.is_null() {
            return Err(null("output"));
        }
        let eps = db.get(name).map_err(material_failure)?.permittivity(omega_ev).map_err(material_failure)?;
        let (r, i, pec) = match eps {
            Permittivity::Finite(e) => (e.re, e.im, false),
            Permittivity::PerfectConductor => (f64::NAN, f64::NAN, true),
        };
        *re = r;
        *im = i;
        *is_perfect_conductor = pec;
        Ok(())
    })
}

// Stacks ---------------------------------------------------------------------

/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn nf_stack_vacuum(out: *mut *mut NfStack) -> NfStatus {
    guard(|| give(out, NfStack { stack: LayerStack::Vacuum }))
}

/// Half-space of `lower` below `z = 0`.
///
/// # Safety
/// Pointers must be valid; `lower` NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn nf_stack_one_surface(
    db: *const NfMaterialDb,
    lower: *const c_char,
    out: *mut *mut NfStack,
) -> NfStatus {
    guard(|| {
        let db = &handle(db, "db")?.db;
        let m = db.get(text(lower, "lower")?).map_err(material_failure)?.clone();
        give(out, NfStack { stack: LayerStack::one_surface(m) })
    })
}

/// Vacuum gap `0 < z < gap_nm` between `lower` and `upper`.
///
/// # Safety
/// Pointers must be valid; names NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn nf_stack_two_surfaces(
    db: *const NfMaterialDb,
    lower: *const c_char,
    upper: *const c_char,
    gap_nm: f64,
    out: *mut *mut NfStack,
) -> NfStatus {
    guard(|| {
        let db = &handle(db, "db")?.db;
        if !(gap_nm > 0.0 && gap_nm.is_finite()) {
            return Err(invalid(format!("gap must be > 0 nm, got {gap_nm}")));
        }
        let lo = db.get(text(lower, "lower")?).map_err(material_failure)?.clone();
        let up = db.get(text(upper, "upper")?).map_err(material_failure)?.clone();
        give(out, NfStack { stack: LayerStack::two_surfaces(lo, up, gap_nm) })
    })
}

/// # Safety
/// `stack` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn nf_stack_free(stack: *mut NfStack) {
    if !stack.is_null() {
        drop(Box::from_raw(stack));
    }
}

// Couplings ------------------------------------------------------------------

/// # Safety
/// `positions` holds `3 n` values, `dipole` 3.
unsafe fn atom_array(positions: *const f64, n: usize, dipole: *const f64, omega_ev: f64) -> Result<AtomArray, Failure> {
    if n == 0 {
        return Err(invalid("need at least one atom"));
    }
    let xyz = slice(positions, 3 * n, "positions")?;
    let d = slice(dipole, 3, "dipole")?;
    let positions = xyz.chunks_exact(3).map(|p| Vector3::new(p[0], p[1], p[2])).collect();
    AtomArray::new(positions, Vector3::new(d[0], d[1], d[2]), omega_ev).map_err(coupling_failure)
}

/// Fills the row-major `n × n` matrices `v` and `gamma` (units of γ) for
/// atoms at `positions` (`n` xyz triples in nm) with common dipole
/// direction `dipole`. `max_error` may be null.
///
/// # Safety
/// `positions` holds `3 n` values, `dipole` 3, `v` and `gamma` `n²` each.
#[no_mangle]
pub unsafe extern "C" fn nf_coupling_matrices(
    stack: *const NfStack,
    positions: *const f64,
    n: usize,
    dipole: *const f64,
    omega_ev: f64,
    v: *mut f64,
    gamma: *mut f64,
    max_error: *mut f64,
) -> NfStatus {
    guard(|| {
        let stack = &handle(stack, "stack")?.stack;
        let array = atom_array(positions, n, dipole, omega_ev)?;
        if v.is_null() || gamma.is_null() {
            return Err(null("output matrix"));
        }
        let cs = coupling_matrices(&array, stack, &PathParams::default()).map_err(coupling_failure)?;
        let v = std::slice::from_raw_parts_mut(v, n * n);
        let g = std::slice::from_raw_parts_mut(gamma, n * n);
        for i in 0..n {
            for j in 0..n {
                v[i * n + j] = cs.v[(i, j)];
                g[i * n + j] = cs.gamma[(i, j)];
            }
        }
        if !max_error.is_null() {
            *max_error = cs.max_error;
        }
        Ok(())
    })
}

// Transport ------------------------------------------------------------------

/// Propagates an excitation starting on atom `initial_site` up to `t_max`
/// (1/γ), sampled every `dt`.
///
/// # Safety
/// `positions` holds `3 n` values, `dipole` 3; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn nf_transport(
    stack: *const NfStack,
    positions: *const f64,
    n: usize,
    dipole: *const f64,
    omega_ev: f64,
    initial_site: usize,
    t_max: f64,
    dt: f64,
    out: *mut *mut NfTrajectory,
) -> NfStatus {
    guard(|| {
        let stack = &handle(stack, "stack")?.stack;
        let array = atom_array(positions, n, dipole, omega_ev)?;
        if initial_site >= n {
            return Err(invalid(format!("initial site {initial_site} outside chain of {n}")));
        }
        let cs = coupling_matrices(&array, stack, &PathParams::default()).map_err(coupling_failure)?;
        let h = build_effective_hamiltonian(&cs);
        let traj = propagate(&h, &localized_state(n, initial_site), t_max, dt, Propagator::Exponential)
            .map_err(|e| invalid(e.to_string()))?;
        give(out, NfTrajectory { traj })
    })
}

/// Number of time samples.
///
/// # Safety
/// `traj` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn nf_trajectory_len(traj: *const NfTrajectory) -> usize {
    traj.as_ref().map_or(0, |t| t.traj.len())
}

/// Time of sample `k` and the `n` site populations at that time.
///
/// # Safety
/// `traj` must be a live handle, `populations` writable for the chain
/// length, `time` writable.
#[no_mangle]
pub unsafe extern "C" fn nf_trajectory_sample(
    traj: *const NfTrajectory,
    k: usize,
    time: *mut f64,
    populations: *mut f64,
) -> NfStatus {
    guard(|| {
        let t = &handle(traj, "trajectory")?.traj;
        if k >= t.len() {
            return Err(invalid(format!("sample {k} out of range 0..{}", t.len())));
        }
        if time.is_null() || populations.is_null() {
            return Err(null("output"));
        }
        *time = t.times[k];
        let out = std::slice::from_raw_parts_mut(populations, t.sites());
        for (o, a) in out.iter_mut().zip(t.amplitudes[k].iter()) {
            *o = a.norm_sqr();
        }
        Ok(())
    })
}

/// Peak time of the last site and the populations there.
///
/// # Safety
/// `traj` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn nf_trajectory_metrics(traj: *const NfTrajectory, out: *mut NfTransportMetrics) -> NfStatus {
    guard(|| {
        let t = &handle(traj, "trajectory")?.traj;
        if out.is_null() {
            return Err(null("output"));
        }
        let m = transport_metrics(t).map_err(|e| (NfStatus::WindowTooShort, e.to_string()))?;
        *out = NfTransportMetrics { t_peak: m.t_peak, peak_population: m.peak_population, remaining: m.remaining };
        Ok(())
    })
}

/// # Safety
/// `traj` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn nf_trajectory_free(traj: *mut NfTrajectory) {
    if !traj.is_null() {
        drop(Box::from_raw(traj));
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::ptr;

    #[test]
    fn errors_are_reported_per_thread() {
        let mut db = ptr::null_mut();
        unsafe {
            assert_eq!(nf_material_db_bundled(&mut db), NfStatus::Ok);
            let mut stack = ptr::null_mut();
            let bad = CString::new("Kryptonite").unwrap();
            assert_eq!(nf_stack_one_surface(db, bad.as_ptr(), &mut stack), NfStatus::NotFound);
            let msg = CStr::from_ptr(nf_last_error()).to_str().unwrap().to_string();
            assert!(msg.contains("Kryptonite"));
            std::thread::spawn(|| assert_eq!(CStr::from_ptr(nf_last_error()).to_bytes(), b""))
                .join()
                .unwrap();
            assert!(stack.is_null());
            nf_material_db_free(db);
        }
    }

    #[test]
    fn null_handles_are_rejected() {
        let (mut re, mut im, mut pec) = (0.0, 0.0, false);
        let name = CString::new("Ag").unwrap();
        let s = unsafe { nf_permittivity(ptr::null(), name.as_ptr(), 1.0, &mut re, &mut im, &mut pec) };
        assert_eq!(s, NfStatus::NullPointer);
        assert_eq!(unsafe { nf_trajectory_len(ptr::null()) }, 0);
        unsafe { nf_stack_free(ptr::null_mut()) };
    }
}
