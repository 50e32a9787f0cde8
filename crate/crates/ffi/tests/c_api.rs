use std::ffi::{CStr, CString};
use std::path::Path;
use std::process::Command;
use std::ptr;

use nearfield_ffi::*;

fn last_error() -> String {
    unsafe { CStr::from_ptr(nf_last_error()) }.to_string_lossy().into_owned()
}

struct Db(*mut NfMaterialDb);

impl Db {
    fn bundled() -> Self {
        let mut db = ptr::null_mut();
        assert_eq!(unsafe { nf_material_db_bundled(&mut db) }, NfStatus::Ok);
        Db(db)
    }
}

impl Drop for Db {
    fn drop(&mut self) {
        unsafe { nf_material_db_free(self.0) }
    }
}

fn chain(n: usize, spacing: f64, z: f64) -> Vec<f64> {
    (0..n).flat_map(|i| [spacing * i as f64, 0.0, z]).collect()
}

#[test]
fn permittivity_matches_the_library() {
    let db = Db::bundled();
    let ag = CString::new("Ag").unwrap();
    let (mut re, mut im, mut pec) = (0.0, 0.0, true);
    assert_eq!(unsafe { nf_permittivity(db.0, ag.as_ptr(), 3.0, &mut re, &mut im, &mut pec) }, NfStatus::Ok);
    let eps = nearfield::MaterialDb::bundled().get("Ag").unwrap().permittivity(3.0).unwrap().finite().unwrap();
    assert_eq!((re, im, pec), (eps.re, eps.im, false));
    assert_eq!(last_error(), "");

    let name = CString::new("PEC").unwrap();
    assert_eq!(unsafe { nf_permittivity(db.0, name.as_ptr(), 3.0, &mut re, &mut im, &mut pec) }, NfStatus::Ok);
    assert!(pec && re.is_nan());

    assert_eq!(
        unsafe { nf_permittivity(db.0, ag.as_ptr(), -1.0, &mut re, &mut im, &mut pec) },
        NfStatus::InvalidArgument
    );
    assert!(last_error().contains("positive"));
}

#[test]
fn loading_a_missing_file_is_an_io_error() {
    let path = CString::new("/nonexistent/materials.toml").unwrap();
    let mut db = ptr::null_mut();
    assert_eq!(unsafe { nf_material_db_load(path.as_ptr(), &mut db) }, NfStatus::Io);
    assert!(db.is_null());
}

#[test]
fn coupling_matrices_match_the_library() {
    let db = Db::bundled();
    let ag = CString::new("Ag").unwrap();
    let mut stack = ptr::null_mut();
    assert_eq!(unsafe { nf_stack_one_surface(db.0, ag.as_ptr(), &mut stack) }, NfStatus::Ok);
    let pos = chain(3, 150.0, 20.0);
    let d = [0.0, 0.0, 1.0];
    let (mut v, mut g, mut err) = ([0.0; 9], [0.0; 9], -1.0);
    let s = unsafe { nf_coupling_matrices(stack, pos.as_ptr(), 3, d.as_ptr(), 2.0, v.as_mut_ptr(), g.as_mut_ptr(), &mut err) };
    assert_eq!(s, NfStatus::Ok, "{}", last_error());
    assert!(err >= 0.0);

    let lib_db = nearfield::MaterialDb::bundled();
    let arr = nearfield::AtomArray::chain(3, 150.0, 20.0, nalgebra::Vector3::z(), 2.0).unwrap();
    let cs = nearfield::coupling_matrices(
        &arr,
        &nearfield::LayerStack::one_surface(lib_db.get("Ag").unwrap().clone()),
        &nearfield::PathParams::default(),
    )
    .unwrap();
    for i in 0..3 {
        for j in 0..3 {
            assert_eq!(v[3 * i + j], cs.v[(i, j)]);
            assert_eq!(g[3 * i + j], cs.gamma[(i, j)]);
        }
    }

    // Atom below the surface.
    let bad = chain(2, 150.0, -5.0);
    let s = unsafe { nf_coupling_matrices(stack, bad.as_ptr(), 2, d.as_ptr(), 2.0, v.as_mut_ptr(), g.as_mut_ptr(), ptr::null_mut()) };
    assert_eq!(s, NfStatus::InvalidArgument);
    assert!(!last_error().is_empty());
    unsafe { nf_stack_free(stack) };
}

#[test]
fn vacuum_chain_transport() {
    let mut stack = ptr::null_mut();
    assert_eq!(unsafe { nf_stack_vacuum(&mut stack) }, NfStatus::Ok);
    let n = 20;
    let pos = chain(n, 206.4, 0.0);
    let d = [1.0, 0.0, 0.0];
    let omega = nearfield::units::energy_from_wavelength(2600.0);
    let mut traj = ptr::null_mut();
    let s = unsafe { nf_transport(stack, pos.as_ptr(), n, d.as_ptr(), omega, 0, 3.0, 0.005, &mut traj) };
    assert_eq!(s, NfStatus::Ok, "{}", last_error());
    assert_eq!(unsafe { nf_trajectory_len(traj) }, 601);

    let mut pops = vec![0.0; n];
    let mut t = 0.0;
    assert_eq!(unsafe { nf_trajectory_sample(traj, 0, &mut t, pops.as_mut_ptr()) }, NfStatus::Ok);
    assert_eq!(t, 0.0);
    assert_eq!(pops[0], 1.0);
    assert_eq!(unsafe { nf_trajectory_sample(traj, 601, &mut t, pops.as_mut_ptr()) }, NfStatus::InvalidArgument);

    let mut m = NfTransportMetrics::default();
    assert_eq!(unsafe { nf_trajectory_metrics(traj, &mut m) }, NfStatus::Ok);
    assert!((m.t_peak - 0.8209).abs() < 1e-3, "{m:?}");
    unsafe { nf_trajectory_free(traj) };

    let s = unsafe { nf_transport(stack, pos.as_ptr(), n, d.as_ptr(), omega, 0, 0.2, 0.005, &mut traj) };
    assert_eq!(s, NfStatus::Ok);
    assert_eq!(unsafe { nf_trajectory_metrics(traj, &mut m) }, NfStatus::WindowTooShort);
    unsafe { nf_trajectory_free(traj) };

    let s = unsafe { nf_transport(stack, pos.as_ptr(), n, d.as_ptr(), omega, n, 1.0, 0.1, &mut traj) };
    assert_eq!(s, NfStatus::InvalidArgument);
    unsafe { nf_stack_free(stack) };
}

const C_PROGRAM: &str = r#"
#include <stdio.h>
#include "nearfield.h"

int main(void) {
    NfMaterialDb *db = NULL;
    NfStack *stack = NULL;
    double pos[6] = {0.0, 0.0, 10.0, 200.0, 0.0, 10.0};
    double d[3] = {0.0, 0.0, 1.0};
    double v[4], g[4];
    if (nf_material_db_bundled(&db) != NF_STATUS_OK) return 1;
    if (nf_stack_one_surface(db, "Ag", &stack) != NF_STATUS_OK) return 2;
    if (nf_coupling_matrices(stack, pos, 2, d, 3.6, v, g, NULL) != NF_STATUS_OK) return 3;
    if (nf_stack_one_surface(db, "nope", &stack) != NF_STATUS_NOT_FOUND) return 4;
    printf("%.6f %s\n", g[0], nf_last_error());
    nf_stack_free(stack);
    nf_material_db_free(db);
    return 0;
}
"#;

/// Compiles and links a C client against the generated header and the
/// static library when a C compiler is available.
#[test]
fn header_serves_a_c_client() {
    let crate_dir = Path::new(env!("CARGO_MANIFEST_DIR"));
    let header = crate_dir.join("include/nearfield.h");
    let text = std::fs::read_to_string(&header).unwrap();
    for sym in ["nf_coupling_matrices", "nf_transport", "NF_STATUS_NO_CONVERGENCE", "typedef struct NfStack NfStack"] {
        assert!(text.contains(sym), "{sym} missing from header");
    }
    if Command::new("cc").arg("--version").output().is_err() {
        return;
    }
    let exe_dir = std::env::current_exe().unwrap();
    let profile_dir = exe_dir.parent().unwrap().parent().unwrap();
    let lib = profile_dir.join("libnearfield_ffi.a");
    if !lib.exists() {
        return;
    }
    let work = tempfile::tempdir().unwrap();
    let src = work.path().join("client.c");
    let exe = work.path().join("client");
    std::fs::write(&src, C_PROGRAM).unwrap();
    let out = Command::new("cc")
        .args(["-std=c99", "-Wall", "-Werror", "-I"])
        .arg(crate_dir.join("include"))
        .arg(&src)
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&exe)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let run = Command::new(&exe).output().unwrap();
    assert!(run.status.success(), "client exit {:?}", run.status.code());
    let line = String::from_utf8(run.stdout).unwrap();
    let rate: f64 = line.split_whitespace().next().unwrap().parse().unwrap();
    assert!(rate > 1.0, "{line}");
    assert!(line.contains("nope"), "{line}");
}
