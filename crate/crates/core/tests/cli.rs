use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use nearfield::cli::stable_lines;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_nearfield"))
}

fn configs_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs")
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

const SMALL_CUT: &str = r#"
task = "coupling-cut"
materials = ["Ag"]
z_nm = 10.0
[atoms]
spacing_nm = 200.0
orientations = ["perpendicular-to-surface", "aligned-with-axis"]
[frequency]
omega_over_plasma = { start = 0.1, stop = 0.7, steps = 7 }
"#;

#[test]
fn every_bundled_config_validates() {
    let mut n = 0;
    for entry in std::fs::read_dir(configs_dir()).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "toml") {
            let o = run(&["validate", path.to_str().unwrap()]);
            assert!(o.status.success(), "{}: {}", path.display(), stdout(&o));
            assert_eq!(stdout(&o).trim(), "ok", "{}", path.display());
            n += 1;
        }
    }
    assert!(n >= 10);
}

#[test]
fn repeated_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cut.toml");
    std::fs::write(&cfg, SMALL_CUT).unwrap();
    let mut bodies = Vec::new();
    for (i, threads) in ["1", "3"].iter().enumerate() {
        let out = dir.path().join(format!("out{i}"));
        let o = run(&[
            "--threads",
            threads,
            "--output-dir",
            out.to_str().unwrap(),
            "--json",
            "run",
            cfg.to_str().unwrap(),
        ]);
        assert!(o.status.success(), "{}", stderr(&o));
        assert!(out.join("cut.json").exists());
        bodies.push(std::fs::read_to_string(out.join("cut.csv")).unwrap());
    }
    assert_eq!(stable_lines(&bodies[0]), stable_lines(&bodies[1]));
    let data: Vec<&str> = bodies[0].lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(data.len(), 1 + 2 * 7);
    assert!(data[0].starts_with("material,surfaces,z_nm,gap_nm,orientation,spacing_nm"));
    assert!(bodies[0].contains("# task: coupling-cut"));
    assert!(bodies[0].contains("# units: "));
}

#[test]
fn tolerance_flag_is_recorded() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cut.toml");
    std::fs::write(&cfg, SMALL_CUT).unwrap();
    let o = run(&["--tolerance", "1e-6", "--output-dir", dir.path().to_str().unwrap(), "run", cfg.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = std::fs::read_to_string(dir.path().join("cut.csv")).unwrap();
    assert!(csv.contains("rel_tol=0.000001"), "{csv}");

    let o = run(&["--tolerance", "2", "run", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn schema_violations_exit_2_with_every_diagnostic() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    std::fs::write(
        &cfg,
        r#"
task = "transport"
materials = ["Unobtainium"]
z_nm = 10.0
[atoms]
count = 0
spacing_nm = 100.0
orientations = ["aligned-with-axis"]
[frequency]
wavelength_nm = 2600.0
"#,
    )
    .unwrap();
    let o = run(&["validate", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let text = stdout(&o);
    assert!(text.contains("chain length must be ≥ 1"), "{text}");
    assert!(text.contains("Unobtainium"), "{text}");

    let out = dir.path().join("never");
    let o = run(&["--output-dir", out.to_str().unwrap(), "run", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!out.exists());
}

#[test]
fn nonconvergence_exits_3_and_keeps_partial_results() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("starved.toml");
    std::fs::write(
        &cfg,
        r#"
task = "single-rate"
materials = ["PEC"]
z_nm = [5.0, 50.0]
[atoms]
orientations = ["perpendicular-to-surface"]
[frequency]
omega_eV = 2.0
[quadrature]
max_evals = 1000
rel_tol = 1e-14
"#,
    )
    .unwrap();
    let o = run(&["--output-dir", dir.path().to_str().unwrap(), "run", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    let csv = std::fs::read_to_string(dir.path().join("starved.csv")).unwrap();
    let rows: Vec<&str> = csv.lines().filter(|l| !l.starts_with('#')).skip(1).collect();
    assert_eq!(rows.len(), 2);
    assert!(rows.iter().any(|r| r.contains("failed: ")), "{csv}");
}

#[test]
fn io_failures_exit_4() {
    let o = run(&["validate", "/nonexistent/scenario.toml"]);
    assert_eq!(o.status.code(), Some(4));

    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cut.toml");
    std::fs::write(&cfg, SMALL_CUT).unwrap();
    let blocker = dir.path().join("file");
    std::fs::write(&blocker, "").unwrap();
    let out = blocker.join("sub");
    let o = run(&["--output-dir", out.to_str().unwrap(), "run", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(4), "{}", stderr(&o));
}

#[test]
fn list_materials_shows_the_bundled_database() {
    let o = run(&["list-materials"]);
    assert!(o.status.success());
    let text = stdout(&o);
    for name in ["Ag", "Au", "Ti", "SiO2", "GaAs", "PEC", "vacuum"] {
        assert!(text.lines().any(|l| l.starts_with(&format!("{name}\t"))), "{name} missing:\n{text}");
    }
    assert!(text.contains("plasma=9.01 eV"));
}
