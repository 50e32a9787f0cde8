//! Executes validated scenarios and writes their tables.

use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use nalgebra::Vector3;
use rayon::prelude::*;

use super::config::{validate_config, Case, ConfigError, Plan, Task};
use super::table::{Cell, ResultTable, TIMESTAMP_KEY};
use crate::couplings::{coupling_matrices, surface_shift, AtomArray, CouplingError};
use crate::dynamics::{
    build_effective_hamiltonian, localized_state, mean_decay_rate, propagate, transport_metrics,
};
use crate::greens::{vacuum_coupling, GreensError};
use crate::materials::Permittivity;
use crate::units::wavelength;

/// Command-line overrides applied on top of a scenario.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub output_dir: PathBuf,
    pub json: bool,
    /// Replaces `quadrature.rel_tol`.
    pub tolerance: Option<f64>,
}

#[derive(Debug)]
pub struct RunReport {
    pub written: Vec<PathBuf>,
    pub rows: usize,
    /// Rows marked failed.
    pub failed: usize,
}

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("cannot write {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{failed} of {rows} rows failed; partial results written to {}", .written.iter().map(|p| p.display().to_string()).collect::<Vec<_>>().join(", "))]
    Incomplete { written: Vec<PathBuf>, rows: usize, failed: usize },
}

impl RunError {
    /// Process exit code: 2 configuration, 3 computation, 4 I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(ConfigError::Io { .. }) => 4,
            RunError::Config(_) => 2,
            RunError::Incomplete { .. } => 3,
            RunError::Io { .. } => 4,
        }
    }
}

/// Validates, runs and writes one scenario file.
pub fn run_scenario(config: &Path, opts: &RunOptions) -> Result<RunReport, RunError> {
    let mut plan = validate_config(config)?;
    if let Some(tol) = opts.tolerance {
        plan.params.rel_tol = tol;
        plan.params.validate().map_err(|e| ConfigError::Invalid(vec![format!("--tolerance: {e}")]))?;
    }
    let tables = run_plan(&plan);
    let failed = tables.iter().map(count_failed).sum();
    let rows = tables.iter().map(|t| t.rows.len()).sum();
    std::fs::create_dir_all(&opts.output_dir)
        .map_err(|source| RunError::Io { path: opts.output_dir.clone(), source })?;
    let mut written = Vec::new();
    for t in &tables {
        let path = opts.output_dir.join(format!("{}.csv", t.name));
        t.write_csv(&path).map_err(|source| RunError::Io { path: path.clone(), source })?;
        written.push(path);
        if opts.json {
            let path = opts.output_dir.join(format!("{}.json", t.name));
            t.write_json(&path).map_err(|source| RunError::Io { path: path.clone(), source })?;
            written.push(path);
        }
    }
    if failed > 0 {
        return Err(RunError::Incomplete { written, rows, failed });
    }
    Ok(RunReport { written, rows, failed })
}

fn count_failed(t: &ResultTable) -> usize {
    let Some(i) = t.column_index("status") else { return 0 };
    t.rows
        .iter()
        .filter(|r| matches!(&r[i], Cell::Text(s) if s.starts_with("failed")))
        .count()
}

fn metadata(plan: &Plan) -> Vec<(String, String)> {
    let p = &plan.params;
    let stamp = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs());
    vec![
        ("nearfield".into(), env!("CARGO_PKG_VERSION").into()),
        ("task".into(), plan.task.tag().into()),
        ("materials_data_version".into(), plan.db.data_version().unwrap_or("unversioned").into()),
        (
            "quadrature".into(),
            format!(
                "rel_tol={} abs_tol={} max_evals={} ellipse_half_width={} ellipse_height={}",
                p.rel_tol, p.abs_tol, p.max_evals, p.ellipse_half_width, p.ellipse_height
            ),
        ),
        (TIMESTAMP_KEY.into(), stamp.to_string()),
        ("scenario".into(), plan.source_text.trim_end().into()),
    ]
}

/// Runs every point of `plan`; failed points become rows with a failure
/// status instead of aborting the sweep.
pub fn run_plan(plan: &Plan) -> Vec<ResultTable> {
    let mut tables = match plan.task {
        Task::Epsilon => vec![epsilon_table(plan)],
        Task::SingleRate => vec![rate_table(plan)],
        Task::CouplingMap | Task::CouplingCut => vec![coupling_table(plan)],
        Task::Shift => vec![shift_table(plan)],
        Task::Modes => vec![modes_table(plan)],
        Task::Transport => transport_tables(plan),
    };
    let meta = metadata(plan);
    for t in &mut tables {
        t.metadata = meta.clone();
    }
    tables
}

fn failure(e: &dyn std::fmt::Display) -> Cell {
    Cell::Text(format!("failed: {}", e.to_string().replace('\n', " ")))
}

fn ratio(plan: &Plan, omega: f64) -> Cell {
    plan.plasma_energy.map_or(Cell::Num(f64::NAN), |p| Cell::Num(omega / p))
}

fn case_cells(c: &Case) -> Vec<Cell> {
    vec![
        c.material.as_str().into(),
        c.surfaces.tag().into(),
        c.z.into(),
        c.gap.into(),
        c.orientation.tag().into(),
    ]
}

const CASE_COLUMNS: [(&str, &str); 5] =
    [("material", ""), ("surfaces", ""), ("z_nm", "nm"), ("gap_nm", "nm"), ("orientation", "")];

fn with_case(extra: &[(&'static str, &'static str)]) -> Vec<(&'static str, &'static str)> {
    CASE_COLUMNS.iter().chain(extra).copied().collect()
}

fn epsilon_table(plan: &Plan) -> ResultTable {
    let mut t = ResultTable::new(
        &plan.name,
        &[
            ("material", ""),
            ("omega_eV", "eV"),
            ("omega_over_plasma", ""),
            ("eps_re", ""),
            ("eps_im", ""),
            ("status", ""),
        ],
    );
    for m in &plan.materials {
        for &w in &plan.omegas {
            let (re, im, status) = match m.permittivity(w) {
                Ok(Permittivity::Finite(e)) => (e.re, e.im, Cell::from("ok")),
                Ok(Permittivity::PerfectConductor) => (f64::NAN, f64::NAN, Cell::from("perfect-conductor")),
                Err(e) => (f64::NAN, f64::NAN, failure(&e)),
            };
            t.push(vec![m.name.as_str().into(), w.into(), ratio(plan, w), re.into(), im.into(), status]);
        }
    }
    t
}

fn rate_table(plan: &Plan) -> ResultTable {
    let mut t = ResultTable::new(
        &plan.name,
        &with_case(&[
            ("omega_eV", "eV"),
            ("omega_over_plasma", ""),
            ("rate_over_gamma", ""),
            ("quad_error", ""),
            ("status", ""),
        ]),
    );
    let points: Vec<(&Case, f64)> =
        plan.cases.iter().flat_map(|c| plan.omegas.iter().map(move |&w| (c, w))).collect();
    let rows: Vec<Vec<Cell>> = points
        .par_iter()
        .map(|&(c, w)| {
            let result = AtomArray::new(vec![Vector3::new(0.0, 0.0, c.z)], c.orientation.unit_vector(), w)
                .and_then(|a| coupling_matrices(&a, &c.stack, &plan.params));
            let mut row = case_cells(c);
            row.extend([w.into(), ratio(plan, w)]);
            match result {
                Ok(cs) => row.extend([cs.gamma[(0, 0)].into(), cs.max_error.into(), "ok".into()]),
                Err(e) => row.extend([f64::NAN.into(), f64::NAN.into(), failure(&e)]),
            }
            row
        })
        .collect();
    for r in rows {
        t.push(r);
    }
    t
}

fn coupling_table(plan: &Plan) -> ResultTable {
    let mut t = ResultTable::new(
        &plan.name,
        &with_case(&[
            ("spacing_nm", "nm"),
            ("omega_eV", "eV"),
            ("omega_over_plasma", ""),
            ("V_over_gamma", ""),
            ("V0_over_gamma", ""),
            ("dV_over_gamma", ""),
            ("Gamma11_over_gamma", ""),
            ("Gamma12_over_gamma", ""),
            ("Gamma0_12_over_gamma", ""),
            ("V_over_Gamma11", ""),
            ("Gamma12_over_Gamma11", ""),
            ("quad_error", ""),
            ("status", ""),
        ]),
    );
    let points: Vec<(&Case, f64, f64)> = plan
        .cases
        .iter()
        .flat_map(|c| {
            plan.spacings
                .iter()
                .flat_map(move |&a| plan.omegas.iter().map(move |&w| (c, a, w)))
        })
        .collect();
    let rows: Vec<Vec<Cell>> = points
        .par_iter()
        .map(|&(c, a, w)| {
            let d = c.orientation.unit_vector();
            let sep = Vector3::new(a, 0.0, 0.0);
            let result = AtomArray::chain(2, a, c.z, d, w)
                .and_then(|arr| coupling_matrices(&arr, &c.stack, &plan.params))
                .and_then(|cs| {
                    let (v0, g0) = vacuum_coupling(&sep, &d, wavelength(w)).map_err(|source| {
                        CouplingError::Greens { alpha: 0, beta: 1, omega: w, source }
                    })?;
                    Ok((cs, v0, g0))
                });
            let mut row = case_cells(c);
            row.extend([a.into(), w.into(), ratio(plan, w)]);
            match result {
                Ok((cs, v0, g0)) => {
                    let (v, g11, g12) = (cs.v[(0, 1)], cs.gamma[(0, 0)], cs.gamma[(0, 1)]);
                    row.extend([
                        v.into(),
                        v0.into(),
                        (v - v0).into(),
                        g11.into(),
                        g12.into(),
                        g0.into(),
                        (v / g11).into(),
                        (g12 / g11).into(),
                        cs.max_error.into(),
                        "ok".into(),
                    ]);
                }
                Err(e) => {
                    row.extend(std::iter::repeat_n(Cell::Num(f64::NAN), 9));
                    row.push(failure(&e));
                }
            }
            row
        })
        .collect();
    for r in rows {
        t.push(r);
    }
    t
}

fn shift_table(plan: &Plan) -> ResultTable {
    let mut t = ResultTable::new(
        &plan.name,
        &with_case(&[
            ("omega_eV", "eV"),
            ("omega_shifted_eV", "eV"),
            ("delta_eV", "eV"),
            ("delta_over_omega", ""),
            ("delta_over_gamma", ""),
            ("iterations", ""),
            ("converged", ""),
            ("status", ""),
        ]),
    );
    let hbar_gamma = plan.hbar_gamma.expect("validated shift plan carries ħγ");
    let points: Vec<(&Case, f64)> =
        plan.cases.iter().flat_map(|c| plan.omegas.iter().map(move |&w| (c, w))).collect();
    let rows: Vec<Vec<Cell>> = points
        .par_iter()
        .map(|&(c, w)| {
            let pos = Vector3::new(0.0, 0.0, c.z);
            let d = c.orientation.unit_vector();
            let mut row = case_cells(c);
            row.push(w.into());
            match surface_shift(&c.stack, &pos, &d, w, hbar_gamma, &plan.params) {
                Ok(s) => row.extend([
                    s.omega_shifted.into(),
                    s.shift.into(),
                    (s.shift / w).into(),
                    s.shift_over_gamma.into(),
                    s.iterations.into(),
                    Cell::Int(s.converged as i64),
                    "ok".into(),
                ]),
                Err(e) => {
                    row.extend(std::iter::repeat_n(Cell::Num(f64::NAN), 4));
                    row.extend([Cell::Int(0), Cell::Int(0), failure(&e)]);
                }
            }
            row
        })
        .collect();
    for r in rows {
        t.push(r);
    }
    t
}

fn modes_table(plan: &Plan) -> ResultTable {
    let mut t = ResultTable::new(
        &plan.name,
        &with_case(&[
            ("spacing_nm", "nm"),
            ("omega_eV", "eV"),
            ("count", ""),
            ("mode", ""),
            ("rate_over_gamma", ""),
            ("status", ""),
        ]),
    );
    let points: Vec<(&Case, f64, f64)> = plan
        .cases
        .iter()
        .flat_map(|c| {
            plan.spacings
                .iter()
                .flat_map(move |&a| plan.omegas.iter().map(move |&w| (c, a, w)))
        })
        .collect();
    let blocks: Vec<Vec<Vec<Cell>>> = points
        .par_iter()
        .map(|&(c, a, w)| {
            let prefix = |mode: usize| {
                let mut row = case_cells(c);
                row.extend([a.into(), w.into(), plan.count.into(), mode.into()]);
                row
            };
            match AtomArray::chain(plan.count, a, c.z, c.orientation.unit_vector(), w)
                .and_then(|arr| coupling_matrices(&arr, &c.stack, &plan.params))
            {
                Ok(cs) => cs
                    .modes
                    .rates
                    .iter()
                    .enumerate()
                    .map(|(m, &r)| {
                        let mut row = prefix(m);
                        row.extend([r.into(), "ok".into()]);
                        row
                    })
                    .collect(),
                Err(e) => {
                    let mut row = prefix(0);
                    row.extend([f64::NAN.into(), failure(&e)]);
                    vec![row]
                }
            }
        })
        .collect();
    for r in blocks.into_iter().flatten() {
        t.push(r);
    }
    t
}

/// Time window of the initial drop used for the plateau indicator.
const INITIAL_WINDOW: f64 = 0.05;

fn transport_tables(plan: &Plan) -> Vec<ResultTable> {
    let mut metrics = ResultTable::new(
        format!("{}_metrics", plan.name),
        &[
            &[("case", "")][..],
            &with_case(&[
                ("spacing_nm", "nm"),
                ("omega_eV", "eV"),
                ("count", ""),
                ("t_peak", "1/gamma"),
                ("peak_population", ""),
                ("remaining_at_peak", ""),
                ("initial_decay_rate", "gamma"),
                ("plateau_decay_rate", "gamma"),
                ("status", ""),
            ]),
        ]
        .concat(),
    );
    let n = plan.count;
    let site_names: Vec<String> = (1..=n).map(|i| format!("n_{i}")).collect();
    let mut columns: Vec<(&str, &str)> = vec![("case", ""), ("t", "1/gamma"), ("n_total", "")];
    columns.extend(site_names.iter().map(|s| (s.as_str(), "")));
    let mut traj_table = ResultTable::new(format!("{}_trajectory", plan.name), &columns);

    let points: Vec<(usize, &Case, f64, f64)> = plan
        .cases
        .iter()
        .flat_map(|c| {
            plan.spacings
                .iter()
                .flat_map(move |&a| plan.omegas.iter().map(move |&w| (c, a, w)))
        })
        .enumerate()
        .map(|(i, (c, a, w))| (i, c, a, w))
        .collect();
    let spec = &plan.transport;
    let results: Vec<_> = points
        .par_iter()
        .map(|&(id, c, a, w)| {
            let traj = AtomArray::chain(n, a, c.z, c.orientation.unit_vector(), w)
                .and_then(|arr| coupling_matrices(&arr, &c.stack, &plan.params))
                .map_err(|e| e.to_string())
                .and_then(|cs| {
                    let h = build_effective_hamiltonian(&cs);
                    propagate(&h, &localized_state(n, 0), spec.t_max, spec.dt, spec.propagator)
                        .map_err(|e| e.to_string())
                });
            (id, c, a, w, traj)
        })
        .collect();
    for (id, c, a, w, traj) in results {
        let mut row: Vec<Cell> = vec![id.into()];
        row.extend(case_cells(c));
        row.extend([a.into(), w.into(), n.into()]);
        match &traj {
            Ok(tr) => {
                let initial = mean_decay_rate(tr, 0.0, INITIAL_WINDOW);
                match transport_metrics(tr) {
                    Ok(m) => {
                        let plateau = mean_decay_rate(tr, 0.5 * m.t_peak, m.t_peak);
                        row.extend([
                            m.t_peak.into(),
                            m.peak_population.into(),
                            m.remaining.into(),
                            initial.into(),
                            plateau.into(),
                            "ok".into(),
                        ]);
                    }
                    Err(e) => {
                        row.extend(std::iter::repeat_n(Cell::Num(f64::NAN), 3));
                        row.extend([initial.into(), f64::NAN.into(), failure(&e)]);
                    }
                }
                for (k, &time) in tr.times.iter().enumerate() {
                    let pops: Vec<f64> = tr.amplitudes[k].iter().map(|z| z.norm_sqr()).collect();
                    let mut r: Vec<Cell> = vec![id.into(), time.into(), pops.iter().sum::<f64>().into()];
                    r.extend(pops.into_iter().map(Cell::Num));
                    traj_table.push(r);
                }
            }
            Err(e) => {
                row.extend(std::iter::repeat_n(Cell::Num(f64::NAN), 5));
                row.push(failure(e));
            }
        }
        metrics.push(row);
    }
    vec![metrics, traj_table]
}

/// Whether an error chain bottoms out in quadrature non-convergence.
pub fn is_convergence_failure(e: &CouplingError) -> bool {
    matches!(e, CouplingError::Greens { source: GreensError::Convergence { .. }, .. })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cli::config::plan_from_str;
    use crate::cli::table::stable_lines;

    fn plan(text: &str) -> Plan {
        plan_from_str(text, Path::new("."), "t").unwrap()
    }

    #[test]
    fn epsilon_rows_follow_the_model() {
        let p = plan(
            r#"
task = "epsilon"
materials = ["Ag", "PEC"]
[frequency]
omega_eV = [1.0, 2.0]
"#,
        );
        let t = &run_plan(&p)[0];
        assert_eq!(t.rows.len(), 4);
        let eps = p.db.get("Ag").unwrap().permittivity(2.0).unwrap().finite().unwrap();
        assert_eq!(t.rows[1][3], Cell::Num(eps.re));
        assert_eq!(t.rows[2][5], Cell::Text("perfect-conductor".into()));
        assert_eq!(count_failed(t), 0);
    }

    #[test]
    fn coupling_rows_in_vacuum_match_closed_forms() {
        let p = plan(
            r#"
task = "coupling-cut"
surfaces = ["none"]
z_nm = 10.0
[atoms]
spacing_nm = 200.0
orientations = ["parallel-perp-axis"]
[frequency]
omega_eV = { start = 1.0, stop = 3.0, steps = 3 }
"#,
        );
        let t = &run_plan(&p)[0];
        let v = t.column_index("V_over_gamma").unwrap();
        let v0 = t.column_index("V0_over_gamma").unwrap();
        for r in &t.rows {
            let (Cell::Num(a), Cell::Num(b)) = (&r[v], &r[v0]) else { panic!() };
            assert!((a - b).abs() < 1e-9 * b.abs().max(1.0));
        }
    }

    #[test]
    fn failures_are_rows_not_aborts() {
        let mut p = plan(
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
        );
        p.params.max_evals = 1000;
        let t = &run_plan(&p)[0];
        assert_eq!(t.rows.len(), 2);
        assert!(count_failed(t) >= 1);
        let status = t.column_index("status").unwrap();
        assert!(matches!(&t.rows[0][status], Cell::Text(s) if s.contains("did not converge")));
    }

    #[test]
    fn runs_are_reproducible() {
        let text = r#"
task = "transport"
surfaces = ["none", "one"]
materials = ["PEC"]
z_nm = 100.0
[atoms]
count = 4
spacing_nm = 150.0
orientations = ["aligned-with-axis"]
[frequency]
wavelength_nm = 1000.0
[transport]
t_max = 4.0
dt = 0.01
"#;
        let a: Vec<String> = run_plan(&plan(text)).iter().map(|t| t.to_csv()).collect();
        let b: Vec<String> = run_plan(&plan(text)).iter().map(|t| t.to_csv()).collect();
        assert_eq!(a.len(), 2);
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(stable_lines(x), stable_lines(y));
        }
    }
}
