//! Single-excitation dynamics of an atomic chain and transport observables.
//!
//! Starting from one excitation, every collective jump sends the state to the
//! ground state, so the populations follow `dc/dt = K c` with
//! `K = iV − Γ/2` exactly. Times are in `1/γ`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::couplings::CouplingSet;

pub const DEFAULT_T_MAX: f64 = 3.0;
pub const DEFAULT_DT: f64 = 0.005;

#[derive(Debug, Error, PartialEq)]
pub enum DynamicsError {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error(
        "window too short: site {site} population still rising at t = {t_max}; increase t_max"
    )]
    WindowTooShort { site: usize, t_max: f64 },
    #[error("adaptive integrator failed at t = {t}: step size underflow")]
    StepUnderflow { t: f64 },
}

/// `K = iV − Γ/2` acting on single-excitation amplitudes.
#[derive(Debug, Clone, PartialEq)]
pub struct EffectiveHamiltonian {
    pub k: DMatrix<Complex64>,
}

impl EffectiveHamiltonian {
    pub fn from_matrices(v: &DMatrix<f64>, gamma: &DMatrix<f64>) -> Result<Self, DynamicsError> {
        if v.shape() != gamma.shape() || !v.is_square() {
            return Err(DynamicsError::InvalidInput(format!(
                "V is {:?} but Γ is {:?}",
                v.shape(),
                gamma.shape()
            )));
        }
        let k = DMatrix::from_fn(v.nrows(), v.ncols(), |a, b| {
            let exchange = if a == b { 0.0 } else { v[(a, b)] };
            Complex64::new(-0.5 * gamma[(a, b)], exchange)
        });
        Ok(Self { k })
    }

    pub fn dim(&self) -> usize {
        self.k.nrows()
    }
}

/// `K` from a coupling set; the diagonal of `V` is ignored.
pub fn build_effective_hamiltonian(cs: &CouplingSet) -> EffectiveHamiltonian {
    EffectiveHamiltonian::from_matrices(&cs.v, &cs.gamma).expect("coupling matrices share a shape")
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Propagator {
    /// One matrix exponential `exp(K Δt)` applied repeatedly.
    #[default]
    Exponential,
    /// Dormand–Prince 5(4) with local error control.
    Adaptive,
}

/// Amplitudes sampled on a uniform grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    /// `amplitudes[k]` holds `c(t_k)`.
    pub amplitudes: Vec<DVector<Complex64>>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn sites(&self) -> usize {
        self.amplitudes.first().map_or(0, |c| c.len())
    }

    /// `n_α(t_k)` for one site.
    pub fn site_population(&self, site: usize) -> Vec<f64> {
        self.amplitudes.iter().map(|c| c[site].norm_sqr()).collect()
    }

    /// `n(t_k) = Σ_α n_α(t_k)`.
    pub fn total_population(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|c| c.iter().map(|z| z.norm_sqr()).sum()).collect()
    }
}

/// The excitation starting on site 0.
pub fn localized_state(n: usize, site: usize) -> DVector<Complex64> {
    let mut c = DVector::zeros(n);
    c[site] = Complex64::new(1.0, 0.0);
    c
}

const ADAPTIVE_TOL: f64 = 1e-11;

/// Evolves `c0` under `K` up to `t_max`, sampled every `dt`.
pub fn propagate(
    h: &EffectiveHamiltonian,
    c0: &DVector<Complex64>,
    t_max: f64,
    dt: f64,
    method: Propagator,
) -> Result<Trajectory, DynamicsError> {
    if c0.len() != h.dim() {
        return Err(DynamicsError::InvalidInput(format!(
            "initial state has {} sites, K has {}",
            c0.len(),
            h.dim()
        )));
    }
    if c0.norm() > 1.0 + 1e-12 {
        return Err(DynamicsError::InvalidInput(format!("|c0| = {} exceeds 1", c0.norm())));
    }
    if !(dt > 0.0 && dt.is_finite() && t_max >= 0.0 && t_max.is_finite()) {
        return Err(DynamicsError::InvalidInput(format!("need dt > 0 and t_max ≥ 0, got dt = {dt}, t_max = {t_max}")));
    }
    let steps = (t_max / dt + 1e-9).floor() as usize;
    let mut times = Vec::with_capacity(steps + 1);
    let mut amplitudes = Vec::with_capacity(steps + 1);
    times.push(0.0);
    amplitudes.push(c0.clone());
    match method {
        Propagator::Exponential => {
            let step = (&h.k * Complex64::new(dt, 0.0)).exp();
            let mut c = c0.clone();
            for s in 1..=steps {
                c = &step * c;
                times.push(s as f64 * dt);
                amplitudes.push(c.clone());
            }
        }
        Propagator::Adaptive => {
            let mut c = c0.clone();
            let mut t = 0.0;
            let mut trial = dt.min(0.01);
            for s in 1..=steps {
                let target = s as f64 * dt;
                while t < target {
                    let hstep = trial.min(target - t);
                    let (next, err) = dopri_step(&h.k, &c, hstep);
                    let scale = ADAPTIVE_TOL * (1.0 + c.norm());
                    if err <= scale {
                        t += hstep;
                        c = next;
                        if target - t < 1e-14 * target.max(1.0) {
                            t = target;
                        }
                    }
                    let factor = if err == 0.0 { 5.0 } else { 0.9 * (scale / err).powf(0.2) };
                    trial = hstep * factor.clamp(0.2, 5.0);
                    if trial < 1e-14 {
                        return Err(DynamicsError::StepUnderflow { t });
                    }
                }
                times.push(target);
                amplitudes.push(c.clone());
            }
        }
    }
    Ok(Trajectory { times, amplitudes })
}

fn dopri_step(k: &DMatrix<Complex64>, c: &DVector<Complex64>, h: f64) -> (DVector<Complex64>, f64) {
    const A: [[f64; 6]; 6] = [
        [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
        [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
        [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
        [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
        [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
        [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
    ];
    const B4: [f64; 7] = [
        5179.0 / 57600.0,
        0.0,
        7571.0 / 16695.0,
        393.0 / 640.0,
        -92097.0 / 339200.0,
        187.0 / 2100.0,
        1.0 / 40.0,
    ];
    let mut stages: Vec<DVector<Complex64>> = Vec::with_capacity(7);
    stages.push(k * c);
    for row in A.iter() {
        let mut y = c.clone();
        for (j, a) in row.iter().enumerate().take(stages.len()) {
            if *a != 0.0 {
                y.axpy(Complex64::new(h * a, 0.0), &stages[j], Complex64::new(1.0, 0.0));
            }
        }
        stages.push(k * y);
    }
    // The last row of A is the fifth-order solution (FSAL).
    let mut fifth = c.clone();
    for (j, a) in A[5].iter().enumerate() {
        fifth.axpy(Complex64::new(h * a, 0.0), &stages[j], Complex64::new(1.0, 0.0));
    }
    let mut fourth = c.clone();
    for (j, b) in B4.iter().enumerate() {
        fourth.axpy(Complex64::new(h * b, 0.0), &stages[j], Complex64::new(1.0, 0.0));
    }
    let err = (&fifth - &fourth).norm();
    (fifth, err)
}

/// Arrival time and height of the population peak on the last site.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TransportMetrics {
    /// `t_P` in units of `1/γ`.
    pub t_peak: f64,
    /// `n_N(t_P)`.
    pub peak_population: f64,
    /// `n(t_P)`, the fraction of the excitation still in the chain.
    pub remaining: f64,
}

/// Finds the maximum of the last site's population, refined by a parabola
/// through the three samples around the discrete maximum.
pub fn transport_metrics(traj: &Trajectory) -> Result<TransportMetrics, DynamicsError> {
    if traj.len() < 3 || traj.sites() == 0 {
        return Err(DynamicsError::InvalidInput("trajectory needs at least three samples".into()));
    }
    let site = traj.sites() - 1;
    let n_last = traj.site_population(site);
    let total = traj.total_population();
    let (imax, _) = n_last
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |best, (i, &x)| if x > best.1 { (i, x) } else { best });
    let last = traj.len() - 1;
    if imax == last {
        return Err(DynamicsError::WindowTooShort { site, t_max: traj.times[last] });
    }
    if imax == 0 {
        return Ok(TransportMetrics { t_peak: 0.0, peak_population: n_last[0], remaining: total[0] });
    }
    let h = traj.times[imax + 1] - traj.times[imax];
    let (y0, y1, y2) = (n_last[imax - 1], n_last[imax], n_last[imax + 1]);
    let curvature = y0 - 2.0 * y1 + y2;
    let (offset, peak) = if curvature < 0.0 {
        let u = 0.5 * (y0 - y2) / curvature;
        (u * h, y1 - 0.25 * (y0 - y2) * u)
    } else {
        (0.0, y1)
    };
    let t_peak = traj.times[imax] + offset;
    // Remaining population at t_P by the same parabola.
    let (m0, m1, m2) = (total[imax - 1], total[imax], total[imax + 1]);
    let u = offset / h;
    let remaining = m1 + 0.5 * u * (m2 - m0) + 0.5 * u * u * (m0 - 2.0 * m1 + m2);
    Ok(TransportMetrics { t_peak, peak_population: peak, remaining })
}

/// Mean decay rate `−ln(n(t₁)/n(t₀))/(t₁ − t₀)` of the total population,
/// using the grid samples nearest to `t0` and `t1`.
pub fn mean_decay_rate(traj: &Trajectory, t0: f64, t1: f64) -> f64 {
    let nearest = |t: f64| {
        traj.times
            .iter()
            .enumerate()
            .min_by(|a, b| (a.1 - t).abs().total_cmp(&(b.1 - t).abs()))
            .map_or(0, |(i, _)| i)
    };
    let (i0, i1) = (nearest(t0), nearest(t1));
    if i1 <= i0 {
        return f64::NAN;
    }
    let n0: f64 = traj.amplitudes[i0].iter().map(|z| z.norm_sqr()).sum();
    let n1: f64 = traj.amplitudes[i1].iter().map(|z| z.norm_sqr()).sum();
    -(n1 / n0).ln() / (traj.times[i1] - traj.times[i0])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::couplings::{coupling_matrices, AtomArray, DipoleOrientation};
    use crate::greens::{LayerStack, PathParams};
    use crate::units::energy_from_wavelength;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn run(h: &EffectiveHamiltonian, c0: &DVector<Complex64>, t: f64, m: Propagator) -> Trajectory {
        propagate(h, c0, t, DEFAULT_DT, m).unwrap()
    }

    #[test]
    fn single_atom_decays_exponentially() {
        let h = EffectiveHamiltonian::from_matrices(&DMatrix::zeros(1, 1), &DMatrix::from_element(1, 1, 1.0)).unwrap();
        for m in [Propagator::Exponential, Propagator::Adaptive] {
            let traj = run(&h, &localized_state(1, 0), 1.0, m);
            let n = traj.total_population();
            assert_eq!(traj.times.len(), 201);
            assert!((traj.times[200] - 1.0).abs() < 1e-12);
            assert!((n[200] - (-1.0f64).exp()).abs() < 1e-9, "{m:?}: {}", n[200]);
        }
    }

    #[test]
    fn pair_super_and_subradiant_states() {
        let (g11, g12, v12) = (1.0, 0.6, 0.35);
        let v = DMatrix::from_row_slice(2, 2, &[0.0, v12, v12, 0.0]);
        let g = DMatrix::from_row_slice(2, 2, &[g11, g12, g12, g11]);
        let h = EffectiveHamiltonian::from_matrices(&v, &g).unwrap();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        for (sign, rate) in [(1.0, g11 + g12), (-1.0, g11 - g12)] {
            let c0 = DVector::from_vec(vec![c(s, 0.0), c(sign * s, 0.0)]);
            let traj = run(&h, &c0, 2.0, Propagator::Exponential);
            for (t, n) in traj.times.iter().zip(traj.total_population()) {
                assert!((n - (-rate * t).exp()).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn decay_rate_of_a_single_atom() {
        let h = EffectiveHamiltonian::from_matrices(&DMatrix::zeros(1, 1), &DMatrix::from_element(1, 1, 0.4)).unwrap();
        let traj = run(&h, &localized_state(1, 0), 1.0, Propagator::Exponential);
        assert!((mean_decay_rate(&traj, 0.2, 0.9) - 0.4).abs() < 1e-12);
        assert!(mean_decay_rate(&traj, 0.5, 0.5).is_nan());
    }

    #[test]
    fn zero_generator_freezes_the_state() {
        let h = EffectiveHamiltonian::from_matrices(&DMatrix::zeros(3, 3), &DMatrix::zeros(3, 3)).unwrap();
        let c0 = DVector::from_vec(vec![c(0.6, 0.0), c(0.0, 0.48), c(-0.1, 0.2)]);
        let traj = run(&h, &c0, 1.0, Propagator::Exponential);
        assert!(traj.amplitudes.iter().all(|a| *a == c0));
    }

    #[test]
    fn independent_decay_without_exchange() {
        let h = EffectiveHamiltonian::from_matrices(&DMatrix::zeros(4, 4), &DMatrix::identity(4, 4)).unwrap();
        let traj = run(&h, &localized_state(4, 0), 1.0, Propagator::Exponential);
        for site in 1..4 {
            assert!(traj.site_population(site).iter().all(|&n| n == 0.0));
        }
    }

    #[test]
    fn bad_inputs_are_rejected() {
        let h = EffectiveHamiltonian::from_matrices(&DMatrix::zeros(2, 2), &DMatrix::identity(2, 2)).unwrap();
        let big = DVector::from_vec(vec![c(1.0, 0.0), c(1.0, 0.0)]);
        assert!(propagate(&h, &big, 1.0, 0.01, Propagator::Exponential).is_err());
        assert!(propagate(&h, &localized_state(3, 0), 1.0, 0.01, Propagator::Exponential).is_err());
        assert!(propagate(&h, &localized_state(2, 0), 1.0, 0.0, Propagator::Exponential).is_err());
        assert!(EffectiveHamiltonian::from_matrices(&DMatrix::zeros(2, 2), &DMatrix::zeros(3, 3)).is_err());
    }

    fn vacuum_chain(o: DipoleOrientation) -> EffectiveHamiltonian {
        let array = AtomArray::chain(20, 206.4, 0.0, o.unit_vector(), energy_from_wavelength(2600.0)).unwrap();
        let cs = coupling_matrices(&array, &LayerStack::Vacuum, &PathParams::default()).unwrap();
        build_effective_hamiltonian(&cs)
    }

    #[test]
    fn both_propagators_agree_on_a_chain() {
        let h = vacuum_chain(DipoleOrientation::AlignedWithAxis);
        let c0 = localized_state(20, 0);
        let a = run(&h, &c0, 1.5, Propagator::Exponential);
        let b = run(&h, &c0, 1.5, Propagator::Adaptive);
        for (x, y) in a.amplitudes.iter().zip(&b.amplitudes) {
            assert!((x - y).norm() < 1e-9);
        }
    }

    #[test]
    fn peak_detection_and_short_window() {
        let h = vacuum_chain(DipoleOrientation::AlignedWithAxis);
        let traj = run(&h, &localized_state(20, 0), DEFAULT_T_MAX, Propagator::Exponential);
        let m = transport_metrics(&traj).unwrap();
        assert!(m.t_peak > 0.5 && m.t_peak < 1.2, "{m:?}");
        assert!(m.remaining > m.peak_population && m.remaining < 1.0);
        let short = run(&h, &localized_state(20, 0), 0.3, Propagator::Exponential);
        assert!(matches!(transport_metrics(&short), Err(DynamicsError::WindowTooShort { .. })));
    }

    #[test]
    fn parabolic_refinement_recovers_a_vertex() {
        // n_N(t) = 1 − (t − 0.4137)² sampled on a coarse grid.
        let times: Vec<f64> = (0..11).map(|i| i as f64 * 0.1).collect();
        let amplitudes = times
            .iter()
            .map(|t| {
                let n: f64 = 0.5 - (t - 0.4137f64).powi(2);
                DVector::from_vec(vec![c(0.0, 0.0), c(n.max(0.0).sqrt(), 0.0)])
            })
            .collect();
        let m = transport_metrics(&Trajectory { times, amplitudes }).unwrap();
        assert!((m.t_peak - 0.4137).abs() < 1e-12);
        assert!((m.peak_population - 0.5).abs() < 1e-12);
    }

    // --- Full master-equation oracle -------------------------------------

    /// Lindblad generator on the 2^N-dimensional space, column-stacked
    /// density matrix, basis bit α set = atom α excited.
    fn liouvillian(v: &DMatrix<f64>, g: &DMatrix<f64>) -> DMatrix<Complex64> {
        let n = v.nrows();
        let dim = 1 << n;
        let lower = |a: usize| {
            DMatrix::from_fn(dim, dim, |row, col| {
                if col & (1 << a) != 0 && row == col ^ (1 << a) {
                    c(1.0, 0.0)
                } else {
                    c(0.0, 0.0)
                }
            })
        };
        let sig: Vec<DMatrix<Complex64>> = (0..n).map(lower).collect();
        let mut ham = DMatrix::zeros(dim, dim);
        for a in 0..n {
            for b in 0..n {
                if a != b {
                    ham -= sig[a].adjoint() * &sig[b] * c(v[(a, b)], 0.0);
                }
            }
        }
        let eye = DMatrix::<Complex64>::identity(dim, dim);
        // vec(A ρ B) = (Bᵀ ⊗ A) vec(ρ)
        let sandwich = |a: &DMatrix<Complex64>, b: &DMatrix<Complex64>| b.transpose().kronecker(a);
        let i = c(0.0, 1.0);
        let mut l = (sandwich(&ham, &eye) - sandwich(&eye, &ham)) * (-i);
        for a in 0..n {
            for b in 0..n {
                let rate = c(g[(a, b)], 0.0);
                let jump = sandwich(&sig[a], &sig[b].adjoint());
                let ab = sig[a].adjoint() * &sig[b];
                let anti = sandwich(&ab, &eye) + sandwich(&eye, &ab);
                l += (jump - anti * c(0.5, 0.0)) * rate;
            }
        }
        l
    }

    fn oracle_populations(v: &DMatrix<f64>, g: &DMatrix<f64>, times: &[f64]) -> Vec<Vec<f64>> {
        let n = v.nrows();
        let dim = 1 << n;
        let l = liouvillian(v, g);
        let mut rho = DVector::<Complex64>::zeros(dim * dim);
        let start = 1; // atom 0 excited
        rho[start * dim + start] = c(1.0, 0.0);
        times
            .iter()
            .map(|&t| {
                let r = (&l * c(t, 0.0)).exp() * &rho;
                (0..n)
                    .map(|a| {
                        (0..dim)
                            .filter(|s| s & (1 << a) != 0)
                            .map(|s| r[s * dim + s].re)
                            .sum()
                    })
                    .collect()
            })
            .collect()
    }

    #[test]
    fn sector_dynamics_match_full_master_equation() {
        let lambda = 1000.0;
        for n in 1..=3 {
            let array = AtomArray::new(
                (0..n).map(|i| nalgebra::Vector3::new(130.0 * i as f64, 40.0 * (i * i) as f64, 0.0)).collect(),
                nalgebra::Vector3::new(0.2, 0.5, 0.8).normalize(),
                energy_from_wavelength(lambda),
            )
            .unwrap();
            let cs = coupling_matrices(&array, &LayerStack::Vacuum, &PathParams::default()).unwrap();
            let h = build_effective_hamiltonian(&cs);
            let traj = propagate(&h, &localized_state(n, 0), 2.0, 0.25, Propagator::Exponential).unwrap();
            let exact = oracle_populations(&cs.v, &cs.gamma, &traj.times);
            for (k, row) in exact.iter().enumerate() {
                for (a, &p) in row.iter().enumerate() {
                    let got = traj.amplitudes[k][a].norm_sqr();
                    assert!((got - p).abs() < 1e-7, "N={n} t={} site {a}: {got} vs {p}", traj.times[k]);
                }
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn population_never_increases(
            n in 2usize..6,
            spacing in 20.0..400.0f64,
            lambda in 300.0..3000.0f64,
            orient in 0usize..3,
        ) {
            let o = DipoleOrientation::ALL[orient];
            let array = AtomArray::chain(n, spacing, 0.0, o.unit_vector(), energy_from_wavelength(lambda)).unwrap();
            let cs = coupling_matrices(&array, &LayerStack::Vacuum, &PathParams::default()).unwrap();
            let traj = propagate(&build_effective_hamiltonian(&cs), &localized_state(n, 0), 2.0, 0.01, Propagator::Exponential).unwrap();
            let tot = traj.total_population();
            for w in tot.windows(2) {
                prop_assert!(w[1] <= w[0] + 1e-10);
            }
            prop_assert!((tot[0] - 1.0).abs() < 1e-15);
        }
    }
}
