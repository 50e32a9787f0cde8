//! Scattering Green tensor of a vacuum gap between planar media.

use nalgebra::{Matrix3, Vector3};
use num_complex::Complex64;
use std::f64::consts::PI;

use super::bessel::bessel_j012;
use super::fresnel::{reflection_pair, sqrt_upper};
use super::quadrature::{sommerfeld_integrate, Contour, PathParams};
use super::{GreensError, Tensor3C};
use crate::materials::{Material, Permittivity};
use crate::units::wavenumber;

/// Largest ellipse right end, in units of `k`.
const MAX_RIGHT: f64 = 50.0;

/// Geometry of the region the atoms live in. Positions are measured from the
/// lower interface at `z = 0`; atoms must sit in the vacuum region.
#[derive(Debug, Clone)]
pub enum LayerStack {
    /// No interfaces at all; the scattering tensor vanishes.
    Vacuum,
    /// Half space `z < 0` filled by `lower`.
    OneSurface { lower: Material },
    /// `lower` fills `z < 0`, `upper` fills `z > gap` (nm).
    TwoSurfaces { lower: Material, upper: Material, gap: f64 },
}

impl LayerStack {
    pub fn one_surface(lower: Material) -> Self {
        Self::OneSurface { lower }
    }

    pub fn two_surfaces(lower: Material, upper: Material, gap: f64) -> Self {
        Self::TwoSurfaces { lower, upper, gap }
    }

    /// Checks that `z` (nm) lies strictly inside the vacuum region.
    pub fn check_height(&self, z: f64) -> Result<(), GreensError> {
        if !z.is_finite() {
            return Err(GreensError::Domain(format!("non-finite height {z}")));
        }
        match self {
            LayerStack::Vacuum => Ok(()),
            LayerStack::OneSurface { .. } if z > 0.0 => Ok(()),
            LayerStack::OneSurface { .. } => Err(GreensError::Domain(format!(
                "height {z} nm is not above the surface (z > 0 required)"
            ))),
            LayerStack::TwoSurfaces { gap, .. } if z > 0.0 && z < *gap => Ok(()),
            LayerStack::TwoSurfaces { gap, .. } => Err(GreensError::Domain(format!(
                "height {z} nm is outside the gap (0, {gap}) nm"
            ))),
        }
    }

    fn validate(&self) -> Result<(), GreensError> {
        if let LayerStack::TwoSurfaces { gap, .. } = self {
            if !(*gap > 0.0 && gap.is_finite()) {
                return Err(GreensError::Domain(format!("gap must be > 0, got {gap} nm")));
            }
        }
        Ok(())
    }
}

/// Scattering tensor with its quadrature diagnostics.
#[derive(Debug, Clone, Copy)]
pub struct GreenResult {
    pub tensor: Tensor3C,
    /// Absolute error estimate (max-norm over components), nm⁻¹.
    pub error: f64,
    pub evaluations: usize,
}

enum Reflectors {
    One(Permittivity),
    Two { lower: Permittivity, upper: Permittivity, gap: f64 },
}

/// Contour used for `stack` at wavenumber `k`: the ellipse is widened to
/// pass beyond the branch points and surface-plasmon poles of the media, and
/// for two surfaces starts at the origin to enclose guided modes below `k`.
pub fn scattering_contour(
    stack: &LayerStack,
    omega: f64,
    rho: f64,
    z_a: f64,
    z_b: f64,
    params: &PathParams,
) -> Result<Contour, GreensError> {
    let k = wavenumber(omega);
    let mut contour = Contour::new(k, params);
    let w = params.ellipse_half_width;
    let mut widen = |eps: Permittivity| {
        if let Permittivity::Finite(eps) = eps {
            let n = sqrt_upper(eps);
            let mut right = n.re + w;
            if eps.re < -1.0 {
                right = right.max(sqrt_upper(eps / (eps + 1.0)).re + w);
            }
            let right = (right * k).min(MAX_RIGHT * k);
            contour.ellipse_right = contour.ellipse_right.max(right);
        }
    };
    let decay = match stack {
        LayerStack::Vacuum => z_a + z_b,
        LayerStack::OneSurface { lower } => {
            widen(lower.permittivity(omega)?);
            z_a + z_b
        }
        LayerStack::TwoSurfaces { lower, upper, gap } => {
            widen(lower.permittivity(omega)?);
            widen(upper.permittivity(omega)?);
            contour.ellipse_left = 0.0;
            (z_a + z_b)
                .min(2.0 * gap - z_a - z_b)
                .min(2.0 * gap - (z_a - z_b).abs())
        }
    };
    if rho > 0.0 {
        contour.ellipse_depth = contour.ellipse_depth.min(1.0 / rho);
    }
    Ok(contour.with_decay_length(decay))
}

/// Scattering part `G^R(r_a, r_b, ω)` of the Green tensor (nm⁻¹) between
/// positions `r_a` and `r_b` (nm) at photon energy `omega` (eV).
pub fn scattering_green(
    stack: &LayerStack,
    r_a: &Vector3<f64>,
    r_b: &Vector3<f64>,
    omega: f64,
    params: &PathParams,
) -> Result<GreenResult, GreensError> {
    if !(omega > 0.0 && omega.is_finite()) {
        return Err(GreensError::Domain(format!("photon energy must be > 0, got {omega}")));
    }
    params.validate().map_err(GreensError::Domain)?;
    stack.validate()?;
    stack.check_height(r_a.z)?;
    stack.check_height(r_b.z)?;
    if r_a.iter().chain(r_b.iter()).any(|x| !x.is_finite()) {
        return Err(GreensError::Domain("non-finite position".into()));
    }
    let reflectors = match stack {
        LayerStack::Vacuum => {
            return Ok(GreenResult { tensor: Matrix3::zeros(), error: 0.0, evaluations: 0 })
        }
        LayerStack::OneSurface { lower } => Reflectors::One(lower.permittivity(omega)?),
        LayerStack::TwoSurfaces { lower, upper, gap } => Reflectors::Two {
            lower: lower.permittivity(omega)?,
            upper: upper.permittivity(omega)?,
            gap: *gap,
        },
    };

    let k = wavenumber(omega);
    let dx = r_a.x - r_b.x;
    let dy = r_a.y - r_b.y;
    let rho = dx.hypot(dy);
    let (cos_phi, sin_phi) = if rho > 0.0 { (dx / rho, dy / rho) } else { (1.0, 0.0) };
    let cos2 = cos_phi * cos_phi - sin_phi * sin_phi;
    let sin2 = 2.0 * sin_phi * cos_phi;
    let (za, zb) = (r_a.z, r_b.z);
    let zsum = za + zb;
    let zdiff = za - zb;
    let k2 = k * k;
    let i = Complex64::new(0.0, 1.0);
    let one = Complex64::new(1.0, 0.0);

    let integrand = |kr: Complex64| -> [Complex64; 9] {
        let kz = sqrt_upper(k2 - kr * kr);
        // Reflection amplitudes [a+, a-, b+, b-] for s and p, with the
        // e^{ik_z h} factors folded in.
        let (s, p) = match reflectors {
            Reflectors::One(eps) => {
                let (rs, rp) = reflection_pair(eps, k, kr, kz);
                let e = (i * kz * zsum).exp();
                let (s, p) = (rs * e, rp * e);
                ([s; 4], [p; 4])
            }
            Reflectors::Two { lower, upper, gap } => {
                let (rs_lo, rp_lo) = reflection_pair(lower, k, kr, kz);
                let (rs_up, rp_up) = reflection_pair(upper, k, kr, kz);
                let e_sum = (i * kz * zsum).exp();
                let e_mirror = (i * kz * (2.0 * gap - zsum)).exp();
                let e_plus = (i * kz * (2.0 * gap + zdiff)).exp();
                let e_minus = (i * kz * (2.0 * gap - zdiff)).exp();
                let e_round = (2.0 * i * kz * gap).exp();
                let amps = |r_lo: Complex64, r_up: Complex64| {
                    let rr = r_lo * r_up;
                    let inv_d = one / (one - rr * e_round);
                    let pp = r_lo * e_sum + r_up * e_mirror;
                    let cc = rr * (e_plus + e_minus);
                    let ss = rr * (e_plus - e_minus);
                    [(pp + cc) * inv_d, (pp - cc) * inv_d, (pp + ss) * inv_d, (pp - ss) * inv_d]
                };
                (amps(rs_lo, rs_up), amps(rp_lo, rp_up))
            }
        };
        let [j0, j1, j2] = bessel_j012(kr * rho);
        let kz2 = kz * kz / k2;
        let cross = i * kr * kz / k2 * j1;

        let half_s = 0.5 * s[0];
        let half_p = -0.5 * kz2 * p[1];
        let xx = half_s * (j0 + j2 * cos2) + half_p * (j0 - j2 * cos2);
        let yy = half_s * (j0 - j2 * cos2) + half_p * (j0 + j2 * cos2);
        let xy = (half_s - half_p) * j2 * sin2;
        let zz = kr * kr / k2 * p[0] * j0;
        let xz = -cross * p[2] * cos_phi;
        let yz = -cross * p[2] * sin_phi;
        let zx = cross * p[3] * cos_phi;
        let zy = cross * p[3] * sin_phi;

        let pref = i / (4.0 * PI) * kr / kz;
        [xx, xy, xz, xy, yy, yz, zx, zy, zz].map(|c| c * pref)
    };

    let contour = scattering_contour(stack, omega, rho, za, zb, params)?;
    let res = sommerfeld_integrate(integrand, &contour, params)?;
    let v = res.value;
    Ok(GreenResult {
        tensor: Matrix3::new(v[0], v[1], v[2], v[3], v[4], v[5], v[6], v[7], v[8]),
        error: res.error,
        evaluations: res.evaluations,
    })
}
