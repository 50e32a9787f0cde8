//! Bessel functions `J₀`, `J₁`, `J₂` of complex argument.
//!
//! Three regimes: the ascending series for `|z| < 1`, Miller's backward
//! recurrence normalized by `J₀ + 2ΣJ₂ₖ = 1` for `1 ≤ |z| < 25`, and the
//! Hankel asymptotic expansion beyond. Arguments on the Sommerfeld contour
//! have `Re z ≥ 0` and moderate `|Im z|`; other half-planes are mapped
//! there with `J_n(−z) = (−1)ⁿ J_n(z)`.

use num_complex::Complex64;
use std::f64::consts::PI;

const SERIES_RADIUS: f64 = 1.0;
const ASYMPTOTIC_RADIUS: f64 = 25.0;

/// Returns `[J₀(z), J₁(z), J₂(z)]`.
pub fn bessel_j012(z: Complex64) -> [Complex64; 3] {
    if z.re < 0.0 {
        let [j0, j1, j2] = bessel_j012(-z);
        return [j0, -j1, j2];
    }
    let az = z.norm();
    if az == 0.0 {
        let zero = Complex64::new(0.0, 0.0);
        return [Complex64::new(1.0, 0.0), zero, zero];
    }
    if az < SERIES_RADIUS {
        [series(0, z), series(1, z), series(2, z)]
    } else if az < ASYMPTOTIC_RADIUS {
        miller(z)
    } else {
        let j0 = hankel_asymptotic(0, z);
        let j1 = hankel_asymptotic(1, z);
        [j0, j1, 2.0 * j1 / z - j0]
    }
}

fn series(n: u32, z: Complex64) -> Complex64 {
    let half = z * 0.5;
    let q = -half * half;
    let mut term = Complex64::new(1.0, 0.0);
    for k in 1..=n {
        term = term * half / k as f64;
    }
    let mut sum = term;
    for k in 1..40u32 {
        term = term * q / (k as f64 * (k + n) as f64);
        sum += term;
        if term.norm() <= 1e-17 * sum.norm() {
            break;
        }
    }
    sum
}

fn miller(z: Complex64) -> [Complex64; 3] {
    const BIG: f64 = 1e250;
    let start = 2 * ((z.norm() as usize + 42) / 2);
    let mut out = [Complex64::new(0.0, 0.0); 3];
    let mut next = Complex64::new(0.0, 0.0);
    let mut cur = Complex64::new(1e-30, 0.0);
    let mut norm = Complex64::new(0.0, 0.0);
    let inv_z = 1.0 / z;
    for n in (1..=start).rev() {
        let prev = 2.0 * n as f64 * inv_z * cur - next;
        next = cur;
        cur = prev;
        let order = n - 1;
        if order <= 2 {
            out[order] = cur;
        }
        if order > 0 && order % 2 == 0 {
            norm += 2.0 * cur;
        }
        if cur.norm() > BIG {
            let s = 1.0 / BIG;
            cur *= s;
            next *= s;
            norm *= s;
            for v in out.iter_mut() {
                *v *= s;
            }
        }
    }
    norm += out[0];
    [out[0] / norm, out[1] / norm, out[2] / norm]
}

fn hankel_asymptotic(order: u32, z: Complex64) -> Complex64 {
    let mu = 4.0 * (order * order) as f64;
    let inv_8z = 1.0 / (8.0 * z);
    let mut p = Complex64::new(1.0, 0.0);
    let mut q = Complex64::new(0.0, 0.0);
    let mut term = Complex64::new(1.0, 0.0);
    let mut last = f64::INFINITY;
    for k in 1..60u32 {
        let odd = (2 * k - 1) as f64;
        term = term * (mu - odd * odd) * inv_8z / k as f64;
        let size = term.norm();
        if size > last {
            break;
        }
        last = size;
        // a_k/z^k enters P (even k) or Q (odd k) with alternating signs.
        let sign = if (k / 2) % 2 == 0 { 1.0 } else { -1.0 };
        if k % 2 == 0 {
            p += sign * term;
        } else {
            q += sign * term;
        }
        if size < 1e-17 {
            break;
        }
    }
    let chi = z - (order as f64 * 0.5 + 0.25) * PI;
    (2.0 / (PI * z)).sqrt() * (p * chi.cos() - q * chi.sin())
}
