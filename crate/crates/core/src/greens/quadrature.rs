//! Adaptive Gauss-Kronrod integration along a deformed Sommerfeld contour.
//!
//! The contour runs from `k_ρ = 0` along the real axis to the start of a
//! half-ellipse in the lower half-plane, around the ellipse, and back along
//! the real axis into an exponentially decaying tail. The tail is laid down
//! in panels until the remaining contribution falls below tolerance. All
//! intervals share one priority queue, so refinement goes wherever the
//! error is largest.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::GreensError;

/// User-facing quadrature and contour settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PathParams {
    /// Relative tolerance on the max-norm of the integrated vector.
    pub rel_tol: f64,
    /// Absolute tolerance floor.
    pub abs_tol: f64,
    /// Hard cap on integrand evaluations for one integral.
    pub max_evals: usize,
    /// Ellipse half-width `w` in units of `k`; the ellipse spans
    /// `[k(1 − w), k(1 + w)]` unless widened to clear material poles.
    pub ellipse_half_width: f64,
    /// Ellipse depth below the real axis in units of `k`.
    pub ellipse_height: f64,
}

impl Default for PathParams {
    fn default() -> Self {
        Self {
            rel_tol: 1e-8,
            abs_tol: 0.0,
            max_evals: 200_000,
            ellipse_half_width: 0.5,
            ellipse_height: 0.1,
        }
    }
}

impl PathParams {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.rel_tol > 0.0 && self.rel_tol < 1.0) {
            return Err(format!("rel_tol must lie in (0, 1), got {}", self.rel_tol));
        }
        if !(self.abs_tol >= 0.0 && self.abs_tol.is_finite()) {
            return Err(format!("abs_tol must be >= 0, got {}", self.abs_tol));
        }
        if self.max_evals < 1000 {
            return Err(format!("max_evals must be >= 1000, got {}", self.max_evals));
        }
        if !(self.ellipse_half_width > 0.0 && self.ellipse_half_width <= 1.0) {
            return Err(format!(
                "ellipse_half_width must lie in (0, 1], got {}",
                self.ellipse_half_width
            ));
        }
        if !(self.ellipse_height > 0.0 && self.ellipse_height.is_finite()) {
            return Err(format!("ellipse_height must be > 0, got {}", self.ellipse_height));
        }
        Ok(())
    }
}

/// Concrete contour geometry for one integral.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Contour {
    /// Left end of the ellipse on the real axis (may be 0).
    pub ellipse_left: f64,
    /// Right end of the ellipse on the real axis.
    pub ellipse_right: f64,
    /// Depth of the ellipse below the real axis.
    pub ellipse_depth: f64,
    /// Scale over which the integrand decays beyond the ellipse; sets the
    /// tail panel width. `None` grows panels geometrically from `k`.
    pub decay_length: Option<f64>,
    pub k: f64,
}

impl Contour {
    /// The default three-piece contour for wavenumber `k`.
    pub fn new(k: f64, params: &PathParams) -> Self {
        let w = params.ellipse_half_width;
        Self {
            ellipse_left: k * (1.0 - w),
            ellipse_right: k * (1.0 + w),
            ellipse_depth: k * params.ellipse_height,
            decay_length: None,
            k,
        }
    }

    pub fn with_decay_length(mut self, length: f64) -> Self {
        self.decay_length = Some(length);
        self
    }
}

/// Integral value, error estimate and work done.
#[derive(Debug, Clone, Copy)]
pub struct QuadResult<const D: usize> {
    pub value: [Complex64; D],
    /// Estimated absolute error in the max-norm.
    pub error: f64,
    pub evaluations: usize,
}

#[derive(Debug, Clone, Copy)]
enum Segment {
    Line { a: Complex64, b: Complex64 },
    /// `k_ρ(θ) = c + A cos θ − iB sin θ` for θ from π down to 0.
    Ellipse { center: f64, semi_major: f64, semi_minor: f64 },
}

impl Segment {
    /// Point and derivative `dk_ρ/dt` for `t ∈ [0, 1]`.
    #[inline]
    fn eval(&self, t: f64) -> (Complex64, Complex64) {
        match *self {
            Segment::Line { a, b } => (a + (b - a) * t, b - a),
            Segment::Ellipse {
                center,
                semi_major,
                semi_minor,
            } => {
                let theta = PI * (1.0 - t);
                let (s, c) = theta.sin_cos();
                (
                    Complex64::new(center + semi_major * c, -semi_minor * s),
                    Complex64::new(PI * semi_major * s, PI * semi_minor * c),
                )
            }
        }
    }
}

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
// Gauss weights for the nodes XGK[1], XGK[3], XGK[5], XGK[7].
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

#[derive(Debug, Clone, Copy)]
struct Interval<const D: usize> {
    segment: usize,
    t0: f64,
    t1: f64,
    value: [Complex64; D],
    error: f64,
}

impl<const D: usize> PartialEq for Interval<D> {
    fn eq(&self, other: &Self) -> bool {
        self.error.total_cmp(&other.error) == Ordering::Equal
    }
}
impl<const D: usize> Eq for Interval<D> {}
impl<const D: usize> PartialOrd for Interval<D> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl<const D: usize> Ord for Interval<D> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn norm<const D: usize>(v: &[Complex64; D]) -> f64 {
    v.iter().fold(0.0, |m, z| m.max(z.norm()))
}

struct Integrator<'a, const D: usize, F> {
    f: F,
    segments: Vec<Segment>,
    heap: BinaryHeap<Interval<D>>,
    /// Intervals too narrow to split further.
    settled: Vec<Interval<D>>,
    evals: usize,
    max_evals: usize,
    params: &'a PathParams,
}

impl<'a, const D: usize, F> Integrator<'a, D, F>
where
    F: FnMut(Complex64) -> [Complex64; D],
{
    fn gauss_kronrod(&mut self, segment: usize, t0: f64, t1: f64) -> (Interval<D>, f64) {
        let seg = self.segments[segment];
        let half = 0.5 * (t1 - t0);
        let mid = 0.5 * (t1 + t0);
        let zero = Complex64::new(0.0, 0.0);
        let mut kronrod = [zero; D];
        let mut gauss = [zero; D];
        let mut resabs = 0.0;
        let add = |f: &mut F, x: f64, wk: f64, wg: f64, kr: &mut [Complex64; D], ga: &mut [Complex64; D]| {
            let (p, dp) = seg.eval(mid + half * x);
            let vals = f(p);
            let jac = dp * half;
            let mut mag = 0.0f64;
            for i in 0..D {
                let v = vals[i] * jac;
                kr[i] += v * wk;
                ga[i] += v * wg;
                mag = mag.max(v.norm());
            }
            mag * wk
        };
        for j in 0..7 {
            let wg = if j % 2 == 1 { WG[j / 2] } else { 0.0 };
            resabs += add(&mut self.f, XGK[j], WGK[j], wg, &mut kronrod, &mut gauss);
            resabs += add(&mut self.f, -XGK[j], WGK[j], wg, &mut kronrod, &mut gauss);
        }
        resabs += add(&mut self.f, 0.0, WGK[7], WG[3], &mut kronrod, &mut gauss);
        self.evals += 15;
        let mut error = 0.0f64;
        for i in 0..D {
            error = error.max((kronrod[i] - gauss[i]).norm());
        }
        let floor = 50.0 * f64::EPSILON * resabs;
        (
            Interval {
                segment,
                t0,
                t1,
                value: kronrod,
                error: error.max(floor),
            },
            resabs,
        )
    }

    fn push(&mut self, segment: usize, t0: f64, t1: f64) -> f64 {
        let (iv, resabs) = self.gauss_kronrod(segment, t0, t1);
        self.heap.push(iv);
        resabs
    }

    fn totals(&self) -> ([Complex64; D], f64) {
        let mut sum = [Complex64::new(0.0, 0.0); D];
        let mut err = 0.0;
        for iv in self.heap.iter().chain(self.settled.iter()) {
            for i in 0..D {
                sum[i] += iv.value[i];
            }
            err += iv.error;
        }
        (sum, err)
    }

    fn target(&self, total: &[Complex64; D]) -> f64 {
        (self.params.rel_tol * norm(total)).max(self.params.abs_tol)
    }

    /// Bisects the worst interval until the summed error meets the target.
    fn refine(&mut self) -> Result<(), GreensError> {
        let (mut total, mut err) = self.totals();
        let mut since_resum = 0usize;
        while err > self.target(&total) {
            let Some(worst) = self.heap.pop() else { break };
            let width = worst.t1 - worst.t0;
            if width <= 1e-13 * worst.t0.abs().max(1.0) {
                self.settled.push(worst);
                continue;
            }
            if self.evals + 30 > self.max_evals {
                self.heap.push(worst);
                let (total, err) = self.totals();
                return Err(GreensError::Convergence {
                    estimate: total.to_vec(),
                    error_bound: err,
                    evaluations: self.evals,
                });
            }
            let mid = 0.5 * (worst.t0 + worst.t1);
            let (a, _) = self.gauss_kronrod(worst.segment, worst.t0, mid);
            let (b, _) = self.gauss_kronrod(worst.segment, mid, worst.t1);
            for i in 0..D {
                total[i] += a.value[i] + b.value[i] - worst.value[i];
            }
            err += a.error + b.error - worst.error;
            self.heap.push(a);
            self.heap.push(b);
            since_resum += 1;
            if since_resum >= 256 {
                (total, err) = self.totals();
                since_resum = 0;
            }
        }
        Ok(())
    }
}

/// Integrates `f(k_ρ) dk_ρ` from 0 to ∞ along the deformed contour.
///
/// `f` must be analytic between the real axis and the ellipse and must decay
/// along the real axis beyond it.
pub fn sommerfeld_integrate<const D: usize, F>(
    f: F,
    contour: &Contour,
    params: &PathParams,
) -> Result<QuadResult<D>, GreensError>
where
    F: FnMut(Complex64) -> [Complex64; D],
{
    let left = contour.ellipse_left.max(0.0);
    let right = contour.ellipse_right;
    let mut segments = Vec::new();
    if left > 0.0 {
        segments.push(Segment::Line {
            a: Complex64::new(0.0, 0.0),
            b: Complex64::new(left, 0.0),
        });
    }
    segments.push(Segment::Ellipse {
        center: 0.5 * (left + right),
        semi_major: 0.5 * (right - left),
        semi_minor: contour.ellipse_depth,
    });
    let mut it = Integrator {
        f,
        segments,
        heap: BinaryHeap::new(),
        settled: Vec::new(),
        evals: 0,
        max_evals: params.max_evals,
        params,
    };
    for s in 0..it.segments.len() {
        let pieces = 4;
        for p in 0..pieces {
            it.push(s, p as f64 / pieces as f64, (p + 1) as f64 / pieces as f64);
        }
    }
    it.refine()?;

    // Tail panels along the real axis.
    let mut width = match contour.decay_length {
        Some(d) if d > 0.0 => 4.0 / d,
        _ => contour.k.max(right - left),
    };
    let geometric = contour.decay_length.is_none();
    let mut start = right;
    let mut quiet = 0;
    let mut panels = 0;
    while quiet < 2 {
        let end = start + width;
        let seg = it.segments.len();
        it.segments.push(Segment::Line {
            a: Complex64::new(start, 0.0),
            b: Complex64::new(end, 0.0),
        });
        it.push(seg, 0.0, 0.5);
        it.push(seg, 0.5, 1.0);
        it.refine()?;
        let mut panel = [Complex64::new(0.0, 0.0); D];
        let mut panel_err = 0.0;
        for iv in it.heap.iter().chain(it.settled.iter()).filter(|iv| iv.segment == seg) {
            for i in 0..D {
                panel[i] += iv.value[i];
            }
            panel_err += iv.error;
        }
        let edge = (it.f)(Complex64::new(end, 0.0));
        it.evals += 1;
        let bound = norm(&panel) + panel_err + norm(&edge) * width;
        let (total, _) = it.totals();
        if bound <= 0.01 * it.target(&total) || bound == 0.0 {
            quiet += 1;
        } else {
            quiet = 0;
        }
        start = end;
        if geometric {
            width *= 2.0;
        }
        panels += 1;
        if panels > 100_000 || it.evals > it.max_evals {
            let (total, err) = it.totals();
            return Err(GreensError::Convergence {
                estimate: total.to_vec(),
                error_bound: err,
                evaluations: it.evals,
            });
        }
    }
    it.refine()?;
    let (value, error) = it.totals();
    Ok(QuadResult {
        value,
        error,
        evaluations: it.evals,
    })
}
