//! Adaptive Gauss–Kronrod quadrature of Cauchy-type integrals along a
//! [`ContourSpec`].
//!
//! The contour is cut into base panels whose density-weighted nodes are
//! cached once per integrator; each evaluation applies the kernel at the
//! cached nodes, then bisects the panel with the largest local error
//! estimate (`|K15 - G7|`) until the global estimate meets the budget.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::f64::consts::PI;

use num_complex::Complex64;

use crate::contour::{point_and_tangent, ContourFamily, ContourSpec};
use crate::EvalError;

/// Evaluations closer than this to the contour are refused.
pub const MIN_CONTOUR_DISTANCE: f64 = 1e-9;

/// Default cap on panel bisections per integral.
pub const DEFAULT_MAX_SUBDIVISIONS: usize = 4000;

/// Longest base panel, in parameter units.
const BASE_PANEL_LENGTH: f64 = 0.5;

// Gauss–Kronrod 7/15 abscissae and weights (QUADPACK qk15).
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

/// Node `i` of the 15-point rule on `[-1, 1]`, ascending.
#[inline]
fn node(i: usize) -> f64 {
    if i < 7 {
        -XGK[i]
    } else {
        XGK[14 - i]
    }
}

#[inline]
fn kronrod_weight(i: usize) -> f64 {
    WGK[if i < 7 { i } else { 14 - i }]
}

/// Gauss weight for odd node `i` (the Gauss nodes are the odd Kronrod nodes).
#[inline]
fn gauss_weight(i: usize) -> f64 {
    let k = if i < 7 { i } else { 14 - i };
    WG[k / 2]
}

/// The function integrated against the Cauchy-type kernel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Density {
    /// The density of the contour's own family (`exp(e^t)` or `exp(e^{(log t)^{1+p}})`).
    Family,
    /// `1/(t - pole)`, a test density with a closed form.
    Rational { pole: Complex64 },
}

impl Density {
    #[inline]
    pub fn value(&self, family: ContourFamily, t: Complex64) -> Complex64 {
        match *self {
            Density::Family => family.density(t),
            Density::Rational { pole } => (t - pole).inv(),
        }
    }
}

/// Result of one adaptive integration (already divided by `2πi`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quadrature {
    pub value: Complex64,
    /// Quadrature error estimate plus the certified tail contribution.
    pub error: f64,
    pub subdivisions: usize,
}

#[derive(Debug, Clone)]
struct Panel {
    side: f64,
    a: f64,
    b: f64,
    t: [Complex64; 15],
    /// Kronrod weight × half-length × tangent × density.
    wk: [Complex64; 15],
    /// Gauss weight × half-length × tangent × density at the odd nodes.
    wg: [Complex64; 7],
    /// Same as `wk` in absolute value, for the round-off floor.
    abs_wk: [f64; 15],
}

impl Panel {
    fn new(family: ContourFamily, density: &Density, side: f64, a: f64, b: f64) -> Panel {
        let mid = 0.5 * (a + b);
        let half = 0.5 * (b - a);
        let mut t = [Complex64::new(0.0, 0.0); 15];
        let mut wk = t;
        let mut wg = [Complex64::new(0.0, 0.0); 7];
        let mut abs_wk = [0.0; 15];
        for i in 0..15 {
            let (ti, dti) = point_and_tangent(family, side, mid + half * node(i));
            let g = density.value(family, ti) * dti * half;
            t[i] = ti;
            wk[i] = g * kronrod_weight(i);
            abs_wk[i] = wk[i].norm();
            if i % 2 == 1 {
                wg[i / 2] = g * gauss_weight(i);
            }
        }
        Panel { side, a, b, t, wk, wg, abs_wk }
    }

    /// Returns `(kronrod, error estimate)` for the given kernel.
    #[inline]
    fn apply<K: Fn(Complex64) -> Complex64>(&self, kernel: &K) -> (Complex64, f64) {
        let mut k = Complex64::new(0.0, 0.0);
        let mut g = Complex64::new(0.0, 0.0);
        let mut abs = 0.0;
        for i in 0..15 {
            let kv = kernel(self.t[i]);
            k += self.wk[i] * kv;
            abs += self.abs_wk[i] * kv.norm();
            if i % 2 == 1 {
                g += self.wg[i / 2] * kv;
            }
        }
        let err = (k - g).norm().max(50.0 * f64::EPSILON * abs);
        (k, err)
    }
}

struct Ranked {
    err: f64,
    value: Complex64,
    panel: Panel,
}

impl PartialEq for Ranked {
    fn eq(&self, other: &Self) -> bool {
        self.err.total_cmp(&other.err) == Ordering::Equal
    }
}
impl Eq for Ranked {}
impl PartialOrd for Ranked {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Ranked {
    fn cmp(&self, other: &Self) -> Ordering {
        self.err.total_cmp(&other.err)
    }
}

/// Cauchy-type integrals of one density along one contour.
#[derive(Debug, Clone)]
pub struct CauchyIntegrator {
    contour: ContourSpec,
    density: Density,
    panels: Vec<Panel>,
    max_subdivisions: usize,
}

impl CauchyIntegrator {
    pub fn new(contour: ContourSpec, density: Density) -> CauchyIntegrator {
        let mut panels = Vec::new();
        for piece in &contour.pieces {
            split_into_panels(piece.s_start, piece.s_end, |a, b| {
                panels.push(Panel::new(contour.family, &density, piece.side, a, b))
            });
        }
        CauchyIntegrator { contour, density, panels, max_subdivisions: DEFAULT_MAX_SUBDIVISIONS }
    }

    pub fn with_max_subdivisions(mut self, max: usize) -> CauchyIntegrator {
        self.max_subdivisions = max;
        self
    }

    pub fn contour(&self) -> &ContourSpec {
        &self.contour
    }

    pub fn density(&self) -> Density {
        self.density
    }

    /// `1/(2πi) ∫_L density(t)/(t - z) dt`.
    pub fn cauchy(&self, z: Complex64, tol: f64) -> Result<Quadrature, EvalError> {
        self.integrate(z, tol, |t| (t - z).inv(), |d| 1.0 / d)
    }

    /// `1/(2πi) ∫_L density(t) kernel(t) dt`, where `kernel` is singular only at
    /// `center` and `kernel_sup(d)` bounds `|kernel|` at distance `≥ d` from it.
    ///
    /// For the family density the discarded tails are certified: the truncation
    /// is pushed right until their contribution is at most `tol / 10`.
    pub fn integrate<K, S>(
        &self,
        center: Complex64,
        tol: f64,
        kernel: K,
        kernel_sup: S,
    ) -> Result<Quadrature, EvalError>
    where
        K: Fn(Complex64) -> Complex64,
        S: Fn(f64) -> f64,
    {
        let family = self.contour.family;
        let distance = family.proximity(center).distance;
        if distance < MIN_CONTOUR_DISTANCE || !distance.is_finite() {
            return Err(EvalError::NearSingularity { z: center, distance });
        }

        let base_x = self.contour.truncation_x;
        let mut cut_x = base_x;
        let mut tail = 0.0;
        if self.density == Density::Family {
            loop {
                let d_tail = distance.max(cut_x - center.re);
                tail = self.contour.tail_bound_at(cut_x) * kernel_sup(d_tail) / (2.0 * PI);
                if tail <= tol / 10.0 {
                    break;
                }
                cut_x += 1.0;
            }
        }

        let mut heap = BinaryHeap::with_capacity(self.panels.len() + 16);
        let mut total = Complex64::new(0.0, 0.0);
        let mut total_err = 0.0;
        let rank = |panel: Panel| {
            let (value, err) = panel.apply(&kernel);
            Ranked { err, value, panel }
        };
        let push = |r: Ranked, heap: &mut BinaryHeap<Ranked>, total: &mut Complex64, total_err: &mut f64| {
            *total += r.value;
            *total_err += r.err;
            heap.push(r);
        };
        for panel in &self.panels {
            push(rank(panel.clone()), &mut heap, &mut total, &mut total_err);
        }
        if cut_x > base_x {
            let arcs = self.contour.pieces.iter().filter(|p| p.side != 0.0);
            for piece in arcs {
                let (a, b) = if piece.side < 0.0 { (cut_x, base_x) } else { (base_x, cut_x) };
                split_into_panels(a, b, |a, b| {
                    let r = rank(Panel::new(family, &self.density, piece.side, a, b));
                    push(r, &mut heap, &mut total, &mut total_err)
                });
            }
        }

        let target = 2.0 * PI * (tol - tail);
        let mut subdivisions = 0;
        while total_err > target {
            if subdivisions >= self.max_subdivisions {
                return Err(EvalError::ToleranceNotMet { error: total_err / (2.0 * PI) + tail, subdivisions });
            }
            let worst = heap.pop().expect("heap holds every panel");
            let Panel { side, a, b, .. } = worst.panel;
            let mid = 0.5 * (a + b);
            if mid == a || mid == b {
                return Err(EvalError::ToleranceNotMet { error: total_err / (2.0 * PI) + tail, subdivisions });
            }
            total -= worst.value;
            total_err -= worst.err;
            push(rank(Panel::new(family, &self.density, side, a, mid)), &mut heap, &mut total, &mut total_err);
            push(rank(Panel::new(family, &self.density, side, mid, b)), &mut heap, &mut total, &mut total_err);
            subdivisions += 1;
        }
        // resum to shed the running-update drift
        let mut value = Complex64::new(0.0, 0.0);
        let mut err = 0.0;
        for r in heap.iter() {
            value += r.value;
            err += r.err;
        }
        let scale = Complex64::new(0.0, 2.0 * PI);
        Ok(Quadrature { value: value / scale, error: err / (2.0 * PI) + tail, subdivisions })
    }
}

fn split_into_panels<F: FnMut(f64, f64)>(a: f64, b: f64, mut emit: F) {
    let n = ((b - a).abs() / BASE_PANEL_LENGTH).ceil().max(1.0) as usize;
    let h = (b - a) / n as f64;
    for k in 0..n {
        let lo = a + h * k as f64;
        let hi = if k + 1 == n { b } else { a + h * (k + 1) as f64 };
        emit(lo, hi);
    }
}

/// One-shot Cauchy integral of `density` along `contour` at `z`.
pub fn eval_cauchy_integral(
    contour: &ContourSpec,
    density: Density,
    z: Complex64,
    tol: f64,
) -> Result<Quadrature, EvalError> {
    if !(tol > 0.0 && tol <= crate::contour::MAX_QUAD_TOL) {
        return Err(EvalError::Domain(format!("tolerance {tol} outside (0, 1e-2]")));
    }
    CauchyIntegrator::new(contour.clone(), density).cauchy(z, tol)
}
