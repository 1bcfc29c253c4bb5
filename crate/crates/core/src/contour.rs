//! Truncated boundary contours of the half-strip `G` and of the curved
//! regions `G_p`, with region membership and certified tail bounds.
//!
//! Both contours share one shape: a lower arc running right-to-left, a
//! vertical segment at the left edge running upward, and an upper arc running
//! left-to-right. That is the clockwise orientation around the region (the
//! region lies to the right of the direction of travel).

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Default width of the band around the contour reported as `NearBoundary`.
pub const DEFAULT_BOUNDARY_BAND: f64 = 0.05;

/// Abscissa of the vertical edge of `G_p`.
pub const FP_LEFT_EDGE: f64 = 3.0;

/// Smallest admissible truncation abscissa.
pub const MIN_TRUNCATION_X: f64 = 3.0;

/// Largest accepted quadrature tolerance.
pub const MAX_QUAD_TOL: f64 = 1e-2;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ContourError {
    #[error("quadrature tolerance {0} outside (0, 1e-2]")]
    InvalidTolerance(f64),
    #[error("exponent p = {0} must be positive")]
    InvalidExponent(f64),
    #[error("density bound exp(-e^((log x)^(1+p))/2) fails at x = {x} for p = {p}; tail cannot be certified")]
    UncertifiedTail { p: f64, x: f64 },
}

/// Which region the contour bounds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ContourFamily {
    /// `G = {Re z > 0, |Im z| < π}`, the region of `F₀`.
    Strip,
    /// `G_p = {x ≥ 3, |y| ≤ πx / ((1+p)(log x)^p)}`, the region of `f_p`.
    Curved { p: f64 },
}

impl ContourFamily {
    pub fn curved(p: f64) -> Result<Self, ContourError> {
        if p > 0.0 && p.is_finite() {
            Ok(ContourFamily::Curved { p })
        } else {
            Err(ContourError::InvalidExponent(p))
        }
    }

    /// Abscissa of the vertical piece.
    pub fn left_edge(&self) -> f64 {
        match self {
            ContourFamily::Strip => 0.0,
            ContourFamily::Curved { .. } => FP_LEFT_EDGE,
        }
    }

    /// Half-height of the region above abscissa `x` (for `x` at or right of the left edge).
    pub fn half_height(&self, x: f64) -> f64 {
        match *self {
            ContourFamily::Strip => PI,
            ContourFamily::Curved { p } => PI * x / ((1.0 + p) * x.ln().powf(p)),
        }
    }

    /// Derivative of [`half_height`](Self::half_height) in `x`.
    pub fn half_height_slope(&self, x: f64) -> f64 {
        match *self {
            ContourFamily::Strip => 0.0,
            ContourFamily::Curved { p } => {
                let l = x.ln();
                PI / ((1.0 + p) * l.powf(p)) * (1.0 - p / l)
            }
        }
    }

    /// The density `exp(e^t)` (strip) or `exp(e^{(log t)^{1+p}})` (curved, principal log).
    pub fn density(&self, t: Complex64) -> Complex64 {
        self.inner_exponent(t).exp()
    }

    /// Inner exponent `e^t` or `e^{(log t)^{1+p}}`; the density is its exponential.
    pub fn inner_exponent(&self, t: Complex64) -> Complex64 {
        match *self {
            ContourFamily::Strip => t.exp(),
            ContourFamily::Curved { p } => t.ln().powf(1.0 + p).exp(),
        }
    }

    /// Open-region test, ignoring the boundary band.
    pub fn contains(&self, z: Complex64) -> bool {
        let x0 = self.left_edge();
        z.re > x0 && z.im.abs() < self.half_height(z.re)
    }

    /// Distance from `z` to the full (untruncated) boundary, with the nearest boundary point.
    pub fn proximity(&self, z: Complex64) -> Proximity {
        let x0 = self.left_edge();
        let h0 = self.half_height(x0);
        let inside = self.contains(z);
        // vertical piece
        let seg = Complex64::new(x0, z.im.clamp(-h0, h0));
        let mut best = (seg, (z - seg).norm());
        let side = if z.im >= 0.0 { 1.0 } else { -1.0 };
        let (xa, da) = match self {
            ContourFamily::Strip => {
                let xa = z.re.max(x0);
                (xa, (Complex64::new(xa, side * PI) - z).norm())
            }
            ContourFamily::Curved { .. } => self.nearest_on_arc(z.re, z.im.abs()),
        };
        if da < best.1 {
            best = (Complex64::new(xa, side * self.half_height(xa)), da);
        }
        Proximity { distance: best.1, nearest: best.0, inside }
    }

    /// Nearest point of the graph `y = h(x)`, `x ≥ x0`, to `(a, b)`; returns `(x, distance)`.
    fn nearest_on_arc(&self, a: f64, b: f64) -> (f64, f64) {
        let x0 = self.left_edge();
        let dist = |x: f64| ((x - a).powi(2) + (self.half_height(x) - b).powi(2)).sqrt();
        let anchor = a.max(x0);
        let reach = dist(anchor);
        let lo = (a - reach).max(x0);
        let hi = (a + reach).max(lo);
        const SAMPLES: usize = 64;
        let step = (hi - lo) / SAMPLES as f64;
        let (mut k_best, mut d_best) = (0usize, f64::INFINITY);
        for k in 0..=SAMPLES {
            let d = dist(lo + step * k as f64);
            if d < d_best {
                k_best = k;
                d_best = d;
            }
        }
        // golden-section polish between the neighbours of the best sample
        let mut l = (lo + step * k_best.saturating_sub(1) as f64).max(x0);
        let mut r = (lo + step * (k_best + 1) as f64).min(hi);
        let g = 0.5 * (5f64.sqrt() - 1.0);
        let mut c = r - g * (r - l);
        let mut d = l + g * (r - l);
        let (mut fc, mut fd) = (dist(c), dist(d));
        for _ in 0..80 {
            if r - l <= 1e-14 * (1.0 + r.abs()) {
                break;
            }
            if fc < fd {
                r = d;
                d = c;
                fd = fc;
                c = r - g * (r - l);
                fc = dist(c);
            } else {
                l = c;
                c = d;
                fc = fd;
                d = l + g * (r - l);
                fd = dist(d);
            }
        }
        let xm = 0.5 * (l + r);
        let dm = dist(xm);
        if dm <= d_best {
            (xm, dm)
        } else {
            (lo + step * k_best as f64, d_best)
        }
    }

    /// Certified bound on `∫|density| |dt|` over both arcs beyond abscissa `x`.
    ///
    /// Strip: `|exp(e^{x±iπ})| = exp(-e^x)`, whose logarithm has increasing
    /// slope, so each ray contributes at most `exp(-e^X)/e^X`.
    /// Curved: the density is dominated by `exp(-½ e^{(log x)^{1+p}})` on the
    /// arcs (checked numerically in tests); the same convexity argument applies
    /// for `x ≥ 3`, and the arc-length element is at most `sqrt(1 + h'²)`.
    pub fn tail_integral_bound(&self, x: f64) -> f64 {
        match *self {
            ContourFamily::Strip => {
                let ex = x.exp();
                2.0 * (-ex).exp() / ex
            }
            ContourFamily::Curved { p } => {
                let q = 1.0 + p;
                let l = x.ln();
                let inner = l.powf(q).exp();
                let g = (-0.5 * inner).exp();
                let decay_rate = 0.5 * inner * q * l.powf(q - 1.0) / x;
                let slope = PI / ((1.0 + p) * l.powf(p)) * (1.0 + p / l);
                let arc = (1.0 + slope * slope).sqrt();
                2.0 * arc * g / decay_rate
            }
        }
    }

    /// The majorant of `|density|` used by [`tail_integral_bound`](Self::tail_integral_bound) at abscissa `x`.
    pub fn density_majorant(&self, x: f64) -> f64 {
        match *self {
            ContourFamily::Strip => (-x.exp()).exp(),
            ContourFamily::Curved { p } => (-0.5 * x.ln().powf(1.0 + p).exp()).exp(),
        }
    }

    /// First sampled abscissa in `[from, to]` where the arc density exceeds
    /// [`density_majorant`](Self::density_majorant), compared in the log domain.
    pub fn majorant_violation(&self, from: f64, to: f64) -> Option<f64> {
        let ContourFamily::Curved { p } = *self else { return None };
        let q = 1.0 + p;
        let mut x = from;
        while x <= to {
            let (t, _) = point_and_tangent(*self, 1.0, x);
            let w = t.ln().powf(q);
            let c = w.im.cos();
            if !(c < 0.0 && w.re + (-c).ln() >= 0.5f64.ln() + x.ln().powf(q)) {
                return Some(x);
            }
            x *= 1.01;
        }
        None
    }

    /// Truncation abscissa for an evaluation tolerance.
    fn truncation_for(&self, tol: f64) -> f64 {
        let budget = tol / 10.0;
        match self {
            ContourFamily::Strip => {
                let minimal = (10.0 / tol).ln().ln();
                let x = minimal.max(MIN_TRUNCATION_X) + 1.0;
                debug_assert!(self.tail_integral_bound(x) <= budget);
                x
            }
            ContourFamily::Curved { .. } => {
                let mut x = FP_LEFT_EDGE + 1.0;
                while self.tail_integral_bound(x) > budget {
                    x += 0.25;
                }
                x + 1.0
            }
        }
    }
}

/// Distance information relative to the region boundary.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Proximity {
    pub distance: f64,
    pub nearest: Complex64,
    pub inside: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum RegionMembership {
    Exterior,
    Interior,
    NearBoundary { distance: f64 },
}

/// Classify `z` against the region with the default boundary band.
pub fn region_membership(z: Complex64, family: ContourFamily) -> RegionMembership {
    region_membership_with_band(z, family, DEFAULT_BOUNDARY_BAND)
}

pub fn region_membership_with_band(z: Complex64, family: ContourFamily, band: f64) -> RegionMembership {
    let prox = family.proximity(z);
    if prox.distance < band {
        RegionMembership::NearBoundary { distance: prox.distance }
    } else if prox.inside {
        RegionMembership::Interior
    } else {
        RegionMembership::Exterior
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PieceKind {
    LineSegment,
    HorizontalRay,
    GraphArc,
}

/// One smooth piece, parametrized by `s` running from `s_start` to `s_end`.
///
/// Arcs use `s = Re t` and the segment uses `s = Im t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContourPiece {
    pub kind: PieceKind,
    pub start: Complex64,
    pub end: Complex64,
    pub s_start: f64,
    pub s_end: f64,
    /// `+1` for the upper arc, `-1` for the lower arc, `0` for the segment.
    pub side: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContourSpec {
    pub family: ContourFamily,
    pub pieces: Vec<ContourPiece>,
    pub clockwise: bool,
    pub truncation_x: f64,
    pub tail_bound: f64,
}

/// Build the truncated clockwise contour for `family` at evaluation tolerance `quad_tol`.
pub fn build_contour(family: ContourFamily, quad_tol: f64) -> Result<ContourSpec, ContourError> {
    if !(quad_tol > 0.0 && quad_tol <= MAX_QUAD_TOL) {
        return Err(ContourError::InvalidTolerance(quad_tol));
    }
    if let ContourFamily::Curved { p } = family {
        ContourFamily::curved(p)?;
        if let Some(x) = family.majorant_violation(FP_LEFT_EDGE + 1.0, 1e6) {
            return Err(ContourError::UncertifiedTail { p, x });
        }
    }
    let x = family.truncation_for(quad_tol);
    Ok(ContourSpec::truncated_at(family, x))
}

impl ContourSpec {
    /// The contour of `family` cut at abscissa `x`.
    pub fn truncated_at(family: ContourFamily, x: f64) -> ContourSpec {
        let x0 = family.left_edge();
        let h0 = family.half_height(x0);
        let hx = family.half_height(x);
        let arc_kind = match family {
            ContourFamily::Strip => PieceKind::HorizontalRay,
            ContourFamily::Curved { .. } => PieceKind::GraphArc,
        };
        let pieces = vec![
            ContourPiece {
                kind: arc_kind,
                start: Complex64::new(x, -hx),
                end: Complex64::new(x0, -h0),
                s_start: x,
                s_end: x0,
                side: -1.0,
            },
            ContourPiece {
                kind: PieceKind::LineSegment,
                start: Complex64::new(x0, -h0),
                end: Complex64::new(x0, h0),
                s_start: -h0,
                s_end: h0,
                side: 0.0,
            },
            ContourPiece {
                kind: arc_kind,
                start: Complex64::new(x0, h0),
                end: Complex64::new(x, hx),
                s_start: x0,
                s_end: x,
                side: 1.0,
            },
        ];
        ContourSpec { family, pieces, clockwise: true, truncation_x: x, tail_bound: family.tail_integral_bound(x) }
    }

    /// Point `t(s)` and tangent `dt/ds` on piece `piece`.
    #[inline]
    pub fn point_and_tangent(&self, piece: usize, s: f64) -> (Complex64, Complex64) {
        let pc = &self.pieces[piece];
        point_and_tangent(self.family, pc.side, s)
    }

    pub fn tail_bound_at(&self, x: f64) -> f64 {
        self.family.tail_integral_bound(x)
    }
}

#[inline]
pub(crate) fn point_and_tangent(family: ContourFamily, side: f64, s: f64) -> (Complex64, Complex64) {
    if side == 0.0 {
        (Complex64::new(family.left_edge(), s), Complex64::new(0.0, 1.0))
    } else {
        (Complex64::new(s, side * family.half_height(s)), Complex64::new(1.0, side * family.half_height_slope(s)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn strip_truncation_matches_double_exponential_decay() {
        let spec = build_contour(ContourFamily::Strip, 1e-8).unwrap();
        let minimal = (1e9f64).ln().ln();
        assert!((spec.truncation_x - (minimal + 1.0)).abs() < 1e-12);
        assert!((spec.truncation_x - 4.0).abs() < 0.1);
        assert!(spec.tail_bound <= 1e-9);
    }

    #[test]
    fn strip_vertical_piece_ends_at_plus_minus_i_pi() {
        for tol in [1e-2, 1e-6, 1e-12] {
            let spec = build_contour(ContourFamily::Strip, tol).unwrap();
            let seg = spec.pieces.iter().find(|p| p.kind == PieceKind::LineSegment).unwrap();
            assert_eq!(seg.start, c(0.0, -PI));
            assert_eq!(seg.end, c(0.0, PI));
            assert!(spec.truncation_x >= MIN_TRUNCATION_X);
        }
    }

    #[test]
    fn curved_boundary_follows_graph() {
        let fam = ContourFamily::curved(1.0).unwrap();
        let spec = build_contour(fam, 1e-8).unwrap();
        for x in [3.0, 4.5, 7.0, 10.0] {
            let (t, _) = spec.point_and_tangent(2, x);
            assert!((t.im - PI * x / (2.0 * x.ln())).abs() < 1e-14);
            let (b, _) = spec.point_and_tangent(0, x);
            assert_eq!(b, t.conj());
        }
    }

    #[test]
    fn pieces_connect_and_mirror() {
        for fam in [ContourFamily::Strip, ContourFamily::Curved { p: 0.5 }, ContourFamily::Curved { p: 2.0 }] {
            let spec = build_contour(fam, 1e-10).unwrap();
            for w in spec.pieces.windows(2) {
                assert!((w[0].end - w[1].start).norm() < 1e-12);
            }
            for (a, b) in spec.pieces.iter().zip(spec.pieces.iter().rev()) {
                assert!((a.start - b.end.conj()).norm() < 1e-12);
                assert!((a.end - b.start.conj()).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn tail_bound_within_budget() {
        for fam in [ContourFamily::Strip, ContourFamily::Curved { p: 0.5 }, ContourFamily::Curved { p: 1.0 }] {
            for tol in [1e-2, 1e-4, 1e-8, 1e-12] {
                let spec = build_contour(fam, tol).unwrap();
                assert!(spec.tail_bound <= tol / 10.0, "{fam:?} {tol}");
            }
        }
    }

    #[test]
    fn curved_density_below_majorant_on_arcs() {
        for p in [0.25, 0.5, 1.0, 2.0, 4.0] {
            let fam = ContourFamily::Curved { p };
            assert_eq!(fam.majorant_violation(4.0, 1e6), None);
            let mut x = 4.0;
            while x < 400.0 {
                let (t, _) = point_and_tangent(fam, 1.0, x);
                let log_density = fam.inner_exponent(t).re;
                let log_majorant = -0.5 * x.ln().powf(1.0 + p).exp();
                assert!(log_density <= log_majorant, "p={p} x={x}");
                x *= 1.01;
            }
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        assert_eq!(build_contour(ContourFamily::Strip, 0.0), Err(ContourError::InvalidTolerance(0.0)));
        assert!(build_contour(ContourFamily::Strip, 0.5).is_err());
        assert!(build_contour(ContourFamily::Curved { p: 0.0 }, 1e-6).is_err());
        assert!(build_contour(ContourFamily::Curved { p: -1.0 }, 1e-6).is_err());
        assert!(matches!(
            build_contour(ContourFamily::Curved { p: 0.1 }, 1e-6),
            Err(ContourError::UncertifiedTail { .. })
        ));
    }

    #[test]
    fn membership_examples() {
        assert_eq!(region_membership(c(-1.0, 0.0), ContourFamily::Strip), RegionMembership::Exterior);
        assert_eq!(region_membership(c(1.0, 0.0), ContourFamily::Strip), RegionMembership::Interior);
        assert_eq!(
            region_membership(c(1.0, PI), ContourFamily::Strip),
            RegionMembership::NearBoundary { distance: 0.0 }
        );
        let fam = ContourFamily::Curved { p: 1.0 };
        assert_eq!(region_membership(c(10.0, 0.0), fam), RegionMembership::Interior);
        assert_eq!(region_membership(c(2.0, 0.0), fam), RegionMembership::Exterior);
        assert_eq!(region_membership(c(10.0, 20.0), fam), RegionMembership::Exterior);
        match region_membership(c(3.0, 1.0), fam) {
            RegionMembership::NearBoundary { distance } => assert!(distance < 1e-15),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn curved_distance_to_arc_point_is_zero() {
        let fam = ContourFamily::Curved { p: 1.0 };
        for x in [3.5, 6.0, 20.0] {
            let w = c(x, fam.half_height(x));
            let prox = fam.proximity(w);
            assert!(prox.distance < 1e-9, "{}", prox.distance);
            // step along the normal
            let slope = fam.half_height_slope(x);
            let n = c(-slope, 1.0) / (1.0 + slope * slope).sqrt();
            let prox = fam.proximity(w + n * 0.02);
            assert!((prox.distance - 0.02).abs() < 1e-6, "{}", prox.distance);
            assert!(!prox.inside);
        }
    }
}
