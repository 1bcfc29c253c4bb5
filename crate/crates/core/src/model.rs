//! Concrete entire functions: the `F₀` family, the `f_p` family, the
//! exponential, and affine pushforwards `ψ∘f∘φ⁻¹` of any of these.
//!
//! Outside the closed region the Cauchy-family models are the contour
//! integral itself. Inside, the integral is continued analytically by adding
//! `ε·exp(e^z)` (resp. `ε·exp(e^{(log z)^{1+p}})`), the jump of the integral
//! across the contour. The sign `ε` is fixed by [`continuation_sign`].
//! Points within the boundary band are evaluated from a Taylor expansion
//! about a recentred point and flagged when its remainder exceeds the
//! tolerance.

use std::f64::consts::PI;
use std::sync::{Arc, OnceLock};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::contour::{build_contour, ContourError, ContourFamily, Proximity, DEFAULT_BOUNDARY_BAND, MAX_QUAD_TOL};
use crate::jet::Jet;
use crate::quadrature::{CauchyIntegrator, Density, Quadrature};
use crate::EvalError;

/// Default evaluation tolerance of a model.
pub const DEFAULT_QUAD_TOL: f64 = 1e-8;

/// Values with modulus above this raise [`EvalError::Overflow`].
pub const OVERFLOW_MODULUS: f64 = 1e300;

/// `ln(OVERFLOW_MODULUS)`.
pub const LOG_OVERFLOW_MODULUS: f64 = 690.775_527_898_213_7;

/// Jump sign of the analytic continuation for the clockwise contours.
pub const CONTINUATION_SIGN: f64 = 1.0;

/// Number of Taylor terms used for points in the boundary band.
const TAYLOR_TERMS: usize = 4;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error(transparent)]
    Contour(#[from] ContourError),
    #[error("affine map has zero linear coefficient")]
    DegenerateAffine,
    #[error("invalid model configuration: {0}")]
    Config(String),
}

/// `z ↦ a z + b` with `a ≠ 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "AffineRepr", into = "AffineRepr")]
pub struct AffineMap {
    a: Complex64,
    b: Complex64,
}

#[derive(Serialize, Deserialize)]
struct AffineRepr {
    a: [f64; 2],
    b: [f64; 2],
}

impl TryFrom<AffineRepr> for AffineMap {
    type Error = ModelError;
    fn try_from(r: AffineRepr) -> Result<Self, ModelError> {
        AffineMap::new(Complex64::new(r.a[0], r.a[1]), Complex64::new(r.b[0], r.b[1]))
    }
}

impl From<AffineMap> for AffineRepr {
    fn from(m: AffineMap) -> Self {
        AffineRepr { a: [m.a.re, m.a.im], b: [m.b.re, m.b.im] }
    }
}

impl AffineMap {
    pub fn new(a: Complex64, b: Complex64) -> Result<AffineMap, ModelError> {
        if a == Complex64::new(0.0, 0.0) || !a.is_finite() || !b.is_finite() {
            return Err(ModelError::DegenerateAffine);
        }
        Ok(AffineMap { a, b })
    }

    pub fn identity() -> AffineMap {
        AffineMap { a: Complex64::new(1.0, 0.0), b: Complex64::new(0.0, 0.0) }
    }

    pub fn translation(b: Complex64) -> AffineMap {
        AffineMap { a: Complex64::new(1.0, 0.0), b }
    }

    pub fn scaling(a: Complex64) -> Result<AffineMap, ModelError> {
        AffineMap::new(a, Complex64::new(0.0, 0.0))
    }

    pub fn linear(&self) -> Complex64 {
        self.a
    }

    pub fn offset(&self) -> Complex64 {
        self.b
    }

    #[inline]
    pub fn apply(&self, z: Complex64) -> Complex64 {
        self.a * z + self.b
    }

    pub fn inverse(&self) -> AffineMap {
        let ai = self.a.inv();
        AffineMap { a: ai, b: -self.b * ai }
    }

    /// `self ∘ inner`.
    pub fn compose(&self, inner: &AffineMap) -> AffineMap {
        AffineMap { a: self.a * inner.a, b: self.a * inner.b + self.b }
    }

    pub fn is_identity(&self) -> bool {
        self.a == Complex64::new(1.0, 0.0) && self.b == Complex64::new(0.0, 0.0)
    }
}

/// The kind of entire function a [`FunctionModel`] represents.
#[derive(Debug, Clone)]
pub enum Family {
    /// `F_κ = F₀ + κ`.
    F0 {
        kappa: Complex64,
    },
    /// `f_{d,K} = f_p − K`.
    Fp {
        p: f64,
        k: f64,
    },
    Exponential,
    /// `ψ ∘ base ∘ φ⁻¹`.
    Pushforward {
        base: Box<FunctionModel>,
        phi: AffineMap,
        psi: AffineMap,
    },
}

/// An evaluable entire function. Cheap to clone; the contour cache is shared.
#[derive(Debug, Clone)]
pub struct FunctionModel {
    family: Family,
    quad_tol: f64,
    integrator: Option<Arc<CauchyIntegrator>>,
}

/// A value with its error estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Evaluation {
    pub value: Complex64,
    pub error: f64,
    /// Set when a boundary-band Taylor remainder exceeded the tolerance.
    pub reduced_accuracy: bool,
}

static CALIBRATED_SIGN: OnceLock<f64> = OnceLock::new();

/// The continuation sign, calibrated once per process.
pub fn continuation_sign() -> f64 {
    *CALIBRATED_SIGN.get_or_init(calibrate_continuation_sign)
}

/// Compare both candidate continuations across the upper ray at `1 + iπ`.
pub fn calibrate_continuation_sign() -> f64 {
    let family = ContourFamily::Strip;
    let tol = 1e-10;
    let integ = CauchyIntegrator::new(build_contour(family, tol).expect("valid tolerance"), Density::Family);
    let w = Complex64::new(1.0, PI);
    let eta = Complex64::new(0.0, 1e-3);
    let outside = integ.cauchy(w + eta, tol).expect("probe off contour").value;
    let inside = integ.cauchy(w - eta, tol).expect("probe off contour").value;
    let jump = family.density(w - eta);
    if (inside + jump - outside).norm() <= (inside - jump - outside).norm() {
        1.0
    } else {
        -1.0
    }
}

fn check_tol(tol: f64) -> Result<(), ModelError> {
    if tol > 0.0 && tol <= MAX_QUAD_TOL {
        Ok(())
    } else {
        Err(ContourError::InvalidTolerance(tol).into())
    }
}

fn family_integrator(family: ContourFamily, tol: f64) -> Result<Arc<CauchyIntegrator>, ModelError> {
    let contour = build_contour(family, tol)?;
    continuation_sign();
    Ok(Arc::new(CauchyIntegrator::new(contour, Density::Family)))
}

/// `ln|exp(u)| = Re u`, computed for `u = e^w` without forming `e^w`.
fn log_modulus_of_exp_exp(w: Complex64) -> f64 {
    let c = w.im.cos();
    if c == 0.0 {
        0.0
    } else {
        c.signum() * (w.re + c.abs().ln()).exp()
    }
}

impl FunctionModel {
    pub fn f0(kappa: Complex64) -> Result<FunctionModel, ModelError> {
        FunctionModel::f0_with_tol(kappa, DEFAULT_QUAD_TOL)
    }

    pub fn f0_with_tol(kappa: Complex64, quad_tol: f64) -> Result<FunctionModel, ModelError> {
        check_tol(quad_tol)?;
        if !kappa.is_finite() {
            return Err(ModelError::Config(format!("kappa {kappa} is not finite")));
        }
        Ok(FunctionModel {
            family: Family::F0 { kappa },
            quad_tol,
            integrator: Some(family_integrator(ContourFamily::Strip, quad_tol)?),
        })
    }

    pub fn fp(p: f64, k: f64) -> Result<FunctionModel, ModelError> {
        FunctionModel::fp_with_tol(p, k, DEFAULT_QUAD_TOL)
    }

    pub fn fp_with_tol(p: f64, k: f64, quad_tol: f64) -> Result<FunctionModel, ModelError> {
        check_tol(quad_tol)?;
        let family = ContourFamily::curved(p)?;
        if !k.is_finite() {
            return Err(ModelError::Config(format!("K {k} is not finite")));
        }
        Ok(FunctionModel {
            family: Family::Fp { p, k },
            quad_tol,
            integrator: Some(family_integrator(family, quad_tol)?),
        })
    }

    pub fn exponential() -> FunctionModel {
        FunctionModel { family: Family::Exponential, quad_tol: DEFAULT_QUAD_TOL, integrator: None }
    }

    /// `ψ ∘ base ∘ φ⁻¹`, so that `ψ ∘ base = g ∘ φ`.
    ///
    /// Nested pushforwards collapse into one, and a pure translation `ψ` of an
    /// `F₀`/`f_p` model with `φ = id` folds into the family parameter.
    pub fn pushforward(base: &FunctionModel, phi: AffineMap, psi: AffineMap) -> FunctionModel {
        if let Family::Pushforward { base: inner, phi: phi1, psi: psi1 } = &base.family {
            return FunctionModel::pushforward(inner, phi.compose(phi1), psi.compose(psi1));
        }
        let translation = phi.is_identity() && psi.linear() == Complex64::new(1.0, 0.0);
        match &base.family {
            Family::F0 { kappa } if translation => {
                return FunctionModel { family: Family::F0 { kappa: kappa + psi.offset() }, ..base.clone() };
            }
            Family::Fp { p, k } if translation && psi.offset().im == 0.0 => {
                return FunctionModel { family: Family::Fp { p: *p, k: k - psi.offset().re }, ..base.clone() };
            }
            _ if phi.is_identity() && psi.is_identity() => return base.clone(),
            _ => {}
        }
        FunctionModel {
            family: Family::Pushforward { base: Box::new(base.clone()), phi, psi },
            quad_tol: base.quad_tol,
            integrator: None,
        }
    }

    /// Rebuild with a different default tolerance.
    pub fn with_quad_tol(&self, quad_tol: f64) -> Result<FunctionModel, ModelError> {
        check_tol(quad_tol)?;
        Ok(match &self.family {
            Family::F0 { kappa } => FunctionModel::f0_with_tol(*kappa, quad_tol)?,
            Family::Fp { p, k } => FunctionModel::fp_with_tol(*p, *k, quad_tol)?,
            Family::Exponential => FunctionModel { quad_tol, ..self.clone() },
            Family::Pushforward { base, phi, psi } => FunctionModel {
                family: Family::Pushforward { base: Box::new(base.with_quad_tol(quad_tol)?), phi: *phi, psi: *psi },
                quad_tol,
                integrator: None,
            },
        })
    }

    pub fn family(&self) -> &Family {
        &self.family
    }

    pub fn quad_tol(&self) -> f64 {
        self.quad_tol
    }

    /// Region of the defining contour, for the Cauchy families.
    pub fn contour_family(&self) -> Option<ContourFamily> {
        self.integrator.as_ref().map(|i| i.contour().family)
    }

    pub fn integrator(&self) -> Option<&CauchyIntegrator> {
        self.integrator.as_deref()
    }

    /// Whether `z` is inside the boundary band of this model's contour (after
    /// pulling back through `φ` for pushforwards).
    pub fn near_contour(&self, z: Complex64) -> bool {
        match &self.family {
            Family::Pushforward { base, phi, .. } => base.near_contour(phi.inverse().apply(z)),
            _ => match self.contour_family() {
                Some(f) => f.proximity(z).distance < DEFAULT_BOUNDARY_BAND,
                None => false,
            },
        }
    }

    /// Evaluate at the model's default tolerance.
    pub fn value(&self, z: Complex64) -> Result<Evaluation, EvalError> {
        self.eval(z, self.quad_tol)
    }

    pub fn eval(&self, z: Complex64, tol: f64) -> Result<Evaluation, EvalError> {
        if !(tol > 0.0 && tol <= MAX_QUAD_TOL) {
            return Err(EvalError::Domain(format!("tolerance {tol} outside (0, 1e-2]")));
        }
        if !z.is_finite() {
            return Err(EvalError::Domain(format!("non-finite argument {z}")));
        }
        let out = match &self.family {
            Family::Exponential => {
                if z.re > LOG_OVERFLOW_MODULUS {
                    return Err(EvalError::Overflow { log_modulus: Some(z.re) });
                }
                Evaluation { value: z.exp(), error: 0.0, reduced_accuracy: false }
            }
            Family::F0 { kappa } => {
                let mut e = self.eval_cauchy_family(z, tol)?;
                e.value += kappa;
                e
            }
            Family::Fp { k, .. } => {
                let mut e = self.eval_cauchy_family(z, tol)?;
                e.value -= k;
                e
            }
            Family::Pushforward { base, phi, psi } => {
                let scale = psi.linear().norm();
                let inner_tol = (tol / scale).min(MAX_QUAD_TOL);
                let w = phi.inverse().apply(z);
                let e = base.eval(w, inner_tol).map_err(|err| match err {
                    EvalError::Overflow { log_modulus } => {
                        EvalError::Overflow { log_modulus: log_modulus.map(|l| l + scale.ln()) }
                    }
                    other => other,
                })?;
                Evaluation { value: psi.apply(e.value), error: e.error * scale, reduced_accuracy: e.reduced_accuracy }
            }
        };
        check_overflow(out)
    }

    /// `ln|f(z)|`, also when `|f(z)|` overflows but its logarithm is known in closed form.
    pub fn log_modulus(&self, z: Complex64, tol: f64) -> Result<f64, EvalError> {
        match self.eval(z, tol) {
            Ok(e) => Ok(e.value.norm().ln()),
            Err(EvalError::Overflow { log_modulus: Some(l) }) if l.is_finite() => Ok(l),
            Err(e) => Err(e),
        }
    }

    /// The raw contour integral (Cauchy families only).
    pub fn integral_part(&self, z: Complex64, tol: f64) -> Result<Quadrature, EvalError> {
        match &self.integrator {
            Some(integ) => integ.cauchy(z, tol),
            None => Err(EvalError::Domain("model has no defining contour".into())),
        }
    }

    /// `ε·corr(z)`, the term added to the integral inside the region (Cauchy families only).
    pub fn continuation_term(&self, z: Complex64) -> Option<Complex64> {
        self.contour_family().map(|f| f.density(z) * continuation_sign())
    }

    fn eval_cauchy_family(&self, z: Complex64, tol: f64) -> Result<Evaluation, EvalError> {
        let integ = self.integrator.as_ref().expect("Cauchy family carries an integrator");
        let family = integ.contour().family;
        let prox = family.proximity(z);
        if prox.distance < DEFAULT_BOUNDARY_BAND {
            return self.eval_recentred(integ, z, prox, tol);
        }
        if prox.inside {
            let log_corr = log_modulus_of_exp_exp(inner_log(family, z));
            if log_corr > LOG_OVERFLOW_MODULUS {
                return Err(EvalError::Overflow { log_modulus: log_corr.is_finite().then_some(log_corr) });
            }
            let q = integ.cauchy(z, tol)?;
            let corr = if log_corr < -745.0 { Complex64::new(0.0, 0.0) } else { family.density(z) };
            Ok(Evaluation { value: q.value + corr * continuation_sign(), error: q.error, reduced_accuracy: false })
        } else {
            let q = integ.cauchy(z, tol)?;
            Ok(Evaluation { value: q.value, error: q.error, reduced_accuracy: false })
        }
    }

    /// Taylor expansion about a point `2δ` off the contour on the side of `z`.
    fn eval_recentred(
        &self,
        integ: &CauchyIntegrator,
        z: Complex64,
        prox: Proximity,
        tol: f64,
    ) -> Result<Evaluation, EvalError> {
        let family = integ.contour().family;
        let band = DEFAULT_BOUNDARY_BAND;
        let center = recentre(family, z, prox, band);
        let h = z - center;
        let hn = h.norm();

        let series = integ.integrate(
            center,
            tol,
            |t| {
                let r = (t - center).inv();
                let q = h * r;
                r * (((q + 1.0) * q + 1.0) * q + 1.0)
            },
            |d| (0..TAYLOR_TERMS as i32).map(|k| (hn / d).powi(k)).sum::<f64>() / d,
        )?;
        let next = integ.integrate(
            center,
            tol,
            |t| {
                let r = (t - center).inv();
                r * (h * r).powi(TAYLOR_TERMS as i32)
            },
            |d| (hn / d).powi(TAYLOR_TERMS as i32) / d,
        )?;
        let mut value = series.value;
        let mut next_term = next.value;

        if family.contains(center) {
            let log_corr = log_modulus_of_exp_exp(inner_log(family, center));
            if log_corr > LOG_OVERFLOW_MODULUS {
                return Err(EvalError::Overflow { log_modulus: log_corr.is_finite().then_some(log_corr) });
            }
            if log_corr > -700.0 {
                let jet = corr_jet(family, center).scale(continuation_sign());
                value += jet.sum(h, TAYLOR_TERMS);
                next_term += jet.c[TAYLOR_TERMS] * h.powi(TAYLOR_TERMS as i32);
            }
        }
        let remainder = next_term.norm();
        Ok(Evaluation { value, error: series.error + remainder, reduced_accuracy: remainder > tol })
    }
}

/// `w` such that the continuation term is `exp(e^w)`.
fn inner_log(family: ContourFamily, z: Complex64) -> Complex64 {
    match family {
        ContourFamily::Strip => z,
        ContourFamily::Curved { p } => z.ln().powf(1.0 + p),
    }
}

fn corr_jet(family: ContourFamily, center: Complex64) -> Jet {
    let z = Jet::variable(center);
    match family {
        ContourFamily::Strip => z.exp().exp(),
        ContourFamily::Curved { p } => z.ln().powf(1.0 + p).exp().exp(),
    }
}

/// A centre at distance `≥ band` from the contour, `2·band` from the nearest
/// contour point in the direction of `z` when possible.
fn recentre(family: ContourFamily, z: Complex64, prox: Proximity, band: f64) -> Complex64 {
    let mut directions = Vec::with_capacity(17);
    if prox.distance > 1e-12 {
        directions.push((z - prox.nearest) / prox.distance);
    }
    let mut fan: Vec<Complex64> = (0..16).map(|k| Complex64::from_polar(1.0, PI * k as f64 / 8.0)).collect();
    fan.sort_by(|a, b| {
        let da = family.proximity(prox.nearest + a * (2.0 * band)).distance;
        let db = family.proximity(prox.nearest + b * (2.0 * band)).distance;
        db.total_cmp(&da)
    });
    directions.extend(fan);
    for dir in &directions {
        for mult in [2.0, 3.0, 4.0] {
            let c = prox.nearest + dir * (mult * band);
            if family.proximity(c).distance >= band {
                return c;
            }
        }
    }
    prox.nearest + directions[0] * (2.0 * band)
}

fn check_overflow(e: Evaluation) -> Result<Evaluation, EvalError> {
    let m = e.value.norm();
    if m > OVERFLOW_MODULUS {
        let l = m.ln();
        return Err(EvalError::Overflow { log_modulus: l.is_finite().then_some(l) });
    }
    if !m.is_finite() {
        return Err(EvalError::Overflow { log_modulus: None });
    }
    Ok(e)
}

/// `max_{|z|=r} |f(z)|` from `n_samples` equally spaced points, polished by
/// golden-section search around the best sample.
pub fn max_modulus(model: &FunctionModel, r: f64, n_samples: usize) -> Result<f64, EvalError> {
    let tol = model.quad_tol();
    let f = |theta: f64| match model.eval(Complex64::from_polar(r, theta), tol) {
        Ok(e) => Ok(e.value.norm()),
        Err(EvalError::Overflow { log_modulus }) => Err(EvalError::OverflowOnCircle { angle: theta, log_modulus }),
        Err(e) => Err(e),
    };
    circle_maximum(r, n_samples, f)
}

/// `ln M(r)`, tolerating overflow whenever the log-modulus is known.
pub fn log_max_modulus(model: &FunctionModel, r: f64, n_samples: usize) -> Result<f64, EvalError> {
    let tol = model.quad_tol();
    let f = |theta: f64| match model.log_modulus(Complex64::from_polar(r, theta), tol) {
        Err(EvalError::Overflow { log_modulus }) => Err(EvalError::OverflowOnCircle { angle: theta, log_modulus }),
        other => other,
    };
    circle_maximum(r, n_samples, f)
}

fn circle_maximum<F>(r: f64, n_samples: usize, f: F) -> Result<f64, EvalError>
where
    F: Fn(f64) -> Result<f64, EvalError>,
{
    if !(r > 0.0 && r.is_finite()) {
        return Err(EvalError::Domain(format!("radius {r} must be positive")));
    }
    if n_samples < 16 {
        return Err(EvalError::Domain(format!("need at least 16 samples, got {n_samples}")));
    }
    let step = 2.0 * PI / n_samples as f64;
    let mut best = (0.0, f64::NEG_INFINITY);
    for k in 0..n_samples {
        let theta = step * k as f64;
        let v = f(theta)?;
        if v > best.1 {
            best = (theta, v);
        }
    }
    let (mut lo, mut hi) = (best.0 - step, best.0 + step);
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = hi - g * (hi - lo);
    let mut d = lo + g * (hi - lo);
    let (mut fc, mut fd) = (f(c)?, f(d)?);
    for _ in 0..60 {
        if fc > fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - g * (hi - lo);
            fc = f(c)?;
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + g * (hi - lo);
            fd = f(d)?;
        }
    }
    Ok(best.1.max(fc).max(fd))
}

/// Samples used by [`growth_statistic`].
pub const GROWTH_SAMPLES: usize = 256;

/// `log log log M(r) / log log r`.
pub fn growth_statistic(model: &FunctionModel, r: f64) -> Result<f64, EvalError> {
    growth_statistic_with(model, r, GROWTH_SAMPLES).map(|(_, q)| q)
}

/// Returns `(ln M(r), statistic)`.
pub fn growth_statistic_with(model: &FunctionModel, r: f64, n_samples: usize) -> Result<(f64, f64), EvalError> {
    if !(r > std::f64::consts::E) {
        return Err(EvalError::Domain(format!("radius {r} must exceed e")));
    }
    let log_m = log_max_modulus(model, r, n_samples)?;
    if !(log_m > std::f64::consts::E) {
        return Err(EvalError::Domain(format!("M({r}) = exp({log_m}) does not exceed e^e")));
    }
    Ok((log_m, log_m.ln().ln() / r.ln().ln()))
}

/// `p = (2 − d)/(d − 1)` for `d ∈ (1, 2)`.
pub fn p_from_d(d: f64) -> Result<f64, EvalError> {
    if d > 1.0 && d < 2.0 {
        Ok((2.0 - d) / (d - 1.0))
    } else {
        Err(EvalError::Domain(format!("dimension {d} outside (1, 2)")))
    }
}

/// `d = 1 + 1/(1 + p)` for `p > 0`.
pub fn d_from_p(p: f64) -> Result<f64, EvalError> {
    if p > 0.0 && p.is_finite() {
        Ok(1.0 + 1.0 / (1.0 + p))
    } else {
        Err(EvalError::Domain(format!("exponent {p} must be positive")))
    }
}

/// JSON form of a model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub family: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kappa: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    #[serde(rename = "K", default, skip_serializing_if = "Option::is_none")]
    pub k: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phi: Option<AffineMap>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub psi: Option<AffineMap>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub base: Option<Box<ModelConfig>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub quad_tol: Option<f64>,
}

impl ModelConfig {
    pub fn build(&self) -> Result<FunctionModel, ModelError> {
        let tol = self.quad_tol.unwrap_or(DEFAULT_QUAD_TOL);
        match self.family.as_str() {
            "F0" => {
                let [re, im] = self.kappa.unwrap_or([0.0, 0.0]);
                FunctionModel::f0_with_tol(Complex64::new(re, im), tol)
            }
            "fp" => {
                let p = self.p.ok_or_else(|| ModelError::Config("family \"fp\" needs \"p\"".into()))?;
                FunctionModel::fp_with_tol(p, self.k.unwrap_or(0.0), tol)
            }
            "exp" => FunctionModel::exponential().with_quad_tol(tol),
            "pushforward" => {
                let base = self.base.as_ref().ok_or_else(|| ModelError::Config("pushforward needs \"base\"".into()))?;
                let mut base = base.build()?;
                if self.quad_tol.is_some() {
                    base = base.with_quad_tol(tol)?;
                }
                let phi = self.phi.unwrap_or_else(AffineMap::identity);
                let psi = self.psi.unwrap_or_else(AffineMap::identity);
                Ok(FunctionModel {
                    family: Family::Pushforward { base: Box::new(base), phi, psi },
                    quad_tol: tol,
                    integrator: None,
                })
            }
            other => Err(ModelError::Config(format!("unknown family {other:?}"))),
        }
    }
}

impl From<&FunctionModel> for ModelConfig {
    fn from(m: &FunctionModel) -> ModelConfig {
        let mut cfg = ModelConfig {
            family: String::new(),
            kappa: None,
            p: None,
            k: None,
            phi: None,
            psi: None,
            base: None,
            quad_tol: Some(m.quad_tol),
        };
        match &m.family {
            Family::F0 { kappa } => {
                cfg.family = "F0".into();
                cfg.kappa = Some([kappa.re, kappa.im]);
            }
            Family::Fp { p, k } => {
                cfg.family = "fp".into();
                cfg.p = Some(*p);
                cfg.k = Some(*k);
            }
            Family::Exponential => cfg.family = "exp".into(),
            Family::Pushforward { base, phi, psi } => {
                cfg.family = "pushforward".into();
                cfg.phi = Some(*phi);
                cfg.psi = Some(*psi);
                cfg.base = Some(Box::new(ModelConfig::from(base.as_ref())));
            }
        }
        cfg
    }
}

impl Serialize for FunctionModel {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        ModelConfig::from(self).serialize(s)
    }
}

impl<'de> Deserialize<'de> for FunctionModel {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        ModelConfig::deserialize(d)?.build().map_err(serde::de::Error::custom)
    }
}
