//! Affine equivalence `ψ∘f = g∘φ` and the quasiconformal distortion formulas
//! that accompany it.

use num_complex::Complex64;
use thiserror::Error;

use crate::model::{AffineMap, FunctionModel};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RigidityError {
    #[error("{0}")]
    Domain(String),
    #[error("all {0} samples were filtered out")]
    AllSamplesFiltered(usize),
}

/// `D = (K+1)/(K−1)` for `K > 1`.
pub fn disc_radius(k: f64) -> Result<f64, RigidityError> {
    if k > 1.0 && k.is_finite() {
        Ok((k + 1.0) / (k - 1.0))
    } else {
        Err(RigidityError::Domain(format!("dilatation K = {k} must exceed 1")))
    }
}

/// `(D+|λ|)/(D−|λ|)` for `|λ| < D`.
pub fn dilatation_at(d: f64, lambda: Complex64) -> Result<f64, RigidityError> {
    let l = lambda.norm();
    if l < d && d.is_finite() {
        Ok((d + l) / (d - l))
    } else {
        Err(RigidityError::Domain(format!("|lambda| = {l} must be below D = {d}")))
    }
}

/// `dim(A)/K`, the dimension guaranteed for the image of `A` under a
/// `K`-quasiconformal map.
pub fn qc_dim_lower_bound(dim_in: f64, k: f64) -> Result<f64, RigidityError> {
    if !(0.0..=2.0).contains(&dim_in) {
        return Err(RigidityError::Domain(format!("dimension {dim_in} outside [0, 2]")));
    }
    if !(k >= 1.0 && k.is_finite()) {
        return Err(RigidityError::Domain(format!("dilatation K = {k} below 1")));
    }
    Ok(dim_in / k)
}

/// A dilatation target with its disc radius and a parameter inside the disc.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DilatationBudget {
    pub k: f64,
    pub d: f64,
    pub lambda: Complex64,
}

impl DilatationBudget {
    pub fn new(k: f64, lambda: Complex64) -> Result<DilatationBudget, RigidityError> {
        let d = disc_radius(k)?;
        dilatation_at(d, lambda)?;
        Ok(DilatationBudget { k, d, lambda })
    }

    pub fn bound(&self) -> f64 {
        (self.d + self.lambda.norm()) / (self.d - self.lambda.norm())
    }
}

/// `g = ψ∘f∘φ⁻¹`.
pub fn affine_pushforward(f: &FunctionModel, phi: AffineMap, psi: AffineMap) -> FunctionModel {
    FunctionModel::pushforward(f, phi, psi)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Residual {
    pub residual: f64,
    pub retained: usize,
    /// Samples dropped for lying in a boundary band, overflowing, or failing to evaluate.
    pub filtered: Vec<Complex64>,
}

/// `max |ψ(f(z)) − g(φ(z))|` over the samples that both sides evaluate cleanly.
pub fn equivalence_residual(
    f: &FunctionModel,
    g: &FunctionModel,
    phi: AffineMap,
    psi: AffineMap,
    samples: &[Complex64],
    tol: f64,
) -> Result<Residual, RigidityError> {
    let mut residual: f64 = 0.0;
    let mut retained = 0;
    let mut filtered = Vec::new();
    for &z in samples {
        let w = phi.apply(z);
        if f.near_contour(z) || g.near_contour(w) {
            filtered.push(z);
            continue;
        }
        match (f.eval(z, tol), g.eval(w, tol)) {
            (Ok(a), Ok(b)) if !a.reduced_accuracy && !b.reduced_accuracy => {
                residual = residual.max((psi.apply(a.value) - b.value).norm());
                retained += 1;
            }
            _ => filtered.push(z),
        }
    }
    if retained == 0 {
        return Err(RigidityError::AllSamplesFiltered(samples.len()));
    }
    Ok(Residual { residual, retained, filtered })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn radius_and_dilatation() {
        assert_eq!(disc_radius(3.0).unwrap(), 2.0);
        assert_eq!(disc_radius(2.0).unwrap(), 3.0);
        assert!((disc_radius(1.01).unwrap() - 201.0).abs() < 1e-9);
        assert!(disc_radius(1.0).is_err());
        assert_eq!(dilatation_at(2.0, c(1.0, 0.0)).unwrap(), 3.0);
        assert_eq!(dilatation_at(2.0, c(0.0, 0.0)).unwrap(), 1.0);
        assert_eq!(dilatation_at(3.0, c(0.0, 1.0)).unwrap(), 2.0);
        assert!(dilatation_at(2.0, c(2.0, 0.0)).is_err());
    }

    #[test]
    fn dimension_bound() {
        assert_eq!(qc_dim_lower_bound(2.0, 1.0).unwrap(), 2.0);
        assert!((qc_dim_lower_bound(1.8, 1.5).unwrap() - 1.2).abs() < 1e-15);
        let k = dilatation_at(2.0, c(1.0, 0.0)).unwrap();
        assert!((qc_dim_lower_bound(1.9, k).unwrap() - 1.9 / 3.0).abs() < 1e-15);
        assert!(qc_dim_lower_bound(2.5, 1.0).is_err());
        assert!(qc_dim_lower_bound(1.0, 0.5).is_err());
    }

    #[test]
    fn budget() {
        let b = DilatationBudget::new(3.0, c(0.6, 0.8)).unwrap();
        assert_eq!(b.d, 2.0);
        assert!((b.bound() - 3.0).abs() < 1e-12);
        assert!(DilatationBudget::new(3.0, c(2.0, 0.0)).is_err());
    }

    #[test]
    fn exponential_rescaling() {
        let exp = FunctionModel::exponential();
        let phi = AffineMap::scaling(c(2.0, 0.0)).unwrap();
        let g = affine_pushforward(&exp, phi, AffineMap::identity());
        let z = c(0.7, -1.3);
        assert!((g.value(z).unwrap().value - (z / 2.0).exp()).norm() < 1e-15);
        let samples: Vec<_> = (0..10).map(|k| c(k as f64 * 0.3 - 1.5, 1.0 - k as f64 * 0.2)).collect();
        let res = equivalence_residual(&exp, &g, phi, AffineMap::identity(), &samples, 1e-8).unwrap();
        assert!(res.residual <= 1e-12);
        assert_eq!(res.retained, 10);
    }

    #[test]
    fn mismatched_pair() {
        let exp = FunctionModel::exponential();
        let plus_one = affine_pushforward(&exp, AffineMap::identity(), AffineMap::translation(c(1.0, 0.0)));
        let samples = [c(0.0, 0.0), c(-1.0, 2.0), c(0.5, 0.5)];
        let id = AffineMap::identity();
        let res = equivalence_residual(&exp, &plus_one, id, id, &samples, 1e-8).unwrap();
        assert!((res.residual - 1.0).abs() < 1e-15);
    }

    #[test]
    fn everything_filtered() {
        let exp = FunctionModel::exponential();
        let id = AffineMap::identity();
        let err = equivalence_residual(&exp, &exp, id, id, &[c(900.0, 0.0)], 1e-8).unwrap_err();
        assert_eq!(err, RigidityError::AllSamplesFiltered(1));
    }
}
