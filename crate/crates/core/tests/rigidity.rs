use entire_lab::model::{AffineMap, FunctionModel};
use entire_lab::rigidity::{
    affine_pushforward, dilatation_at, disc_radius, equivalence_residual, qc_dim_lower_bound, DilatationBudget,
};
use num_complex::Complex64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

#[test]
fn examples() {
    assert_eq!(disc_radius(3.0).unwrap(), 2.0);
    assert_eq!(dilatation_at(2.0, c(1.0, 0.0)).unwrap(), 3.0);
    assert_eq!(dilatation_at(3.0, c(0.0, 1.0)).unwrap(), 2.0);
    let k = dilatation_at(2.0, c(1.0, 0.0)).unwrap();
    assert!((qc_dim_lower_bound(1.9, k).unwrap() - 0.633_333_333_333_333_3).abs() < 1e-15);
}

#[test]
fn f0_translation_pair() {
    let f0 = FunctionModel::f0(c(0.0, 0.0)).unwrap();
    let psi = AffineMap::translation(c(-4.0, 0.0));
    let g = affine_pushforward(&f0, AffineMap::identity(), psi);
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let samples: Vec<_> = (0..20).map(|_| c(rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0))).collect();
    let res = equivalence_residual(&f0, &g, AffineMap::identity(), psi, &samples, 1e-8).unwrap();
    assert!(res.residual <= 1e-7);
    assert_eq!(res.retained + res.filtered.len(), 20);
}

#[test]
fn mismatched_pair_is_one() {
    let exp = FunctionModel::exponential();
    let g = affine_pushforward(&exp, AffineMap::identity(), AffineMap::translation(c(1.0, 0.0)));
    let id = AffineMap::identity();
    let res = equivalence_residual(&exp, &g, id, id, &[c(0.1, 0.2), c(-2.0, 3.0)], 1e-8).unwrap();
    assert_eq!(res.residual, 1.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn unit_lambda_recovers_k(k in 1.0001f64..100.0, theta in 0.0f64..std::f64::consts::TAU) {
        let d = disc_radius(k).unwrap();
        let kl = dilatation_at(d, Complex64::from_polar(1.0, theta)).unwrap();
        prop_assert!((kl - k).abs() <= 1e-10 * k);
    }

    #[test]
    fn dilatation_grows_with_lambda(k in 1.01f64..50.0, a in 0.0f64..1.0, b in 0.0f64..1.0) {
        let d = disc_radius(k).unwrap();
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        let kl = dilatation_at(d, c(lo * d * 0.99, 0.0)).unwrap();
        let kh = dilatation_at(d, c(hi * d * 0.99, 0.0)).unwrap();
        prop_assert!(kl >= 1.0 && kh >= kl);
        let budget = DilatationBudget::new(k, c(0.0, hi * d * 0.99)).unwrap();
        prop_assert!((budget.bound() - kh).abs() <= 1e-12 * kh);
    }

    #[test]
    fn bound_never_exceeds_input(dim in 0.0f64..2.0, k in 1.0f64..100.0) {
        let lb = qc_dim_lower_bound(dim, k).unwrap();
        prop_assert!(lb <= dim && lb >= 0.0);
    }

    #[test]
    fn exponential_pairs_match(ar in 0.5f64..3.0, ai in -1.0f64..1.0, br in -1.0f64..1.0, bi in -1.0f64..1.0) {
        let exp = FunctionModel::exponential();
        let phi = AffineMap::new(c(ar, ai), c(br, bi)).unwrap();
        let psi = AffineMap::new(c(ai, ar), c(bi, br)).unwrap();
        let g = affine_pushforward(&exp, phi, psi);
        let samples: Vec<_> = (0..10).map(|k| c(-2.0 + 0.4 * k as f64, 1.5 - 0.3 * k as f64)).collect();
        let res = equivalence_residual(&exp, &g, phi, psi, &samples, 1e-8).unwrap();
        prop_assert!(res.residual <= 1e-7);
    }
}
