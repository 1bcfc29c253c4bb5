use entire_lab::dynamics::{classify_grid, ir_candidates, iterate_orbit, jr_candidates, OrbitStatus, Window};
use entire_lab::model::{AffineMap, FunctionModel};
use num_complex::Complex64;
use proptest::prelude::*;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

#[test]
fn exponential_orbit_from_one() {
    let rec = iterate_orbit(&FunctionModel::exponential(), c(1.0, 0.0), 10, 100.0, 10.0).unwrap();
    assert!(matches!(rec.status, OrbitStatus::Escaped { at_step: 3 } | OrbitStatus::OverflowEscaped { at_step: 4 }));
    assert!((rec.iterates[0].re - 1f64.exp()).abs() < 1e-15);
    assert!((rec.moduli[1] - 1f64.exp().exp()).abs() < 1e-12);
}

#[test]
fn deep_kappa_settles_near_fixed_point() {
    let m = FunctionModel::f0(c(-100.0, 0.0)).unwrap();
    let rec = iterate_orbit(&m, c(0.0, 0.0), 50, 1000.0, 50.0).unwrap();
    assert_eq!(rec.status, OrbitStatus::BoundedHorizon);
    let last = *rec.iterates.last().unwrap();
    assert!((last - c(-100.0, 0.0)).norm() < 1.0);
    let prev = rec.iterates[rec.iterates.len() - 2];
    assert!((m.value(last).unwrap().value - last).norm() < 1e-9 && (last - prev).norm() < 1e-9);
}

#[test]
fn immediate_overflow() {
    let rec = iterate_orbit(&FunctionModel::exponential(), c(800.0, 0.0), 5, 100.0, 10.0).unwrap();
    assert_eq!(rec.status, OrbitStatus::OverflowEscaped { at_step: 1 });
}

#[test]
fn single_cell_grid_matches_orbit() {
    let m = FunctionModel::exponential();
    let w = Window::square(c(0.3, 0.2), 1.0).unwrap();
    let g = classify_grid(&m, w, (1, 1), 12, 100.0, 10.0).unwrap();
    let rec = iterate_orbit(&m, c(0.3, 0.2), 12, 100.0, 10.0).unwrap();
    assert_eq!(g.cells[0].status, rec.status);
    assert_eq!(g.cells[0].min_modulus, rec.min_modulus());
}

#[test]
fn exponential_grid_examples() {
    let m = FunctionModel::exponential();
    let w = Window::square(c(0.0, 0.0), 2.0).unwrap();
    let g20 = classify_grid(&m, w, (64, 64), 20, 50.0, 10.0).unwrap();
    assert!(g20.escaped_fraction() > 0.5, "{}", g20.escaped_fraction());
    let g40 = classify_grid(&m, w, (64, 64), 40, 50.0, 10.0).unwrap();
    for (a, b) in g20.cells.iter().zip(&g40.cells) {
        if a.status.escaped() {
            assert!(b.status.escaped());
            assert!(b.status.escape_step() <= a.status.escape_step());
        }
    }
    // right half plane: bounded-above-R orbits are rare
    let right = Window::square(c(3.0, 0.0), 0.5).unwrap();
    let g = classify_grid(&m, right, (32, 32), 20, 1000.0, 10.0).unwrap();
    let jr = jr_candidates(&g).len();
    let ir = ir_candidates(&g).len();
    assert!(jr > 0 && ir as f64 >= 0.9 * jr as f64, "ir {ir} jr {jr}");
}

#[test]
fn orbits_dipping_at_step_one_give_empty_sets() {
    // exp maps Re z < -5 into |w| < 0.01
    let m = FunctionModel::exponential();
    let w = Window::square(c(-8.0, 0.0), 1.0).unwrap();
    let g = classify_grid(&m, w, (16, 16), 10, 100.0, 1.0).unwrap();
    assert!(jr_candidates(&g).is_empty());
    assert!(ir_candidates(&g).is_empty());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn horizon_monotone(x in -3.0f64..3.0, y in -3.0f64..3.0, kr in -1.0f64..1.0, n in 2usize..20) {
        let m = FunctionModel::pushforward(&FunctionModel::exponential(), AffineMap::identity(), AffineMap::translation(c(kr, 0.0)));
        let short = iterate_orbit(&m, c(x, y), n, 100.0, 5.0).unwrap();
        let long = iterate_orbit(&m, c(x, y), 2 * n, 100.0, 5.0).unwrap();
        if short.status.escaped() {
            prop_assert_eq!(short.status, long.status);
        }
        let k = short.iterates.len().min(long.iterates.len());
        prop_assert_eq!(&short.iterates[..k], &long.iterates[..k]);
    }

    #[test]
    fn escaped_orbits_end_above_radius(x in -3.0f64..3.0, y in -3.0f64..3.0) {
        let rec = iterate_orbit(&FunctionModel::exponential(), c(x, y), 30, 100.0, 5.0).unwrap();
        if let OrbitStatus::Escaped { at_step } = rec.status {
            let m = rec.modulus_at(at_step).unwrap();
            prop_assert!(m >= 100.0);
            prop_assert!(rec.modulus_at(at_step + 1).is_none_or(|next| next > m));
        }
        if rec.status == OrbitStatus::BoundedHorizon {
            prop_assert!(rec.moduli.iter().all(|&r| r < 100.0));
        }
    }
}
