use entire_lab::dimension::{
    box_count, box_count_with_offsets, default_scales, estimate_edim, estimate_set_dimension, fit_dimension,
    DimensionError, DimensionRun, GridGeometry, Target,
};
use entire_lab::dynamics::Window;
use entire_lab::model::FunctionModel;
use num_complex::Complex64;
use proptest::prelude::*;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn geom(n: usize) -> GridGeometry {
    GridGeometry { origin: c(0.0, 0.0), cell: 1.0, nx: n, ny: n }
}

#[test]
fn box_count_examples() {
    let g = geom(64);
    let scales = [32.0, 16.0, 8.0, 4.0, 2.0, 1.0];
    let all: Vec<usize> = (0..64 * 64).collect();
    let full = box_count(&all, &g, &scales).unwrap();
    assert_eq!(full.counts, vec![4, 16, 64, 256, 1024, 4096]);
    let row: Vec<usize> = (32 * 64..33 * 64).collect();
    assert_eq!(box_count(&row, &g, &scales).unwrap().counts, vec![2, 4, 8, 16, 32, 64]);
    assert_eq!(box_count(&[1234], &g, &scales).unwrap().counts, vec![1; 6]);

    let est = fit_dimension(&full).unwrap();
    assert!((est.slope - 2.0).abs() < 0.01 && est.r2 > 0.999);
}

#[test]
fn exponential_small_radius_calibration() {
    // at R = 50 the window has no I_R cells; a small R exposes the escaping set
    let exp = FunctionModel::exponential();
    let w = Window::square(c(0.0, 0.0), 2.0).unwrap();
    let slopes: Vec<f64> = [256, 512]
        .iter()
        .map(|&n| estimate_set_dimension(&exp, w, (n, n), 30, 100.0, 1e-3, Target::IR).unwrap().slope)
        .collect();
    assert!(slopes.iter().all(|&s| s >= 1.85), "{slopes:?}");
    assert!((slopes[0] - slopes[1]).abs() <= 0.1);
    let empty = estimate_set_dimension(&exp, w, (128, 128), 30, 100.0, 50.0, Target::IR).unwrap_err();
    assert_eq!(empty, DimensionError::EmptySet);
}

#[test]
fn exponential_radius_sweep() {
    let exp = FunctionModel::exponential();
    let w = Window::square(c(5.0, 0.0), 2.0).unwrap();
    let rep = estimate_edim(&exp, w, (256, 256), 20, 1e4, &[20.0, 50.0, 100.0]).unwrap();
    let slopes: Vec<f64> = rep.entries.iter().map(|(_, e)| e.as_ref().unwrap().slope).collect();
    let spread = slopes.iter().cloned().fold(f64::MIN, f64::max) - slopes.iter().cloned().fold(f64::MAX, f64::min);
    assert!(spread <= 0.1, "{slopes:?}");
    assert_eq!(rep.sandwich_ok, Some(true));
}

#[test]
fn guards() {
    let exp = FunctionModel::exponential();
    let w = Window::square(c(0.0, 0.0), 2.0).unwrap();
    assert!(matches!(
        estimate_set_dimension(&exp, w, (2, 2), 10, 100.0, 1e-3, Target::IR),
        Err(DimensionError::InsufficientScales { .. })
    ));
    let rect = Window::new(c(0.0, 0.0), 2.0, 1.0).unwrap();
    assert!(matches!(
        estimate_set_dimension(&exp, rect, (64, 64), 10, 100.0, 1e-3, Target::IR),
        Err(DimensionError::NonSquareCells { .. })
    ));
    let far = estimate_edim(&exp, w, (128, 128), 10, 1e6, &[1e5]).unwrap();
    assert_eq!(far.entries[0].1, Err(DimensionError::EmptySet));
    assert!(estimate_edim(&exp, w, (64, 64), 10, 100.0, &[50.0, 20.0]).is_err());
}

#[test]
fn estimate_replays_from_metadata() {
    let exp = FunctionModel::exponential();
    let w = Window::square(c(0.0, 0.0), 2.0).unwrap();
    let est = estimate_set_dimension(&exp, w, (128, 128), 20, 100.0, 1e-3, Target::IR).unwrap();
    let run: DimensionRun = serde_json::from_value(est.params.clone()).unwrap();
    let again = run.execute().unwrap();
    assert_eq!(again.counts, est.counts);
    assert_eq!(again.slope.to_bits(), est.slope.to_bits());
    let side = est.sidecar();
    assert_eq!(side["proxy"], "upper-box-count");
    let mut csv = Vec::new();
    est.write_csv(&mut csv).unwrap();
    assert!(String::from_utf8(csv).unwrap().starts_with("scale,count\n"));
}

fn arb_cells() -> impl Strategy<Value = (usize, Vec<usize>)> {
    (7u32..10).prop_flat_map(|e| {
        let n = 1usize << e;
        (Just(n), prop::collection::vec(0..n * n, 1..200))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn counts_monotone_and_bounded((n, cells) in arb_cells()) {
        let g = geom(n);
        let scales = default_scales(&g).unwrap();
        let bc = box_count(&cells, &g, &scales).unwrap();
        for w in bc.counts.windows(2) {
            prop_assert!(w[0] <= w[1] && w[1] <= 4 * w[0]);
        }
        let mut distinct = cells.clone();
        distinct.sort_unstable();
        distinct.dedup();
        prop_assert!(*bc.counts.last().unwrap() <= distinct.len() as u64);
    }

    #[test]
    fn offsets_dominate_single_anchor((n, cells) in arb_cells()) {
        let g = geom(n);
        let scales = default_scales(&g).unwrap();
        let one = box_count(&cells, &g, &scales).unwrap();
        let four = box_count_with_offsets(&cells, &g, &scales, true).unwrap();
        for (a, b) in one.counts.iter().zip(&four.counts) {
            prop_assert!(b >= a);
        }
    }

    #[test]
    fn fit_recovers_power_law(d in 0.2f64..2.0, c0 in 1.0f64..50.0) {
        let scales: Vec<f64> = (0..6).map(|k| 2f64.powi(-k)).collect();
        let counts: Vec<u64> = scales.iter().map(|s| (c0 * s.powf(-d) * 1e6).round() as u64).collect();
        let est = fit_dimension(&entire_lab::dimension::BoxCounts::new(scales, counts)).unwrap();
        prop_assert!((est.slope - d).abs() < 1e-6);
    }
}
