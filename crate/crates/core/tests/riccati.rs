use kklab_core::riccati::{riccati_closed_form, riccati_perturbative, riccati_trajectory, RiccatiModel};
use proptest::prelude::*;

fn max_gap(beta: f64, alpha: f64, k0: f64) -> f64 {
    (0..=100)
        .map(|i| {
            let m = RiccatiModel::constant(alpha, beta, k0).unwrap();
            let t = i as f64 * 0.01;
            (riccati_perturbative(&m, t).unwrap().value - riccati_closed_form(&m, t).unwrap()).abs()
        })
        .fold(0.0, f64::max)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    // The first-order expansion misses k₀e^G·x²/(1 + x), x = (4/5)βk₀F,
    // so scaling β by 4 scales the gap by ~16 while x stays small.
    #[test]
    fn perturbative_gap_is_second_order(alpha in -1.0f64..1.0, k0 in 0.2f64..2.0, beta in 1e-3f64..5e-3) {
        let ratio = max_gap(4.0 * beta, alpha, k0) / max_gap(beta, alpha, k0);
        prop_assert!((13.0..=16.0 + 1e-6).contains(&ratio), "ratio {}", ratio);
    }
}

#[test]
fn trajectory_columns_agree() {
    let m = RiccatiModel::constant(1.0, 0.1, 1.0).unwrap();
    let grid: Vec<f64> = (0..=50).map(|i| i as f64 * 0.04).collect();
    let rows = riccati_trajectory(&m, &grid, 10_000).unwrap();
    assert_eq!(rows.len(), 51);
    for r in &rows {
        assert!((r.k_numeric - r.k_closed).abs() < 1e-7 * r.k_closed);
        assert!(r.k_perturbative <= r.k_closed);
    }
}
