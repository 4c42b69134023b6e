use std::f64::consts::PI;

use heatctrl_core::bounds::{
    certificate_search, lower_bound_decreasing, lower_bound_increasing, pairing_value, ratio_grid,
};
use heatctrl_core::fdsolver::fourier_free_heat;
use heatctrl_core::{lower_bound, BoundCase, Grid1D};
use proptest::prelude::*;
use proptest::test_runner::{Config, RngSeed};

#[test]
fn reference_bounds() {
    let inc = lower_bound(1.0, 5.0).unwrap();
    assert_eq!(inc.case, BoundCase::Increasing);
    assert!((inc.bound - 0.0250020).abs() <= 1e-6);
    assert!((inc.bound - (36.0_f64 / 5.0).ln() / (8.0 * PI * PI)).abs() < 1e-15);
    let dec = lower_bound(5.0, 1.0).unwrap();
    assert_eq!(dec.case, BoundCase::Decreasing);
    assert!((dec.bound - 0.1630702).abs() <= 1e-6);
}

#[test]
fn decreasing_formula_inverts() {
    let r = lower_bound_decreasing((PI * PI).exp() * 0.3, 0.3).unwrap();
    assert!((r.bound - 1.0).abs() < 1e-12);
    assert_eq!(lower_bound_decreasing(2.0, 2.0).unwrap().bound, 0.0);
}

#[test]
fn vacuity_boundary() {
    // 9 (y1 - y0) = y1  <=>  y1 = 9/8 for y0 = 1
    assert!(lower_bound_increasing(1.0, 9.0 / 8.0).unwrap().bound.abs() < 1e-15);
    assert_eq!(lower_bound_increasing(1.0, 1.05).unwrap().bound, 0.0);
    let r = lower_bound_increasing(1.0, 2.0).unwrap();
    assert!((r.bound - 4.5_f64.ln() / (8.0 * PI * PI)).abs() < 1e-15);
}

#[test]
fn pairing_matches_quadrature_of_the_series() {
    let (alpha, beta, y0, y1, t) = (1.0, 1.0, 1.0, 5.0, 0.03);
    let grid = Grid1D::new(4000).unwrap();
    let integrand: Vec<f64> = (0..=grid.nx())
        .map(|j| {
            let x = grid.node(j);
            let z = fourier_free_heat(y0, t, x, 200);
            (y1 - z) * (-alpha * (PI * x).sin() + beta * (3.0 * PI * x).sin())
        })
        .collect();
    let quad: f64 = grid
        .trapezoid_weights()
        .iter()
        .zip(&integrand)
        .map(|(w, v)| w * v)
        .sum();
    let closed = pairing_value(alpha, beta, y0, y1, t);
    assert!((quad - closed).abs() <= 1e-3, "{quad} vs {closed}");
}

#[test]
fn searched_certificate_tracks_closed_form() {
    let closed = lower_bound_increasing(1.0, 5.0).unwrap().bound;
    let coarse = certificate_search(1.0, 5.0, &ratio_grid(0.1, 2.39, 1e-3)).unwrap();
    assert!((coarse.bound() - closed).abs() <= 1e-3);
    // refining toward the open end of the ratio range closes the gap
    let limit = 2.4;
    let fine = certificate_search(1.0, 5.0, &[limit * (1.0 - 1e-8)]).unwrap();
    assert!(fine.valid);
    assert!((fine.bound() - closed).abs() <= 1e-9);
}

proptest! {
    #![proptest_config(Config { cases: 200, rng_seed: RngSeed::Fixed(3), failure_persistence: None, ..Config::default() })]

    #[test]
    fn increasing_bound_is_monotone_in_target(y0 in 0.1f64..5.0, a in 0.0f64..10.0, b in 0.0f64..10.0) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let r1 = lower_bound_increasing(y0, y0 + lo + 1e-9).unwrap().bound;
        let r2 = lower_bound_increasing(y0, y0 + hi + 1e-9).unwrap().bound;
        prop_assert!(r1 <= r2 + 1e-15);
        prop_assert!(r1 >= 0.0 && r1.is_finite());
    }

    #[test]
    fn pairing_negative_inside_ratio_range(y0 in 0.1f64..5.0, gap in 0.1f64..10.0, s in 0.01f64..0.99, t in 0.0f64..1.0) {
        let y1 = y0 + gap;
        let ratio = s * 3.0 * (y1 - y0) / y1;
        prop_assert!(pairing_value(1.0, ratio, y0, y1, t) < 0.0);
    }
}
