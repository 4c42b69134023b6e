use heatctrl_core::fdsolver::{
    constant_with_zero_corners, fourier_free_heat, norms, simulate, update_residual,
};
use heatctrl_core::mesh::strengthened_cfl;
use heatctrl_core::{make_meshes, BoundaryControl, Grid1D, Nonlinearity, TimeGrid};
use proptest::prelude::*;
use proptest::test_runner::{Config, RngSeed};

fn config(cases: u32) -> Config {
    Config {
        cases,
        rng_seed: RngSeed::Fixed(0x5eed),
        failure_persistence: None,
        ..Config::default()
    }
}

/// Random control whose first samples match the corners of `y0`.
fn control_for(y0: &[f64], left: &[f64], right: &[f64]) -> BoundaryControl {
    let mut l = left.to_vec();
    let mut r = right.to_vec();
    l[0] = y0[0];
    r[0] = *y0.last().unwrap();
    BoundaryControl::new(l, r).unwrap()
}

fn data(
    nx: usize,
    nt: usize,
    lo: f64,
    hi: f64,
) -> impl Strategy<Value = (Vec<f64>, Vec<f64>, Vec<f64>)> {
    (
        prop::collection::vec(lo..hi, nx + 1),
        prop::collection::vec(lo..hi, nt + 1),
        prop::collection::vec(lo..hi, nt + 1),
    )
}

proptest! {
    #![proptest_config(config(100))]

    #[test]
    fn linear_scheme_obeys_max_principle(
        (nx, dt, nt, (y0, l, r)) in (3usize..24, 0.05f64..=0.5).prop_flat_map(|(nx, ratio)| {
            let dx = 1.0 / nx as f64;
            let dt = ratio * dx * dx;
            let nt = (0.05 / dt).ceil() as usize;
            (Just(nx), Just(dt), Just(nt), data(nx, nt, -3.0, 7.0))
        }),
    ) {
        let grid = Grid1D::new(nx).unwrap();
        let tgrid = TimeGrid::new(nt as f64 * dt, nt).unwrap();
        prop_assume!(tgrid.cfl_ok(&grid));
        let u = control_for(&y0, &l, &r);
        let out = simulate(&y0, &u, &Nonlinearity::Zero, &grid, &tgrid).unwrap();

        let all = y0.iter().chain(u.left()).chain(u.right());
        let lo = all.clone().copied().fold(f64::INFINITY, f64::min);
        let hi = all.copied().fold(f64::NEG_INFINITY, f64::max);
        let traj = out.trajectory;
        prop_assert!(traj.min_value() >= lo, "{} < {}", traj.min_value(), lo);
        prop_assert!(traj.max_value() <= hi, "{} > {}", traj.max_value(), hi);
    }

    #[test]
    fn semilinear_scheme_preserves_nonnegativity(
        nx in 3usize..24,
        frac in 0.2f64..=1.0,
        y0 in prop::collection::vec(0.0f64..3.0, 25),
        l in prop::collection::vec(0.0f64..3.0, 2000),
        r in prop::collection::vec(0.0f64..3.0, 2000),
    ) {
        let f = Nonlinearity::SinPi;
        let grid = Grid1D::new(nx).unwrap();
        let dt = frac * strengthened_cfl(&grid, f.lipschitz());
        let nt = ((0.05 / dt).ceil() as usize).min(1999);
        let tgrid = TimeGrid::new(nt as f64 * dt, nt).unwrap();
        let y0 = &y0[..=nx];
        let u = control_for(y0, &l[..=nt], &r[..=nt]);
        let out = simulate(y0, &u, &f, &grid, &tgrid).unwrap();
        prop_assert!(out.trajectory.min_value() >= -1e-12);
    }

    #[test]
    fn ordered_data_give_ordered_states(
        nx in 3usize..16,
        base in prop::collection::vec(-1.0f64..2.0, 17),
        lift in prop::collection::vec(0.0f64..1.0, 17),
        ul in prop::collection::vec(-1.0f64..2.0, 400),
        ur in prop::collection::vec(-1.0f64..2.0, 400),
        dl in prop::collection::vec(0.0f64..1.0, 400),
        dr in prop::collection::vec(0.0f64..1.0, 400),
    ) {
        let f = Nonlinearity::SinPi;
        let grid = Grid1D::new(nx).unwrap();
        let dt = strengthened_cfl(&grid, f.lipschitz());
        let nt = ((0.05 / dt).ceil() as usize).min(399);
        let tgrid = TimeGrid::new(nt as f64 * dt, nt).unwrap();

        let ya: Vec<f64> = base[..=nx].to_vec();
        let yb: Vec<f64> = ya.iter().zip(&lift).map(|(a, d)| a + d).collect();
        let ua = control_for(&ya, &ul[..=nt], &ur[..=nt]);
        let lb: Vec<f64> = ua.left().iter().zip(&dl).map(|(a, d)| a + d).collect();
        let rb: Vec<f64> = ua.right().iter().zip(&dr).map(|(a, d)| a + d).collect();
        let ub = control_for(&yb, &lb, &rb);

        let a = simulate(&ya, &ua, &f, &grid, &tgrid).unwrap().trajectory;
        let b = simulate(&yb, &ub, &f, &grid, &tgrid).unwrap().trajectory;
        for (x, y) in a.values().iter().zip(b.values()) {
            prop_assert!(x <= y);
        }
    }

    #[test]
    fn update_identity_holds_to_round_off(
        nx in 3usize..20,
        y0 in prop::collection::vec(-2.0f64..2.0, 21),
        l in prop::collection::vec(-2.0f64..2.0, 300),
        r in prop::collection::vec(-2.0f64..2.0, 300),
        which in 0usize..3,
    ) {
        let f = [Nonlinearity::Zero, Nonlinearity::SinPi, Nonlinearity::LinearPotential(-3.0)][which].clone();
        let grid = Grid1D::new(nx).unwrap();
        let dt = strengthened_cfl(&grid, f.lipschitz());
        let nt = ((0.02 / dt).ceil() as usize).min(299);
        let tgrid = TimeGrid::new(nt as f64 * dt, nt).unwrap();
        let y0 = &y0[..=nx];
        let u = control_for(y0, &l[..=nt], &r[..=nt]);
        let traj = simulate(y0, &u, &f, &grid, &tgrid).unwrap().trajectory;
        prop_assert!(update_residual(&traj, &u, &f) <= 1e-12);
        prop_assert_eq!(traj.row(0), y0);
        let edges = traj.boundary();
        prop_assert_eq!(edges.left(), u.left());
    }
}

fn fourier_error(nx: usize) -> f64 {
    let grid = Grid1D::new(nx).unwrap();
    let horizon = 0.05;
    let nt = (horizon / (0.4 * grid.dx() * grid.dx())).ceil() as usize;
    let tgrid = TimeGrid::new(horizon, nt).unwrap();
    let y0 = constant_with_zero_corners(&grid, 1.0);
    let out = simulate(
        &y0,
        &BoundaryControl::zeros(nt),
        &Nonlinearity::Zero,
        &grid,
        &tgrid,
    )
    .unwrap();
    out.trajectory
        .terminal()
        .iter()
        .enumerate()
        .map(|(j, y)| (y - fourier_free_heat(1.0, horizon, grid.node(j), 200)).abs())
        .fold(0.0, f64::max)
}

#[test]
fn free_heat_matches_fourier_series() {
    let coarse = fourier_error(40);
    let fine = fourier_error(80);
    assert!(coarse <= 5e-3, "nx=40 error {coarse}");
    assert!(fine <= 2e-3, "nx=80 error {fine}");
    assert!(fine < coarse);
}

#[test]
fn fourier_midpoint_value() {
    // direct evaluation of the odd-mode series with 50 terms
    let v = fourier_free_heat(1.0, 0.05, 0.5, 50);
    assert!((v - 0.7723116068585906).abs() < 1e-12, "{v}");
}

#[test]
fn dissipative_trajectories_contract() {
    let f = Nonlinearity::SinPi;
    let m = make_meshes(20, 1.0, 1000).unwrap();
    let grid = m.grid;
    let ya: Vec<f64> = grid.sample(|x| 1.0 + 0.5 * (3.0 * std::f64::consts::PI * x).sin());
    let yb: Vec<f64> =
        grid.sample(|x| 1.0 + 0.3 * (std::f64::consts::PI * x).sin() - 0.2 * x * (1.0 - x));
    let u = BoundaryControl::constant(1000, 1.0, 1.0);
    let a = simulate(&ya, &u, &f, &grid, &m.tgrid).unwrap().trajectory;
    let b = simulate(&yb, &u, &f, &grid, &m.tgrid).unwrap().trajectory;
    let gap = |i: usize| {
        let d: Vec<f64> = a.row(i).iter().zip(b.row(i)).map(|(x, y)| x - y).collect();
        norms(&d).unwrap().l2
    };

    // least-squares rate of log gap over t in [0.2, 1]
    let samples: Vec<(f64, f64)> = (200..=1000)
        .step_by(50)
        .map(|i| (m.tgrid.time(i), gap(i).ln()))
        .collect();
    let n = samples.len() as f64;
    let (sx, sy) = samples
        .iter()
        .fold((0.0, 0.0), |(a, b), (x, y)| (a + x, b + y));
    let (mx, my) = (sx / n, sy / n);
    let (num, den) = samples.iter().fold((0.0, 0.0), |(p, q), (x, y)| {
        (p + (x - mx) * (y - my), q + (x - mx) * (x - mx))
    });
    let lambda = -num / den;
    assert!(lambda >= 5.0, "fitted rate {lambda}");
    assert!(lambda >= f.dissipation_rate() - 1e-9);

    let g0 = gap(0);
    for i in 0..=1000 {
        assert!(
            gap(i) <= g0 * (-lambda * m.tgrid.time(i) + 0.05).exp(),
            "step {i}"
        );
    }
}

#[test]
fn cfl_and_compatibility_are_enforced() {
    let m = make_meshes(20, 0.1, 10).unwrap();
    assert!(!m.cfl_ok);
    let y0 = vec![0.0; 21];
    let u = BoundaryControl::zeros(10);
    assert!(simulate(&y0, &u, &Nonlinearity::Zero, &m.grid, &m.tgrid).is_err());

    let m = make_meshes(20, 0.1, 1000).unwrap();
    let u = BoundaryControl::constant(1000, 1.0, 0.0);
    let err = simulate(&y0, &u, &Nonlinearity::Zero, &m.grid, &m.tgrid).unwrap_err();
    assert!(matches!(err, heatctrl_core::Error::IncompatibleData(_)));
}
