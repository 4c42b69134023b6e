//! Fixtures shared by the benchmarks.

use heatctrl_core::{make_meshes, BoundaryControl, Meshes, Nonlinearity};

/// Linear heat problem 1 -> 5 on `nx` cells over `horizon`, at ratio 0.1.
pub struct Fixture {
    pub meshes: Meshes,
    pub f: Nonlinearity,
    pub y0: Vec<f64>,
    pub target: Vec<f64>,
    pub reference: BoundaryControl,
}

pub fn fixture(f: Nonlinearity, nx: usize, horizon: f64, from: f64, to: f64) -> Fixture {
    let nt = (horizon * 10.0 * (nx * nx) as f64).ceil() as usize;
    let meshes = make_meshes(nx, horizon, nt).expect("valid meshes");
    let n = meshes.grid.len();
    Fixture {
        f,
        y0: vec![from; n],
        target: vec![to; n],
        reference: BoundaryControl::constant(nt, to, to),
        meshes,
    }
}
