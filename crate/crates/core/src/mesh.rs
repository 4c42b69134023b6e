//! Uniform space and time meshes on `[0, 1] x [0, T]`.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Relative slack applied to the CFL comparison so that grids sitting exactly
/// on the bound (e.g. `nx = 20`, `dt = 1/800`) are not rejected by rounding.
const CFL_SLACK: f64 = 1e-12;

/// Uniform grid of `nx` cells on the unit interval.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid1D {
    nx: usize,
    dx: f64,
}

impl Grid1D {
    pub const MIN_CELLS: usize = 3;

    pub fn new(nx: usize) -> Result<Self> {
        if nx < Self::MIN_CELLS {
            return Err(invalid(format!(
                "nx must be at least {}, got {nx}",
                Self::MIN_CELLS
            )));
        }
        Ok(Self {
            nx,
            dx: 1.0 / nx as f64,
        })
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    /// Number of nodes, `nx + 1`.
    pub fn len(&self) -> usize {
        self.nx + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    /// Node `x_j = j / nx`. Computed by division so that `node(nx) == 1` exactly.
    pub fn node(&self, j: usize) -> f64 {
        j as f64 / self.nx as f64
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..=self.nx).map(|j| self.node(j)).collect()
    }

    /// Samples `g` at every node.
    pub fn sample(&self, g: impl Fn(f64) -> f64) -> Vec<f64> {
        (0..=self.nx).map(|j| g(self.node(j))).collect()
    }

    /// Trapezoid quadrature weights (already multiplied by `dx`).
    pub fn trapezoid_weights(&self) -> Vec<f64> {
        let mut w = vec![self.dx; self.len()];
        w[0] = 0.5 * self.dx;
        w[self.nx] = 0.5 * self.dx;
        w
    }

    /// Trapezoid-rule `L^2(0,1)` inner product of two node vectors.
    pub fn inner(&self, a: &[f64], b: &[f64]) -> f64 {
        debug_assert_eq!(a.len(), self.len());
        debug_assert_eq!(b.len(), self.len());
        let n = self.nx;
        let interior: f64 = (1..n).map(|j| a[j] * b[j]).sum();
        self.dx * (interior + 0.5 * (a[0] * b[0] + a[n] * b[n]))
    }
}

/// Uniform time grid of `nt` steps over `[0, T]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    horizon: f64,
    nt: usize,
    dt: f64,
}

impl TimeGrid {
    pub fn new(horizon: f64, nt: usize) -> Result<Self> {
        if !(horizon.is_finite() && horizon > 0.0) {
            return Err(invalid(format!("horizon must be positive, got {horizon}")));
        }
        if nt == 0 {
            return Err(invalid("nt must be at least 1"));
        }
        Ok(Self {
            horizon,
            nt,
            dt: horizon / nt as f64,
        })
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn nt(&self) -> usize {
        self.nt
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn time(&self, i: usize) -> f64 {
        self.horizon * (i as f64 / self.nt as f64)
    }

    pub fn times(&self) -> Vec<f64> {
        (0..=self.nt).map(|i| self.time(i)).collect()
    }

    /// Plain CFL condition `2 dt <= dx^2` of the explicit scheme.
    pub fn cfl_ok(&self, grid: &Grid1D) -> bool {
        2.0 * self.dt <= grid.dx() * grid.dx() * (1.0 + CFL_SLACK)
    }

    pub(crate) fn check_cfl(&self, grid: &Grid1D) -> Result<()> {
        if self.cfl_ok(grid) {
            Ok(())
        } else {
            Err(Error::CflViolation {
                two_dt: 2.0 * self.dt,
                dx_sq: grid.dx() * grid.dx(),
            })
        }
    }

    /// Mesh ratio `dt / dx^2`.
    pub fn ratio(&self, grid: &Grid1D) -> f64 {
        self.dt / (grid.dx() * grid.dx())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Meshes {
    pub grid: Grid1D,
    pub tgrid: TimeGrid,
    pub cfl_ok: bool,
}

/// Builds both meshes. A failed CFL check is reported through `cfl_ok`
/// instead of an error so callers decide whether to simulate.
pub fn make_meshes(nx: usize, horizon: f64, nt: usize) -> Result<Meshes> {
    let grid = Grid1D::new(nx)?;
    let tgrid = TimeGrid::new(horizon, nt)?;
    let cfl_ok = tgrid.cfl_ok(&grid);
    Ok(Meshes {
        grid,
        tgrid,
        cfl_ok,
    })
}

/// Largest time step for which the explicit update is monotone in the state
/// when the reaction term has Lipschitz constant `lipschitz`.
pub fn strengthened_cfl(grid: &Grid1D, lipschitz: f64) -> f64 {
    debug_assert!(lipschitz >= 0.0);
    1.0 / (2.0 / (grid.dx() * grid.dx()) + lipschitz)
}

/// Smallest step count with `T / nt <= dt_max`.
pub fn steps_for(horizon: f64, dt_max: f64) -> usize {
    ((horizon / dt_max) * (1.0 - 1e-12)).ceil().max(1.0) as usize
}
