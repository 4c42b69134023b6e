use serde::{Deserialize, Serialize};

use crate::control::BoundaryControl;
use crate::export::csv_table;
use crate::mesh::{Grid1D, TimeGrid};

/// State values `Y[i][j]`, `i = 0..=nt`, `j = 0..=nx`, stored row-major.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    values: Vec<f64>,
    grid: Grid1D,
    tgrid: TimeGrid,
}

impl Trajectory {
    pub(crate) fn from_rows(values: Vec<f64>, grid: Grid1D, tgrid: TimeGrid) -> Self {
        debug_assert_eq!(values.len() % grid.len(), 0);
        Self {
            values,
            grid,
            tgrid,
        }
    }

    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    /// Time grid of the full requested horizon, even if the run was truncated.
    pub fn tgrid(&self) -> &TimeGrid {
        &self.tgrid
    }

    /// Number of stored rows (`nt + 1` unless truncated by blow-up).
    pub fn rows(&self) -> usize {
        self.values.len() / self.grid.len()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let n = self.grid.len();
        &self.values[i * n..(i + 1) * n]
    }

    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.grid.len() + j]
    }

    pub fn terminal(&self) -> &[f64] {
        self.row(self.rows() - 1)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn is_complete(&self) -> bool {
        self.rows() == self.tgrid.nt() + 1
    }

    /// Boundary columns as a control.
    pub fn boundary(&self) -> BoundaryControl {
        let nx = self.grid.nx();
        let (left, right) = (0..self.rows())
            .map(|i| (self.at(i, 0), self.at(i, nx)))
            .unzip();
        BoundaryControl::new(left, right).expect("trajectory has at least two rows")
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_value(&self) -> f64 {
        self.values
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// CSV `t,x,y`, row-major over `(i, j)`.
    pub fn to_csv(&self) -> String {
        let rows: Vec<[f64; 3]> = (0..self.rows())
            .flat_map(|i| {
                let t = self.tgrid.time(i);
                (0..self.grid.len()).map(move |j| [t, self.grid.node(j), self.at(i, j)])
            })
            .collect();
        csv_table("t,x,y", rows.iter().map(|r| r.as_slice()))
    }
}
