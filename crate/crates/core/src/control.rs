use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::mesh::TimeGrid;

/// Dirichlet boundary data `(u0_i, u1_i)` sampled at the time nodes
/// `i = 0..=nt`; each sample is held over `[t_i, t_{i+1})` by the scheme.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundaryControl {
    left: Vec<f64>,
    right: Vec<f64>,
    nonnegative: bool,
}

impl BoundaryControl {
    pub fn new(left: Vec<f64>, right: Vec<f64>) -> Result<Self> {
        if left.len() != right.len() {
            return Err(invalid(format!(
                "control sides differ in length: {} vs {}",
                left.len(),
                right.len()
            )));
        }
        if left.len() < 2 {
            return Err(invalid("controls need at least two samples"));
        }
        if left.iter().chain(&right).any(|v| !v.is_finite()) {
            return Err(invalid("control values must be finite"));
        }
        Ok(Self {
            left,
            right,
            nonnegative: false,
        })
    }

    /// Tags the control as sign-constrained, rejecting it if any entry is negative.
    pub fn into_nonnegative(mut self) -> Result<Self> {
        if let Some(v) = self.left.iter().chain(&self.right).find(|v| **v < 0.0) {
            return Err(invalid(format!("control has negative entry {v:e}")));
        }
        self.nonnegative = true;
        Ok(self)
    }

    pub fn constant(nt: usize, left: f64, right: f64) -> Self {
        Self {
            left: vec![left; nt + 1],
            right: vec![right; nt + 1],
            nonnegative: left >= 0.0 && right >= 0.0,
        }
    }

    pub fn zeros(nt: usize) -> Self {
        Self::constant(nt, 0.0, 0.0)
    }

    pub fn from_fn(tgrid: &TimeGrid, f: impl Fn(f64) -> (f64, f64)) -> Result<Self> {
        let (left, right) = tgrid.times().into_iter().map(f).unzip();
        Self::new(left, right)
    }

    pub fn left(&self) -> &[f64] {
        &self.left
    }

    pub fn right(&self) -> &[f64] {
        &self.right
    }

    pub(crate) fn left_mut(&mut self) -> &mut [f64] {
        &mut self.left
    }

    pub(crate) fn right_mut(&mut self) -> &mut [f64] {
        &mut self.right
    }

    /// Number of time steps `nt` the control covers.
    pub fn nt(&self) -> usize {
        self.left.len() - 1
    }

    pub fn is_tagged_nonnegative(&self) -> bool {
        self.nonnegative
    }

    pub fn min_value(&self) -> f64 {
        self.left
            .iter()
            .chain(&self.right)
            .copied()
            .fold(f64::INFINITY, f64::min)
    }

    /// `max_i max(|u0_i - v0_i|, |u1_i - v1_i|)`.
    pub fn sup_distance(&self, other: &BoundaryControl) -> f64 {
        debug_assert_eq!(self.nt(), other.nt());
        self.left
            .iter()
            .zip(&other.left)
            .chain(self.right.iter().zip(&other.right))
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// Flattened `[left..., right...]`.
    pub fn to_flat(&self) -> Vec<f64> {
        let mut v = self.left.clone();
        v.extend_from_slice(&self.right);
        v
    }

    pub fn from_flat(flat: &[f64]) -> Result<Self> {
        if !flat.len().is_multiple_of(2) {
            return Err(invalid("flattened control must have even length"));
        }
        let (l, r) = flat.split_at(flat.len() / 2);
        Self::new(l.to_vec(), r.to_vec())
    }

    /// `sum_i dt (|u0_i| + |u1_i|)`.
    pub fn l1_mass(&self, dt: f64) -> f64 {
        self.slice_masses(dt).iter().sum()
    }

    /// Per-time-slice mass `dt (|u0_i| + |u1_i|)`.
    pub fn slice_masses(&self, dt: f64) -> Vec<f64> {
        self.left
            .iter()
            .zip(&self.right)
            .map(|(a, b)| dt * (a.abs() + b.abs()))
            .collect()
    }

    /// Fraction of the L1 mass carried by the heaviest 10% of time slices.
    pub fn sparsity(&self, dt: f64) -> f64 {
        let mut masses = self.slice_masses(dt);
        let total: f64 = masses.iter().sum();
        if total <= 0.0 {
            return 0.0;
        }
        masses.sort_by(|a, b| b.total_cmp(a));
        let top = masses.len().div_ceil(10);
        masses[..top].iter().sum::<f64>() / total
    }

    /// Appends `next`, whose first sample must coincide with our last one.
    pub fn concat(&self, next: &BoundaryControl) -> Result<Self> {
        let (l0, r0) = (next.left[0], next.right[0]);
        let (l1, r1) = (*self.left.last().unwrap(), *self.right.last().unwrap());
        if (l0 - l1).abs() > 1e-9 || (r0 - r1).abs() > 1e-9 {
            return Err(invalid("concatenated controls do not join continuously"));
        }
        let mut left = self.left.clone();
        left.extend_from_slice(&next.left[1..]);
        let mut right = self.right.clone();
        right.extend_from_slice(&next.right[1..]);
        Ok(Self {
            left,
            right,
            nonnegative: self.nonnegative && next.nonnegative,
        })
    }
}
