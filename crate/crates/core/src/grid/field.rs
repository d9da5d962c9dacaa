use std::sync::Arc;

use super::{Grid, MAX_DIM};
use crate::error::{Error, Result};

/// Real samples of a function on a [`Grid`], one per point, row-major.
#[derive(Clone, Debug)]
pub struct Field {
    grid: Arc<Grid>,
    values: Vec<f64>,
}

impl Field {
    pub fn new(grid: Arc<Grid>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidGrid(format!(
                "field has {} values, grid has {} points",
                values.len(),
                grid.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("field values"));
        }
        Ok(Field { grid, values })
    }

    /// Unchecked constructor for values produced by finite arithmetic.
    pub(crate) fn from_raw(grid: Arc<Grid>, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        Field { grid, values }
    }

    pub fn zeros(grid: &Arc<Grid>) -> Self {
        Field::constant(grid, 0.0)
    }

    pub fn constant(grid: &Arc<Grid>, c: f64) -> Self {
        Field::from_raw(grid.clone(), vec![c; grid.len()])
    }

    /// Samples `f` at every grid point. Unused trailing coordinates are 0.
    pub fn from_fn(grid: &Arc<Grid>, mut f: impl FnMut(&[f64; MAX_DIM]) -> f64) -> Result<Self> {
        let values = (0..grid.len()).map(|i| f(&grid.coords(i))).collect();
        Field::new(grid.clone(), values)
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn same_grid(&self, other: &Field) -> bool {
        Arc::ptr_eq(&self.grid, &other.grid) || *self.grid == *other.grid
    }

    pub(crate) fn check_grid(&self, other: &Field) -> Result<()> {
        if self.same_grid(other) {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }

    pub fn integrate(&self) -> f64 {
        self.grid.cell_volume() * self.values.iter().sum::<f64>()
    }

    /// `∫ u w dx`.
    pub fn dot(&self, other: &Field) -> Result<f64> {
        self.check_grid(other)?;
        Ok(self.grid.cell_volume() * dot(&self.values, &other.values))
    }

    /// `∫ u² dx`.
    pub fn mass(&self) -> f64 {
        self.grid.cell_volume() * dot(&self.values, &self.values)
    }

    pub fn lp_norm(&self, p: f64) -> Result<f64> {
        if !(p >= 1.0 && p.is_finite()) {
            return Err(Error::param("p", format!("L^p norm needs finite p >= 1 (got {p})")));
        }
        let sum: f64 = if p == 2.0 {
            dot(&self.values, &self.values)
        } else {
            self.values.iter().map(|v| v.abs().powf(p)).sum()
        };
        Ok((self.grid.cell_volume() * sum).powf(1.0 / p))
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn scaled(&self, c: f64) -> Field {
        self.map(|v| c * v)
    }

    pub(crate) fn map(&self, f: impl Fn(f64) -> f64) -> Field {
        Field::from_raw(self.grid.clone(), self.values.iter().map(|&v| f(v)).collect())
    }

    /// `a·self + b·other`.
    pub fn combine(&self, a: f64, other: &Field, b: f64) -> Result<Field> {
        self.check_grid(other)?;
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(x, y)| a * x + b * y)
            .collect();
        Ok(Field::from_raw(self.grid.clone(), values))
    }

    /// Negative part set to zero.
    pub fn positive_part(&self) -> Field {
        self.map(|v| v.max(0.0))
    }

    pub fn has_positive_part(&self) -> bool {
        self.values.iter().any(|&v| v > 0.0)
    }

    /// Translate by whole cells along `axis` (periodic wrap).
    pub fn translated(&self, axis: usize, cells: usize) -> Field {
        let mut out = vec![0.0; self.values.len()];
        for (i, &v) in self.values.iter().enumerate() {
            out[self.grid.translate_index(i, axis, cells)] = v;
        }
        Field::from_raw(self.grid.clone(), out)
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Rectangle rule `cell_volume · Σ w_j`.
pub fn integrate(w: &Field) -> f64 {
    w.integrate()
}

pub fn lp_norm(u: &Field, p: f64) -> Result<f64> {
    u.lp_norm(p)
}
