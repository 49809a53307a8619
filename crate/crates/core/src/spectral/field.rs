use super::grid::Grid2D;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Real field sampled on the nodes of a [`Grid2D`], row-major (`i * ny + j`).
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarField2D<T: Scalar> {
    grid: Grid2D<T>,
    values: Vec<T>,
}

impl<T: Scalar> ScalarField2D<T> {
    pub(crate) fn from_raw(grid: Grid2D<T>, values: Vec<T>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        ScalarField2D { grid, values }
    }

    /// Wraps `values`, rejecting wrong lengths and non-finite entries.
    pub fn from_values(grid: &Grid2D<T>, values: Vec<T>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Usage(format!(
                "field has {} values, grid {} needs {}",
                values.len(),
                grid,
                grid.len()
            )));
        }
        let f = Self::from_raw(grid.clone(), values);
        f.check_finite("field construction")?;
        Ok(f)
    }

    pub fn zeros(grid: &Grid2D<T>) -> Self {
        Self::constant(grid, T::zero())
    }

    pub fn constant(grid: &Grid2D<T>, c: T) -> Self {
        Self::from_raw(grid.clone(), vec![c; grid.len()])
    }

    /// Samples `f(x, y)` at every node.
    pub fn from_fn(grid: &Grid2D<T>, mut f: impl FnMut(T, T) -> T) -> Self {
        let mut values = Vec::with_capacity(grid.len());
        for i in 0..grid.nx() {
            for j in 0..grid.ny() {
                let (x, y) = grid.node(i, j);
                values.push(f(x, y));
            }
        }
        Self::from_raw(grid.clone(), values)
    }

    pub fn grid(&self) -> &Grid2D<T> {
        &self.grid
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [T] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<T> {
        self.values
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        self.values[i * self.grid.ny() + j]
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        Self::from_raw(
            self.grid.clone(),
            self.values.iter().map(|&v| f(v)).collect(),
        )
    }

    pub fn zip_with(&self, other: &Self, f: impl Fn(T, T) -> T) -> Result<Self> {
        self.ensure_same_grid(other)?;
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(&a, &b)| f(a, b))
            .collect();
        Ok(Self::from_raw(self.grid.clone(), values))
    }

    pub fn ensure_same_grid(&self, other: &Self) -> Result<()> {
        if self.grid == other.grid {
            Ok(())
        } else {
            Err(Error::GridMismatch {
                left: self.grid.to_string(),
                right: other.grid.to_string(),
            })
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a - b)
    }

    /// `self + a * other`.
    pub fn add_scaled(&self, other: &Self, a: T) -> Result<Self> {
        self.zip_with(other, |x, y| x + a * y)
    }

    pub fn scaled(&self, a: T) -> Self {
        self.map(|v| a * v)
    }

    /// `(3/2) self - (1/2) prev`.
    pub fn extrapolate_midpoint(&self, prev: &Self) -> Result<Self> {
        let (a, b) = (T::of(1.5), T::of(0.5));
        self.zip_with(prev, |x, y| a * x - b * y)
    }

    pub fn max_abs(&self) -> T {
        self.values.iter().fold(T::zero(), |m, v| m.max(v.abs()))
    }

    /// Arithmetic mean of the nodal values.
    pub fn mean(&self) -> T {
        self.values.iter().copied().sum::<T>() / T::of(self.values.len() as f64)
    }

    pub fn check_finite(&self, context: &str) -> Result<()> {
        if self.values.iter().all(|v| v.is_finite()) {
            Ok(())
        } else {
            Err(Error::NonFinite {
                context: context.to_string(),
            })
        }
    }
}
