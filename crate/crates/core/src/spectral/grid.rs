use std::fmt;
use std::sync::Arc;

use num_complex::Complex;

use super::field::ScalarField2D;
use super::symbol::{OperatorSymbol, SymbolTable};
use super::transform::FftPlans;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Periodic rectangle `[0, lx) x [0, ly)` sampled on `nx x ny` collocation nodes.
///
/// Node `(i, j)` sits at `(i dx, j dy)` and is stored at flat index `i * ny + j`.
/// Wavenumber tables follow the usual FFT ordering: index `m` maps to the
/// signed frequency `m` for `m < n/2` and `m - n` otherwise.
#[derive(Clone)]
pub struct Grid2D<T: Scalar> {
    lx: T,
    ly: T,
    nx: usize,
    ny: usize,
    dx: T,
    dy: T,
    kx: Arc<[T]>,
    ky: Arc<[T]>,
    dealias: bool,
    plans: Arc<FftPlans<T>>,
}

/// Signed integer frequency of FFT index `m` on an axis with `n` modes.
pub fn wrap_frequency(m: usize, n: usize) -> i64 {
    if m < n / 2 {
        m as i64
    } else {
        m as i64 - n as i64
    }
}

impl<T: Scalar> Grid2D<T> {
    pub fn new(lx: T, ly: T, nx: usize, ny: usize) -> Result<Self> {
        for (axis, n) in [("nx", nx), ("ny", ny)] {
            if n < 4 || n % 2 != 0 {
                return Err(Error::Config(format!(
                    "{axis} = {n}: mode counts must be even and at least 4"
                )));
            }
        }
        if !(lx > T::zero() && ly > T::zero()) || !lx.is_finite() || !ly.is_finite() {
            return Err(Error::Config(format!(
                "domain lengths must be positive and finite (lx = {lx}, ly = {ly})"
            )));
        }
        let two_pi = T::PI() + T::PI();
        let table = |n: usize, len: T| -> Arc<[T]> {
            (0..n)
                .map(|m| two_pi * T::of(wrap_frequency(m, n) as f64) / len)
                .collect()
        };
        Ok(Grid2D {
            lx,
            ly,
            nx,
            ny,
            dx: lx / T::of(nx as f64),
            dy: ly / T::of(ny as f64),
            kx: table(nx, lx),
            ky: table(ny, ly),
            dealias: false,
            plans: FftPlans::cached(nx, ny),
        })
    }

    /// Enables 2/3-rule truncation of nonlinear terms (off by default).
    pub fn with_dealiasing(mut self, on: bool) -> Self {
        self.dealias = on;
        self
    }

    pub fn lx(&self) -> T {
        self.lx
    }
    pub fn ly(&self) -> T {
        self.ly
    }
    pub fn nx(&self) -> usize {
        self.nx
    }
    pub fn ny(&self) -> usize {
        self.ny
    }
    pub fn dx(&self) -> T {
        self.dx
    }
    pub fn dy(&self) -> T {
        self.dy
    }
    pub fn kx(&self) -> &[T] {
        &self.kx
    }
    pub fn ky(&self) -> &[T] {
        &self.ky
    }
    pub fn dealias(&self) -> bool {
        self.dealias
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Area of the domain.
    pub fn area(&self) -> T {
        self.lx * self.ly
    }

    /// Quadrature weight of a single node.
    pub fn cell_area(&self) -> T {
        self.dx * self.dy
    }

    /// Coordinates of node `(i, j)`.
    pub fn node(&self, i: usize, j: usize) -> (T, T) {
        (T::of(i as f64) * self.dx, T::of(j as f64) * self.dy)
    }

    /// Splits a flat index into `(i, j)`.
    pub fn unflatten(&self, idx: usize) -> (usize, usize) {
        (idx / self.ny, idx % self.ny)
    }

    /// Evaluates `symbol` on every mode.
    pub fn tabulate(&self, symbol: &OperatorSymbol<T>) -> SymbolTable<T> {
        let mut values = Vec::with_capacity(self.len());
        for &kx in self.kx.iter() {
            for &ky in self.ky.iter() {
                values.push(symbol.eval(kx * kx, ky * ky));
            }
        }
        SymbolTable::new(symbol.name(), values)
    }

    pub(crate) fn forward(&self, f: &ScalarField2D<T>) -> Vec<Complex<T>> {
        let mut data: Vec<Complex<T>> = f
            .values()
            .iter()
            .map(|&v| Complex::new(v, T::zero()))
            .collect();
        self.plans.forward(&mut data);
        data
    }

    /// Inverse transform, keeping the real part. Conjugate symmetry is
    /// preserved by every multiplier used here since they depend on `k^2` only.
    pub(crate) fn inverse(&self, mut data: Vec<Complex<T>>) -> ScalarField2D<T> {
        self.plans.inverse(&mut data);
        let scale = T::one() / T::of(self.len() as f64);
        let values = data.into_iter().map(|c| c.re * scale).collect();
        ScalarField2D::from_raw(self.clone(), values)
    }

    /// Mask of modes retained by the 2/3 rule.
    pub(crate) fn keeps_mode(&self, i: usize, j: usize) -> bool {
        let fx = wrap_frequency(i, self.nx).unsigned_abs() as usize;
        let fy = wrap_frequency(j, self.ny).unsigned_abs() as usize;
        3 * fx < self.nx && 3 * fy < self.ny
    }

    fn same_shape(&self, other: &Self) -> bool {
        self.nx == other.nx && self.ny == other.ny && self.lx == other.lx && self.ly == other.ly
    }
}

impl<T: Scalar> PartialEq for Grid2D<T> {
    fn eq(&self, other: &Self) -> bool {
        self.same_shape(other) && self.dealias == other.dealias
    }
}

impl<T: Scalar> fmt::Debug for Grid2D<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Grid2D")
            .field("lx", &self.lx)
            .field("ly", &self.ly)
            .field("nx", &self.nx)
            .field("ny", &self.ny)
            .field("dealias", &self.dealias)
            .finish()
    }
}

impl<T: Scalar> fmt::Display for Grid2D<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}x{} on [0,{}]x[0,{}]",
            self.nx, self.ny, self.lx, self.ly
        )
    }
}
