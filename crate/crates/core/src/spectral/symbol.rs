use std::fmt;
use std::sync::Arc;

use crate::scalar::Scalar;

type SymbolFn<T> = dyn Fn(T, T) -> T + Send + Sync;

/// Fourier multiplier of a translation-invariant linear operator, given as a
/// function of `(kx^2, ky^2)`.
#[derive(Clone)]
pub struct OperatorSymbol<T: Scalar> {
    name: String,
    eval: Arc<SymbolFn<T>>,
}

impl<T: Scalar> OperatorSymbol<T> {
    pub fn new(name: impl Into<String>, eval: impl Fn(T, T) -> T + Send + Sync + 'static) -> Self {
        OperatorSymbol {
            name: name.into(),
            eval: Arc::new(eval),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    #[inline]
    pub fn eval(&self, kx2: T, ky2: T) -> T {
        (self.eval)(kx2, ky2)
    }

    pub fn identity() -> Self {
        Self::new("I", |_, _| T::one())
    }

    /// `-Δ`, i.e. `|k|^2`.
    pub fn neg_laplacian() -> Self {
        Self::new("-lap", |a, b| a + b)
    }

    /// `c * self`.
    pub fn scaled(&self, c: T, name: impl Into<String>) -> Self {
        let inner = self.eval.clone();
        Self::new(name, move |a, b| c * inner(a, b))
    }

    /// Pointwise product of two symbols (operator composition).
    pub fn compose(&self, other: &Self) -> Self {
        let (f, g) = (self.eval.clone(), other.eval.clone());
        Self::new(format!("{}*{}", self.name, other.name), move |a, b| {
            f(a, b) * g(a, b)
        })
    }
}

impl<T: Scalar> fmt::Debug for OperatorSymbol<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "OperatorSymbol({})", self.name)
    }
}

/// A symbol evaluated on every mode of a particular grid.
#[derive(Clone, Debug)]
pub struct SymbolTable<T> {
    name: String,
    values: Vec<T>,
}

impl<T: Scalar> SymbolTable<T> {
    pub(crate) fn new(name: &str, values: Vec<T>) -> Self {
        SymbolTable {
            name: name.to_string(),
            values,
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn min(&self) -> T {
        self.values.iter().copied().fold(T::infinity(), T::min)
    }

    pub fn max(&self) -> T {
        self.values.iter().copied().fold(T::neg_infinity(), T::max)
    }
}
