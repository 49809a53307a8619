use std::fmt;
use std::sync::{Arc, Mutex};

use crate::error::{Error, Result};
use crate::models::{ModelKind, ModelParams, ModelSpec};
use crate::scalar::Scalar;
use crate::spectral::{integrate, Grid2D, ScalarField2D, SymbolTable, ThetaSolver};

#[derive(Clone, Debug, PartialEq)]
pub enum AuxVariable<T: Scalar> {
    /// `r ~ sqrt(E1 + C)`.
    ScalarR(T),
    /// `eta ~ E1 + C`.
    ScalarEta(T),
    /// `q ~ sqrt(F + C)` (IEQ) or `q ~ F + C` (3S-IEQ).
    FieldQ(ScalarField2D<T>),
}

impl<T: Scalar> AuxVariable<T> {
    pub fn scalar(&self) -> Option<T> {
        match self {
            AuxVariable::ScalarR(v) | AuxVariable::ScalarEta(v) => Some(*v),
            AuxVariable::FieldQ(_) => None,
        }
    }

    pub fn field(&self) -> Option<&ScalarField2D<T>> {
        match self {
            AuxVariable::FieldQ(q) => Some(q),
            _ => None,
        }
    }

    /// Scalar summary: the value itself, or `int q` for field auxiliaries.
    pub fn summary(&self) -> T {
        match self {
            AuxVariable::ScalarR(v) | AuxVariable::ScalarEta(v) => *v,
            AuxVariable::FieldQ(q) => integrate(q),
        }
    }

    pub(crate) fn expect_scalar(&self, what: &str) -> Result<T> {
        self.scalar()
            .ok_or_else(|| Error::Usage(format!("{what} needs a scalar auxiliary variable")))
    }

    pub(crate) fn expect_field(&self, what: &str) -> Result<&ScalarField2D<T>> {
        self.field()
            .ok_or_else(|| Error::Usage(format!("{what} needs a field auxiliary variable")))
    }
}

/// The explicit coupling field used by the last step: `chi` for the
/// step-by-step schemes, the `b` field for the classical ones.
#[derive(Clone, Debug, PartialEq)]
pub struct CouplingTerm<T: Scalar> {
    pub chi: ScalarField2D<T>,
    pub kind: &'static str,
}

/// Integrator state at time level `n`.
#[derive(Clone)]
pub struct StepState<T: Scalar> {
    pub phi: ScalarField2D<T>,
    pub phi_prev: Option<ScalarField2D<T>>,
    pub aux: AuxVariable<T>,
    pub aux_prev: Option<AuxVariable<T>>,
    pub n: usize,
    pub t: T,
    pub chi_cache: Option<CouplingTerm<T>>,
    /// Resolved shift constant `C`.
    pub c: T,
    /// Constant-coefficient solves performed by the step that produced this
    /// state (including the startup solve of a second-order first step).
    pub last_solves: usize,
    /// Krylov iterations of the IEQ solve of that step.
    pub last_iterations: usize,
    pub(crate) cache: OperatorCache<T>,
}

impl<T: Scalar> fmt::Debug for StepState<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("StepState")
            .field("n", &self.n)
            .field("t", &self.t)
            .field("c", &self.c)
            .field("aux", &self.aux.summary())
            .field("last_solves", &self.last_solves)
            .finish_non_exhaustive()
    }
}

struct CacheInner<T: Scalar> {
    kind: ModelKind,
    params: ModelParams<T>,
    grid: Grid2D<T>,
    g: SymbolTable<T>,
    l: SymbolTable<T>,
    solvers: Mutex<Vec<SolverEntry<T>>>,
}

/// Solver keyed by the bit patterns of (dt, theta).
type SolverEntry<T> = ((u64, u64), Arc<ThetaSolver<T>>);

/// Tabulated symbols and theta solvers for one (model, grid) pair.
#[derive(Clone)]
pub(crate) struct OperatorCache<T: Scalar> {
    inner: Arc<CacheInner<T>>,
}

impl<T: Scalar> OperatorCache<T> {
    pub(crate) fn new(model: &ModelSpec<T>, grid: &Grid2D<T>) -> Self {
        OperatorCache {
            inner: Arc::new(CacheInner {
                kind: model.kind,
                params: model.params(),
                grid: grid.clone(),
                g: grid.tabulate(&model.g_symbol),
                l: grid.tabulate(&model.l_symbol),
                solvers: Mutex::new(Vec::new()),
            }),
        }
    }

    /// Reuses `self` when it was built for `model` on `grid`.
    pub(crate) fn for_model(&self, model: &ModelSpec<T>, grid: &Grid2D<T>) -> Self {
        let i = &self.inner;
        if i.kind == model.kind && i.params == model.params() && &i.grid == grid {
            self.clone()
        } else {
            Self::new(model, grid)
        }
    }

    pub(crate) fn l(&self) -> &SymbolTable<T> {
        &self.inner.l
    }

    pub(crate) fn solver(&self, dt: T, theta: T) -> Result<Arc<ThetaSolver<T>>> {
        let key = (dt.to_f64_lossy().to_bits(), theta.to_f64_lossy().to_bits());
        let mut solvers = self.inner.solvers.lock().unwrap_or_else(|e| e.into_inner());
        if let Some((_, s)) = solvers.iter().find(|(k, _)| *k == key) {
            return Ok(s.clone());
        }
        let s = Arc::new(ThetaSolver::new(
            &self.inner.grid,
            dt,
            theta,
            &self.inner.g,
            &self.inner.l,
        )?);
        solvers.push((key, s.clone()));
        Ok(s)
    }
}
