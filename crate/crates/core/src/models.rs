//! Gradient-flow models `phi_t = G mu`, `mu = L phi + F'(phi)`, described by
//! the symbols of `L` and `G` plus a pointwise potential `F`.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::spectral::{
    apply_operator, inner_product, integrate, Grid2D, OperatorSymbol, ScalarField2D,
};

type PointFn<T> = dyn Fn(T) -> T + Send + Sync;

/// Energy density `F` and its derivative.
#[derive(Clone)]
pub struct PotentialSpec<T: Scalar> {
    label: String,
    f: Arc<PointFn<T>>,
    df: Arc<PointFn<T>>,
}

impl<T: Scalar> PotentialSpec<T> {
    pub fn new(
        label: impl Into<String>,
        f: impl Fn(T) -> T + Send + Sync + 'static,
        df: impl Fn(T) -> T + Send + Sync + 'static,
    ) -> Self {
        PotentialSpec {
            label: label.into(),
            f: Arc::new(f),
            df: Arc::new(df),
        }
    }

    /// `F = (phi^2 - 1)^2 / 4`.
    pub fn double_well() -> Self {
        Self::stabilized_double_well(T::zero())
    }

    /// `F = (phi^2 - 1 - beta)^2 / 4`.
    pub fn stabilized_double_well(beta: T) -> Self {
        let q = T::of(0.25);
        let shift = T::one() + beta;
        Self::new(
            if beta == T::zero() {
                "double-well".to_string()
            } else {
                format!("double-well(beta={beta})")
            },
            move |v| {
                let w = v * v - shift;
                q * w * w
            },
            move |v| v * (v * v - shift),
        )
    }

    /// `F = phi^4 / 4 - eps phi^2 / 2`, the PFC nonlinearity with the `-eps`
    /// part of the linear operator folded in.
    pub fn pfc(epsilon: T) -> Self {
        let (q, h) = (T::of(0.25), T::of(0.5));
        Self::new(
            format!("pfc-quartic(eps={epsilon})"),
            move |v| {
                let v2 = v * v;
                q * v2 * v2 - h * epsilon * v2
            },
            move |v| v * v * v - epsilon * v,
        )
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    #[inline]
    pub fn value(&self, v: T) -> T {
        (self.f)(v)
    }

    #[inline]
    pub fn derivative(&self, v: T) -> T {
        (self.df)(v)
    }

    /// `F(phi)` pointwise.
    pub fn density(&self, phi: &ScalarField2D<T>) -> ScalarField2D<T> {
        phi.map(|v| self.value(v))
    }

    /// `F'(phi)` pointwise.
    pub fn force(&self, phi: &ScalarField2D<T>) -> ScalarField2D<T> {
        phi.map(|v| self.derivative(v))
    }
}

impl<T: Scalar> fmt::Debug for PotentialSpec<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "PotentialSpec({})", self.label)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ModelKind {
    AllenCahn,
    CahnHilliard,
    CahnHilliardStabilized,
    PhaseFieldCrystal,
}

impl ModelKind {
    pub const ALL: [ModelKind; 4] = [
        ModelKind::AllenCahn,
        ModelKind::CahnHilliard,
        ModelKind::CahnHilliardStabilized,
        ModelKind::PhaseFieldCrystal,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::AllenCahn => "allen-cahn",
            ModelKind::CahnHilliard => "cahn-hilliard",
            ModelKind::CahnHilliardStabilized => "cahn-hilliard-stabilized",
            ModelKind::PhaseFieldCrystal => "pfc",
        }
    }

    /// Whether `G` annihilates constants, i.e. the flow conserves mass.
    pub fn conserves_mass(self) -> bool {
        !matches!(self, ModelKind::AllenCahn)
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ModelKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| {
                Error::Usage(format!(
                    "unknown model '{s}' (expected one of: {})",
                    ModelKind::ALL.map(|k| k.name()).join(", ")
                ))
            })
    }
}

/// Physical parameters shared by all models. Unused entries are ignored.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ModelParams<T> {
    pub epsilon: T,
    pub mobility: T,
    pub beta: T,
}

/// A gradient-flow model. Immutable once built.
#[derive(Clone, Debug)]
pub struct ModelSpec<T: Scalar> {
    pub kind: ModelKind,
    pub l_symbol: OperatorSymbol<T>,
    pub g_symbol: OperatorSymbol<T>,
    pub potential: PotentialSpec<T>,
    pub epsilon: T,
    pub mobility: T,
    pub beta: T,
}

impl<T: Scalar> ModelSpec<T> {
    /// `G = -M`, `L = -eps^2 lap`, double well.
    pub fn allen_cahn(epsilon: T, mobility: T) -> Self {
        let eps2 = epsilon * epsilon;
        ModelSpec {
            kind: ModelKind::AllenCahn,
            l_symbol: OperatorSymbol::new("eps^2|k|^2", move |a, b| eps2 * (a + b)),
            g_symbol: OperatorSymbol::new("-M", move |_, _| -mobility),
            potential: PotentialSpec::double_well(),
            epsilon,
            mobility,
            beta: T::zero(),
        }
    }

    /// `G = M lap`, `L = -eps^2 lap`, double well.
    pub fn cahn_hilliard(epsilon: T, mobility: T) -> Self {
        let mut m = Self::cahn_hilliard_stabilized(epsilon, mobility, T::zero());
        m.kind = ModelKind::CahnHilliard;
        m
    }

    /// `G = M lap`, `L = -eps^2 lap + beta`, `F = (phi^2 - 1 - beta)^2 / 4`.
    pub fn cahn_hilliard_stabilized(epsilon: T, mobility: T, beta: T) -> Self {
        let eps2 = epsilon * epsilon;
        ModelSpec {
            kind: ModelKind::CahnHilliardStabilized,
            l_symbol: OperatorSymbol::new("eps^2|k|^2+beta", move |a, b| eps2 * (a + b) + beta),
            g_symbol: OperatorSymbol::new("-M|k|^2", move |a, b| -mobility * (a + b)),
            potential: PotentialSpec::stabilized_double_well(beta),
            epsilon,
            mobility,
            beta,
        }
    }

    /// Phase-field crystal: `G = M lap`, `L = (1 + lap)^2`, with the `-eps`
    /// shift moved into the potential so that `L >= 0`.
    pub fn pfc(epsilon: T, mobility: T) -> Self {
        ModelSpec {
            kind: ModelKind::PhaseFieldCrystal,
            l_symbol: OperatorSymbol::new("(1-|k|^2)^2", |a, b| {
                let s = T::one() - (a + b);
                s * s
            }),
            g_symbol: OperatorSymbol::new("-M|k|^2", move |a, b| -mobility * (a + b)),
            potential: PotentialSpec::pfc(epsilon),
            epsilon,
            mobility,
            beta: T::zero(),
        }
    }

    pub fn from_kind(kind: ModelKind, p: ModelParams<T>) -> Self {
        match kind {
            ModelKind::AllenCahn => Self::allen_cahn(p.epsilon, p.mobility),
            ModelKind::CahnHilliard => Self::cahn_hilliard(p.epsilon, p.mobility),
            ModelKind::CahnHilliardStabilized => {
                Self::cahn_hilliard_stabilized(p.epsilon, p.mobility, p.beta)
            }
            ModelKind::PhaseFieldCrystal => Self::pfc(p.epsilon, p.mobility),
        }
    }

    pub fn name(&self) -> &'static str {
        self.kind.name()
    }

    pub fn params(&self) -> ModelParams<T> {
        ModelParams {
            epsilon: self.epsilon,
            mobility: self.mobility,
            beta: self.beta,
        }
    }

    /// Checks `L >= 0` and `G <= 0` on every mode of `grid`.
    pub fn validate_on(&self, grid: &Grid2D<T>) -> Result<()> {
        let l = grid.tabulate(&self.l_symbol);
        let g = grid.tabulate(&self.g_symbol);
        if l.min() < T::zero() {
            return Err(Error::Config(format!(
                "{}: L symbol '{}' is negative ({}) on some mode",
                self.name(),
                l.name(),
                l.min()
            )));
        }
        if g.max() > T::zero() {
            return Err(Error::Config(format!(
                "{}: G symbol '{}' is positive ({}) on some mode",
                self.name(),
                g.name(),
                g.max()
            )));
        }
        Ok(())
    }
}

/// Energy bookkeeping for one time level.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EnergyRecord<T> {
    pub t: T,
    /// `E = e_linear + e_nonlinear`.
    pub e_total: T,
    /// `(phi, L phi) / 2`.
    pub e_linear: T,
    /// `E1 = int F(phi)`.
    pub e_nonlinear: T,
    /// Scheme-specific modified energy, set by the steppers.
    pub e_modified: Option<T>,
    pub mass: T,
    /// `eta` or `r` for scalar auxiliaries, `int q` for field auxiliaries.
    pub aux: Option<T>,
    pub solve_count: usize,
}

/// `E1(phi) = int F(phi) dx`.
pub fn nonlinear_energy<T: Scalar>(phi: &ScalarField2D<T>, model: &ModelSpec<T>) -> T {
    phi.values()
        .iter()
        .map(|&v| model.potential.value(v))
        .sum::<T>()
        * phi.grid().cell_area()
}

/// `(phi, L phi) / 2`.
pub fn linear_energy<T: Scalar>(phi: &ScalarField2D<T>, model: &ModelSpec<T>) -> Result<T> {
    let lphi = apply_operator(phi, &model.l_symbol)?;
    Ok(T::of(0.5) * inner_product(phi, &lphi)?)
}

pub fn energy<T: Scalar>(phi: &ScalarField2D<T>, model: &ModelSpec<T>) -> Result<EnergyRecord<T>> {
    phi.check_finite("energy input")?;
    let e_linear = linear_energy(phi, model)?;
    let e_nonlinear = nonlinear_energy(phi, model);
    let e_total = e_linear + e_nonlinear;
    if !e_total.is_finite() {
        return Err(Error::NonFinite {
            context: format!("{} energy", model.name()),
        });
    }
    Ok(EnergyRecord {
        t: T::zero(),
        e_total,
        e_linear,
        e_nonlinear,
        e_modified: None,
        mass: integrate(phi),
        aux: None,
        solve_count: 0,
    })
}

/// `mu = L phi + F'(phi)`.
pub fn chemical_potential<T: Scalar>(
    phi: &ScalarField2D<T>,
    model: &ModelSpec<T>,
) -> Result<ScalarField2D<T>> {
    let lphi = apply_operator(phi, &model.l_symbol)?;
    lphi.zip_with(phi, |a, v| a + model.potential.derivative(v))
}
