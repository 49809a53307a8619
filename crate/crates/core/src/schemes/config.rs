use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::models::{energy, ModelSpec};
use crate::scalar::Scalar;
use crate::spectral::ScalarField2D;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SchemeKind {
    /// Classical scalar auxiliary variable, `r = sqrt(E1 + C)`.
    Sav,
    /// Classical invariant energy quadratization, `q = sqrt(F + C)`.
    Ieq,
    /// Step-by-step SAV with `eta = E1 + C`.
    ThreeSSav,
    /// Step-by-step IEQ with `q = F + C`.
    ThreeSIeq,
    /// Step-by-step update that keeps the square-root variable `r`; can break
    /// down when the updated `r^2` goes negative.
    ThreeSSavSqrt,
}

impl SchemeKind {
    pub const ALL: [SchemeKind; 5] = [
        SchemeKind::Sav,
        SchemeKind::Ieq,
        SchemeKind::ThreeSSav,
        SchemeKind::ThreeSIeq,
        SchemeKind::ThreeSSavSqrt,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SchemeKind::Sav => "sav",
            SchemeKind::Ieq => "ieq",
            SchemeKind::ThreeSSav => "3s-sav",
            SchemeKind::ThreeSIeq => "3s-ieq",
            SchemeKind::ThreeSSavSqrt => "3s-sav-sqrt",
        }
    }

    pub fn supports(self, order: Order) -> bool {
        !(self == SchemeKind::ThreeSSavSqrt && order == Order::Second)
    }

    /// Default constant: the `-E(phi0) - delta` rule for 3S-SAV, `C = 1` otherwise.
    pub fn default_c_policy<T: Scalar>(self) -> CPolicy<T> {
        match self {
            SchemeKind::ThreeSSav => CPolicy::Auto { delta: T::one() },
            _ => CPolicy::Explicit(T::one()),
        }
    }
}

impl fmt::Display for SchemeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SchemeKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SchemeKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| {
                Error::Usage(format!(
                    "unknown scheme '{s}' (expected one of: {})",
                    SchemeKind::ALL.map(|k| k.name()).join(", ")
                ))
            })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Order {
    /// Backward Euler on the linear part.
    First,
    /// Crank-Nicolson with extrapolated nonlinear terms.
    Second,
}

impl Order {
    pub fn as_u8(self) -> u8 {
        match self {
            Order::First => 1,
            Order::Second => 2,
        }
    }

    /// Implicit weight of the linear part.
    pub fn theta<T: Scalar>(self) -> T {
        match self {
            Order::First => T::one(),
            Order::Second => T::of(0.5),
        }
    }
}

impl TryFrom<u8> for Order {
    type Error = Error;

    fn try_from(v: u8) -> Result<Self> {
        match v {
            1 => Ok(Order::First),
            2 => Ok(Order::Second),
            _ => Err(Error::Usage(format!("order must be 1 or 2, got {v}"))),
        }
    }
}

impl fmt::Display for Order {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.as_u8())
    }
}

/// How the shift constant `C` is chosen.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum CPolicy<T> {
    Explicit(T),
    /// `C = -E(phi0) - delta`, which keeps `E1 + C <= -delta` along a
    /// dissipative trajectory.
    Auto {
        delta: T,
    },
}

impl<T: Scalar> CPolicy<T> {
    pub fn resolve(&self, phi0: &ScalarField2D<T>, model: &ModelSpec<T>) -> Result<T> {
        match *self {
            CPolicy::Explicit(c) => Ok(c),
            CPolicy::Auto { delta } => Ok(-energy(phi0, model)?.e_total - delta),
        }
    }
}

impl<T: Scalar> fmt::Display for CPolicy<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CPolicy::Explicit(c) => write!(f, "explicit C = {c}"),
            CPolicy::Auto { delta } => write!(f, "auto C = -E(phi0) - {delta}"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SchemeConfig<T> {
    pub kind: SchemeKind,
    pub order: Order,
    pub dt: T,
    pub t_end: T,
    pub c_policy: CPolicy<T>,
    /// Smallest admissible `|E1 + C|` (or pointwise `|F + C|`).
    pub guard: T,
    /// IEQ Krylov solve: relative residual target and iteration cap.
    pub ieq_tol: T,
    pub ieq_max_iter: usize,
}

impl<T: Scalar> SchemeConfig<T> {
    pub fn new(kind: SchemeKind, order: Order, dt: T, t_end: T) -> Self {
        SchemeConfig {
            kind,
            order,
            dt,
            t_end,
            c_policy: kind.default_c_policy(),
            guard: T::of(1e-12),
            ieq_tol: T::of(1e-12),
            ieq_max_iter: 200,
        }
    }

    pub fn with_c_policy(mut self, c: CPolicy<T>) -> Self {
        self.c_policy = c;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > T::zero()) || !self.dt.is_finite() {
            return Err(Error::Config(format!(
                "dt must be positive, got {}",
                self.dt
            )));
        }
        if !(self.t_end >= self.dt * (T::one() - T::round_off())) {
            return Err(Error::Config(format!(
                "t_end = {} must be at least dt = {}",
                self.t_end, self.dt
            )));
        }
        if let CPolicy::Auto { delta } = self.c_policy {
            if !(delta > T::zero()) {
                return Err(Error::Config(format!(
                    "delta must be positive, got {delta}"
                )));
            }
        }
        if !self.kind.supports(self.order) {
            return Err(Error::Config(format!(
                "{} is only available at order 1",
                self.kind
            )));
        }
        Ok(())
    }

    /// Number of steps to reach `t_end`, rounding to the nearest integer.
    pub fn n_steps(&self) -> usize {
        (self.t_end / self.dt).round().to_usize().unwrap_or(0)
    }
}
