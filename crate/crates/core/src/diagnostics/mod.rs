//! Simulation driver, convergence studies, trace checks, initial-condition
//! presets and the dense reference stepper.

mod convergence;
pub mod io;
mod oracle;
mod presets;
mod run;

pub use convergence::{
    convergence_study, convergence_study_with, successive_rates, ConvergenceReport, ConvergenceRow,
    StudyOptions,
};
pub use oracle::dense_oracle;
pub use presets::{make_initial, Bubble, InitialCondition, PresetParams, PRESETS};
pub use run::{run_simulation, RunConfig, RunOutput, DEFAULT_MAX_STEPS};

use crate::models::EnergyRecord;
use crate::scalar::Scalar;

/// Indices `i` where the modified energy (or the plain energy when no
/// modified energy was recorded) rises from entry `i` to `i + 1` by more
/// than `tol * max(1, |e_i|)`.
pub fn check_energy_monotone<T: Scalar>(trace: &[EnergyRecord<T>], tol: T) -> Vec<usize> {
    let e = |r: &EnergyRecord<T>| r.e_modified.unwrap_or(r.e_total);
    trace
        .windows(2)
        .enumerate()
        .filter(|(_, w)| {
            let (a, b) = (e(&w[0]), e(&w[1]));
            !(b <= a + tol * a.abs().max(T::one()))
        })
        .map(|(i, _)| i)
        .collect()
}

/// Largest `|(m_i - m_0) / m_0|` over the trace (absolute drift when
/// `m_0 = 0`).
pub fn max_mass_drift<T: Scalar>(trace: &[EnergyRecord<T>]) -> T {
    let Some(first) = trace.first() else {
        return T::zero();
    };
    let scale = if first.mass == T::zero() {
        T::one()
    } else {
        first.mass.abs()
    };
    trace
        .iter()
        .map(|r| ((r.mass - first.mass) / scale).abs())
        .fold(T::zero(), T::max)
}

#[cfg(test)]
mod tests;
