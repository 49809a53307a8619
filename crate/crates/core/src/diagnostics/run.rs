use std::path::PathBuf;
use std::time::{Duration, Instant};

use super::presets::InitialCondition;
use crate::error::{Error, Result};
use crate::models::{EnergyRecord, ModelSpec};
use crate::scalar::Scalar;
use crate::schemes::{energy_record, init_state, step, SchemeConfig, StepState};
use crate::spectral::{Grid2D, ScalarField2D};

/// Default upper bound on the number of steps of one run.
pub const DEFAULT_MAX_STEPS: usize = 2_000_000;

/// Everything needed to reproduce one simulation.
#[derive(Clone, Debug)]
pub struct RunConfig<T: Scalar> {
    pub model: ModelSpec<T>,
    pub scheme: SchemeConfig<T>,
    pub grid: Grid2D<T>,
    pub initial: InitialCondition<T>,
    /// Requested snapshot times, each within `[0, t_end]`.
    pub snapshot_times: Vec<T>,
    pub output_dir: Option<PathBuf>,
    /// Record an energy entry every `trace_stride` steps (plus the last
    /// step); 0 disables the trace.
    pub trace_stride: usize,
    pub max_steps: usize,
}

impl<T: Scalar> RunConfig<T> {
    pub fn new(
        model: ModelSpec<T>,
        scheme: SchemeConfig<T>,
        grid: Grid2D<T>,
        initial: InitialCondition<T>,
    ) -> Self {
        RunConfig {
            model,
            scheme,
            grid,
            initial,
            snapshot_times: Vec::new(),
            output_dir: None,
            trace_stride: 1,
            max_steps: DEFAULT_MAX_STEPS,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.scheme.validate()?;
        self.model.validate_on(&self.grid)?;
        let n = self.scheme.n_steps();
        if n > self.max_steps {
            return Err(Error::Config(format!(
                "t_end / dt = {n} steps exceeds the step cap {}",
                self.max_steps
            )));
        }
        let t_end = self.scheme.t_end;
        if let Some(t) = self
            .snapshot_times
            .iter()
            .find(|&&t| !(t >= T::zero() && t <= t_end))
        {
            return Err(Error::Config(format!(
                "snapshot time {t} outside [0, {t_end}]"
            )));
        }
        Ok(())
    }

    /// Step index used for a snapshot at `t`: `round(t / dt)`, halves away
    /// from zero, clamped to the last step.
    pub fn snapshot_step(&self, t: T) -> usize {
        let k = (t / self.scheme.dt).round().to_usize().unwrap_or(0);
        k.min(self.scheme.n_steps())
    }
}

#[derive(Clone, Debug)]
pub struct RunOutput<T: Scalar> {
    pub final_phi: ScalarField2D<T>,
    pub trace: Vec<EnergyRecord<T>>,
    /// `(requested time, field at the nearest step)`, in request order.
    pub snapshots: Vec<(T, ScalarField2D<T>)>,
    pub steps: usize,
    pub total_solves: usize,
    pub wall_time: Duration,
    /// The resolved constant `C`.
    pub c: T,
}

impl<T: Scalar> RunOutput<T> {
    pub fn solves_per_step(&self) -> f64 {
        if self.steps == 0 {
            0.0
        } else {
            self.total_solves as f64 / self.steps as f64
        }
    }
}

/// Steps `cfg` from `t = 0` to `t_end`.
pub fn run_simulation<T: Scalar>(cfg: &RunConfig<T>) -> Result<RunOutput<T>> {
    cfg.validate()?;
    let started = Instant::now();
    let phi0 = cfg.initial.build(&cfg.grid)?;
    let scheme = &cfg.scheme;
    let n_steps = scheme.n_steps();

    let mut wanted: Vec<(usize, usize)> = cfg
        .snapshot_times
        .iter()
        .enumerate()
        .map(|(i, &t)| (cfg.snapshot_step(t), i))
        .collect();
    wanted.sort_unstable();
    let mut wanted = wanted.into_iter().peekable();
    let mut snapshots: Vec<Option<(T, ScalarField2D<T>)>> = vec![None; cfg.snapshot_times.len()];
    let mut take = |state: &StepState<T>| {
        while let Some(&(k, i)) = wanted.peek() {
            if k != state.n {
                break;
            }
            snapshots[i] = Some((cfg.snapshot_times[i], state.phi.clone()));
            wanted.next();
        }
    };

    let mut trace = Vec::new();
    let mut state = init_state(&phi0, &cfg.model, scheme)?;
    if cfg.trace_stride > 0 {
        trace.push(energy_record(&state, &cfg.model, scheme.kind)?);
    }
    take(&state);
    let mut total_solves = 0;
    for k in 1..=n_steps {
        state = step(&state, &cfg.model, scheme)?;
        total_solves += state.last_solves;
        if cfg.trace_stride > 0 && (k % cfg.trace_stride == 0 || k == n_steps) {
            trace.push(energy_record(&state, &cfg.model, scheme.kind)?);
        }
        take(&state);
    }
    Ok(RunOutput {
        c: state.c,
        final_phi: state.phi,
        trace,
        snapshots: snapshots.into_iter().flatten().collect(),
        steps: n_steps,
        total_solves,
        wall_time: started.elapsed(),
    })
}
