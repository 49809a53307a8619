use rayon::prelude::*;

use super::run::{run_simulation, RunConfig, RunOutput};
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::spectral::l2_norm;

#[derive(Clone, Debug, PartialEq)]
pub struct ConvergenceRow {
    pub dt: f64,
    pub l2_error: f64,
    /// `None` on the first row.
    pub rate: Option<f64>,
    pub wall_time_s: f64,
    pub solves_per_step: f64,
    pub steps: usize,
}

#[derive(Debug)]
pub struct ConvergenceReport {
    pub scheme: String,
    pub order: u8,
    pub model: String,
    pub ref_dt: f64,
    pub ref_wall_time_s: f64,
    pub rows: Vec<ConvergenceRow>,
    /// Set when a run failed; `rows` then holds the runs before it.
    pub failure: Option<(f64, Error)>,
}

impl ConvergenceReport {
    pub fn is_complete(&self) -> bool {
        self.failure.is_none()
    }

    pub fn rates(&self) -> Vec<f64> {
        self.rows.iter().filter_map(|r| r.rate).collect()
    }
}

/// `log(e0 / e1) / log(dt0 / dt1)` for consecutive rows.
pub fn successive_rates(dts: &[f64], errors: &[f64]) -> Vec<Option<f64>> {
    (0..errors.len())
        .map(|i| (i > 0).then(|| (errors[i - 1] / errors[i]).ln() / (dts[i - 1] / dts[i]).ln()))
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct StudyOptions {
    /// Run the per-dt simulations on the rayon pool.
    pub parallel: bool,
}

impl Default for StudyOptions {
    fn default() -> Self {
        StudyOptions { parallel: true }
    }
}

/// Self-convergence study: the reference is `base` rerun with `ref_dt`, and
/// each row compares the solution at `t_end` for one `dt` against it in the
/// grid L2 norm.
pub fn convergence_study<T: Scalar>(
    base: &RunConfig<T>,
    dts: &[T],
    ref_dt: T,
) -> Result<ConvergenceReport> {
    convergence_study_with(base, dts, ref_dt, StudyOptions::default())
}

pub fn convergence_study_with<T: Scalar>(
    base: &RunConfig<T>,
    dts: &[T],
    ref_dt: T,
    opts: StudyOptions,
) -> Result<ConvergenceReport> {
    if dts.is_empty() {
        return Err(Error::Usage(
            "convergence study needs at least one dt".into(),
        ));
    }
    if dts.iter().any(|&dt| !(ref_dt < dt)) {
        return Err(Error::Usage(format!(
            "reference dt {ref_dt} must be smaller than every study dt"
        )));
    }
    let with_dt = |dt: T| {
        let mut cfg = base.clone();
        cfg.scheme.dt = dt;
        cfg.trace_stride = 0;
        cfg.snapshot_times.clear();
        cfg
    };
    let reference = run_simulation(&with_dt(ref_dt))?;

    let run = |&dt: &T| run_simulation(&with_dt(dt));
    let outputs: Vec<Result<RunOutput<T>>> = if opts.parallel {
        dts.par_iter().map(run).collect()
    } else {
        dts.iter().map(run).collect()
    };

    let mut rows = Vec::new();
    let mut failure = None;
    for (&dt, out) in dts.iter().zip(outputs) {
        match out.and_then(|o| {
            let err = l2_norm(&o.final_phi.sub(&reference.final_phi)?);
            Ok((o, err))
        }) {
            Ok((o, err)) => rows.push(ConvergenceRow {
                dt: dt.to_f64_lossy(),
                l2_error: err.to_f64_lossy(),
                rate: None,
                wall_time_s: o.wall_time.as_secs_f64(),
                solves_per_step: o.solves_per_step(),
                steps: o.steps,
            }),
            Err(e) => {
                failure = Some((dt.to_f64_lossy(), e));
                break;
            }
        }
    }
    let dts_f: Vec<f64> = rows.iter().map(|r| r.dt).collect();
    let errs: Vec<f64> = rows.iter().map(|r| r.l2_error).collect();
    for (row, rate) in rows.iter_mut().zip(successive_rates(&dts_f, &errs)) {
        row.rate = rate;
    }
    Ok(ConvergenceReport {
        scheme: base.scheme.kind.name().to_string(),
        order: base.scheme.order.as_u8(),
        model: base.model.name().to_string(),
        ref_dt: ref_dt.to_f64_lossy(),
        ref_wall_time_s: reference.wall_time.as_secs_f64(),
        rows,
        failure,
    })
}
