//! Plain-text output: trace and report CSVs, snapshot grids.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use super::convergence::ConvergenceReport;
use crate::error::{Error, Result};
use crate::models::EnergyRecord;
use crate::scalar::Scalar;
use crate::spectral::{Grid2D, ScalarField2D};

pub const TRACE_HEADER: &str = "t,e_total,e_linear,e_nonlinear,e_modified,mass,aux,solve_count";
pub const REPORT_HEADER: &str = "dt,l2_error,rate,wall_time_s,solves_per_step";

fn opt<T: Scalar>(v: Option<T>) -> String {
    v.map(|x| format!("{:.17e}", x.to_f64_lossy()))
        .unwrap_or_default()
}

fn create(path: &Path) -> Result<BufWriter<fs::File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    Ok(BufWriter::new(fs::File::create(path)?))
}

pub fn write_trace_csv<T: Scalar>(path: &Path, trace: &[EnergyRecord<T>]) -> Result<()> {
    let mut w = create(path)?;
    writeln!(w, "{TRACE_HEADER}")?;
    for r in trace {
        writeln!(
            w,
            "{:.17e},{:.17e},{:.17e},{:.17e},{},{:.17e},{},{}",
            r.t.to_f64_lossy(),
            r.e_total.to_f64_lossy(),
            r.e_linear.to_f64_lossy(),
            r.e_nonlinear.to_f64_lossy(),
            opt(r.e_modified),
            r.mass.to_f64_lossy(),
            opt(r.aux),
            r.solve_count
        )?;
    }
    w.flush()?;
    Ok(())
}

/// Header lines `nx`, `ny`, `lx`, `ly`, `t` as `key value`, then `nx` rows
/// of `ny` comma-separated values.
pub fn write_snapshot<T: Scalar>(path: &Path, field: &ScalarField2D<T>, t: T) -> Result<()> {
    let g = field.grid();
    let mut w = create(path)?;
    writeln!(w, "nx {}", g.nx())?;
    writeln!(w, "ny {}", g.ny())?;
    writeln!(w, "lx {:.17e}", g.lx().to_f64_lossy())?;
    writeln!(w, "ly {:.17e}", g.ly().to_f64_lossy())?;
    writeln!(w, "t {:.17e}", t.to_f64_lossy())?;
    for row in field.values().chunks(g.ny()) {
        let line: Vec<String> = row
            .iter()
            .map(|v| format!("{:.17e}", v.to_f64_lossy()))
            .collect();
        writeln!(w, "{}", line.join(","))?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a file written by [`write_snapshot`].
pub fn read_snapshot<T: Scalar>(path: &Path) -> Result<(T, ScalarField2D<T>)> {
    let text = fs::read_to_string(path)?;
    let bad =
        |what: &str| Error::Config(format!("{}: malformed snapshot ({what})", path.display()));
    let mut lines = text.lines();
    let mut header = |key: &str| -> Result<f64> {
        let line = lines.next().ok_or_else(|| bad(key))?;
        match line.split_once(' ') {
            Some((k, v)) if k == key => v.trim().parse().map_err(|_| bad(key)),
            _ => Err(bad(key)),
        }
    };
    let nx = header("nx")? as usize;
    let ny = header("ny")? as usize;
    let lx = header("lx")?;
    let ly = header("ly")?;
    let t = header("t")?;
    let mut values = Vec::with_capacity(nx * ny);
    for line in lines.filter(|l| !l.trim().is_empty()) {
        for tok in line.split(',') {
            values.push(T::of(tok.trim().parse::<f64>().map_err(|_| bad("value"))?));
        }
    }
    if values.len() != nx * ny {
        return Err(bad("value count"));
    }
    let grid = Grid2D::new(T::of(lx), T::of(ly), nx, ny)?;
    Ok((T::of(t), ScalarField2D::from_values(&grid, values)?))
}

/// File name used for the snapshot at index `i`, time `t`.
pub fn snapshot_name<T: Scalar>(i: usize, t: T) -> String {
    format!("snapshot_{i:04}_t{:.6}.txt", t.to_f64_lossy())
}

pub fn write_report_csv(path: &Path, report: &ConvergenceReport) -> Result<()> {
    let mut w = create(path)?;
    writeln!(w, "{REPORT_HEADER}")?;
    for r in &report.rows {
        writeln!(
            w,
            "{:e},{:.10e},{},{:.6},{}",
            r.dt,
            r.l2_error,
            r.rate.map(|x| format!("{x:.6}")).unwrap_or_default(),
            r.wall_time_s,
            r.solves_per_step
        )?;
    }
    w.flush()?;
    Ok(())
}

/// The report as an aligned text table.
pub fn format_report(report: &ConvergenceReport) -> String {
    let mut s = format!(
        "{} order {} on {} (reference dt = {:e})\n{:>10}  {:>12}  {:>8}  {:>10}  {:>8}\n",
        report.scheme,
        report.order,
        report.model,
        report.ref_dt,
        "dt",
        "L2 error",
        "rate",
        "time (s)",
        "solves"
    );
    for r in &report.rows {
        let rate = r
            .rate
            .map(|x| format!("{x:.4}"))
            .unwrap_or_else(|| "-".into());
        s.push_str(&format!(
            "{:>10.3e}  {:>12.4e}  {:>8}  {:>10.3}  {:>8.2}\n",
            r.dt, r.l2_error, rate, r.wall_time_s, r.solves_per_step
        ));
    }
    if let Some((dt, e)) = &report.failure {
        s.push_str(&format!("incomplete: run with dt = {dt:e} failed: {e}\n"));
    }
    s
}
