//! Command-line front end: `run`, `converge`, `compare` and `info`.

pub mod config;

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use gradflow::diagnostics::io::{
    format_report, snapshot_name, write_report_csv, write_snapshot, write_trace_csv,
};
use gradflow::diagnostics::{
    check_energy_monotone, convergence_study, max_mass_drift, run_simulation, RunConfig, RunOutput,
    PRESETS,
};
use gradflow::models::{energy, ModelKind};
use gradflow::schemes::{Order, SchemeKind};
use gradflow::Error;

pub use config::{CliConfig, Resolved, SCHEMA};

const DEFAULT_OUT: &str = "gradflow-out";

#[derive(Debug, Parser)]
#[command(
    name = "gradflow",
    version,
    about = "Energy-stable gradient-flow integrators"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one simulation and write its energy trace and snapshots.
    Run(Common),
    /// Self-convergence study against a fine-step reference.
    Converge {
        #[command(flatten)]
        common: Common,
        /// Comma-separated time steps.
        #[arg(long, value_name = "LIST")]
        dts: Option<String>,
        /// Reference time step.
        #[arg(long = "ref-dt", value_name = "DT")]
        ref_dt: Option<f64>,
    },
    /// Run two schemes on identical data and compare their energy traces.
    Compare {
        #[command(flatten)]
        common: Common,
        /// Two scheme names, `a,b`.
        #[arg(long, value_name = "A,B")]
        schemes: Option<String>,
    },
    /// List models, schemes, presets and configuration keys.
    Info,
}

#[derive(Debug, Args)]
pub struct Common {
    /// Experiment file with `key = value` lines.
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Override one key (repeatable).
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,
    /// Output directory.
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Validate and print the resolved parameters without stepping.
    #[arg(long)]
    pub dry_run: bool,
}

impl Common {
    fn load(&self) -> Result<CliConfig, Error> {
        let mut cfg = match &self.config {
            Some(p) => CliConfig::load(p)?,
            None => CliConfig::default(),
        };
        for s in &self.set {
            cfg.set(s)?;
        }
        Ok(cfg)
    }

    fn out_dir(&self, resolved: &Resolved) -> PathBuf {
        self.out
            .clone()
            .or_else(|| resolved.run.output_dir.clone())
            .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT))
    }
}

/// Exit status for an error: 2 for configuration and usage problems, 1 for
/// failures during a run.
pub fn exit_code(e: &Error) -> i32 {
    match e.root() {
        Error::Config(_) | Error::Usage(_) => 2,
        _ => 1,
    }
}

/// Parses `args` (including the program name) and executes the command.
pub fn run_cli<I, A>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = A>,
    A: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 {
                write!(out, "{text}")
            } else {
                write!(err, "{text}")
            };
            return code;
        }
    };
    match execute(&cli.command, out) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            exit_code(&e)
        }
    }
}

pub fn execute(cmd: &Command, out: &mut dyn Write) -> Result<(), Error> {
    match cmd {
        Command::Run(common) => cmd_run(common, out),
        Command::Converge {
            common,
            dts,
            ref_dt,
        } => cmd_converge(common, dts.as_deref(), *ref_dt, out),
        Command::Compare { common, schemes } => cmd_compare(common, schemes.as_deref(), out),
        Command::Info => cmd_info(out),
    }
}

fn describe(run: &RunConfig<f64>, out: &mut dyn Write) -> Result<(), Error> {
    let m = &run.model;
    let s = &run.scheme;
    let phi0 = run.initial.build(&run.grid)?;
    let c = s.c_policy.resolve(&phi0, m)?;
    let e0 = energy(&phi0, m)?;
    writeln!(
        out,
        "model        {} (epsilon = {}, mobility = {}, beta = {})",
        m.name(),
        m.epsilon,
        m.mobility,
        m.beta
    )?;
    writeln!(out, "scheme       {} order {}", s.kind, s.order)?;
    writeln!(
        out,
        "time         dt = {:e}, t_end = {}, steps = {}",
        s.dt,
        s.t_end,
        s.n_steps()
    )?;
    writeln!(out, "grid         {}", run.grid)?;
    writeln!(out, "initial      {:?}", run.initial)?;
    writeln!(out, "C            {} -> {:.12e}", s.c_policy, c)?;
    writeln!(
        out,
        "E(phi0)      {:.12e} (linear {:.12e}, nonlinear {:.12e})",
        e0.e_total, e0.e_linear, e0.e_nonlinear
    )?;
    writeln!(out, "mass(phi0)   {:.12e}", e0.mass)?;
    writeln!(out, "snapshots    {:?}", run.snapshot_times)?;
    Ok(())
}

fn write_run(dir: &Path, trace_name: &str, output: &RunOutput<f64>) -> Result<(), Error> {
    std::fs::create_dir_all(dir)?;
    if !output.trace.is_empty() {
        write_trace_csv(&dir.join(trace_name), &output.trace)?;
    }
    for (i, (t, f)) in output.snapshots.iter().enumerate() {
        write_snapshot(&dir.join("snapshots").join(snapshot_name(i, *t)), f, *t)?;
    }
    Ok(())
}

pub fn cmd_run(common: &Common, out: &mut dyn Write) -> Result<(), Error> {
    let resolved = common.load()?.resolve()?;
    if common.dry_run {
        return describe(&resolved.run, out);
    }
    let dir = common.out_dir(&resolved);
    let output = run_simulation(&resolved.run)?;
    write_run(&dir, "trace.csv", &output)?;
    let last = output.trace.last();
    let violations = check_energy_monotone(&output.trace, 1e-10).len();
    writeln!(
        out,
        "{} order {}: steps {}, t {}, E {}, E_mod {}, mass drift {:.3e}, monotone violations {}, solves/step {:.2}, wall {:.3}s",
        resolved.run.scheme.kind,
        resolved.run.scheme.order,
        output.steps,
        last.map(|r| r.t).unwrap_or(resolved.run.scheme.t_end),
        last.map(|r| format!("{:.10e}", r.e_total)).unwrap_or_else(|| "-".into()),
        last.and_then(|r| r.e_modified).map(|e| format!("{e:.10e}")).unwrap_or_else(|| "-".into()),
        max_mass_drift(&output.trace),
        violations,
        output.solves_per_step(),
        output.wall_time.as_secs_f64()
    )?;
    Ok(())
}

pub fn cmd_converge(
    common: &Common,
    dts: Option<&str>,
    ref_dt: Option<f64>,
    out: &mut dyn Write,
) -> Result<(), Error> {
    let resolved = common.load()?.resolve()?;
    let dts = match dts {
        Some(s) => config::parse_list(s).map_err(|e| Error::Usage(format!("--dts: {e}")))?,
        None => resolved
            .dts
            .clone()
            .ok_or_else(|| Error::Usage("no time steps: pass --dts or set study.dts".into()))?,
    };
    let ref_dt = ref_dt.or(resolved.ref_dt).ok_or_else(|| {
        Error::Usage("no reference step: pass --ref-dt or set study.ref_dt".into())
    })?;
    if common.dry_run {
        describe(&resolved.run, out)?;
        writeln!(out, "study        dts = {dts:?}, reference dt = {ref_dt:e}")?;
        return Ok(());
    }
    let dir = common.out_dir(&resolved);
    let mut report = convergence_study(&resolved.run, &dts, ref_dt)?;
    std::fs::create_dir_all(&dir)?;
    write_report_csv(&dir.join("report.csv"), &report)?;
    write!(out, "{}", format_report(&report))?;
    match report.failure.take() {
        Some((_, e)) => Err(e),
        None => Ok(()),
    }
}

pub fn cmd_compare(
    common: &Common,
    schemes: Option<&str>,
    out: &mut dyn Write,
) -> Result<(), Error> {
    let cfg = common.load()?;
    let resolved = cfg.resolve()?;
    let (a, b) = match schemes {
        Some(s) => config::parse_pair(s).map_err(|e| Error::Usage(format!("--schemes: {e}")))?,
        None => resolved.compare.ok_or_else(|| {
            Error::Usage("no schemes: pass --schemes a,b or set compare.schemes".into())
        })?,
    };
    let explicit_c = cfg.get("c.policy").is_some() || cfg.get("c.value").is_some();
    let variant = |kind: SchemeKind| -> Result<RunConfig<f64>, Error> {
        let mut run = resolved.run.clone();
        run.scheme.kind = kind;
        if !explicit_c {
            run.scheme.c_policy = kind.default_c_policy();
        }
        run.validate()?;
        Ok(run)
    };
    let (ra, rb) = (variant(a)?, variant(b)?);
    if common.dry_run {
        describe(&ra, out)?;
        describe(&rb, out)?;
        return Ok(());
    }
    let dir = common.out_dir(&resolved);
    let oa = run_simulation(&ra)?;
    let ob = run_simulation(&rb)?;
    write_run(
        &dir.join(format!("a_{a}")),
        &format!("trace_a_{a}.csv"),
        &oa,
    )?;
    write_run(
        &dir.join(format!("b_{b}")),
        &format!("trace_b_{b}.csv"),
        &ob,
    )?;

    let discrepancy = oa
        .trace
        .iter()
        .zip(&ob.trace)
        .map(|(x, y)| (x.e_total - y.e_total).abs() / y.e_total.abs().max(f64::MIN_POSITIVE))
        .fold(0.0, f64::max);
    let (ta, tb) = (oa.wall_time.as_secs_f64(), ob.wall_time.as_secs_f64());
    let summary = format!(
        "schemes {a} vs {b} (order {})\nmax relative energy discrepancy {:.6e}\nsolves per step {:.3} vs {:.3}\nwall time {:.3}s vs {:.3}s (ratio {:.3})\n",
        resolved.run.scheme.order,
        discrepancy,
        oa.solves_per_step(),
        ob.solves_per_step(),
        ta,
        tb,
        if tb > 0.0 { ta / tb } else { f64::NAN }
    );
    std::fs::write(dir.join("compare.txt"), &summary)?;
    write!(out, "{summary}")?;
    Ok(())
}

pub fn cmd_info(out: &mut dyn Write) -> Result<(), Error> {
    writeln!(out, "models:")?;
    for m in ModelKind::ALL {
        writeln!(out, "  {m}")?;
    }
    writeln!(out, "schemes:")?;
    for s in SchemeKind::ALL {
        let orders: Vec<String> = [Order::First, Order::Second]
            .into_iter()
            .filter(|&o| s.supports(o))
            .map(|o| o.to_string())
            .collect();
        writeln!(
            out,
            "  {:<12} orders {:<4} default C {}",
            s.name(),
            orders.join(","),
            s.default_c_policy::<f64>()
        )?;
    }
    writeln!(out, "presets:")?;
    for p in PRESETS {
        writeln!(out, "  {p}")?;
    }
    writeln!(out, "config keys:")?;
    for (k, d) in SCHEMA {
        writeln!(out, "  {k:<20} {d}")?;
    }
    Ok(())
}
