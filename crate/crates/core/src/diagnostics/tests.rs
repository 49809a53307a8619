use super::io::{read_snapshot, write_report_csv, write_snapshot, write_trace_csv, TRACE_HEADER};
use super::*;
use crate::error::Error;
use crate::models::ModelSpec;
use crate::schemes::{init_state, step, CPolicy, Order, SchemeConfig, SchemeKind, StepState};
use crate::spectral::{solve_implicit, Grid2D, ScalarField2D};
use std::f64::consts::PI;

fn rec(t: f64, e: f64) -> EnergyRecord<f64> {
    EnergyRecord {
        t,
        e_total: e,
        e_linear: 0.0,
        e_nonlinear: e,
        e_modified: Some(e),
        mass: 1.0,
        aux: None,
        solve_count: 1,
    }
}

#[test]
fn monotone_checks() {
    let trace: Vec<_> = (0..10)
        .map(|i| rec(i as f64, 5.0 - i as f64 * 0.1))
        .collect();
    assert!(check_energy_monotone(&trace, 1e-10).is_empty());
    let mut bumped = trace.clone();
    let tol = 1e-10;
    bumped[6].e_modified = Some(bumped[5].e_modified.unwrap() + 2.0 * tol * 4.5);
    assert_eq!(check_energy_monotone(&bumped, tol), vec![5]);
}

#[test]
fn rates_are_scale_invariant() {
    let dts = [0.4, 0.2, 0.1, 0.05];
    let errs = [1.0, 0.26, 0.06, 0.016];
    let a = successive_rates(&dts, &errs);
    let scaled: Vec<f64> = errs.iter().map(|e| e * 1234.5).collect();
    let b = successive_rates(&dts, &scaled);
    assert!(a[0].is_none());
    for (x, y) in a.iter().zip(&b).skip(1) {
        assert!((x.unwrap() - y.unwrap()).abs() < 1e-12);
    }
    let exact = successive_rates(&[1.0, 0.5], &[4.0, 1.0]);
    assert!((exact[1].unwrap() - 2.0).abs() < 1e-15);
}

fn random_state(
    grid: &Grid2D<f64>,
    model: &ModelSpec<f64>,
    cfg: &SchemeConfig<f64>,
    seed: u64,
    warmup: usize,
) -> StepState<f64> {
    let p = PresetParams {
        mean: Some(0.1),
        amplitude: Some(0.6),
        ..Default::default()
    };
    let phi0 = make_initial("random-uniform", grid, &p, Some(seed)).unwrap();
    let mut s = init_state(&phi0, model, cfg).unwrap();
    for _ in 0..warmup {
        s = step(&s, model, cfg).unwrap();
    }
    s
}

#[test]
fn oracle_agrees_with_steppers_on_4x4() {
    let g = Grid2D::new(2.0 * PI, 2.0 * PI, 4, 4).unwrap();
    for model in [
        ModelSpec::allen_cahn(0.1, 1.0),
        ModelSpec::cahn_hilliard(0.3, 0.1),
    ] {
        for kind in SchemeKind::ALL {
            for order in [Order::First, Order::Second] {
                if !kind.supports(order) {
                    continue;
                }
                let cfg = SchemeConfig::new(kind, order, 1e-3, 1.0);
                for warmup in [0, 2] {
                    let s = random_state(&g, &model, &cfg, 11, warmup);
                    let fast = step(&s, &model, &cfg).unwrap();
                    let slow = dense_oracle(&g, &model, &cfg, &s).unwrap();
                    let tol = if kind == SchemeKind::Ieq {
                        1e-10
                    } else {
                        1e-12
                    };
                    let dphi = fast.phi.sub(&slow.phi).unwrap().max_abs();
                    assert!(
                        dphi <= tol,
                        "{kind} order {order} warmup {warmup}: {dphi:e}"
                    );
                    let daux = match (&fast.aux, &slow.aux) {
                        (a, b) if a.scalar().is_some() => {
                            (a.scalar().unwrap() - b.scalar().unwrap()).abs()
                        }
                        (a, b) => a
                            .field()
                            .unwrap()
                            .sub(b.field().unwrap())
                            .unwrap()
                            .max_abs(),
                    };
                    assert!(daux <= tol, "{kind} order {order} aux: {daux:e}");
                }
            }
        }
    }
}

#[test]
fn oracle_matches_composed_spectral_solve_on_8x8() {
    let g = Grid2D::new(2.0 * PI, 2.0 * PI, 8, 8).unwrap();
    let model = ModelSpec::allen_cahn(0.1, 1.0);
    let cfg = SchemeConfig::new(SchemeKind::ThreeSSav, Order::First, 1e-2, 1.0)
        .with_c_policy(CPolicy::Explicit(1.0));
    let s = random_state(&g, &model, &cfg, 5, 0);
    let slow = dense_oracle(&g, &model, &cfg, &s).unwrap();
    // phi + dt G chi solved with the diagonal multipliers
    let eta = s.aux.scalar().unwrap();
    let e1 = crate::models::nonlinear_energy(&s.phi, &model);
    let chi = model.potential.force(&s.phi).scaled(eta / (e1 + 1.0));
    let rhs = s.phi.add_scaled(&chi.scaled(-1.0), 1e-2).unwrap();
    let composed = solve_implicit(&rhs, 1e-2, 1.0, &model.g_symbol, &model.l_symbol).unwrap();
    assert!(composed.sub(&slow.phi).unwrap().max_abs() <= 1e-12);
}

#[test]
fn oracle_fixed_point_and_size_guard() {
    let g = Grid2D::new(1.0f64, 1.0, 4, 4).unwrap();
    let model = ModelSpec::allen_cahn(0.1, 1.0);
    let cfg = SchemeConfig::new(SchemeKind::Sav, Order::First, 0.5, 1.0);
    let s = init_state(&ScalarField2D::constant(&g, 1.0), &model, &cfg).unwrap();
    let next = dense_oracle(&g, &model, &cfg, &s).unwrap();
    assert!(next.phi.values().iter().all(|&v| (v - 1.0).abs() <= 1e-14));
    let big = Grid2D::new(1.0, 1.0, 16, 8).unwrap();
    let s = init_state(&ScalarField2D::constant(&big, 1.0), &model, &cfg).unwrap();
    assert!(matches!(
        dense_oracle(&big, &model, &cfg, &s),
        Err(Error::OracleTooLarge { nx: 16, ny: 8 })
    ));
}

fn small_run(kind: SchemeKind, dt: f64, t_end: f64) -> RunConfig<f64> {
    let grid = Grid2D::new(2.0 * PI, 2.0 * PI, 16, 16).unwrap();
    RunConfig::new(
        ModelSpec::allen_cahn(0.1, 1.0),
        SchemeConfig::new(kind, Order::Second, dt, t_end),
        grid,
        InitialCondition::SinProd { amplitude: 0.05 },
    )
}

#[test]
fn run_snapshots_use_nearest_step() {
    let mut cfg = small_run(SchemeKind::ThreeSSav, 0.1, 1.0);
    cfg.snapshot_times = vec![0.56, 0.0, 1.0, 0.04];
    assert_eq!(cfg.snapshot_step(0.56), 6);
    assert_eq!(cfg.snapshot_step(0.05), 1);
    let out = run_simulation(&cfg).unwrap();
    assert_eq!(out.steps, 10);
    assert_eq!(out.trace.len(), 11);
    let times: Vec<f64> = out.snapshots.iter().map(|s| s.0).collect();
    assert_eq!(times, vec![0.56, 0.0, 1.0, 0.04]);
    assert_eq!(out.snapshots[2].1.values(), out.final_phi.values());
    let phi0 = cfg.initial.build(&cfg.grid).unwrap();
    assert_eq!(out.snapshots[1].1.values(), phi0.values());
    assert_eq!(out.snapshots[3].1.values(), phi0.values());
}

#[test]
fn run_validation() {
    let mut cfg = small_run(SchemeKind::ThreeSSav, 0.1, 1.0);
    cfg.snapshot_times = vec![1.5];
    assert!(matches!(run_simulation(&cfg), Err(Error::Config(_))));
    let mut cfg = small_run(SchemeKind::ThreeSSav, 0.1, 1.0);
    cfg.max_steps = 5;
    assert!(matches!(run_simulation(&cfg), Err(Error::Config(_))));
}

#[test]
fn run_trace_stride_and_determinism() {
    let mut cfg = small_run(SchemeKind::Sav, 0.01, 0.25);
    cfg.trace_stride = 10;
    let a = run_simulation(&cfg).unwrap();
    let b = run_simulation(&cfg).unwrap();
    let t: Vec<f64> = a.trace.iter().map(|r| r.t).collect();
    assert_eq!(t.len(), 4);
    assert!((t[3] - 0.25).abs() < 1e-15);
    assert_eq!(a.trace, b.trace);
    assert_eq!(a.total_solves, 2 * 25 + 1);
}

#[test]
fn constant_field_stays_put_for_every_scheme() {
    for kind in SchemeKind::ALL {
        let mut cfg = small_run(kind, 0.05, 5.0);
        if !kind.supports(Order::Second) {
            cfg.scheme.order = Order::First;
        }
        cfg.initial = InitialCondition::Constant { value: 1.0 };
        cfg.snapshot_times = vec![0.0, 1.0, 2.5, 5.0];
        let out = run_simulation(&cfg).unwrap();
        for (_, snap) in &out.snapshots {
            assert!(
                snap.values().iter().all(|&v| (v - 1.0).abs() <= 1e-13),
                "{kind}"
            );
        }
    }
}

#[test]
fn single_dt_study_has_no_rate() {
    let cfg = small_run(SchemeKind::ThreeSSav, 0.01, 0.04);
    let report = convergence_study(&cfg, &[0.01], 0.001).unwrap();
    assert_eq!(report.rows.len(), 1);
    assert!(report.rows[0].rate.is_none());
    assert!(report.is_complete());
    assert!(convergence_study(&cfg, &[0.01], 0.01).is_err());
}

#[test]
fn study_rates_for_second_order() {
    let cfg = small_run(SchemeKind::ThreeSSav, 0.01, 0.64);
    let dts = [0.04, 0.02, 0.01];
    let seq =
        convergence_study_with(&cfg, &dts, 0.000625, StudyOptions { parallel: false }).unwrap();
    let par = convergence_study(&cfg, &dts, 0.000625).unwrap();
    for (a, b) in seq.rows.iter().zip(&par.rows) {
        assert_eq!(a.l2_error, b.l2_error);
    }
    for r in seq.rates() {
        assert!((1.8..2.3).contains(&r), "{r}");
    }
}

#[test]
fn study_flags_partial_results() {
    let mut cfg = small_run(SchemeKind::ThreeSSavSqrt, 1.0, 400.0);
    cfg.scheme.order = Order::First;
    cfg.grid = Grid2D::new(2.0 * PI, 2.0 * PI, 16, 16).unwrap();
    cfg.initial = InitialCondition::RandomUniform {
        mean: 0.0,
        amplitude: 2.0,
        seed: 77,
    };
    let report =
        convergence_study_with(&cfg, &[100.0, 10.0], 1e-2, StudyOptions { parallel: false });
    // the reference succeeds with a small step; the large steps may fail
    if let Ok(report) = report {
        if let Some((dt, e)) = &report.failure {
            assert!(*dt == 100.0 || *dt == 10.0);
            assert!(e.to_string().contains("radicand"));
        }
    }
}

#[test]
fn io_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small_run(SchemeKind::ThreeSSav, 0.1, 0.3);
    cfg.grid = Grid2D::new(2.0 * PI, PI, 8, 4).unwrap();
    cfg.snapshot_times = vec![0.2];
    let out = run_simulation(&cfg).unwrap();

    let trace = dir.path().join("trace.csv");
    write_trace_csv(&trace, &out.trace).unwrap();
    let text = std::fs::read_to_string(&trace).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some(TRACE_HEADER));
    assert_eq!(lines.count(), 4);

    let snap = dir.path().join("snaps").join(io::snapshot_name(0, 0.2));
    write_snapshot(&snap, &out.snapshots[0].1, 0.2).unwrap();
    let (t, f) = read_snapshot::<f64>(&snap).unwrap();
    assert_eq!(t, 0.2);
    assert_eq!(f.values(), out.snapshots[0].1.values());
    assert_eq!((f.grid().nx(), f.grid().ny()), (8, 4));

    let report = convergence_study(
        &small_run(SchemeKind::ThreeSSav, 0.1, 0.2),
        &[0.1, 0.05],
        0.01,
    )
    .unwrap();
    let path = dir.path().join("report.csv");
    write_report_csv(&path, &report).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    assert!(text.starts_with("dt,l2_error,rate,wall_time_s,solves_per_step\n"));
    assert_eq!(text.lines().count(), 3);
    assert!(io::format_report(&report).contains("rate"));
}

#[test]
fn mass_drift_helper() {
    let mut t = vec![rec(0.0, 1.0), rec(1.0, 0.9)];
    t[1].mass = 1.0 + 1e-12;
    assert!((max_mass_drift(&t) - 1e-12).abs() < 1e-15);
}
