//! Time steppers for `phi_t = G (L phi + F'(phi))`.
//!
//! Every scheme treats `L` implicitly through the constant-coefficient
//! operator `I - theta dt G L` and the nonlinearity explicitly through an
//! auxiliary variable:
//!
//! * `sav`, `ieq`: classical `r = sqrt(E1 + C)` / `q = sqrt(F + C)`; the new
//!   auxiliary value is coupled to `phi^{n+1}`, so a step needs two solves
//!   (SAV) or a variable-coefficient Krylov solve (IEQ).
//! * `3s-sav`, `3s-ieq`: `eta = E1 + C` / `q = F + C` enter only through the
//!   explicit coupling field `chi`, so `phi^{n+1}` comes from a single solve
//!   and the auxiliary variable is updated afterwards.
//! * `3s-sav-sqrt`: the step-by-step update applied to `r` itself, which
//!   needs `r^2 + (chi, phi^{n+1} - phi^n) >= 0` and fails otherwise.
//!
//! With `eta = r^2` the step-by-step update of `r^2` is the same arithmetic as
//! `3s-sav`, so it is not a separate stepper.

mod config;
mod state;

pub use config::{CPolicy, Order, SchemeConfig, SchemeKind};
pub use state::{AuxVariable, CouplingTerm, StepState};

pub(crate) use state::OperatorCache;

use crate::error::{Error, Result};
use crate::krylov::{gmres, GmresOptions};
use crate::models::{energy, nonlinear_energy, EnergyRecord, ModelSpec};
use crate::scalar::Scalar;
use crate::spectral::{dealiased, inner_product, integrate, ScalarField2D};

/// Builds the time-zero state for `cfg.kind`, initializing the auxiliary
/// variable exactly from `phi0`.
pub fn init_state<T: Scalar>(
    phi0: &ScalarField2D<T>,
    model: &ModelSpec<T>,
    cfg: &SchemeConfig<T>,
) -> Result<StepState<T>> {
    cfg.validate()?;
    phi0.check_finite("initial condition")?;
    let grid = phi0.grid();
    model.validate_on(grid)?;
    let c = cfg.c_policy.resolve(phi0, model)?;
    let aux = match cfg.kind {
        SchemeKind::Sav | SchemeKind::ThreeSSavSqrt => {
            let radicand = nonlinear_energy(phi0, model) + c;
            if !(radicand > cfg.guard) {
                return Err(Error::Config(format!(
                    "E1(phi0) + C = {radicand:e} is not positive; the square root needs a larger C"
                )));
            }
            AuxVariable::ScalarR(radicand.sqrt())
        }
        SchemeKind::ThreeSSav => {
            let eta = nonlinear_energy(phi0, model) + c;
            if eta.abs() <= cfg.guard {
                return Err(Error::Config(format!(
                    "E1(phi0) + C = {eta:e} is too close to zero; choose another C"
                )));
            }
            AuxVariable::ScalarEta(eta)
        }
        SchemeKind::Ieq => {
            let shifted = model.potential.density(phi0).map(|v| v + c);
            if let Some(idx) = shifted.values().iter().position(|&v| !(v > T::zero())) {
                let (i, j) = grid.unflatten(idx);
                return Err(Error::Config(format!(
                    "F(phi0) + C = {:e} at node ({i}, {j}) is not positive; the square root needs a larger C",
                    shifted.values()[idx]
                )));
            }
            AuxVariable::FieldQ(shifted.map(|v| v.sqrt()))
        }
        SchemeKind::ThreeSIeq => {
            let q = model.potential.density(phi0).map(|v| v + c);
            check_pointwise_guard(&q, cfg.guard).map_err(|_| {
                Error::Config("F(phi0) + C vanishes at some node; choose another C".into())
            })?;
            AuxVariable::FieldQ(q)
        }
    };
    Ok(StepState {
        phi: phi0.clone(),
        phi_prev: None,
        aux,
        aux_prev: None,
        n: 0,
        t: T::zero(),
        chi_cache: None,
        c,
        last_solves: 0,
        last_iterations: 0,
        cache: OperatorCache::new(model, grid),
    })
}

/// Advances `state` by one step of `cfg.kind`.
pub fn step<T: Scalar>(
    state: &StepState<T>,
    model: &ModelSpec<T>,
    cfg: &SchemeConfig<T>,
) -> Result<StepState<T>> {
    match cfg.kind {
        SchemeKind::Sav => step_sav(state, model, cfg),
        SchemeKind::Ieq => step_ieq(state, model, cfg),
        SchemeKind::ThreeSSav => step_3ssav(state, model, cfg),
        SchemeKind::ThreeSIeq => step_3sieq(state, model, cfg),
        SchemeKind::ThreeSSavSqrt => step_3ssav_sqrt(state, model, cfg),
    }
}

/// First-order startup predictor for the second-order schemes: one backward
/// Euler half step `(phi - phi0) / (dt/2) = G (L phi + F'(phi0))`, returning
/// the predicted field and `E1(phi) + C`.
pub fn startup_half_step<T: Scalar>(
    phi0: &ScalarField2D<T>,
    model: &ModelSpec<T>,
    cfg: &SchemeConfig<T>,
) -> Result<(ScalarField2D<T>, T)> {
    let c = cfg.c_policy.resolve(phi0, model)?;
    let cache = OperatorCache::new(model, phi0.grid());
    let phi_half = half_step(phi0, model, cfg, &cache)?;
    let eta_half = nonlinear_energy(&phi_half, model) + c;
    Ok((phi_half, eta_half))
}

fn half_step<T: Scalar>(
    phi0: &ScalarField2D<T>,
    model: &ModelSpec<T>,
    cfg: &SchemeConfig<T>,
    cache: &OperatorCache<T>,
) -> Result<ScalarField2D<T>> {
    let solver = cache.solver(cfg.dt * T::of(0.5), T::one())?;
    let force = dealiased(model.potential.force(phi0));
    solver.step(Some(phi0), Some(&force))
}

struct Workspace<T: Scalar> {
    cache: OperatorCache<T>,
    theta: T,
    solves: usize,
}

impl<T: Scalar> Workspace<T> {
    fn new(state: &StepState<T>, model: &ModelSpec<T>, cfg: &SchemeConfig<T>) -> Result<Self> {
        cfg.validate()?;
        if cfg.order == Order::Second && state.n > 0 && state.phi_prev.is_none() {
            return Err(Error::Usage(
                "second-order step with n >= 1 needs the previous time level".into(),
            ));
        }
        Ok(Workspace {
            cache: state.cache.for_model(model, state.phi.grid()),
            theta: cfg.order.theta(),
            solves: 0,
        })
    }

    /// One theta step of the linear part with explicit forcing.
    fn theta_step(
        &mut self,
        cfg: &SchemeConfig<T>,
        state: Option<&ScalarField2D<T>>,
        source: Option<&ScalarField2D<T>>,
    ) -> Result<ScalarField2D<T>> {
        self.solves += 1;
        self.cache.solver(cfg.dt, self.theta)?.step(state, source)
    }

    /// Point at which the nonlinear terms are evaluated: `phi^n` for first
    /// order, the extrapolated midpoint (or the startup predictor at `n = 0`)
    /// for second order. The flag reports whether the startup was used.
    fn evaluation_point(
        &mut self,
        st: &StepState<T>,
        model: &ModelSpec<T>,
        cfg: &SchemeConfig<T>,
    ) -> Result<(ScalarField2D<T>, bool)> {
        match (cfg.order, &st.phi_prev) {
            (Order::First, _) => Ok((st.phi.clone(), false)),
            (Order::Second, Some(prev)) if st.n > 0 => {
                Ok((st.phi.extrapolate_midpoint(prev)?, false))
            }
            (Order::Second, _) => {
                self.solves += 1;
                Ok((half_step(&st.phi, model, cfg, &self.cache)?, true))
            }
        }
    }

    fn finish(
        self,
        st: &StepState<T>,
        cfg: &SchemeConfig<T>,
        phi: ScalarField2D<T>,
        aux: AuxVariable<T>,
        chi: CouplingTerm<T>,
        iterations: usize,
    ) -> StepState<T> {
        let n = st.n + 1;
        StepState {
            phi_prev: Some(st.phi.clone()),
            phi,
            aux_prev: Some(st.aux.clone()),
            aux,
            n,
            t: T::of(n as f64) * cfg.dt,
            chi_cache: Some(chi),
            c: st.c,
            last_solves: self.solves,
            last_iterations: iterations,
            cache: self.cache,
        }
    }
}

fn check_scalar_guard<T: Scalar>(value: T, guard: T) -> Result<()> {
    if value.abs() > guard && value.is_finite() {
        Ok(())
    } else {
        Err(Error::AuxDegenerate {
            value: value.to_f64_lossy(),
            location: None,
        })
    }
}

fn check_pointwise_guard<T: Scalar>(f: &ScalarField2D<T>, guard: T) -> Result<()> {
    match f.values().iter().position(|v| !(v.abs() > guard)) {
        None => Ok(()),
        Some(idx) => Err(Error::AuxDegenerate {
            value: f.values()[idx].to_f64_lossy(),
            location: Some(f.grid().unflatten(idx)),
        }),
    }
}

fn tag<T: Scalar>(r: Result<StepState<T>>, st: &StepState<T>) -> Result<StepState<T>> {
    r.map_err(|e| match e {
        e @ Error::Step { .. } => e,
        e => Error::Step {
            n: st.n,
            t: st.t.to_f64_lossy(),
            source: Box::new(e),
        },
    })
}

/// Step-by-step SAV: `chi = eta~ / (E1(phi~) + C) F'(phi~)`, one solve for
/// `phi^{n+1}`, then `eta^{n+1} = eta^n + (chi, phi^{n+1} - phi^n)`.
pub fn step_3ssav<T: Scalar>(
    st: &StepState<T>,
    model: &ModelSpec<T>,
    cfg: &SchemeConfig<T>,
) -> Result<StepState<T>> {
    tag(step_3ssav_inner(st, model, cfg), st)
}

fn step_3ssav_inner<T: Scalar>(
    st: &StepState<T>,
    model: &ModelSpec<T>,
    cfg: &SchemeConfig<T>,
) -> Result<StepState<T>> {
    let mut ws = Workspace::new(st, model, cfg)?;
    let eta = st.aux.expect_scalar("3s-sav")?;
    let (phi_hat, startup) = ws.evaluation_point(st, model, cfg)?;
    let e1_hat = nonlinear_energy(&phi_hat, model);
    let eta_hat = match (cfg.order, startup) {
        (Order::First, _) => eta,
        (Order::Second, true) => e1_hat + st.c,
        (Order::Second, false) => {
            let prev = st
                .aux_prev
                .as_ref()
                .ok_or_else(|| Error::Usage("missing previous eta".into()))?
                .expect_scalar("3s-sav")?;
            T::of(1.5) * eta - T::of(0.5) * prev
        }
    };
    let denom = e1_hat + st.c;
    check_scalar_guard(denom, cfg.guard)?;
    let ratio = eta_hat / denom;
    let chi = dealiased(model.potential.force(&phi_hat).scaled(ratio));
    let phi_next = ws.theta_step(cfg, Some(&st.phi), Some(&chi))?;
    let eta_next = eta + inner_product(&chi, &phi_next.sub(&st.phi)?)?;
    if !eta_next.is_finite() {
        return Err(Error::NonFinite {
            context: "eta update".into(),
        });
    }
    let chi = CouplingTerm {
        chi,
        kind: "eta/(E1+C) F'",
    };
    Ok(ws.finish(st, cfg, phi_next, AuxVariable::ScalarEta(eta_next), chi, 0))
}

/// Step-by-step IEQ with the pointwise `q = F + C`; the linear system has
/// constant coefficients, so one solve per step.
pub fn step_3sieq<T: Scalar>(
    st: &StepState<T>,
    model: &ModelSpec<T>,
    cfg: &SchemeConfig<T>,
) -> Result<StepState<T>> {
    tag(step_3sieq_inner(st, model, cfg), st)
}

fn step_3sieq_inner<T: Scalar>(
    st: &StepState<T>,
    model: &ModelSpec<T>,
    cfg: &SchemeConfig<T>,
) -> Result<StepState<T>> {
    let mut ws = Workspace::new(st, model, cfg)?;
    let q = st.aux.expect_field("3s-ieq")?;
    let (phi_hat, startup) = ws.evaluation_point(st, model, cfg)?;
    let denom = model.potential.density(&phi_hat).map(|v| v + st.c);
    let q_hat = match (cfg.order, startup) {
        (Order::First, _) => q.clone(),
        (Order::Second, true) => denom.clone(),
        (Order::Second, false) => {
            let prev = st
                .aux_prev
                .as_ref()
                .ok_or_else(|| Error::Usage("missing previous q".into()))?
                .expect_field("3s-ieq")?;
            q.extrapolate_midpoint(prev)?
        }
    };
    check_pointwise_guard(&denom, cfg.guard)?;
    let mut chi = model.potential.force(&phi_hat);
    for ((c, &qh), &d) in chi
        .values_mut()
        .iter_mut()
        .zip(q_hat.values())
        .zip(denom.values())
    {
        *c = qh / d * *c;
    }
    let chi = dealiased(chi);
    let phi_next = ws.theta_step(cfg, Some(&st.phi), Some(&chi))?;
    let mut q_next = q.clone();
    for (((qn, &c), &a), &b) in q_next
        .values_mut()
        .iter_mut()
        .zip(chi.values())
        .zip(phi_next.values())
        .zip(st.phi.values())
    {
        *qn = *qn + c * (a - b);
    }
    q_next.check_finite("q update")?;
    let chi = CouplingTerm {
        chi,
        kind: "q/(F+C) F'",
    };
    Ok(ws.finish(st, cfg, phi_next, AuxVariable::FieldQ(q_next), chi, 0))
}

/// Classical SAV. The coupled system for `(phi^{n+1}, r^{n+1})` is reduced
/// to a scalar equation: `phi^{n+1} = p + s w` with
/// `p = A^{-1}(phi^n + (1-theta) dt G L phi^n)` and `w = dt A^{-1} G b`,
/// where `s` is `r^{n+1}` (order 1) or `(r^{n+1} + r^n)/2` (order 2).
pub fn step_sav<T: Scalar>(
    st: &StepState<T>,
    model: &ModelSpec<T>,
    cfg: &SchemeConfig<T>,
) -> Result<StepState<T>> {
    tag(step_sav_inner(st, model, cfg), st)
}

fn step_sav_inner<T: Scalar>(
    st: &StepState<T>,
    model: &ModelSpec<T>,
    cfg: &SchemeConfig<T>,
) -> Result<StepState<T>> {
    let mut ws = Workspace::new(st, model, cfg)?;
    let r = st.aux.expect_scalar("sav")?;
    let (phi_hat, _) = ws.evaluation_point(st, model, cfg)?;
    let radicand = nonlinear_energy(&phi_hat, model) + st.c;
    if !(radicand > cfg.guard) {
        return Err(Error::Config(format!(
            "E1 + C = {radicand:e} is not positive at the evaluation point; increase C"
        )));
    }
    let b = dealiased(
        model
            .potential
            .force(&phi_hat)
            .scaled(T::one() / radicand.sqrt()),
    );
    let kappa = ws.theta * T::of(0.5);
    let p = ws.theta_step(cfg, Some(&st.phi), None)?;
    let w = ws.theta_step(cfg, None, Some(&b))?;
    let pivot = T::one() - kappa * inner_product(&b, &w)?;
    check_scalar_guard(pivot, cfg.guard)?;
    let s = (r + kappa * inner_product(&b, &p.sub(&st.phi)?)?) / pivot;
    let phi_next = p.add_scaled(&w, s)?;
    let r_next = r + T::of(0.5) * inner_product(&b, &phi_next.sub(&st.phi)?)?;
    if !r_next.is_finite() {
        return Err(Error::NonFinite {
            context: "r update".into(),
        });
    }
    let chi = CouplingTerm {
        chi: b,
        kind: "F'/sqrt(E1+C)",
    };
    Ok(ws.finish(st, cfg, phi_next, AuxVariable::ScalarR(r_next), chi, 0))
}

/// Classical IEQ. Eliminating `q^{n+1}` leaves the variable-coefficient
/// system `(I - theta dt G L - kappa dt G b^2) phi^{n+1} = rhs`, solved by
/// GMRES preconditioned with `(I - theta dt G L)^{-1}`.
pub fn step_ieq<T: Scalar>(
    st: &StepState<T>,
    model: &ModelSpec<T>,
    cfg: &SchemeConfig<T>,
) -> Result<StepState<T>> {
    tag(step_ieq_inner(st, model, cfg), st)
}

fn step_ieq_inner<T: Scalar>(
    st: &StepState<T>,
    model: &ModelSpec<T>,
    cfg: &SchemeConfig<T>,
) -> Result<StepState<T>> {
    let mut ws = Workspace::new(st, model, cfg)?;
    let q = st.aux.expect_field("ieq")?;
    let (phi_hat, _) = ws.evaluation_point(st, model, cfg)?;
    let grid = st.phi.grid().clone();
    let radicand = model.potential.density(&phi_hat).map(|v| v + st.c);
    if let Some(idx) = radicand.values().iter().position(|v| !(*v > T::zero())) {
        let (i, j) = grid.unflatten(idx);
        return Err(Error::Config(format!(
            "F + C = {:e} at node ({i}, {j}) is not positive; increase C",
            radicand.values()[idx]
        )));
    }
    let mut b = model.potential.force(&phi_hat);
    for (bv, &rv) in b.values_mut().iter_mut().zip(radicand.values()) {
        *bv = *bv / rv.sqrt();
    }
    let b = dealiased(b);
    let b2 = b.map(|v| v * v);
    let kappa = ws.theta * T::of(0.5);

    let mut forcing = b.clone();
    for (((f, &bq), &bb), &p) in forcing
        .values_mut()
        .iter_mut()
        .zip(q.values())
        .zip(b2.values())
        .zip(st.phi.values())
    {
        *f = *f * bq - kappa * bb * p;
    }
    let rhs = ws.theta_step(cfg, Some(&st.phi), Some(&forcing))?;
    let solver = ws.cache.solver(cfg.dt, ws.theta)?;
    let mut applications = 0usize;
    let outcome = gmres(
        |u: &[T]| {
            applications += 1;
            let weighted: Vec<T> = u.iter().zip(b2.values()).map(|(&x, &w)| w * x).collect();
            let src = ScalarField2D::from_values(&grid, weighted)?;
            let corr = solver.step(None, Some(&src))?;
            Ok(u.iter()
                .zip(corr.values())
                .map(|(&x, &c)| x - kappa * c)
                .collect())
        },
        rhs.values(),
        GmresOptions {
            tol: cfg.ieq_tol,
            max_iter: cfg.ieq_max_iter,
            restart: 50,
        },
    )?;
    ws.solves += applications;
    let phi_next = ScalarField2D::from_values(&grid, outcome.x)?;
    let mut q_next = q.clone();
    let half = T::of(0.5);
    for (((qn, &bv), &a), &p) in q_next
        .values_mut()
        .iter_mut()
        .zip(b.values())
        .zip(phi_next.values())
        .zip(st.phi.values())
    {
        *qn = *qn + half * bv * (a - p);
    }
    q_next.check_finite("q update")?;
    let chi = CouplingTerm {
        chi: b,
        kind: "F'/sqrt(F+C)",
    };
    Ok(ws.finish(
        st,
        cfg,
        phi_next,
        AuxVariable::FieldQ(q_next),
        chi,
        outcome.iterations,
    ))
}

/// Step-by-step update of the square-root variable:
/// `chi = r / sqrt(E1 + C) F'(phi^n)`, one solve, then
/// `r^{n+1} = sqrt(r^2 + (chi, phi^{n+1} - phi^n))`. Fails with
/// [`Error::RadicandNegative`] when the radicand drops below zero.
pub fn step_3ssav_sqrt<T: Scalar>(
    st: &StepState<T>,
    model: &ModelSpec<T>,
    cfg: &SchemeConfig<T>,
) -> Result<StepState<T>> {
    tag(step_3ssav_sqrt_inner(st, model, cfg), st)
}

fn step_3ssav_sqrt_inner<T: Scalar>(
    st: &StepState<T>,
    model: &ModelSpec<T>,
    cfg: &SchemeConfig<T>,
) -> Result<StepState<T>> {
    let mut ws = Workspace::new(st, model, cfg)?;
    let r = st.aux.expect_scalar("3s-sav-sqrt")?;
    let denom = nonlinear_energy(&st.phi, model) + st.c;
    if !(denom > T::zero()) {
        return Err(Error::RadicandNegative {
            value: denom.to_f64_lossy(),
        });
    }
    check_scalar_guard(denom, cfg.guard)?;
    let chi = dealiased(model.potential.force(&st.phi).scaled(r / denom.sqrt()));
    let phi_next = ws.theta_step(cfg, Some(&st.phi), Some(&chi))?;
    let radicand = r * r + inner_product(&chi, &phi_next.sub(&st.phi)?)?;
    if radicand < T::zero() {
        return Err(Error::RadicandNegative {
            value: radicand.to_f64_lossy(),
        });
    }
    let chi = CouplingTerm {
        chi,
        kind: "r/sqrt(E1+C) F'",
    };
    Ok(ws.finish(
        st,
        cfg,
        phi_next,
        AuxVariable::ScalarR(radicand.sqrt()),
        chi,
        0,
    ))
}

/// Auxiliary contribution to the modified energy: `eta`, `r^2`, `int q` or
/// `int q^2` depending on the scheme.
pub fn aux_energy<T: Scalar>(aux: &AuxVariable<T>, kind: SchemeKind) -> T {
    match (aux, kind) {
        (AuxVariable::ScalarEta(eta), _) => *eta,
        (AuxVariable::ScalarR(r), _) => *r * *r,
        (AuxVariable::FieldQ(q), SchemeKind::Ieq) => integrate(&q.map(|v| v * v)),
        (AuxVariable::FieldQ(q), _) => integrate(q),
    }
}

/// Full energy record of `state`, including the scheme's modified energy.
pub fn energy_record<T: Scalar>(
    state: &StepState<T>,
    model: &ModelSpec<T>,
    kind: SchemeKind,
) -> Result<EnergyRecord<T>> {
    let mut rec = energy(&state.phi, model)?;
    rec.t = state.t;
    rec.e_modified = Some(rec.e_linear + aux_energy(&state.aux, kind));
    rec.aux = Some(state.aux.summary());
    rec.solve_count = state.last_solves;
    Ok(rec)
}

/// Modified energy `(phi, L phi)/2 + aux` of `state`.
pub fn modified_energy<T: Scalar>(
    state: &StepState<T>,
    model: &ModelSpec<T>,
    kind: SchemeKind,
) -> Result<T> {
    let lphi = crate::spectral::apply_table(
        &state.phi,
        state.cache.for_model(model, state.phi.grid()).l(),
    )?;
    Ok(T::of(0.5) * inner_product(&state.phi, &lphi)? + aux_energy(&state.aux, kind))
}
