//! Brute-force reference stepper on small grids: `L`, `G` and the
//! dealiasing filter are assembled column by column from canonical basis
//! vectors and every linear system is solved by dense LU.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::models::{nonlinear_energy, ModelSpec};
use crate::scalar::Scalar;
use crate::schemes::{
    AuxVariable, CouplingTerm, OperatorCache, Order, SchemeConfig, SchemeKind, StepState,
};
use crate::spectral::{apply_operator, dealiased, Grid2D, ScalarField2D};

const MAX_SIDE: usize = 8;

struct Dense<'a, T: Scalar> {
    grid: &'a Grid2D<T>,
    model: &'a ModelSpec<T>,
    l: DMatrix<f64>,
    g: DMatrix<f64>,
    filter: DMatrix<f64>,
    cell: f64,
    c: f64,
    factorizations: usize,
}

fn vec_of<T: Scalar>(f: &ScalarField2D<T>) -> DVector<f64> {
    DVector::from_iterator(
        f.values().len(),
        f.values().iter().map(|v| v.to_f64_lossy()),
    )
}

fn field_of<T: Scalar>(grid: &Grid2D<T>, v: &DVector<f64>) -> Result<ScalarField2D<T>> {
    ScalarField2D::from_values(grid, v.iter().map(|&x| T::of(x)).collect())
}

fn assemble<T: Scalar>(
    grid: &Grid2D<T>,
    op: impl Fn(&ScalarField2D<T>) -> Result<ScalarField2D<T>>,
) -> Result<DMatrix<f64>> {
    let n = grid.len();
    let mut cols = Vec::with_capacity(n);
    for k in 0..n {
        let mut e = ScalarField2D::zeros(grid);
        e.values_mut()[k] = T::one();
        cols.push(vec_of(&op(&e)?));
    }
    Ok(DMatrix::from_columns(&cols))
}

impl<'a, T: Scalar> Dense<'a, T> {
    fn new(grid: &'a Grid2D<T>, model: &'a ModelSpec<T>, c: T) -> Result<Self> {
        let l = assemble(grid, |e| apply_operator(e, &model.l_symbol))?;
        let g = assemble(grid, |e| apply_operator(e, &model.g_symbol))?;
        let filter = if grid.dealias() {
            assemble(grid, |e| Ok(dealiased(e.clone())))?
        } else {
            DMatrix::identity(grid.len(), grid.len())
        };
        Ok(Dense {
            grid,
            model,
            l,
            g,
            filter,
            cell: grid.cell_area().to_f64_lossy(),
            c: c.to_f64_lossy(),
            factorizations: 0,
        })
    }

    fn pointwise(&self, v: &DVector<f64>, f: impl Fn(T) -> T) -> DVector<f64> {
        v.map(|x| f(T::of(x)).to_f64_lossy())
    }

    fn force(&self, v: &DVector<f64>) -> DVector<f64> {
        &self.filter * self.pointwise(v, |x| self.model.potential.derivative(x))
    }

    fn e1(&self, v: &DVector<f64>) -> Result<f64> {
        Ok(nonlinear_energy(&field_of(self.grid, v)?, self.model).to_f64_lossy())
    }

    fn inner(&self, a: &DVector<f64>, b: &DVector<f64>) -> f64 {
        a.dot(b) * self.cell
    }

    fn lu_solve(&mut self, m: DMatrix<f64>, rhs: &DVector<f64>) -> Result<DVector<f64>> {
        self.factorizations += 1;
        m.lu()
            .solve(rhs)
            .ok_or_else(|| Error::Config("dense oracle: singular system".into()))
    }

    /// `(I - theta dt G L) u = phi + (1 - theta) dt G L phi + dt G src`.
    fn theta_solve(
        &mut self,
        dt: f64,
        theta: f64,
        phi: &DVector<f64>,
        src: &DVector<f64>,
    ) -> Result<DVector<f64>> {
        let n = phi.len();
        let gl = &self.g * &self.l;
        let a = DMatrix::identity(n, n) - &gl * (theta * dt);
        let rhs = phi + &gl * phi * ((1.0 - theta) * dt) + &self.g * src * dt;
        self.lu_solve(a, &rhs)
    }

    /// `(I - theta dt G L) u - theta dt G B a = phi + (1-theta) dt G (L phi + B aux)`
    /// `a - (B^T W phi_next) / 2 = aux - (B^T W phi) / 2`
    /// where `B` maps the auxiliary unknowns to a source field and `W` is the
    /// quadrature weight.
    fn coupled_solve(
        &mut self,
        dt: f64,
        theta: f64,
        phi: &DVector<f64>,
        b: &DMatrix<f64>,
        aux: &DVector<f64>,
        weight: f64,
    ) -> Result<(DVector<f64>, DVector<f64>)> {
        let n = phi.len();
        let m = aux.len();
        let gl = &self.g * &self.l;
        let mut big = DMatrix::zeros(n + m, n + m);
        big.view_mut((0, 0), (n, n))
            .copy_from(&(DMatrix::identity(n, n) - &gl * (theta * dt)));
        big.view_mut((0, n), (n, m))
            .copy_from(&(&self.g * b * (-theta * dt)));
        big.view_mut((n, 0), (m, n))
            .copy_from(&(b.transpose() * (-0.5 * weight)));
        big.view_mut((n, n), (m, m))
            .copy_from(&DMatrix::identity(m, m));
        let mut rhs = DVector::zeros(n + m);
        rhs.rows_mut(0, n)
            .copy_from(&(phi + (&gl * phi + &self.g * b * aux) * ((1.0 - theta) * dt)));
        rhs.rows_mut(n, m)
            .copy_from(&(aux - b.transpose() * phi * (0.5 * weight)));
        let sol = self.lu_solve(big, &rhs)?;
        Ok((sol.rows(0, n).into_owned(), sol.rows(n, m).into_owned()))
    }
}

/// One step of `cfg.kind` from `state`, computed with dense linear algebra.
/// Grids are limited to 8x8.
pub fn dense_oracle<T: Scalar>(
    grid: &Grid2D<T>,
    model: &ModelSpec<T>,
    cfg: &SchemeConfig<T>,
    state: &StepState<T>,
) -> Result<StepState<T>> {
    if grid.nx() > MAX_SIDE || grid.ny() > MAX_SIDE {
        return Err(Error::OracleTooLarge {
            nx: grid.nx(),
            ny: grid.ny(),
        });
    }
    cfg.validate()?;
    if state.phi.grid() != grid {
        return Err(Error::GridMismatch {
            left: grid.to_string(),
            right: state.phi.grid().to_string(),
        });
    }
    let mut d = Dense::new(grid, model, state.c)?;
    let dt = cfg.dt.to_f64_lossy();
    let theta: f64 = cfg.order.theta();
    let phi = vec_of(&state.phi);

    let history = match (&state.phi_prev, &state.aux_prev) {
        (Some(p), Some(a)) if state.n > 0 => Some((vec_of(p), a.clone())),
        _ => None,
    };
    let (phi_hat, startup) = match (cfg.order, &history) {
        (Order::First, _) => (phi.clone(), false),
        (Order::Second, Some((prev, _))) => (&phi * 1.5 - prev * 0.5, false),
        (Order::Second, None) => {
            if state.n > 0 {
                return Err(Error::Usage(
                    "second-order oracle step needs history".into(),
                ));
            }
            let f0 = d.force(&phi);
            (d.theta_solve(0.5 * dt, 1.0, &phi, &f0)?, true)
        }
    };
    let extrapolate = |now: f64, prev: f64| 1.5 * now - 0.5 * prev;

    let (phi_next, aux_next, chi, label) = match cfg.kind {
        SchemeKind::ThreeSSav => {
            let eta = state.aux.expect_scalar("3s-sav")?.to_f64_lossy();
            let denom = d.e1(&phi_hat)? + d.c;
            let eta_hat = match (&history, startup) {
                (_, true) => denom,
                (Some((_, prev)), false) if cfg.order == Order::Second => {
                    extrapolate(eta, prev.expect_scalar("3s-sav")?.to_f64_lossy())
                }
                _ => eta,
            };
            let chi = d.force(&phi_hat) * (eta_hat / denom);
            let next = d.theta_solve(dt, theta, &phi, &chi)?;
            let eta_next = eta + d.inner(&chi, &(&next - &phi));
            (
                next,
                AuxVariable::ScalarEta(T::of(eta_next)),
                chi,
                "eta/(E1+C) F'",
            )
        }
        SchemeKind::ThreeSIeq => {
            let q = vec_of(state.aux.expect_field("3s-ieq")?);
            let denom = d
                .pointwise(&phi_hat, |x| model.potential.value(x))
                .add_scalar(d.c);
            let q_hat = match (&history, startup) {
                (_, true) => denom.clone(),
                (Some((_, prev)), false) if cfg.order == Order::Second => {
                    let qp = vec_of(prev.expect_field("3s-ieq")?);
                    &q * 1.5 - qp * 0.5
                }
                _ => q.clone(),
            };
            let raw = d.pointwise(&phi_hat, |x| model.potential.derivative(x));
            let chi = &d.filter * q_hat.component_div(&denom).component_mul(&raw);
            let next = d.theta_solve(dt, theta, &phi, &chi)?;
            let q_next = &q + chi.component_mul(&(&next - &phi));
            (
                next,
                AuxVariable::FieldQ(field_of(grid, &q_next)?),
                chi,
                "q/(F+C) F'",
            )
        }
        SchemeKind::Sav => {
            let r = state.aux.expect_scalar("sav")?.to_f64_lossy();
            let root = (d.e1(&phi_hat)? + d.c).sqrt();
            let b = d.force(&phi_hat) / root;
            let bm = DMatrix::from_column_slice(b.len(), 1, b.as_slice());
            let aux = DVector::from_element(1, r);
            let (next, r_next) = d.coupled_solve(dt, theta, &phi, &bm, &aux, d.cell)?;
            (
                next,
                AuxVariable::ScalarR(T::of(r_next[0])),
                b,
                "F'/sqrt(E1+C)",
            )
        }
        SchemeKind::Ieq => {
            let q = vec_of(state.aux.expect_field("ieq")?);
            let root = d
                .pointwise(&phi_hat, |x| model.potential.value(x))
                .add_scalar(d.c)
                .map(f64::sqrt);
            let raw = d.pointwise(&phi_hat, |x| model.potential.derivative(x));
            let b = &d.filter * raw.component_div(&root);
            let bm = DMatrix::from_diagonal(&b);
            let (next, q_next) = d.coupled_solve(dt, theta, &phi, &bm, &q, 1.0)?;
            (
                next,
                AuxVariable::FieldQ(field_of(grid, &q_next)?),
                b,
                "F'/sqrt(F+C)",
            )
        }
        SchemeKind::ThreeSSavSqrt => {
            let r = state.aux.expect_scalar("3s-sav-sqrt")?.to_f64_lossy();
            let denom = d.e1(&phi)? + d.c;
            let chi = d.force(&phi) * (r / denom.sqrt());
            let next = d.theta_solve(dt, theta, &phi, &chi)?;
            let radicand = r * r + d.inner(&chi, &(&next - &phi));
            if radicand < 0.0 {
                return Err(Error::RadicandNegative { value: radicand });
            }
            (
                next,
                AuxVariable::ScalarR(T::of(radicand.sqrt())),
                chi,
                "r/sqrt(E1+C) F'",
            )
        }
    };

    let n = state.n + 1;
    Ok(StepState {
        phi_prev: Some(state.phi.clone()),
        phi: field_of(grid, &phi_next)?,
        aux_prev: Some(state.aux.clone()),
        aux: aux_next,
        n,
        t: T::of(n as f64) * cfg.dt,
        chi_cache: Some(CouplingTerm {
            chi: field_of(grid, &chi)?,
            kind: label,
        }),
        c: state.c,
        last_solves: d.factorizations,
        last_iterations: 0,
        cache: OperatorCache::new(model, grid),
    })
}
