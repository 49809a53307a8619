//! Periodic pseudo-spectral layer: grids, fields, Fourier multipliers,
//! constant-coefficient implicit solves and grid quadrature.

mod field;
mod grid;
mod symbol;
mod transform;

pub use field::ScalarField2D;
pub use grid::{wrap_frequency, Grid2D};
pub use symbol::{OperatorSymbol, SymbolTable};

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Applies the multiplier `symbol` to `f`.
pub fn apply_operator<T: Scalar>(
    f: &ScalarField2D<T>,
    symbol: &OperatorSymbol<T>,
) -> Result<ScalarField2D<T>> {
    apply_table(f, &f.grid().tabulate(symbol))
}

/// Same as [`apply_operator`] with a pre-tabulated symbol.
pub fn apply_table<T: Scalar>(
    f: &ScalarField2D<T>,
    table: &SymbolTable<T>,
) -> Result<ScalarField2D<T>> {
    let grid = f.grid();
    let mut hat = grid.forward(f);
    for (c, &s) in hat.iter_mut().zip(table.values()) {
        *c = c.scale(s);
    }
    let out = grid.inverse(hat);
    out.check_finite(&format!("operator '{}'", table.name()))?;
    Ok(out)
}

/// Solves `(I - theta dt G L) u = rhs` mode by mode.
pub fn solve_implicit<T: Scalar>(
    rhs: &ScalarField2D<T>,
    dt: T,
    theta: T,
    g: &OperatorSymbol<T>,
    l: &OperatorSymbol<T>,
) -> Result<ScalarField2D<T>> {
    let grid = rhs.grid();
    let solver = ThetaSolver::new(grid, dt, theta, &grid.tabulate(g), &grid.tabulate(l))?;
    solver.solve(rhs)
}

/// Per-mode multipliers of one theta-weighted linear step for `u_t = G L u + G s`:
///
/// `(I - theta dt G L) u' = u + (1 - theta) dt G L u + dt G s`.
///
/// The multipliers depend only on `dt`, `theta` and the two symbols, so a
/// solver is built once and reused for every step.
#[derive(Clone, Debug)]
pub struct ThetaSolver<T: Scalar> {
    grid: Grid2D<T>,
    dt: T,
    theta: T,
    inv_denominator: Vec<T>,
    state_factor: Vec<T>,
    source_factor: Vec<T>,
}

impl<T: Scalar> ThetaSolver<T> {
    pub fn new(
        grid: &Grid2D<T>,
        dt: T,
        theta: T,
        g: &SymbolTable<T>,
        l: &SymbolTable<T>,
    ) -> Result<Self> {
        let n = grid.len();
        let mut inv_denominator = Vec::with_capacity(n);
        let mut state_factor = Vec::with_capacity(n);
        let mut source_factor = Vec::with_capacity(n);
        let explicit = T::one() - theta;
        for (idx, (&gk, &lk)) in g.values().iter().zip(l.values()).enumerate() {
            let gl = gk * lk;
            let den = T::one() - theta * dt * gl;
            if !(den > T::zero()) || !den.is_finite() {
                let (kx, ky) = grid.unflatten(idx);
                return Err(Error::SymbolSign {
                    symbol: format!("I - theta dt ({})({})", g.name(), l.name()),
                    kx,
                    ky,
                    value: den.to_f64_lossy(),
                });
            }
            let inv = T::one() / den;
            inv_denominator.push(inv);
            state_factor.push((T::one() + explicit * dt * gl) * inv);
            source_factor.push(dt * gk * inv);
        }
        Ok(ThetaSolver {
            grid: grid.clone(),
            dt,
            theta,
            inv_denominator,
            state_factor,
            source_factor,
        })
    }

    pub fn dt(&self) -> T {
        self.dt
    }

    pub fn theta(&self) -> T {
        self.theta
    }

    /// `(I - theta dt G L)^{-1} rhs`.
    pub fn solve(&self, rhs: &ScalarField2D<T>) -> Result<ScalarField2D<T>> {
        self.check_grid(rhs)?;
        let mut hat = self.grid.forward(rhs);
        for (c, &m) in hat.iter_mut().zip(&self.inv_denominator) {
            *c = c.scale(m);
        }
        self.finish(hat)
    }

    /// One full theta step from `state` with explicit forcing `source`
    /// (either may be absent, meaning zero). Counts as a single solve.
    pub fn step(
        &self,
        state: Option<&ScalarField2D<T>>,
        source: Option<&ScalarField2D<T>>,
    ) -> Result<ScalarField2D<T>> {
        let zero = Complex::new(T::zero(), T::zero());
        let mut hat = vec![zero; self.grid.len()];
        if let Some(u) = state {
            self.check_grid(u)?;
            for ((c, u), &m) in hat
                .iter_mut()
                .zip(self.grid.forward(u))
                .zip(&self.state_factor)
            {
                *c = u.scale(m);
            }
        }
        if let Some(s) = source {
            self.check_grid(s)?;
            for ((c, s), &m) in hat
                .iter_mut()
                .zip(self.grid.forward(s))
                .zip(&self.source_factor)
            {
                *c = *c + s.scale(m);
            }
        }
        self.finish(hat)
    }

    fn finish(&self, hat: Vec<Complex<T>>) -> Result<ScalarField2D<T>> {
        let out = self.grid.inverse(hat);
        out.check_finite("implicit solve")?;
        Ok(out)
    }

    fn check_grid(&self, f: &ScalarField2D<T>) -> Result<()> {
        if f.grid() == &self.grid {
            Ok(())
        } else {
            Err(Error::GridMismatch {
                left: self.grid.to_string(),
                right: f.grid().to_string(),
            })
        }
    }
}

/// Discrete L2 inner product `sum f g dx dy`.
pub fn inner_product<T: Scalar>(f: &ScalarField2D<T>, g: &ScalarField2D<T>) -> Result<T> {
    f.ensure_same_grid(g)?;
    let s: T = f
        .values()
        .iter()
        .zip(g.values())
        .map(|(&a, &b)| a * b)
        .sum();
    Ok(s * f.grid().cell_area())
}

/// Grid quadrature of `f` over the domain.
pub fn integrate<T: Scalar>(f: &ScalarField2D<T>) -> T {
    f.values().iter().copied().sum::<T>() * f.grid().cell_area()
}

/// Quadrature L2 norm.
pub fn l2_norm<T: Scalar>(f: &ScalarField2D<T>) -> T {
    f.values().iter().map(|&v| v * v).sum::<T>().sqrt() * f.grid().cell_area().sqrt()
}

/// 2/3-rule truncation when the grid has dealiasing enabled; identity otherwise.
pub fn dealiased<T: Scalar>(f: ScalarField2D<T>) -> ScalarField2D<T> {
    let grid = f.grid().clone();
    if !grid.dealias() {
        return f;
    }
    let mut hat = grid.forward(&f);
    let zero = Complex::new(T::zero(), T::zero());
    for (idx, c) in hat.iter_mut().enumerate() {
        let (i, j) = grid.unflatten(idx);
        if !grid.keeps_mode(i, j) {
            *c = zero;
        }
    }
    grid.inverse(hat)
}

/// Forward then inverse transform; identity up to round-off.
pub fn round_trip<T: Scalar>(f: &ScalarField2D<T>) -> ScalarField2D<T> {
    let grid = f.grid();
    grid.inverse(grid.forward(f))
}

#[cfg(test)]
#[allow(clippy::needless_range_loop)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn square(n: usize) -> Grid2D<f64> {
        Grid2D::new(2.0 * PI, 2.0 * PI, n, n).unwrap()
    }

    fn pseudo_random(grid: &Grid2D<f64>, seed: u64) -> ScalarField2D<f64> {
        let mut s = seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) | 1;
        let v = (0..grid.len())
            .map(|_| {
                s ^= s << 13;
                s ^= s >> 7;
                s ^= s << 17;
                (s >> 11) as f64 / (1u64 << 53) as f64 - 0.5
            })
            .collect();
        ScalarField2D::from_values(grid, v).unwrap()
    }

    /// Dense matrix of a Fourier multiplier from the explicit DFT sums, no FFT.
    fn dense_multiplier(grid: &Grid2D<f64>, s: &OperatorSymbol<f64>) -> Vec<Vec<f64>> {
        let (nx, ny) = (grid.nx(), grid.ny());
        let n = nx * ny;
        let mut m = vec![vec![0.0; n]; n];
        for p in 0..n {
            let (a, b) = (p / ny, p % ny);
            for q in 0..n {
                let (c, d) = (q / ny, q % ny);
                let mut acc = 0.0;
                for kx in 0..nx {
                    for ky in 0..ny {
                        let (fx, fy) = (grid.kx()[kx], grid.ky()[ky]);
                        let phase = 2.0
                            * PI
                            * ((kx * (a + nx - c)) as f64 / nx as f64
                                + (ky * (b + ny - d)) as f64 / ny as f64);
                        acc += s.eval(fx * fx, fy * fy) * phase.cos();
                    }
                }
                m[p][q] = acc / n as f64;
            }
        }
        m
    }

    fn matvec(m: &[Vec<f64>], x: &[f64]) -> Vec<f64> {
        m.iter()
            .map(|row| row.iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }

    fn gauss_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
        let n = b.len();
        for col in 0..n {
            let piv = (col..n)
                .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
                .unwrap();
            a.swap(col, piv);
            b.swap(col, piv);
            for r in col + 1..n {
                let f = a[r][col] / a[col][col];
                for c in col..n {
                    a[r][c] -= f * a[col][c];
                }
                b[r] -= f * b[col];
            }
        }
        let mut x = vec![0.0; n];
        for r in (0..n).rev() {
            let s: f64 = (r + 1..n).map(|c| a[r][c] * x[c]).sum();
            x[r] = (b[r] - s) / a[r][r];
        }
        x
    }

    fn max_diff(a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
    }

    #[test]
    fn plane_wave_is_an_eigenfunction() {
        let g = square(32);
        let f = ScalarField2D::from_fn(&g, |x, _| x.sin());
        let out = apply_operator(&f, &OperatorSymbol::neg_laplacian()).unwrap();
        assert!(max_diff(out.values(), f.values()) < 1e-12);
    }

    #[test]
    fn constants_are_annihilated_by_zero_mode_free_symbols() {
        let g = square(16);
        let f = ScalarField2D::constant(&g, 3.7);
        let out = apply_operator(&f, &OperatorSymbol::neg_laplacian()).unwrap();
        assert!(out.max_abs() < 1e-13);
    }

    #[test]
    fn apply_matches_dense_multiplier() {
        let g = square(8);
        let s = OperatorSymbol::neg_laplacian().scaled(0.01, "eps2 |k|^2");
        let f = pseudo_random(&g, 7);
        let dense = matvec(&dense_multiplier(&g, &s), f.values());
        let out = apply_operator(&f, &s).unwrap();
        assert!(max_diff(out.values(), &dense) < 1e-12);
    }

    #[test]
    fn zero_dt_solve_is_identity() {
        let g = square(16);
        let f = pseudo_random(&g, 3);
        let gs = OperatorSymbol::neg_laplacian().scaled(-1.0, "G");
        let ls = OperatorSymbol::neg_laplacian().scaled(0.01, "L");
        let u = solve_implicit(&f, 0.0, 1.0, &gs, &ls).unwrap();
        assert!(max_diff(u.values(), f.values()) < 1e-13);
    }

    #[test]
    fn constant_rhs_passes_through_allen_cahn_solve() {
        let g = square(16);
        let f = ScalarField2D::constant(&g, 0.3);
        let gs = OperatorSymbol::new("G", |_, _| -1.0);
        let ls = OperatorSymbol::neg_laplacian().scaled(0.01, "L");
        let u = solve_implicit(&f, 0.5, 1.0, &gs, &ls).unwrap();
        assert!(max_diff(u.values(), f.values()) < 1e-14);
    }

    #[test]
    fn solve_matches_dense_cahn_hilliard_system() {
        let g = square(8);
        let (m, eps2, dt) = (0.1, 0.01, 0.05);
        let gs = OperatorSymbol::neg_laplacian().scaled(-m, "G");
        let ls = OperatorSymbol::neg_laplacian().scaled(eps2, "L");
        let gl = gs.compose(&ls);
        let rhs = pseudo_random(&g, 11);
        for theta in [1.0, 0.5] {
            let dgl = dense_multiplier(&g, &gl);
            let n = g.len();
            let a: Vec<Vec<f64>> = (0..n)
                .map(|i| {
                    (0..n)
                        .map(|j| (i == j) as u8 as f64 - theta * dt * dgl[i][j])
                        .collect()
                })
                .collect();
            let expect = gauss_solve(a, rhs.values().to_vec());
            let u = solve_implicit(&rhs, dt, theta, &gs, &ls).unwrap();
            assert!(max_diff(u.values(), &expect) < 1e-12);
        }
    }

    #[test]
    fn negative_multiplier_is_a_sign_violation() {
        let g = square(8);
        let f = ScalarField2D::constant(&g, 1.0);
        let gs = OperatorSymbol::new("G", |_, _| 1.0);
        let ls = OperatorSymbol::new("L", |_, _| 1.0);
        let err = solve_implicit(&f, 2.0, 1.0, &gs, &ls).unwrap_err();
        assert!(matches!(err, Error::SymbolSign { .. }));
    }

    #[test]
    fn quadrature_examples() {
        let g = square(32);
        let one = ScalarField2D::constant(&g, 1.0);
        assert!((inner_product(&one, &one).unwrap() - 4.0 * PI * PI).abs() < 1e-12);
        let s = ScalarField2D::from_fn(&g, |x, _| x.sin());
        let c = ScalarField2D::from_fn(&g, |x, _| x.cos());
        assert!(inner_product(&s, &c).unwrap().abs() < 1e-12);
    }

    #[test]
    fn sin_product_norm_matches_closed_form() {
        // closed form: 0.05^2 * pi * pi; cross-check with a fine midpoint sum
        let g = square(128);
        let f = ScalarField2D::from_fn(&g, |x, y| 0.05 * x.sin() * y.sin());
        let got = inner_product(&f, &f).unwrap();
        let exact = 0.0025 * PI * PI;
        let n = 1000;
        let h = 2.0 * PI / n as f64;
        let mut riemann = 0.0;
        for i in 0..n {
            for j in 0..n {
                let (x, y) = ((i as f64 + 0.5) * h, (j as f64 + 0.5) * h);
                riemann += (0.05 * x.sin() * y.sin()).powi(2) * h * h;
            }
        }
        assert!((riemann - exact).abs() < 1e-8);
        assert!((got - exact).abs() < 1e-10);
    }

    #[test]
    fn dealiasing_removes_high_modes() {
        let g = square(12).with_dealiasing(true);
        let high = ScalarField2D::from_fn(&g, |x, _| (5.0 * x).cos());
        assert!(dealiased(high).max_abs() < 1e-13);
        let low = ScalarField2D::from_fn(&g, |x, y| (3.0 * x).cos() + y.sin());
        let kept = dealiased(low.clone());
        assert!(max_diff(kept.values(), low.values()) < 1e-13);
    }

    #[test]
    fn works_in_single_precision() {
        let g = Grid2D::<f32>::new(std::f32::consts::TAU, std::f32::consts::TAU, 16, 16).unwrap();
        let f = ScalarField2D::from_fn(&g, |x, _| x.sin());
        let out = apply_operator(&f, &OperatorSymbol::neg_laplacian()).unwrap();
        let err = out
            .values()
            .iter()
            .zip(f.values())
            .fold(0.0f32, |m, (a, b)| m.max((a - b).abs()));
        assert!(err < 1e-4);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn round_trip_is_identity(seed in any::<u64>(), n in prop::sample::select(vec![4usize, 6, 8, 16, 32])) {
            let g = square(n);
            let f = pseudo_random(&g, seed);
            let back = round_trip(&f);
            prop_assert!(max_diff(back.values(), f.values()) < 1e-13);
        }

        #[test]
        fn solve_inverts_apply(seed in any::<u64>(), dt in 1e-4f64..10.0, half in any::<bool>()) {
            let g = square(16);
            let theta = if half { 0.5 } else { 1.0 };
            let gs = OperatorSymbol::neg_laplacian().scaled(-0.1, "G");
            let ls = OperatorSymbol::neg_laplacian().scaled(0.01, "L");
            let a = OperatorSymbol::new("A", move |x: f64, y: f64| 1.0 + theta * dt * 0.1 * (x + y) * 0.01 * (x + y));
            let f = pseudo_random(&g, seed);
            let u = apply_operator(&f, &a).unwrap();
            let back = solve_implicit(&u, dt, theta, &gs, &ls).unwrap();
            prop_assert!(max_diff(back.values(), f.values()) < 1e-12);
        }

        #[test]
        fn zero_mode_free_symbols_give_zero_mean(seed in any::<u64>()) {
            let g = square(16);
            let f = pseudo_random(&g, seed);
            let out = apply_operator(&f, &OperatorSymbol::neg_laplacian()).unwrap();
            prop_assert!(out.mean().abs() < 1e-13);
        }

        #[test]
        fn inner_product_is_symmetric_and_nonnegative(a in any::<u64>(), b in any::<u64>()) {
            let g = square(8);
            let (f, h) = (pseudo_random(&g, a), pseudo_random(&g, b));
            let fh = inner_product(&f, &h).unwrap();
            let hf = inner_product(&h, &f).unwrap();
            prop_assert!((fh - hf).abs() < 1e-14);
            prop_assert!(inner_product(&f, &f).unwrap() >= 0.0);
        }
    }
}
