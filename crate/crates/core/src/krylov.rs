//! Restarted GMRES for the variable-coefficient IEQ systems.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug)]
pub struct GmresOptions<T> {
    pub tol: T,
    pub max_iter: usize,
    pub restart: usize,
}

#[derive(Clone, Debug)]
pub struct GmresOutcome<T> {
    pub x: Vec<T>,
    pub iterations: usize,
    pub relative_residual: T,
}

fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).map(|(&x, &y)| x * y).sum()
}

fn norm<T: Scalar>(a: &[T]) -> T {
    dot(a, a).sqrt()
}

/// Solves `A x = b` from `x = 0`. Every call of `apply` counts as one iteration.
pub fn gmres<T: Scalar>(
    mut apply: impl FnMut(&[T]) -> Result<Vec<T>>,
    b: &[T],
    opts: GmresOptions<T>,
) -> Result<GmresOutcome<T>> {
    let n = b.len();
    let b_norm = norm(b);
    let mut x = vec![T::zero(); n];
    if b_norm == T::zero() {
        return Ok(GmresOutcome {
            x,
            iterations: 0,
            relative_residual: T::zero(),
        });
    }
    let mut r = b.to_vec();
    let mut iterations = 0;
    let mut rel = T::one();
    let m = opts.restart.max(1);

    while iterations < opts.max_iter {
        let beta = norm(&r);
        rel = beta / b_norm;
        if rel <= opts.tol {
            break;
        }
        let mut basis: Vec<Vec<T>> = vec![r.iter().map(|&v| v / beta).collect()];
        let mut h = vec![vec![T::zero(); m]; m + 1];
        let (mut cs, mut sn) = (vec![T::zero(); m], vec![T::zero(); m]);
        let mut g = vec![T::zero(); m + 1];
        g[0] = beta;
        let mut k = 0;
        let mut converged = false;
        while k < m && iterations < opts.max_iter {
            let mut w = apply(&basis[k])?;
            iterations += 1;
            // modified Gram-Schmidt
            for (i, v) in basis.iter().enumerate() {
                let hik = dot(&w, v);
                h[i][k] = hik;
                for (wj, &vj) in w.iter_mut().zip(v) {
                    *wj = *wj - hik * vj;
                }
            }
            let wn = norm(&w);
            h[k + 1][k] = wn;
            for i in 0..k {
                let t = cs[i] * h[i][k] + sn[i] * h[i + 1][k];
                h[i + 1][k] = -sn[i] * h[i][k] + cs[i] * h[i + 1][k];
                h[i][k] = t;
            }
            let denom = (h[k][k] * h[k][k] + h[k + 1][k] * h[k + 1][k]).sqrt();
            if denom == T::zero() {
                cs[k] = T::one();
                sn[k] = T::zero();
            } else {
                cs[k] = h[k][k] / denom;
                sn[k] = h[k + 1][k] / denom;
            }
            h[k][k] = cs[k] * h[k][k] + sn[k] * h[k + 1][k];
            h[k + 1][k] = T::zero();
            g[k + 1] = -sn[k] * g[k];
            g[k] = cs[k] * g[k];
            k += 1;
            rel = g[k].abs() / b_norm;
            if rel <= opts.tol || wn <= T::epsilon() * beta {
                converged = true;
                break;
            }
            basis.push(w.into_iter().map(|v| v / wn).collect());
        }
        // back substitution on the k x k triangle
        let mut y = vec![T::zero(); k];
        for i in (0..k).rev() {
            let s: T = (i + 1..k).map(|j| h[i][j] * y[j]).sum();
            y[i] = (g[i] - s) / h[i][i];
        }
        for (yi, v) in y.iter().zip(&basis) {
            for (xj, &vj) in x.iter_mut().zip(v) {
                *xj = *xj + *yi * vj;
            }
        }
        if converged {
            break;
        }
        // restart from the true residual
        let ax = apply(&x)?;
        iterations += 1;
        r = b.iter().zip(&ax).map(|(&bi, &ai)| bi - ai).collect();
        rel = norm(&r) / b_norm;
        if rel <= opts.tol {
            break;
        }
    }
    if !(rel <= opts.tol) {
        return Err(Error::SolverDivergence {
            iterations,
            residual: rel.to_f64_lossy(),
        });
    }
    Ok(GmresOutcome {
        x,
        iterations,
        relative_residual: rel,
    })
}
