use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Solves `K phi = lambda M phi` for symmetric `K` and SPD `M`.
///
/// Eigenvalues come back ascending, eigenvectors as columns normalized so
/// that `Phi^T M Phi = I`.
pub fn generalized_symmetric_eigen(k: &DMatrix<f64>, m: &DMatrix<f64>) -> Result<(DVector<f64>, DMatrix<f64>)> {
    let chol = m
        .clone()
        .cholesky()
        .ok_or_else(|| Error::Internal("mass matrix is not positive definite".into()))?;
    let l = chol.l();
    let l_inv = l
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::Internal("singular Cholesky factor".into()))?;
    let mut reduced = &l_inv * k * l_inv.transpose();
    // symmetrize rounding
    reduced = (&reduced + reduced.transpose()) * 0.5;
    let eig = reduced.symmetric_eigen();
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = DVector::from_iterator(order.len(), order.iter().map(|&i| eig.eigenvalues[i]));
    let lt_inv = l_inv.transpose();
    let mut vectors = DMatrix::zeros(k.nrows(), order.len());
    for (col, &i) in order.iter().enumerate() {
        let mut phi = &lt_inv * eig.eigenvectors.column(i);
        // fix the sign so that the largest-magnitude entry is positive
        let imax = phi.iamax();
        if phi[imax] < 0.0 {
            phi.neg_mut();
        }
        vectors.set_column(col, &phi);
    }
    Ok((values, vectors))
}

/// Ritz values of a symmetric operator from a Lanczos run.
#[derive(Debug, Clone, PartialEq)]
pub struct LanczosOutcome {
    /// Ascending.
    pub ritz_values: Vec<f64>,
    pub steps: usize,
    /// Relative residual of the smallest Ritz pair after every step.
    pub residual_trace: Vec<f64>,
}

impl LanczosOutcome {
    pub fn smallest(&self) -> f64 {
        self.ritz_values[0]
    }

    pub fn largest(&self) -> f64 {
        *self.ritz_values.last().expect("at least one Ritz value")
    }
}

/// Lanczos iteration with full reorthogonalization for a symmetric
/// operator on `R^d`, started from `start`.
///
/// Stops when the Krylov space becomes invariant, when `d` steps have been
/// taken, or when the smallest Ritz pair has relative residual below `tol`.
/// Running out of `max_steps` before that is an error carrying the residual
/// trace.
pub fn lanczos<F>(start: &DVector<f64>, max_steps: usize, tol: f64, mut apply: F) -> Result<LanczosOutcome>
where
    F: FnMut(&DVector<f64>) -> Result<DVector<f64>>,
{
    let d = start.len();
    let norm = start.norm();
    if d == 0 || norm == 0.0 || !norm.is_finite() {
        return Err(Error::Domain("Lanczos needs a nonzero finite start vector".into()));
    }
    let max_steps = max_steps.min(d).max(1);
    let mut basis: Vec<DVector<f64>> = vec![start / norm];
    let mut alpha = Vec::new();
    let mut beta: Vec<f64> = Vec::new();
    let mut trace = Vec::new();
    loop {
        let k = basis.len();
        let mut w = apply(&basis[k - 1])?;
        if w.len() != d {
            return Err(Error::Shape { expected: d, found: w.len() });
        }
        let a = basis[k - 1].dot(&w);
        alpha.push(a);
        for _ in 0..2 {
            for b in &basis {
                let c = b.dot(&w);
                w.axpy(-c, b, 1.0);
            }
        }
        let b_next = w.norm();

        let t = DMatrix::from_fn(k, k, |i, j| {
            if i == j {
                alpha[i]
            } else if i == j + 1 {
                beta[j]
            } else if j == i + 1 {
                beta[i]
            } else {
                0.0
            }
        });
        let eig = t.symmetric_eigen();
        let mut order: Vec<usize> = (0..k).collect();
        order.sort_by(|&x, &y| eig.eigenvalues[x].total_cmp(&eig.eigenvalues[y]));
        let ritz: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
        let scale = ritz.iter().fold(0.0f64, |m, x| m.max(x.abs())).max(f64::MIN_POSITIVE);
        let resid = b_next * eig.eigenvectors[(k - 1, order[0])].abs() / scale;
        trace.push(resid);

        let invariant = b_next <= 1e-13 * scale;
        if invariant || k == d || resid <= tol {
            return Ok(LanczosOutcome {
                ritz_values: ritz,
                steps: k,
                residual_trace: trace,
            });
        }
        if k == max_steps {
            return Err(Error::EigenNotConverged {
                iterations: k,
                trace,
            });
        }
        beta.push(b_next);
        basis.push(w / b_next);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lanczos_full_space_is_exact() {
        let d = 12;
        let a = DMatrix::from_fn(d, d, |i, j| {
            let x = (i as f64 - j as f64).abs();
            if i == j {
                4.0 + i as f64
            } else {
                1.0 / (1.0 + x * x)
            }
        });
        let start = DVector::from_fn(d, |i, _| 1.0 + (i as f64).cos());
        let out = lanczos(&start, d, 0.0, |x| Ok(&a * x)).unwrap();
        let mut exact: Vec<f64> = a.clone().symmetric_eigen().eigenvalues.iter().copied().collect();
        exact.sort_by(f64::total_cmp);
        assert_eq!(out.steps, d);
        for (r, e) in out.ritz_values.iter().zip(&exact) {
            assert!((r - e).abs() < 1e-10);
        }
    }

    #[test]
    fn lanczos_reports_non_convergence() {
        let d = 30;
        let a = DMatrix::from_fn(d, d, |i, j| if i == j { (1 + i) as f64 } else { 0.0 });
        let start = DVector::from_element(d, 1.0);
        match lanczos(&start, 3, 1e-14, |x| Ok(&a * x)) {
            Err(Error::EigenNotConverged { iterations, trace }) => {
                assert_eq!(iterations, 3);
                assert_eq!(trace.len(), 3);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn lanczos_stops_on_invariant_subspace() {
        let d = 10;
        let a = DMatrix::from_fn(d, d, |i, j| if i == j { (1 + i % 2) as f64 } else { 0.0 });
        let start = DVector::from_element(d, 1.0);
        let out = lanczos(&start, d, 0.0, |x| Ok(&a * x)).unwrap();
        assert_eq!(out.steps, 2);
        assert!((out.smallest() - 1.0).abs() < 1e-12);
        assert!((out.largest() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn generalized_pairs() {
        let m = DMatrix::from_row_slice(3, 3, &[4.0, 1.0, 0.0, 1.0, 3.0, 0.5, 0.0, 0.5, 2.0]);
        let k = DMatrix::from_row_slice(3, 3, &[2.0, -1.0, 0.0, -1.0, 2.0, -1.0, 0.0, -1.0, 1.0]);
        let (lam, phi) = generalized_symmetric_eigen(&k, &m).unwrap();
        assert!(lam[0] <= lam[1] && lam[1] <= lam[2]);
        let ortho = phi.transpose() * &m * &phi;
        assert!((ortho - DMatrix::identity(3, 3)).amax() < 1e-12);
        for j in 0..3 {
            let r = &k * phi.column(j) - &m * phi.column(j) * lam[j];
            assert!(r.amax() < 1e-12);
        }
    }
}
