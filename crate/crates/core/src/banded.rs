//! Symmetric banded matrices and their Cholesky factors.
//!
//! Nodal unknowns are interleaved per node, so every matrix assembled from
//! two-node elements has half-bandwidth 5.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Lower band of a symmetric matrix: entry `(i, j)` with `i - bw <= j <= i`
/// lives at `data[i * (bw + 1) + (i - j)]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SymBanded {
    dim: usize,
    bw: usize,
    data: Vec<f64>,
}

impl SymBanded {
    pub fn zeros(dim: usize, bw: usize) -> Self {
        Self {
            dim,
            bw,
            data: vec![0.0; dim * (bw + 1)],
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn bandwidth(&self) -> usize {
        self.bw
    }

    fn slot(&self, i: usize, j: usize) -> Option<usize> {
        let (i, j) = if i >= j { (i, j) } else { (j, i) };
        (i - j <= self.bw).then(|| i * (self.bw + 1) + (i - j))
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.slot(i, j).map_or(0.0, |k| self.data[k])
    }

    /// Adds `value` to the symmetric pair `(i, j)`/`(j, i)`.
    pub fn add(&mut self, i: usize, j: usize, value: f64) {
        let k = self
            .slot(i, j)
            .unwrap_or_else(|| panic!("entry ({i}, {j}) outside bandwidth {}", self.bw));
        self.data[k] += value;
    }

    /// `alpha * self + beta * other`.
    pub fn combine(&self, alpha: f64, other: &SymBanded, beta: f64) -> SymBanded {
        assert_eq!(self.dim, other.dim);
        let bw = self.bw.max(other.bw);
        let mut out = SymBanded::zeros(self.dim, bw);
        for i in 0..self.dim {
            for j in i.saturating_sub(bw)..=i {
                let v = alpha * self.get(i, j) + beta * other.get(i, j);
                if v != 0.0 {
                    out.add(i, j, v);
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, x: &DVector<f64>) -> DVector<f64> {
        let mut y = DVector::zeros(self.dim);
        self.mul_vec_into(x, &mut y);
        y
    }

    pub fn mul_vec_into(&self, x: &DVector<f64>, y: &mut DVector<f64>) {
        assert_eq!(x.len(), self.dim);
        y.fill(0.0);
        let w = self.bw + 1;
        for i in 0..self.dim {
            let row = &self.data[i * w..(i + 1) * w];
            y[i] += row[0] * x[i];
            for d in 1..=self.bw.min(i) {
                let a = row[d];
                if a != 0.0 {
                    let j = i - d;
                    y[i] += a * x[j];
                    y[j] += a * x[i];
                }
            }
        }
    }

    /// `x^T A y`.
    pub fn quad(&self, x: &DVector<f64>, y: &DVector<f64>) -> f64 {
        x.dot(&self.mul_vec(y))
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.dim, self.dim, |i, j| self.get(i, j))
    }

    /// Diagonal matrix of row sums.
    pub fn lumped(&self) -> SymBanded {
        let ones = DVector::from_element(self.dim, 1.0);
        let sums = self.mul_vec(&ones);
        let mut out = SymBanded::zeros(self.dim, self.bw);
        for i in 0..self.dim {
            out.add(i, i, sums[i]);
        }
        out
    }

    /// Banded Cholesky factorization `A = L L^T`.
    pub fn cholesky(&self) -> Result<BandedCholesky> {
        let n = self.dim;
        let bw = self.bw;
        let w = bw + 1;
        let mut l = self.data.clone();
        for i in 0..n {
            for d in (1..=bw.min(i)).rev() {
                let j = i - d;
                // l[i][j] = (a[i][j] - sum_{k<j} l[i][k] l[j][k]) / l[j][j]
                let mut acc = l[i * w + d];
                let kmin = i.saturating_sub(bw);
                for k in kmin..j {
                    acc -= l[i * w + (i - k)] * l[j * w + (j - k)];
                }
                l[i * w + d] = acc / l[j * w];
            }
            let mut diag = l[i * w];
            for k in i.saturating_sub(bw)..i {
                let v = l[i * w + (i - k)];
                diag -= v * v;
            }
            if !(diag > 0.0) || !diag.is_finite() {
                return Err(Error::Internal(format!(
                    "matrix not positive definite (pivot {i} = {diag:e})"
                )));
            }
            l[i * w] = diag.sqrt();
        }
        Ok(BandedCholesky { dim: n, bw, l })
    }
}

#[derive(Debug, Clone)]
pub struct BandedCholesky {
    dim: usize,
    bw: usize,
    l: Vec<f64>,
}

impl BandedCholesky {
    pub fn solve(&self, b: &DVector<f64>) -> DVector<f64> {
        let mut x = b.clone();
        self.solve_in_place(&mut x);
        x
    }

    pub fn solve_in_place(&self, x: &mut DVector<f64>) {
        assert_eq!(x.len(), self.dim);
        let w = self.bw + 1;
        // forward: L y = b
        for i in 0..self.dim {
            let mut acc = x[i];
            for d in 1..=self.bw.min(i) {
                acc -= self.l[i * w + d] * x[i - d];
            }
            x[i] = acc / self.l[i * w];
        }
        // backward: L^T x = y
        for i in (0..self.dim).rev() {
            let mut acc = x[i];
            for d in 1..=self.bw.min(self.dim - 1 - i) {
                let r = i + d;
                acc -= self.l[r * w + d] * x[r];
            }
            x[i] = acc / self.l[i * w];
        }
    }

    /// Dense lower factor.
    pub fn factor(&self) -> DMatrix<f64> {
        let w = self.bw + 1;
        DMatrix::from_fn(self.dim, self.dim, |i, j| {
            if j <= i && i - j <= self.bw {
                self.l[i * w + (i - j)]
            } else {
                0.0
            }
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_spd(n: usize, bw: usize, seed: u64) -> SymBanded {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut a = SymBanded::zeros(n, bw);
        for i in 0..n {
            for j in i.saturating_sub(bw)..i {
                a.add(i, j, rng.random_range(-1.0..1.0));
            }
            a.add(i, i, 2.0 * bw as f64 + 1.0);
        }
        a
    }

    #[test]
    fn matvec_matches_dense() {
        let a = random_spd(17, 5, 1);
        let x = DVector::from_fn(17, |i, _| (i as f64).sin());
        let diff = a.mul_vec(&x) - a.to_dense() * &x;
        assert!(diff.amax() < 1e-13);
    }

    #[test]
    fn cholesky_solves() {
        let a = random_spd(30, 5, 2);
        let b = DVector::from_fn(30, |i, _| 1.0 + i as f64);
        let chol = a.cholesky().unwrap();
        let x = chol.solve(&b);
        assert!((a.mul_vec(&x) - &b).amax() < 1e-12);
        let l = chol.factor();
        assert!((&l * l.transpose() - a.to_dense()).amax() < 1e-12);
    }

    #[test]
    fn indefinite_rejected() {
        let mut a = SymBanded::zeros(3, 1);
        a.add(0, 0, 1.0);
        a.add(1, 0, 2.0);
        a.add(1, 1, 1.0);
        a.add(2, 2, 1.0);
        assert!(matches!(a.cholesky(), Err(Error::Internal(_))));
    }

    #[test]
    fn combine_and_lump() {
        let a = random_spd(8, 2, 3);
        let b = random_spd(8, 1, 4);
        let c = a.combine(2.0, &b, -0.5);
        assert!((c.to_dense() - (a.to_dense() * 2.0 - b.to_dense() * 0.5)).amax() < 1e-14);
        let l = a.lumped();
        let ones = DVector::from_element(8, 1.0);
        assert!((l.mul_vec(&ones) - a.mul_vec(&ones)).amax() < 1e-14);
    }
}
