//! Projection onto the lowest generalized eigenmodes of `(K, M)`.
//!
//! Standard discretizations of boundary-observed waves lose uniform
//! observability near the grid frequency, so the control problems are posed
//! on the span of the `m` lowest modes. The span is invariant under the
//! conservative flow, the generator and the midpoint step.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::assembly::{DiscreteSystem, State};
use crate::error::{Error, Result};
use crate::linalg::generalized_symmetric_eigen;

#[derive(Debug, Clone)]
pub struct ModalFilter {
    values: DVector<f64>,
    vectors: DMatrix<f64>,
    /// `M Phi`, cached for projections and coordinates.
    m_vectors: DMatrix<f64>,
}

impl ModalFilter {
    /// Keeps the `m` lowest modes, `1 <= m <= 3n`.
    pub fn new(sys: &DiscreteSystem, m: usize) -> Result<Self> {
        let d = sys.dofs();
        if m == 0 || m > d {
            return Err(Error::Domain(format!("filter dimension m = {m} must lie in 1..={d}")));
        }
        let k = sys.stiffness().to_dense();
        let mass = sys.mass().to_dense();
        let (values, vectors) = generalized_symmetric_eigen(&k, &mass)?;
        if values[0] <= 0.0 {
            return Err(Error::PhaseSpace);
        }
        let vectors = vectors.columns(0, m).into_owned();
        let m_vectors = &mass * &vectors;
        Ok(Self {
            values: values.rows(0, m).into_owned(),
            vectors,
            m_vectors,
        })
    }

    /// Default filter size `max(1, n / 3)`.
    pub fn default_size(n: usize) -> usize {
        (n / 3).max(1)
    }

    pub fn modes(&self) -> usize {
        self.values.len()
    }

    /// Dimension of the filtered phase space, `2m`.
    pub fn dim(&self) -> usize {
        2 * self.modes()
    }

    /// Squared angular frequencies, ascending.
    pub fn eigenvalues(&self) -> &DVector<f64> {
        &self.values
    }

    pub fn frequencies(&self) -> DVector<f64> {
        self.values.map(f64::sqrt)
    }

    /// Columns are the retained modes, `Phi^T M Phi = I`.
    pub fn eigenvectors(&self) -> &DMatrix<f64> {
        &self.vectors
    }

    /// `Phi Phi^T M x`.
    pub fn project_vector(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.vectors * (self.m_vectors.transpose() * x)
    }

    /// Energy-orthogonal projection of a state.
    pub fn project(&self, u: &State) -> State {
        State::new(self.project_vector(&u.q), self.project_vector(&u.v))
    }

    /// `||u - P u||_E <= tol ||u||_E`.
    pub fn is_filtered(&self, sys: &DiscreteSystem, u: &State, tol: f64) -> bool {
        let off = u - &self.project(u);
        sys.energy_norm(&off) <= tol * sys.energy_norm(u)
    }

    /// Coordinates in the energy-orthonormal basis
    /// `(phi_j / sqrt(lambda_j), 0)`, `(0, phi_j)`.
    pub fn coordinates(&self, u: &State) -> DVector<f64> {
        let m = self.modes();
        let cq = self.m_vectors.transpose() * &u.q;
        let cv = self.m_vectors.transpose() * &u.v;
        DVector::from_fn(2 * m, |i, _| {
            if i < m {
                self.values[i].sqrt() * cq[i]
            } else {
                cv[i - m]
            }
        })
    }

    /// Inverse of [`coordinates`](Self::coordinates) on the filtered space.
    pub fn from_coordinates(&self, c: &DVector<f64>) -> State {
        let m = self.modes();
        let cq = DVector::from_fn(m, |i, _| c[i] / self.values[i].sqrt());
        let cv = c.rows(m, m).into_owned();
        State::new(&self.vectors * cq, &self.vectors * cv)
    }

    /// Basis state `j` of the energy-orthonormal basis, `0 <= j < 2m`.
    pub fn basis_state(&self, j: usize) -> State {
        let mut c = DVector::zeros(self.dim());
        c[j] = 1.0;
        self.from_coordinates(&c)
    }

    /// Unit-energy-norm displacement in mode `k` (0-based), at rest.
    pub fn mode_state(&self, k: usize) -> Result<State> {
        if k >= self.modes() {
            return Err(Error::Domain(format!("mode {k} outside the {} retained modes", self.modes())));
        }
        Ok(self.basis_state(k))
    }

    /// Gaussian coordinates scaled to unit energy norm.
    pub fn random_state<R: Rng + ?Sized>(&self, rng: &mut R) -> State {
        let mut c = DVector::from_fn(self.dim(), |_, _| rng.sample::<f64, _>(StandardNormal));
        let norm = c.norm();
        if norm > 0.0 {
            c /= norm;
        }
        self.from_coordinates(&c)
    }
}
