//! Energy-exact finite element discretization of the beam generator.
//!
//! Conforming piecewise-linear elements on a uniform mesh of `[0, L]`. The
//! three field equations are weighted by `3, 3, 1` before integrating by
//! parts, so the weak form is governed by a single energy
//!
//! ```text
//! 2E = 3 rho1 |w_t|^2 + 3 rho2 |xi_t|^2 + rho2 |s_t|^2
//!    + 3b |xi_x|^2 + b |s_x|^2 + gamma |s|^2 + 3k |w_x + xi + s|^2
//!    + 3k w_t(L)^2 + 3b xi_t(L)^2 + b s_t(L)^2
//! ```
//!
//! The dynamic boundary conditions at `x = L` become point masses
//! `3k, 3b, b` on the last node of each field, and the boundary controls
//! enter through the same weights. Nodal unknowns are interleaved: free node
//! `j = 1..=n` owns entries `3(j-1) + c` for `c` = w, xi, s.

use std::ops::{Add, AddAssign, Mul, Neg, Sub};
use std::sync::OnceLock;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::banded::{BandedCholesky, SymBanded};
use crate::error::{Error, Result};
use crate::linalg::generalized_symmetric_eigen;
use crate::model::{ContinuousState, PhysicalParams};

const BANDWIDTH: usize = 5;
const GAUSS: [f64; 2] = [0.211_324_865_405_187_1, 0.788_675_134_594_812_9];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Field {
    W = 0,
    Xi = 1,
    S = 2,
}

impl Field {
    pub const ALL: [Field; 3] = [Field::W, Field::Xi, Field::S];
}

/// Uniform mesh `x_j = j h`, `h = L / n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    n: usize,
    length: f64,
}

impl Grid {
    pub fn new(n: usize, length: f64) -> Result<Self> {
        if n < 4 {
            return Err(Error::Grid(n));
        }
        if !(length > 0.0 && length.is_finite()) {
            return Err(Error::ParameterDomain {
                name: "length",
                value: length,
                reason: "must be finite and > 0",
            });
        }
        Ok(Self { n, length })
    }

    pub fn elements(&self) -> usize {
        self.n
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn h(&self) -> f64 {
        self.length / self.n as f64
    }

    pub fn node(&self, j: usize) -> f64 {
        j as f64 * self.h()
    }

    /// Number of free nodal values (all three fields).
    pub fn dofs(&self) -> usize {
        3 * self.n
    }

    /// Index of `field` at free node `j` (`1..=n`).
    pub fn dof(&self, node: usize, field: Field) -> usize {
        debug_assert!(node >= 1 && node <= self.n);
        3 * (node - 1) + field as usize
    }

    /// Index of `field` at `x = L`.
    pub fn boundary_dof(&self, field: Field) -> usize {
        self.dof(self.n, field)
    }
}

/// Discrete phase vector: nodal positions and velocities. The velocities of
/// the boundary masses are the last nodal entries of `v`.
#[derive(Debug, Clone, PartialEq)]
pub struct State {
    pub q: DVector<f64>,
    pub v: DVector<f64>,
}

impl State {
    pub fn zeros(dofs: usize) -> Self {
        Self {
            q: DVector::zeros(dofs),
            v: DVector::zeros(dofs),
        }
    }

    pub fn new(q: DVector<f64>, v: DVector<f64>) -> Self {
        assert_eq!(q.len(), v.len());
        Self { q, v }
    }

    pub fn dofs(&self) -> usize {
        self.q.len()
    }

    /// Flattened `[q; v]`.
    pub fn to_vector(&self) -> DVector<f64> {
        let n = self.q.len();
        DVector::from_fn(2 * n, |i, _| if i < n { self.q[i] } else { self.v[i - n] })
    }

    pub fn from_vector(x: &DVector<f64>) -> Self {
        let n = x.len() / 2;
        Self {
            q: x.rows(0, n).into_owned(),
            v: x.rows(n, n).into_owned(),
        }
    }

    /// Velocity-reversed copy `(q, -v)`.
    pub fn reversed(&self) -> Self {
        Self {
            q: self.q.clone(),
            v: -&self.v,
        }
    }

    pub fn axpy(&mut self, alpha: f64, other: &State) {
        self.q.axpy(alpha, &other.q, 1.0);
        self.v.axpy(alpha, &other.v, 1.0);
    }

    pub fn max_abs(&self) -> f64 {
        self.q.amax().max(self.v.amax())
    }
}

impl Add for &State {
    type Output = State;
    fn add(self, rhs: &State) -> State {
        State {
            q: &self.q + &rhs.q,
            v: &self.v + &rhs.v,
        }
    }
}

impl Sub for &State {
    type Output = State;
    fn sub(self, rhs: &State) -> State {
        State {
            q: &self.q - &rhs.q,
            v: &self.v - &rhs.v,
        }
    }
}

impl AddAssign<&State> for State {
    fn add_assign(&mut self, rhs: &State) {
        self.q += &rhs.q;
        self.v += &rhs.v;
    }
}

impl Mul<f64> for &State {
    type Output = State;
    fn mul(self, a: f64) -> State {
        State {
            q: &self.q * a,
            v: &self.v * a,
        }
    }
}

impl Neg for &State {
    type Output = State;
    fn neg(self) -> State {
        State {
            q: -&self.q,
            v: -&self.v,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct AssemblyOptions {
    /// Row-sum lumping of the volume mass (the boundary masses are unaffected).
    pub lumped: bool,
}

/// Eigenpairs of the scalar clamped-left Laplacian, used by the fractional norm.
#[derive(Debug, Clone)]
struct ScalarSpectrum {
    values: DVector<f64>,
    vectors: DMatrix<f64>,
    mass: DMatrix<f64>,
}

/// Assembled matrices of the semi-discrete system
/// `M q'' + D q' + K q = B u + f`.
#[derive(Debug, Clone)]
pub struct DiscreteSystem {
    params: PhysicalParams,
    grid: Grid,
    options: AssemblyOptions,
    mass: SymBanded,
    stiffness: SymBanded,
    damping: SymBanded,
    mass_chol: BandedCholesky,
    stiffness_chol: Option<BandedCholesky>,
    spectrum: OnceLock<ScalarSpectrum>,
}

/// Value and derivative of the local linear basis at reference point `t`.
fn local_basis(t: f64, h: f64) -> ([f64; 2], [f64; 2]) {
    ([1.0 - t, t], [-1.0 / h, 1.0 / h])
}

pub fn assemble(params: &PhysicalParams, grid: &Grid) -> Result<DiscreteSystem> {
    assemble_with(params, grid, AssemblyOptions::default())
}

pub fn assemble_with(params: &PhysicalParams, grid: &Grid, options: AssemblyOptions) -> Result<DiscreteSystem> {
    params.validate()?;
    if (params.length - grid.length()).abs() > 1e-12 * params.length {
        return Err(Error::Domain(format!(
            "grid length {} differs from beam length {}",
            grid.length(),
            params.length
        )));
    }
    let n = grid.elements();
    let h = grid.h();
    let dofs = grid.dofs();
    let p = params;

    let mut stiffness = SymBanded::zeros(dofs, BANDWIDTH);
    // unweighted volume mass for each field, stored in the interleaved layout
    let mut vol = SymBanded::zeros(dofs, BANDWIDTH);

    // local index: 3 * a + c for local node a, field c
    let global = |e: usize, local: usize| -> Option<usize> {
        let node = e + local / 3;
        (node > 0).then(|| 3 * (node - 1) + local % 3)
    };

    for e in 0..n {
        for &t in &GAUSS {
            let wq = 0.5 * h;
            let (phi, dphi) = local_basis(t, h);
            let mut strain = [0.0; 6]; // w_x + xi + s
            let mut dxi = [0.0; 6];
            let mut ds = [0.0; 6];
            let mut sv = [0.0; 6];
            for a in 0..2 {
                strain[3 * a] = dphi[a];
                strain[3 * a + 1] = phi[a];
                strain[3 * a + 2] = phi[a];
                dxi[3 * a + 1] = dphi[a];
                ds[3 * a + 2] = dphi[a];
                sv[3 * a + 2] = phi[a];
            }
            for i in 0..6 {
                let Some(gi) = global(e, i) else { continue };
                for j in 0..=i {
                    let Some(gj) = global(e, j) else { continue };
                    let kij = 3.0 * p.k * strain[i] * strain[j]
                        + 3.0 * p.b * dxi[i] * dxi[j]
                        + p.b * ds[i] * ds[j]
                        + p.gamma * sv[i] * sv[j];
                    if kij != 0.0 {
                        stiffness.add(gi, gj, wq * kij);
                    }
                    // same field only
                    if i % 3 == j % 3 {
                        let mij = phi[i / 3] * phi[j / 3];
                        vol.add(gi, gj, wq * mij);
                    }
                }
            }
        }
    }

    if options.lumped {
        vol = vol.lumped();
    }

    let field_density = [3.0 * p.rho1, 3.0 * p.rho2, p.rho2];
    let mut mass = SymBanded::zeros(dofs, BANDWIDTH);
    let mut damping = SymBanded::zeros(dofs, BANDWIDTH);
    for i in 0..dofs {
        for j in i.saturating_sub(BANDWIDTH)..=i {
            let v = vol.get(i, j);
            if v == 0.0 {
                continue;
            }
            let c = i % 3;
            mass.add(i, j, field_density[c] * v);
            if c == Field::S as usize && p.beta > 0.0 {
                damping.add(i, j, p.beta * v);
            }
        }
    }
    for (field, weight) in Field::ALL.iter().zip(p.duality_weights()) {
        let d = grid.boundary_dof(*field);
        mass.add(d, d, weight);
    }

    let mass_chol = mass.cholesky()?;
    let stiffness_chol = if p.gamma > 0.0 { Some(stiffness.cholesky()?) } else { None };

    Ok(DiscreteSystem {
        params: *params,
        grid: *grid,
        options,
        mass,
        stiffness,
        damping,
        mass_chol,
        stiffness_chol,
        spectrum: OnceLock::new(),
    })
}

impl DiscreteSystem {
    pub fn params(&self) -> &PhysicalParams {
        &self.params
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn options(&self) -> AssemblyOptions {
        self.options
    }

    pub fn dofs(&self) -> usize {
        self.grid.dofs()
    }

    pub fn mass(&self) -> &SymBanded {
        &self.mass
    }

    pub fn stiffness(&self) -> &SymBanded {
        &self.stiffness
    }

    pub fn damping(&self) -> &SymBanded {
        &self.damping
    }

    pub fn is_damped(&self) -> bool {
        self.params.beta > 0.0
    }

    /// Duality weights `(3k, 3b, b)`.
    pub fn weights(&self) -> [f64; 3] {
        self.params.duality_weights()
    }

    pub fn solve_mass(&self, rhs: &DVector<f64>) -> DVector<f64> {
        self.mass_chol.solve(rhs)
    }

    pub fn solve_stiffness(&self, rhs: &DVector<f64>) -> Result<DVector<f64>> {
        self.stiffness_chol
            .as_ref()
            .map(|c| c.solve(rhs))
            .ok_or_else(|| Error::Internal("stiffness is singular (gamma = 0)".into()))
    }

    /// Values of `(w, xi, s)` at `x = L` (the map `C`).
    pub fn trace(&self, x: &DVector<f64>) -> [f64; 3] {
        Field::ALL.map(|f| x[self.grid.boundary_dof(f)])
    }

    /// Load vector `B u` of the boundary controls.
    pub fn inject(&self, u: [f64; 3]) -> DVector<f64> {
        let mut out = DVector::zeros(self.dofs());
        self.inject_into(u, &mut out);
        out
    }

    pub(crate) fn inject_into(&self, u: [f64; 3], out: &mut DVector<f64>) {
        for ((f, w), uc) in Field::ALL.iter().zip(self.weights()).zip(u) {
            out[self.grid.boundary_dof(*f)] += w * uc;
        }
    }

    /// Dense `C` (3 x 3n).
    pub fn trace_matrix(&self) -> DMatrix<f64> {
        let mut c = DMatrix::zeros(3, self.dofs());
        for (row, f) in Field::ALL.iter().enumerate() {
            c[(row, self.grid.boundary_dof(*f))] = 1.0;
        }
        c
    }

    /// Dense `B` (3n x 3).
    pub fn control_matrix(&self) -> DMatrix<f64> {
        let mut b = DMatrix::zeros(self.dofs(), 3);
        for (col, (f, w)) in Field::ALL.iter().zip(self.weights()).enumerate() {
            b[(self.grid.boundary_dof(*f), col)] = w;
        }
        b
    }

    /// `E = (v^T M v + q^T K q) / 2`.
    pub fn energy(&self, u: &State) -> f64 {
        0.5 * self.energy_inner(u, u)
    }

    /// `<u1, u2>_E = v1^T M v2 + q1^T K q2`.
    pub fn energy_inner(&self, u1: &State, u2: &State) -> f64 {
        self.mass.quad(&u1.v, &u2.v) + self.stiffness.quad(&u1.q, &u2.q)
    }

    pub fn energy_norm(&self, u: &State) -> f64 {
        self.energy_inner(u, u).max(0.0).sqrt()
    }

    /// Checked variant of [`energy_inner`](Self::energy_inner).
    pub fn try_energy_inner(&self, u1: &State, u2: &State) -> Result<f64> {
        for u in [u1, u2] {
            for len in [u.q.len(), u.v.len()] {
                if len != self.dofs() {
                    return Err(Error::Shape {
                        expected: self.dofs(),
                        found: len,
                    });
                }
            }
        }
        Ok(self.energy_inner(u1, u2))
    }

    /// Transposition pairing `v_U^T M q_Z - q_U^T M v_Z`.
    ///
    /// It is invariant along pairs of homogeneous trajectories and its rate
    /// along a controlled one is the weighted control/trace product.
    pub fn symplectic_pairing(&self, u: &State, z: &State) -> f64 {
        self.mass.quad(&u.v, &z.q) - self.mass.quad(&u.q, &z.v)
    }

    /// Nodal accelerations `-M^{-1} (K q + D v)` of the free system.
    pub fn acceleration(&self, u: &State) -> DVector<f64> {
        let mut rhs = self.stiffness.mul_vec(&u.q);
        if self.is_damped() {
            rhs += self.damping.mul_vec(&u.v);
        }
        -self.solve_mass(&rhs)
    }

    /// Restriction of a continuous state to the free nodes. The boundary
    /// velocities must agree with the velocity traces.
    pub fn interpolate(&self, c: &ContinuousState) -> Result<State> {
        let n = self.grid.elements();
        if c.nodes() != n + 1 {
            return Err(Error::Shape {
                expected: n + 1,
                found: c.nodes(),
            });
        }
        c.check(1e-12, true)?;
        let mut st = State::zeros(self.dofs());
        for j in 1..=n {
            for (f, (pos, vel)) in Field::ALL.iter().zip([(&c.w, &c.w_t), (&c.xi, &c.xi_t), (&c.s, &c.s_t)]) {
                let d = self.grid.dof(j, *f);
                st.q[d] = pos[j];
                st.v[d] = vel[j];
            }
        }
        Ok(st)
    }

    /// Dense first-order generator `[[0, I], [-M^{-1}K, -M^{-1}D]]`.
    pub fn first_order_matrix(&self) -> DMatrix<f64> {
        let d = self.dofs();
        let mut j = DMatrix::zeros(2 * d, 2 * d);
        let minv = self
            .mass
            .to_dense()
            .try_inverse()
            .expect("mass matrix is positive definite");
        let a = -&minv * self.stiffness.to_dense();
        let c = -&minv * self.damping.to_dense();
        for r in 0..d {
            j[(r, d + r)] = 1.0;
        }
        j.view_mut((d, 0), (d, d)).copy_from(&a);
        j.view_mut((d, d), (d, d)).copy_from(&c);
        j
    }

    fn spectrum(&self) -> &ScalarSpectrum {
        self.spectrum.get_or_init(|| {
            let n = self.grid.elements();
            let h = self.grid.h();
            let mut m = DMatrix::zeros(n, n);
            let mut k = DMatrix::zeros(n, n);
            for e in 0..n {
                for a in 0..2 {
                    for b in 0..2 {
                        let (ia, ib) = (e + a, e + b);
                        if ia == 0 || ib == 0 {
                            continue;
                        }
                        let mab = if a == b { h / 3.0 } else { h / 6.0 };
                        let kab = if a == b { 1.0 / h } else { -1.0 / h };
                        m[(ia - 1, ib - 1)] += mab;
                        k[(ia - 1, ib - 1)] += kab;
                    }
                }
            }
            let (values, vectors) =
                generalized_symmetric_eigen(&k, &m).expect("scalar Laplacian pencil is definite");
            ScalarSpectrum { values, vectors, mass: m }
        })
    }

    /// Spectral `H^sigma` norm of the three position fields, with modes of
    /// the clamped-left scalar Laplacian weighted by `(1 + lambda)^sigma`.
    pub fn fractional_norm(&self, q: &DVector<f64>, sigma: f64) -> Result<f64> {
        if !(sigma > 0.5 && sigma < 1.0) {
            return Err(Error::Domain(format!("sigma = {sigma} must lie in (1/2, 1)")));
        }
        self.spectral_norm(q, sigma)
    }

    pub(crate) fn spectral_norm(&self, q: &DVector<f64>, sigma: f64) -> Result<f64> {
        if q.len() != self.dofs() {
            return Err(Error::Shape {
                expected: self.dofs(),
                found: q.len(),
            });
        }
        let n = self.grid.elements();
        let sp = self.spectrum();
        let mut total = 0.0;
        for f in Field::ALL {
            let field = DVector::from_fn(n, |j, _| q[self.grid.dof(j + 1, f)]);
            let coeffs = sp.vectors.transpose() * (&sp.mass * field);
            total += coeffs
                .iter()
                .zip(sp.values.iter())
                .map(|(c, l)| (1.0 + l).powf(sigma) * c * c)
                .sum::<f64>();
        }
        Ok(total.sqrt())
    }
}

/// First-order generator applied matrix-free: `(v, -M^{-1}(K q + D v))`.
pub fn apply_a(sys: &DiscreteSystem, u: &State) -> State {
    State {
        q: u.v.clone(),
        v: sys.acceleration(u),
    }
}

/// Inverse of [`apply_a`]: `v = f_q`, `K q = -(M f_v + D f_q)`.
///
/// This is the discrete form of the variational problem whose right-hand
/// side collects the mass-weighted velocity data together with the boundary
/// components carried by the point masses.
pub fn solve_static(sys: &DiscreteSystem, f: &State) -> Result<State> {
    let mut rhs = sys.mass.mul_vec(&f.v);
    if sys.is_damped() {
        rhs += sys.damping.mul_vec(&f.q);
    }
    let q = -sys.solve_stiffness(&rhs)?;
    Ok(State { q, v: f.q.clone() })
}
