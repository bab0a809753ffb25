//! Null controllability by the Hilbert uniqueness method.
//!
//! Adjoint data `a` are prescribed at `t = T`. The adjoint position traces
//! at `x = L` are fed back as the three boundary controls, the controlled
//! system is run from rest, and the Gramian returns
//!
//! ```text
//! Lambda a = P (-A^{-1}) U_ctrl(T),   -A^{-1}(q, v) = (K^{-1} M v, -q).
//! ```
//!
//! With this Riesz map the discrete transposition identity gives
//! `<Lambda a, b>_E = sum_j dt (C qbar_a)^T W (C qbar_b)`, so `Lambda` is
//! symmetric and positive semidefinite in the energy product by
//! construction. Null control of `U0` solves `Lambda a = P A^{-1} S(T) U0`.

use std::sync::atomic::{AtomicUsize, Ordering};

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::assembly::{assemble_with, solve_static, AssemblyOptions, DiscreteSystem, Grid, State};
use crate::error::{Error, Result};
use crate::evolution::{ControlTriple, Integrator, Storage, TimeGrid, Trajectory};
use crate::linalg::{lanczos, LanczosOutcome};
use crate::modal::ModalFilter;
use crate::model::PhysicalParams;
use crate::observability::{midpoint_trace_pairing, sample_rng};

/// Below this `mu_min` the filtered Gramian is treated as singular.
pub const ILL_POSED_THRESHOLD: f64 = 1e-12;

/// Which quadratic form of the traces the Gramian represents.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TraceWeighting {
    /// `3k |w|^2 + 3b |xi|^2 + b |s|^2`; controls equal the adjoint traces.
    #[default]
    Weighted,
    /// `|w|^2 + |xi|^2 + |s|^2`; controls are the traces divided by `(3k, 3b, b)`.
    Unweighted,
}

/// Tikhonov shift `eps I` added to the Gramian.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Tikhonov {
    /// No shift; a singular filtered Gramian is an error.
    #[default]
    Off,
    /// Shift by [`ILL_POSED_THRESHOLD`] only when `mu_min` falls below it.
    Auto,
    Fixed(f64),
}

/// Matrix-free controllability Gramian on the filtered space.
#[derive(Debug)]
pub struct GramianOperator<'a> {
    sys: &'a DiscreteSystem,
    grid: TimeGrid,
    filter: &'a ModalFilter,
    weighting: TraceWeighting,
    regularization: f64,
    integrator: Integrator<'a>,
    unfiltered_inputs: AtomicUsize,
}

impl<'a> GramianOperator<'a> {
    pub fn new(sys: &'a DiscreteSystem, tg: &TimeGrid, filter: &'a ModalFilter) -> Result<Self> {
        sys.params().validate_conservative()?;
        if filter.eigenvectors().nrows() != sys.dofs() {
            return Err(Error::Shape {
                expected: sys.dofs(),
                found: filter.eigenvectors().nrows(),
            });
        }
        Ok(Self {
            sys,
            grid: *tg,
            filter,
            weighting: TraceWeighting::Weighted,
            regularization: 0.0,
            integrator: Integrator::new(sys, tg.dt())?,
            unfiltered_inputs: AtomicUsize::new(0),
        })
    }

    pub fn with_weighting(mut self, weighting: TraceWeighting) -> Self {
        self.weighting = weighting;
        self
    }

    pub fn with_regularization(mut self, eps: f64) -> Result<Self> {
        if !(eps >= 0.0 && eps.is_finite()) {
            return Err(Error::Domain(format!("Tikhonov shift {eps} must be finite and >= 0")));
        }
        self.regularization = eps;
        Ok(self)
    }

    pub fn system(&self) -> &'a DiscreteSystem {
        self.sys
    }

    pub fn filter(&self) -> &'a ModalFilter {
        self.filter
    }

    pub fn time_grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn weighting(&self) -> TraceWeighting {
        self.weighting
    }

    pub fn regularization(&self) -> f64 {
        self.regularization
    }

    /// Number of inputs that had to be projected before application.
    pub fn unfiltered_inputs(&self) -> usize {
        self.unfiltered_inputs.load(Ordering::Relaxed)
    }

    /// Weights of the trace quadratic form.
    pub fn pairing_weights(&self) -> [f64; 3] {
        match self.weighting {
            TraceWeighting::Weighted => self.sys.weights(),
            TraceWeighting::Unweighted => [1.0; 3],
        }
    }

    fn control_scale(&self) -> [f64; 3] {
        match self.weighting {
            TraceWeighting::Weighted => [1.0; 3],
            TraceWeighting::Unweighted => self.sys.weights().map(|w| 1.0 / w),
        }
    }

    fn filtered_input(&self, a: &State) -> Result<State> {
        if a.dofs() != self.sys.dofs() {
            return Err(Error::Shape {
                expected: self.sys.dofs(),
                found: a.dofs(),
            });
        }
        if self.filter.is_filtered(self.sys, a, 1e-10) {
            Ok(a.clone())
        } else {
            self.unfiltered_inputs.fetch_add(1, Ordering::Relaxed);
            Ok(self.filter.project(a))
        }
    }

    /// Adjoint flow ending at `a`, traces only.
    pub fn adjoint(&self, a: &State) -> Result<Trajectory> {
        self.integrator.run_backward(a, self.grid.steps(), Storage::Traces)
    }

    /// Boundary controls generated by adjoint data `a`.
    pub fn controls_for(&self, a: &State) -> Result<ControlTriple> {
        let adj = self.adjoint(a)?;
        Ok(ControlTriple::from_trace(&adj.position, self.control_scale()))
    }

    /// `Lambda a`.
    pub fn apply(&self, a: &State) -> Result<State> {
        let a = self.filtered_input(a)?;
        let controls = self.controls_for(&a)?;
        let run = self.integrator.run(
            &State::zeros(self.sys.dofs()),
            self.grid.steps(),
            Some(&controls),
            None,
            Storage::Traces,
        )?;
        let mut out = self.filter.project(&neg_inverse_generator(self.sys, &run.terminal)?);
        if self.regularization > 0.0 {
            out.axpy(self.regularization, &a);
        }
        Ok(out)
    }

    /// `Lambda` in the energy-orthonormal coordinates of the filter.
    pub fn apply_coordinates(&self, c: &DVector<f64>) -> Result<DVector<f64>> {
        if c.len() != self.filter.dim() {
            return Err(Error::Shape {
                expected: self.filter.dim(),
                found: c.len(),
            });
        }
        let out = self.apply(&self.filter.from_coordinates(c))?;
        Ok(self.filter.coordinates(&out))
    }

    /// `<Lambda a, a>_E` evaluated from the adjoint traces alone.
    pub fn quadratic_form(&self, a: &State) -> Result<f64> {
        let a = self.filtered_input(a)?;
        let adj = self.adjoint(&a)?;
        let traces = midpoint_trace_pairing(&adj.position, &adj.position, self.pairing_weights(), self.grid.dt());
        Ok(traces + self.regularization * self.sys.energy_inner(&a, &a))
    }

    /// Dense `2m x 2m` matrix of `Lambda` in filter coordinates, assembled
    /// column by column. Meant as a test oracle for small filters.
    pub fn dense_matrix(&self) -> Result<DMatrix<f64>> {
        let d = self.filter.dim();
        let cols: Vec<DVector<f64>> = (0..d)
            .into_par_iter()
            .map(|j| {
                let mut e = DVector::zeros(d);
                e[j] = 1.0;
                self.apply_coordinates(&e)
            })
            .collect::<Result<_>>()?;
        Ok(DMatrix::from_columns(&cols))
    }

    /// Ritz values of `Lambda` by Lanczos over the whole filtered space.
    pub fn spectrum(&self, seed: u64) -> Result<LanczosOutcome> {
        let d = self.filter.dim();
        let mut rng = sample_rng(seed, u64::MAX);
        let start = DVector::from_fn(d, |_, _| rng.sample::<f64, _>(StandardNormal));
        lanczos(&start, d, 0.0, |x| self.apply_coordinates(x))
    }

    /// `P A^{-1} S(T) U0`, the right-hand side of the null-control equation.
    pub fn null_control_rhs(&self, u0: &State) -> Result<State> {
        let free = self
            .integrator
            .run(u0, self.grid.steps(), None, None, Storage::Traces)?;
        let x = neg_inverse_generator(self.sys, &free.terminal)?;
        Ok(self.filter.project(&(-&x)))
    }
}

/// `-A^{-1} u = (K^{-1} M v, -q)`.
fn neg_inverse_generator(sys: &DiscreteSystem, u: &State) -> Result<State> {
    Ok(-&solve_static(sys, u)?)
}

/// Result of [`minimize_j`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HumSolution {
    /// Minimizing adjoint data at `t = T`.
    #[serde(skip)]
    pub adjoint_data: Option<State>,
    #[serde(skip)]
    pub controls: Option<ControlTriple>,
    pub horizon: f64,
    pub steps: usize,
    pub iterations: usize,
    pub converged: bool,
    /// `||r_k||_E / ||rhs||_E` before every iteration and at exit.
    pub residual_history: Vec<f64>,
    /// Values of the quadratic objective along the iterates.
    pub objective_history: Vec<f64>,
    pub weighting: TraceWeighting,
    pub regularization: f64,
    /// Energy `E(U0)` of the data passed to the minimizer.
    pub initial_energy: f64,
    /// Energy at `T` of the controlled run from the same data.
    pub final_energy: f64,
    /// Energy at `T` of the filtered part of that run.
    pub final_filtered_energy: f64,
    /// `||(u1, u2, u3)||` in `L^2(0, T)^3`.
    pub control_norm: f64,
}

impl HumSolution {
    pub fn controls(&self) -> &ControlTriple {
        self.controls.as_ref().expect("controls are populated by minimize_j")
    }

    pub fn adjoint_data(&self) -> &State {
        self.adjoint_data.as_ref().expect("adjoint data are populated by minimize_j")
    }
}

/// Conjugate gradients in the energy product for `Lambda a = P A^{-1} S(T) U0`.
///
/// Hitting `max_iter` is not an error; the partial solution comes back with
/// `converged = false`.
pub fn minimize_j(g: &GramianOperator<'_>, u0: &State, tol: f64, max_iter: usize) -> Result<HumSolution> {
    if !(tol > 0.0 && tol.is_finite()) {
        return Err(Error::Domain(format!("CG tolerance {tol} must be finite and > 0")));
    }
    let sys = g.system();
    let filter = g.filter();
    if u0.dofs() != sys.dofs() {
        return Err(Error::Shape {
            expected: sys.dofs(),
            found: u0.dofs(),
        });
    }
    let rhs = filter.coordinates(&g.null_control_rhs(u0)?);
    let b_norm = rhs.norm();
    let mut x = DVector::zeros(rhs.len());
    let mut residual_history = Vec::new();
    let mut objective_history = vec![0.0];
    let mut iterations = 0;
    let mut converged = b_norm == 0.0;
    if !converged {
        let mut r = rhs.clone();
        let mut p = r.clone();
        let mut rr = r.dot(&r);
        residual_history.push(1.0);
        while iterations < max_iter {
            let ap = g.apply_coordinates(&p)?;
            let pp = p.dot(&p);
            let curv = p.dot(&ap);
            if curv <= ILL_POSED_THRESHOLD * pp {
                return Err(Error::IllPosedFilter { mu_min: curv / pp });
            }
            let alpha = rr / curv;
            x.axpy(alpha, &p, 1.0);
            r.axpy(-alpha, &ap, 1.0);
            iterations += 1;
            let rr_new = r.dot(&r);
            residual_history.push(rr_new.sqrt() / b_norm);
            // J(x) = x^T Lambda x / 2 - rhs^T x with Lambda x = rhs - r
            objective_history.push(-0.5 * x.dot(&(&rhs + &r)));
            if rr_new.sqrt() <= tol * b_norm {
                converged = true;
                break;
            }
            p = &r + &p * (rr_new / rr);
            rr = rr_new;
        }
    }

    let a = filter.from_coordinates(&x);
    let controls = g.controls_for(&a)?;
    let tg = *g.time_grid();
    let run = Integrator::new(sys, tg.dt())?.run(u0, tg.steps(), Some(&controls), None, Storage::Traces)?;
    Ok(HumSolution {
        adjoint_data: Some(a),
        horizon: tg.horizon(),
        steps: tg.steps(),
        iterations,
        converged,
        residual_history,
        objective_history,
        weighting: g.weighting(),
        regularization: g.regularization(),
        initial_energy: sys.energy(u0),
        final_energy: sys.energy(&run.terminal),
        final_filtered_energy: sys.energy(&filter.project(&run.terminal)),
        control_norm: controls.l2_norm(tg.dt()),
        controls: Some(controls),
    })
}

/// Initial data of a null-control run.
#[derive(Debug, Clone, PartialEq)]
pub enum InitialData {
    Zero,
    /// Unit-energy-norm displacement in retained mode `k` (0-based).
    Mode(usize),
    /// Gaussian filtered data of unit energy norm, drawn from the seed.
    Random,
    Given(State),
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub params: PhysicalParams,
    pub n: usize,
    pub m: usize,
    pub horizon: f64,
    pub steps: usize,
    pub tol: f64,
    pub max_iter: usize,
    pub initial: InitialData,
    pub seed: u64,
    pub weighting: TraceWeighting,
    pub tikhonov: Tikhonov,
    pub assembly: AssemblyOptions,
}

impl PipelineConfig {
    /// Defaults: `m = n / 3`, four crossing times, 2000 steps, CG tolerance `1e-6`.
    pub fn new(params: PhysicalParams, n: usize) -> Self {
        Self {
            params,
            n,
            m: ModalFilter::default_size(n),
            horizon: params.default_horizon(),
            steps: 2000,
            tol: 1e-6,
            max_iter: 500,
            initial: InitialData::Random,
            seed: 0,
            weighting: TraceWeighting::Weighted,
            tikhonov: Tikhonov::Off,
            assembly: AssemblyOptions::default(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct PipelineOutcome {
    pub solution: HumSolution,
    /// Controlled run from the unfiltered data, traces and energies only.
    pub trajectory: Trajectory,
    pub initial: State,
    pub mu_min: f64,
    pub mu_max: f64,
    /// `||U0||_E / sqrt(mu_min)`.
    pub control_bound: f64,
    /// `E(P U(T)) / E(P U0)`.
    pub filtered_ratio: f64,
    /// `E(U(T)) / E(U0)`.
    pub unfiltered_ratio: f64,
    pub unfiltered_inputs: usize,
}

/// Builds the initial data of a run.
pub fn initial_state(spec: &InitialData, sys: &DiscreteSystem, filter: &ModalFilter, seed: u64) -> Result<State> {
    match spec {
        InitialData::Zero => Ok(State::zeros(sys.dofs())),
        InitialData::Mode(k) => filter.mode_state(*k),
        InitialData::Random => Ok(filter.random_state(&mut sample_rng(seed, 0))),
        InitialData::Given(u) => {
            if u.dofs() != sys.dofs() {
                return Err(Error::Shape {
                    expected: sys.dofs(),
                    found: u.dofs(),
                });
            }
            Ok(u.clone())
        }
    }
}

fn ratio(num: f64, den: f64) -> f64 {
    if den == 0.0 {
        0.0
    } else {
        num / den
    }
}

/// Assemble, filter, minimize and re-simulate from the unfiltered data.
pub fn null_control_pipeline(cfg: &PipelineConfig) -> Result<PipelineOutcome> {
    cfg.params.validate_conservative()?;
    let sys = assemble_with(&cfg.params, &Grid::new(cfg.n, cfg.params.length)?, cfg.assembly)?;
    let filter = ModalFilter::new(&sys, cfg.m)?;
    let tg = TimeGrid::new(cfg.horizon, cfg.steps)?;
    let u0 = initial_state(&cfg.initial, &sys, &filter, cfg.seed)?;

    let plain = GramianOperator::new(&sys, &tg, &filter)?.with_weighting(cfg.weighting);
    let spectrum = plain.spectrum(cfg.seed)?;
    let (mu_min, mu_max) = (spectrum.smallest(), spectrum.largest());
    let eps = match cfg.tikhonov {
        Tikhonov::Off if mu_min < ILL_POSED_THRESHOLD => return Err(Error::IllPosedFilter { mu_min }),
        Tikhonov::Off => 0.0,
        Tikhonov::Auto if mu_min < ILL_POSED_THRESHOLD => ILL_POSED_THRESHOLD,
        Tikhonov::Auto => 0.0,
        Tikhonov::Fixed(e) => e,
    };
    let gram = plain.with_regularization(eps)?;

    let u0_filtered = filter.project(&u0);
    let solution = minimize_j(&gram, &u0_filtered, cfg.tol, cfg.max_iter)?;
    let trajectory = Integrator::new(&sys, tg.dt())?.run(
        &u0,
        tg.steps(),
        Some(solution.controls()),
        None,
        Storage::Traces,
    )?;
    let e0 = sys.energy(&u0);
    let e0_filtered = sys.energy(&u0_filtered);
    let filtered_ratio = ratio(sys.energy(&filter.project(&trajectory.terminal)), e0_filtered);
    let unfiltered_ratio = ratio(sys.energy(&trajectory.terminal), e0);
    let control_bound = if mu_min > 0.0 {
        sys.energy_norm(&u0) / mu_min.sqrt()
    } else {
        f64::INFINITY
    };
    Ok(PipelineOutcome {
        solution,
        trajectory,
        initial: u0,
        mu_min,
        mu_max,
        control_bound,
        filtered_ratio,
        unfiltered_ratio,
        unfiltered_inputs: gram.unfiltered_inputs(),
    })
}

/// Both sides of the discrete duality identity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DualityBalance {
    /// `Omega(U(T), Z(T)) - Omega(U(0), Z(0))`.
    pub lhs: f64,
    /// `sum_j dt u_mid^T W C zbar`.
    pub rhs: f64,
}

impl DualityBalance {
    pub fn residual(&self) -> f64 {
        let den = self.lhs.abs() + self.rhs.abs();
        if den == 0.0 {
            0.0
        } else {
            (self.lhs - self.rhs).abs() / den
        }
    }
}

/// Pairs the controlled run from `u0` with the adjoint run ending at `wt`.
pub fn duality_balance(
    sys: &DiscreteSystem,
    u0: &State,
    controls: &ControlTriple,
    wt: &State,
    tg: &TimeGrid,
) -> Result<DualityBalance> {
    let integ = Integrator::new(sys, tg.dt())?;
    let u = integ.run(u0, tg.steps(), Some(controls), None, Storage::Traces)?;
    let z = integ.run_backward(wt, tg.steps(), Storage::Traces)?;
    let lhs = sys.symplectic_pairing(&u.terminal, &z.terminal) - sys.symplectic_pairing(&u.initial, &z.initial);
    let w = sys.weights();
    let dt = tg.dt();
    let mut rhs = 0.0;
    for j in 0..tg.steps() {
        let um = controls.mid(j);
        let (a, b) = (z.position.sample(j), z.position.sample(j + 1));
        for c in 0..3 {
            rhs += w[c] * um[c] * 0.5 * (a[c] + b[c]);
        }
    }
    Ok(DualityBalance { lhs, rhs: rhs * dt })
}

/// Relative residual of [`duality_balance`].
pub fn verify_duality_identity(
    sys: &DiscreteSystem,
    u0: &State,
    controls: &ControlTriple,
    wt: &State,
    tg: &TimeGrid,
) -> Result<f64> {
    Ok(duality_balance(sys, u0, controls, wt, tg)?.residual())
}
