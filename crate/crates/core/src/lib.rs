//! Boundary null control of a laminated Timoshenko beam whose free end
//! carries dynamic (Venttsel) boundary conditions.
//!
//! The beam is described by the deflection `w`, the combination `xi` of
//! rotation and slip, and the interfacial slip `s`. The crate provides
//!
//! * a P1 finite element semi-discretization with boundary point masses
//!   ([`assembly`]),
//! * an energy-conserving implicit midpoint integrator with forward,
//!   adjoint and damped solves ([`evolution`]),
//! * modal filtering ([`modal`]), observability diagnostics
//!   ([`observability`]) and the HUM controllability pipeline ([`hum`]),
//! * CSV, JSON, Matrix Market and binary snapshot output ([`export`]).
//!
//! ```
//! use laminate_hum::prelude::*;
//!
//! let params = PhysicalParams::default();
//! let sys = assemble(&params, &Grid::new(16, params.length)?)?;
//! let filter = ModalFilter::new(&sys, 4)?;
//! let u0 = filter.mode_state(0)?;
//! let traj = solve_homogeneous(&sys, &u0, &TimeGrid::new(1.0, 200)?)?;
//! assert!(traj.energy_drift() < 1e-12);
//! # Ok::<(), laminate_hum::Error>(())
//! ```

pub mod assembly;
pub mod banded;
pub mod error;
pub mod evolution;
pub mod export;
pub mod hum;
pub mod linalg;
pub mod modal;
pub mod model;
pub mod observability;

pub use error::{Error, Result};

pub mod prelude {
    pub use crate::assembly::{apply_a, assemble, assemble_with, solve_static, AssemblyOptions, DiscreteSystem, Field, Grid, State};
    pub use crate::error::{Error, Result};
    pub use crate::evolution::{
        solve_adjoint, solve_controlled, solve_damped, solve_homogeneous, ControlTriple, Integrator, Storage,
        TimeGrid, Trajectory,
    };
    pub use crate::hum::{
        minimize_j, null_control_pipeline, verify_duality_identity, GramianOperator, InitialData, PipelineConfig,
        Tikhonov, TraceWeighting,
    };
    pub use crate::modal::ModalFilter;
    pub use crate::model::{from_hansen_spies, HansenSpiesParams, PhysicalParams};
    pub use crate::observability::{
        estimate_observability_constant, multiplier_identity_residual, position_trace_functional,
        velocity_trace_functional,
    };
}

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    struct Introduction;
    #[doc = include_str!("../../../book/src/model.md")]
    struct Model;
    #[doc = include_str!("../../../book/src/discretization.md")]
    struct Discretization;
    #[doc = include_str!("../../../book/src/time-integration.md")]
    struct TimeIntegration;
    #[doc = include_str!("../../../book/src/observability.md")]
    struct Observability;
    #[doc = include_str!("../../../book/src/hum.md")]
    struct Hum;
    #[doc = include_str!("../../../book/src/cli.md")]
    struct Cli;
}
