//! Spectral Galerkin solvers for stochastic generalized porous media
//! equations driven by Poisson random measures, with tools for the
//! small-noise large deviation analysis: skeleton (controlled) equations,
//! controlled noise by thinning, entropy costs and rate-function estimates.
//!
//! ```no_run
//! use porous_ldp::{ControlGrid, JumpCoefficient, MarkSpace, Model, OperatorSpec, PsiSpec, SolverConfig, SpectralField};
//!
//! let op = OperatorSpec::laplacian(4)?;
//! let jump = JumpCoefficient::zero(&op, 1)?;
//! let marks = MarkSpace::new(vec![0.0], vec![1.0])?;
//! let model = Model::new(op, PsiSpec::linear(1.0)?, jump, marks, 0.5)?;
//! let x0 = SpectralField::new(vec![1.0, 0.5, 0.25, 0.125])?;
//! let g = ControlGrid::ones(1, 1, 0.5)?;
//! let traj = porous_ldp::solve_skeleton(&model, &g, &x0, &SolverConfig::with_steps(100))?;
//! println!("{:?}", traj.terminal());
//! # Ok::<(), porous_ldp::Error>(())
//! ```

// NaN-rejecting guards are written as `!(x > 0.0)` on purpose.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod app;
pub mod config;
pub mod control;
pub mod error;
pub mod jumps;
pub mod marks;
pub mod nonlinearity;
pub mod rate;
pub mod skeleton;
pub mod spectral;
pub mod stats;

pub use config::Config;
pub use control::{entropy_l, project_sn, q_cost, young_bound, ControlGrid, YoungBound};
pub use error::{Error, Result};
pub use jumps::{
    condition_b_experiment, sample_controlled_prm, sample_prm, solve_spde, solve_spde_on_stream, AppliedJump, BoundedControl,
    ConditionBReport, ExperimentRow, JumpEvent, JumpStream, RngSpec, SpdePath,
};
pub use marks::{
    aggregate_h, check_h2, integrated_h, tail_certificate, tail_compact, Bound, H2Report, JumpCoefficient, MarkSpace,
    TailCertificate, TimeProfile,
};
pub use nonlinearity::{apply_psi, check_h1_fn, H1Report, PsiKind, PsiSpec};
pub use rate::{
    ldp_slope_compare, mc_rare_event, minimize_rate, Direction, EventSpec, LdpReport, McRow, Observable, RateOptions, RateResult,
};
pub use skeleton::{
    apriori_report, continuity_experiment, solve_regularized, solve_skeleton, AprioriReport, ContinuityReport, Model, SolverConfig,
    TimeScheme, Trajectory,
};
pub use spectral::{from_grid, to_grid, Basis, Collocation, Norm, OperatorKind, OperatorSpec, SpectralField};
