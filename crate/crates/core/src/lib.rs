//! Competitive bi-virus SIS epidemic coupled with replicator-dynamics social
//! distancing.
//!
//! The crate integrates the five-dimensional system, enumerates its fixed
//! points and lines of fixed points in closed form, and classifies their
//! local stability both from Jacobian spectra and from closed-form parameter
//! conditions. [`harness`] adds config files, scenario runs, parameter
//! sweeps and data export.

pub mod equilibria;
pub mod harness;
pub mod integrator;
pub mod model;
pub mod stability;

pub use equilibria::{
    coexistence_lines, enumerate_isolated, partial_distancing_line, point_on_line,
    reproduction_numbers, Condition, Equilibrium, EquilibriumError, EquilibriumKind,
    EquilibriumLine, LineKind, ReproductionNumbers, R0_REL_TOL,
};
pub use integrator::{
    detect_convergence, integrate, project_onto_gamma, rk4_step, rk4_step_raw, IntegratorError,
    SimConfig, Trajectory,
};
pub use model::{
    helper_h, in_gamma, payoffs, validate_params, vector_field, Derivative, Helpers, ModelError,
    ModelParams, Payoffs, State, Strain, ValidationReport, GAMMA_SLACK,
};
pub use stability::{
    check_l1_l0_relation, classify_line, classify_point, eigenvalues, jacobian, line_jacobian,
    ClosedForm, ClosedFormVerdict, Complex64, Matrix5, NumericVerdict, StabilityError,
    StabilityReport, LINE_SAMPLES, ZERO_TOL,
};
