//! Pontryagin machinery: Hamiltonian, costates, sweep solver and the
//! switching structure of its solutions.

mod adjoint;
mod structure;
mod sweep;

pub use adjoint::{
    adjoint_derivative, adjoint_derivative_with, control_gradient, control_slope, hamiltonian,
    integrate_backward, AdjointForm, AdjointState, AdjointTrajectory, Costate,
};
pub use structure::{classify, extract_structure, GroupStructure, Phase, PolicyStructure, PHASE_BAND};
pub use sweep::{
    optimal_control_pointwise, solve_fbsm, solve_fbsm_from, SolveReport, SolverConfig,
    NEGLIGIBLE_SUSCEPTIBLE,
};
