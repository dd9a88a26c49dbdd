//! Forward-backward sweep for the optimal lockdown schedule.
//!
//! Each iteration integrates the state forward under the current schedule,
//! integrates the costates backward along it, minimizes the Hamiltonian node by
//! node and relaxes the schedule towards that minimizer. The loop stops once
//! the pointwise minimizer agrees with the schedule it was computed from.

use serde::{Deserialize, Serialize};

use super::adjoint::{integrate_backward, AdjointForm, AdjointState, AdjointTrajectory};
use super::structure::{extract_structure, PolicyStructure};
use crate::costs::{objective, CostModel, CostShape};
use crate::dynamics::{integrate_forward, ControlSchedule, ModelParams, SystemState, TimeGrid, Trajectory};
use crate::error::{Error, Result};

/// Below this susceptible share the control is irrelevant and set to zero.
pub const NEGLIGIBLE_SUSCEPTIBLE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub max_iterations: usize,
    /// Weight of the new pointwise minimizer in each schedule update, in `(0, 1]`.
    pub relaxation: f64,
    /// Stop when `sup |u_new - u| < tolerance`.
    pub tolerance: f64,
    pub grid: TimeGrid,
    #[serde(default)]
    pub adjoint_form: AdjointForm,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            max_iterations: 500,
            relaxation: 0.5,
            tolerance: 1e-6,
            grid: TimeGrid::default(),
            adjoint_form: AdjointForm::Coupled,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.relaxation > 0.0 && self.relaxation <= 1.0) {
            return Err(Error::InvalidInput(format!(
                "relaxation must lie in (0,1], got {}",
                self.relaxation
            )));
        }
        if !(self.tolerance > 0.0 && self.tolerance.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "tolerance must be positive, got {}",
                self.tolerance
            )));
        }
        if self.max_iterations == 0 {
            return Err(Error::InvalidInput("max_iterations must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub trajectory: Trajectory,
    pub adjoint: AdjointTrajectory,
    pub schedule: ControlSchedule,
    pub objective: f64,
    pub structure: PolicyStructure,
    pub iterations: usize,
    /// Control residual after each iteration.
    pub history: Vec<f64>,
}

/// Minimizer of the Hamiltonian over `[0, u_max]` for each group.
///
/// Convex costs give `clamp(phi / (2 Z ES) - gamma, 0, u_max)`. Concave costs
/// make `H` concave in `u`, so the minimum sits at an endpoint; ties go to
/// `u_max`.
pub fn optimal_control_pointwise(
    state: &SystemState,
    adjoint: &AdjointState,
    params: &ModelParams,
    cost: &CostModel,
) -> Vec<f64> {
    state
        .groups
        .iter()
        .zip(&adjoint.groups)
        .enumerate()
        .map(|(p, (x, l))| {
            let g = &params.groups[p];
            if x.s < NEGLIGIBLE_SUSCEPTIBLE {
                return 0.0;
            }
            let phi = l.s - l.q;
            let weight = cost.population * cost.groups[p].quarantine;
            match cost.shape {
                CostShape::Convex => {
                    if weight == 0.0 {
                        if phi > 0.0 {
                            g.u_max
                        } else {
                            0.0
                        }
                    } else {
                        (phi / (2.0 * weight) - g.gamma).clamp(0.0, g.u_max)
                    }
                }
                CostShape::Concave => {
                    // per unit of S: h-cost minus the costate benefit of isolating
                    let at_max = weight * cost.isolation_shape(g.u_max + g.gamma) - phi * g.u_max;
                    let at_zero = weight * cost.isolation_shape(g.gamma);
                    if at_max <= at_zero {
                        g.u_max
                    } else {
                        0.0
                    }
                }
            }
        })
        .collect()
}

fn pointwise_schedule(
    trajectory: &Trajectory,
    adjoint: &AdjointTrajectory,
    params: &ModelParams,
    cost: &CostModel,
) -> Result<ControlSchedule> {
    let rows = trajectory
        .states
        .iter()
        .zip(&adjoint.states)
        .map(|(x, l)| optimal_control_pointwise(x, l, params, cost))
        .collect();
    ControlSchedule::from_nodes(rows)
}

fn relax(current: &ControlSchedule, target: &ControlSchedule, w: f64, params: &ModelParams) -> ControlSchedule {
    let rows = current
        .rows()
        .iter()
        .zip(target.rows())
        .map(|(old, new)| {
            old.iter()
                .zip(new)
                .zip(&params.groups)
                .map(|((a, b), g)| ((1.0 - w) * a + w * b).clamp(0.0, g.u_max))
                .collect()
        })
        .collect();
    ControlSchedule::from_nodes(rows).expect("relaxed schedule keeps its shape")
}

/// Runs the sweep from the zero schedule.
pub fn solve_fbsm(
    initial: &SystemState,
    params: &ModelParams,
    cost: &CostModel,
    config: &SolverConfig,
) -> Result<SolveReport> {
    let start = ControlSchedule::zeros(&config.grid, params.n_groups());
    solve_fbsm_from(initial, params, cost, config, start)
}

/// Runs the sweep from a caller-supplied schedule.
pub fn solve_fbsm_from(
    initial: &SystemState,
    params: &ModelParams,
    cost: &CostModel,
    config: &SolverConfig,
    start: ControlSchedule,
) -> Result<SolveReport> {
    config.validate()?;
    params.validate()?;
    cost.validate()?;
    if cost.groups.len() != params.n_groups() {
        return Err(Error::InvalidInput(
            "cost model and parameters disagree on the number of groups".into(),
        ));
    }
    let grid = config.grid;
    let mut schedule = start;
    let mut history = Vec::new();
    for iteration in 1..=config.max_iterations {
        let trajectory = integrate_forward(initial, &schedule, params, &grid)?;
        let adjoint = integrate_backward(&trajectory, &schedule, params, cost, config.adjoint_form)?;
        let target = pointwise_schedule(&trajectory, &adjoint, params, cost)?;
        let residual = target.sup_distance(&schedule);
        history.push(residual);
        if residual < config.tolerance {
            let objective = objective(&trajectory, &schedule, cost, params)?;
            let structure = extract_structure(&schedule, params, &grid);
            return Ok(SolveReport {
                trajectory,
                adjoint,
                schedule,
                objective,
                structure,
                iterations: iteration,
                history,
            });
        }
        schedule = relax(&schedule, &target, config.relaxation, params);
    }
    Err(Error::NotConverged {
        iterations: config.max_iterations,
        last_residual: history.last().copied().unwrap_or(f64::NAN),
        history,
    })
}
