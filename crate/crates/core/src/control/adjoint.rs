//! Hamiltonian, costate dynamics and the backward integrator.

use serde::{Deserialize, Serialize};

use crate::costs::{running_cost, CostModel};
use crate::dynamics::{
    rates, total_infectious, Compartments, ControlSchedule, ModelParams, SystemState, TimeGrid,
    Trajectory,
};
use crate::error::{Error, Result};

/// Costates of one group, in SQAIRD order.
pub type Costate = Compartments;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdjointState {
    pub groups: Vec<Costate>,
}

impl AdjointState {
    pub fn zeros(n_groups: usize) -> Self {
        AdjointState {
            groups: vec![Compartments::ZERO; n_groups],
        }
    }

    /// Terminal costates: zero except `lambda_D = Z * ED` (terminal death cost).
    pub fn terminal(cost: &CostModel) -> Self {
        AdjointState {
            groups: cost
                .groups
                .iter()
                .map(|c| Costate {
                    d: cost.population * c.death,
                    ..Compartments::ZERO
                })
                .collect(),
        }
    }

    pub fn scaled_add(&self, k: f64, other: &AdjointState) -> AdjointState {
        AdjointState {
            groups: self
                .groups
                .iter()
                .zip(&other.groups)
                .map(|(x, y)| x.scaled_add(k, y))
                .collect(),
        }
    }

    /// Pairing `<lambda, f>` with a state-shaped vector.
    pub fn pair(&self, rates: &SystemState) -> f64 {
        self.groups
            .iter()
            .zip(&rates.groups)
            .map(|(l, f)| l.dot(f))
            .sum()
    }

    /// Switching function `phi_p = lambda_S - lambda_Q` for each group.
    pub fn switching(&self) -> Vec<f64> {
        self.groups.iter().map(|l| l.s - l.q).collect()
    }

    pub fn is_finite(&self) -> bool {
        self.groups.iter().all(Compartments::is_finite)
    }
}

/// How the infection term couples costates across groups.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AdjointForm {
    /// Exact `-dH/dx`: the asymptomatic and infected costates of every group
    /// see `beta * sum_q (lambda_S_q - lambda_A_q) S_q`.
    #[default]
    Coupled,
    /// Each group only sees its own `(lambda_S_p - lambda_A_p) beta S_p`.
    /// Not a gradient of `J`; kept to compare against the uncoupled equations.
    Decoupled,
}

/// `H = L + <lambda, f>` written out term by term.
pub fn hamiltonian(
    state: &SystemState,
    adjoint: &AdjointState,
    u: &[f64],
    params: &ModelParams,
    cost: &CostModel,
) -> f64 {
    let (a_tot, i_tot) = total_infectious(state);
    let pressure = params.beta * (a_tot + i_tot);
    let flows: f64 = state
        .groups
        .iter()
        .zip(&adjoint.groups)
        .zip(&params.groups)
        .zip(u)
        .map(|(((x, l), g), &u)| {
            (l.a - l.s) * pressure * x.s
                + (l.q - l.s) * (u + g.gamma) * x.s
                + (l.i - l.a) * g.alpha * g.k * x.a
                + (l.r - l.a) * (1.0 - g.alpha) * g.sigma * x.a
                + (l.r - l.i) * g.sigma * x.i
                + (l.d - l.i) * g.mu * x.i
        })
        .sum();
    running_cost(state, u, cost, params) + flows
}

/// `dH/dx` for every state component (the costate rate is its negative).
fn state_gradient(
    state: &SystemState,
    adjoint: &AdjointState,
    u: &[f64],
    params: &ModelParams,
    cost: &CostModel,
    form: AdjointForm,
) -> AdjointState {
    let (a_tot, i_tot) = total_infectious(state);
    let pressure = params.beta * (a_tot + i_tot);
    let shared: f64 = params.beta
        * state
            .groups
            .iter()
            .zip(&adjoint.groups)
            .map(|(x, l)| (l.a - l.s) * x.s)
            .sum::<f64>();
    let z = cost.population;
    let groups = state
        .groups
        .iter()
        .zip(&adjoint.groups)
        .enumerate()
        .map(|(p, (x, l))| {
            let g = &params.groups[p];
            let c = &cost.groups[p];
            let v = u[p] + g.gamma;
            let infection = match form {
                AdjointForm::Coupled => shared,
                AdjointForm::Decoupled => params.beta * (l.a - l.s) * x.s,
            };
            Costate {
                s: z * c.quarantine * cost.isolation_shape(v)
                    + (l.a - l.s) * pressure
                    + (l.q - l.s) * v,
                q: 0.0,
                a: infection
                    + (l.i - l.a) * g.alpha * g.k
                    + (l.r - l.a) * (1.0 - g.alpha) * g.sigma,
                i: z * c.infected() + infection + (l.r - l.i) * g.sigma + (l.d - l.i) * g.mu,
                r: -z * c.recovery_profit,
                d: 0.0,
            }
        })
        .collect();
    AdjointState { groups }
}

/// Costate rates `d lambda / dt = -dH/dx` with full cross-group coupling.
pub fn adjoint_derivative(
    state: &SystemState,
    adjoint: &AdjointState,
    u: &[f64],
    params: &ModelParams,
    cost: &CostModel,
) -> AdjointState {
    adjoint_derivative_with(state, adjoint, u, params, cost, AdjointForm::Coupled)
}

pub fn adjoint_derivative_with(
    state: &SystemState,
    adjoint: &AdjointState,
    u: &[f64],
    params: &ModelParams,
    cost: &CostModel,
    form: AdjointForm,
) -> AdjointState {
    let grad = state_gradient(state, adjoint, u, params, cost, form);
    AdjointState::zeros(grad.groups.len()).scaled_add(-1.0, &grad)
}

/// `dH/du_p = S_p (Z ES_p h'(u_p + gamma_p) - phi_p)`.
pub fn control_slope(
    state: &SystemState,
    adjoint: &AdjointState,
    u: &[f64],
    p: usize,
    params: &ModelParams,
    cost: &CostModel,
) -> f64 {
    let x = &state.groups[p];
    if x.s == 0.0 {
        return 0.0;
    }
    let l = &adjoint.groups[p];
    let v = u[p] + params.groups[p].gamma;
    x.s * (cost.population * cost.groups[p].quarantine * cost.isolation_slope(v) - (l.s - l.q))
}

/// Costates at every node of a grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdjointTrajectory {
    pub grid: TimeGrid,
    pub states: Vec<AdjointState>,
}

impl AdjointTrajectory {
    /// Switching function of group `p` at every node.
    pub fn switching_series(&self, p: usize) -> Vec<f64> {
        self.states.iter().map(|l| l.groups[p].s - l.groups[p].q).collect()
    }
}

/// Cubic Hermite estimate of the state half-way through step `k`.
fn midpoint_state(
    left: &SystemState,
    right: &SystemState,
    u: &[f64],
    params: &ModelParams,
    h: f64,
) -> SystemState {
    let f_left = rates(left, u, params);
    let f_right = rates(right, u, params);
    let mean = left.scaled_add(1.0, right);
    let tangent = f_left.scaled_add(-1.0, &f_right);
    SystemState::zeros(left.n_groups())
        .scaled_add(0.5, &mean)
        .scaled_add(h / 8.0, &tangent)
}

/// RK4 for the costates from `T` down to `0` along a stored trajectory.
pub fn integrate_backward(
    trajectory: &Trajectory,
    schedule: &ControlSchedule,
    params: &ModelParams,
    cost: &CostModel,
    form: AdjointForm,
) -> Result<AdjointTrajectory> {
    let grid = trajectory.grid;
    if schedule.nodes() != trajectory.states.len() || trajectory.states.len() != grid.nodes() {
        return Err(Error::GridMismatch(format!(
            "schedule has {} nodes, trajectory has {}, grid has {}",
            schedule.nodes(),
            trajectory.states.len(),
            grid.nodes()
        )));
    }
    if cost.groups.len() != params.n_groups() {
        return Err(Error::InvalidInput(
            "cost model and parameters disagree on the number of groups".into(),
        ));
    }
    let h = grid.step;
    let mut states = vec![AdjointState::terminal(cost); grid.nodes()];
    for k in (0..grid.steps).rev() {
        let u = schedule.at(k);
        let right = &trajectory.states[k + 1];
        let left = &trajectory.states[k];
        let mid = midpoint_state(left, right, u, params, h);
        let lam = &states[k + 1];
        let g = |x: &SystemState, l: &AdjointState| state_gradient(x, l, u, params, cost, form);
        let k1 = g(right, lam);
        let k2 = g(&mid, &lam.scaled_add(h / 2.0, &k1));
        let k3 = g(&mid, &lam.scaled_add(h / 2.0, &k2));
        let k4 = g(left, &lam.scaled_add(h, &k3));
        let next = lam
            .scaled_add(h / 6.0, &k1)
            .scaled_add(h / 3.0, &k2)
            .scaled_add(h / 3.0, &k3)
            .scaled_add(h / 6.0, &k4);
        if !next.is_finite() {
            return Err(Error::Blowup {
                time: grid.time(k),
                detail: "non-finite costate".into(),
            });
        }
        states[k] = next;
    }
    Ok(AdjointTrajectory { grid, states })
}

/// Adjoint estimate of `dJ/du_p(t_k)` for every node and group.
///
/// Sample `k` is held over step `k`, so its sensitivity is the step-average of
/// `dH/du` times the step length. The last sample never acts and gets zero.
pub fn control_gradient(
    trajectory: &Trajectory,
    adjoint: &AdjointTrajectory,
    schedule: &ControlSchedule,
    params: &ModelParams,
    cost: &CostModel,
) -> Vec<Vec<f64>> {
    let h = trajectory.grid.step;
    let n = params.n_groups();
    let mut out = vec![vec![0.0; n]; trajectory.states.len()];
    for (k, row) in out.iter_mut().enumerate().take(trajectory.grid.steps) {
        let u = schedule.at(k);
        for (p, slot) in row.iter_mut().enumerate() {
            let left = control_slope(
                &trajectory.states[k],
                &adjoint.states[k],
                u,
                p,
                params,
                cost,
            );
            let right = control_slope(
                &trajectory.states[k + 1],
                &adjoint.states[k + 1],
                u,
                p,
                params,
                cost,
            );
            *slot = 0.5 * h * (left + right);
        }
    }
    out
}
