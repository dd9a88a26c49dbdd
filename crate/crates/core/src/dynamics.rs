//! SQAIRD state, model parameters and the forward integrator.
//!
//! Each age group carries six compartments (susceptible, quarantined,
//! asymptomatic, infected, recovered, dead) measured as fractions of the whole
//! population. Groups interact only through the total number of asymptomatic
//! and infected individuals, which drives new infections in every group.

use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, Error, Result};

/// Undershoot below zero that is treated as rounding and clamped away.
pub const CLAMP_TOLERANCE: f64 = 1e-12;
/// Compartments leaving `[-BLOWUP_MARGIN, 1 + BLOWUP_MARGIN]` abort integration.
pub const BLOWUP_MARGIN: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GroupId {
    Young,
    Adult,
    Old,
    /// The whole population treated as one group (uniform policy).
    Aggregate,
}

impl GroupId {
    pub fn label(self) -> &'static str {
        match self {
            GroupId::Young => "young",
            GroupId::Adult => "adult",
            GroupId::Old => "old",
            GroupId::Aggregate => "all",
        }
    }

    pub fn from_label(label: &str) -> Option<Self> {
        match label {
            "young" => Some(GroupId::Young),
            "adult" => Some(GroupId::Adult),
            "old" => Some(GroupId::Old),
            "all" | "aggregate" => Some(GroupId::Aggregate),
            _ => None,
        }
    }
}

/// Six per-group quantities in SQAIRD order.
///
/// Used for occupancies, their time derivatives and the matching costates.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Compartments {
    pub s: f64,
    pub q: f64,
    pub a: f64,
    pub i: f64,
    pub r: f64,
    pub d: f64,
}

/// Occupancy of one age group.
pub type GroupState = Compartments;

impl Compartments {
    pub const ZERO: Compartments = Compartments {
        s: 0.0,
        q: 0.0,
        a: 0.0,
        i: 0.0,
        r: 0.0,
        d: 0.0,
    };

    pub const LABELS: [&'static str; 6] = ["S", "Q", "A", "I", "R", "D"];

    pub fn from_array(v: [f64; 6]) -> Self {
        Compartments {
            s: v[0],
            q: v[1],
            a: v[2],
            i: v[3],
            r: v[4],
            d: v[5],
        }
    }

    pub fn to_array(&self) -> [f64; 6] {
        [self.s, self.q, self.a, self.i, self.r, self.d]
    }

    pub fn total(&self) -> f64 {
        self.s + self.q + self.a + self.i + self.r + self.d
    }

    /// `self + k * other`, component-wise.
    pub fn scaled_add(&self, k: f64, other: &Compartments) -> Compartments {
        let (x, y) = (self.to_array(), other.to_array());
        Compartments::from_array(std::array::from_fn(|j| x[j] + k * y[j]))
    }

    pub fn dot(&self, other: &Compartments) -> f64 {
        self.to_array()
            .iter()
            .zip(other.to_array())
            .map(|(x, y)| x * y)
            .sum()
    }

    pub fn is_finite(&self) -> bool {
        self.to_array().iter().all(|v| v.is_finite())
    }
}

/// Occupancies of all groups at one instant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemState {
    pub groups: Vec<GroupState>,
}

impl SystemState {
    pub fn new(groups: Vec<GroupState>) -> Self {
        SystemState { groups }
    }

    pub fn zeros(n_groups: usize) -> Self {
        SystemState {
            groups: vec![Compartments::ZERO; n_groups],
        }
    }

    pub fn n_groups(&self) -> usize {
        self.groups.len()
    }

    /// Sum of every compartment of every group.
    pub fn total(&self) -> f64 {
        self.groups.iter().map(Compartments::total).sum()
    }

    pub fn scaled_add(&self, k: f64, other: &SystemState) -> SystemState {
        SystemState {
            groups: self
                .groups
                .iter()
                .zip(&other.groups)
                .map(|(x, y)| x.scaled_add(k, y))
                .collect(),
        }
    }

    pub fn dot(&self, other: &SystemState) -> f64 {
        self.groups
            .iter()
            .zip(&other.groups)
            .map(|(x, y)| x.dot(y))
            .sum()
    }

    /// Checks finiteness and that no compartment is below `-tol`.
    pub fn validate(&self, tol: f64) -> Result<()> {
        for (p, g) in self.groups.iter().enumerate() {
            for (label, v) in Compartments::LABELS.iter().zip(g.to_array()) {
                ensure_finite(v, &format!("group {p} compartment {label}"))?;
                if v < -tol {
                    return Err(Error::InvalidInput(format!(
                        "group {p} compartment {label} is negative ({v:e})"
                    )));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupParams {
    pub id: GroupId,
    /// Voluntary self-quarantine rate (1/day).
    pub gamma: f64,
    /// Probability of developing symptoms once infected.
    pub alpha: f64,
    /// Asymptomatic-to-infected transition speed (1/day).
    pub k: f64,
    /// Recovery rate (1/day).
    pub sigma: f64,
    /// Death rate of the infected (1/day).
    pub mu: f64,
    /// Share of the total population belonging to this group.
    pub population_share: f64,
    /// Largest admissible lockdown rate (1/day).
    pub u_max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    /// Shared transmission rate (1/day).
    pub beta: f64,
    /// Absolute population count used to scale monetary quantities.
    pub population: f64,
    pub groups: Vec<GroupParams>,
}

impl ModelParams {
    pub fn n_groups(&self) -> usize {
        self.groups.len()
    }

    pub fn u_max(&self) -> Vec<f64> {
        self.groups.iter().map(|g| g.u_max).collect()
    }

    pub fn validate(&self) -> Result<()> {
        if self.groups.is_empty() {
            return Err(Error::InvalidInput("model has no groups".into()));
        }
        ensure_finite(self.beta, "beta")?;
        ensure_finite(self.population, "population")?;
        if self.beta < 0.0 {
            return Err(Error::InvalidInput(format!("beta must be >= 0, got {}", self.beta)));
        }
        if self.population <= 0.0 {
            return Err(Error::InvalidInput("population must be positive".into()));
        }
        let mut share = 0.0;
        for (p, g) in self.groups.iter().enumerate() {
            for (name, v) in [
                ("gamma", g.gamma),
                ("k", g.k),
                ("sigma", g.sigma),
                ("mu", g.mu),
                ("population_share", g.population_share),
            ] {
                ensure_finite(v, &format!("group {p} {name}"))?;
                if v < 0.0 {
                    return Err(Error::InvalidInput(format!(
                        "group {p} {name} must be >= 0, got {v}"
                    )));
                }
            }
            if !(g.alpha > 0.0 && g.alpha < 1.0) {
                return Err(Error::InvalidInput(format!(
                    "group {p} alpha must lie in (0,1), got {}",
                    g.alpha
                )));
            }
            if !(g.u_max > 0.0 && g.u_max.is_finite()) {
                return Err(Error::InvalidInput(format!(
                    "group {p} u_max must be positive, got {}",
                    g.u_max
                )));
            }
            share += g.population_share;
        }
        if (share - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidInput(format!(
                "population shares sum to {share}, expected 1"
            )));
        }
        Ok(())
    }
}

/// Uniform grid `t_k = k * step`, `k = 0..=steps`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    pub horizon: f64,
    pub step: f64,
    pub steps: usize,
}

impl TimeGrid {
    pub const DEFAULT_HORIZON: f64 = 365.0;
    pub const DEFAULT_STEP: f64 = 0.1;

    /// Builds a grid whose step divides the horizon exactly.
    pub fn new(horizon: f64, step: f64) -> Result<Self> {
        ensure_finite(horizon, "horizon")?;
        ensure_finite(step, "step")?;
        if step <= 0.0 {
            return Err(Error::InvalidInput(format!("step must be > 0, got {step}")));
        }
        if horizon < 0.0 {
            return Err(Error::InvalidInput(format!("horizon must be >= 0, got {horizon}")));
        }
        let steps = (horizon / step).round();
        if (steps * step - horizon).abs() > 1e-9 * horizon.max(1.0) {
            return Err(Error::InvalidInput(format!(
                "step {step} does not divide horizon {horizon}"
            )));
        }
        Ok(TimeGrid {
            horizon,
            step,
            steps: steps as usize,
        })
    }

    pub fn nodes(&self) -> usize {
        self.steps + 1
    }

    pub fn time(&self, k: usize) -> f64 {
        if k == self.steps {
            self.horizon
        } else {
            k as f64 * self.step
        }
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.nodes()).map(|k| self.time(k))
    }
}

impl Default for TimeGrid {
    fn default() -> Self {
        TimeGrid::new(Self::DEFAULT_HORIZON, Self::DEFAULT_STEP).expect("default grid is valid")
    }
}

/// Lockdown rates sampled on the grid nodes, node-major.
///
/// Sample `k` is held constant over `[t_k, t_{k+1})`; the final sample only
/// matters to consumers that evaluate the control at `t = T`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControlSchedule {
    values: Vec<Vec<f64>>,
}

impl ControlSchedule {
    pub fn from_nodes(values: Vec<Vec<f64>>) -> Result<Self> {
        let width = values.first().map_or(0, Vec::len);
        if values.iter().any(|row| row.len() != width) {
            return Err(Error::InvalidInput("ragged control schedule".into()));
        }
        Ok(ControlSchedule { values })
    }

    pub fn zeros(grid: &TimeGrid, n_groups: usize) -> Self {
        ControlSchedule::constant(grid, &vec![0.0; n_groups])
    }

    pub fn constant(grid: &TimeGrid, u: &[f64]) -> Self {
        ControlSchedule {
            values: vec![u.to_vec(); grid.nodes()],
        }
    }

    pub fn nodes(&self) -> usize {
        self.values.len()
    }

    pub fn n_groups(&self) -> usize {
        self.values.first().map_or(0, Vec::len)
    }

    pub fn at(&self, k: usize) -> &[f64] {
        &self.values[k]
    }

    pub fn at_mut(&mut self, k: usize) -> &mut [f64] {
        &mut self.values[k]
    }

    pub fn group_series(&self, p: usize) -> Vec<f64> {
        self.values.iter().map(|row| row[p]).collect()
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.values
    }

    /// Largest absolute difference between two schedules of equal shape.
    pub fn sup_distance(&self, other: &ControlSchedule) -> f64 {
        self.values
            .iter()
            .flatten()
            .zip(other.values.iter().flatten())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    pub fn validate(&self, params: &ModelParams, grid: &TimeGrid) -> Result<()> {
        if self.nodes() != grid.nodes() {
            return Err(Error::GridMismatch(format!(
                "schedule has {} nodes, grid has {}",
                self.nodes(),
                grid.nodes()
            )));
        }
        if self.n_groups() != params.n_groups() {
            return Err(Error::InvalidInput(format!(
                "schedule has {} groups, model has {}",
                self.n_groups(),
                params.n_groups()
            )));
        }
        for (k, row) in self.values.iter().enumerate() {
            check_controls(row, params).map_err(|e| match e {
                Error::InvalidInput(msg) => Error::InvalidInput(format!("node {k}: {msg}")),
                other => other,
            })?;
        }
        Ok(())
    }
}

fn check_controls(u: &[f64], params: &ModelParams) -> Result<()> {
    if u.len() != params.n_groups() {
        return Err(Error::InvalidInput(format!(
            "expected {} controls, got {}",
            params.n_groups(),
            u.len()
        )));
    }
    for (p, (&v, g)) in u.iter().zip(&params.groups).enumerate() {
        ensure_finite(v, &format!("control of group {p}"))?;
        if v < 0.0 || v > g.u_max * (1.0 + 1e-12) {
            return Err(Error::InvalidInput(format!(
                "control of group {p} is {v}, outside [0, {}]",
                g.u_max
            )));
        }
    }
    Ok(())
}

/// States at every node of a grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub grid: TimeGrid,
    pub states: Vec<SystemState>,
}

impl Trajectory {
    pub fn initial(&self) -> &SystemState {
        &self.states[0]
    }

    pub fn last(&self) -> &SystemState {
        self.states.last().expect("trajectory is never empty")
    }

    pub fn n_groups(&self) -> usize {
        self.states[0].n_groups()
    }
}

/// `(A_tot, I_tot)`: asymptomatic and infected summed over all groups.
pub fn total_infectious(state: &SystemState) -> (f64, f64) {
    state
        .groups
        .iter()
        .fold((0.0, 0.0), |(a, i), g| (a + g.a, i + g.i))
}

/// Right-hand side of the SQAIRD system without input validation.
pub(crate) fn rates(state: &SystemState, u: &[f64], params: &ModelParams) -> SystemState {
    let (a_tot, i_tot) = total_infectious(state);
    let pressure = params.beta * (a_tot + i_tot);
    let groups = state
        .groups
        .iter()
        .zip(&params.groups)
        .zip(u)
        .map(|((x, g), &u)| {
            let infection = pressure * x.s;
            let isolation = (u + g.gamma) * x.s;
            let onset = g.alpha * g.k * x.a;
            let silent_recovery = (1.0 - g.alpha) * g.sigma * x.a;
            Compartments {
                s: -infection - isolation,
                q: isolation,
                a: infection - onset - silent_recovery,
                i: onset - (g.sigma + g.mu) * x.i,
                r: g.sigma * x.i + silent_recovery,
                d: g.mu * x.i,
            }
        })
        .collect();
    SystemState { groups }
}

/// Time derivative of every compartment under controls `u` (one per group).
pub fn derivative(state: &SystemState, u: &[f64], params: &ModelParams) -> Result<SystemState> {
    if state.n_groups() != params.n_groups() {
        return Err(Error::InvalidInput(format!(
            "state has {} groups, model has {}",
            state.n_groups(),
            params.n_groups()
        )));
    }
    state.validate(CLAMP_TOLERANCE)?;
    check_controls(u, params)?;
    ensure_finite(params.beta, "beta")?;
    Ok(rates(state, u, params))
}

fn rk4_step(state: &SystemState, u: &[f64], params: &ModelParams, h: f64) -> SystemState {
    let k1 = rates(state, u, params);
    let k2 = rates(&state.scaled_add(h / 2.0, &k1), u, params);
    let k3 = rates(&state.scaled_add(h / 2.0, &k2), u, params);
    let k4 = rates(&state.scaled_add(h, &k3), u, params);
    let mut next = state.clone();
    for (p, x) in next.groups.iter_mut().enumerate() {
        let (a, b, c, d) = (
            k1.groups[p].to_array(),
            k2.groups[p].to_array(),
            k3.groups[p].to_array(),
            k4.groups[p].to_array(),
        );
        let cur = x.to_array();
        *x = Compartments::from_array(std::array::from_fn(|j| {
            cur[j] + h / 6.0 * (a[j] + 2.0 * b[j] + 2.0 * c[j] + d[j])
        }));
    }
    next
}

fn settle(state: &mut SystemState, time: f64) -> Result<()> {
    for (p, g) in state.groups.iter_mut().enumerate() {
        let mut values = g.to_array();
        for (label, v) in Compartments::LABELS.iter().zip(values.iter_mut()) {
            if !v.is_finite() || *v > 1.0 + BLOWUP_MARGIN || *v < -BLOWUP_MARGIN {
                return Err(Error::Blowup {
                    time,
                    detail: format!("group {p} compartment {label} = {v:e}"),
                });
            }
            if *v < 0.0 {
                if -*v < CLAMP_TOLERANCE {
                    *v = 0.0;
                } else {
                    return Err(Error::Blowup {
                        time,
                        detail: format!("group {p} compartment {label} undershoots to {v:e}"),
                    });
                }
            }
        }
        *g = Compartments::from_array(values);
    }
    Ok(())
}

/// Fixed-step RK4 with the control held constant over each step.
pub fn integrate_forward(
    initial: &SystemState,
    schedule: &ControlSchedule,
    params: &ModelParams,
    grid: &TimeGrid,
) -> Result<Trajectory> {
    params.validate()?;
    if initial.n_groups() != params.n_groups() {
        return Err(Error::InvalidInput(format!(
            "initial state has {} groups, model has {}",
            initial.n_groups(),
            params.n_groups()
        )));
    }
    initial.validate(CLAMP_TOLERANCE)?;
    schedule.validate(params, grid)?;

    let mut states = Vec::with_capacity(grid.nodes());
    states.push(initial.clone());
    for k in 0..grid.steps {
        let mut next = rk4_step(&states[k], schedule.at(k), params, grid.step);
        settle(&mut next, grid.time(k + 1))?;
        states.push(next);
    }
    Ok(Trajectory { grid: *grid, states })
}
