//! Monetary cost of an epidemic trajectory under a lockdown schedule.
//!
//! The running cost per day is
//! `Z * sum_p [ (Ef_p + EI_p) I_p + ES_p h(u_p + gamma_p) S_p - ER_p R_p ]`
//! where `h(v) = v^2` for convex isolation costs and `h(v) = v^q` (`0 < q < 1`)
//! for concave ones. Deaths are charged once, at the horizon, as
//! `Z * sum_p ED_p D_p(T)`.

use serde::{Deserialize, Serialize};

use crate::dynamics::{ControlSchedule, GroupState, ModelParams, SystemState, Trajectory};
use crate::error::{ensure_finite, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CostShape {
    Convex,
    Concave,
}

impl std::str::FromStr for CostShape {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "convex" => Ok(CostShape::Convex),
            "concave" => Ok(CostShape::Concave),
            other => Err(Error::InvalidInput(format!("unknown cost shape `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupCosts {
    /// Daily treatment cost per infected person.
    pub treatment: f64,
    /// Daily productivity loss per infected person.
    pub productivity: f64,
    /// Daily productivity-loss coefficient of isolated susceptibles.
    pub quarantine: f64,
    /// Cost of one death.
    pub death: f64,
    /// Daily profit per recovered person; zero in every shipped calibration.
    #[serde(default)]
    pub recovery_profit: f64,
}

impl GroupCosts {
    /// Combined daily charge per infected person.
    pub fn infected(&self) -> f64 {
        self.treatment + self.productivity
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostModel {
    /// Population count that converts fractions to persons.
    pub population: f64,
    pub shape: CostShape,
    /// Exponent of the isolation cost in concave mode.
    pub concave_exponent: f64,
    pub groups: Vec<GroupCosts>,
}

impl CostModel {
    pub const DEFAULT_CONCAVE_EXPONENT: f64 = 0.5;

    pub fn validate(&self) -> Result<()> {
        ensure_finite(self.population, "cost population")?;
        if self.population <= 0.0 {
            return Err(Error::InvalidInput("cost population must be positive".into()));
        }
        if self.shape == CostShape::Concave
            && !(self.concave_exponent > 0.0 && self.concave_exponent < 1.0)
        {
            return Err(Error::InvalidInput(format!(
                "concave exponent must lie in (0,1), got {}",
                self.concave_exponent
            )));
        }
        for (p, g) in self.groups.iter().enumerate() {
            for (name, v) in [
                ("treatment", g.treatment),
                ("productivity", g.productivity),
                ("quarantine", g.quarantine),
                ("death", g.death),
                ("recovery_profit", g.recovery_profit),
            ] {
                ensure_finite(v, &format!("group {p} {name} cost"))?;
                if v < 0.0 {
                    return Err(Error::InvalidInput(format!(
                        "group {p} {name} cost must be >= 0, got {v}"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Isolation cost shape `h(v)` at total isolation rate `v = u + gamma`.
    pub fn isolation_shape(&self, v: f64) -> f64 {
        match self.shape {
            CostShape::Convex => v * v,
            CostShape::Concave => v.max(0.0).powf(self.concave_exponent),
        }
    }

    /// `h'(v)`; infinite at `v = 0` in concave mode.
    pub fn isolation_slope(&self, v: f64) -> f64 {
        match self.shape {
            CostShape::Convex => 2.0 * v,
            CostShape::Concave => {
                let q = self.concave_exponent;
                if v <= 0.0 {
                    f64::INFINITY
                } else {
                    q * v.powf(q - 1.0)
                }
            }
        }
    }
}

/// Running cost contributed by a single group (currency/day).
pub fn group_running_cost(
    x: &GroupState,
    u: f64,
    p: usize,
    cost: &CostModel,
    params: &ModelParams,
) -> f64 {
    let c = &cost.groups[p];
    let v = u + params.groups[p].gamma;
    cost.population
        * (c.infected() * x.i + c.quarantine * cost.isolation_shape(v) * x.s
            - c.recovery_profit * x.r)
}

/// Running cost integrand summed over groups (currency/day).
pub fn running_cost(
    state: &SystemState,
    u: &[f64],
    cost: &CostModel,
    params: &ModelParams,
) -> f64 {
    state
        .groups
        .iter()
        .enumerate()
        .map(|(p, x)| group_running_cost(x, u[p], p, cost, params))
        .sum()
}

/// Death cost charged at the horizon (currency).
pub fn terminal_cost(final_state: &SystemState, cost: &CostModel) -> f64 {
    final_state
        .groups
        .iter()
        .zip(&cost.groups)
        .map(|(x, c)| cost.population * c.death * x.d)
        .sum()
}

fn check_shapes(
    trajectory: &Trajectory,
    schedule: &ControlSchedule,
    cost: &CostModel,
    params: &ModelParams,
) -> Result<()> {
    if schedule.nodes() != trajectory.states.len() {
        return Err(Error::GridMismatch(format!(
            "schedule has {} nodes, trajectory has {}",
            schedule.nodes(),
            trajectory.states.len()
        )));
    }
    if cost.groups.len() != params.n_groups() || trajectory.n_groups() != params.n_groups() {
        return Err(Error::InvalidInput(
            "cost model, trajectory and parameters disagree on the number of groups".into(),
        ));
    }
    Ok(())
}

/// Objective `J` split by group: `J_p` for each `p`, summing to [`objective`].
///
/// The running cost is integrated by the trapezoidal rule on each step with the
/// step's held control, i.e. `h/2 * (L(x_k, u_k) + L(x_{k+1}, u_k))`.
pub fn objective_by_group(
    trajectory: &Trajectory,
    schedule: &ControlSchedule,
    cost: &CostModel,
    params: &ModelParams,
) -> Result<Vec<f64>> {
    check_shapes(trajectory, schedule, cost, params)?;
    let h = trajectory.grid.step;
    let mut totals: Vec<f64> = trajectory
        .last()
        .groups
        .iter()
        .zip(&cost.groups)
        .map(|(x, c)| cost.population * c.death * x.d)
        .collect();
    for (k, pair) in trajectory.states.windows(2).enumerate() {
        let u = schedule.at(k);
        for (p, total) in totals.iter_mut().enumerate() {
            let left = group_running_cost(&pair[0].groups[p], u[p], p, cost, params);
            let right = group_running_cost(&pair[1].groups[p], u[p], p, cost, params);
            *total += 0.5 * h * (left + right);
        }
    }
    Ok(totals)
}

/// Aggregated cost `J` of a trajectory/schedule pair (currency).
pub fn objective(
    trajectory: &Trajectory,
    schedule: &ControlSchedule,
    cost: &CostModel,
    params: &ModelParams,
) -> Result<f64> {
    Ok(objective_by_group(trajectory, schedule, cost, params)?
        .iter()
        .sum())
}

/// Cost accrued up to each node: integrated running cost plus deaths so far.
///
/// The last entry equals [`objective`].
pub fn cumulative_cost(
    trajectory: &Trajectory,
    schedule: &ControlSchedule,
    cost: &CostModel,
    params: &ModelParams,
) -> Result<Vec<f64>> {
    check_shapes(trajectory, schedule, cost, params)?;
    let h = trajectory.grid.step;
    let mut running = 0.0;
    let mut out = Vec::with_capacity(trajectory.states.len());
    out.push(terminal_cost(trajectory.initial(), cost));
    for (k, pair) in trajectory.states.windows(2).enumerate() {
        let u = schedule.at(k);
        running += 0.5
            * h
            * (running_cost(&pair[0], u, cost, params) + running_cost(&pair[1], u, cost, params));
        out.push(running + terminal_cost(&pair[1], cost));
    }
    Ok(out)
}
