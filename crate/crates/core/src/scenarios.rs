//! Uncontrolled and optimally controlled runs of a calibration, and their
//! comparison.

use serde::{Deserialize, Serialize};

use crate::calibration::Calibration;
use crate::control::{extract_structure, solve_fbsm, PolicyStructure, SolverConfig};
use crate::costs::{objective, CostModel};
use crate::dynamics::{
    integrate_forward, Compartments, ControlSchedule, GroupId, ModelParams, TimeGrid, Trajectory,
};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Peak {
    /// Maximum, in persons.
    pub value: f64,
    /// First time the maximum is attained (days).
    pub day: f64,
}

/// First maximum of `values` (fractions) scaled to persons.
pub fn first_peak(values: impl IntoIterator<Item = f64>, grid: &TimeGrid, population: f64) -> Peak {
    let (k, max) = values
        .into_iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |best, (k, v)| if v > best.1 { (k, v) } else { best });
    Peak {
        value: max * population,
        day: grid.time(k),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupSummary {
    pub id: GroupId,
    pub peak_a: Peak,
    pub peak_i: Peak,
    pub peak_d: Peak,
    /// Occupancies at the horizon, in persons.
    pub final_counts: Compartments,
    pub t0: f64,
    pub t1: f64,
}

/// Scalar description of a run; what gets written as JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportSummary {
    pub id: String,
    pub calibration: String,
    pub controlled: bool,
    pub horizon: f64,
    pub step: f64,
    pub population: f64,
    /// Aggregated cost `J`.
    pub objective: f64,
    /// Peak of total asymptomatic plus infected.
    pub peak_infectious: Peak,
    pub final_quarantined: f64,
    pub lockdown_end: f64,
    pub iterations: usize,
    pub groups: Vec<GroupSummary>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioReport {
    pub id: String,
    pub calibration: String,
    pub params: ModelParams,
    pub costs: CostModel,
    pub trajectory: Trajectory,
    pub schedule: ControlSchedule,
    pub objective: f64,
    pub structure: PolicyStructure,
    pub iterations: usize,
    pub history: Vec<f64>,
    pub controlled: bool,
}

impl ScenarioReport {
    pub fn population(&self) -> f64 {
        self.costs.population
    }

    pub fn peak_infectious(&self) -> Peak {
        let totals = self
            .trajectory
            .states
            .iter()
            .map(|x| x.groups.iter().map(|g| g.a + g.i).sum::<f64>());
        first_peak(totals, &self.trajectory.grid, self.population())
    }

    pub fn group_peaks(&self, p: usize) -> (Peak, Peak, Peak) {
        let grid = &self.trajectory.grid;
        let z = self.population();
        let series = |f: fn(&Compartments) -> f64| {
            first_peak(self.trajectory.states.iter().map(|x| f(&x.groups[p])), grid, z)
        };
        (series(|g| g.a), series(|g| g.i), series(|g| g.d))
    }

    /// Quarantined persons at the horizon, all groups.
    pub fn final_quarantined(&self) -> f64 {
        self.trajectory.last().groups.iter().map(|g| g.q).sum::<f64>() * self.population()
    }

    pub fn summary(&self) -> ReportSummary {
        let z = self.population();
        let groups = (0..self.params.n_groups())
            .map(|p| {
                let (peak_a, peak_i, peak_d) = self.group_peaks(p);
                let last = &self.trajectory.last().groups[p];
                let structure = &self.structure.groups[p];
                GroupSummary {
                    id: self.params.groups[p].id,
                    peak_a,
                    peak_i,
                    peak_d,
                    final_counts: Compartments::ZERO.scaled_add(z, last),
                    t0: structure.t0,
                    t1: structure.t1,
                }
            })
            .collect();
        ReportSummary {
            id: self.id.clone(),
            calibration: self.calibration.clone(),
            controlled: self.controlled,
            horizon: self.trajectory.grid.horizon,
            step: self.trajectory.grid.step,
            population: z,
            objective: self.objective,
            peak_infectious: self.peak_infectious(),
            final_quarantined: self.final_quarantined(),
            lockdown_end: self.structure.lockdown_end(),
            iterations: self.iterations,
            groups,
        }
    }
}

/// Laissez-faire run: `u = 0` throughout.
pub fn run_uncontrolled(calibration: &Calibration, grid: &TimeGrid) -> Result<ScenarioReport> {
    calibration.validate()?;
    let params = &calibration.params;
    let schedule = ControlSchedule::zeros(grid, params.n_groups());
    let trajectory = integrate_forward(&calibration.initial, &schedule, params, grid)?;
    let objective = objective(&trajectory, &schedule, &calibration.costs, params)?;
    let structure = extract_structure(&schedule, params, grid);
    Ok(ScenarioReport {
        id: format!("{}-uncontrolled", calibration.name),
        calibration: calibration.name.clone(),
        params: params.clone(),
        costs: calibration.costs.clone(),
        trajectory,
        schedule,
        objective,
        structure,
        iterations: 0,
        history: Vec::new(),
        controlled: false,
    })
}

/// Optimal lockdown by forward-backward sweep.
pub fn run_controlled(calibration: &Calibration, config: &SolverConfig) -> Result<ScenarioReport> {
    calibration.validate()?;
    let solved = solve_fbsm(&calibration.initial, &calibration.params, &calibration.costs, config)?;
    Ok(ScenarioReport {
        id: format!("{}-controlled", calibration.name),
        calibration: calibration.name.clone(),
        params: calibration.params.clone(),
        costs: calibration.costs.clone(),
        trajectory: solved.trajectory,
        schedule: solved.schedule,
        objective: solved.objective,
        structure: solved.structure,
        iterations: solved.iterations,
        history: solved.history,
        controlled: true,
    })
}

/// How run `b` differs from run `a`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairComparison {
    pub a: String,
    pub b: String,
    /// `J_b / J_a`.
    pub j_ratio: f64,
    /// `J_b - J_a`.
    pub j_difference: f64,
    /// Ratio of peak totals of asymptomatic plus infected, `b / a`.
    pub peak_ratio: f64,
    /// Peak day of `b` minus peak day of `a`.
    pub peak_day_shift: f64,
    /// Lockdown end of `b` minus that of `a`.
    pub lockdown_shift: f64,
    /// Quarantined share of the population at the horizon.
    pub quarantined_share_a: f64,
    pub quarantined_share_b: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub pairs: Vec<PairComparison>,
}

fn ratio(num: f64, den: f64) -> f64 {
    if num == den {
        1.0
    } else {
        num / den
    }
}

/// Compares every pair `(i, j)` with `i < j`.
pub fn compare(reports: &[ReportSummary]) -> Result<ComparisonReport> {
    if reports.len() < 2 {
        return Err(Error::InvalidInput("compare needs at least two reports".into()));
    }
    let mut pairs = Vec::new();
    for (i, a) in reports.iter().enumerate() {
        for b in &reports[i + 1..] {
            pairs.push(PairComparison {
                a: a.id.clone(),
                b: b.id.clone(),
                j_ratio: ratio(b.objective, a.objective),
                j_difference: b.objective - a.objective,
                peak_ratio: ratio(b.peak_infectious.value, a.peak_infectious.value),
                peak_day_shift: b.peak_infectious.day - a.peak_infectious.day,
                lockdown_shift: b.lockdown_end - a.lockdown_end,
                quarantined_share_a: a.final_quarantined / a.population,
                quarantined_share_b: b.final_quarantined / b.population,
            });
        }
    }
    Ok(ComparisonReport { pairs })
}
