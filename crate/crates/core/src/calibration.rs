//! Built-in calibrations for the Italian benchmark: a targeted experiment with
//! three age groups and a uniform experiment with the population pooled.
//!
//! Monetary values are daily euros per person (deaths: euros per death) and
//! are scaled by the population count `Z = 49,581,000`.

use serde::{Deserialize, Serialize};

use crate::costs::{CostModel, CostShape, GroupCosts};
use crate::dynamics::{Compartments, GroupId, GroupParams, ModelParams, SystemState};
use crate::error::{Error, Result};

pub const ITALY_POPULATION: f64 = 49_581_000.0;

/// Lockdown-rate bound used by the built-in calibrations (1/day).
pub const DEFAULT_LOCKDOWN_BOUND: f64 = 0.03;

/// Share of productivity lost by an isolated susceptible.
pub const ISOLATION_PRODUCTIVITY_LOSS: f64 = 0.7;

/// Daily GDP per worker.
pub const DAILY_INCOME: f64 = 192.07;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HospitalizationProfile {
    pub prob_hospitalization: f64,
    pub prob_critical_given_hospitalized: f64,
    pub daily_cost_ordinary: f64,
    pub daily_cost_critical: f64,
}

impl HospitalizationProfile {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("prob_hospitalization", self.prob_hospitalization),
            ("prob_critical_given_hospitalized", self.prob_critical_given_hospitalized),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::InvalidInput(format!("{name} must lie in [0,1], got {v}")));
            }
        }
        if !(self.daily_cost_ordinary >= 0.0 && self.daily_cost_critical >= 0.0) {
            return Err(Error::InvalidInput("hospital costs must be >= 0".into()));
        }
        Ok(())
    }
}

/// Expected daily treatment cost of one infected person.
pub fn treatment_cost(profile: &HospitalizationProfile) -> f64 {
    let critical = profile.prob_critical_given_hospitalized;
    profile.prob_hospitalization
        * (profile.daily_cost_critical * critical + profile.daily_cost_ordinary * (1.0 - critical))
}

/// Hospitalization data for young, adult and old groups.
pub fn hospitalization_profiles() -> [HospitalizationProfile; 3] {
    let profile = |h, c| HospitalizationProfile {
        prob_hospitalization: h,
        prob_critical_given_hospitalized: c,
        daily_cost_ordinary: 300.0,
        daily_cost_critical: 1500.0,
    };
    [profile(0.028, 0.005), profile(0.1, 0.2), profile(0.26, 0.5)]
}

/// Reported peak values of one group, in persons.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroupPeaks {
    pub max_i: f64,
    pub max_a: f64,
    pub max_d: f64,
}

/// Published figures a run can be compared against.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceTargets {
    pub j_uncontrolled: f64,
    pub j_controlled: f64,
    pub uncontrolled: Vec<GroupPeaks>,
    pub controlled: Vec<GroupPeaks>,
}

impl ReferenceTargets {
    pub fn validate(&self) -> Result<()> {
        let peaks = self.uncontrolled.iter().chain(&self.controlled);
        let all_positive = [self.j_uncontrolled, self.j_controlled]
            .into_iter()
            .chain(peaks.flat_map(|g| [g.max_i, g.max_a, g.max_d]))
            .all(|v| v > 0.0 && v.is_finite());
        if all_positive {
            Ok(())
        } else {
            Err(Error::InvalidInput("reference targets must be positive".into()))
        }
    }
}

/// Everything needed to run a scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub name: String,
    pub params: ModelParams,
    pub costs: CostModel,
    pub initial: SystemState,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub targets: Option<ReferenceTargets>,
}

impl Calibration {
    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        self.costs.validate()?;
        let n = self.params.n_groups();
        if self.costs.groups.len() != n || self.initial.n_groups() != n {
            return Err(Error::InvalidInput(format!(
                "calibration `{}` has inconsistent group counts",
                self.name
            )));
        }
        self.initial.validate(0.0)?;
        for (p, (x, g)) in self.initial.groups.iter().zip(&self.params.groups).enumerate() {
            if (x.total() - g.population_share).abs() > 1e-9 {
                return Err(Error::InvalidInput(format!(
                    "group {p} initial occupancy {} differs from its population share {}",
                    x.total(),
                    g.population_share
                )));
            }
        }
        if let Some(t) = &self.targets {
            t.validate()?;
        }
        Ok(())
    }

    /// Replaces every group's lockdown bound.
    pub fn with_lockdown_bound(mut self, u_max: f64) -> Self {
        for g in &mut self.params.groups {
            g.u_max = u_max;
        }
        self
    }

    /// Uses total lockdown, `u_max = 1 - gamma`, for every group.
    pub fn with_total_lockdown(mut self) -> Self {
        for g in &mut self.params.groups {
            g.u_max = 1.0 - g.gamma;
        }
        self
    }

    pub fn with_shape(mut self, shape: CostShape) -> Self {
        self.costs.shape = shape;
        self
    }
}

fn check_close(row: &str, actual: f64, expected: f64, tol: f64) -> Result<()> {
    if (actual - expected).abs() <= tol {
        Ok(())
    } else {
        Err(Error::Calibration {
            row: row.to_string(),
            detail: format!("got {actual}, expected {expected} (tolerance {tol})"),
        })
    }
}

/// Cross-checks the targeted calibration's cost rows against their sources.
pub fn audit_experiment1(calibration: &Calibration) -> Result<()> {
    const MERGED_TREATMENT: [f64; 3] = [200.64, 246.07, 283.94];
    for (p, (c, profile)) in calibration
        .costs
        .groups
        .iter()
        .zip(hospitalization_profiles())
        .enumerate()
    {
        check_close(
            &format!("treatment cost of group {p}"),
            c.treatment,
            treatment_cost(&profile),
            0.005,
        )?;
        check_close(
            &format!("infected cost of group {p}"),
            c.infected(),
            MERGED_TREATMENT[p],
            0.01,
        )?;
        check_close(
            &format!("quarantine cost of group {p}"),
            c.quarantine,
            ISOLATION_PRODUCTIVITY_LOSS * c.productivity,
            0.01,
        )?;
    }
    Ok(())
}

struct GroupRow {
    id: GroupId,
    s0: f64,
    i0: f64,
    sigma: f64,
    gamma: f64,
    mu: f64,
    alpha: f64,
    costs: GroupCosts,
}

fn assemble(name: &str, beta: f64, k: f64, rows: Vec<GroupRow>, targets: ReferenceTargets) -> Calibration {
    let params = ModelParams {
        beta,
        population: ITALY_POPULATION,
        groups: rows
            .iter()
            .map(|r| GroupParams {
                id: r.id,
                gamma: r.gamma,
                alpha: r.alpha,
                k,
                sigma: r.sigma,
                mu: r.mu,
                population_share: r.s0 + r.i0,
                u_max: DEFAULT_LOCKDOWN_BOUND,
            })
            .collect(),
    };
    let initial = SystemState::new(
        rows.iter()
            .map(|r| Compartments {
                s: r.s0,
                i: r.i0,
                ..Compartments::ZERO
            })
            .collect(),
    );
    let costs = CostModel {
        population: ITALY_POPULATION,
        shape: CostShape::Convex,
        concave_exponent: CostModel::DEFAULT_CONCAVE_EXPONENT,
        groups: rows.into_iter().map(|r| r.costs).collect(),
    };
    Calibration {
        name: name.to_string(),
        params,
        costs,
        initial,
        targets: Some(targets),
    }
}

fn peaks(i: f64, a: f64, d: f64) -> GroupPeaks {
    GroupPeaks {
        max_i: i,
        max_a: a,
        max_d: d,
    }
}

/// Three age groups with a targeted policy.
pub fn build_experiment1() -> Result<Calibration> {
    let costs = |treatment, productivity, quarantine, death| GroupCosts {
        treatment,
        productivity,
        quarantine,
        death,
        recovery_profit: 0.0,
    };
    let rows = vec![
        GroupRow {
            id: GroupId::Young,
            s0: 0.4446,
            i0: 0.0022,
            sigma: 0.2,
            gamma: 0.0,
            mu: 0.001,
            alpha: 0.5,
            costs: costs(8.57, 192.07, 134.45, 2_800_000.0),
        },
        GroupRow {
            id: GroupId::Adult,
            s0: 0.2709,
            i0: 0.0013,
            sigma: 0.066,
            gamma: 0.0,
            mu: 0.01,
            alpha: 0.66,
            costs: costs(54.00, 192.07, 134.45, 2_000_000.0),
        },
        GroupRow {
            id: GroupId::Old,
            s0: 0.2796,
            i0: 0.0014,
            sigma: 0.04,
            gamma: 0.1,
            mu: 0.06,
            alpha: 0.83,
            costs: costs(234.00, 49.94, 34.96, 273_000.0),
        },
    ];
    let targets = ReferenceTargets {
        j_uncontrolled: 3.5809e12,
        j_controlled: 2.0418e12,
        uncontrolled: vec![
            peaks(2_648_700.0, 6_549_700.0, 53_738.0),
            peaks(4_755_800.0, 4_775_000.0, 1_460_500.0),
            peaks(1_069_000.0, 982_260.0, 1_665_600.0),
        ],
        controlled: vec![
            peaks(1_262_100.0, 2_972_500.0, 30_750.0),
            peaks(2_435_100.0, 2_204_600.0, 831_560.0),
            peaks(566_020.0, 486_640.0, 957_180.0),
        ],
    };
    let calibration = assemble("exp1", 0.48, 0.1923, rows, targets);
    audit_experiment1(&calibration)?;
    calibration.validate()?;
    Ok(calibration)
}

/// The whole population as one group with a uniform policy.
pub fn build_experiment2() -> Result<Calibration> {
    let rows = vec![GroupRow {
        id: GroupId::Aggregate,
        s0: 0.9951,
        i0: 0.0049,
        sigma: 0.118,
        gamma: 0.028,
        mu: 0.02,
        alpha: 0.636,
        // only the sum of treatment and productivity loss is published
        costs: GroupCosts {
            treatment: 236.413,
            productivity: 0.0,
            quarantine: 106.493,
            death: 1_872_153.0,
            recovery_profit: 0.0,
        },
    }];
    let targets = ReferenceTargets {
        j_uncontrolled: 5.9475e12,
        j_controlled: 3.1905e12,
        uncontrolled: vec![peaks(6_574_100.0, 9_644_000.0, 3_156_800.0)],
        controlled: vec![peaks(3_175_100.0, 4_416_100.0, 1_693_400.0)],
    };
    let calibration = assemble("exp2", 0.48, 0.1923, rows, targets);
    calibration.validate()?;
    Ok(calibration)
}

/// Looks up a built-in calibration by name.
pub fn builtin(name: &str) -> Option<Result<Calibration>> {
    match name {
        "exp1" => Some(build_experiment1()),
        "exp2" => Some(build_experiment2()),
        _ => None,
    }
}
