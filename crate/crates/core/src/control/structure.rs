//! Switching structure of a lockdown schedule: full lockdown, an interior
//! phase, then no lockdown.

use serde::{Deserialize, Serialize};

use crate::dynamics::{ControlSchedule, ModelParams, TimeGrid};

/// Relative band around the bounds inside which a sample counts as saturated.
pub const PHASE_BAND: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Phase {
    Full,
    Interior,
    Zero,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupStructure {
    /// End of the initial full-lockdown run (0 if the schedule does not start there).
    pub t0: f64,
    /// Start of the trailing no-lockdown run (`T` if the schedule does not end there).
    pub t1: f64,
    pub phases: Vec<Phase>,
}

impl GroupStructure {
    /// True when the phases appear in the order Full, Interior, Zero, each
    /// possibly absent, with no phase re-entered.
    pub fn is_ordered(&self) -> bool {
        let rank = |ph: &Phase| match ph {
            Phase::Full => 0,
            Phase::Interior => 1,
            Phase::Zero => 2,
        };
        self.phases.windows(2).all(|w| rank(&w[0]) <= rank(&w[1]))
    }

    pub fn count(&self, phase: Phase) -> usize {
        self.phases.iter().filter(|&&p| p == phase).count()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyStructure {
    pub groups: Vec<GroupStructure>,
}

impl PolicyStructure {
    pub fn is_ordered(&self) -> bool {
        self.groups.iter().all(GroupStructure::is_ordered)
    }

    /// Latest `t1` over all groups.
    pub fn lockdown_end(&self) -> f64 {
        self.groups.iter().map(|g| g.t1).fold(0.0, f64::max)
    }
}

pub fn classify(u: f64, u_max: f64) -> Phase {
    let band = PHASE_BAND * u_max;
    if u > u_max - band {
        Phase::Full
    } else if u < band {
        Phase::Zero
    } else {
        Phase::Interior
    }
}

pub fn extract_structure(
    schedule: &ControlSchedule,
    params: &ModelParams,
    grid: &TimeGrid,
) -> PolicyStructure {
    let groups = params
        .groups
        .iter()
        .enumerate()
        .map(|(p, g)| {
            let phases: Vec<Phase> = schedule
                .group_series(p)
                .into_iter()
                .map(|u| classify(u, g.u_max))
                .collect();
            let leading_full = phases.iter().take_while(|&&ph| ph == Phase::Full).count();
            let t0 = if leading_full == 0 {
                0.0
            } else {
                grid.time(leading_full - 1)
            };
            let trailing_zero = phases
                .iter()
                .rev()
                .take_while(|&&ph| ph == Phase::Zero)
                .count();
            let t1 = if trailing_zero == 0 {
                grid.horizon
            } else {
                grid.time(phases.len() - trailing_zero)
            };
            GroupStructure { t0, t1, phases }
        })
        .collect();
    PolicyStructure { groups }
}
