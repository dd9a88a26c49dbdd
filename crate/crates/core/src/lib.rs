//! Age-stratified SQAIRD epidemic model with optimal lockdown schedules.
//!
//! The population is split into groups (young, adult, old, or a single pooled
//! group), each with susceptible, quarantined, asymptomatic, infected,
//! recovered and dead compartments. A planner picks per-group lockdown rates
//! to minimize treatment, productivity and death costs; [`control::solve_fbsm`]
//! finds the schedule from Pontryagin's conditions by forward-backward sweep.

pub mod calibration;
pub mod chart;
pub mod config;
pub mod control;
pub mod costs;
pub mod dynamics;
mod error;
pub mod export;
pub mod scenarios;

pub use error::{Error, Result};
