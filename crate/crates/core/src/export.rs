//! Time-series CSV and JSON summaries.
//!
//! The CSV header is `t,group,S,Q,A,I,R,D,u`, with one row per (node, group).
//! Numbers use the shortest decimal that parses back to the same `f64`.

use std::fmt::Write as _;
use std::path::Path;

use crate::dynamics::{Compartments, ControlSchedule, GroupId, SystemState};
use crate::error::{Error, Result};
use crate::scenarios::{ComparisonReport, ReportSummary, ScenarioReport};

pub const CSV_HEADER: &str = "t,group,S,Q,A,I,R,D,u";

pub fn timeseries_csv(report: &ScenarioReport) -> String {
    let mut out = String::with_capacity(64 * report.trajectory.states.len());
    out.push_str(CSV_HEADER);
    out.push('\n');
    let grid = &report.trajectory.grid;
    for (k, state) in report.trajectory.states.iter().enumerate() {
        let t = grid.time(k);
        let u = report.schedule.at(k);
        for (p, x) in state.groups.iter().enumerate() {
            let _ = write!(out, "{t},{}", report.params.groups[p].id.label());
            for v in x.to_array() {
                let _ = write!(out, ",{v}");
            }
            let _ = writeln!(out, ",{}", u[p]);
        }
    }
    out
}

pub fn write_timeseries_csv(report: &ScenarioReport, path: &Path) -> Result<()> {
    std::fs::write(path, timeseries_csv(report))?;
    Ok(())
}

/// Contents of a time-series CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct ParsedTimeseries {
    pub times: Vec<f64>,
    pub groups: Vec<GroupId>,
    pub states: Vec<SystemState>,
    pub schedule: ControlSchedule,
}

fn parse_field(field: &str, line: usize) -> Result<f64> {
    field
        .parse::<f64>()
        .map_err(|_| Error::Config(format!("line {line}: `{field}` is not a number")))
}

pub fn parse_timeseries_csv(text: &str) -> Result<ParsedTimeseries> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, header)) if header == CSV_HEADER => {}
        _ => return Err(Error::Config("missing time-series header".into())),
    }
    let mut times: Vec<f64> = Vec::new();
    let mut groups: Vec<GroupId> = Vec::new();
    let mut states: Vec<SystemState> = Vec::new();
    let mut controls: Vec<Vec<f64>> = Vec::new();
    for (n, line) in lines {
        let n = n + 1;
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 9 {
            return Err(Error::Config(format!("line {n}: expected 9 fields")));
        }
        let t = parse_field(fields[0], n)?;
        let id = GroupId::from_label(fields[1])
            .ok_or_else(|| Error::Config(format!("line {n}: unknown group `{}`", fields[1])))?;
        let mut values = [0.0; 6];
        for (slot, field) in values.iter_mut().zip(&fields[2..8]) {
            *slot = parse_field(field, n)?;
        }
        let u = parse_field(fields[8], n)?;
        if times.last() != Some(&t) {
            times.push(t);
            states.push(SystemState::new(Vec::new()));
            controls.push(Vec::new());
        }
        let slot = states.len() - 1;
        if slot == 0 {
            groups.push(id);
        } else if groups.get(states[slot].groups.len()) != Some(&id) {
            return Err(Error::Config(format!("line {n}: group order changed")));
        }
        states[slot].groups.push(Compartments::from_array(values));
        controls[slot].push(u);
    }
    Ok(ParsedTimeseries {
        times,
        groups,
        states,
        schedule: ControlSchedule::from_nodes(controls)?,
    })
}

fn write_json<T: serde::Serialize>(value: &T, path: &Path) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::Config(e.to_string()))?;
    std::fs::write(path, text + "\n")?;
    Ok(())
}

pub fn write_summary_json(summary: &ReportSummary, path: &Path) -> Result<()> {
    write_json(summary, path)
}

pub fn write_comparison_json(report: &ComparisonReport, path: &Path) -> Result<()> {
    write_json(report, path)
}

pub fn read_summary_json(path: &Path) -> Result<ReportSummary> {
    let text = std::fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

/// Money in the `2.0418e12` style: scientific, five significant digits.
pub fn format_money(value: f64) -> String {
    format!("{value:.4e}")
}
