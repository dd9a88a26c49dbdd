//! Static SVG chart of a scenario report.
//!
//! Top row: one panel per group with its six compartment curves. Bottom row:
//! the lockdown schedule of every group and the cumulative cost. Output is a
//! pure function of the report, so identical reports give identical bytes.

use std::fmt::Write as _;
use std::path::Path;

use crate::costs::cumulative_cost;
use crate::dynamics::Compartments;
use crate::error::Result;
use crate::export::format_money;
use crate::scenarios::ScenarioReport;

pub const WIDTH: f64 = 960.0;
pub const HEIGHT: f64 = 540.0;

/// Upper bound on vertices per curve; longer series are strided.
const MAX_POINTS: usize = 480;

const COMPARTMENT_COLORS: [&str; 6] = ["#1f77b4", "#9467bd", "#ff7f0e", "#d62728", "#2ca02c", "#333333"];
const GROUP_COLORS: [&str; 4] = ["#1f77b4", "#ff7f0e", "#2ca02c", "#8c564b"];

/// Plot area in SVG coordinates plus the data ranges mapped onto it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Panel {
    pub left: f64,
    pub top: f64,
    pub width: f64,
    pub height: f64,
    pub x_max: f64,
    pub y_max: f64,
}

impl Panel {
    pub fn x(&self, t: f64) -> f64 {
        let span = if self.x_max > 0.0 { self.x_max } else { 1.0 };
        self.left + self.width * t / span
    }

    pub fn y(&self, v: f64) -> f64 {
        let span = if self.y_max > 0.0 { self.y_max } else { 1.0 };
        self.top + self.height * (1.0 - v / span)
    }

    /// Inverse of [`Panel::y`].
    pub fn value_at(&self, y: f64) -> f64 {
        let span = if self.y_max > 0.0 { self.y_max } else { 1.0 };
        (1.0 - (y - self.top) / self.height) * span
    }

    pub fn baseline(&self) -> f64 {
        self.top + self.height
    }
}

/// Panels used for a report with `n_groups` groups, in drawing order: group
/// panels, then control, then cumulative cost.
pub fn layout(report: &ScenarioReport) -> Vec<Panel> {
    let n = report.params.n_groups().max(1);
    let horizon = report.trajectory.grid.horizon;
    let margin = 40.0;
    let top_h = 200.0;
    let cell_w = (WIDTH - margin) / n as f64;
    let mut panels: Vec<Panel> = report
        .params
        .groups
        .iter()
        .enumerate()
        .map(|(p, g)| Panel {
            left: margin + p as f64 * cell_w,
            top: 40.0,
            width: cell_w - margin,
            height: top_h,
            x_max: horizon,
            y_max: g.population_share,
        })
        .collect();
    let bottom_top = 40.0 + top_h + 70.0;
    let half = (WIDTH - margin) / 2.0;
    let u_max = report.params.groups.iter().map(|g| g.u_max).fold(0.0, f64::max);
    panels.push(Panel {
        left: margin,
        top: bottom_top,
        width: half - margin,
        height: 180.0,
        x_max: horizon,
        y_max: u_max,
    });
    panels.push(Panel {
        left: margin + half,
        top: bottom_top,
        width: half - margin,
        height: 180.0,
        x_max: horizon,
        y_max: report.objective.max(0.0),
    });
    panels
}

fn stride(n: usize) -> usize {
    n.div_ceil(MAX_POINTS).max(1)
}

fn sampled(n: usize) -> Vec<usize> {
    if n == 0 {
        return Vec::new();
    }
    let mut idx: Vec<usize> = (0..n).step_by(stride(n)).collect();
    if idx.last() != Some(&(n - 1)) {
        idx.push(n - 1);
    }
    idx
}

fn path(out: &mut String, id: &str, color: &str, points: impl Iterator<Item = (f64, f64)>) {
    let mut d = String::new();
    for (j, (x, y)) in points.enumerate() {
        let _ = write!(d, "{}{x:.2} {y:.2}", if j == 0 { "M" } else { " L" });
    }
    if d.is_empty() {
        return;
    }
    let _ = writeln!(
        out,
        r#"<path id="{id}" d="{d}" fill="none" stroke="{color}" stroke-width="1.5"/>"#
    );
}

fn axes(out: &mut String, panel: &Panel, title: &str, y_label: &str) {
    let (x0, y0) = (panel.left, panel.baseline());
    let _ = writeln!(
        out,
        r##"<g class="axes"><line x1="{x0:.2}" y1="{y0:.2}" x2="{:.2}" y2="{y0:.2}" stroke="#000"/><line x1="{x0:.2}" y1="{y0:.2}" x2="{x0:.2}" y2="{:.2}" stroke="#000"/>"##,
        panel.left + panel.width,
        panel.top
    );
    let _ = writeln!(
        out,
        r#"<text x="{:.2}" y="{:.2}" font-size="12" text-anchor="middle">{title}</text>"#,
        panel.left + panel.width / 2.0,
        panel.top - 8.0
    );
    let _ = writeln!(
        out,
        r#"<text x="{x0:.2}" y="{:.2}" font-size="10">0</text><text x="{:.2}" y="{:.2}" font-size="10" text-anchor="end">{} d</text>"#,
        y0 + 14.0,
        panel.left + panel.width,
        y0 + 14.0,
        panel.x_max
    );
    let _ = writeln!(
        out,
        r#"<text x="{:.2}" y="{:.2}" font-size="10">{y_label}</text></g>"#,
        x0 + 4.0,
        panel.top + 10.0
    );
}

pub fn render_chart(report: &ScenarioReport) -> Result<String> {
    let panels = layout(report);
    let n = report.params.n_groups();
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {WIDTH} {HEIGHT}" width="{WIDTH}" height="{HEIGHT}">"#
    );
    let _ = writeln!(out, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(
        out,
        r#"<text x="{}" y="20" font-size="14" text-anchor="middle">{} (J = {})</text>"#,
        WIDTH / 2.0,
        report.id,
        format_money(report.objective)
    );

    let states = &report.trajectory.states;
    let grid = &report.trajectory.grid;
    let drawable = states.len() > 1;
    let idx = sampled(states.len());

    for (p, panel) in panels.iter().take(n).enumerate() {
        let label = report.params.groups[p].id.label();
        axes(&mut out, panel, label, &format!("{:.4}", panel.y_max));
        if !drawable {
            continue;
        }
        for (c, name) in Compartments::LABELS.iter().enumerate() {
            path(
                &mut out,
                &format!("{name}-{label}"),
                COMPARTMENT_COLORS[c],
                idx.iter().map(|&k| {
                    (panel.x(grid.time(k)), panel.y(states[k].groups[p].to_array()[c]))
                }),
            );
        }
    }

    let control = &panels[n];
    axes(&mut out, control, "lockdown rate u", &format!("{}", control.y_max));
    let cost = &panels[n + 1];
    axes(&mut out, cost, "cumulative cost", &format_money(cost.y_max));
    if drawable {
        for p in 0..n {
            let label = report.params.groups[p].id.label();
            path(
                &mut out,
                &format!("control-{label}"),
                GROUP_COLORS[p % GROUP_COLORS.len()],
                idx.iter()
                    .map(|&k| (control.x(grid.time(k)), control.y(report.schedule.at(k)[p]))),
            );
        }
        let cumulative = cumulative_cost(&report.trajectory, &report.schedule, &report.costs, &report.params)?;
        path(
            &mut out,
            "cost",
            "#000000",
            idx.iter().map(|&k| (cost.x(grid.time(k)), cost.y(cumulative[k]))),
        );
    }
    out.push_str("</svg>\n");
    Ok(out)
}

pub fn write_chart_svg(report: &ScenarioReport, path: &Path) -> Result<()> {
    std::fs::write(path, render_chart(report)?)?;
    Ok(())
}

/// Vertices of the `d` attribute of the path with the given id.
pub fn path_points(svg: &str, id: &str) -> Option<Vec<(f64, f64)>> {
    let start = svg.find(&format!(r#"<path id="{id}" d=""#))?;
    let rest = &svg[start..];
    let d_start = rest.find(r#" d=""#)? + 4;
    let d_end = d_start + rest[d_start..].find('"')?;
    rest[d_start..d_end]
        .split(['M', 'L'])
        .filter(|s| !s.trim().is_empty())
        .map(|pair| {
            let mut it = pair.split_whitespace().map(|v| v.parse::<f64>());
            match (it.next(), it.next()) {
                (Some(Ok(x)), Some(Ok(y))) => Some((x, y)),
                _ => None,
            }
        })
        .collect()
}
