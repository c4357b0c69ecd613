//! Deterministic SVG rendering of scenarios and solutions: obstacles,
//! start and goal markers, and one colored polyline per agent trajectory.
//! 2D scenarios render top-down; 3D scenarios use an isometric projection.

use std::fmt::Write as _;
use std::path::Path;

use crate::dynamics::Trajectory;

use super::scenario::ScenarioFile;

const PALETTE: [&str; 10] = [
    "#d62728", "#1f77b4", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
    "#bcbd22", "#17becf",
];

const OBSTACLE_FILL: &str = "#b0b0b0";
const TARGET_WIDTH_PX: f64 = 720.0;
const PAD_PX: f64 = 24.0;

fn color(i: usize) -> &'static str {
    PALETTE[i % PALETTE.len()]
}

struct Frame {
    scale: f64,
    min_x: f64,
    max_y: f64,
    width: f64,
    height: f64,
}

impl Frame {
    fn fit(min_x: f64, min_y: f64, max_x: f64, max_y: f64) -> Frame {
        let scale = TARGET_WIDTH_PX / (max_x - min_x);
        Frame {
            scale,
            min_x,
            max_y,
            width: (max_x - min_x) * scale + 2.0 * PAD_PX,
            height: (max_y - min_y) * scale + 2.0 * PAD_PX,
        }
    }

    fn map(&self, x: f64, y: f64) -> (f64, f64) {
        (
            PAD_PX + (x - self.min_x) * self.scale,
            PAD_PX + (self.max_y - y) * self.scale,
        )
    }
}

/// Isometric projection of a 3D point onto the drawing plane.
fn iso(p: &[f64]) -> (f64, f64) {
    let c30 = 0.866_025_403_784_438_6;
    ((p[0] - p[1]) * c30, (p[0] + p[1]) * 0.5 - p[2])
}

/// Render the scenario and its trajectories into an SVG file. Output is
/// deterministic: identical inputs produce identical bytes.
pub fn emit_plot(
    scenario: &ScenarioFile,
    trajectories: &[Trajectory],
    path: &Path,
) -> std::io::Result<()> {
    let svg = render_svg(scenario, trajectories);
    std::fs::write(path, svg)
}

pub fn render_svg(scenario: &ScenarioFile, trajectories: &[Trajectory]) -> String {
    if scenario.bounds.dim() == 3 {
        render_3d(scenario, trajectories)
    } else {
        render_2d(scenario, trajectories)
    }
}

fn render_2d(scenario: &ScenarioFile, trajectories: &[Trajectory]) -> String {
    let b = &scenario.bounds;
    let frame = Frame::fit(b.min[0], b.min[1], b.max[0], b.max[1]);
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {:.2} {:.2}">"#,
        frame.width, frame.height
    );
    let _ = writeln!(
        s,
        r#"<rect width="{:.2}" height="{:.2}" fill="white"/>"#,
        frame.width, frame.height
    );

    // Workspace frame.
    let (x0, y1) = frame.map(b.min[0], b.min[1]);
    let (x1, y0) = frame.map(b.max[0], b.max[1]);
    let _ = writeln!(
        s,
        r#"<rect x="{x0:.2}" y="{y0:.2}" width="{:.2}" height="{:.2}" fill="none" stroke="black" stroke-width="1.5"/>"#,
        x1 - x0,
        y1 - y0
    );

    for ob in &scenario.obstacles {
        let (ox0, oy1) = frame.map(ob.min[0], ob.min[1]);
        let (ox1, oy0) = frame.map(ob.max[0], ob.max[1]);
        let _ = writeln!(
            s,
            r#"<rect x="{ox0:.2}" y="{oy0:.2}" width="{:.2}" height="{:.2}" fill="{OBSTACLE_FILL}"/>"#,
            ox1 - ox0,
            oy1 - oy0
        );
    }

    for (i, agent) in scenario.agents.iter().enumerate() {
        let (gx, gy) = frame.map(agent.goal[0], agent.goal[1]);
        let _ = writeln!(
            s,
            r#"<circle cx="{gx:.2}" cy="{gy:.2}" r="{:.2}" fill="{c}" fill-opacity="0.15" stroke="{c}" stroke-width="1"/>"#,
            scenario.goal_radius * frame.scale,
            c = color(i)
        );
        let (sx, sy) = frame.map(agent.start.pos()[0], agent.start.pos()[1]);
        let _ = writeln!(
            s,
            r#"<circle cx="{sx:.2}" cy="{sy:.2}" r="4.00" fill="{}"/>"#,
            color(i)
        );
    }

    for (i, traj) in trajectories.iter().enumerate() {
        let mut pts = String::new();
        for state in traj.sample_states() {
            let (x, y) = frame.map(state.pos()[0], state.pos()[1]);
            let _ = write!(pts, "{x:.2},{y:.2} ");
        }
        let _ = writeln!(
            s,
            r#"<polyline points="{}" fill="none" stroke="{}" stroke-width="1.5"/>"#,
            pts.trim_end(),
            color(i)
        );
    }

    s.push_str("</svg>\n");
    s
}

fn render_3d(scenario: &ScenarioFile, trajectories: &[Trajectory]) -> String {
    let b = &scenario.bounds;
    // Projected extent of the eight bound corners.
    let mut min = (f64::INFINITY, f64::INFINITY);
    let mut max = (f64::NEG_INFINITY, f64::NEG_INFINITY);
    for corner in box_corners(&b.min, &b.max) {
        let (x, y) = iso(&corner);
        min = (min.0.min(x), min.1.min(y));
        max = (max.0.max(x), max.1.max(y));
    }
    let frame = Frame::fit(min.0, min.1, max.0, max.1);

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {:.2} {:.2}">"#,
        frame.width, frame.height
    );
    let _ = writeln!(
        s,
        r#"<rect width="{:.2}" height="{:.2}" fill="white"/>"#,
        frame.width, frame.height
    );

    let mut edge = |a: &[f64], bb: &[f64], stroke: &str, width: f64, out: &mut String| {
        let (ax, ay) = iso(a);
        let (bx, by) = iso(bb);
        let (ax, ay) = frame.map(ax, ay);
        let (bx, by) = frame.map(bx, by);
        let _ = writeln!(
            out,
            r#"<line x1="{ax:.2}" y1="{ay:.2}" x2="{bx:.2}" y2="{by:.2}" stroke="{stroke}" stroke-width="{width:.2}"/>"#
        );
    };

    for (lo, hi) in box_edges(&b.min, &b.max) {
        edge(&lo, &hi, "black", 1.0, &mut s);
    }
    for ob in &scenario.obstacles {
        for (lo, hi) in box_edges(&ob.min, &ob.max) {
            edge(&lo, &hi, OBSTACLE_FILL, 1.2, &mut s);
        }
    }

    for (i, agent) in scenario.agents.iter().enumerate() {
        let (gx, gy) = iso(&agent.goal);
        let (gx, gy) = frame.map(gx, gy);
        let _ = writeln!(
            s,
            r#"<circle cx="{gx:.2}" cy="{gy:.2}" r="{:.2}" fill="{c}" fill-opacity="0.15" stroke="{c}" stroke-width="1"/>"#,
            scenario.goal_radius * frame.scale,
            c = color(i)
        );
        let (sx, sy) = iso(agent.start.pos());
        let (sx, sy) = frame.map(sx, sy);
        let _ = writeln!(
            s,
            r#"<circle cx="{sx:.2}" cy="{sy:.2}" r="3.00" fill="{}"/>"#,
            color(i)
        );
    }

    for (i, traj) in trajectories.iter().enumerate() {
        let mut pts = String::new();
        for state in traj.sample_states() {
            let (x, y) = iso(state.pos());
            let (x, y) = frame.map(x, y);
            let _ = write!(pts, "{x:.2},{y:.2} ");
        }
        let _ = writeln!(
            s,
            r#"<polyline points="{}" fill="none" stroke="{}" stroke-width="1.2"/>"#,
            pts.trim_end(),
            color(i)
        );
    }

    s.push_str("</svg>\n");
    s
}

fn box_corners(min: &[f64], max: &[f64]) -> Vec<Vec<f64>> {
    let mut out = Vec::with_capacity(8);
    for mask in 0..8u8 {
        out.push(vec![
            if mask & 1 != 0 { max[0] } else { min[0] },
            if mask & 2 != 0 { max[1] } else { min[1] },
            if mask & 4 != 0 { max[2] } else { min[2] },
        ]);
    }
    out
}

fn box_edges(min: &[f64], max: &[f64]) -> Vec<(Vec<f64>, Vec<f64>)> {
    let corners = box_corners(min, max);
    let mut out = Vec::with_capacity(12);
    for a in 0..8u8 {
        for bit in [1u8, 2, 4] {
            let b = a | bit;
            if b != a {
                out.push((corners[a as usize].clone(), corners[b as usize].clone()));
            }
        }
    }
    out
}
