//! Projection of scenario trajectories onto the `(y1, y2)` simplex.

use std::fmt::Write as _;

use serde::Serialize;

use super::output::{csv_string, num};
use super::scenario::ScenarioResult;
use crate::equilibria::{EquilibriumKind, LineKind};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhasePlot {
    /// `(run index, polyline)` for every trajectory that integrated.
    pub trajectories: Vec<(usize, Vec<[f64; 2]>)>,
    pub initial: Vec<[f64; 2]>,
    pub equilibria: Vec<(EquilibriumKind, [f64; 2])>,
    /// End points of every existing line.
    pub segments: Vec<(LineKind, [f64; 2], [f64; 2])>,
    pub warnings: Vec<String>,
}

/// Projects a scenario result onto `(y1, y2)`. The projection only loses
/// nothing when every run starts with `z1 = z2 = 1`; otherwise a warning is
/// recorded and the data are projected anyway.
pub fn phase_plot(result: &ScenarioResult) -> PhasePlot {
    let mut warnings = Vec::new();
    for (k, run) in result.runs.iter().enumerate() {
        if run.initial.z1 != 1.0 || run.initial.z2 != 1.0 {
            warnings.push(format!(
                "run {k} starts with z1 = {}, z2 = {}; the (y1, y2) projection drops their evolution",
                run.initial.z1, run.initial.z2
            ));
        }
    }
    let trajectories = result
        .runs
        .iter()
        .enumerate()
        .filter_map(|(k, run)| {
            let t = run.trajectory.as_ref().ok()?;
            Some((k, t.states.iter().map(|x| [x.y1, x.y2]).collect()))
        })
        .collect();
    let segments = result
        .lines
        .iter()
        .filter(|l| l.exists)
        .map(|l| {
            let (lo, hi) = l.param_range;
            let a = l.point_unchecked(lo);
            let b = l.point_unchecked(hi);
            (l.kind, [a.y1, a.y2], [b.y1, b.y2])
        })
        .collect();
    PhasePlot {
        trajectories,
        initial: result.runs.iter().map(|r| [r.initial.y1, r.initial.y2]).collect(),
        equilibria: result
            .equilibria
            .iter()
            .filter(|e| e.exists)
            .map(|e| (e.kind, [e.point.y1, e.point.y2]))
            .collect(),
        segments,
        warnings,
    }
}

impl PhasePlot {
    /// Long format: `element,id,index,y1,y2`.
    pub fn to_csv(&self) -> String {
        let mut rows: Vec<[String; 5]> = Vec::new();
        for (run, line) in &self.trajectories {
            for (i, p) in line.iter().enumerate() {
                rows.push(["trajectory".into(), run.to_string(), i.to_string(), num(p[0]), num(p[1])]);
            }
        }
        for (run, p) in self.initial.iter().enumerate() {
            rows.push(["initial".into(), run.to_string(), "0".into(), num(p[0]), num(p[1])]);
        }
        for (kind, p) in &self.equilibria {
            rows.push(["equilibrium".into(), kind.to_string(), "0".into(), num(p[0]), num(p[1])]);
        }
        for (kind, a, b) in &self.segments {
            for (i, p) in [a, b].into_iter().enumerate() {
                rows.push(["line".into(), kind.to_string(), i.to_string(), num(p[0]), num(p[1])]);
            }
        }
        csv_string(&["element", "id", "index", "y1", "y2"], rows)
    }

    pub fn to_svg(&self) -> String {
        const SIZE: f64 = 520.0;
        const PAD: f64 = 50.0;
        const PALETTE: [&str; 6] = ["#1f77b4", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#bcbd22"];
        let span = SIZE - 2.0 * PAD;
        let px = |p: [f64; 2]| (PAD + span * p[0], SIZE - PAD - span * p[1]);

        let mut s = String::new();
        writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{SIZE}" height="{SIZE}" viewBox="0 0 {SIZE} {SIZE}" font-family="sans-serif" font-size="12">"#
        )
        .unwrap();
        writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#).unwrap();

        let (x0, y0) = px([0.0, 0.0]);
        let (x1, _) = px([1.0, 0.0]);
        let (_, y1) = px([0.0, 1.0]);
        writeln!(
            s,
            r##"<polygon points="{x0:.2},{y0:.2} {x1:.2},{y0:.2} {x0:.2},{y1:.2}" fill="#f7f7f7" stroke="#888"/>"##
        )
        .unwrap();
        for t in [0.0, 0.5, 1.0] {
            let (tx, _) = px([t, 0.0]);
            let (_, ty) = px([0.0, t]);
            writeln!(s, r#"<text x="{tx:.2}" y="{:.2}" text-anchor="middle">{t}</text>"#, y0 + 18.0).unwrap();
            writeln!(s, r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{t}</text>"#, x0 - 8.0, ty + 4.0).unwrap();
        }
        writeln!(s, r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">y1</text>"#, (x0 + x1) / 2.0, SIZE - 10.0).unwrap();
        writeln!(s, r#"<text x="14" y="{:.2}" text-anchor="middle">y2</text>"#, (y0 + y1) / 2.0).unwrap();

        for (kind, a, b) in &self.segments {
            let (ax, ay) = px(*a);
            let (bx, by) = px(*b);
            writeln!(
                s,
                r##"<line x1="{ax:.2}" y1="{ay:.2}" x2="{bx:.2}" y2="{by:.2}" stroke="#2ca02c" stroke-width="1.5" stroke-dasharray="6 4"><title>{kind}</title></line>"##
            )
            .unwrap();
        }
        for (run, line) in &self.trajectories {
            let colour = PALETTE[run % PALETTE.len()];
            let points: Vec<String> = line
                .iter()
                .map(|p| {
                    let (x, y) = px(*p);
                    format!("{x:.2},{y:.2}")
                })
                .collect();
            writeln!(
                s,
                r#"<polyline points="{}" fill="none" stroke="{colour}" stroke-width="1.5"/>"#,
                points.join(" ")
            )
            .unwrap();
        }
        for p in &self.initial {
            let (x, y) = px(*p);
            writeln!(s, r#"<circle cx="{x:.2}" cy="{y:.2}" r="4" fill="cyan" stroke="teal"/>"#).unwrap();
        }
        for (kind, p) in &self.equilibria {
            let (x, y) = px(*p);
            writeln!(
                s,
                r#"<path d="M{:.2},{:.2}l8,8m0,-8l-8,8" stroke="red" stroke-width="2"><title>{kind}</title></path>"#,
                x - 4.0,
                y - 4.0
            )
            .unwrap();
        }
        s.push_str("</svg>\n");
        s
    }
}
