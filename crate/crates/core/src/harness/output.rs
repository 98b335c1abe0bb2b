//! CSV and JSON renderings of scenario results and equilibrium tables.
//!
//! Floats in CSV files use 17 significant digits (`{:.16e}`), enough to
//! round-trip every `f64`. JSON files mirror the CSV content and add a
//! `meta` block.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use super::config::{write_config, Config, Format, Target};
use super::scenario::{classify_target, ScenarioResult};
use crate::equilibria::{
    coexistence_lines, enumerate_isolated, Equilibrium, EquilibriumLine, R0_REL_TOL,
};
use crate::integrator::Trajectory;
use crate::model::{ModelParams, State};
use crate::stability::{StabilityError, StabilityReport};

pub const TRAJECTORY_HEADER: [&str; 6] = ["t", "y1", "y2", "z_s", "z1", "z2"];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Meta {
    pub parameters: ModelParams,
    pub version: &'static str,
    /// SHA-256 of the canonical config text.
    pub config_hash: String,
}

impl Meta {
    pub fn new(config: &Config) -> Self {
        let digest = Sha256::digest(write_config(config).as_bytes());
        Self {
            parameters: config.scenario().model,
            version: env!("CARGO_PKG_VERSION"),
            config_hash: digest.iter().map(|b| format!("{b:02x}")).collect(),
        }
    }
}

pub(crate) fn num(v: f64) -> String {
    format!("{v:.16e}")
}

pub(crate) fn csv_string<I, R>(header: &[&str], rows: I) -> String
where
    I: IntoIterator<Item = R>,
    R: IntoIterator,
    R::Item: AsRef<[u8]>,
{
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("writing to memory");
    for row in rows {
        w.write_record(row).expect("writing to memory");
    }
    String::from_utf8(w.into_inner().expect("writing to memory")).expect("CSV text is UTF-8")
}

pub fn trajectory_csv(traj: &Trajectory) -> String {
    csv_string(
        &TRAJECTORY_HEADER,
        traj.times.iter().zip(&traj.states).map(|(t, x)| {
            std::iter::once(num(*t)).chain(x.to_array().map(num))
        }),
    )
}

fn state_json(x: &State) -> Value {
    json!(x.to_array())
}

fn stability_json(r: &Result<StabilityReport, StabilityError>) -> Value {
    match r {
        Ok(r) => json!({
            "numeric": r.numeric_verdict.to_string(),
            "closed_form": r.closed_form_verdict().map(|v| v.to_string()),
            "agreement": r.agreement,
            "zero_modes": r.zero_modes,
            "eigenvalues": r.eigenvalues.iter().map(|l| [l.re, l.im]).collect::<Vec<_>>(),
            "notes": r.notes,
        }),
        Err(e) => json!({ "error": e.to_string() }),
    }
}

fn stability_cells(r: Option<&Result<StabilityReport, StabilityError>>) -> [String; 4] {
    match r {
        Some(Ok(r)) => [
            r.numeric_verdict.to_string(),
            r.closed_form_verdict().map_or(String::new(), |v| v.to_string()),
            r.agreement.to_string(),
            num(r.spectral_abscissa()),
        ],
        Some(Err(e)) => [format!("error: {e}"), String::new(), String::new(), String::new()],
        None => Default::default(),
    }
}

const SUMMARY_HEADER: [&str; 17] = [
    "run", "status", "converged", "t_end", "y1", "y2", "z_s", "z1", "z2", "nearest",
    "distance", "numeric", "closed_form", "agreement", "spectral_abscissa", "samples", "error",
];

/// One row per initial state: terminal point, nearest candidate and its
/// classification.
pub fn summary_csv(result: &ScenarioResult) -> String {
    let rows = result.runs.iter().enumerate().map(|(k, run)| {
        let mut row = vec![k.to_string(), run.status().to_string(), run.converged().to_string()];
        match &run.trajectory {
            Ok(t) => {
                let x = t.terminal_state().copied().unwrap_or_default();
                row.push(num(t.converged_at.or(t.final_time()).unwrap_or(0.0)));
                row.extend(x.to_array().map(num));
            }
            Err(_) => row.extend(std::iter::repeat_n(String::new(), 6)),
        }
        match &run.nearest {
            Some(m) => row.extend([m.target.to_string(), num(m.distance)]),
            None => row.extend([String::new(), String::new()]),
        }
        row.extend(stability_cells(run.stability.as_ref()));
        row.push(run.trajectory.as_ref().map_or(0, |t| t.len()).to_string());
        row.push(run.trajectory.as_ref().err().map_or(String::new(), |e| e.to_string()));
        row
    });
    csv_string(&SUMMARY_HEADER, rows)
}

pub fn scenario_json(result: &ScenarioResult, meta: &Meta) -> Value {
    let runs: Vec<Value> = result
        .runs
        .iter()
        .enumerate()
        .map(|(k, run)| {
            let traj = run.trajectory.as_ref().ok();
            json!({
                "run": k,
                "initial": state_json(&run.initial),
                "status": run.status(),
                "converged": run.converged(),
                "converged_at": traj.and_then(|t| t.converged_at),
                "terminal": traj.and_then(|t| t.terminal_state()).map(state_json),
                "nearest": run.nearest,
                "stability": run.stability.as_ref().map(stability_json),
                "error": run.trajectory.as_ref().err().map(|e| e.to_string()),
                "trajectory": traj.map(|t| json!({
                    "columns": TRAJECTORY_HEADER,
                    "rows": t.times.iter().zip(&t.states).map(|(t, x)| {
                        let a = x.to_array();
                        [*t, a[0], a[1], a[2], a[3], a[4]]
                    }).collect::<Vec<_>>(),
                })),
            })
        })
        .collect();
    json!({ "meta": meta, "runs": runs })
}

/// Enumerated points and lines with their stability, for one parameter set.
#[derive(Debug)]
pub struct EquilibriaReport {
    pub params: ModelParams,
    pub points: Vec<(Equilibrium, Option<Result<StabilityReport, StabilityError>>)>,
    pub lines: Vec<(EquilibriumLine, Option<Result<StabilityReport, StabilityError>>)>,
}

impl EquilibriaReport {
    pub fn new(p: &ModelParams) -> Self {
        let eqs = enumerate_isolated(p);
        let lines = coexistence_lines(p, R0_REL_TOL);
        let classify = |t: Target, exists: bool| {
            exists
                .then(|| classify_target(p, &eqs, &lines, t))
                .flatten()
        };
        Self {
            params: *p,
            points: eqs
                .iter()
                .map(|e| (e.clone(), classify(Target::Point(e.kind), e.exists)))
                .collect(),
            lines: lines
                .iter()
                .map(|l| (l.clone(), classify(Target::Line(l.kind), l.exists)))
                .collect(),
        }
    }

    /// Existing candidates whose stability could not be computed.
    pub fn failures(&self) -> usize {
        self.points
            .iter()
            .map(|(_, r)| r)
            .chain(self.lines.iter().map(|(_, r)| r))
            .filter(|r| matches!(r, Some(Err(_))))
            .count()
    }

    pub fn to_csv(&self) -> String {
        const HEADER: [&str; 14] = [
            "kind", "exists", "y1", "y2", "z_s", "z1", "z2", "y1_min", "y1_max", "numeric",
            "closed_form", "agreement", "spectral_abscissa", "note",
        ];
        let points = self.points.iter().map(|(e, r)| {
            let mut row = vec![e.kind.to_string(), e.exists.to_string()];
            row.extend(e.point.to_array().map(num));
            row.extend([String::new(), String::new()]);
            row.extend(stability_cells(r.as_ref()));
            row.push(notes(r.as_ref()));
            row
        });
        let lines = self.lines.iter().map(|(l, r)| {
            let mut row = vec![l.kind.to_string(), l.exists.to_string()];
            row.extend(std::iter::repeat_n(String::new(), 5));
            row.extend([num(l.param_range.0), num(l.param_range.1)]);
            row.extend(stability_cells(r.as_ref()));
            let mut note = l.note.clone().unwrap_or_default();
            let extra = notes(r.as_ref());
            if !extra.is_empty() {
                if !note.is_empty() {
                    note.push_str("; ");
                }
                note.push_str(&extra);
            }
            row.push(note);
            row
        });
        csv_string(&HEADER, points.chain(lines))
    }

    pub fn to_json(&self, meta: &Meta) -> Value {
        let points: Vec<Value> = self
            .points
            .iter()
            .map(|(e, r)| {
                json!({
                    "kind": e.kind.to_string(),
                    "exists": e.exists,
                    "point": state_json(&e.point),
                    "conditions": e.existence_conditions,
                    "stability": r.as_ref().map(stability_json),
                })
            })
            .collect();
        let lines: Vec<Value> = self
            .lines
            .iter()
            .map(|(l, r)| {
                json!({
                    "kind": l.kind.to_string(),
                    "exists": l.exists,
                    "y1_range": [l.param_range.0, l.param_range.1],
                    "conditions": l.existence_conditions,
                    "note": l.note,
                    "stability": r.as_ref().map(stability_json),
                })
            })
            .collect();
        json!({ "meta": meta, "equilibria": points, "lines": lines })
    }
}

fn notes(r: Option<&Result<StabilityReport, StabilityError>>) -> String {
    match r {
        Some(Ok(r)) => r.notes.join("; "),
        _ => String::new(),
    }
}

impl std::fmt::Display for EquilibriaReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let verdict = |r: &Option<Result<StabilityReport, StabilityError>>| match r {
            Some(Ok(r)) => format!(
                "numeric {}, closed form {}{}",
                r.numeric_verdict,
                r.closed_form_verdict().map_or("n/a".to_string(), |v| v.to_string()),
                if r.agreement { "" } else { "  DISAGREE" }
            ),
            Some(Err(e)) => format!("error: {e}"),
            None => "absent".to_string(),
        };
        for (e, r) in &self.points {
            writeln!(f, "{:<5} {:<5} {}  {}", e.kind, e.exists, e.point, verdict(r))?;
        }
        for (l, r) in &self.lines {
            write!(
                f,
                "{:<5} {:<5} y1 in [{:.6}, {:.6}]  {}",
                l.kind, l.exists, l.param_range.0, l.param_range.1, verdict(r)
            )?;
            match &l.note {
                Some(n) => writeln!(f, "  ({n})")?,
                None => writeln!(f)?,
            }
        }
        Ok(())
    }
}

fn write_file(dir: &Path, name: &str, text: &str, written: &mut Vec<PathBuf>) -> io::Result<()> {
    let path = dir.join(name);
    fs::write(&path, text)?;
    written.push(path);
    Ok(())
}

/// Writes the requested renderings of a scenario run into `dir`:
/// `trajectory_<k>.csv` and `summary.csv` for csv, `scenario.json` for json
/// and `phase.svg` for svg.
pub fn write_scenario(
    result: &ScenarioResult,
    config: &Config,
    dir: &Path,
    formats: &std::collections::BTreeSet<Format>,
) -> io::Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    if formats.contains(&Format::Csv) {
        for (k, run) in result.runs.iter().enumerate() {
            if let Ok(t) = &run.trajectory {
                write_file(dir, &format!("trajectory_{k}.csv"), &trajectory_csv(t), &mut written)?;
            }
        }
        write_file(dir, "summary.csv", &summary_csv(result), &mut written)?;
    }
    if formats.contains(&Format::Json) {
        let text = serde_json::to_string_pretty(&scenario_json(result, &Meta::new(config)))
            .expect("serializing to memory");
        write_file(dir, "scenario.json", &text, &mut written)?;
    }
    if formats.contains(&Format::Svg) {
        let plot = super::phase::phase_plot(result);
        write_file(dir, "phase.svg", &plot.to_svg(), &mut written)?;
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::fixtures::*;

    #[test]
    fn trajectory_csv_is_lossless() {
        let t = Trajectory {
            times: vec![0.0, 0.1],
            states: vec![
                State::new(0.1, 0.2, 1.0 / 3.0, 1.0, 1.0),
                State::new(std::f64::consts::PI / 10.0, 1e-300, 0.0, 0.5, 0.25),
            ],
            converged_to: None,
            converged_at: None,
        };
        let text = trajectory_csv(&t);
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("t,y1,y2,z_s,z1,z2"));
        for (line, (time, x)) in lines.zip(t.times.iter().zip(&t.states)) {
            let v: Vec<f64> = line.split(',').map(|s| s.parse().unwrap()).collect();
            assert_eq!(v[0], *time);
            assert_eq!(&v[1..], &x.to_array());
        }
    }

    #[test]
    fn equilibria_report_covers_every_candidate() {
        let r = EquilibriaReport::new(&l0_scenario());
        assert_eq!(r.points.len(), 8);
        assert_eq!(r.lines.len(), 3);
        assert_eq!(r.failures(), 0);
        let csv = r.to_csv();
        assert_eq!(csv.lines().count(), 12);
        assert!(csv.lines().any(|l| l.starts_with("L0,true,")));
        let text = r.to_string();
        assert!(text.contains("DFE0"));
    }
}
