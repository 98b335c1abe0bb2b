use serde_json::{json, Value};

use super::config::{SweepAxis, SweepConfig, Target};
use super::output::{csv_string, Meta};
use super::scenario::classify_target;
use crate::equilibria::{coexistence_lines, enumerate_isolated, R0_REL_TOL};
use crate::model::{validate_params, ModelParams};
use crate::stability::{ClosedFormVerdict, NumericVerdict};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TargetVerdict {
    pub numeric: NumericVerdict,
    pub closed_form: Option<ClosedFormVerdict>,
    pub agreement: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepCell {
    /// Axis values, in axis order.
    pub coords: Vec<f64>,
    /// Existence of every candidate in [`Target::all`] order; empty when the
    /// parameters were rejected.
    pub exists: Vec<bool>,
    /// One entry per sweep target; `None` when absent or unclassifiable.
    pub verdicts: Vec<Option<TargetVerdict>>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub axes: Vec<SweepAxis>,
    pub targets: Vec<Target>,
    /// Row-major over the axes: the last axis varies fastest.
    pub cells: Vec<SweepCell>,
}

fn grid(axes: &[SweepAxis]) -> Vec<Vec<f64>> {
    axes.iter().fold(vec![vec![]], |acc, axis| {
        let values = axis.values();
        acc.into_iter()
            .flat_map(|prefix| {
                values.iter().map(move |v| {
                    let mut c = prefix.clone();
                    c.push(*v);
                    c
                })
            })
            .collect()
    })
}

/// Enumerates and classifies one grid point.
pub fn sweep_cell(p: &ModelParams, coords: Vec<f64>, targets: &[Target]) -> SweepCell {
    let report = validate_params(p, false);
    if !report.is_ok() {
        let failed: Vec<String> = report.errors().map(|c| c.description.clone()).collect();
        return SweepCell {
            coords,
            exists: vec![],
            verdicts: vec![None; targets.len()],
            error: Some(format!("invalid parameters: {}", failed.join("; "))),
        };
    }
    let eqs = enumerate_isolated(p);
    let lines = coexistence_lines(p, R0_REL_TOL);
    let exists = eqs
        .iter()
        .map(|e| e.exists)
        .chain(lines.iter().map(|l| l.exists))
        .collect();
    let mut errors = Vec::new();
    let verdicts = targets
        .iter()
        .map(|&t| match classify_target(p, &eqs, &lines, t)? {
            Ok(r) => Some(TargetVerdict {
                numeric: r.numeric_verdict,
                closed_form: r.closed_form_verdict(),
                agreement: r.agreement,
            }),
            Err(crate::stability::StabilityError::Missing(_)) => None,
            Err(e) => {
                errors.push(format!("{t}: {e}"));
                None
            }
        })
        .collect();
    SweepCell {
        coords,
        exists,
        verdicts,
        error: (!errors.is_empty()).then(|| errors.join("; ")),
    }
}

/// Evaluates every grid point. Cells run concurrently; the output order is
/// deterministic.
pub fn run_sweep(cfg: &SweepConfig) -> SweepResult {
    let points = grid(&cfg.axes);
    let workers = std::thread::available_parallelism().map_or(1, |n| n.get());
    let chunk = points.len().div_ceil(workers).max(1);
    let cells = std::thread::scope(|s| {
        let handles: Vec<_> = points
            .chunks(chunk)
            .map(|block| {
                s.spawn(move || {
                    block
                        .iter()
                        .map(|coords| {
                            let mut p = cfg.base.model;
                            for (axis, v) in cfg.axes.iter().zip(coords) {
                                axis.param.set(&mut p, *v);
                            }
                            sweep_cell(&p, coords.clone(), &cfg.targets)
                        })
                        .collect::<Vec<_>>()
                })
            })
            .collect();
        handles
            .into_iter()
            .flat_map(|h| h.join().expect("sweep worker panicked"))
            .collect()
    });
    SweepResult { axes: cfg.axes.clone(), targets: cfg.targets.clone(), cells }
}

impl SweepResult {
    pub fn header(&self) -> Vec<String> {
        let mut h: Vec<String> = self.axes.iter().map(|a| a.param.to_string()).collect();
        h.extend(Target::all().map(|t| t.to_string()));
        for t in &self.targets {
            h.extend([format!("{t}_numeric"), format!("{t}_closed_form"), format!("{t}_agreement")]);
        }
        h.push("error".into());
        h
    }

    /// Existence columns hold 0/1; verdict columns are empty where the
    /// target does not exist.
    pub fn to_csv(&self) -> String {
        let header = self.header();
        let header: Vec<&str> = header.iter().map(String::as_str).collect();
        let rows = self.cells.iter().map(|c| {
            let mut row: Vec<String> = c.coords.iter().map(|v| v.to_string()).collect();
            if c.exists.is_empty() {
                row.extend(Target::all().map(|_| String::new()));
            } else {
                row.extend(c.exists.iter().map(|e| u8::from(*e).to_string()));
            }
            for v in &c.verdicts {
                match v {
                    Some(v) => row.extend([
                        v.numeric.to_string(),
                        v.closed_form.map_or(String::new(), |c| c.to_string()),
                        v.agreement.to_string(),
                    ]),
                    None => row.extend([String::new(), String::new(), String::new()]),
                }
            }
            row.push(c.error.clone().unwrap_or_default());
            row
        });
        csv_string(&header, rows)
    }

    pub fn to_json(&self, meta: &Meta) -> Value {
        let names: Vec<String> = Target::all().map(|t| t.to_string()).collect();
        let cells: Vec<Value> = self
            .cells
            .iter()
            .map(|c| {
                let exists: serde_json::Map<String, Value> = names
                    .iter()
                    .zip(&c.exists)
                    .map(|(n, e)| (n.clone(), json!(e)))
                    .collect();
                let verdicts: serde_json::Map<String, Value> = self
                    .targets
                    .iter()
                    .zip(&c.verdicts)
                    .map(|(t, v)| {
                        let v = v.map(|v| {
                            json!({
                                "numeric": v.numeric.to_string(),
                                "closed_form": v.closed_form.map(|c| c.to_string()),
                                "agreement": v.agreement,
                            })
                        });
                        (t.to_string(), v.unwrap_or(Value::Null))
                    })
                    .collect();
                json!({ "coords": c.coords, "exists": exists, "verdicts": verdicts, "error": c.error })
            })
            .collect();
        let axes: Vec<Value> = self
            .axes
            .iter()
            .map(|a| json!({ "param": a.param.as_str(), "min": a.min, "max": a.max, "steps": a.steps }))
            .collect();
        json!({ "meta": meta, "axes": axes, "targets": self.targets, "cells": cells })
    }

    /// Cells where a closed-form verdict contradicts the numeric one.
    pub fn disagreements(&self) -> usize {
        self.cells
            .iter()
            .flat_map(|c| &c.verdicts)
            .filter(|v| v.is_some_and(|v| !v.agreement))
            .count()
    }
}
