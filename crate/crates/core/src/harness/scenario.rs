use std::fmt;

use serde::Serialize;

use super::config::{ScenarioConfig, Target};
use crate::equilibria::{
    coexistence_lines, enumerate_isolated, Equilibrium, EquilibriumLine, LineKind, R0_REL_TOL,
};
use crate::integrator::{integrate, IntegratorError, Trajectory};
use crate::model::{ModelParams, State};
use crate::stability::{
    classify_line, classify_point, StabilityError, StabilityReport, LINE_SAMPLES, ZERO_TOL,
};

/// A terminal state within this max-norm distance of a candidate is matched.
pub const MATCH_TOL: f64 = 1e-2;

/// Nearest candidate to a terminal state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Match {
    pub target: Target,
    /// Closest point of the candidate (the point itself, or the nearest
    /// point of a line segment).
    pub anchor: State,
    pub distance: f64,
}

impl Match {
    pub fn is_match(&self) -> bool {
        self.distance <= MATCH_TOL
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum RunStatus {
    Matched,
    Unmatched,
    Failed,
}

impl fmt::Display for RunStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RunStatus::Matched => "matched",
            RunStatus::Unmatched => "unmatched",
            RunStatus::Failed => "failed",
        })
    }
}

#[derive(Debug)]
pub struct RunResult {
    pub initial: State,
    pub trajectory: Result<Trajectory, IntegratorError>,
    pub nearest: Option<Match>,
    /// Classification of the matched candidate.
    pub stability: Option<Result<StabilityReport, StabilityError>>,
}

impl RunResult {
    pub fn status(&self) -> RunStatus {
        match (&self.trajectory, &self.nearest) {
            (Err(_), _) => RunStatus::Failed,
            (Ok(_), Some(m)) if m.is_match() => RunStatus::Matched,
            _ => RunStatus::Unmatched,
        }
    }

    pub fn terminal_state(&self) -> Option<&State> {
        self.trajectory.as_ref().ok()?.terminal_state()
    }

    pub fn converged(&self) -> bool {
        self.trajectory.as_ref().is_ok_and(|t| t.converged_to.is_some())
    }
}

#[derive(Debug)]
pub struct ScenarioResult {
    pub params: ModelParams,
    pub equilibria: Vec<Equilibrium>,
    pub lines: Vec<EquilibriumLine>,
    pub runs: Vec<RunResult>,
}

impl ScenarioResult {
    pub fn count(&self, status: RunStatus) -> usize {
        self.runs.iter().filter(|r| r.status() == status).count()
    }
}

/// Point of `line` nearest to `x` in the max norm.
pub fn nearest_on_line(line: &EquilibriumLine, x: &State) -> State {
    let (lo, hi) = line.param_range;
    match line.kind {
        LineKind::L0 | LineKind::L1 => {
            // Splitting the gap in y1 + y2 evenly minimizes max(|dy1|, |dy2|).
            let total = line.infected_total().unwrap();
            let y1 = (0.5 * (x.y1 - x.y2 + total)).clamp(lo, hi);
            line.point_unchecked(y1)
        }
        LineKind::LS => {
            // Every coordinate is monotone in y1, so the distance is unimodal.
            let d = |y1: f64| line.point_unchecked(y1).distance(x);
            let (mut a, mut b) = (lo, hi);
            for _ in 0..200 {
                let m1 = a + (b - a) / 3.0;
                let m2 = b - (b - a) / 3.0;
                if d(m1) <= d(m2) {
                    b = m2;
                } else {
                    a = m1;
                }
            }
            line.point_unchecked(0.5 * (a + b))
        }
    }
}

/// Nearest existing equilibrium or line to `x`.
pub fn nearest_candidate(
    equilibria: &[Equilibrium],
    lines: &[EquilibriumLine],
    x: &State,
) -> Option<Match> {
    let points = equilibria.iter().filter(|e| e.exists).map(|e| Match {
        target: Target::Point(e.kind),
        anchor: e.point,
        distance: e.point.distance(x),
    });
    let segments = lines.iter().filter(|l| l.exists).map(|l| {
        let anchor = nearest_on_line(l, x);
        Match {
            target: Target::Line(l.kind),
            anchor,
            distance: anchor.distance(x),
        }
    });
    points
        .chain(segments)
        .min_by(|a, b| a.distance.total_cmp(&b.distance))
}

/// Stability report for `target`, or `None` if it is not enumerated.
pub fn classify_target(
    p: &ModelParams,
    equilibria: &[Equilibrium],
    lines: &[EquilibriumLine],
    target: Target,
) -> Option<Result<StabilityReport, StabilityError>> {
    match target {
        Target::Point(kind) => equilibria
            .iter()
            .find(|e| e.kind == kind)
            .map(|e| classify_point(p, e, ZERO_TOL)),
        Target::Line(kind) => lines
            .iter()
            .find(|l| l.kind == kind)
            .map(|l| classify_line(p, l, LINE_SAMPLES, ZERO_TOL)),
    }
}

/// Integrates every initial state (concurrently) and matches each terminal
/// state against the enumerated equilibria. A failed integration is recorded
/// in its own [`RunResult`] and does not affect the others.
pub fn run_scenario(cfg: &ScenarioConfig) -> ScenarioResult {
    let p = cfg.model;
    let equilibria = enumerate_isolated(&p);
    let lines = coexistence_lines(&p, R0_REL_TOL);

    let trajectories: Vec<_> = std::thread::scope(|s| {
        let handles: Vec<_> = cfg
            .initial_states
            .iter()
            .map(|x0| s.spawn(move || integrate(&p, x0, &cfg.sim)))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("integration thread panicked"))
            .collect()
    });

    let runs = cfg
        .initial_states
        .iter()
        .zip(trajectories)
        .map(|(x0, trajectory)| {
            let nearest = trajectory
                .as_ref()
                .ok()
                .and_then(|t| t.terminal_state())
                .and_then(|x| nearest_candidate(&equilibria, &lines, x));
            let stability = nearest
                .filter(Match::is_match)
                .and_then(|m| classify_target(&p, &equilibria, &lines, m.target));
            RunResult { initial: *x0, trajectory, nearest, stability }
        })
        .collect();

    ScenarioResult { params: p, equilibria, lines, runs }
}
