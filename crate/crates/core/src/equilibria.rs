//! Closed-form fixed points and lines of fixed points.
//!
//! Only fixed points with `z1 = z2 = 1` are enumerated: with `c_i > c_d`
//! infected individuals always drift towards full distancing, so fixed
//! points with `z_i < 1` cannot be attracting.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{ModelParams, State, Strain};

/// Default relative tolerance when comparing the two reproduction numbers.
pub const R0_REL_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EquilibriumError {
    #[error("y1 = {y1} lies outside the line parameter range [{lower}, {upper}]")]
    OutOfRange { y1: f64, lower: f64, upper: f64 },
    #[error("line {0} does not exist for these parameters")]
    LineMissing(LineKind),
    #[error("degenerate risk ratio: r1 = r2 makes the partial-distancing line undefined")]
    DegenerateRiskRatio,
}

/// Isolated fixed point labels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum EquilibriumKind {
    Dfe0,
    Dfe1,
    U10,
    U11,
    U1S,
    U20,
    U21,
    U2S,
}

impl EquilibriumKind {
    pub const ALL: [EquilibriumKind; 8] = [
        Self::Dfe0,
        Self::Dfe1,
        Self::U10,
        Self::U11,
        Self::U1S,
        Self::U20,
        Self::U21,
        Self::U2S,
    ];

    /// The endemic strain of a unilateral fixed point.
    pub fn strain(self) -> Option<Strain> {
        match self {
            Self::U10 | Self::U11 | Self::U1S => Some(Strain::One),
            Self::U20 | Self::U21 | Self::U2S => Some(Strain::Two),
            Self::Dfe0 | Self::Dfe1 => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Dfe0 => "DFE0",
            Self::Dfe1 => "DFE1",
            Self::U10 => "U10",
            Self::U11 => "U11",
            Self::U1S => "U1S",
            Self::U20 => "U20",
            Self::U21 => "U21",
            Self::U2S => "U2S",
        }
    }
}

impl fmt::Display for EquilibriumKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EquilibriumKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|k| k.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown equilibrium kind `{s}`"))
    }
}

/// Lines of coexistence fixed points.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum LineKind {
    /// Nobody distances: `z_s = 0`.
    L0,
    /// Everybody distances: `z_s = 1`.
    L1,
    /// Partial distancing, `z_s` in (0, 1).
    LS,
}

impl LineKind {
    pub const ALL: [LineKind; 3] = [Self::L0, Self::L1, Self::LS];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::L0 => "L0",
            Self::L1 => "L1",
            Self::LS => "LS",
        }
    }
}

impl fmt::Display for LineKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for LineKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|k| k.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown line kind `{s}`"))
    }
}

/// A labelled inequality with its signed distance to the boundary.
///
/// `margin > 0` means satisfied with room to spare. Strict conditions fail
/// at zero margin, non-strict ones hold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Condition {
    pub label: String,
    pub holds: bool,
    pub margin: f64,
}

impl Condition {
    /// `lhs > rhs`.
    pub fn greater(label: impl Into<String>, lhs: f64, rhs: f64) -> Self {
        let margin = lhs - rhs;
        Self { label: label.into(), holds: margin > 0.0, margin }
    }

    /// `lhs < rhs`.
    pub fn less(label: impl Into<String>, lhs: f64, rhs: f64) -> Self {
        Self::greater(label, rhs, lhs)
    }

    /// `lhs <= rhs`.
    pub fn at_most(label: impl Into<String>, lhs: f64, rhs: f64) -> Self {
        let margin = rhs - lhs;
        Self { label: label.into(), holds: margin >= 0.0, margin }
    }

    pub fn flag(label: impl Into<String>, holds: bool) -> Self {
        Self { label: label.into(), holds, margin: if holds { 1.0 } else { -1.0 } }
    }
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mark = if self.holds { "yes" } else { "no" };
        write!(f, "{} [{mark}, margin {:.3e}]", self.label, self.margin)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Equilibrium {
    pub kind: EquilibriumKind,
    pub point: State,
    pub exists: bool,
    pub existence_conditions: Vec<Condition>,
}

impl Equilibrium {
    fn new(kind: EquilibriumKind, point: State, existence_conditions: Vec<Condition>) -> Self {
        let exists = existence_conditions.iter().all(|c| c.holds);
        Self { kind, point, exists, existence_conditions }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReproductionNumbers {
    pub rho1: f64,
    pub rho2: f64,
    pub equal: bool,
}

pub fn reproduction_numbers(p: &ModelParams, rel_tol: f64) -> ReproductionNumbers {
    let rho1 = p.reproduction_number(Strain::One);
    let rho2 = p.reproduction_number(Strain::Two);
    let equal = (rho1 - rho2).abs() <= rel_tol * rho1.abs().max(rho2.abs());
    ReproductionNumbers { rho1, rho2, equal }
}

fn unilateral(i: Strain, y: f64, z_s: f64) -> State {
    match i {
        Strain::One => State::new(y, 0.0, z_s, 1.0, 1.0),
        Strain::Two => State::new(0.0, y, z_s, 1.0, 1.0),
    }
}

/// All eight isolated candidates, in [`EquilibriumKind::ALL`] order. The
/// disease-free points always exist; the others carry per-condition margins.
pub fn enumerate_isolated(p: &ModelParams) -> Vec<Equilibrium> {
    let mut out = vec![
        Equilibrium::new(EquilibriumKind::Dfe0, State::new(0.0, 0.0, 0.0, 1.0, 1.0), vec![]),
        Equilibrium::new(EquilibriumKind::Dfe1, State::new(0.0, 0.0, 1.0, 1.0, 1.0), vec![]),
    ];
    for i in Strain::BOTH {
        let (beta, delta, r, q) = (p.beta(i), p.delta(i), p.r(i), p.q);
        let (k0, k1, ks) = match i {
            Strain::One => (EquilibriumKind::U10, EquilibriumKind::U11, EquilibriumKind::U1S),
            Strain::Two => (EquilibriumKind::U20, EquilibriumKind::U21, EquilibriumKind::U2S),
        };

        let ratio0 = delta / (q * beta);
        out.push(Equilibrium::new(
            k0,
            unilateral(i, 1.0 - ratio0, 0.0),
            vec![Condition::less(format!("delta{i}/(q beta{i}) < 1"), ratio0, 1.0)],
        ));

        let ratio1 = delta / (q * q * beta);
        out.push(Equilibrium::new(
            k1,
            unilateral(i, 1.0 - ratio1, 1.0),
            vec![Condition::less(format!("delta{i}/(q^2 beta{i}) < 1"), ratio1, 1.0)],
        ));

        let y = p.c_d / (2.0 * r);
        let z_s = 1.0 / (1.0 - q) - delta / (beta * (1.0 - y) * q * (1.0 - q));
        out.push(Equilibrium::new(
            ks,
            unilateral(i, y, z_s),
            vec![
                Condition::at_most(format!("c_d/(2 r{i}) <= 1"), y, 1.0),
                Condition::less(
                    format!("q (1 - c_d/(2 r{i})) < delta{i}/(q beta{i})"),
                    q * (1.0 - y),
                    ratio0,
                ),
                Condition::less(
                    format!("delta{i}/(q beta{i}) < 1 - c_d/(2 r{i})"),
                    ratio0,
                    1.0 - y,
                ),
            ],
        ));
    }
    out.sort_by_key(|e| e.kind);
    out
}

/// A one-parameter family of fixed points, parameterized by `y1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumLine {
    pub kind: LineKind,
    pub exists: bool,
    /// Closed range of `y1` covering the line and its endpoints.
    pub param_range: (f64, f64),
    pub existence_conditions: Vec<Condition>,
    pub r0_equal: bool,
    /// Why the line is absent when a structural precondition fails.
    pub note: Option<String>,
    params: ModelParams,
    r0: f64,
}

impl EquilibriumLine {
    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    /// Common reproduction number used by the line formulas.
    pub fn r0(&self) -> f64 {
        self.r0
    }

    /// Value of `y1 + y2` along L0 and L1.
    pub fn infected_total(&self) -> Option<f64> {
        let q = self.params.q;
        match self.kind {
            LineKind::L0 => Some(1.0 - 1.0 / (q * self.r0)),
            LineKind::L1 => Some(1.0 - 1.0 / (q * q * self.r0)),
            LineKind::LS => None,
        }
    }

    /// Point of the line at parameter `y1`, with no range check.
    pub fn point_unchecked(&self, y1: f64) -> State {
        let p = &self.params;
        match self.kind {
            LineKind::L0 | LineKind::L1 => {
                let total = self.infected_total().unwrap();
                let z_s = if self.kind == LineKind::L0 { 0.0 } else { 1.0 };
                State::new(y1, total - y1, z_s, 1.0, 1.0)
            }
            LineKind::LS => {
                let y2 = p.c_d / (2.0 * p.r2) - p.r1 / p.r2 * y1;
                let ell = 1.0 - y1 - y2;
                let q = p.q;
                let z_s = 1.0 / (1.0 - q) - 1.0 / (q * (1.0 - q) * self.r0 * ell);
                State::new(y1, y2, z_s, 1.0, 1.0)
            }
        }
    }

    /// `n` evenly spaced parameters. L0 and L1 include both endpoints; LS,
    /// whose endpoints may sit on the edge of Γ, uses cell midpoints.
    pub fn sample_params(&self, n: usize) -> Vec<f64> {
        let (lo, hi) = self.param_range;
        match (self.kind, n) {
            (_, 0) => vec![],
            (LineKind::LS, _) => (0..n)
                .map(|k| lo + (k as f64 + 0.5) / n as f64 * (hi - lo))
                .collect(),
            (_, 1) => vec![0.5 * (lo + hi)],
            _ => (0..n)
                .map(|k| lo + k as f64 / (n - 1) as f64 * (hi - lo))
                .collect(),
        }
    }
}

/// Full state on `line` at parameter `y1`.
pub fn point_on_line(line: &EquilibriumLine, y1: f64) -> Result<State, EquilibriumError> {
    if !line.exists {
        return Err(EquilibriumError::LineMissing(line.kind));
    }
    let (lower, upper) = line.param_range;
    if !(y1 >= lower && y1 <= upper) {
        return Err(EquilibriumError::OutOfRange { y1, lower, upper });
    }
    Ok(line.point_unchecked(y1))
}

fn r0_condition(r0: &ReproductionNumbers, rel_tol: f64) -> Condition {
    let scale = rel_tol * r0.rho1.abs().max(r0.rho2.abs());
    Condition {
        label: "beta1/delta1 = beta2/delta2".into(),
        holds: r0.equal,
        margin: scale - (r0.rho1 - r0.rho2).abs(),
    }
}

fn simple_line(
    p: &ModelParams,
    kind: LineKind,
    r0: &ReproductionNumbers,
    rel_tol: f64,
) -> EquilibriumLine {
    let (label, factor) = match kind {
        LineKind::L0 => ("q R0 > 1", p.q),
        _ => ("q^2 R0 > 1", p.q * p.q),
    };
    let conditions = vec![
        r0_condition(r0, rel_tol),
        Condition::greater(label, factor * r0.rho1, 1.0),
    ];
    let exists = conditions.iter().all(|c| c.holds);
    let total = 1.0 - 1.0 / (factor * r0.rho1);
    EquilibriumLine {
        kind,
        exists,
        param_range: (0.0, total.max(0.0)),
        existence_conditions: conditions,
        r0_equal: r0.equal,
        note: (!r0.equal).then(|| "R0 mismatch".to_string()),
        params: *p,
        r0: r0.rho1,
    }
}

/// The partial-distancing line.
///
/// Points satisfy `h_s = 0`, i.e. `y2 = c_d/(2 r2) - (r1/r2) y1`, and `z_s`
/// solves `h1 = 0`. The admissible `y1` range collects the constraints
/// `y1 in (0, 1)`, `y2 in (0, 1)` and `z_s in (0, 1)`; the last reads
/// `1/(q R0) < l(y1) < 1/(q^2 R0)` with `l(y1) = 1 - y1 - y2`, which is
/// linear in `y1` with slope `-(1 - r1/r2)`. When `r1 > r2` the slope is
/// positive and the two `z_s` bounds swap sides.
pub fn partial_distancing_line(
    p: &ModelParams,
    rel_tol: f64,
) -> Result<EquilibriumLine, EquilibriumError> {
    if p.r1 == p.r2 {
        return Err(EquilibriumError::DegenerateRiskRatio);
    }
    let r0 = reproduction_numbers(p, rel_tol);
    let q = p.q;
    let big_r = r0.rho1;
    let ratio = p.r1 / p.r2;
    let slope = 1.0 - ratio;
    let intercept = 1.0 - p.c_d / (2.0 * p.r2);
    let z_upper = (intercept - 1.0 / (q * q * big_r)) / slope;
    let z_lower = (intercept - 1.0 / (q * big_r)) / slope;

    let mut lower = vec![
        ("0", 0.0),
        ("(r2/r1)(c_d/(2 r2) - 1)", (p.r2 / p.r1) * (p.c_d / (2.0 * p.r2) - 1.0)),
    ];
    let mut upper = vec![("c_d/(2 r1)", p.c_d / (2.0 * p.r1)), ("1", 1.0)];
    if slope > 0.0 {
        lower.push(("(1 - c_d/(2 r2) - 1/(q^2 R0))/(1 - r1/r2)", z_upper));
        upper.push(("(1 - c_d/(2 r2))/(1 - r1/r2)", intercept / slope));
        upper.push(("(1 - c_d/(2 r2) - 1/(q R0))/(1 - r1/r2)", z_lower));
    } else {
        lower.push(("(1 - c_d/(2 r2))/(1 - r1/r2)", intercept / slope));
        lower.push(("(1 - c_d/(2 r2) - 1/(q R0))/(1 - r1/r2)", z_lower));
        upper.push(("(1 - c_d/(2 r2) - 1/(q^2 R0))/(1 - r1/r2)", z_upper));
    }
    fn pick<'a>(v: &[(&'a str, f64)], max: bool) -> (&'a str, f64) {
        v.iter()
            .copied()
            .reduce(|a, b| if (b.1 > a.1) == max { b } else { a })
            .unwrap()
    }
    let (lo_label, lo) = pick(&lower, true);
    let (hi_label, hi) = pick(&upper, false);

    let conditions = vec![
        r0_condition(&r0, rel_tol),
        Condition::less(format!("B_lower = {lo_label} < B_upper = {hi_label}"), lo, hi),
    ];
    let exists = conditions.iter().all(|c| c.holds);
    Ok(EquilibriumLine {
        kind: LineKind::LS,
        exists,
        param_range: (lo, hi),
        existence_conditions: conditions,
        r0_equal: r0.equal,
        note: (!r0.equal).then(|| "R0 mismatch".to_string()),
        params: *p,
        r0: big_r,
    })
}

/// L0, L1 and LS. All three are reported; absent lines have `exists = false`
/// and LS is marked with a note when `r1 = r2` leaves it undefined.
pub fn coexistence_lines(p: &ModelParams, rel_tol: f64) -> Vec<EquilibriumLine> {
    let r0 = reproduction_numbers(p, rel_tol);
    let ls = partial_distancing_line(p, rel_tol).unwrap_or_else(|e| EquilibriumLine {
        kind: LineKind::LS,
        exists: false,
        param_range: (0.0, 0.0),
        existence_conditions: vec![r0_condition(&r0, rel_tol), Condition::flag("r1 != r2", false)],
        r0_equal: r0.equal,
        note: Some(e.to_string()),
        params: *p,
        r0: r0.rho1,
    });
    vec![
        simple_line(p, LineKind::L0, &r0, rel_tol),
        simple_line(p, LineKind::L1, &r0, rel_tol),
        ls,
    ]
}
