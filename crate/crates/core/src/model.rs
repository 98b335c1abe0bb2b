//! Parameters, state and the vector field of the coupled bi-virus SIS /
//! replicator system.
//!
//! The state is `p = [y1, y2, z_s, z1, z2]`: infected masses for the two
//! strains, followed by the fraction of susceptible, strain-1 infected and
//! strain-2 infected individuals who social distance. The susceptible mass
//! `s = 1 - y1 - y2` is always derived, never stored.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Slack used when checking that a state lies in Γ before evaluating the
/// vector field. Integrator round-off can leave Γ by O(1e-16).
pub const GAMMA_SLACK: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("non-finite state coordinate in {0}")]
    NonFinite(State),
    #[error("state {state} lies outside the invariant region (slack {slack:e})")]
    OutsideGamma { state: State, slack: f64 },
}

/// One of the two competing strains.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Strain {
    One,
    Two,
}

impl Strain {
    pub const BOTH: [Strain; 2] = [Strain::One, Strain::Two];

    pub fn other(self) -> Strain {
        match self {
            Strain::One => Strain::Two,
            Strain::Two => Strain::One,
        }
    }

    pub fn index(self) -> usize {
        match self {
            Strain::One => 0,
            Strain::Two => 1,
        }
    }
}

impl fmt::Display for Strain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.index() + 1)
    }
}

/// Rates, costs and game parameters of the model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    /// Infection contact rates.
    pub beta1: f64,
    pub beta2: f64,
    /// Healing rates.
    pub delta1: f64,
    pub delta2: f64,
    /// Perceived risk factors per unit infected mass.
    pub r1: f64,
    pub r2: f64,
    /// Perceived cost of socializing while infected.
    pub c1: f64,
    pub c2: f64,
    /// Cost of social distancing.
    pub c_d: f64,
    /// Interaction reduction factor for distancing individuals.
    pub q: f64,
}

impl ModelParams {
    pub fn beta(&self, i: Strain) -> f64 {
        match i {
            Strain::One => self.beta1,
            Strain::Two => self.beta2,
        }
    }

    pub fn delta(&self, i: Strain) -> f64 {
        match i {
            Strain::One => self.delta1,
            Strain::Two => self.delta2,
        }
    }

    pub fn r(&self, i: Strain) -> f64 {
        match i {
            Strain::One => self.r1,
            Strain::Two => self.r2,
        }
    }

    pub fn c(&self, i: Strain) -> f64 {
        match i {
            Strain::One => self.c1,
            Strain::Two => self.c2,
        }
    }

    /// `beta_i / delta_i`.
    pub fn reproduction_number(&self, i: Strain) -> f64 {
        self.beta(i) / self.delta(i)
    }

    fn all(&self) -> [f64; 10] {
        [
            self.beta1, self.beta2, self.delta1, self.delta2, self.r1, self.r2, self.c1, self.c2,
            self.c_d, self.q,
        ]
    }
}

/// Point of the 5-D state space.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct State {
    pub y1: f64,
    pub y2: f64,
    pub z_s: f64,
    pub z1: f64,
    pub z2: f64,
}

impl State {
    pub const fn new(y1: f64, y2: f64, z_s: f64, z1: f64, z2: f64) -> Self {
        Self { y1, y2, z_s, z1, z2 }
    }

    pub const fn from_array(a: [f64; 5]) -> Self {
        Self::new(a[0], a[1], a[2], a[3], a[4])
    }

    pub const fn to_array(self) -> [f64; 5] {
        [self.y1, self.y2, self.z_s, self.z1, self.z2]
    }

    /// Susceptible mass `1 - y1 - y2`.
    pub fn susceptible(&self) -> f64 {
        1.0 - self.y1 - self.y2
    }

    pub fn y(&self, i: Strain) -> f64 {
        match i {
            Strain::One => self.y1,
            Strain::Two => self.y2,
        }
    }

    pub fn z(&self, i: Strain) -> f64 {
        match i {
            Strain::One => self.z1,
            Strain::Two => self.z2,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.to_array().iter().all(|v| v.is_finite())
    }

    /// Max-norm distance to another state.
    pub fn distance(&self, other: &State) -> f64 {
        self.to_array()
            .iter()
            .zip(other.to_array())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

impl fmt::Display for State {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "({}, {}, {}, {}, {})",
            self.y1, self.y2, self.z_s, self.z1, self.z2
        )
    }
}

/// Time derivative of a [`State`].
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Derivative {
    pub dy1: f64,
    pub dy2: f64,
    pub dz_s: f64,
    pub dz1: f64,
    pub dz2: f64,
}

impl Derivative {
    pub const fn to_array(self) -> [f64; 5] {
        [self.dy1, self.dy2, self.dz_s, self.dz1, self.dz2]
    }

    pub fn max_norm(&self) -> f64 {
        self.to_array().iter().map(|v| v.abs()).fold(0.0, f64::max)
    }
}

/// Perceived payoffs for each subpopulation and action.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Payoffs {
    pub pi_sd: f64,
    pub pi_sn: f64,
    pub pi_1d: f64,
    pub pi_1n: f64,
    pub pi_2d: f64,
    pub pi_2n: f64,
}

/// Growth factors of the factored vector field:
/// `dy_i = y_i * h_i` and `dz_s = z_s (1 - z_s) h_s`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Helpers {
    pub h1: f64,
    pub h2: f64,
    pub h_s: f64,
}

impl Helpers {
    pub fn h(&self, i: Strain) -> f64 {
        match i {
            Strain::One => self.h1,
            Strain::Two => self.h2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Assumption {
    /// beta_i > 0 and delta_i > 0.
    PositiveRates,
    /// q in (0, 1).
    ReductionFactor,
    /// c_d > 0.
    PositiveDistancingCost,
    /// 0 < r1 < r2.
    RiskOrdering,
    /// c_i > c_d.
    InfectedCost,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Severity {
    Error,
    Warning,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssumptionCheck {
    pub assumption: Assumption,
    pub description: String,
    pub passed: bool,
    pub severity: Severity,
}

/// Outcome of [`validate_params`]. Checks are listed whether they pass or not.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub checks: Vec<AssumptionCheck>,
}

impl ValidationReport {
    pub fn errors(&self) -> impl Iterator<Item = &AssumptionCheck> {
        self.checks
            .iter()
            .filter(|c| !c.passed && c.severity == Severity::Error)
    }

    pub fn warnings(&self) -> impl Iterator<Item = &AssumptionCheck> {
        self.checks
            .iter()
            .filter(|c| !c.passed && c.severity == Severity::Warning)
    }

    pub fn is_ok(&self) -> bool {
        self.errors().next().is_none()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            let status = match (c.passed, c.severity) {
                (true, _) => "ok",
                (false, Severity::Error) => "ERROR",
                (false, Severity::Warning) => "warning",
            };
            writeln!(f, "{status:>7}  {}", c.description)?;
        }
        Ok(())
    }
}

/// Checks the standing assumptions on the parameters.
///
/// Positivity of rates, `q in (0,1)` and `c_d > 0` are hard requirements.
/// The ordering `r1 < r2` and `c_i > c_d` are only warnings unless `strict`
/// is set: several reference scenarios use `r1 = r2`.
pub fn validate_params(p: &ModelParams, strict: bool) -> ValidationReport {
    let soft = if strict {
        Severity::Error
    } else {
        Severity::Warning
    };
    let finite = p.all().iter().all(|v| v.is_finite());
    let mut checks = vec![
        AssumptionCheck {
            assumption: Assumption::PositiveRates,
            description: "all parameters finite, beta1, beta2 > 0 and delta1, delta2 > 0".into(),
            passed: finite && p.beta1 > 0.0 && p.beta2 > 0.0 && p.delta1 > 0.0 && p.delta2 > 0.0,
            severity: Severity::Error,
        },
        AssumptionCheck {
            assumption: Assumption::ReductionFactor,
            description: "0 < q < 1".into(),
            passed: p.q > 0.0 && p.q < 1.0,
            severity: Severity::Error,
        },
        AssumptionCheck {
            assumption: Assumption::PositiveDistancingCost,
            description: "c_d > 0".into(),
            passed: p.c_d > 0.0,
            severity: Severity::Error,
        },
        AssumptionCheck {
            assumption: Assumption::RiskOrdering,
            description: "0 < r1 < r2".into(),
            passed: p.r1 > 0.0 && p.r1 < p.r2,
            severity: soft,
        },
    ];
    for i in Strain::BOTH {
        checks.push(AssumptionCheck {
            assumption: Assumption::InfectedCost,
            description: format!("c{i} > c_d"),
            passed: p.c(i) > p.c_d,
            severity: soft,
        });
    }
    ValidationReport { checks }
}

pub fn payoffs(p: &ModelParams, x: &State) -> Payoffs {
    let risk = p.r1 * x.y1 + p.r2 * x.y2;
    Payoffs {
        pi_sd: -p.c_d + risk,
        pi_sn: -risk,
        pi_1d: -p.c_d,
        pi_1n: -p.c1,
        pi_2d: -p.c_d,
        pi_2n: -p.c2,
    }
}

pub fn helper_h(p: &ModelParams, x: &State) -> Helpers {
    let s = x.susceptible();
    let susceptible_contact = p.q * x.z_s + (1.0 - x.z_s);
    let h = |i: Strain| {
        let z = x.z(i);
        -p.delta(i) + p.beta(i) * s * susceptible_contact * (p.q * z + (1.0 - z))
    };
    Helpers {
        h1: h(Strain::One),
        h2: h(Strain::Two),
        h_s: 2.0 * (p.r1 * x.y1 + p.r2 * x.y2) - p.c_d,
    }
}

/// Membership in Γ = Δ × [0,1]^3 with additive slack `tol`.
pub fn in_gamma(x: &State, tol: f64) -> bool {
    let unit = |v: f64| v >= -tol && v <= 1.0 + tol;
    x.is_finite()
        && x.y1 >= -tol
        && x.y2 >= -tol
        && x.y1 + x.y2 <= 1.0 + tol
        && unit(x.z_s)
        && unit(x.z1)
        && unit(x.z2)
}

/// Right-hand side of the coupled system without the Γ membership check.
/// Used for intermediate Runge-Kutta stages.
pub(crate) fn vector_field_unchecked(p: &ModelParams, x: &State) -> Derivative {
    let h = helper_h(p, x);
    Derivative {
        dy1: x.y1 * h.h1,
        dy2: x.y2 * h.h2,
        dz_s: x.z_s * (1.0 - x.z_s) * h.h_s,
        dz1: x.z1 * (1.0 - x.z1) * (p.c1 - p.c_d),
        dz2: x.z2 * (1.0 - x.z2) * (p.c2 - p.c_d),
    }
}

/// Right-hand side of the coupled system at `x`.
///
/// States may lie outside Γ by at most [`GAMMA_SLACK`].
pub fn vector_field(p: &ModelParams, x: &State) -> Result<Derivative, ModelError> {
    if !x.is_finite() {
        return Err(ModelError::NonFinite(*x));
    }
    if !in_gamma(x, GAMMA_SLACK) {
        return Err(ModelError::OutsideGamma {
            state: *x,
            slack: GAMMA_SLACK,
        });
    }
    Ok(vector_field_unchecked(p, x))
}

#[cfg(test)]
pub(crate) mod fixtures {
    use super::ModelParams;

    pub fn dfe0_scenario() -> ModelParams {
        ModelParams {
            beta1: 0.8,
            beta2: 0.8,
            delta1: 0.2,
            delta2: 0.2,
            r1: 0.5,
            r2: 0.5,
            c1: 0.5,
            c2: 0.5,
            c_d: 0.4,
            q: 0.1,
        }
    }

    pub fn p1s_scenario() -> ModelParams {
        ModelParams {
            beta1: 0.5,
            beta2: 0.4,
            delta1: 0.06,
            delta2: 0.3,
            r1: 0.6,
            r2: 0.4,
            c1: 1.0,
            c2: 0.9,
            c_d: 0.6,
            q: 0.4,
        }
    }

    pub fn l0_scenario() -> ModelParams {
        ModelParams {
            beta1: 0.3,
            beta2: 0.3,
            delta1: 0.1,
            delta2: 0.1,
            r1: 0.5,
            r2: 0.1,
            c1: 3.0,
            c2: 3.0,
            c_d: 2.0,
            q: 0.8,
        }
    }

    pub fn l1_scenario() -> ModelParams {
        ModelParams {
            r1: 0.4,
            r2: 0.4,
            c1: 0.9,
            c2: 0.9,
            c_d: 0.1,
            ..l0_scenario()
        }
    }
}
