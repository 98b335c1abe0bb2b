//! Jacobians, spectra and local stability verdicts.
//!
//! Every fixed point gets two independent verdicts: one from the eigenvalues
//! of the analytic Jacobian and one from the closed-form parameter
//! conditions for its kind. The report records whether they agree.

use std::fmt;

use nalgebra::linalg::Schur;
use nalgebra::Complex;
use thiserror::Error;

use crate::equilibria::{
    Condition, Equilibrium, EquilibriumKind, EquilibriumLine, LineKind,
};
use crate::model::{helper_h, ModelParams, State, Strain};

pub type Matrix5 = nalgebra::Matrix5<f64>;
pub type Complex64 = Complex<f64>;

/// Eigenvalues with `|Re| <= ZERO_TOL` count as zero modes.
pub const ZERO_TOL: f64 = 1e-9;
/// Samples per line for numeric line classification.
pub const LINE_SAMPLES: usize = 11;

const SCHUR_MAX_ITER: usize = 10_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StabilityError {
    #[error("Schur iteration did not converge within {0} iterations")]
    NoConvergence(usize),
    #[error("matrix has non-finite entries")]
    NonFinite,
    #[error("{0} does not exist for these parameters")]
    Missing(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NumericVerdict {
    Stable,
    Unstable,
    Marginal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ClosedFormVerdict {
    Stable,
    Unstable,
    Inconclusive,
}

impl fmt::Display for NumericVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Stable => "stable",
            Self::Unstable => "unstable",
            Self::Marginal => "marginal",
        })
    }
}

impl fmt::Display for ClosedFormVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Stable => "stable",
            Self::Unstable => "unstable",
            Self::Inconclusive => "inconclusive",
        })
    }
}

/// Closed-form sufficient conditions and their evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct ClosedForm {
    pub verdict: ClosedFormVerdict,
    /// Stable when every one of these holds (never, if empty).
    pub stable_if_all: Vec<Condition>,
    /// Unstable when any of these holds.
    pub unstable_if_any: Vec<Condition>,
    /// Instability clauses as originally published where they differ from
    /// the ones derived from the Jacobian. Informational only.
    pub reference_clauses: Vec<Condition>,
}

impl ClosedForm {
    fn new(
        stable_if_all: Vec<Condition>,
        unstable_if_any: Vec<Condition>,
        reference_clauses: Vec<Condition>,
    ) -> Self {
        let stable = !stable_if_all.is_empty() && stable_if_all.iter().all(|c| c.holds);
        let unstable = unstable_if_any.iter().any(|c| c.holds);
        let verdict = match (stable, unstable) {
            (true, false) => ClosedFormVerdict::Stable,
            (false, true) => ClosedFormVerdict::Unstable,
            _ => ClosedFormVerdict::Inconclusive,
        };
        Self { verdict, stable_if_all, unstable_if_any, reference_clauses }
    }

    /// Smallest distance of any deciding condition to its boundary.
    pub fn min_abs_margin(&self) -> f64 {
        self.stable_if_all
            .iter()
            .chain(&self.unstable_if_any)
            .map(|c| c.margin.abs())
            .fold(f64::INFINITY, f64::min)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StabilityReport {
    /// Spectrum sorted by real part, descending. For lines, the spectrum at
    /// the least stable sample.
    pub eigenvalues: [Complex64; 5],
    pub numeric_verdict: NumericVerdict,
    pub zero_modes: usize,
    pub closed_form: Option<ClosedForm>,
    pub agreement: bool,
    /// No closed-form criterion exists; only the numeric verdict is meaningful.
    pub numeric_only: bool,
    pub notes: Vec<String>,
}

impl StabilityReport {
    pub fn closed_form_verdict(&self) -> Option<ClosedFormVerdict> {
        self.closed_form.as_ref().map(|c| c.verdict)
    }

    /// Largest real part of the reported spectrum.
    pub fn spectral_abscissa(&self) -> f64 {
        self.eigenvalues[0].re
    }
}

fn verdicts_agree(numeric: NumericVerdict, closed: Option<ClosedFormVerdict>) -> bool {
    match closed {
        None | Some(ClosedFormVerdict::Inconclusive) => true,
        Some(ClosedFormVerdict::Stable) => numeric == NumericVerdict::Stable,
        Some(ClosedFormVerdict::Unstable) => numeric == NumericVerdict::Unstable,
    }
}

fn jacobian_impl(p: &ModelParams, x: &State, growth_terms: bool) -> Matrix5 {
    let q = p.q;
    let s = x.susceptible();
    let contact_s = q * x.z_s + (1.0 - x.z_s);
    let h = helper_h(p, x);
    let mut j = Matrix5::zeros();
    for i in Strain::BOTH {
        let row = i.index();
        let (y, beta, z) = (x.y(i), p.beta(i), x.z(i));
        let contact_i = q * z + (1.0 - z);
        let dh_dy = -beta * contact_s * contact_i;
        j[(row, 0)] = y * dh_dy;
        j[(row, 1)] = y * dh_dy;
        if growth_terms {
            j[(row, row)] += h.h(i);
        }
        j[(row, 2)] = -y * beta * s * contact_i * (1.0 - q);
        j[(row, 3 + row)] = -y * beta * s * contact_s * (1.0 - q);
    }
    let w = x.z_s * (1.0 - x.z_s);
    j[(2, 0)] = w * 2.0 * p.r1;
    j[(2, 1)] = w * 2.0 * p.r2;
    j[(2, 2)] = (1.0 - 2.0 * x.z_s) * h.h_s;
    j[(3, 3)] = (1.0 - 2.0 * x.z1) * (p.c1 - p.c_d);
    j[(4, 4)] = (1.0 - 2.0 * x.z2) * (p.c2 - p.c_d);
    j
}

/// Analytic Jacobian of the vector field, rows and columns ordered
/// `(y1, y2, z_s, z1, z2)`.
pub fn jacobian(p: &ModelParams, x: &State) -> Matrix5 {
    jacobian_impl(p, x, true)
}

/// Jacobian with the growth factors `h_i` on the diagonal set to zero, as
/// they are at every point of a coexistence line. Agrees with [`jacobian`]
/// at true line points up to rounding.
pub fn line_jacobian(p: &ModelParams, x: &State) -> Matrix5 {
    jacobian_impl(p, x, false)
}

/// Central-difference Jacobian, used for diagnostics.
pub fn finite_difference_jacobian(p: &ModelParams, x: &State, step: f64) -> Matrix5 {
    let f = |v: [f64; 5]| crate::model::vector_field_unchecked(p, &State::from_array(v)).to_array();
    let base = x.to_array();
    let mut j = Matrix5::zeros();
    for col in 0..5 {
        let mut plus = base;
        let mut minus = base;
        plus[col] += step;
        minus[col] -= step;
        let (fp, fm) = (f(plus), f(minus));
        for row in 0..5 {
            j[(row, col)] = (fp[row] - fm[row]) / (2.0 * step);
        }
    }
    j
}

/// Spectrum of a 5x5 real matrix via real Schur decomposition, sorted by
/// real part (then imaginary part) descending.
pub fn eigenvalues(m: &Matrix5) -> Result<[Complex64; 5], StabilityError> {
    if m.iter().any(|v| !v.is_finite()) {
        return Err(StabilityError::NonFinite);
    }
    let schur = Schur::try_new(*m, f64::EPSILON, SCHUR_MAX_ITER)
        .ok_or(StabilityError::NoConvergence(SCHUR_MAX_ITER))?;
    let ev = schur.complex_eigenvalues();
    let mut out: [Complex64; 5] = std::array::from_fn(|i| ev[i]);
    out.sort_by(|a, b| b.re.total_cmp(&a.re).then(b.im.total_cmp(&a.im)));
    Ok(out)
}

fn point_verdict(ev: &[Complex64; 5], tol: f64) -> (NumericVerdict, usize) {
    let zero_modes = ev.iter().filter(|l| l.re.abs() <= tol).count();
    let verdict = if ev.iter().any(|l| l.re > tol) {
        NumericVerdict::Unstable
    } else if ev.iter().all(|l| l.re < -tol) {
        NumericVerdict::Stable
    } else {
        NumericVerdict::Marginal
    };
    (verdict, zero_modes)
}

/// A line point is stable when the only non-decaying direction is the
/// single zero mode along the line.
fn line_point_verdict(ev: &[Complex64; 5], tol: f64) -> (NumericVerdict, usize) {
    let zero_modes = ev.iter().filter(|l| l.re.abs() <= tol).count();
    let negative = ev.iter().filter(|l| l.re < -tol).count();
    let verdict = if ev.iter().any(|l| l.re > tol) {
        NumericVerdict::Unstable
    } else if zero_modes == 1 && negative == 4 {
        NumericVerdict::Stable
    } else {
        NumericVerdict::Marginal
    };
    (verdict, zero_modes)
}

fn assumption4(p: &ModelParams) -> [Condition; 2] {
    [
        Condition::greater("c1 > c_d", p.c1, p.c_d),
        Condition::greater("c2 > c_d", p.c2, p.c_d),
    ]
}

/// Closed-form verdict for an isolated fixed point.
pub fn closed_form_point(p: &ModelParams, kind: EquilibriumKind) -> ClosedForm {
    let q = p.q;
    let [a1, a2] = assumption4(p);
    match kind {
        EquilibriumKind::Dfe0 => ClosedForm::new(
            vec![
                Condition::greater("delta1 > q beta1", p.delta1, q * p.beta1),
                Condition::greater("delta2 > q beta2", p.delta2, q * p.beta2),
                a1,
                a2,
            ],
            vec![
                Condition::less("delta1 < q beta1", p.delta1, q * p.beta1),
                Condition::less("delta2 < q beta2", p.delta2, q * p.beta2),
            ],
            vec![],
        ),
        EquilibriumKind::Dfe1 => {
            ClosedForm::new(vec![], vec![Condition::greater("c_d > 0", p.c_d, 0.0)], vec![])
        }
        EquilibriumKind::U10 | EquilibriumKind::U20 => {
            let i = kind.strain().unwrap();
            let j = i.other();
            let (rho_i, rho_j) = (p.reproduction_number(i), p.reproduction_number(j));
            let endemic = 1.0 - p.delta(i) / (q * p.beta(i));
            let ci = p.c_d / (2.0 * p.r(i));
            ClosedForm::new(
                vec![
                    Condition::greater(format!("q beta{i}/delta{i} > 1"), q * rho_i, 1.0),
                    Condition::less(format!("q beta{j}/delta{j} < 1"), q * rho_j, 1.0),
                    Condition::greater(
                        format!("c_d/(2 r{i}) > 1 - delta{i}/(q beta{i})"),
                        ci,
                        endemic,
                    ),
                    a1,
                    a2,
                ],
                vec![
                    Condition::greater(format!("beta{j}/delta{j} > beta{i}/delta{i}"), rho_j, rho_i),
                    Condition::less(
                        format!("c_d < 2 r{i} (1 - delta{i}/(q beta{i}))"),
                        p.c_d,
                        2.0 * p.r(i) * endemic,
                    ),
                ],
                vec![Condition::less(
                    format!("delta{j} < q beta{j}"),
                    p.delta(j),
                    q * p.beta(j),
                )],
            )
        }
        EquilibriumKind::U11 | EquilibriumKind::U21 => {
            let i = kind.strain().unwrap();
            let j = i.other();
            let q2 = q * q;
            let (rho_i, rho_j) = (p.reproduction_number(i), p.reproduction_number(j));
            let endemic = 1.0 - p.delta(i) / (q2 * p.beta(i));
            let ci = p.c_d / (2.0 * p.r(i));
            ClosedForm::new(
                vec![
                    Condition::greater(format!("q^2 beta{i}/delta{i} > 1"), q2 * rho_i, 1.0),
                    Condition::less(format!("q^2 beta{j}/delta{j} < 1"), q2 * rho_j, 1.0),
                    Condition::less(
                        format!("c_d/(2 r{i}) < 1 - delta{i}/(q^2 beta{i})"),
                        ci,
                        endemic,
                    ),
                    a1,
                    a2,
                ],
                vec![
                    Condition::greater(format!("beta{j}/delta{j} > beta{i}/delta{i}"), rho_j, rho_i),
                    Condition::greater(
                        format!("c_d > 2 r{i} (1 - delta{i}/(q^2 beta{i}))"),
                        p.c_d,
                        2.0 * p.r(i) * endemic,
                    ),
                ],
                vec![
                    Condition::less(format!("delta{j} < q^2 beta{j}"), p.delta(j), q2 * p.beta(j)),
                    Condition::less(
                        format!("c_d < 2 r{i} (1 - delta{i}/(q beta{i}))"),
                        p.c_d,
                        2.0 * p.r(i) * (1.0 - p.delta(i) / (q * p.beta(i))),
                    ),
                ],
            )
        }
        EquilibriumKind::U1S | EquilibriumKind::U2S => {
            let i = kind.strain().unwrap();
            let j = i.other();
            let (rho_i, rho_j) = (p.reproduction_number(i), p.reproduction_number(j));
            ClosedForm::new(
                vec![
                    Condition::greater(format!("beta{i}/delta{i} > beta{j}/delta{j}"), rho_i, rho_j),
                    Condition::less("c_d < 2 r1", p.c_d, 2.0 * p.r1),
                    Condition::less("c_d < 2 r2", p.c_d, 2.0 * p.r2),
                    a1,
                    a2,
                ],
                vec![Condition::less(format!("beta{i}/delta{i} < beta{j}/delta{j}"), rho_i, rho_j)],
                vec![],
            )
        }
    }
}

/// Closed-form verdict for L0 or L1; `None` for LS, which has none.
pub fn closed_form_line(p: &ModelParams, line: &EquilibriumLine) -> Option<ClosedForm> {
    let total = line.infected_total()?;
    let [a1, a2] = assumption4(p);
    let t1 = p.c_d / (2.0 * p.r1);
    let t2 = p.c_d / (2.0 * p.r2);
    let (mut stable, unstable) = match line.kind {
        LineKind::L0 => (
            vec![
                Condition::less("1 - 1/(q R0) < c_d/(2 r1)", total, t1),
                Condition::less("1 - 1/(q R0) < c_d/(2 r2)", total, t2),
            ],
            vec![
                Condition::greater("1 - 1/(q R0) > c_d/(2 r1)", total, t1),
                Condition::greater("1 - 1/(q R0) > c_d/(2 r2)", total, t2),
            ],
        ),
        LineKind::L1 => (
            vec![
                Condition::greater("1 - 1/(q^2 R0) > c_d/(2 r1)", total, t1),
                Condition::greater("1 - 1/(q^2 R0) > c_d/(2 r2)", total, t2),
            ],
            vec![
                Condition::less("1 - 1/(q^2 R0) < c_d/(2 r1)", total, t1),
                Condition::less("1 - 1/(q^2 R0) < c_d/(2 r2)", total, t2),
            ],
        ),
        LineKind::LS => unreachable!(),
    };
    stable.extend([a1, a2]);
    Some(ClosedForm::new(stable, unstable, vec![]))
}

/// Classifies an existing isolated fixed point.
pub fn classify_point(
    p: &ModelParams,
    eq: &Equilibrium,
    zero_tol: f64,
) -> Result<StabilityReport, StabilityError> {
    if !eq.exists {
        return Err(StabilityError::Missing(eq.kind.to_string()));
    }
    let ev = eigenvalues(&jacobian(p, &eq.point))?;
    let (numeric_verdict, zero_modes) = point_verdict(&ev, zero_tol);
    let closed = closed_form_point(p, eq.kind);
    let mut notes = Vec::new();
    let unstable = closed.unstable_if_any.iter().any(|c| c.holds);
    for c in closed.reference_clauses.iter().filter(|c| c.holds) {
        if !unstable {
            notes.push(format!(
                "published instability clause `{}` holds but no derived instability condition does",
                c.label
            ));
        }
    }
    if closed.verdict == ClosedFormVerdict::Stable
        && closed.reference_clauses.iter().any(|c| c.holds)
    {
        notes.push("published instability clause holds together with the stability conditions".into());
    }
    let agreement = verdicts_agree(numeric_verdict, Some(closed.verdict));
    Ok(StabilityReport {
        eigenvalues: ev,
        numeric_verdict,
        zero_modes,
        closed_form: Some(closed),
        agreement,
        numeric_only: false,
        notes,
    })
}

/// Real part of the least stable eigenvalue once the one closest to zero
/// (the line direction) is discarded.
fn off_line_abscissa(ev: &[Complex64; 5]) -> f64 {
    let skip = ev
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.norm().total_cmp(&b.1.norm()))
        .map(|(k, _)| k)
        .unwrap();
    ev.iter()
        .enumerate()
        .filter(|(k, _)| *k != skip)
        .map(|(_, l)| l.re)
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Classifies an existing line by sampling `samples` points along it.
///
/// The line is stable when every sample has exactly one zero mode and four
/// eigenvalues with negative real part, and unstable when any sample has an
/// eigenvalue with positive real part.
pub fn classify_line(
    p: &ModelParams,
    line: &EquilibriumLine,
    samples: usize,
    zero_tol: f64,
) -> Result<StabilityReport, StabilityError> {
    if !line.exists {
        return Err(StabilityError::Missing(line.kind.to_string()));
    }
    let mut worst: Option<([Complex64; 5], usize, f64)> = None;
    let mut any_unstable = false;
    let mut all_stable = true;
    for y1 in line.sample_params(samples.max(1)) {
        let x = line.point_unchecked(y1);
        let ev = eigenvalues(&jacobian(p, &x))?;
        let (verdict, zero_modes) = line_point_verdict(&ev, zero_tol);
        any_unstable |= verdict == NumericVerdict::Unstable;
        all_stable &= verdict == NumericVerdict::Stable;
        let score = off_line_abscissa(&ev);
        if worst.as_ref().is_none_or(|w| score > w.2) {
            worst = Some((ev, zero_modes, score));
        }
    }
    let (eigenvalues, zero_modes, _) = worst.unwrap();
    let numeric_verdict = if any_unstable {
        NumericVerdict::Unstable
    } else if all_stable {
        NumericVerdict::Stable
    } else {
        NumericVerdict::Marginal
    };
    let closed = closed_form_line(p, line);
    let numeric_only = closed.is_none();
    let mut notes = Vec::new();
    if numeric_only {
        notes.push("no closed-form stability criterion for this line; verdict is numeric only".into());
    }
    let agreement = verdicts_agree(numeric_verdict, closed.as_ref().map(|c| c.verdict));
    Ok(StabilityReport {
        eigenvalues,
        numeric_verdict,
        zero_modes,
        closed_form: closed,
        agreement,
        numeric_only,
        notes,
    })
}

/// Checks `J(L1) = diag(q, q, -1, 1, 1) J(L0)` for line-form Jacobians taken
/// at the same `(y1, y2)`.
///
/// The identity holds for every entry except the `z_s` column of the two
/// infection rows, where the L1 entries equal the L0 ones without the factor
/// `q`. Those entries sit in the off-diagonal block of the block-triangular
/// Jacobian and do not affect the spectrum, so they are skipped.
pub fn l1_l0_relation_holds(j_l0: &Matrix5, j_l1: &Matrix5, q: f64, rel_tol: f64) -> bool {
    let scale = [q, q, -1.0, 1.0, 1.0];
    (0..5).all(|row| {
        (0..5).all(|col| {
            if row < 2 && col == 2 {
                return true;
            }
            let want = scale[row] * j_l0[(row, col)];
            let got = j_l1[(row, col)];
            (got - want).abs() <= rel_tol * got.abs().max(want.abs())
        })
    })
}

/// Verifies the L0/L1 Jacobian relation at `samples` points of each existing
/// line. Returns `false` when neither line exists.
pub fn check_l1_l0_relation(p: &ModelParams, lines: &[EquilibriumLine], samples: usize) -> bool {
    let mut checked = 0;
    for line in lines.iter().filter(|l| l.exists && l.kind != LineKind::LS) {
        for y1 in line.sample_params(samples) {
            let x = line.point_unchecked(y1);
            let j0 = line_jacobian(p, &State { z_s: 0.0, ..x });
            let j1 = line_jacobian(p, &State { z_s: 1.0, ..x });
            if !l1_l0_relation_holds(&j0, &j1, p.q, 1e-12) {
                return false;
            }
            checked += 1;
        }
    }
    checked > 0
}
