//! Test-side oracles. Nothing here calls into the algorithms under test:
//! the vector field, derivatives, root finder and stability conditions are
//! written out again from the model equations.

#![allow(dead_code)]

use bivirus_core::{EquilibriumKind, ModelParams};
use nalgebra::{Matrix3, Vector3};
use rand::Rng;

pub type Vec5 = [f64; 5];

/// `(y1, y2, z_s, z1, z2)` derivative, with the contact factors written as
/// `1 - (1 - q) z`.
pub fn field(p: &ModelParams, x: Vec5) -> Vec5 {
    let [y1, y2, zs, z1, z2] = x;
    let s = 1.0 - y1 - y2;
    let healthy = 1.0 - (1.0 - p.q) * zs;
    [
        y1 * (p.beta1 * s * healthy * (1.0 - (1.0 - p.q) * z1) - p.delta1),
        y2 * (p.beta2 * s * healthy * (1.0 - (1.0 - p.q) * z2) - p.delta2),
        zs * (1.0 - zs) * (2.0 * p.r1 * y1 + 2.0 * p.r2 * y2 - p.c_d),
        z1 * (1.0 - z1) * (p.c1 - p.c_d),
        z2 * (1.0 - z2) * (p.c2 - p.c_d),
    ]
}

pub fn max_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Central differences of [`field`]; `out[row][col] = d f_row / d x_col`.
pub fn central_jacobian(p: &ModelParams, x: Vec5, step: f64) -> [[f64; 5]; 5] {
    let mut out = [[0.0; 5]; 5];
    for col in 0..5 {
        let mut plus = x;
        let mut minus = x;
        plus[col] += step;
        minus[col] -= step;
        let (fp, fm) = (field(p, plus), field(p, minus));
        for row in 0..5 {
            out[row][col] = (fp[row] - fm[row]) / (2.0 * step);
        }
    }
    out
}

pub fn in_gamma(x: Vec5, tol: f64) -> bool {
    x.iter().all(|v| *v >= -tol && *v <= 1.0 + tol) && x[0] + x[1] <= 1.0 + tol
}

/// Parameters satisfying every standing assumption (`r1 < r2`, `c_i > c_d`).
pub fn random_params<R: Rng>(rng: &mut R) -> ModelParams {
    let r1 = rng.random_range(0.05..1.0);
    let r2 = r1 + rng.random_range(0.05..1.0);
    let c_d = rng.random_range(0.05..1.5);
    ModelParams {
        beta1: rng.random_range(0.2..3.0),
        beta2: rng.random_range(0.2..3.0),
        delta1: rng.random_range(0.05..1.0),
        delta2: rng.random_range(0.05..1.0),
        r1,
        r2,
        c1: c_d + rng.random_range(0.05..1.0),
        c2: c_d + rng.random_range(0.05..1.0),
        c_d,
        q: rng.random_range(0.05..0.95),
    }
}

/// Like [`random_params`] but with `beta2 / delta2 = beta1 / delta1`, so the
/// lines of fixed points can exist.
pub fn random_equal_r0_params<R: Rng>(rng: &mut R) -> ModelParams {
    let mut p = random_params(rng);
    p.beta1 = p.delta1 * rng.random_range(1.0..8.0) / p.q;
    p.beta2 = p.delta2 * p.beta1 / p.delta1;
    p
}

pub fn random_state<R: Rng>(rng: &mut R) -> Vec5 {
    let a: f64 = rng.random();
    let b: f64 = rng.random();
    let (y1, y2) = if a + b <= 1.0 { (a, b) } else { (1.0 - a, 1.0 - b) };
    [y1, y2, rng.random(), rng.random(), rng.random()]
}

pub fn random_interior_state<R: Rng>(rng: &mut R) -> Vec5 {
    loop {
        let x: Vec5 = std::array::from_fn(|_| rng.random_range(0.01..0.99));
        if x[0] + x[1] < 0.99 {
            return x;
        }
    }
}

/// Levenberg-Marquardt on the `z1 = z2 = 1` slice, unknowns `(y1, y2, z_s)`.
/// Returns a root with residual below `1e-14`, if one is reached.
pub fn slice_root(p: &ModelParams, start: [f64; 3]) -> Option<[f64; 3]> {
    let f = |u: Vector3<f64>| {
        let v = field(p, [u[0], u[1], u[2], 1.0, 1.0]);
        Vector3::new(v[0], v[1], v[2])
    };
    let jac = |u: Vector3<f64>| {
        let mut m = Matrix3::zeros();
        for c in 0..3 {
            let h = 1e-7;
            let mut a = u;
            let mut b = u;
            a[c] += h;
            b[c] -= h;
            m.set_column(c, &((f(a) - f(b)) / (2.0 * h)));
        }
        m
    };
    let mut u = Vector3::from(start);
    let mut lambda = 1e-3;
    let mut r = f(u);
    for _ in 0..500 {
        if r.amax() < 1e-14 {
            return Some([u[0], u[1], u[2]]);
        }
        let j = jac(u);
        let jt = j.transpose();
        let a = jt * j + Matrix3::identity() * lambda;
        let Some(step) = a.lu().solve(&(-jt * r)) else {
            lambda *= 10.0;
            continue;
        };
        let trial = (u + step).map(|v| v.clamp(-0.5, 1.5));
        let rt = f(trial);
        if rt.norm() < r.norm() {
            u = trial;
            r = rt;
            lambda = (lambda / 3.0).max(1e-15);
        } else {
            lambda *= 4.0;
            if lambda > 1e12 {
                break;
            }
        }
    }
    (r.amax() < 1e-14).then(|| [u[0], u[1], u[2]])
}

/// Verdict from the explicit eigenvalues at a boundary fixed point.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Expected {
    Stable,
    Unstable,
}

/// Expected stability of an isolated fixed point, together with the
/// smallest margin among the inequalities that decided it. `None` when the
/// inequalities do not settle the question.
///
/// At `DFE0`, `DFE1`, `U_i0` and `U_i1` the Jacobian is block triangular:
/// the eigenvalues are the diagonal entries `h_k` of the absent strain and
/// of `z_s`, `-(c_i - c_d)` for `z1`, `z2`, and a negative one for the
/// present strain. At `U_iS` the sign of `h_j` decides.
pub fn expected_stability(p: &ModelParams, kind: EquilibriumKind) -> Option<(Expected, f64)> {
    use EquilibriumKind::*;
    let q = p.q;
    let big_r = [p.beta1 / p.delta1, p.beta2 / p.delta2];
    let beta = [p.beta1, p.beta2];
    let delta = [p.delta1, p.delta2];
    let r = [p.r1, p.r2];
    let mut negatives: Vec<f64> = vec![p.c1 - p.c_d, p.c2 - p.c_d];
    let mut positives: Vec<f64> = Vec::new();
    match kind {
        Dfe0 => {
            for k in 0..2 {
                negatives.push(delta[k] - q * beta[k]);
            }
            negatives.push(p.c_d);
        }
        Dfe1 => positives.push(p.c_d),
        U10 | U20 | U11 | U21 => {
            let (i, j) = if matches!(kind, U10 | U11) { (0, 1) } else { (1, 0) };
            let pinned_high = matches!(kind, U11 | U21);
            let qq = if pinned_high { q * q } else { q };
            let y = 1.0 - delta[i] / (qq * beta[i]);
            // eigenvalue of y_j: delta_j (R_j / R_i - 1)
            let hj = delta[j] * (big_r[j] / big_r[i] - 1.0);
            // eigenvalue of z_s: h_s at z_s = 0, -h_s at z_s = 1
            let hs = 2.0 * r[i] * y - p.c_d;
            let zs_eig = if pinned_high { -hs } else { hs };
            for e in [hj, zs_eig] {
                if e < 0.0 {
                    negatives.push(-e);
                } else {
                    positives.push(e);
                }
            }
        }
        U1S | U2S => {
            let (i, j) = if kind == U1S { (0, 1) } else { (1, 0) };
            let hj = delta[j] * (big_r[j] / big_r[i] - 1.0);
            if hj < 0.0 {
                negatives.push(-hj);
            } else {
                positives.push(hj);
            }
        }
    }
    if let Some(m) = positives.iter().copied().reduce(f64::max) {
        return Some((Expected::Unstable, m));
    }
    let m = negatives.iter().copied().fold(f64::INFINITY, f64::min);
    (m > 0.0).then_some((Expected::Stable, m))
}

/// Margins of the standing hypotheses of the stability result for `kind`:
/// `c_i > c_d` everywhere, plus `c_d < 2 r_k` for both `k` at the
/// partial-distancing points.
pub fn hypothesis_margins(p: &ModelParams, kind: EquilibriumKind) -> Vec<f64> {
    let mut m = vec![p.c1 - p.c_d, p.c2 - p.c_d];
    if matches!(kind, EquilibriumKind::U1S | EquilibriumKind::U2S) {
        m.extend([2.0 * p.r1 - p.c_d, 2.0 * p.r2 - p.c_d]);
    }
    m
}
