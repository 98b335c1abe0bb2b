//! Seeded self-check of a parameter set: Jacobian against finite
//! differences at random interior points, and vector-field residuals at
//! every enumerated fixed point.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::equilibria::{coexistence_lines, enumerate_isolated, R0_REL_TOL};
use crate::model::{vector_field, ModelParams, State};
use crate::stability::{finite_difference_jacobian, jacobian, LINE_SAMPLES};

pub const FD_STEP: f64 = 1e-6;
pub const JACOBIAN_TOL: f64 = 1e-5;
pub const RESIDUAL_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProbeReport {
    pub seed: u64,
    pub points: usize,
    /// Largest entrywise `|analytic - fd| / max(|analytic|, 1e-3)`.
    pub max_jacobian_error: f64,
    pub fixed_points: usize,
    pub max_residual: f64,
}

impl ProbeReport {
    pub fn passed(&self) -> bool {
        self.max_jacobian_error < JACOBIAN_TOL && self.max_residual < RESIDUAL_TOL
    }
}

/// A point drawn uniformly from the interior of the invariant region.
pub fn random_interior_state<R: Rng>(rng: &mut R) -> State {
    loop {
        let y1: f64 = rng.random_range(0.01..0.99);
        let y2: f64 = rng.random_range(0.01..0.99);
        if y1 + y2 < 0.99 {
            return State::new(
                y1,
                y2,
                rng.random_range(0.01..0.99),
                rng.random_range(0.01..0.99),
                rng.random_range(0.01..0.99),
            );
        }
    }
}

pub fn self_check(p: &ModelParams, seed: u64, points: usize) -> ProbeReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut max_jacobian_error: f64 = 0.0;
    for _ in 0..points {
        let x = random_interior_state(&mut rng);
        let a = jacobian(p, &x);
        let fd = finite_difference_jacobian(p, &x, FD_STEP);
        for (u, v) in a.iter().zip(fd.iter()) {
            max_jacobian_error = max_jacobian_error.max((u - v).abs() / u.abs().max(1e-3));
        }
    }

    let mut fixed: Vec<State> = enumerate_isolated(p)
        .into_iter()
        .filter(|e| e.exists)
        .map(|e| e.point)
        .collect();
    for line in coexistence_lines(p, R0_REL_TOL).iter().filter(|l| l.exists) {
        fixed.extend(line.sample_params(LINE_SAMPLES).into_iter().map(|y1| line.point_unchecked(y1)));
    }
    let max_residual = fixed
        .iter()
        .map(|x| vector_field(p, x).map_or(f64::INFINITY, |f| f.max_norm()))
        .fold(0.0, f64::max);

    ProbeReport {
        seed,
        points,
        max_jacobian_error,
        fixed_points: fixed.len(),
        max_residual,
    }
}
