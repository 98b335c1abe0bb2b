//! Fixed-step classical Runge-Kutta integration with projection onto Γ and
//! vector-field-based convergence detection.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{
    in_gamma, vector_field, vector_field_unchecked, Derivative, ModelError, ModelParams, State,
    GAMMA_SLACK,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum IntegratorError {
    #[error("invalid simulation config: {0}")]
    InvalidConfig(String),
    #[error("step size must be positive and finite, got {0}")]
    InvalidStep(f64),
    #[error(transparent)]
    State(#[from] ModelError),
    #[error("Runge-Kutta stage k{stage} is non-finite")]
    NonFiniteStage { stage: usize },
    #[error("integration failed at t = {t}: {source}")]
    AtTime {
        t: f64,
        #[source]
        source: Box<IntegratorError>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    /// Step size.
    pub h: f64,
    /// Integration horizon.
    pub t_max: f64,
    /// Record every n-th step (the initial and final states are always kept).
    pub record_every: usize,
    /// Convergence threshold on the max-norm of the vector field.
    pub conv_eps: f64,
    /// Time span the threshold must hold for.
    pub conv_window: f64,
    /// Clamp each step back onto Γ.
    pub project: bool,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            h: 1e-4,
            t_max: 500.0,
            record_every: 1000,
            conv_eps: 1e-9,
            conv_window: 1.0,
            project: true,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<(), IntegratorError> {
        let bad = |m: &str| Err(IntegratorError::InvalidConfig(m.to_string()));
        if !(self.h > 0.0 && self.h.is_finite()) {
            return bad("h must be positive");
        }
        if !(self.t_max >= self.h && self.t_max.is_finite()) {
            return bad("t_max must be at least h");
        }
        if self.record_every == 0 {
            return bad("record_every must be at least 1");
        }
        if self.conv_eps.is_nan() || self.conv_eps < 0.0 {
            return bad("conv_eps must be non-negative");
        }
        if !(self.conv_window >= 0.0 && self.conv_window.is_finite()) {
            return bad("conv_window must be non-negative");
        }
        Ok(())
    }
}

/// Time-stamped states from one integration run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<State>,
    pub converged_to: Option<State>,
    pub converged_at: Option<f64>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn initial_state(&self) -> Option<&State> {
        self.states.first()
    }

    pub fn final_state(&self) -> Option<&State> {
        self.states.last()
    }

    pub fn final_time(&self) -> Option<f64> {
        self.times.last().copied()
    }

    /// The converged estimate if one was detected, else the last state.
    pub fn terminal_state(&self) -> Option<&State> {
        self.converged_to.as_ref().or_else(|| self.final_state())
    }
}

/// Clamp every coordinate into [0, 1] and rescale `(y1, y2)` onto the
/// simplex when their sum exceeds one.
pub fn project_onto_gamma(x: State) -> State {
    let c = |v: f64| v.clamp(0.0, 1.0);
    let (mut y1, mut y2) = (c(x.y1), c(x.y2));
    let sum = y1 + y2;
    if sum > 1.0 {
        y1 /= sum;
        y2 /= sum;
    }
    State::new(y1, y2, c(x.z_s), c(x.z1), c(x.z2))
}

fn axpy(x: &State, h: f64, k: &Derivative) -> State {
    let a = x.to_array();
    let d = k.to_array();
    State::from_array(std::array::from_fn(|i| a[i] + h * d[i]))
}

fn stage(p: &ModelParams, x: &State, n: usize) -> Result<Derivative, IntegratorError> {
    let k = vector_field_unchecked(p, x);
    if k.to_array().iter().all(|v| v.is_finite()) {
        Ok(k)
    } else {
        Err(IntegratorError::NonFiniteStage { stage: n })
    }
}

/// One RK4 step given the already evaluated first stage.
fn rk4_from_k1(
    p: &ModelParams,
    x: &State,
    k1: &Derivative,
    h: f64,
) -> Result<State, IntegratorError> {
    let k2 = stage(p, &axpy(x, 0.5 * h, k1), 2)?;
    let k3 = stage(p, &axpy(x, 0.5 * h, &k2), 3)?;
    let k4 = stage(p, &axpy(x, h, &k3), 4)?;
    let a = x.to_array();
    let (k1, k2, k3, k4) = (k1.to_array(), k2.to_array(), k3.to_array(), k4.to_array());
    Ok(State::from_array(std::array::from_fn(|i| {
        a[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])
    })))
}

/// Unprojected classical RK4 step. `x` must lie in Γ up to [`GAMMA_SLACK`].
pub fn rk4_step_raw(p: &ModelParams, x: &State, h: f64) -> Result<State, IntegratorError> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(IntegratorError::InvalidStep(h));
    }
    let k1 = vector_field(p, x)?;
    let k1 = if k1.to_array().iter().all(|v| v.is_finite()) {
        k1
    } else {
        return Err(IntegratorError::NonFiniteStage { stage: 1 });
    };
    rk4_from_k1(p, x, &k1, h)
}

/// Classical RK4 step followed by projection onto Γ.
pub fn rk4_step(p: &ModelParams, x: &State, h: f64) -> Result<State, IntegratorError> {
    rk4_step_raw(p, x, h).map(project_onto_gamma)
}

/// Integrates from `x0` until `t_max` or until the vector field stays below
/// `conv_eps` for `conv_window` time units.
pub fn integrate(
    p: &ModelParams,
    x0: &State,
    cfg: &SimConfig,
) -> Result<Trajectory, IntegratorError> {
    cfg.validate()?;
    if !in_gamma(x0, GAMMA_SLACK) {
        return Err(ModelError::OutsideGamma {
            state: *x0,
            slack: GAMMA_SLACK,
        }
        .into());
    }
    let n_steps = ((cfg.t_max / cfg.h) - 1e-9).ceil().max(1.0) as usize;
    let mut traj = Trajectory {
        times: Vec::with_capacity(n_steps / cfg.record_every + 2),
        states: Vec::with_capacity(n_steps / cfg.record_every + 2),
        converged_to: None,
        converged_at: None,
    };
    let mut x = if cfg.project { project_onto_gamma(*x0) } else { *x0 };
    traj.times.push(0.0);
    traj.states.push(x);

    let mut quiet_since: Option<f64> = None;
    let at = |t: f64| move |e: IntegratorError| IntegratorError::AtTime { t, source: Box::new(e) };
    for step in 0..n_steps {
        let t = step as f64 * cfg.h;
        // k1 is the vector field at the current state, so the convergence
        // test costs no extra evaluation.
        let k1 = vector_field(p, &x).map_err(IntegratorError::from).map_err(at(t))?;
        if !k1.to_array().iter().all(|v| v.is_finite()) {
            return Err(at(t)(IntegratorError::NonFiniteStage { stage: 1 }));
        }
        if k1.max_norm() < cfg.conv_eps {
            let since = *quiet_since.get_or_insert(t);
            if t - since >= cfg.conv_window {
                traj.converged_to = Some(x);
                traj.converged_at = Some(t);
                if *traj.times.last().unwrap() < t {
                    traj.times.push(t);
                    traj.states.push(x);
                }
                return Ok(traj);
            }
        } else {
            quiet_since = None;
        }

        let next = rk4_from_k1(p, &x, &k1, cfg.h).map_err(at(t))?;
        x = if cfg.project { project_onto_gamma(next) } else { next };
        let n = step + 1;
        if n % cfg.record_every == 0 || n == n_steps {
            traj.times.push(n as f64 * cfg.h);
            traj.states.push(x);
        }
    }
    Ok(traj)
}

/// Returns the terminal state when the vector field stays below `eps` at
/// every recorded sample of the trailing `window`.
pub fn detect_convergence(
    traj: &Trajectory,
    p: &ModelParams,
    eps: f64,
    window: f64,
) -> Option<State> {
    let t_end = traj.final_time()?;
    if t_end - traj.times[0] < window {
        return None;
    }
    let quiet = traj
        .times
        .iter()
        .zip(&traj.states)
        .rev()
        .take_while(|(t, _)| t_end - **t <= window)
        .all(|(_, x)| vector_field(p, x).is_ok_and(|f| f.max_norm() < eps));
    quiet.then(|| *traj.final_state().unwrap())
}
