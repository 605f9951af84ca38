//! Numerical oracles: the Bloch ODE, conditioned stochastic trajectories and
//! the linear-trajectory sampler.

mod ensemble;
mod linear;
mod ode;
mod sme;

pub use ensemble::{ensemble_mean, EnsembleSummary};
pub use linear::{linear_solution, linear_trajectory_sample, LinearSample};
pub use ode::{bloch_rhs, integrate_local_optimal_delayed, integrate_ode};
pub use sme::{kraus_step, simulate_trajectory, sme_step, DelayBuffer, SmeConfig, SmeScheme};

use crate::model::BlochVector;

/// One path on a uniform grid. Deterministic engines leave `record` empty.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryRecord {
    pub seed: u64,
    pub dt: f64,
    pub times: Vec<f64>,
    pub states: Vec<BlochVector>,
    /// Cumulative measurement record `R(t)` on the same grid.
    pub record: Vec<f64>,
}

impl TrajectoryRecord {
    pub fn last(&self) -> Option<(f64, BlochVector)> {
        Some((*self.times.last()?, *self.states.last()?))
    }

    /// State at the grid point nearest `t`.
    pub fn state_at(&self, t: f64) -> Option<BlochVector> {
        let i = grid_index(self.dt, t, self.times.len())?;
        Some(self.states[i])
    }
}

/// Number of steps and the step size that lands exactly on `t_end`.
pub(crate) fn uniform_grid(t_end: f64, dt: f64) -> (usize, f64) {
    let n = ((t_end / dt).round() as usize).max(1);
    (n, t_end / n as f64)
}

pub(crate) fn grid_index(dt: f64, t: f64, len: usize) -> Option<usize> {
    if !(t >= 0.0) || len == 0 {
        return None;
    }
    let i = (t / dt).round() as usize;
    (i < len).then_some(i)
}
