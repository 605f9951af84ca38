//! Open-loop statistics from linear trajectories.
//!
//! Under the ostensible measure the integrated record is a plain Brownian path,
//! `R(t) ~ N(0, t)`. The unnormalized state from `I/2` is diagonal,
//! `e^{-γt}/2 · diag(e^{√(2γ)R}, e^{-√(2γ)R})`, and its trace
//! `𝒩 = e^{-γt}cosh(√(2γ)R)` reweights ostensible draws to actual ones. No SDE
//! is stepped, so this checks the record convention independently.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{check, Result};
use crate::model::DensityOperator;

use super::ensemble::Moments;
use super::EnsembleSummary;

/// Unnormalized linear-trajectory state at time `t` for record value `r`,
/// starting from the maximally mixed state.
pub fn linear_solution(gamma: f64, t: f64, r: f64) -> Result<DensityOperator> {
    let pre = 0.5 * (-gamma * t).exp();
    let a = (2.0 * gamma).sqrt() * r;
    DensityOperator::unnormalized(pre * a.exp(), pre * (-a).exp(), 0.0, 0.0)
}

/// Weighted estimates at each requested time.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearSample {
    /// `⟨λ_max⟩`, estimated as the ostensible mean of `𝒩·λ_max`.
    pub lambda: EnsembleSummary,
    /// Ostensible mean of `𝒩`; equals 1 by probability conservation.
    pub weight: EnsembleSummary,
}

/// Draws `n` Brownian record paths through `times` (positive, increasing).
pub fn linear_trajectory_sample(
    gamma: f64,
    times: &[f64],
    n: usize,
    seed: u64,
) -> Result<LinearSample> {
    check(gamma > 0.0, "gamma", gamma, "must be positive")?;
    check(n >= 2, "n", n as f64, "need at least two samples")?;
    check(
        !times.is_empty(),
        "times.len",
        0.0,
        "need at least one time",
    )?;
    check(times[0] > 0.0, "t", times[0], "must be positive")?;
    for w in times.windows(2) {
        check(w[1] > w[0], "t", w[1], "times must be increasing")?;
    }
    let s = (2.0 * gamma).sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut lam = Moments::new(times.len());
    let mut wt = Moments::new(times.len());
    let mut lam_row = vec![0.0; times.len()];
    let mut wt_row = vec![0.0; times.len()];
    for _ in 0..n {
        let mut r = 0.0;
        let mut prev = 0.0;
        for (k, &t) in times.iter().enumerate() {
            let z: f64 = rng.sample(StandardNormal);
            r += z * (t - prev).sqrt();
            prev = t;
            let decay = (-gamma * t).exp();
            // 𝒩·λ_max = e^{-γt}(cosh a + |sinh a|)/2 = e^{-γt}e^{|a|}/2.
            lam_row[k] = 0.5 * decay * (s * r.abs()).exp();
            wt_row[k] = decay * (s * r).cosh();
        }
        lam.push(&lam_row);
        wt.push(&wt_row);
    }
    Ok(LinearSample {
        lambda: lam.summary("open-loop-linear".into(), times.to_vec()),
        weight: wt.summary("open-loop-weight".into(), times.to_vec()),
    })
}
