//! Conditioned trajectories of the continuously monitored qubit with Markovian
//! feedback `F dR(t)`, `F = ΩJ_y`.
//!
//! The record increment is `dR = 2√(2γ)⟨J_z⟩dt + dW/√η = √(2γ)z dt + dW/√η`.
//! Each step applies the measurement, then any dephasing or decay, then the
//! feedback rotation `exp(-iΩ dR J_y)` (exact, not linearized).
//!
//! Two measurement updates are available. [`SmeScheme::EulerMaruyama`] is the
//! Itô step of the stochastic master equation followed by renormalization.
//! [`SmeScheme::Kraus`] samples the record increment from its exact
//! distribution over the step (a two-component Gaussian mixture) and applies
//! the matching measurement operator, which keeps the state positive for any
//! step size.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{check, Result, RspError};
use crate::model::{BlochVector, DensityOperator, FeedbackLaw, ScenarioParams};

use super::{uniform_grid, TrajectoryRecord};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SmeScheme {
    #[default]
    Kraus,
    EulerMaruyama,
}

/// Step control for the trajectory simulator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmeConfig {
    /// Output and record grid spacing.
    pub dt: f64,
    /// Internal steps per grid step.
    pub substeps: usize,
    /// When set, steps are shortened further so that `Ω²h` stays below this
    /// bound. Ignored when a delay is present, since the delay line needs a
    /// uniform step.
    pub stiffness_bound: Option<f64>,
    pub scheme: SmeScheme,
}

impl Default for SmeConfig {
    fn default() -> Self {
        Self {
            dt: 1e-3,
            substeps: 4,
            stiffness_bound: Some(0.01),
            scheme: SmeScheme::Kraus,
        }
    }
}

impl SmeConfig {
    /// One internal step per grid step, no refinement.
    pub fn plain(dt: f64, scheme: SmeScheme) -> Self {
        Self {
            dt,
            substeps: 1,
            stiffness_bound: None,
            scheme,
        }
    }

    pub fn with_dt(mut self, dt: f64) -> Self {
        self.dt = dt;
        self
    }

    pub fn validate(&self) -> Result<()> {
        check(
            self.dt > 0.0 && self.dt.is_finite(),
            "dt",
            self.dt,
            "must be positive",
        )?;
        check(
            self.substeps >= 1,
            "substeps",
            self.substeps as f64,
            "must be at least 1",
        )?;
        if let Some(bound) = self.stiffness_bound {
            check(bound > 0.0, "stiffness_bound", bound, "must be positive")?;
        }
        Ok(())
    }
}

/// Delay line of record increments; starts full of zeros so nothing is actuated
/// before the first real signal arrives.
#[derive(Debug, Clone, PartialEq)]
pub struct DelayBuffer {
    slots: Vec<f64>,
    head: usize,
}

impl DelayBuffer {
    pub fn new(depth: usize) -> Self {
        Self {
            slots: vec![0.0; depth],
            head: 0,
        }
    }

    /// Buffer for delay `tau` on steps of `dt`: depth `round(τ/dt)`.
    pub fn for_delay(tau: f64, dt: f64) -> Self {
        Self::new((tau / dt).round() as usize)
    }

    pub fn depth(&self) -> usize {
        self.slots.len()
    }

    /// Stores `dr` and returns the increment recorded `depth` pushes ago.
    pub fn push(&mut self, dr: f64) -> f64 {
        if self.slots.is_empty() {
            return dr;
        }
        let out = std::mem::replace(&mut self.slots[self.head], dr);
        self.head = (self.head + 1) % self.slots.len();
        out
    }
}

fn rotate(b: BlochVector, theta: f64) -> BlochVector {
    let (s, c) = theta.sin_cos();
    BlochVector::new_unchecked(b.x * c + b.z * s, b.y, b.z * c - b.x * s)
}

fn rotate_density(rho: &DensityOperator, theta: f64) -> DensityOperator {
    let b = rotate(rho.bloch_unchecked(), theta);
    DensityOperator::from_bloch_unchecked(b)
}

/// One Euler–Maruyama step of the conditioned master equation,
/// `dρ = 2γ dt 𝒟[J_z]ρ + √(2γη) dW ℋ[J_z]ρ`, then the feedback rotation by
/// `omega·dR` about y. Returns the new state and `dR`.
pub fn sme_step(
    rho: &DensityOperator,
    omega: f64,
    gamma: f64,
    eta: f64,
    dt: f64,
    dw: f64,
) -> Result<(DensityOperator, f64)> {
    let b = crate::model::density_to_bloch(rho)?;
    let (b, dr) = em_measure(b, gamma, eta, dt, dw);
    let next = rotate_density(&DensityOperator::from_bloch_unchecked(b), omega * dr);
    let (lo, _) = next.eigenvalues();
    if lo < -crate::model::STATE_TOL {
        return Err(RspError::StepSize {
            t: f64::NAN,
            eigenvalue: lo,
        });
    }
    Ok((next, dr))
}

// Itô update in Bloch form: 𝒟 shrinks x, y at rate γ and leaves z alone;
// ℋ gives dz = √(2γη)(1 - z²)dW, dx = -√(2γη)xz dW. Renormalization is
// implicit because the trace is carried exactly.
fn em_measure(b: BlochVector, gamma: f64, eta: f64, dt: f64, dw: f64) -> (BlochVector, f64) {
    let k = (2.0 * gamma * eta).sqrt() * dw;
    let decay = 1.0 - gamma * dt;
    let dr = (2.0 * gamma).sqrt() * b.z * dt + dw / eta.sqrt();
    let next = BlochVector::new_unchecked(
        b.x * decay - b.x * b.z * k,
        b.y * decay - b.y * b.z * k,
        b.z + (1.0 - b.z * b.z) * k,
    );
    (next, dr)
}

/// Exact measurement over a step of length `dt` given the record increment:
/// `ρ₀₀ ∝ e^{a}`, `ρ₁₁ ∝ e^{-a}` with `a = √(2γ)η dR`, the coherences kept,
/// then the undetected fraction dephases x and y by `e^{-γ(1-η)dt}`.
pub fn kraus_step(b: BlochVector, gamma: f64, eta: f64, dt: f64, dr: f64) -> BlochVector {
    let a = (2.0 * gamma).sqrt() * eta * dr;
    // Divide through by cosh a to stay finite for large |a|.
    let th = a.tanh();
    let norm = 1.0 + b.z * th;
    let sech = 1.0 / a.cosh();
    let lost = (-gamma * (1.0 - eta) * dt).exp();
    BlochVector::new_unchecked(
        b.x * sech / norm * lost,
        b.y * sech / norm * lost,
        (th + b.z) / norm,
    )
}

/// Record increment drawn from its exact law over a step: the ±z branch with
/// probability `(1 ± z)/2`, then `±√(2γ)dt + N(0, dt)/√η`.
fn sample_record(rng: &mut ChaCha8Rng, z: f64, gamma: f64, eta: f64, dt: f64) -> f64 {
    let u: f64 = rng.random();
    let n: f64 = rng.sample(StandardNormal);
    let sign = if u < 0.5 * (1.0 + z) { 1.0 } else { -1.0 };
    sign * (2.0 * gamma).sqrt() * dt + n * (dt / eta).sqrt()
}

/// Exact dephasing and decay channel over `h`.
fn noise_channel(b: BlochVector, p: &ScenarioParams, h: f64) -> BlochVector {
    if p.gamma_iso == 0.0 && p.gamma_d == 0.0 {
        return b;
    }
    let transverse = (-(4.0 * p.gamma_iso + 0.5 * p.gamma_d) * h).exp();
    let k = 4.0 * p.gamma_iso + p.gamma_d;
    let z_ss = -p.gamma_d / k;
    BlochVector::new_unchecked(
        b.x * transverse,
        b.y * transverse,
        z_ss + (b.z - z_ss) * (-k * h).exp(),
    )
}

/// Path state between internal steps.
struct Stepper<'a> {
    p: &'a ScenarioParams,
    cfg: &'a SmeConfig,
    rng: ChaCha8Rng,
    buffer: DelayBuffer,
    b: BlochVector,
    record: f64,
    feedback: bool,
}

impl Stepper<'_> {
    fn step(&mut self, t: f64, h: f64, omega: f64) -> Result<()> {
        let p = self.p;
        let (b, dr) = match self.cfg.scheme {
            SmeScheme::Kraus => {
                let dr = sample_record(&mut self.rng, self.b.z, p.gamma, p.eta, h);
                (kraus_step(self.b, p.gamma, p.eta, h, dr), dr)
            }
            SmeScheme::EulerMaruyama => {
                let n: f64 = self.rng.sample(StandardNormal);
                em_measure(self.b, p.gamma, p.eta, h, n * h.sqrt())
            }
        };
        let mut b = noise_channel(b, p, h);
        let actuated = self.buffer.push(dr);
        if self.feedback {
            b = rotate(b, omega * actuated);
        }
        if self.cfg.scheme == SmeScheme::EulerMaruyama {
            let eigenvalue = 0.5 * (1.0 - b.length());
            if !(eigenvalue >= -0.5 * p.bloch_tol) {
                return Err(RspError::StepSize {
                    t: t + h,
                    eigenvalue,
                });
            }
        }
        self.b = b;
        self.record += dr;
        Ok(())
    }

    /// Advances one internal step of nominal length `h`, refining it when the
    /// stiffness bound applies.
    fn advance(&mut self, t: f64, h: f64, refine: Option<f64>) -> Result<()> {
        let Some(bound) = refine else {
            let omega = self.omega(t)?;
            return self.step(t, h, omega);
        };
        let mut elapsed = 0.0;
        while h - elapsed > 1e-12 * h {
            let omega = self.omega(t + elapsed)?;
            let w2 = omega * omega;
            let remaining = h - elapsed;
            let hs = if w2 * remaining > bound {
                bound / w2
            } else {
                remaining
            };
            self.step(t + elapsed, hs, omega)?;
            elapsed += hs;
        }
        Ok(())
    }

    fn omega(&self, t: f64) -> Result<f64> {
        if self.feedback {
            self.p.omega(t, self.b.x)
        } else {
            Ok(0.0)
        }
    }
}

/// Simulates one conditioned path from the maximally mixed state, sampling
/// the state and the cumulative record at every grid point of spacing
/// `cfg.dt`. Identical inputs give bit-identical output.
pub fn simulate_trajectory(
    p: &ScenarioParams,
    cfg: &SmeConfig,
    seed: u64,
    t_end: f64,
) -> Result<TrajectoryRecord> {
    let mut times = Vec::new();
    let mut states = Vec::new();
    let mut record = Vec::new();
    let dt = run_path(p, cfg, seed, t_end, |t, b, r| {
        times.push(t);
        states.push(b);
        record.push(r);
    })?;
    Ok(TrajectoryRecord {
        seed,
        dt,
        times,
        states,
        record,
    })
}

/// Drives one path and hands `(t, state, R)` at each grid point to `visit`.
/// Returns the grid spacing actually used.
pub(crate) fn run_path(
    p: &ScenarioParams,
    cfg: &SmeConfig,
    seed: u64,
    t_end: f64,
    mut visit: impl FnMut(f64, BlochVector, f64),
) -> Result<f64> {
    p.validate()?;
    cfg.validate()?;
    check(t_end > 0.0, "t_end", t_end, "must be positive")?;
    let (n, dt) = uniform_grid(t_end, cfg.dt);
    let h = dt / cfg.substeps as f64;
    let delayed = p.tau > 0.0;
    let refine = if delayed { None } else { cfg.stiffness_bound };
    let mut s = Stepper {
        p,
        cfg,
        rng: ChaCha8Rng::seed_from_u64(seed),
        buffer: DelayBuffer::for_delay(p.tau, h),
        b: BlochVector::ORIGIN,
        record: 0.0,
        feedback: p.law != FeedbackLaw::OpenLoop,
    };
    visit(0.0, s.b, 0.0);
    for i in 0..n {
        let t0 = i as f64 * dt;
        for j in 0..cfg.substeps {
            s.advance(t0 + j as f64 * h, h, refine)?;
        }
        let t = (i + 1) as f64 * dt;
        s.b.check(p.bloch_tol).map_err(|_| RspError::NonPhysical {
            scenario: p.law.name().to_string(),
            t,
            length: s.b.length(),
            tol: p.bloch_tol,
        })?;
        visit(t, s.b, s.record);
    }
    Ok(dt)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{bloch_to_density, DensityOperator};

    #[test]
    fn qnd_eigenstates_are_fixed_points() {
        for z in [1.0, -1.0] {
            let rho = bloch_to_density(BlochVector::new(0.0, 0.0, z).unwrap()).unwrap();
            for dw in [-0.3, 0.0, 0.05, 1.7] {
                let (next, dr) = sme_step(&rho, 0.0, 1.0, 1.0, 1e-3, dw).unwrap();
                assert_eq!(next, rho);
                assert!((dr - (z * 2f64.sqrt() * 1e-3 + dw)).abs() < 1e-15);
                let b = kraus_step(BlochVector::new(0.0, 0.0, z).unwrap(), 1.0, 1.0, 1e-3, dw);
                assert_eq!(b, BlochVector::new(0.0, 0.0, z).unwrap());
            }
        }
    }

    #[test]
    fn mixed_state_without_signal_is_unchanged() {
        let (next, dr) =
            sme_step(&DensityOperator::MAXIMALLY_MIXED, 0.0, 1.0, 1.0, 1e-3, 0.0).unwrap();
        assert_eq!(next, DensityOperator::MAXIMALLY_MIXED);
        assert_eq!(dr, 0.0);
    }

    #[test]
    fn record_variance_from_mixed_state() {
        let dt: f64 = 1e-3;
        let n = 10_000;
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut samples = Vec::with_capacity(n);
        for _ in 0..n {
            let dw: f64 = rng.sample::<f64, _>(StandardNormal) * dt.sqrt();
            let (_, dr) =
                sme_step(&DensityOperator::MAXIMALLY_MIXED, 0.0, 1.0, 1.0, dt, dw).unwrap();
            samples.push(dr * dr);
        }
        let mean = samples.iter().sum::<f64>() / n as f64;
        let var = samples.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        let se = (var / n as f64).sqrt();
        assert!((mean - dt).abs() < 3.0 * se, "{mean} vs {dt} ± {se}");
    }

    #[test]
    fn trace_is_preserved() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut rho = DensityOperator::MAXIMALLY_MIXED;
        for _ in 0..2000 {
            let dw: f64 = rng.sample::<f64, _>(StandardNormal) * 1e-2;
            let (next, _) = sme_step(&rho, 0.8, 1.0, 0.9, 1e-4, dw).unwrap();
            assert!((next.trace() - 1.0).abs() < 1e-12);
            rho = next;
        }
    }

    #[test]
    fn large_euler_step_reports_step_size() {
        let rho = bloch_to_density(BlochVector::new(0.0, 0.0, 0.5).unwrap()).unwrap();
        let err = sme_step(&rho, 0.0, 1.0, 1.0, 0.5, 3.0).unwrap_err();
        assert!(matches!(err, RspError::StepSize { .. }));
    }

    #[test]
    fn kraus_step_stays_in_the_ball() {
        let b = BlochVector::new(0.6, -0.3, 0.7).unwrap();
        for dr in [-50.0, -1.0, 0.0, 0.3, 800.0] {
            let next = kraus_step(b, 1.0, 0.7, 0.1, dr);
            assert!(next.length() <= 1.0 + 1e-12, "{next:?}");
        }
    }

    #[test]
    fn delay_buffer_shifts_by_depth() {
        let mut buf = DelayBuffer::for_delay(0.05, 0.01);
        assert_eq!(buf.depth(), 5);
        let out: Vec<f64> = (1..=8).map(|i| buf.push(i as f64)).collect();
        assert_eq!(out, [0.0, 0.0, 0.0, 0.0, 0.0, 1.0, 2.0, 3.0]);
        let mut none = DelayBuffer::new(0);
        assert_eq!(none.push(4.5), 4.5);
    }

    #[test]
    fn trajectories_are_reproducible() {
        let p = ScenarioParams::default();
        let cfg = SmeConfig::default();
        let a = simulate_trajectory(&p, &cfg, 42, 0.5).unwrap();
        let b = simulate_trajectory(&p, &cfg, 42, 0.5).unwrap();
        assert_eq!(a, b);
        let c = simulate_trajectory(&p, &cfg, 43, 0.5).unwrap();
        assert_ne!(a.record, c.record);
    }

    #[test]
    fn capped_ideal_path_stays_in_the_ball() {
        let p = ScenarioParams::default();
        let rec =
            simulate_trajectory(&p, &SmeConfig::plain(1e-3, SmeScheme::Kraus), 1, 1.0).unwrap();
        assert_eq!(rec.times.len(), 1001);
        assert!(rec.states.iter().all(|b| b.length() <= 1.0 + p.bloch_tol));
    }

    #[test]
    fn open_loop_eigenvalue_in_range() {
        let p = ScenarioParams::new(FeedbackLaw::OpenLoop);
        for seed in 0..20 {
            let rec = simulate_trajectory(&p, &SmeConfig::default(), seed, 1.0).unwrap();
            let lam = 0.5 * (1.0 + rec.last().unwrap().1.length());
            assert!((0.5..=1.0 + 1e-12).contains(&lam));
            assert_eq!(rec.last().unwrap().1.x, 0.0);
        }
    }

    #[test]
    fn euler_scheme_runs_with_small_steps() {
        let p = ScenarioParams::new(FeedbackLaw::Constant { alpha: 1.0 });
        let rec = simulate_trajectory(
            &p,
            &SmeConfig::plain(1e-4, SmeScheme::EulerMaruyama),
            9,
            0.2,
        );
        assert!(rec.is_ok());
    }
}
