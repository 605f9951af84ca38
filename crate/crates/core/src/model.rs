//! State representations, physical parameters and the feedback-law catalog.
//!
//! Angular momentum convention: `J_z = σ_z/2`, `J_y = σ_y/2`. This is the only
//! choice under which the linear-trajectory solution
//! `exp(-4γJ_z²t) exp(2√(2γ)J_z R) I/2` carries the scalar prefactor `e^{-γt}`
//! (it needs `J_z² = I/4`). A state is `ρ = (I + xσ_x + yσ_y + zσ_z)/2`.
//!
//! Times are in units of `1/γ` throughout; `γ` defaults to 1.

use std::fmt;
use std::str::FromStr;

use crate::error::{check, Result, RspError};
use crate::special::erf;

/// Default slack on `‖b‖ ≤ 1`.
pub const DEFAULT_BLOCH_TOL: f64 = 1e-9;

/// Tolerance on the trace and eigenvalues of a normalized density operator.
pub const STATE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct BlochVector {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl BlochVector {
    pub const ORIGIN: BlochVector = BlochVector {
        x: 0.0,
        y: 0.0,
        z: 0.0,
    };

    /// Validated constructor using [`DEFAULT_BLOCH_TOL`].
    pub fn new(x: f64, y: f64, z: f64) -> Result<Self> {
        Self::with_tol(x, y, z, DEFAULT_BLOCH_TOL)
    }

    pub fn with_tol(x: f64, y: f64, z: f64, tol: f64) -> Result<Self> {
        let b = Self::new_unchecked(x, y, z);
        b.check(tol)?;
        Ok(b)
    }

    pub const fn new_unchecked(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn length(&self) -> f64 {
        (self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }

    pub fn check(&self, tol: f64) -> Result<()> {
        let length = self.length();
        if length.is_finite() && length <= 1.0 + tol {
            Ok(())
        } else {
            Err(RspError::OutsideBlochBall { length, tol })
        }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Normalization {
    Normalized,
    /// Linear-trajectory state; the trace is the norm `𝒩`.
    Unnormalized,
}

/// A 2×2 Hermitian operator stored as its diagonal and the upper off-diagonal
/// element `ρ₀₁ = re + i·im` (basis `|+z⟩, |-z⟩`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityOperator {
    pub rho_00: f64,
    pub rho_11: f64,
    pub re_01: f64,
    pub im_01: f64,
    pub normalization: Normalization,
}

impl DensityOperator {
    pub const MAXIMALLY_MIXED: DensityOperator = DensityOperator {
        rho_00: 0.5,
        rho_11: 0.5,
        re_01: 0.0,
        im_01: 0.0,
        normalization: Normalization::Normalized,
    };

    /// Normalized state from matrix elements; rejects a trace away from one or a
    /// negative eigenvalue.
    pub fn normalized(rho_00: f64, rho_11: f64, re_01: f64, im_01: f64) -> Result<Self> {
        let rho = Self {
            rho_00,
            rho_11,
            re_01,
            im_01,
            normalization: Normalization::Normalized,
        };
        rho.validate()?;
        Ok(rho)
    }

    /// Unnormalized (linear-trajectory) state; only requires a positive trace.
    pub fn unnormalized(rho_00: f64, rho_11: f64, re_01: f64, im_01: f64) -> Result<Self> {
        let rho = Self {
            rho_00,
            rho_11,
            re_01,
            im_01,
            normalization: Normalization::Unnormalized,
        };
        rho.validate()?;
        Ok(rho)
    }

    pub fn validate(&self) -> Result<()> {
        let vals = [self.rho_00, self.rho_11, self.re_01, self.im_01];
        if vals.iter().any(|v| !v.is_finite()) {
            return Err(RspError::InvalidState("non-finite matrix element"));
        }
        match self.normalization {
            Normalization::Normalized => {
                if (self.trace() - 1.0).abs() > STATE_TOL {
                    return Err(RspError::InvalidState("trace differs from 1"));
                }
                let (lo, _) = self.eigenvalues();
                if lo < -STATE_TOL {
                    return Err(RspError::InvalidState("negative eigenvalue"));
                }
            }
            Normalization::Unnormalized => {
                if self.trace() <= 0.0 {
                    return Err(RspError::InvalidState("non-positive norm"));
                }
            }
        }
        Ok(())
    }

    pub fn trace(&self) -> f64 {
        self.rho_00 + self.rho_11
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> (f64, f64) {
        let half_trace = 0.5 * self.trace();
        let half_gap = 0.5 * (self.rho_00 - self.rho_11);
        let r = (half_gap * half_gap + self.re_01 * self.re_01 + self.im_01 * self.im_01).sqrt();
        (half_trace - r, half_trace + r)
    }

    /// Divides by the trace, producing a normalized state.
    pub fn normalize(&self) -> Result<Self> {
        let tr = self.trace();
        if !(tr > 0.0) || !tr.is_finite() {
            return Err(RspError::InvalidState(
                "cannot normalize: non-positive trace",
            ));
        }
        Ok(Self {
            rho_00: self.rho_00 / tr,
            rho_11: self.rho_11 / tr,
            re_01: self.re_01 / tr,
            im_01: self.im_01 / tr,
            normalization: Normalization::Normalized,
        })
    }

    /// Bloch components without validation (the operator is assumed normalized).
    pub(crate) fn bloch_unchecked(&self) -> BlochVector {
        BlochVector {
            x: 2.0 * self.re_01,
            y: -2.0 * self.im_01,
            z: self.rho_00 - self.rho_11,
        }
    }

    pub(crate) fn from_bloch_unchecked(b: BlochVector) -> Self {
        Self {
            rho_00: 0.5 * (1.0 + b.z),
            rho_11: 0.5 * (1.0 - b.z),
            re_01: 0.5 * b.x,
            im_01: -0.5 * b.y,
            normalization: Normalization::Normalized,
        }
    }
}

/// `ρ = (I + b·σ)/2`.
pub fn bloch_to_density(b: BlochVector) -> Result<DensityOperator> {
    bloch_to_density_with_tol(b, DEFAULT_BLOCH_TOL)
}

pub fn bloch_to_density_with_tol(b: BlochVector, tol: f64) -> Result<DensityOperator> {
    b.check(tol)?;
    Ok(DensityOperator::from_bloch_unchecked(b))
}

pub fn density_to_bloch(rho: &DensityOperator) -> Result<BlochVector> {
    if rho.normalization != Normalization::Normalized {
        return Err(RspError::InvalidState("expected a normalized operator"));
    }
    rho.validate()?;
    Ok(rho.bloch_unchecked())
}

/// Larger eigenvalue of a normalized state; `2λ_max - 1` is the Bloch length.
pub fn lambda_max(rho: &DensityOperator) -> Result<f64> {
    if rho.normalization != Normalization::Normalized {
        return Err(RspError::InvalidState(
            "lambda_max needs a normalized operator",
        ));
    }
    rho.validate()?;
    Ok(rho.eigenvalues().1)
}

/// Tabulated feedback strength `Ω(t, x)`, bilinear between nodes and clamped at
/// the edges. A single x node makes it a pure time schedule.
#[derive(Debug, Clone, PartialEq)]
pub struct Schedule {
    times: Vec<f64>,
    xs: Vec<f64>,
    /// Row-major, `values[i * xs.len() + j] = Ω(times[i], xs[j])`.
    values: Vec<f64>,
    omega_max: f64,
}

impl Schedule {
    pub fn new(times: Vec<f64>, xs: Vec<f64>, values: Vec<f64>, omega_max: f64) -> Result<Self> {
        check(omega_max > 0.0, "omega_max", omega_max, "must be positive")?;
        check(
            !times.is_empty(),
            "times.len",
            0.0,
            "need at least one node",
        )?;
        check(!xs.is_empty(), "xs.len", 0.0, "need at least one node")?;
        check(
            values.len() == times.len() * xs.len(),
            "values.len",
            values.len() as f64,
            "must equal times.len * xs.len",
        )?;
        for axis in [&times, &xs] {
            for w in axis.windows(2) {
                check(
                    w[1] > w[0],
                    "node",
                    w[1],
                    "axes must be strictly increasing",
                )?;
            }
        }
        if let Some(bad) = values
            .iter()
            .chain(&times)
            .chain(&xs)
            .find(|v| !v.is_finite())
        {
            return Err(RspError::InvalidParameter {
                name: "schedule",
                value: *bad,
                reason: "entries must be finite",
            });
        }
        Ok(Self {
            times,
            xs,
            values,
            omega_max,
        })
    }

    /// Time-only schedule.
    pub fn from_times(times: Vec<f64>, values: Vec<f64>, omega_max: f64) -> Result<Self> {
        Self::new(times, vec![0.0], values, omega_max)
    }

    pub fn omega_max(&self) -> f64 {
        self.omega_max
    }

    pub fn eval(&self, t: f64, x: f64) -> f64 {
        let (i0, i1, wt) = bracket(&self.times, t);
        let (j0, j1, wx) = bracket(&self.xs, x);
        let nx = self.xs.len();
        let v = |i: usize, j: usize| self.values[i * nx + j];
        let lo = v(i0, j0) * (1.0 - wx) + v(i0, j1) * wx;
        let hi = v(i1, j0) * (1.0 - wx) + v(i1, j1) * wx;
        let omega = lo * (1.0 - wt) + hi * wt;
        omega.clamp(-self.omega_max, self.omega_max)
    }
}

fn bracket(nodes: &[f64], v: f64) -> (usize, usize, f64) {
    let n = nodes.len();
    if n == 1 || v <= nodes[0] {
        return (0, 0, 0.0);
    }
    if v >= nodes[n - 1] {
        return (n - 1, n - 1, 0.0);
    }
    let hi = nodes.partition_point(|&node| node <= v);
    let lo = hi - 1;
    (lo, hi, (v - nodes[lo]) / (nodes[hi] - nodes[lo]))
}

/// Which control schedule `Ω(t, x)` drives the `J_y` feedback.
#[derive(Debug, Clone, PartialEq)]
pub enum FeedbackLaw {
    /// Measure only; rotate once at the end.
    OpenLoop,
    /// `Ω = √(2γ)/x`: the ideal schedule, oblivious to η and δ.
    IdealTimeDependent,
    /// `Ω = √(2γ)α`.
    Constant {
        alpha: f64,
    },
    /// `Ω = √(2γ)(1+δ)/x`.
    Calibrated {
        delta: f64,
    },
    /// `Ω = √(2γ)η/x`.
    EtaOptimal,
    /// `Ω = √(2γ)`, applied through a loop with delay τ.
    DelayOblivious,
    /// `Ω = √(2γ)(1 - 3γτ)`.
    DelayAsymptotic,
    /// `Ω = √(2γ)η/x - 3√(2γ)η²γτ/x³`.
    LocalOptimalDelayed,
    /// `Ω = √(2γ)η/x` with dephasing and decay switched on in the parameters.
    NoisySystem,
    CustomSchedule(Schedule),
}

impl FeedbackLaw {
    pub fn name(&self) -> &'static str {
        match self {
            FeedbackLaw::OpenLoop => "open-loop",
            FeedbackLaw::IdealTimeDependent => "ideal",
            FeedbackLaw::Constant { .. } => "constant",
            FeedbackLaw::Calibrated { .. } => "calibrated",
            FeedbackLaw::EtaOptimal => "eta-optimal",
            FeedbackLaw::DelayOblivious => "delay-oblivious",
            FeedbackLaw::DelayAsymptotic => "delay-asymptotic",
            FeedbackLaw::LocalOptimalDelayed => "local-optimal-delayed",
            FeedbackLaw::NoisySystem => "noisy-system",
            FeedbackLaw::CustomSchedule(_) => "custom",
        }
    }

    /// True for laws of the form `k/x`, which diverge at `x = 0`.
    pub fn is_state_form(&self) -> bool {
        matches!(
            self,
            FeedbackLaw::IdealTimeDependent
                | FeedbackLaw::Calibrated { .. }
                | FeedbackLaw::EtaOptimal
                | FeedbackLaw::LocalOptimalDelayed
                | FeedbackLaw::NoisySystem
        )
    }

    /// Feedback strength at time `t` for a state whose x component is `x`.
    ///
    /// State-form laws use `max(x, x_floor)` with `x_floor = √(2γ)/Ω_max`. An
    /// infinite `omega_max` leaves them uncapped, and `x ≤ 0` is then an error.
    pub fn omega(&self, p: &ScenarioParams, t: f64, x: f64) -> Result<f64> {
        let s = (2.0 * p.gamma).sqrt();
        let floor = s / p.omega_max;
        let denom = x.max(floor);
        if self.is_state_form() && !(denom > 0.0) {
            return Err(RspError::DivergentSchedule { t, x });
        }
        let omega = match self {
            FeedbackLaw::OpenLoop => 0.0,
            FeedbackLaw::IdealTimeDependent => s / denom,
            FeedbackLaw::Constant { alpha } => s * alpha,
            FeedbackLaw::Calibrated { delta } => s * (1.0 + delta) / denom,
            FeedbackLaw::EtaOptimal | FeedbackLaw::NoisySystem => s * p.eta / denom,
            FeedbackLaw::DelayOblivious => s,
            FeedbackLaw::DelayAsymptotic => s * (1.0 - 3.0 * p.gamma * p.tau),
            FeedbackLaw::LocalOptimalDelayed => {
                s * p.eta / denom - 3.0 * s * p.eta * p.eta * p.gamma * p.tau / denom.powi(3)
            }
            FeedbackLaw::CustomSchedule(schedule) => schedule.eval(t, x),
        };
        Ok(omega)
    }
}

/// Physical and imperfection parameters plus the feedback law in force.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioParams {
    /// Measurement rate.
    pub gamma: f64,
    /// Detection efficiency in (0, 1].
    pub eta: f64,
    /// Feedback loop delay.
    pub tau: f64,
    /// Isotropic dephasing rate.
    pub gamma_iso: f64,
    /// Excited-state decay rate.
    pub gamma_d: f64,
    /// Cap on state-form schedules. Default `10³√(2γ)`.
    pub omega_max: f64,
    /// Slack on `‖b‖ ≤ 1`.
    pub bloch_tol: f64,
    pub law: FeedbackLaw,
}

impl Default for ScenarioParams {
    fn default() -> Self {
        Self {
            gamma: 1.0,
            eta: 1.0,
            tau: 0.0,
            gamma_iso: 0.0,
            gamma_d: 0.0,
            omega_max: 1e3 * 2f64.sqrt(),
            bloch_tol: DEFAULT_BLOCH_TOL,
            law: FeedbackLaw::IdealTimeDependent,
        }
    }
}

impl ScenarioParams {
    pub fn new(law: FeedbackLaw) -> Self {
        Self {
            law,
            ..Self::default()
        }
    }

    /// Sets γ and rescales the default cap to `10³√(2γ)`.
    pub fn with_gamma(mut self, gamma: f64) -> Self {
        self.gamma = gamma;
        self.omega_max = 1e3 * (2.0 * gamma).sqrt();
        self
    }

    pub fn with_eta(mut self, eta: f64) -> Self {
        self.eta = eta;
        self
    }

    pub fn with_tau(mut self, tau: f64) -> Self {
        self.tau = tau;
        self
    }

    pub fn with_dephasing(mut self, gamma_iso: f64, gamma_d: f64) -> Self {
        self.gamma_iso = gamma_iso;
        self.gamma_d = gamma_d;
        self
    }

    pub fn with_omega_max(mut self, omega_max: f64) -> Self {
        self.omega_max = omega_max;
        self
    }

    pub fn with_law(mut self, law: FeedbackLaw) -> Self {
        self.law = law;
        self
    }

    pub fn validate(&self) -> Result<()> {
        check(
            self.gamma > 0.0 && self.gamma.is_finite(),
            "gamma",
            self.gamma,
            "must be positive",
        )?;
        check(
            self.eta > 0.0 && self.eta <= 1.0,
            "eta",
            self.eta,
            "must lie in (0, 1]",
        )?;
        check(
            self.tau >= 0.0 && self.tau.is_finite(),
            "tau",
            self.tau,
            "must be non-negative",
        )?;
        check(
            self.gamma_iso >= 0.0,
            "gamma_iso",
            self.gamma_iso,
            "must be non-negative",
        )?;
        check(
            self.gamma_d >= 0.0,
            "gamma_d",
            self.gamma_d,
            "must be non-negative",
        )?;
        check(
            self.omega_max > 0.0,
            "omega_max",
            self.omega_max,
            "must be positive",
        )?;
        check(
            self.bloch_tol >= 0.0,
            "bloch_tol",
            self.bloch_tol,
            "must be non-negative",
        )?;
        match &self.law {
            FeedbackLaw::Constant { alpha } => {
                check(alpha.is_finite(), "alpha", *alpha, "must be finite")?
            }
            FeedbackLaw::Calibrated { delta } => check(
                (-1.0..=1.0).contains(delta),
                "delta",
                *delta,
                "must lie in [-1, 1]",
            )?,
            _ => {}
        }
        Ok(())
    }

    /// Feedback strength of the configured law.
    pub fn omega(&self, t: f64, x: f64) -> Result<f64> {
        self.law.omega(self, t, x)
    }
}

/// Which open-loop curve feedback is compared against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BenchmarkConvention {
    /// `erf(√(γt))`, the mean Bloch length `2⟨λ_max⟩ - 1`.
    BlochLength,
    /// `½[1 + erf(√(γt))]`, the mean largest eigenvalue.
    LambdaMax,
}

impl BenchmarkConvention {
    pub fn value(self, gamma: f64, t: f64) -> f64 {
        let length = erf((gamma * t.max(0.0)).sqrt());
        match self {
            BenchmarkConvention::BlochLength => length,
            BenchmarkConvention::LambdaMax => 0.5 * (1.0 + length),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            BenchmarkConvention::BlochLength => "bloch",
            BenchmarkConvention::LambdaMax => "lambda",
        }
    }
}

impl fmt::Display for BenchmarkConvention {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for BenchmarkConvention {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "bloch" | "bloch-length" => Ok(BenchmarkConvention::BlochLength),
            "lambda" | "lambda-max" => Ok(BenchmarkConvention::LambdaMax),
            other => Err(format!(
                "unknown benchmark convention {other:?} (expected bloch|lambda)"
            )),
        }
    }
}

/// Named scenarios, each pairing a feedback law with its closed-form curve.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scenario {
    OpenLoop,
    Ideal,
    Constant,
    Calibrated,
    EtaOblivious,
    EtaOptimal,
    DelayOblivious,
    DelayAsymptotic,
    LocalOptimalDelayed,
    NoisySystem,
}

impl Scenario {
    pub const ALL: [Scenario; 10] = [
        Scenario::OpenLoop,
        Scenario::Ideal,
        Scenario::Constant,
        Scenario::Calibrated,
        Scenario::EtaOblivious,
        Scenario::EtaOptimal,
        Scenario::DelayOblivious,
        Scenario::DelayAsymptotic,
        Scenario::LocalOptimalDelayed,
        Scenario::NoisySystem,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scenario::OpenLoop => "open-loop",
            Scenario::Ideal => "ideal",
            Scenario::Constant => "constant",
            Scenario::Calibrated => "calibrated",
            Scenario::EtaOblivious => "eta-oblivious",
            Scenario::EtaOptimal => "eta-optimal",
            Scenario::DelayOblivious => "delay-oblivious",
            Scenario::DelayAsymptotic => "delay-asymptotic",
            Scenario::LocalOptimalDelayed => "local-optimal-delayed",
            Scenario::NoisySystem => "noisy-system",
        }
    }

    pub fn law(self, alpha: f64, delta: f64) -> FeedbackLaw {
        match self {
            Scenario::OpenLoop => FeedbackLaw::OpenLoop,
            Scenario::Ideal | Scenario::EtaOblivious => FeedbackLaw::IdealTimeDependent,
            Scenario::Constant => FeedbackLaw::Constant { alpha },
            Scenario::Calibrated => FeedbackLaw::Calibrated { delta },
            Scenario::EtaOptimal => FeedbackLaw::EtaOptimal,
            Scenario::DelayOblivious => FeedbackLaw::DelayOblivious,
            Scenario::DelayAsymptotic => FeedbackLaw::DelayAsymptotic,
            Scenario::LocalOptimalDelayed => FeedbackLaw::LocalOptimalDelayed,
            Scenario::NoisySystem => FeedbackLaw::NoisySystem,
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scenario {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Scenario::ALL
            .into_iter()
            .find(|sc| sc.name() == s)
            .ok_or_else(|| {
                let names: Vec<_> = Scenario::ALL.iter().map(|s| s.name()).collect();
                format!(
                    "unknown scenario {s:?} (expected one of {})",
                    names.join(", ")
                )
            })
    }
}
