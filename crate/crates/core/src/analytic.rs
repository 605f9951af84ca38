//! Closed-form Bloch curves, schedules and steady states.
//!
//! Every function takes `gamma` explicitly; pass 1.0 for times in units of `1/γ`.

use log::warn;

use crate::error::{check, Result, RspError};
use crate::model::{FeedbackLaw, Scenario, ScenarioParams};
use crate::special::erf;

/// `1 - e^{-2γt}`, computed without cancellation at small `t`.
fn one_minus_exp(rate: f64, t: f64) -> f64 {
    -(-rate * t).exp_m1()
}

/// Mean largest eigenvalue without feedback, `½[1 + erf(√(γt))]`.
pub fn openloop_lambda(gamma: f64, t: f64) -> f64 {
    0.5 * (1.0 + openloop_x(gamma, t))
}

/// Long-time form `1 - e^{-γt}/(2√(πγt))`. Warns below `t = 1/γ`.
pub fn openloop_lambda_longtime(gamma: f64, t: f64) -> Result<f64> {
    check(t > 0.0, "t", t, "long-time form needs t > 0")?;
    if gamma * t < 1.0 {
        warn!(
            "long-time open-loop form used at γt = {} < 1, where it is inaccurate",
            gamma * t
        );
    }
    let gt = gamma * t;
    Ok(1.0 - (-gt).exp() / (2.0 * (std::f64::consts::PI * gt).sqrt()))
}

/// Mean Bloch length without feedback, `erf(√(γt))`.
pub fn openloop_x(gamma: f64, t: f64) -> f64 {
    erf((gamma * t.max(0.0)).sqrt())
}

/// Ideal feedback, `√(1 - e^{-2γt})`.
pub fn ideal_x(gamma: f64, t: f64) -> f64 {
    one_minus_exp(2.0 * gamma, t).sqrt()
}

/// `1 - ideal_x`, accurate when the deficit is far below machine epsilon.
pub fn ideal_deficit(gamma: f64, t: f64) -> f64 {
    (-2.0 * gamma * t).exp() / (1.0 + ideal_x(gamma, t))
}

/// Optimal feedback strength `√(2γ)/√(1 - e^{-2γt})`; unbounded at `t = 0`.
pub fn ideal_omega(gamma: f64, t: f64) -> Result<f64> {
    if t <= 0.0 {
        return Err(RspError::DivergentSchedule { t, x: 0.0 });
    }
    Ok((2.0 * gamma).sqrt() / ideal_x(gamma, t))
}

/// Constant feedback `Ω = √(2γ)α`: `2α/(1+α²)·(1 - e^{-γt(1+α²)})`.
pub fn constant_x(gamma: f64, t: f64, alpha: f64) -> f64 {
    let a2 = 1.0 + alpha * alpha;
    2.0 * alpha / a2 * one_minus_exp(gamma * a2, t)
}

/// Ratio of constant-feedback to ideal-feedback times to reach `1 - ε`,
/// `ln ε / (ln ε + ln 2)`.
pub fn speedup_ratio(epsilon: f64) -> Result<f64> {
    check(
        epsilon > 0.0 && epsilon < 0.5,
        "epsilon",
        epsilon,
        "must lie in (0, 1/2)",
    )?;
    let l = epsilon.ln();
    Ok(l / (l + std::f64::consts::LN_2))
}

/// Time-dependent calibration error `(1+δ)`: `√((1 - e^{-2γt})(1 - δ²))`.
pub fn calibrated_x(gamma: f64, t: f64, delta: f64) -> f64 {
    (one_minus_exp(2.0 * gamma, t) * (1.0 - delta * delta))
        .max(0.0)
        .sqrt()
}

/// A curve value that may come from a protocol that cannot work.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Flagged {
    pub value: f64,
    pub protocol_failed: bool,
}

/// Ideal schedule applied with efficiency η: `√((2η-1)/η)·√(1 - e^{-2γt})`.
/// For `η ≤ ½` the schedule prepares nothing; the result is 0 and flagged.
pub fn eta_oblivious_x(gamma: f64, t: f64, eta: f64) -> Flagged {
    if eta <= 0.5 {
        return Flagged {
            value: 0.0,
            protocol_failed: true,
        };
    }
    Flagged {
        value: ((2.0 * eta - 1.0) / eta).sqrt() * ideal_x(gamma, t),
        protocol_failed: false,
    }
}

/// Efficiency-aware schedule `√(2γ)η/x`: `√η·√(1 - e^{-2γt})`.
pub fn eta_optimal_x(gamma: f64, t: f64, eta: f64) -> f64 {
    eta.sqrt() * ideal_x(gamma, t)
}

/// `Ω = √(2γ)` through a loop with delay τ: `(1 - e^{-2γt})(1 - γτ)`.
pub fn delay_oblivious_x(gamma: f64, t: f64, tau: f64) -> f64 {
    if gamma * tau > 0.2 {
        warn!(
            "γτ = {} is outside the perturbative delay regime",
            gamma * tau
        );
    }
    one_minus_exp(2.0 * gamma, t) * (1.0 - gamma * tau)
}

/// Locally optimal feedback strength with delay.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DelayOmega {
    /// `[-x + √(x² + 12γητ)]/(3√(2γ)τ)`, the maximizing root of `∂ẋ/∂Ω`.
    pub exact: f64,
    /// `√(2γ)η/x - 3√(2γ)η²γτ/x³`.
    pub first_order: f64,
}

pub fn delay_omega_opt(gamma: f64, x: f64, eta: f64, tau: f64) -> Result<DelayOmega> {
    if x <= 0.0 {
        return Err(RspError::DivergentSchedule { t: f64::NAN, x });
    }
    check(tau > 0.0, "tau", tau, "the exact root needs tau > 0")?;
    let s = (2.0 * gamma).sqrt();
    let a = 12.0 * gamma * eta * tau;
    // -x + √(x² + a) rewritten to avoid cancellation at small τ.
    let numerator = a / (x + (x * x + a).sqrt());
    Ok(DelayOmega {
        exact: numerator / (3.0 * s * tau),
        first_order: s * eta / x - 3.0 * s * eta * eta * gamma * tau / x.powi(3),
    })
}

/// Constant strength `√(2γ)(1 - 3γτ)` with delay τ:
/// `2(1-3γτ)/(2(1-3γτ) + 9γ²τ²)·(1 - e^{-(2γ - 6γ²τ + 9γ³τ²)t})`.
pub fn delay_asymptotic_x(gamma: f64, t: f64, tau: f64) -> Result<f64> {
    let gt = gamma * tau;
    check(
        (0.0..1.0 / 3.0).contains(&gt),
        "gamma*tau",
        gt,
        "must lie in [0, 1/3)",
    )?;
    Ok(constant_x(gamma, t, 1.0 - 3.0 * gt))
}

pub fn delay_asymptotic_steady_state(gamma: f64, tau: f64) -> Result<f64> {
    delay_asymptotic_x(gamma, f64::INFINITY, tau)
}

/// Efficiency-aware schedule under dephasing and decay:
/// `√(2γη/k)·√(1 - e^{-kt})` with `k = 2γ + 8Γ_iso + Γ_d`.
pub fn noisy_system_x(gamma: f64, t: f64, eta: f64, gamma_iso: f64, gamma_d: f64) -> f64 {
    let k = 2.0 * gamma + 8.0 * gamma_iso + gamma_d;
    (2.0 * gamma * eta / k).sqrt() * one_minus_exp(k, t).sqrt()
}

/// A scenario with its parameters, evaluated through the matching closed form.
/// The value is `⟨λ_max⟩` for the open-loop scenario and `x` otherwise.
#[derive(Debug, Clone, PartialEq)]
pub struct Curve {
    pub scenario: Scenario,
    pub params: ScenarioParams,
}

impl Curve {
    /// Checks the parameters and that the feedback law belongs to the scenario.
    pub fn new(scenario: Scenario, params: ScenarioParams) -> Result<Self> {
        params.validate()?;
        let expected = scenario.law(0.0, 0.0);
        if std::mem::discriminant(&expected) != std::mem::discriminant(&params.law) {
            return Err(RspError::NoClosedForm(format!(
                "{} with feedback law {}",
                scenario.name(),
                params.law.name()
            )));
        }
        if scenario == Scenario::DelayAsymptotic {
            delay_asymptotic_x(params.gamma, 0.0, params.tau)?;
        }
        Ok(Self { scenario, params })
    }

    /// Curve for `scenario` on top of `base`, with α and δ slotted into the law.
    pub fn from_scenario(
        scenario: Scenario,
        alpha: f64,
        delta: f64,
        base: ScenarioParams,
    ) -> Result<Self> {
        let params = base.with_law(scenario.law(alpha, delta));
        Self::new(scenario, params)
    }

    pub fn ideal() -> Self {
        Self {
            scenario: Scenario::Ideal,
            params: ScenarioParams::new(FeedbackLaw::IdealTimeDependent),
        }
    }

    pub fn constant(alpha: f64) -> Self {
        Self {
            scenario: Scenario::Constant,
            params: ScenarioParams::new(FeedbackLaw::Constant { alpha }),
        }
    }

    pub fn calibrated(delta: f64) -> Self {
        Self {
            scenario: Scenario::Calibrated,
            params: ScenarioParams::new(FeedbackLaw::Calibrated { delta }),
        }
    }

    pub fn open_loop() -> Self {
        Self {
            scenario: Scenario::OpenLoop,
            params: ScenarioParams::new(FeedbackLaw::OpenLoop),
        }
    }

    pub fn eval(&self, t: f64) -> f64 {
        let p = &self.params;
        let g = p.gamma;
        match (self.scenario, &p.law) {
            (Scenario::OpenLoop, _) => openloop_lambda(g, t),
            (Scenario::Ideal, _) => ideal_x(g, t),
            (Scenario::Constant, FeedbackLaw::Constant { alpha }) => constant_x(g, t, *alpha),
            (Scenario::Calibrated, FeedbackLaw::Calibrated { delta }) => calibrated_x(g, t, *delta),
            (Scenario::EtaOblivious, _) => eta_oblivious_x(g, t, p.eta).value,
            (Scenario::EtaOptimal, _) => eta_optimal_x(g, t, p.eta),
            (Scenario::DelayOblivious, _) => delay_oblivious_x(g, t, p.tau),
            // The constructor checked the domain.
            (Scenario::DelayAsymptotic, _) => constant_x(g, t, 1.0 - 3.0 * g * p.tau),
            (Scenario::NoisySystem, _) => noisy_system_x(g, t, p.eta, p.gamma_iso, p.gamma_d),
            (Scenario::LocalOptimalDelayed, _)
            | (Scenario::Constant, _)
            | (Scenario::Calibrated, _) => f64::NAN,
        }
    }

    /// Whether [`Curve::eval`] is backed by a closed form.
    pub fn has_closed_form(&self) -> bool {
        self.scenario != Scenario::LocalOptimalDelayed
    }

    pub fn steady_state(&self) -> f64 {
        self.eval(f64::INFINITY)
    }

    pub fn name(&self) -> &'static str {
        self.scenario.name()
    }
}
