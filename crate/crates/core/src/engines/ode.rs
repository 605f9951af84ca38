//! Feedback master equation at the Bloch level, integrated with classical RK4.
//!
//! The state-form schedules make the equations stiff near `x = 0` (the
//! friction term `xΩ²/2η` reaches 10⁶ under the default cap), so each grid step
//! is split into substeps with `h·k ≤ 0.1`, `k` being the largest decay rate at
//! the start of the step. Away from `x = 0` this is a no-op at `dt = 10⁻⁴`.

use crate::error::{check, Result, RspError};
use crate::model::{BlochVector, ScenarioParams};

use super::{uniform_grid, TrajectoryRecord};

const STIFFNESS_BOUND: f64 = 0.1;
/// Norm slack for the delayed equation, which is only first order in τ.
const DELAYED_NORM_TOL: f64 = 1e-6;

/// Time derivative of the Bloch vector under the configured law.
pub fn bloch_rhs(p: &ScenarioParams, t: f64, b: BlochVector) -> Result<BlochVector> {
    let omega = p.omega(t, b.x)?;
    Ok(rhs_with_omega(p, omega, b))
}

fn rhs_with_omega(p: &ScenarioParams, omega: f64, b: BlochVector) -> BlochVector {
    let g = p.gamma;
    let s = (2.0 * g).sqrt();
    let w2 = omega * omega;
    let transverse = 4.0 * p.gamma_iso + 0.5 * p.gamma_d;
    BlochVector {
        x: -g * b.x - transverse * b.x + s * omega
            - b.x * w2 / (2.0 * p.eta)
            - s * omega * w2 * p.tau / 2.0,
        y: -g * b.y - transverse * b.y,
        z: -b.z * w2 / (2.0 * p.eta)
            - 2.0 * b.z * w2 * g * p.tau
            - 4.0 * p.gamma_iso * b.z
            - p.gamma_d * (b.z + 1.0),
    }
}

fn stiffness(p: &ScenarioParams, omega: f64) -> f64 {
    let w2 = omega * omega;
    p.gamma + w2 / (2.0 * p.eta) + 2.0 * w2 * p.gamma * p.tau + 4.0 * p.gamma_iso + p.gamma_d
}

fn axpy(b: BlochVector, h: f64, d: BlochVector) -> BlochVector {
    BlochVector::new_unchecked(b.x + h * d.x, b.y + h * d.y, b.z + h * d.z)
}

fn rk4(p: &ScenarioParams, t: f64, b: BlochVector, h: f64) -> Result<BlochVector> {
    let k1 = bloch_rhs(p, t, b)?;
    let k2 = bloch_rhs(p, t + h / 2.0, axpy(b, h / 2.0, k1))?;
    let k3 = bloch_rhs(p, t + h / 2.0, axpy(b, h / 2.0, k2))?;
    let k4 = bloch_rhs(p, t + h, axpy(b, h, k3))?;
    Ok(BlochVector::new_unchecked(
        b.x + h / 6.0 * (k1.x + 2.0 * k2.x + 2.0 * k3.x + k4.x),
        b.y + h / 6.0 * (k1.y + 2.0 * k2.y + 2.0 * k3.y + k4.y),
        b.z + h / 6.0 * (k1.z + 2.0 * k2.z + 2.0 * k3.z + k4.z),
    ))
}

/// Integrates the Bloch equations from `b0` on a uniform grid ending at `t_end`.
///
/// Fails with [`RspError::NonPhysical`] once `‖b‖` leaves the ball (slack
/// `bloch_tol`, or 10⁻⁶ when a delay is present).
pub fn integrate_ode(
    p: &ScenarioParams,
    b0: BlochVector,
    t_end: f64,
    dt: f64,
) -> Result<TrajectoryRecord> {
    p.validate()?;
    check(dt > 0.0, "dt", dt, "must be positive")?;
    check(t_end > 0.0, "t_end", t_end, "must be positive")?;
    b0.check(p.bloch_tol)?;
    let tol = if p.tau > 0.0 {
        p.bloch_tol.max(DELAYED_NORM_TOL)
    } else {
        p.bloch_tol
    };
    let (n, h) = uniform_grid(t_end, dt);
    let mut times = Vec::with_capacity(n + 1);
    let mut states = Vec::with_capacity(n + 1);
    times.push(0.0);
    states.push(b0);
    let mut b = b0;
    for i in 0..n {
        let t0 = i as f64 * h;
        let k = stiffness(p, p.omega(t0, b.x)?);
        let m = ((k * h / STIFFNESS_BOUND).ceil() as usize).max(1);
        let hs = h / m as f64;
        for j in 0..m {
            b = rk4(p, t0 + j as f64 * hs, b, hs)?;
        }
        let t = (i + 1) as f64 * h;
        let length = b.length();
        if !(length <= 1.0 + tol) {
            return Err(RspError::NonPhysical {
                scenario: p.law.name().to_string(),
                t,
                length,
                tol,
            });
        }
        times.push(t);
        states.push(b);
    }
    Ok(TrajectoryRecord {
        seed: 0,
        dt: h,
        times,
        states,
        record: Vec::new(),
    })
}

/// Scalar equation `ẋ = -γx + γη/x - 2γ²η²τ/x³` for the locally optimal
/// schedule with delay, kept to first order in τ. Singular at `x = 0`.
pub fn integrate_local_optimal_delayed(
    gamma: f64,
    eta: f64,
    tau: f64,
    x0: f64,
    t_end: f64,
    dt: f64,
) -> Result<TrajectoryRecord> {
    check(gamma > 0.0, "gamma", gamma, "must be positive")?;
    check(eta > 0.0 && eta <= 1.0, "eta", eta, "must lie in (0, 1]")?;
    check(tau >= 0.0, "tau", tau, "must be non-negative")?;
    check(x0 > 0.0 && x0 <= 1.0, "x0", x0, "must lie in (0, 1]")?;
    check(dt > 0.0, "dt", dt, "must be positive")?;
    check(t_end > 0.0, "t_end", t_end, "must be positive")?;

    let c1 = gamma * eta;
    let c3 = 2.0 * gamma * gamma * eta * eta * tau;
    let f = |t: f64, x: f64| -> Result<f64> {
        if x <= 0.0 {
            return Err(RspError::LeftDomain { t, x });
        }
        Ok(-gamma * x + c1 / x - c3 / x.powi(3))
    };
    let (n, h) = uniform_grid(t_end, dt);
    let mut times = Vec::with_capacity(n + 1);
    let mut states = Vec::with_capacity(n + 1);
    times.push(0.0);
    states.push(BlochVector::new_unchecked(x0, 0.0, 0.0));
    let mut x = x0;
    for i in 0..n {
        let t0 = i as f64 * h;
        let k = gamma + c1 / (x * x) + 3.0 * c3 / x.powi(4);
        let m = ((k * h / STIFFNESS_BOUND).ceil() as usize).max(1);
        let hs = h / m as f64;
        for j in 0..m {
            let t = t0 + j as f64 * hs;
            let k1 = f(t, x)?;
            let k2 = f(t + hs / 2.0, x + hs / 2.0 * k1)?;
            let k3 = f(t + hs / 2.0, x + hs / 2.0 * k2)?;
            let k4 = f(t + hs, x + hs * k3)?;
            x += hs / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
            if x <= 0.0 {
                return Err(RspError::LeftDomain { t: t + hs, x });
            }
        }
        times.push((i + 1) as f64 * h);
        states.push(BlochVector::new_unchecked(x, 0.0, 0.0));
    }
    Ok(TrajectoryRecord {
        seed: 0,
        dt: h,
        times,
        states,
        record: Vec::new(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytic;
    use crate::model::FeedbackLaw;

    fn origin() -> BlochVector {
        BlochVector::ORIGIN
    }

    #[test]
    fn rhs_examples() {
        let p = ScenarioParams::new(FeedbackLaw::OpenLoop);
        let b = BlochVector::new(0.3, -0.4, 0.5).unwrap();
        let d = bloch_rhs(&p, 0.0, b).unwrap();
        assert_eq!((d.x, d.y, d.z), (-0.3, 0.4, 0.0));

        let p = ScenarioParams::new(FeedbackLaw::IdealTimeDependent);
        let x = analytic::ideal_x(1.0, 0.7);
        let d = bloch_rhs(&p, 0.7, BlochVector::new(x, 0.0, 0.0).unwrap()).unwrap();
        assert!((d.x - (1.0 - x * x) / x).abs() < 1e-12);

        let p = ScenarioParams::new(FeedbackLaw::Constant { alpha: 1.0 });
        let d = bloch_rhs(&p, 0.0, origin()).unwrap();
        assert!((d.x - 2.0).abs() < 1e-15);
    }

    #[test]
    fn uncapped_schedule_diverges_at_the_origin() {
        let p = ScenarioParams::default().with_omega_max(f64::INFINITY);
        assert!(matches!(
            bloch_rhs(&p, 0.0, origin()),
            Err(RspError::DivergentSchedule { .. })
        ));
    }

    #[test]
    fn ideal_law_matches_closed_form() {
        let p = ScenarioParams::default();
        let rec = integrate_ode(&p, origin(), 1.0, 1e-4).unwrap();
        let (t, b) = rec.last().unwrap();
        assert_eq!(t, 1.0);
        assert!((b.x - analytic::ideal_x(1.0, 1.0)).abs() < 1e-6);
        assert_eq!(rec.times.len(), 10_001);
    }

    #[test]
    fn constant_law_matches_closed_form() {
        let p = ScenarioParams::new(FeedbackLaw::Constant { alpha: 1.0 });
        let rec = integrate_ode(&p, origin(), 1.0, 1e-4).unwrap();
        let x = rec.last().unwrap().1.x;
        assert!((x - (1.0 - (-2f64).exp())).abs() < 1e-8);
    }

    #[test]
    fn y_decays_without_feedback() {
        let p = ScenarioParams::new(FeedbackLaw::OpenLoop);
        let b0 = BlochVector::new(0.1, 0.6, 0.2).unwrap();
        let rec = integrate_ode(&p, b0, 1.0, 1e-4).unwrap();
        let y = rec.last().unwrap().1.y;
        assert!((y / 0.6 - (-1f64).exp()).abs() < 1e-8);
    }

    #[test]
    fn fourth_order_convergence() {
        let p = ScenarioParams::new(FeedbackLaw::Constant { alpha: 0.9 });
        let err = |dt: f64| {
            let rec = integrate_ode(&p, origin(), 2.0, dt).unwrap();
            (rec.last().unwrap().1.x - analytic::constant_x(1.0, 2.0, 0.9)).abs()
        };
        // Steps small enough that no stiffness substeps kick in.
        let (e1, e2) = (err(0.05), err(0.025));
        assert!(e2 > 1e-13, "error {e2} at roundoff level");
        assert!(e1 / e2 >= 8.0, "ratio {}", e1 / e2);
    }

    #[test]
    fn large_delay_is_flagged_nonphysical() {
        // With Ω = -3√2 and γτ = ½ the cubic delay term outweighs the friction,
        // so ẋ > 0 at x = 1.
        let p = ScenarioParams::new(FeedbackLaw::Constant { alpha: -3.0 }).with_tau(0.5);
        let b0 = BlochVector::new(1.0, 0.0, 0.0).unwrap();
        let err = integrate_ode(&p, b0, 1.0, 1e-3).unwrap_err();
        assert!(matches!(err, RspError::NonPhysical { .. }), "{err}");
        assert!(err.to_string().contains("constant"));
    }

    #[test]
    fn local_optimal_delayed_reduces_to_efficiency_law() {
        let rec = integrate_local_optimal_delayed(1.0, 1.0, 0.0, 1e-3, 2.0, 1e-4).unwrap();
        assert!((rec.last().unwrap().1.x - analytic::ideal_x(1.0, 2.0)).abs() < 1e-4);
        let rec = integrate_local_optimal_delayed(1.0, 0.85, 0.0, 1e-3, 3.0, 1e-4).unwrap();
        let x = rec.last().unwrap().1.x;
        assert!((x - analytic::eta_optimal_x(1.0, 3.0, 0.85)).abs() < 1e-4);
    }

    #[test]
    fn local_optimal_delayed_steady_state() {
        let tau = 0.01;
        let rec = integrate_local_optimal_delayed(1.0, 1.0, tau, 0.5, 15.0, 1e-3).unwrap();
        let x = rec.last().unwrap().1.x;
        // Larger root of u² - u + 2τ = 0 with u = x².
        let u = (1.0 + (1.0 - 8.0 * tau).sqrt()) / 2.0;
        assert!((x - u.sqrt()).abs() < 1e-9, "{x} vs {}", u.sqrt());
        assert!((x - 0.989_739).abs() < 1e-6);
    }

    #[test]
    fn local_optimal_delayed_leaves_domain_below_unstable_root() {
        let err = integrate_local_optimal_delayed(1.0, 1.0, 0.01, 0.05, 2.0, 1e-3);
        assert!(matches!(err, Err(RspError::LeftDomain { .. })));
        assert!(integrate_local_optimal_delayed(1.0, 1.0, 0.0, 0.0, 1.0, 1e-3).is_err());
    }
}
