use thiserror::Error;

/// Errors raised by the model, the closed forms, the engines and the analysis layer.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum RspError {
    #[error("invalid parameter {name} = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("Bloch vector length {length} exceeds 1 + {tol}")]
    OutsideBlochBall { length: f64, tol: f64 },

    #[error("density operator is not a valid normalized state: {0}")]
    InvalidState(&'static str),

    /// A feedback schedule diverged. The caller has to cap it with a finite `omega_max`.
    #[error("feedback strength diverges at t = {t} (x = {x}); apply a finite omega_max cap")]
    DivergentSchedule { t: f64, x: f64 },

    #[error("scenario {scenario}: Bloch length {length} exceeds 1 + {tol} at t = {t} (nonphysical regime)")]
    NonPhysical {
        scenario: String,
        t: f64,
        length: f64,
        tol: f64,
    },

    #[error(
        "negative eigenvalue {eigenvalue} after stochastic step at t = {t}; reduce the step size"
    )]
    StepSize { t: f64, eigenvalue: f64 },

    #[error("x reached {x} at t = {t}; the locally optimal delayed equation is singular at x = 0")]
    LeftDomain { t: f64, x: f64 },

    #[error("no sign change on bracket [{lo}, {hi}] (f(lo) = {f_lo}, f(hi) = {f_hi})")]
    NoSignChange {
        lo: f64,
        hi: f64,
        f_lo: f64,
        f_hi: f64,
    },

    #[error("target {target} is not reachable; the curve saturates at {steady_state}")]
    Unreachable { target: f64, steady_state: f64 },

    #[error("scenario {0} has no closed-form curve")]
    NoClosedForm(String),

    #[error("{0}")]
    Io(String),
}

pub type Result<T, E = RspError> = std::result::Result<T, E>;

pub(crate) fn check(
    cond: bool,
    name: &'static str,
    value: f64,
    reason: &'static str,
) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(RspError::InvalidParameter {
            name,
            value,
            reason,
        })
    }
}
