//! Shared fixtures for the criterion benches.

use rsp_core::{FeedbackLaw, ScenarioParams, SmeConfig};

/// Representative feedback scenarios, cheapest first.
pub fn scenarios() -> Vec<(&'static str, ScenarioParams)> {
    vec![
        (
            "constant",
            ScenarioParams::new(FeedbackLaw::Constant { alpha: 1.0 }),
        ),
        (
            "ideal",
            ScenarioParams::new(FeedbackLaw::IdealTimeDependent),
        ),
        (
            "eta-optimal",
            ScenarioParams::new(FeedbackLaw::EtaOptimal).with_eta(0.85),
        ),
        (
            "delay-oblivious",
            ScenarioParams::new(FeedbackLaw::DelayOblivious).with_tau(0.05),
        ),
    ]
}

/// Step settings used by the acceptance ensembles.
pub fn sme_config() -> SmeConfig {
    SmeConfig::default()
}
