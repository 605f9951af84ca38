//! Run settings from flags and an optional TOML file.
//!
//! File layout: top-level `key = value` entries apply to every run, and a
//! `[scenario-name]` table adds overrides used only when that scenario is
//! selected. Precedence, highest first: flags, scenario table, top level,
//! built-in defaults.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::Args;
use serde::Deserialize;

use rsp_core::{BenchmarkConvention, Scenario, ScenarioParams};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Engine {
    Analytic,
    Ode,
    Sme,
    LinearMc,
}

impl FromStr for Engine {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "analytic" => Ok(Engine::Analytic),
            "ode" => Ok(Engine::Ode),
            "sme" => Ok(Engine::Sme),
            "linear-mc" => Ok(Engine::LinearMc),
            other => Err(format!(
                "unknown engine {other:?} (expected analytic|ode|sme|linear-mc)"
            )),
        }
    }
}

impl Engine {
    pub fn name(self) -> &'static str {
        match self {
            Engine::Analytic => "analytic",
            Engine::Ode => "ode",
            Engine::Sme => "sme",
            Engine::LinearMc => "linear-mc",
        }
    }

    pub fn is_stochastic(self) -> bool {
        matches!(self, Engine::Sme | Engine::LinearMc)
    }
}

/// Every setting is optional so layers can be merged.
#[derive(Debug, Clone, Default, PartialEq, Args, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct Settings {
    /// Scenario name, e.g. ideal, constant, eta-optimal
    #[arg(long, global = true)]
    pub scenario: Option<String>,
    /// analytic | ode | sme | linear-mc
    #[arg(long, global = true)]
    pub engine: Option<String>,
    /// Measurement rate; times are in units of 1/gamma
    #[arg(long, global = true)]
    pub gamma: Option<f64>,
    /// Detection efficiency
    #[arg(long, global = true)]
    pub eta: Option<f64>,
    /// Feedback delay
    #[arg(long, global = true)]
    pub tau: Option<f64>,
    /// Relative calibration error
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub delta: Option<f64>,
    /// Constant feedback strength in units of sqrt(2 gamma)
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub alpha: Option<f64>,
    /// Isotropic dephasing rate
    #[arg(long, global = true)]
    pub gamma_iso: Option<f64>,
    /// Amplitude damping rate
    #[arg(long, global = true)]
    pub gamma_d: Option<f64>,
    #[arg(long, global = true)]
    pub t_end: Option<f64>,
    /// Output grid points, including t = 0
    #[arg(long, global = true)]
    pub points: Option<usize>,
    /// Integration step for ode and sme engines
    #[arg(long, global = true)]
    pub dt: Option<f64>,
    /// Ensemble size for stochastic engines
    #[arg(long, global = true)]
    pub n_traj: Option<usize>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// bloch | lambda
    #[arg(long, global = true)]
    pub benchmark: Option<String>,
    /// Output path; stdout when absent
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

impl Settings {
    /// `self` wins wherever it has a value.
    pub fn over(self, lower: Settings) -> Settings {
        Settings {
            scenario: self.scenario.or(lower.scenario),
            engine: self.engine.or(lower.engine),
            gamma: self.gamma.or(lower.gamma),
            eta: self.eta.or(lower.eta),
            tau: self.tau.or(lower.tau),
            delta: self.delta.or(lower.delta),
            alpha: self.alpha.or(lower.alpha),
            gamma_iso: self.gamma_iso.or(lower.gamma_iso),
            gamma_d: self.gamma_d.or(lower.gamma_d),
            t_end: self.t_end.or(lower.t_end),
            points: self.points.or(lower.points),
            dt: self.dt.or(lower.dt),
            n_traj: self.n_traj.or(lower.n_traj),
            seed: self.seed.or(lower.seed),
            benchmark: self.benchmark.or(lower.benchmark),
            out: self.out.or(lower.out),
        }
    }
}

/// A parsed config file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConfigFile {
    pub base: Settings,
    pub sections: Vec<(Scenario, Settings)>,
}

impl ConfigFile {
    pub fn parse(text: &str, path: &str) -> Result<Self> {
        let err = |message: String| CliError::Config {
            path: path.to_string(),
            message,
        };
        let table: toml::Table = text
            .parse()
            .map_err(|e: toml::de::Error| err(e.to_string()))?;
        let mut base = toml::Table::new();
        let mut sections = Vec::new();
        for (key, value) in table {
            match value {
                toml::Value::Table(t) => {
                    let scenario = Scenario::from_str(&key)
                        .map_err(|e| err(format!("section [{key}]: {e}")))?;
                    if t.contains_key("scenario") {
                        return Err(err(format!("section [{key}] may not set scenario")));
                    }
                    let s: Settings = toml::Value::Table(t)
                        .try_into()
                        .map_err(|e: toml::de::Error| err(format!("section [{key}]: {e}")))?;
                    sections.push((scenario, s));
                }
                other => {
                    base.insert(key, other);
                }
            }
        }
        let base: Settings = toml::Value::Table(base)
            .try_into()
            .map_err(|e: toml::de::Error| err(e.to_string()))?;
        Ok(Self { base, sections })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
            context: format!("reading config {}", path.display()),
            source,
        })?;
        Self::parse(&text, &path.display().to_string())
    }

    fn section(&self, scenario: Scenario) -> Settings {
        self.sections
            .iter()
            .filter(|(s, _)| *s == scenario)
            .fold(Settings::default(), |acc, (_, s)| s.clone().over(acc))
    }
}

/// Fully resolved settings for one run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub scenario: Scenario,
    pub params: ScenarioParams,
    pub engine: Engine,
    pub t_end: f64,
    pub points: usize,
    pub dt: f64,
    pub n_traj: usize,
    pub seed: u64,
    pub benchmark: BenchmarkConvention,
    pub out: Option<PathBuf>,
}

pub const DEFAULT_T_END: f64 = 5.0;
pub const DEFAULT_POINTS: usize = 101;
pub const DEFAULT_DT: f64 = 1e-3;
pub const DEFAULT_N_TRAJ: usize = 1000;
pub const DEFAULT_SEED: u64 = 1;

impl RunConfig {
    /// Layers `flags` over `file` and fills in defaults. The engine and
    /// benchmark defaults depend on the subcommand.
    pub fn resolve(
        flags: Settings,
        file: Option<&ConfigFile>,
        default_engine: Engine,
        default_benchmark: BenchmarkConvention,
    ) -> Result<Self> {
        let base = file.map(|f| f.base.clone()).unwrap_or_default();
        let scenario_name = flags
            .scenario
            .clone()
            .or_else(|| base.scenario.clone())
            .unwrap_or_else(|| "ideal".to_string());
        let scenario = Scenario::from_str(&scenario_name).map_err(CliError::Usage)?;
        let section = file.map(|f| f.section(scenario)).unwrap_or_default();
        let s = flags.over(section.over(base));

        let engine = match &s.engine {
            Some(e) => Engine::from_str(e).map_err(CliError::Usage)?,
            None => default_engine,
        };
        let benchmark = match &s.benchmark {
            Some(b) => BenchmarkConvention::from_str(b).map_err(CliError::Usage)?,
            None => default_benchmark,
        };
        let mut params =
            ScenarioParams::new(scenario.law(s.alpha.unwrap_or(1.0), s.delta.unwrap_or(0.0)));
        if let Some(g) = s.gamma {
            params = params.with_gamma(g);
        }
        params = params
            .with_eta(s.eta.unwrap_or(1.0))
            .with_tau(s.tau.unwrap_or(0.0))
            .with_dephasing(s.gamma_iso.unwrap_or(0.0), s.gamma_d.unwrap_or(0.0));
        params.validate()?;

        let cfg = Self {
            scenario,
            params,
            engine,
            t_end: s.t_end.unwrap_or(DEFAULT_T_END),
            points: s.points.unwrap_or(DEFAULT_POINTS),
            dt: s.dt.unwrap_or(DEFAULT_DT),
            n_traj: s.n_traj.unwrap_or(DEFAULT_N_TRAJ),
            seed: s.seed.unwrap_or(DEFAULT_SEED),
            benchmark,
            out: s.out,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<()> {
        let usage = |m: String| Err(CliError::Usage(m));
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            return usage(format!(
                "--t-end must be positive and finite, got {}",
                self.t_end
            ));
        }
        if self.points < 2 {
            return usage(format!("--points must be at least 2, got {}", self.points));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return usage(format!("--dt must be positive and finite, got {}", self.dt));
        }
        if self.engine.is_stochastic() && self.n_traj < 2 {
            return usage(format!("--n-traj must be at least 2, got {}", self.n_traj));
        }
        Ok(())
    }

    /// Output times `t_end·i/(points-1)`.
    pub fn times(&self) -> Vec<f64> {
        let last = (self.points - 1) as f64;
        (0..self.points)
            .map(|i| self.t_end * i as f64 / last)
            .collect()
    }

    /// Integration steps per output interval and the step that makes every
    /// output time a grid point.
    pub fn aligned_step(&self) -> (usize, f64) {
        let spacing = self.t_end / (self.points - 1) as f64;
        let per = ((spacing / self.dt).round() as usize).max(1);
        (per, spacing / per as f64)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rsp_core::FeedbackLaw;

    const LM: BenchmarkConvention = BenchmarkConvention::LambdaMax;

    const FILE: &str = r#"
scenario = "constant"
t-end = 2.0
alpha = 0.8

[constant]
alpha = 0.9
points = 11

[eta-optimal]
eta = 0.85
"#;

    #[test]
    fn precedence_is_flags_section_base_default() {
        let file = ConfigFile::parse(FILE, "test.toml").unwrap();
        let cfg =
            RunConfig::resolve(Settings::default(), Some(&file), Engine::Analytic, LM).unwrap();
        assert_eq!(cfg.scenario, Scenario::Constant);
        assert_eq!(cfg.params.law, FeedbackLaw::Constant { alpha: 0.9 });
        assert_eq!((cfg.t_end, cfg.points), (2.0, 11));
        assert_eq!(cfg.dt, DEFAULT_DT);

        let flags = Settings {
            alpha: Some(1.1),
            ..Settings::default()
        };
        let cfg = RunConfig::resolve(flags, Some(&file), Engine::Analytic, LM).unwrap();
        assert_eq!(cfg.params.law, FeedbackLaw::Constant { alpha: 1.1 });

        let flags = Settings {
            scenario: Some("eta-optimal".into()),
            ..Settings::default()
        };
        let cfg = RunConfig::resolve(flags, Some(&file), Engine::Analytic, LM).unwrap();
        assert_eq!(cfg.params.eta, 0.85);
        assert_eq!(cfg.points, DEFAULT_POINTS);
    }

    #[test]
    fn rejects_bad_files() {
        assert!(ConfigFile::parse("bogus = 1", "f").is_err());
        assert!(ConfigFile::parse("[not-a-scenario]\neta = 0.5", "f").is_err());
        assert!(ConfigFile::parse("[ideal]\nscenario = \"constant\"", "f").is_err());
        assert!(ConfigFile::parse("eta = \"high\"", "f").is_err());
    }

    #[test]
    fn rejects_out_of_domain_values() {
        let bad = |s: Settings| {
            RunConfig::resolve(s, None, Engine::Analytic, LM)
                .unwrap_err()
                .exit_code()
        };
        assert_eq!(
            bad(Settings {
                eta: Some(1.5),
                ..Default::default()
            }),
            2
        );
        assert_eq!(
            bad(Settings {
                points: Some(1),
                ..Default::default()
            }),
            2
        );
        assert_eq!(
            bad(Settings {
                engine: Some("magic".into()),
                ..Default::default()
            }),
            2
        );
        assert_eq!(
            bad(Settings {
                scenario: Some("nope".into()),
                ..Default::default()
            }),
            2
        );
    }

    #[test]
    fn aligned_step_hits_output_times() {
        let cfg = RunConfig::resolve(
            Settings {
                t_end: Some(5.0),
                points: Some(501),
                dt: Some(3e-3),
                ..Default::default()
            },
            None,
            Engine::Ode,
            LM,
        )
        .unwrap();
        let (per, h) = cfg.aligned_step();
        assert_eq!(per, 3);
        assert!((h * per as f64 - 0.01).abs() < 1e-15);
    }
}
