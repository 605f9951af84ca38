use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use rsp_core::analysis::{
    crossing_time, format_table, reproduce_tables, table, CrossingQuery, Reference,
};
use rsp_core::engines::{ensemble_mean, integrate_ode, linear_trajectory_sample};
use rsp_core::io::{format_f64, write_curve_csv, write_table_csv, CurveData};
use rsp_core::validation::{run_criterion, write_report_csv, Level, CRITERIA};
use rsp_core::{BenchmarkConvention, BlochVector, Curve, Scenario, SmeConfig};

use crate::config::{Engine, RunConfig};
use crate::error::{CliError, Result};

fn open_out(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).map_err(|source| {
            CliError::Io {
                context: format!("creating {}", p.display()),
                source,
            }
        })?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn write_err(source: io::Error) -> CliError {
    CliError::Io {
        context: "writing output".into(),
        source,
    }
}

/// The curve of `cfg` on its output grid, from the selected engine.
pub fn curve_data(cfg: &RunConfig) -> Result<CurveData> {
    let times = cfg.times();
    let (per, h) = cfg.aligned_step();
    let p = &cfg.params;
    let pick = |v: &[f64]| -> Vec<f64> { (0..cfg.points).map(|i| v[i * per]).collect() };
    let data = match cfg.engine {
        Engine::Analytic => {
            let curve = Curve::new(cfg.scenario, p.clone())?;
            if !curve.has_closed_form() {
                return Err(CliError::Usage(format!(
                    "{} has no closed form; use --engine ode or sme",
                    cfg.scenario
                )));
            }
            let values = times.iter().map(|&t| curve.eval(t)).collect();
            CurveData {
                times,
                values,
                stderr: None,
            }
        }
        Engine::Ode => {
            if cfg.scenario == Scenario::OpenLoop {
                return Err(CliError::Usage(
                    "the open-loop mean eigenvalue is not a function of the averaged state; \
                     use --engine analytic, sme or linear-mc"
                        .into(),
                ));
            }
            let rec = integrate_ode(p, BlochVector::ORIGIN, cfg.t_end, h)?;
            let xs: Vec<f64> = rec.states.iter().map(|b| b.x).collect();
            CurveData {
                times,
                values: pick(&xs),
                stderr: None,
            }
        }
        Engine::Sme => {
            let sme = SmeConfig::default().with_dt(h);
            let s = ensemble_mean(p, &sme, cfg.n_traj, cfg.t_end, cfg.seed)?;
            log::info!(
                "{} trajectories of {} at dt={h:e}",
                cfg.n_traj,
                cfg.scenario
            );
            CurveData {
                times,
                values: pick(&s.mean),
                stderr: Some(pick(&s.stderr)),
            }
        }
        Engine::LinearMc => {
            if cfg.scenario != Scenario::OpenLoop {
                return Err(CliError::Usage(format!(
                    "linear-mc samples the open-loop eigenvalue only, not {}",
                    cfg.scenario
                )));
            }
            let s = linear_trajectory_sample(p.gamma, &times[1..], cfg.n_traj, cfg.seed)?;
            // At t = 0 the state is maximally mixed on every path.
            let mut values = vec![0.5];
            values.extend(&s.lambda.mean);
            let mut stderr = vec![0.0];
            stderr.extend(&s.lambda.stderr);
            CurveData {
                times,
                values,
                stderr: Some(stderr),
            }
        }
    };
    Ok(data)
}

pub fn cmd_curve(cfg: &RunConfig) -> Result<()> {
    let data = curve_data(cfg)?;
    let mut out = open_out(cfg.out.as_deref())?;
    write_curve_csv(&mut out, &data)?;
    out.flush().map_err(write_err)
}

pub fn cmd_ensemble(cfg: &RunConfig) -> Result<()> {
    if !cfg.engine.is_stochastic() {
        return Err(CliError::Usage(format!(
            "ensemble needs a stochastic engine (sme or linear-mc), not {}",
            cfg.engine.name()
        )));
    }
    cmd_curve(cfg)
}

pub fn cmd_tables(
    which: Option<u8>,
    benchmark: BenchmarkConvention,
    out: Option<&Path>,
) -> Result<()> {
    let rows = match which {
        Some(w) => table(w, benchmark)?,
        None => reproduce_tables(benchmark)?,
    };
    let mut stdout = io::stdout().lock();
    let chunks: Vec<_> = rows.chunks(12).collect();
    for (k, chunk) in chunks.iter().enumerate() {
        let n = which.unwrap_or(k as u8 + 1);
        writeln!(
            stdout,
            "Table {n} (range A: {}, range B: {})",
            chunk[0].reference, chunk[1].reference
        )
        .map_err(write_err)?;
        write!(stdout, "{}", format_table(chunk, benchmark)).map_err(write_err)?;
        if k + 1 < chunks.len() {
            writeln!(stdout).map_err(write_err)?;
        }
    }
    if let Some(path) = out {
        let mut w = open_out(Some(path))?;
        write_table_csv(&mut w, &rows)?;
        w.flush().map_err(write_err)?;
    }
    Ok(())
}

/// Reference crossings, each with a bracket holding exactly one root.
pub fn standard_crossings(benchmark: BenchmarkConvention) -> Vec<(&'static str, CrossingQuery)> {
    let bench = Reference::Benchmark(benchmark);
    vec![
        (
            "alpha=1",
            CrossingQuery::new(Curve::constant(1.0), bench.clone(), 0.1, 2.0),
        ),
        (
            "delta=0.25",
            CrossingQuery::new(Curve::calibrated(0.25), bench.clone(), 1.0, 4.0),
        ),
        (
            "alpha=0.9 lower",
            CrossingQuery::new(Curve::constant(0.9), bench.clone(), 0.5, 2.5),
        ),
        (
            "alpha=0.9 upper",
            CrossingQuery::new(Curve::constant(0.9), bench, 2.5, 6.0),
        ),
        (
            "delta=0.05 vs alpha=1",
            CrossingQuery::new(
                Curve::calibrated(0.05),
                Reference::Curve(Curve::constant(1.0)),
                1.0,
                5.0,
            ),
        ),
    ]
}

pub fn cmd_crossings(cfg: &RunConfig, bracket: Option<(f64, f64)>) -> Result<()> {
    let queries = match bracket {
        Some((lo, hi)) => {
            let curve = Curve::new(cfg.scenario, cfg.params.clone())?;
            vec![(
                cfg.scenario.name(),
                CrossingQuery::new(curve, Reference::Benchmark(cfg.benchmark), lo, hi),
            )]
        }
        None => standard_crossings(cfg.benchmark),
    };
    let mut out = open_out(cfg.out.as_deref())?;
    writeln!(out, "curve,reference,lo,hi,t").map_err(write_err)?;
    for (label, q) in queries {
        let t = crossing_time(&q)?;
        let reference = match &q.reference {
            Reference::Benchmark(b) => format!("benchmark-{b}"),
            Reference::Curve(c) => c.name().to_string(),
        };
        let (lo, hi) = q.bracket;
        writeln!(
            out,
            "{label},{reference},{},{},{}",
            format_f64(lo),
            format_f64(hi),
            format_f64(t)
        )
        .map_err(write_err)?;
    }
    out.flush().map_err(write_err)
}

pub fn cmd_speedup(eps: &[f64], out: Option<&Path>) -> Result<()> {
    let ratios = rsp_core::analysis::asymptotic_speedup(eps)?;
    let mut w = open_out(out)?;
    writeln!(w, "epsilon,ratio").map_err(write_err)?;
    for (e, r) in eps.iter().zip(ratios) {
        writeln!(w, "{},{}", format_f64(*e), format_f64(r)).map_err(write_err)?;
    }
    w.flush().map_err(write_err)
}

/// Prints each report; the CSV log goes to `out` when given.
pub fn cmd_validate(level: Level, criteria: &[u8], out: Option<&Path>) -> Result<()> {
    let ids: Vec<u8> = if criteria.is_empty() {
        CRITERIA.to_vec()
    } else {
        criteria.to_vec()
    };
    let mut reports = Vec::new();
    let mut stdout = io::stdout().lock();
    for id in ids {
        let r = run_criterion(id, level)?;
        write!(stdout, "{r}").map_err(write_err)?;
        stdout.flush().map_err(write_err)?;
        reports.push(r);
    }
    if let Some(path) = out {
        let mut w = open_out(Some(path))?;
        write_report_csv(&mut w, &reports)?;
        w.flush().map_err(write_err)?;
    }
    let failed: Vec<u8> = reports
        .iter()
        .filter(|r| !r.passed())
        .map(|r| r.id)
        .collect();
    writeln!(
        stdout,
        "{} of {} criteria passed",
        reports.len() - failed.len(),
        reports.len()
    )
    .map_err(write_err)?;
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::ValidationFailed(failed))
    }
}
