use rayon::prelude::*;

use crate::error::{check, Result};
use crate::model::{BlochVector, FeedbackLaw, ScenarioParams};

use super::grid_index;
use super::sme::{run_path, SmeConfig};

/// Trajectories per work unit. Partial results are merged in index order, so
/// the output does not depend on the thread count.
const CHUNK: u64 = 64;

/// Mean of an observable over N trajectories, with its standard error.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleSummary {
    pub scenario: String,
    pub times: Vec<f64>,
    pub mean: Vec<f64>,
    /// Sample standard deviation over `√N`.
    pub stderr: Vec<f64>,
    pub n: usize,
}

impl EnsembleSummary {
    /// `(mean, stderr)` at the grid point nearest `t`.
    pub fn at(&self, t: f64) -> Option<(f64, f64)> {
        if self.times.len() < 2 {
            return (self.times.first() == Some(&t)).then(|| (self.mean[0], self.stderr[0]));
        }
        let dt = self.times[1] - self.times[0];
        let i = grid_index(dt, t, self.times.len())?;
        Some((self.mean[i], self.stderr[i]))
    }
}

/// Running mean and sum of squared deviations per grid point.
#[derive(Clone)]
pub(super) struct Moments {
    count: f64,
    mean: Vec<f64>,
    m2: Vec<f64>,
}

impl Moments {
    pub(super) fn new(len: usize) -> Self {
        Self {
            count: 0.0,
            mean: vec![0.0; len],
            m2: vec![0.0; len],
        }
    }

    pub(super) fn push(&mut self, values: &[f64]) {
        self.count += 1.0;
        for ((m, s), &v) in self.mean.iter_mut().zip(&mut self.m2).zip(values) {
            let d = v - *m;
            *m += d / self.count;
            *s += d * (v - *m);
        }
    }

    pub(super) fn merge(&mut self, other: &Moments) {
        if other.count == 0.0 {
            return;
        }
        let n = self.count + other.count;
        for i in 0..self.mean.len() {
            let d = other.mean[i] - self.mean[i];
            self.mean[i] += d * other.count / n;
            self.m2[i] += other.m2[i] + d * d * self.count * other.count / n;
        }
        self.count = n;
    }

    pub(super) fn summary(self, scenario: String, times: Vec<f64>) -> EnsembleSummary {
        let nf = self.count;
        let stderr = self
            .m2
            .iter()
            .map(|&s| (s.max(0.0) / (nf - 1.0) / nf).sqrt())
            .collect();
        EnsembleSummary {
            scenario,
            times,
            mean: self.mean,
            stderr,
            n: nf as usize,
        }
    }
}

fn observable(law: &FeedbackLaw, b: BlochVector) -> f64 {
    match law {
        // Verification probability after the final conditional rotation.
        FeedbackLaw::OpenLoop => 0.5 * (1.0 + b.length()),
        _ => b.x,
    }
}

/// Averages `n` trajectories seeded `base_seed + i`. The observable is
/// `⟨λ_max⟩` for the open-loop law and `⟨x⟩` otherwise.
pub fn ensemble_mean(
    p: &ScenarioParams,
    cfg: &SmeConfig,
    n: usize,
    t_end: f64,
    base_seed: u64,
) -> Result<EnsembleSummary> {
    check(n >= 2, "n", n as f64, "need at least two trajectories")?;
    // Fail fast on bad input instead of once per worker.
    p.validate()?;
    cfg.validate()?;
    let (steps, dt) = super::uniform_grid(t_end, cfg.dt);
    let len = steps + 1;
    let chunks: Vec<(u64, u64)> = (0..n as u64)
        .step_by(CHUNK as usize)
        .map(|lo| (lo, (lo + CHUNK).min(n as u64)))
        .collect();
    let partials: Vec<Result<Moments>> = chunks
        .par_iter()
        .map(|&(lo, hi)| {
            let mut acc = Moments::new(len);
            let mut values = vec![0.0; len];
            for i in lo..hi {
                let mut k = 0;
                run_path(p, cfg, base_seed.wrapping_add(i), t_end, |_, b, _| {
                    values[k] = observable(&p.law, b);
                    k += 1;
                })?;
                acc.push(&values);
            }
            Ok(acc)
        })
        .collect();
    let mut total = Moments::new(len);
    for part in partials {
        total.merge(&part?);
    }
    let times = (0..len).map(|i| i as f64 * dt).collect();
    Ok(total.summary(p.law.name().to_string(), times))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn moments_merge_matches_single_pass() {
        let data: Vec<f64> = (0..37).map(|i| ((i * 7919) % 101) as f64 / 10.0).collect();
        let mut whole = Moments::new(1);
        for &v in &data {
            whole.push(&[v]);
        }
        let mut left = Moments::new(1);
        let mut right = Moments::new(1);
        for &v in &data[..20] {
            left.push(&[v]);
        }
        for &v in &data[20..] {
            right.push(&[v]);
        }
        left.merge(&right);
        assert!((left.mean[0] - whole.mean[0]).abs() < 1e-12);
        assert!((left.m2[0] - whole.m2[0]).abs() < 1e-9);
    }

    #[test]
    fn ensemble_is_deterministic_and_has_finite_errors() {
        let p = ScenarioParams::new(FeedbackLaw::Constant { alpha: 1.0 });
        let cfg = SmeConfig::default();
        let a = ensemble_mean(&p, &cfg, 100, 0.2, 5).unwrap();
        let b = ensemble_mean(&p, &cfg, 100, 0.2, 5).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.times.len(), 201);
        assert!(a.stderr.iter().all(|s| s.is_finite()));
        assert_eq!(a.at(0.0), Some((0.0, 0.0)));
        assert!(ensemble_mean(&p, &cfg, 1, 0.2, 5).is_err());
    }
}
