//! Reproducible parallel Monte Carlo.
//!
//! Per-path work is a pure function of `(master_seed, path_index)`, results
//! are gathered in index order, and reduction happens single-threaded over
//! the gathered vector, so a report is a pure function of the configuration
//! no matter how many workers ran it.

use crate::determinacy::TauSample;
use crate::error::{Error, Result};
use crate::rng;
use rayon::prelude::*;
use serde::Serialize;

/// Deterministic per-path stream seed (SplitMix64 avalanche of the pair).
pub fn per_path_seed(master_seed: u64, path_index: u64) -> u64 {
    rng::derive_key(master_seed, path_index)
}

/// Execution settings for an ensemble run.
#[derive(Clone, Debug)]
pub struct EnsembleConfig {
    pub num_paths: u64,
    /// 0 means the process-wide default worker count.
    pub num_workers: usize,
    pub master_seed: u64,
}

/// Indexed results of an ensemble run.
#[derive(Debug)]
pub struct EnsembleRun<T> {
    /// One slot per path index; `None` where the task failed.
    pub results: Vec<Option<T>>,
    /// Failures as `(path_index, message)`, in index order.
    pub failures: Vec<(u64, String)>,
    pub wall_clock_seconds: f64,
}

impl<T> EnsembleRun<T> {
    pub fn complete(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Runs `task` over path indices `0..num_paths` on a work pool and gathers
/// results in fixed index order. The task must be a pure function of the
/// path index (derive randomness via [`per_path_seed`]); the output is then
/// bit-identical for any worker count.
pub fn run_ensemble<T, F>(cfg: &EnsembleConfig, task: F) -> Result<EnsembleRun<T>>
where
    T: Send,
    F: Fn(u64) -> std::result::Result<T, String> + Sync,
{
    if cfg.num_paths < 1 {
        return Err(Error::config("num_paths must be >= 1"));
    }
    let started = std::time::Instant::now();
    let gathered: Vec<std::result::Result<T, String>> = if cfg.num_workers == 0 {
        (0..cfg.num_paths).into_par_iter().map(&task).collect()
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.num_workers)
            .build()
            .map_err(|e| Error::config(format!("worker pool: {e}")))?;
        pool.install(|| (0..cfg.num_paths).into_par_iter().map(&task).collect())
    };
    let mut results = Vec::with_capacity(gathered.len());
    let mut failures = Vec::new();
    for (i, r) in gathered.into_iter().enumerate() {
        match r {
            Ok(v) => results.push(Some(v)),
            Err(msg) => {
                results.push(None);
                failures.push((i as u64, msg));
            }
        }
    }
    Ok(EnsembleRun {
        results,
        failures,
        wall_clock_seconds: started.elapsed().as_secs_f64(),
    })
}

/// Sample mean and standard error `sd / sqrt(n)`; the standard error is
/// `None` for fewer than two samples.
pub fn mean_stderr(xs: &[f64]) -> (f64, Option<f64>) {
    let n = xs.len();
    if n == 0 {
        return (f64::NAN, None);
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    if n < 2 {
        return (mean, None);
    }
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1) as f64;
    (mean, Some((var / n as f64).sqrt()))
}

/// Monte Carlo estimate of the Laplace transform `E exp(-lambda tau)`.
///
/// Censored samples contribute 0 to `mean` (their true contribution is at
/// most `exp(-lambda T)`), making `mean` a lower bound; `upper_bound` adds
/// `exp(-lambda T)` per censored sample. The standard error is over the
/// full series with censored entries at 0.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct LaplaceEstimate {
    pub lambda: f64,
    pub mean: f64,
    pub upper_bound: f64,
    pub stderr: f64,
    pub n_censored: usize,
    pub n_total: usize,
}

pub fn estimate_laplace(taus: &[TauSample], lambda: f64, horizon: f64) -> Result<LaplaceEstimate> {
    if taus.is_empty() {
        return Err(Error::usage("estimate_laplace needs at least one sample"));
    }
    if !(lambda > 0.0) {
        return Err(Error::domain(format!("lambda = {lambda} must be positive")));
    }
    let z: Vec<f64> = taus
        .iter()
        .map(|s| match s.tau {
            Some(t) => (-lambda * t).exp(),
            None => 0.0,
        })
        .collect();
    let n_censored = taus.iter().filter(|s| s.censored()).count();
    let (mean, stderr) = mean_stderr(&z);
    let censor_bound = (-lambda * horizon).exp();
    Ok(LaplaceEstimate {
        lambda,
        mean,
        upper_bound: mean + censor_bound * n_censored as f64 / taus.len() as f64,
        stderr: stderr.unwrap_or(0.0),
        n_censored,
        n_total: taus.len(),
    })
}

/// Right-continuous empirical distribution: jumps of `1/total` at each
/// sorted sample. `total` may exceed the stored sample count when part of
/// the ensemble is censored beyond the evaluation range.
#[derive(Clone, Debug)]
pub struct Ecdf {
    sorted: Vec<f64>,
    total: usize,
}

/// Builds the ECDF of `samples` (nonempty, all finite).
pub fn ecdf(samples: &[f64]) -> Result<Ecdf> {
    Ecdf::with_total(samples, samples.len())
}

impl Ecdf {
    /// ECDF carrying `total >= samples.len()` as the jump denominator.
    pub fn with_total(samples: &[f64], total: usize) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::usage("ecdf needs at least one sample"));
        }
        if total < samples.len() {
            return Err(Error::usage("total must be at least the sample count"));
        }
        if samples.iter().any(|x| !x.is_finite()) {
            return Err(Error::domain("ecdf samples must be finite"));
        }
        let mut sorted = samples.to_vec();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        Ok(Ecdf { sorted, total })
    }

    /// `F_N(x)`: fraction of mass at or below `x`.
    pub fn value(&self, x: f64) -> f64 {
        let idx = self.sorted.partition_point(|&s| s <= x);
        idx as f64 / self.total as f64
    }

    pub fn sorted_samples(&self) -> &[f64] {
        &self.sorted
    }

    pub fn total(&self) -> usize {
        self.total
    }

    /// `(x, F_N(x))` pairs at the jump points, thinned to at most
    /// `max_knots` by quantile striding (deterministic).
    pub fn knots(&self, max_knots: usize) -> Vec<(f64, f64)> {
        let n = self.sorted.len();
        let stride = (n + max_knots - 1) / max_knots.max(1);
        let mut out = Vec::new();
        let mut i = 0;
        while i < n {
            out.push((self.sorted[i], (i + 1) as f64 / self.total as f64));
            i += stride.max(1);
        }
        if let Some(&last) = self.sorted.last() {
            if out.last().map(|&(x, _)| x) != Some(last) {
                out.push((last, n as f64 / self.total as f64));
            }
        }
        out
    }
}

/// Kolmogorov-Smirnov distance of an ECDF against a reference distribution
/// function, evaluated at the sample points:
///
/// ```text
/// D = max_i max( F_N(x_i) - F(x_i),  F(x_i) - F_N(x_i-) )
/// ```
///
/// This is the exact sup-distance for a continuous reference; against a
/// step reference it may overestimate by up to one jump (`1/total`).
pub fn ks_distance(e: &Ecdf, reference: impl Fn(f64) -> f64) -> f64 {
    let n = e.total as f64;
    let mut d = 0.0f64;
    let mut i = 0usize;
    let samples = &e.sorted;
    while i < samples.len() {
        let x = samples[i];
        // Count duplicates in one block.
        let mut j = i + 1;
        while j < samples.len() && samples[j] == x {
            j += 1;
        }
        let f = reference(x);
        let below = i as f64 / n;
        let at = j as f64 / n;
        d = d.max(at - f).max(f - below);
        i = j;
    }
    d
}

/// One labelled statistic in a report.
#[derive(Clone, Debug, Serialize)]
pub struct StatRecord {
    pub name: String,
    pub mean: f64,
    pub stderr: Option<f64>,
}

/// Reduced output of a Monte Carlo experiment. Serialization has a stable
/// field order and excludes the wall clock so that identical configurations
/// produce byte-identical reports at any worker count.
#[derive(Debug, Serialize)]
pub struct EnsembleReport {
    pub experiment: String,
    pub master_seed: u64,
    pub num_paths: u64,
    pub num_failures: usize,
    /// `(path_index, message)` for failed paths; empty on full completion.
    pub failures: Vec<(u64, String)>,
    pub stats: Vec<StatRecord>,
    pub laplace: Vec<LaplaceEstimate>,
    pub ks_vs_reference: Option<f64>,
    pub ecdf_knots: Vec<(f64, f64)>,
    #[serde(skip)]
    pub wall_clock_seconds: f64,
}

impl EnsembleReport {
    pub fn new(experiment: impl Into<String>, master_seed: u64, num_paths: u64) -> Self {
        EnsembleReport {
            experiment: experiment.into(),
            master_seed,
            num_paths,
            num_failures: 0,
            failures: Vec::new(),
            stats: Vec::new(),
            laplace: Vec::new(),
            ks_vs_reference: None,
            ecdf_knots: Vec::new(),
            wall_clock_seconds: 0.0,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::determinacy::TauMethod;
    use std::collections::HashSet;

    #[test]
    fn per_path_seed_is_deterministic_and_collision_free() {
        assert_eq!(per_path_seed(7, 9), per_path_seed(7, 9));
        assert_ne!(per_path_seed(7, 0), per_path_seed(7, 1));
        let mut seen = HashSet::with_capacity(1_000_000);
        for i in 0..1_000_000u64 {
            assert!(seen.insert(per_path_seed(123, i)), "duplicate at {i}");
        }
    }

    fn tau(t: Option<f64>) -> TauSample {
        TauSample {
            path_index: 0,
            method: TauMethod::Direct,
            tau: t,
            local_time_at_horizon: if t.is_some() { 1.0 } else { 0.5 },
            exhausted: t.is_some(),
        }
    }

    #[test]
    fn laplace_estimate_edge_cases() {
        let zeros: Vec<TauSample> = (0..5).map(|_| tau(Some(0.0))).collect();
        let e = estimate_laplace(&zeros, 1.0, 10.0).unwrap();
        assert_eq!(e.mean, 1.0);
        assert_eq!(e.stderr, 0.0);
        assert_eq!(e.n_censored, 0);

        let censored: Vec<TauSample> = (0..4).map(|_| tau(None)).collect();
        let e = estimate_laplace(&censored, 0.5, 10.0).unwrap();
        assert_eq!(e.mean, 0.0);
        assert!((e.upper_bound - (-5.0f64).exp()).abs() < 1e-15);
        assert_eq!(e.n_censored, 4);

        assert!(estimate_laplace(&[], 1.0, 10.0).is_err());
        assert!(estimate_laplace(&zeros, 0.0, 10.0).is_err());
    }

    #[test]
    fn ecdf_shapes() {
        let e = ecdf(&[1.0]).unwrap();
        assert_eq!(e.value(0.999), 0.0);
        assert_eq!(e.value(1.0), 1.0);

        let e = ecdf(&[1.0, 1.0, 2.0]).unwrap();
        assert!((e.value(1.0) - 2.0 / 3.0).abs() < 1e-15);
        assert!((e.value(2.0) - 1.0).abs() < 1e-15);

        // Permutation invariance.
        let a = ecdf(&[3.0, 1.0, 2.0]).unwrap();
        let b = ecdf(&[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(a.sorted_samples(), b.sorted_samples());

        assert!(ecdf(&[]).is_err());
    }

    #[test]
    fn ks_distance_examples() {
        // Single sample at the reference median: distance 1/2.
        let e = ecdf(&[0.0]).unwrap();
        let d = ks_distance(&e, |_| 0.5);
        assert!((d - 0.5).abs() < 1e-15);

        // Against itself the formula pays at most one jump.
        let e = ecdf(&[1.0, 2.0, 3.0, 4.0]).unwrap();
        let d = ks_distance(&e, |x| e.value(x));
        assert!(d <= 0.25 + 1e-15, "self-distance {d}");
    }

    #[test]
    fn ks_of_uniform_samples_respects_the_dkw_band() {
        // 99% quantile of the Kolmogorov law is ~1.63/sqrt(N).
        let n = 1000usize;
        let trials = 200usize;
        let mut ok = 0;
        for t in 0..trials {
            let key = per_path_seed(42, t as u64);
            let xs: Vec<f64> = (0..n).map(|i| crate::rng::uniform(key, i as u64)).collect();
            let e = ecdf(&xs).unwrap();
            let d = ks_distance(&e, |x| x.clamp(0.0, 1.0));
            if d <= 1.63 / (n as f64).sqrt() {
                ok += 1;
            }
        }
        assert!(
            ok >= trials * 97 / 100,
            "only {ok}/{trials} inside the band"
        );
    }

    #[test]
    fn ensemble_is_schedule_independent() {
        let task = |i: u64| -> std::result::Result<f64, String> {
            let key = per_path_seed(99, i);
            let mut acc = 0.0;
            for c in 0..50 {
                acc += crate::rng::standard_normal(key, c);
            }
            Ok(acc)
        };
        let mut outputs = Vec::new();
        for workers in [1usize, 4, 8] {
            let cfg = EnsembleConfig {
                num_paths: 200,
                num_workers: workers,
                master_seed: 99,
            };
            let run = run_ensemble(&cfg, task).unwrap();
            assert!(run.complete());
            let vals: Vec<f64> = run.results.into_iter().map(Option::unwrap).collect();
            outputs.push(vals);
        }
        assert_eq!(outputs[0], outputs[1]);
        assert_eq!(outputs[0], outputs[2]);
    }

    #[test]
    fn ensemble_records_failures_per_index() {
        let cfg = EnsembleConfig {
            num_paths: 10,
            num_workers: 2,
            master_seed: 0,
        };
        let run = run_ensemble(&cfg, |i| {
            if i % 4 == 3 {
                Err(format!("boom {i}"))
            } else {
                Ok(i as f64)
            }
        })
        .unwrap();
        assert!(!run.complete());
        assert_eq!(run.failures.len(), 2);
        assert_eq!(run.failures[0].0, 3);
        assert_eq!(run.failures[1].0, 7);
        assert!(run.results[3].is_none());
        assert_eq!(run.results[2], Some(2.0));
    }

    #[test]
    fn single_path_ensemble_flags_undefined_stderr() {
        let (m, se) = mean_stderr(&[4.2]);
        assert_eq!(m, 4.2);
        assert!(se.is_none());
    }
}
