//! The time of determinacy for power-law noise.
//!
//! Under `sigma_p(l) = (1 - l)^p` the noise dies as local time accumulates;
//! once `L` reaches 1 the path is deterministic. The machinery here rests on
//! the time change `L(tau_B(S_p(alpha))) = alpha` where
//! `S_p(alpha) = int_0^alpha dl / sigma_p(l)` converts a local-time target
//! into a barrier for the driver's running minimum. Consequences:
//!
//! * the time of determinacy is the driver's first passage at the barrier
//!   `S_p(1-) = 1/(1-p)`, finite for `p < 1`, infinite for `p >= 1`;
//! * its law is the Brownian first-passage (Levy) law with Laplace
//!   transform `exp(-sqrt(2 lambda)/(1 - p))`;
//! * solutions built with the truncated coefficients `sigma_{p,delta}`
//!   agree on growing time windows as `delta` decreases down a ladder, and
//!   patch into the `sigma_p` solution.
//!
//! Two samplers are provided: `sample_tau_direct` reads the first passage
//! off the driver, `sample_tau_scheme` walks the truncation ladder running
//! the approximation scheme on each rung. Both reduce to the same
//! piecewise-linear crossing of the same driver.

use crate::error::{Error, Result};
use crate::noise::NoiseCoefficient;
use crate::paths::{BrownianSampler, Passage};
use crate::scheme::{construct_by_hitting, SchemeSolution};

/// Barrier the driver's running minimum must reach for the local time of
/// the `sigma_p` solution to reach `alpha`:
/// `S_p(alpha) = (1 - (1-alpha)^(1-p)) / (1-p)`, with the `p = 1` limit
/// `-ln(1 - alpha)`.
pub fn barrier_for_local_time(p: f64, alpha: f64) -> Result<f64> {
    if !(p >= 0.0) {
        return Err(Error::domain(format!("p = {p} must be >= 0")));
    }
    if !(0.0..1.0).contains(&alpha) {
        return Err(Error::domain(format!(
            "alpha = {alpha} must lie in [0, 1); use determinacy_barrier for the limit"
        )));
    }
    if p == 1.0 {
        Ok(-(1.0 - alpha).ln())
    } else {
        Ok((1.0 - (1.0 - alpha).powf(1.0 - p)) / (1.0 - p))
    }
}

/// The total barrier `S_p(1-)`: `1/(1-p)` for `p < 1`, infinite for
/// `p >= 1`.
pub fn determinacy_barrier(p: f64) -> f64 {
    if p < 1.0 {
        1.0 / (1.0 - p)
    } else {
        f64::INFINITY
    }
}

/// Inverse of [`barrier_for_local_time`]: the local time accumulated once
/// the driver's running minimum has reached `m >= 0`. Clamps to 1 at and
/// beyond the total barrier.
pub fn local_time_from_barrier(p: f64, m: f64) -> f64 {
    debug_assert!(p >= 0.0 && m >= 0.0);
    if p == 1.0 {
        return 1.0 - (-m).exp();
    }
    let arg = 1.0 - (1.0 - p) * m;
    if arg <= 0.0 {
        1.0 // at or past the barrier (only reachable for p < 1)
    } else {
        1.0 - arg.powf(1.0 / (1.0 - p))
    }
}

/// Laplace transform `E exp(-lambda tau_p) = exp(-sqrt(2 lambda)/(1-p))`
/// of the time of determinacy, `0 <= p < 1`.
pub fn laplace_reference(p: f64, lambda: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&p) {
        return Err(Error::domain(format!(
            "p = {p} must lie in [0, 1) (the time of determinacy is infinite otherwise)"
        )));
    }
    if !(lambda > 0.0) {
        return Err(Error::domain(format!("lambda = {lambda} must be positive")));
    }
    Ok((-(2.0 * lambda).sqrt() / (1.0 - p)).exp())
}

/// First-passage (Levy) law of the time a Brownian running minimum exceeds
/// `a > 0`: `P(tau <= t) = erfc(a / sqrt(2 t))`.
pub fn levy_cdf(a: f64, t: f64) -> f64 {
    debug_assert!(a > 0.0 && t > 0.0);
    libm::erfc(a / (2.0 * t).sqrt())
}

/// How a determinacy time was produced.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TauMethod {
    /// First passage read directly off the driver.
    Direct,
    /// Truncation ladder of scheme runs.
    Scheme,
}

impl TauMethod {
    pub fn as_str(&self) -> &'static str {
        match self {
            TauMethod::Direct => "direct",
            TauMethod::Scheme => "scheme",
        }
    }
}

/// One sampled time of determinacy.
#[derive(Clone, Copy, Debug)]
pub struct TauSample {
    pub path_index: u64,
    pub method: TauMethod,
    /// `None` means not observed by the horizon (censored), never a proof
    /// of infinity.
    pub tau: Option<f64>,
    /// Local time at the horizon: below 1 exactly when censored.
    pub local_time_at_horizon: f64,
    /// Set when the noise was exhausted (the sample is determined and `L`
    /// is conventionally extended past 1 rather than stored as infinite).
    pub exhausted: bool,
}

impl TauSample {
    pub fn censored(&self) -> bool {
        self.tau.is_none()
    }
}

/// Configuration of the ladder sampler.
#[derive(Clone, Debug)]
pub struct DeterminacyConfig {
    pub p: f64,
    /// Strictly decreasing truncation levels in (0, 1).
    pub delta_ladder: Vec<f64>,
    /// Scheme level used on each rung.
    pub scheme_n: u32,
    pub sampler: BrownianSampler,
}

impl DeterminacyConfig {
    pub fn new(
        p: f64,
        delta_ladder: Vec<f64>,
        scheme_n: u32,
        sampler: BrownianSampler,
    ) -> Result<Self> {
        if !(p >= 0.0) {
            return Err(Error::domain(format!("p = {p} must be >= 0")));
        }
        if delta_ladder.is_empty() {
            return Err(Error::config("the truncation ladder must not be empty"));
        }
        for w in delta_ladder.windows(2) {
            if !(w[1] < w[0]) {
                return Err(Error::config("ladder must be strictly decreasing"));
            }
        }
        if !(delta_ladder[0] < 1.0 && *delta_ladder.last().unwrap() > 0.0) {
            return Err(Error::config("ladder values must lie in (0, 1)"));
        }
        if scheme_n < 1 {
            return Err(Error::config("scheme_n must be >= 1"));
        }
        Ok(DeterminacyConfig {
            p,
            delta_ladder,
            scheme_n,
            sampler,
        })
    }

    /// The default ladder `1/2, 1/3, ..., 1/k_max`.
    pub fn default_ladder(k_max: u32) -> Vec<f64> {
        (2..=k_max.max(2)).map(|k| 1.0 / k as f64).collect()
    }
}

/// Samples the time of determinacy as the driver's first passage at the
/// barrier `S_p(1-)`, requiring `0 <= p < 1`. Lazy over the refined path:
/// censored long-horizon paths are never materialized.
pub fn sample_tau_direct(p: f64, sampler: &BrownianSampler, path_index: u64) -> Result<TauSample> {
    if !(0.0..1.0).contains(&p) {
        return Err(Error::domain(format!(
            "p = {p} must lie in [0, 1) for the direct method; the ladder handles p >= 1"
        )));
    }
    let barrier = determinacy_barrier(p);
    match sampler.first_passage_below(path_index, -barrier) {
        Passage::Hit(t) => Ok(TauSample {
            path_index,
            method: TauMethod::Direct,
            tau: Some(t),
            local_time_at_horizon: 1.0,
            exhausted: true,
        }),
        Passage::NoHit { min_value } => Ok(TauSample {
            path_index,
            method: TauMethod::Direct,
            tau: None,
            local_time_at_horizon: local_time_from_barrier(p, (-min_value).max(0.0)),
            exhausted: false,
        }),
    }
}

/// One rung of a ladder run: the truncation level, the scheme solution it
/// produced, and the time up to which that solution is the `sigma_p`
/// solution (the driver's first passage at `S_p(1 - delta)`).
#[derive(Clone, Debug)]
pub struct LadderRung {
    pub delta: f64,
    pub valid_until: Option<f64>,
    pub solution: SchemeSolution,
}

/// Ladder sampler: runs the scheme with `sigma_{p, delta_k}` down the
/// ladder and reports the limit of the rung hitting times, which is the
/// driver's first passage at `S_p(1-)`. For `p >= 1` every sample is
/// censored by the horizon.
pub fn sample_tau_scheme(cfg: &DeterminacyConfig, path_index: u64) -> Result<TauSample> {
    let (sample, _) = sample_tau_scheme_with_rungs(cfg, path_index)?;
    Ok(sample)
}

/// As [`sample_tau_scheme`], additionally returning the per-rung solutions
/// for agreement and extinction diagnostics.
pub fn sample_tau_scheme_with_rungs(
    cfg: &DeterminacyConfig,
    path_index: u64,
) -> Result<(TauSample, Vec<LadderRung>)> {
    let driver = cfg.sampler.sample(path_index);
    let mut rungs = Vec::with_capacity(cfg.delta_ladder.len());
    for &delta in &cfg.delta_ladder {
        let sigma = NoiseCoefficient::truncated_power_law(cfg.p, delta)?;
        let solution = construct_by_hitting(&driver, &sigma, cfg.scheme_n, 0.0)?;
        let rung_barrier = barrier_for_local_time(cfg.p, 1.0 - delta)?;
        let valid_until = driver.hitting_time(rung_barrier)?;
        rungs.push(LadderRung {
            delta,
            valid_until,
            solution,
        });
    }
    let barrier = determinacy_barrier(cfg.p);
    let tau = if barrier.is_finite() {
        driver.hitting_time(barrier)?
    } else {
        None
    };
    let sample = match tau {
        Some(t) => TauSample {
            path_index,
            method: TauMethod::Scheme,
            tau: Some(t),
            local_time_at_horizon: 1.0,
            exhausted: true,
        },
        None => {
            let m = driver.running_min().last_value();
            TauSample {
                path_index,
                method: TauMethod::Scheme,
                tau: None,
                local_time_at_horizon: local_time_from_barrier(cfg.p, m),
                exhausted: false,
            }
        }
    };
    Ok((sample, rungs))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn barrier_integral_examples() {
        assert!((barrier_for_local_time(0.0, 0.7).unwrap() - 0.7).abs() < 1e-15);
        let a = 1.0 - (-1.0f64).exp();
        assert!((barrier_for_local_time(1.0, a).unwrap() - 1.0).abs() < 1e-12);
        // p = 0.5: S -> 2 as alpha -> 1.
        let near = barrier_for_local_time(0.5, 1.0 - 1e-12).unwrap();
        assert!((near - 2.0).abs() < 1e-5);
        assert!(barrier_for_local_time(0.5, 1.0).is_err());

        // Brute-force quadrature oracle for assorted (p, alpha).
        for &(p, alpha) in &[(0.0, 0.3), (0.5, 0.8), (1.0, 0.6), (2.0, 0.5), (0.25, 0.95)] {
            let n = 400_000usize;
            let h = alpha / n as f64;
            let mut acc = 0.0;
            for i in 0..n {
                let l = (i as f64 + 0.5) * h;
                acc += h / (1.0 - l).powf(p);
            }
            let got = barrier_for_local_time(p, alpha).unwrap();
            assert!(
                (got - acc).abs() < 1e-6 * acc.max(1.0),
                "p={p} alpha={alpha}: {got} vs quadrature {acc}"
            );
        }
    }

    #[test]
    fn barrier_limit_values() {
        assert_eq!(determinacy_barrier(0.0), 1.0);
        assert_eq!(determinacy_barrier(0.5), 2.0);
        assert_eq!(determinacy_barrier(1.0), f64::INFINITY);
        assert_eq!(determinacy_barrier(3.0), f64::INFINITY);
    }

    #[test]
    fn barrier_inverse_roundtrips() {
        for &p in &[0.0, 0.3, 0.5, 1.0, 1.5, 2.0] {
            for &alpha in &[0.0, 0.2, 0.5, 0.9, 0.999] {
                let m = barrier_for_local_time(p, alpha).unwrap();
                let back = local_time_from_barrier(p, m);
                assert!(
                    (back - alpha).abs() < 1e-9,
                    "p={p} alpha={alpha}: back = {back}"
                );
            }
            // Past the barrier: clamped to 1 (p < 1 only).
            if p < 1.0 {
                assert_eq!(
                    local_time_from_barrier(p, determinacy_barrier(p) + 1.0),
                    1.0
                );
            }
        }
    }

    #[test]
    fn laplace_reference_examples() {
        assert!((laplace_reference(0.0, 2.0).unwrap() - (-2.0f64).exp()).abs() < 1e-15);
        assert!((laplace_reference(0.0, 0.5).unwrap() - (-1.0f64).exp()).abs() < 1e-15);
        assert!((laplace_reference(0.5, 0.5).unwrap() - (-2.0f64).exp()).abs() < 1e-15);
        assert!(laplace_reference(1.0, 1.0).is_err());
        assert!(laplace_reference(1.5, 1.0).is_err());
    }

    #[test]
    fn levy_cdf_values_and_laplace_consistency() {
        assert!((levy_cdf(1.0, 1e12) - 1.0).abs() < 1e-6);
        assert!((levy_cdf(1.0, 1.0) - 0.3173105078629141).abs() < 1e-12);

        // Quadrature of exp(-t) against the first-passage density
        // a/sqrt(2 pi t^3) exp(-a^2/(2t)) must reproduce exp(-sqrt(2)).
        let a = 1.0f64;
        let lambda = 1.0f64;
        let n = 2_000_000usize;
        let t_max = 200.0;
        let h = t_max / n as f64;
        let mut acc = 0.0;
        for i in 0..n {
            let t = (i as f64 + 0.5) * h;
            let dens = a / (std::f64::consts::TAU * t * t * t).sqrt() * (-a * a / (2.0 * t)).exp();
            acc += h * (-lambda * t).exp() * dens;
        }
        let want = (-(2.0f64).sqrt()).exp();
        assert!(
            (acc - want).abs() < 1e-3,
            "quadrature {acc} vs exp(-sqrt(2)) = {want}"
        );
    }

    fn test_sampler(horizon: f64) -> BrownianSampler {
        BrownianSampler::new(2121, 0.005, horizon, 1).unwrap()
    }

    #[test]
    fn direct_sampler_matches_materialized_hitting_time() {
        let sampler = test_sampler(20.0);
        for i in 0..30 {
            let s = sample_tau_direct(0.0, &sampler, i).unwrap();
            let materialized = sampler.sample(i).hitting_time(1.0).unwrap();
            match (s.tau, materialized) {
                (Some(a), Some(b)) => assert_eq!(a, b, "path {i}"),
                (None, None) => {
                    assert!(s.local_time_at_horizon < 1.0);
                    assert!(!s.exhausted);
                }
                other => panic!("path {i}: {other:?}"),
            }
            if let Some(tau) = s.tau {
                assert!(s.exhausted && s.local_time_at_horizon == 1.0);
                assert!(tau > 0.0);
            }
        }
        assert!(sample_tau_direct(1.0, &sampler, 0).is_err());
    }

    #[test]
    fn direct_ensemble_tracks_levy_law() {
        let sampler = test_sampler(30.0);
        let n = 2000u64;
        let mut hits_by_1 = 0usize;
        for i in 0..n {
            if let Some(t) = sample_tau_direct(0.0, &sampler, i).unwrap().tau {
                if t <= 1.0 {
                    hits_by_1 += 1;
                }
            }
        }
        let est = hits_by_1 as f64 / n as f64;
        let want = levy_cdf(1.0, 1.0);
        let se = (want * (1.0 - want) / n as f64).sqrt();
        // 3 standard errors plus a discretization allowance ~ sqrt(dt_eff).
        assert!(
            (est - want).abs() <= 3.0 * se + 0.03,
            "P(tau <= 1) = {est} vs {want}"
        );
    }

    fn ladder_cfg(p: f64, horizon: f64) -> DeterminacyConfig {
        DeterminacyConfig::new(
            p,
            DeterminacyConfig::default_ladder(4),
            256,
            test_sampler(horizon),
        )
        .unwrap()
    }

    #[test]
    fn scheme_and_direct_reduce_to_the_same_crossing() {
        let cfg = ladder_cfg(0.5, 20.0);
        for i in 0..20 {
            let s = sample_tau_scheme(&cfg, i).unwrap();
            let d = sample_tau_direct(0.5, &cfg.sampler, i).unwrap();
            assert_eq!(s.tau, d.tau, "path {i}");
        }
    }

    #[test]
    fn ladder_rungs_agree_on_their_common_domain() {
        let cfg = DeterminacyConfig::new(0.5, vec![0.5, 0.25], 128, test_sampler(20.0)).unwrap();
        for i in 0..10 {
            let (_, rungs) = sample_tau_scheme_with_rungs(&cfg, i).unwrap();
            let coarse = &rungs[0];
            let fine = &rungs[1];
            let Some(t_common) = coarse.valid_until else {
                continue;
            };
            // Knot-identical prefixes: the truncation is inactive while the
            // local time stays at or below 1 - delta.
            let xa = &coarse.solution.x;
            let xb = &fine.solution.x;
            for (k, (t, v)) in xa.knots().enumerate() {
                if t > t_common {
                    break;
                }
                assert_eq!(xb.times()[k], t, "path {i} knot {k}");
                assert_eq!(xb.values()[k], v, "path {i} knot {k}");
            }
        }
    }

    #[test]
    fn time_change_identity_on_ladder_solutions() {
        // |L(tau_driver(S_p(alpha))) - alpha| <= 2/n + grid allowance.
        let n = 512u32;
        let p = 0.5;
        let sigma = NoiseCoefficient::truncated_power_law(p, 0.1).unwrap();
        let sampler = test_sampler(30.0);
        let mut checked = 0;
        for i in 0..10 {
            let driver = sampler.sample(i);
            let sol = construct_by_hitting(&driver, &sigma, n, 0.0).unwrap();
            for &alpha in &[0.25, 0.5, 0.9] {
                let barrier = barrier_for_local_time(p, alpha).unwrap();
                if let Some(t) = driver.hitting_time(barrier).unwrap() {
                    let l = sol.local_time.eval(t).unwrap();
                    assert!(
                        (l - alpha).abs() <= 2.0 / n as f64 + 0.005,
                        "path {i} alpha {alpha}: L = {l}"
                    );
                    checked += 1;
                }
            }
        }
        assert!(checked > 10, "too few realized hits ({checked})");
    }

    #[test]
    fn tau_is_monotone_in_p_on_a_fixed_driver() {
        let sampler = test_sampler(50.0);
        for i in 0..10 {
            let mut prev: Option<f64> = Some(0.0);
            for &p in &[0.0, 0.25, 0.5, 0.75] {
                let tau = sample_tau_direct(p, &sampler, i).unwrap().tau;
                match (prev, tau) {
                    (Some(a), Some(b)) => assert!(b >= a, "path {i} p={p}"),
                    (None, Some(_)) => panic!("path {i}: tau decreased to finite at p={p}"),
                    _ => {}
                }
                prev = tau;
            }
        }
    }

    #[test]
    fn noise_extinction_along_the_ladder() {
        // At the reported tau the noise is at or below delta^p for the
        // deepest rung whose window reached it.
        let cfg = ladder_cfg(0.5, 30.0);
        let sigma_p = NoiseCoefficient::power_law(cfg.p).unwrap();
        for i in 0..10 {
            let (sample, rungs) = sample_tau_scheme_with_rungs(&cfg, i).unwrap();
            let Some(tau) = sample.tau else { continue };
            for rung in &rungs {
                let Some(valid) = rung.valid_until else {
                    continue;
                };
                if valid <= tau {
                    // L has reached 1 - delta by `valid`, so sigma_p(L) has
                    // decayed to delta^p there and never recovers.
                    let l = rung.solution.local_time.eval(valid).unwrap();
                    let noise = sigma_p.eval(l.min(1.0)).unwrap();
                    let cap = rung.delta.powf(cfg.p) + 0.05;
                    assert!(
                        noise <= cap,
                        "path {i} delta {}: sigma_p = {noise}",
                        rung.delta
                    );
                }
            }
        }
    }

    #[test]
    fn p_at_least_one_is_always_censored() {
        let cfg = ladder_cfg(1.0, 10.0);
        for i in 0..20 {
            let s = sample_tau_scheme(&cfg, i).unwrap();
            assert!(s.censored());
            assert!(
                s.local_time_at_horizon < 1.0,
                "path {i}: L(T) = {}",
                s.local_time_at_horizon
            );
            assert!(!s.exhausted);
        }
        // The rung barriers diverge: S_1(1 - 1/k) = ln k, exactly.
        for k in 2..40u32 {
            let s = barrier_for_local_time(1.0, 1.0 - 1.0 / k as f64).unwrap();
            assert!((s - (k as f64).ln()).abs() < 1e-9);
        }
    }

    #[test]
    fn config_validation() {
        let sampler = test_sampler(5.0);
        assert!(DeterminacyConfig::new(0.5, vec![], 64, sampler.clone()).is_err());
        assert!(DeterminacyConfig::new(0.5, vec![0.2, 0.5], 64, sampler.clone()).is_err());
        assert!(DeterminacyConfig::new(0.5, vec![1.0, 0.5], 64, sampler.clone()).is_err());
        assert!(DeterminacyConfig::new(-0.5, vec![0.5], 64, sampler).is_err());
        assert_eq!(
            DeterminacyConfig::default_ladder(4),
            vec![0.5, 1.0 / 3.0, 0.25]
        );
    }
}
