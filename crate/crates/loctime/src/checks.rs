//! Runtime invariant battery behind the `checks` subcommand.
//!
//! A compressed version of the module invariants, sized to run in seconds:
//! each check reports pass/fail plus a one-line measurement. The acceptance
//! test suite runs the full-size versions of the statistical criteria.

use serde::Serialize;

use crate::determinacy::{
    barrier_for_local_time, sample_tau_direct, sample_tau_scheme, DeterminacyConfig,
};
use crate::ensemble::{ecdf, ks_distance, per_path_seed, run_ensemble, EnsembleConfig};
use crate::noise::NoiseCoefficient;
use crate::paths::{BrownianSampler, PiecewiseLinearPath};
use crate::reflected::{occupation_local_time, realized_qv, reflect, sigma2_integral};
use crate::rng::SequentialRng;
use crate::scheme::{
    construct_by_hitting, construct_inductive, oscillation_check, refine_until, sup_distance,
    verify_solution,
};

#[derive(Clone, Debug, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &str, run: impl FnOnce() -> (bool, String)) -> CheckResult {
    let (passed, detail) = std::panic::catch_unwind(std::panic::AssertUnwindSafe(run))
        .unwrap_or_else(|_| (false, "panicked".to_string()));
    CheckResult {
        name: name.to_string(),
        passed,
        detail,
    }
}

/// Runs every check; deterministic (all seeds fixed).
pub fn run_all() -> Vec<CheckResult> {
    vec![
        paths_eval_and_idempotence(),
        paths_running_min_consistency(),
        paths_hitting_monotone_right_continuous(),
        paths_refinement_commutes(),
        paths_endpoint_variance(),
        noise_lipschitz_and_bound(),
        noise_truncation_agreement(),
        scheme_dual_construction(),
        scheme_exact_identities(),
        scheme_threshold_gaps(),
        scheme_closed_form(),
        scheme_oscillation(),
        scheme_stability(),
        reflected_qv_identity(),
        reflected_martingale(),
        reflected_local_time_identification(),
        reflected_positivity_flatness(),
        determinacy_time_change(),
        determinacy_monotonicity(),
        determinacy_noise_extinction(),
        determinacy_p1_censoring(),
        ensemble_schedule_independence(),
        ensemble_laplace_estimator(),
        ensemble_ks_sanity(),
        ensemble_seed_uniqueness(),
    ]
}

fn paths_eval_and_idempotence() -> CheckResult {
    check(
        "paths: midpoint evaluation and regulator idempotence",
        || {
            let mut rng = SequentialRng::new(1000);
            for _ in 0..20 {
                let mut t = 0.0;
                let mut knots = vec![(0.0, rng.next_range(-1.0, 1.0))];
                for _ in 0..30 {
                    t += rng.next_range(0.05, 0.4);
                    knots.push((t, rng.next_range(-2.0, 2.0)));
                }
                let g = PiecewiseLinearPath::new(knots).unwrap();
                for i in 0..g.num_knots() - 1 {
                    let tm = 0.5 * (g.times()[i] + g.times()[i + 1]);
                    let vm = 0.5 * (g.values()[i] + g.values()[i + 1]);
                    if (g.eval(tm).unwrap() - vm).abs() > 1e-13 {
                        return (false, "midpoint interpolation defect".into());
                    }
                }
                // Idempotence: feed -M back in, recover M.
                let m = g.running_min();
                let neg = PiecewiseLinearPath::from_columns(
                    m.times().to_vec(),
                    m.values().iter().map(|v| -v).collect(),
                )
                .unwrap();
                let m2 = neg.running_min();
                for (tt, v) in m.knots() {
                    if (m2.eval(tt).unwrap() - v).abs() > 1e-12 {
                        return (false, "running_min not idempotent".into());
                    }
                }
            }
            (true, "20 random paths".into())
        },
    )
}

fn paths_hitting_monotone_right_continuous() -> CheckResult {
    check(
        "paths: hitting time monotone and right-continuous in the level",
        || {
            let mut rng = SequentialRng::new(1019);
            let mut t = 0.0;
            let mut knots = vec![(0.0, 0.0)];
            for _ in 0..80 {
                t += rng.next_range(0.02, 0.2);
                knots.push((t, rng.next_range(-3.0, 1.0)));
            }
            let g = PiecewiseLinearPath::new(knots).unwrap();
            let mut prev = Some(0.0);
            for i in 0..=50 {
                let a = 0.05 * i as f64;
                let tau = g.hitting_time(a).unwrap();
                match (prev, tau) {
                    (Some(x), Some(y)) if y < x => return (false, format!("decreased at a = {a}")),
                    (None, Some(_)) => return (false, format!("hit reappeared at a = {a}")),
                    _ => {}
                }
                prev = tau;
                if let Some(tau_a) = tau {
                    let mut eps = 0.05;
                    for _ in 0..10 {
                        if let Some(l) = g.hitting_time(a + eps).unwrap() {
                            if l < tau_a - 1e-12 {
                                return (false, format!("not right-continuous at a = {a}"));
                            }
                        }
                        eps *= 0.5;
                    }
                }
            }
            (true, "51 levels".into())
        },
    )
}

fn scheme_threshold_gaps() -> CheckResult {
    check("scheme: threshold gaps below 1/(n delta)", || {
        let kinds = [
            NoiseCoefficient::affine(1.0, 1.0).unwrap(),
            NoiseCoefficient::truncated_power_law(0.5, 0.1).unwrap(),
            NoiseCoefficient::constant(0.7).unwrap(),
        ];
        for sigma in &kinds {
            let (_, delta) = sigma.constants();
            for n in [1u32, 7, 64] {
                let th = crate::scheme::build_thresholds(sigma, n, 200).unwrap();
                // Equality is attained where sigma sits at its lower bound;
                // allow for it plus the rounding of the accumulated sums.
                let bound = (1.0 / (n as f64 * delta)) * (1.0 + 1e-12);
                for w in th.windows(2) {
                    if !(w[1] > w[0]) || w[1] - w[0] > bound + 1e-12 {
                        return (false, format!("gap bound violated at n = {n}"));
                    }
                }
            }
        }
        (true, "3 coefficients x 3 levels x 200 thresholds".into())
    })
}

fn reflected_martingale() -> CheckResult {
    check("reflected: ensemble mean of X(T) - X(0) near zero", || {
        let sampler = BrownianSampler::new(1020, 1e-3, 1.0, 0).unwrap();
        let sigma = NoiseCoefficient::affine(1.0, 1.0).unwrap();
        let n = 2000u64;
        let mut ends = Vec::with_capacity(n as usize);
        for i in 0..n {
            let f = sampler.sample(i);
            ends.push(
                construct_by_hitting(&f, &sigma, 128, 0.0)
                    .unwrap()
                    .x
                    .last_value(),
            );
        }
        let (mean, se) = crate::ensemble::mean_stderr(&ends);
        let se = se.unwrap();
        (
            mean.abs() <= 3.0 * se,
            format!("|mean| = {:.4} vs 3 se = {:.4}", mean.abs(), 3.0 * se),
        )
    })
}

fn determinacy_noise_extinction() -> CheckResult {
    check(
        "determinacy: noise at tau below the deepest rung's floor",
        || {
            let cfg = DeterminacyConfig::new(
                0.5,
                DeterminacyConfig::default_ladder(4),
                256,
                BrownianSampler::new(1021, 0.005, 30.0, 1).unwrap(),
            )
            .unwrap();
            let sigma_p = NoiseCoefficient::power_law(0.5).unwrap();
            let mut seen = 0;
            for i in 0..8 {
                let (sample, rungs) =
                    crate::determinacy::sample_tau_scheme_with_rungs(&cfg, i).unwrap();
                let Some(tau) = sample.tau else { continue };
                for rung in &rungs {
                    let Some(valid) = rung.valid_until else {
                        continue;
                    };
                    if valid <= tau {
                        let l = rung.solution.local_time.eval(valid).unwrap();
                        let noise = sigma_p.eval(l.min(1.0)).unwrap();
                        if noise > rung.delta.powf(cfg.p) + 0.05 {
                            return (false, format!("path {i}: noise {noise} above floor"));
                        }
                        seen += 1;
                    }
                }
            }
            (seen > 0, format!("{seen} rung checks"))
        },
    )
}

fn ensemble_laplace_estimator() -> CheckResult {
    check("ensemble: Laplace estimator edge behavior", || {
        use crate::determinacy::{TauMethod, TauSample};
        let zeros: Vec<TauSample> = (0..5)
            .map(|i| TauSample {
                path_index: i,
                method: TauMethod::Direct,
                tau: Some(0.0),
                local_time_at_horizon: 1.0,
                exhausted: true,
            })
            .collect();
        let e = crate::ensemble::estimate_laplace(&zeros, 1.0, 10.0).unwrap();
        if e.mean != 1.0 || e.stderr != 0.0 {
            return (false, "zeros should give mean 1, stderr 0".into());
        }
        let censored: Vec<TauSample> = (0..5)
            .map(|i| TauSample {
                path_index: i,
                method: TauMethod::Direct,
                tau: None,
                local_time_at_horizon: 0.4,
                exhausted: false,
            })
            .collect();
        let e = crate::ensemble::estimate_laplace(&censored, 1.0, 10.0).unwrap();
        if e.mean != 0.0 || (e.upper_bound - (-10.0f64).exp()).abs() > 1e-15 {
            return (false, "censored should give bounds only".into());
        }
        (true, "bounds and degenerate cases".into())
    })
}

fn paths_running_min_consistency() -> CheckResult {
    check(
        "paths: hitting times consistent with running minimum",
        || {
            let mut rng = SequentialRng::new(1001);
            let mut worst = 0.0f64;
            for _ in 0..40 {
                let mut t = 0.0;
                let mut knots = vec![(0.0, 0.0)];
                for _ in 0..60 {
                    t += rng.next_range(0.01, 0.2);
                    knots.push((t, rng.next_range(-3.0, 1.5)));
                }
                let g = PiecewiseLinearPath::new(knots).unwrap();
                let m = g.running_min();
                let a = rng.next_range(0.05, 2.0);
                if let Some(tau) = g.hitting_time(a).unwrap() {
                    worst = worst.max((m.eval(tau).unwrap() - a).abs());
                }
                let mut prev = f64::NEG_INFINITY;
                for (tt, v) in m.knots() {
                    if v < prev - 1e-15 || v < -g.eval(tt).unwrap() - 1e-12 {
                        return (false, "running minimum not dominating".into());
                    }
                    prev = v;
                }
            }
            (worst <= 1e-12, format!("max |M(tau) - a| = {worst:.2e}"))
        },
    )
}

fn paths_refinement_commutes() -> CheckResult {
    check("paths: bridge refinement commutes with sampling", || {
        let s = BrownianSampler::new(1002, 0.05, 2.0, 0).unwrap();
        for i in 0..10 {
            let direct = s.sample_at_depth(i, 3);
            let refined = s.refine_bridge(&s.sample_at_depth(i, 1), i, 2).unwrap();
            if direct != refined {
                return (false, format!("path {i} differs"));
            }
        }
        (true, "10 paths bit-identical".into())
    })
}

fn paths_endpoint_variance() -> CheckResult {
    check("paths: endpoint variance of B(1)", || {
        let s = BrownianSampler::new(1003, 0.01, 1.0, 0).unwrap();
        let n = 20_000u64;
        let (mut s1, mut s2) = (0.0, 0.0);
        for i in 0..n {
            let v = s.sample_endpoint(i);
            s1 += v;
            s2 += v * v;
        }
        let mean = s1 / n as f64;
        let var = s2 / n as f64 - mean * mean;
        let tol = 0.01 + 3.0 * (2.0 / n as f64).sqrt();
        ((var - 1.0).abs() <= tol, format!("var = {var:.4}"))
    })
}

fn noise_lipschitz_and_bound() -> CheckResult {
    check("noise: Lipschitz constant and lower bound", || {
        let mut rng = SequentialRng::new(1004);
        let kinds = [
            NoiseCoefficient::constant(2.0).unwrap(),
            NoiseCoefficient::affine(1.0, 1.0).unwrap(),
            NoiseCoefficient::truncated_power_law(0.5, 0.1).unwrap(),
            NoiseCoefficient::truncated_power_law(2.0, 0.3).unwrap(),
            NoiseCoefficient::power_law(1.5).unwrap(),
            NoiseCoefficient::tabulated(
                PiecewiseLinearPath::new(vec![(0.0, 1.0), (0.5, 0.4), (2.0, 2.0)]).unwrap(),
            )
            .unwrap(),
        ];
        for sigma in &kinds {
            let (k, d) = sigma.constants();
            let hi = sigma.domain_cap(3.0);
            for _ in 0..10_000 {
                let a = rng.next_range(0.0, hi);
                let b = rng.next_range(0.0, hi);
                let gap = (sigma.eval(a).unwrap() - sigma.eval(b).unwrap()).abs();
                if k.is_finite() && gap > k * (a - b).abs() + 1e-12 {
                    return (false, format!("Lipschitz violated for {:?}", sigma.kind()));
                }
                if sigma.eval(a).unwrap() < d - 1e-12 {
                    return (
                        false,
                        format!("lower bound violated for {:?}", sigma.kind()),
                    );
                }
            }
        }
        (true, format!("{} kinds x 10^4 pairs", kinds.len()))
    })
}

fn noise_truncation_agreement() -> CheckResult {
    check(
        "noise: truncation agrees with the power law below the cut",
        || {
            let mut rng = SequentialRng::new(1005);
            for &(p, delta) in &[(0.5, 0.1), (1.0, 0.25), (0.0, 0.4)] {
                let full = NoiseCoefficient::power_law(p).unwrap();
                let trunc = NoiseCoefficient::truncated_power_law(p, delta).unwrap();
                for _ in 0..2000 {
                    let l = rng.next_range(0.0, 1.0 - delta);
                    if full.eval(l).unwrap() != trunc.eval(l).unwrap() {
                        return (false, format!("disagree at l = {l}"));
                    }
                }
            }
            (true, "exact agreement".into())
        },
    )
}

fn scheme_dual_construction() -> CheckResult {
    check("scheme: dual constructions agree", || {
        let sampler = BrownianSampler::new(1006, 0.02, 1.0, 1).unwrap();
        let mut rng = SequentialRng::new(1007);
        let mut worst_t = 0.0f64;
        let mut worst_x = 0.0f64;
        for i in 0..20 {
            let f = sampler.sample(i);
            let sigma =
                NoiseCoefficient::affine(rng.next_range(0.3, 1.5), rng.next_range(0.0, 2.0))
                    .unwrap();
            let n = 1 + rng.next_below(256) as u32;
            let a = construct_by_hitting(&f, &sigma, n, 0.0).unwrap();
            let b = construct_inductive(&f, &sigma, n, 0.0).unwrap();
            if a.event_times.len() != b.event_times.len() {
                return (false, format!("event counts differ on path {i}"));
            }
            for (x, y) in a.event_times.iter().zip(&b.event_times) {
                worst_t = worst_t.max((x - y).abs());
            }
            worst_x = worst_x.max(sup_distance(&a, &b).unwrap());
        }
        (
            worst_t <= 1e-12 && worst_x <= 1e-9,
            format!("max |dt| = {worst_t:.2e}, max |dx| = {worst_x:.2e}"),
        )
    })
}

fn scheme_exact_identities() -> CheckResult {
    check(
        "scheme: event levels, driver increments, scaling, positivity",
        || {
            let sampler = BrownianSampler::new(1008, 0.02, 1.0, 0).unwrap();
            let sigma = NoiseCoefficient::truncated_power_law(0.7, 0.2).unwrap();
            let mut worst = 0.0f64;
            for i in 0..10 {
                let f = sampler.sample(i);
                let s = construct_by_hitting(&f, &sigma, 128, 0.0).unwrap();
                let d = verify_solution(&s, 1e-6);
                worst = worst
                    .max(d.event_level)
                    .max(d.driver_increment)
                    .max(d.segment_scaling)
                    .max(d.positivity);
                if d.flatness > 1e-6 {
                    return (false, format!("flatness defect {}", d.flatness));
                }
            }
            (worst <= 1e-9, format!("max defect = {worst:.2e}"))
        },
    )
}

fn scheme_closed_form() -> CheckResult {
    check("scheme: ramp driver converges to 1 - e^t", || {
        let f = PiecewiseLinearPath::ramp(-1.0, 3.0f64.ln()).unwrap();
        let sigma = NoiseCoefficient::affine(1.0, 1.0).unwrap();
        let report = refine_until(&f, &sigma, 0.0, 64, 1e-3, 10).unwrap();
        if !report.converged {
            return (false, "did not converge".into());
        }
        let mut worst = 0.0f64;
        for (t, xv) in report.final_solution.x.knots() {
            worst = worst.max((xv - (1.0 - t.exp())).abs());
        }
        (worst <= 1e-2, format!("max |x - (1-e^t)| = {worst:.2e}"))
    })
}

fn scheme_oscillation() -> CheckResult {
    check("scheme: oscillation bound", || {
        let sampler = BrownianSampler::new(1009, 0.005, 1.0, 0).unwrap();
        let sigma = NoiseCoefficient::affine(1.0, 1.0).unwrap();
        let mut worst = 0.0f64;
        for i in 0..3 {
            let f = sampler.sample(i);
            let s = construct_by_hitting(&f, &sigma, 64, 0.0).unwrap();
            let c = oscillation_check(&s, 0.25, 200, 1010 + i).unwrap();
            worst = worst.max(c.max_ratio);
        }
        (worst <= 1.0, format!("max ratio = {worst:.3}"))
    })
}

fn scheme_stability() -> CheckResult {
    check("scheme: stability under x0 and domain shifts", || {
        let sampler = BrownianSampler::new(1011, 0.01, 1.0, 0).unwrap();
        let f = sampler.sample(0);
        let base = refine_until(
            &f,
            &NoiseCoefficient::affine(1.0, 1.0).unwrap(),
            0.0,
            64,
            1e-4,
            8,
        )
        .unwrap();
        for &(eta, zeta) in &[(1e-3, 1e-3), (1e-4, 1e-4)] {
            let pert = refine_until(
                &f,
                &NoiseCoefficient::affine(1.0 + zeta, 1.0).unwrap(),
                eta,
                64,
                1e-4,
                8,
            )
            .unwrap();
            let gap = crate::scheme::sup_gap(&base.final_solution.x, &pert.final_solution.x);
            if gap > 10.0 * (eta + zeta) + 2e-4 {
                return (false, format!("gap {gap:.2e} at eta={eta}, zeta={zeta}"));
            }
        }
        (true, "gap <= 10 (eta + zeta)".into())
    })
}

fn reflected_qv_identity() -> CheckResult {
    check("reflected: realized QV matches the sigma^2 clock", || {
        let sampler = BrownianSampler::new(1012, 1e-4, 1.0, 0).unwrap();
        let sigma = NoiseCoefficient::affine(1.0, 1.0).unwrap();
        let mut rel = 0.0;
        let n_paths = 10;
        for i in 0..n_paths {
            let f = sampler.sample(i);
            let s = construct_by_hitting(&f, &sigma, 512, 0.0).unwrap();
            let qv = realized_qv(&s.x, 1e-4).unwrap().last_value();
            let clock = sigma2_integral(&s.local_time, &sigma).unwrap().last_value();
            rel += (qv - clock).abs() / clock;
        }
        let mean = rel / n_paths as f64;
        (mean <= 0.08, format!("mean relative error = {mean:.4}"))
    })
}

fn reflected_local_time_identification() -> CheckResult {
    check(
        "reflected: occupation estimate tracks the regulator",
        || {
            let sampler = BrownianSampler::new(1013, 1e-3, 8.0, 0).unwrap();
            let sigma = NoiseCoefficient::constant(1.0).unwrap();
            let mut rel = 0.0;
            let n_paths = 8;
            for i in 0..n_paths {
                let f = sampler.sample(i);
                let s = construct_by_hitting(&f, &sigma, 512, 0.0).unwrap();
                let rp = reflect(&s);
                let lam = occupation_local_time(&rp, 0.0, 0.05, 1e-3).unwrap();
                let l = rp.local_time.last_value();
                rel += (lam.last_value() - l).abs() / l.max(0.1);
            }
            let mean = rel / n_paths as f64;
            (mean <= 0.3, format!("mean relative defect = {mean:.4}"))
        },
    )
}

fn reflected_positivity_flatness() -> CheckResult {
    check("reflected: Y >= 0 and L flat off the contact set", || {
        let sampler = BrownianSampler::new(1014, 1e-3, 2.0, 1).unwrap();
        for i in 0..10 {
            let f = sampler.sample(i);
            let s = construct_by_hitting(
                &f,
                &NoiseCoefficient::truncated_power_law(0.5, 0.2).unwrap(),
                256,
                0.0,
            )
            .unwrap();
            let rp = reflect(&s);
            if rp.y.min_value() < -1e-9 {
                return (false, format!("min Y = {}", rp.y.min_value()));
            }
            let d = verify_solution(&s, 1e-6);
            if d.flatness > 1e-6 {
                return (false, format!("flatness defect {}", d.flatness));
            }
        }
        (true, "10 paths".into())
    })
}

fn determinacy_time_change() -> CheckResult {
    check(
        "determinacy: local time of the hit barrier equals alpha",
        || {
            let n = 512u32;
            let sigma = NoiseCoefficient::truncated_power_law(0.5, 0.1).unwrap();
            let sampler = BrownianSampler::new(1015, 0.005, 20.0, 1).unwrap();
            let mut worst = 0.0f64;
            let mut hits = 0;
            for i in 0..8 {
                let driver = sampler.sample(i);
                let sol = construct_by_hitting(&driver, &sigma, n, 0.0).unwrap();
                for &alpha in &[0.25, 0.5, 0.9] {
                    let barrier = barrier_for_local_time(0.5, alpha).unwrap();
                    if let Some(t) = driver.hitting_time(barrier).unwrap() {
                        worst = worst.max((sol.local_time.eval(t).unwrap() - alpha).abs());
                        hits += 1;
                    }
                }
            }
            (
                hits > 8 && worst <= 2.0 / n as f64 + 0.005,
                format!("max |L(tau) - alpha| = {worst:.2e} over {hits} hits"),
            )
        },
    )
}

fn determinacy_monotonicity() -> CheckResult {
    check(
        "determinacy: tau nondecreasing in p on a fixed driver",
        || {
            let sampler = BrownianSampler::new(1016, 0.005, 40.0, 1).unwrap();
            for i in 0..8 {
                let mut prev = Some(0.0);
                for &p in &[0.0, 0.25, 0.5, 0.75] {
                    let tau = sample_tau_direct(p, &sampler, i).unwrap().tau;
                    match (prev, tau) {
                        (Some(a), Some(b)) if b < a => {
                            return (false, format!("path {i}: tau decreased at p = {p}"))
                        }
                        (None, Some(_)) => {
                            return (false, format!("path {i}: censoring reversed at p = {p}"))
                        }
                        _ => {}
                    }
                    prev = tau;
                }
            }
            (true, "8 paths x 4 levels".into())
        },
    )
}

fn determinacy_p1_censoring() -> CheckResult {
    check(
        "determinacy: p = 1 is always censored with L(T) < 1",
        || {
            let cfg = DeterminacyConfig::new(
                1.0,
                DeterminacyConfig::default_ladder(4),
                128,
                BrownianSampler::new(1017, 0.01, 10.0, 0).unwrap(),
            )
            .unwrap();
            for i in 0..10 {
                let s = sample_tau_scheme(&cfg, i).unwrap();
                if !s.censored() || s.local_time_at_horizon >= 1.0 {
                    return (false, format!("path {i} not censored properly"));
                }
            }
            (true, "10 paths censored".into())
        },
    )
}

fn ensemble_schedule_independence() -> CheckResult {
    check("ensemble: identical results at any worker count", || {
        let task = |i: u64| -> std::result::Result<f64, String> {
            let key = per_path_seed(31, i);
            Ok((0..20).map(|c| crate::rng::standard_normal(key, c)).sum())
        };
        let mut outs = Vec::new();
        for w in [1usize, 4] {
            let run = run_ensemble(
                &EnsembleConfig {
                    num_paths: 100,
                    num_workers: w,
                    master_seed: 31,
                },
                task,
            )
            .unwrap();
            outs.push(
                run.results
                    .into_iter()
                    .map(Option::unwrap)
                    .collect::<Vec<f64>>(),
            );
        }
        (outs[0] == outs[1], "100 paths, workers 1 vs 4".into())
    })
}

fn ensemble_ks_sanity() -> CheckResult {
    check("ensemble: KS of uniforms inside the 99% band", || {
        let n = 1000usize;
        let trials = 100usize;
        let mut ok = 0;
        for t in 0..trials {
            let key = per_path_seed(55, t as u64);
            let xs: Vec<f64> = (0..n).map(|i| crate::rng::uniform(key, i as u64)).collect();
            let e = ecdf(&xs).unwrap();
            if ks_distance(&e, |x| x.clamp(0.0, 1.0)) <= 1.63 / (n as f64).sqrt() {
                ok += 1;
            }
        }
        (ok * 100 >= trials * 97, format!("{ok}/{trials} inside"))
    })
}

fn ensemble_seed_uniqueness() -> CheckResult {
    check(
        "ensemble: per-path seeds distinct over 10^5 indices",
        || {
            let mut seen = std::collections::HashSet::with_capacity(100_000);
            for i in 0..100_000u64 {
                if !seen.insert(per_path_seed(7, i)) {
                    return (false, format!("collision at {i}"));
                }
            }
            (true, "no collisions".into())
        },
    )
}
