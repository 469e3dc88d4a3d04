//! Times of determinacy for power-law noise: direct sampling, the
//! truncation ladder, and the analytic references.
//!
//! ```sh
//! cargo run --example determinacy_times
//! ```

use loctime::determinacy::{
    barrier_for_local_time, determinacy_barrier, laplace_reference, levy_cdf, sample_tau_direct,
    sample_tau_scheme_with_rungs, DeterminacyConfig,
};
use loctime::ensemble::{estimate_laplace, ks_distance, Ecdf};
use loctime::paths::BrownianSampler;

fn main() -> loctime::Result<()> {
    println!(
        "barriers S_p(1-): p=0 -> {}, p=0.5 -> {}, p=1 -> {}",
        determinacy_barrier(0.0),
        determinacy_barrier(0.5),
        determinacy_barrier(1.0)
    );

    // Direct Monte Carlo at p = 0.5.
    let p = 0.5;
    let horizon = 100.0;
    let sampler = BrownianSampler::new(99, 5e-3, horizon, 2)?;
    let n = 4000u64;
    let mut samples = Vec::with_capacity(n as usize);
    for i in 0..n {
        samples.push(sample_tau_direct(p, &sampler, i)?);
    }
    let censored = samples.iter().filter(|s| s.censored()).count();
    println!("\np = {p}: {n} paths, {censored} censored by T = {horizon}");

    println!(
        "{:>8} {:>12} {:>12} {:>10}",
        "lambda", "estimate", "reference", "stderr"
    );
    for lambda in [0.25, 0.5, 1.0, 2.0] {
        let est = estimate_laplace(&samples, lambda, horizon)?;
        println!(
            "{lambda:>8} {:>12.5} {:>12.5} {:>10.5}",
            est.mean,
            laplace_reference(p, lambda)?,
            est.stderr
        );
    }

    let finite: Vec<f64> = samples.iter().filter_map(|s| s.tau).collect();
    let e = Ecdf::with_total(&finite, samples.len())?;
    let barrier = determinacy_barrier(p);
    let ks = ks_distance(&e, |t| if t > 0.0 { levy_cdf(barrier, t) } else { 0.0 });
    println!("KS distance vs the first-passage law: {ks:.4}");

    // The ladder: truncated coefficients agree on growing windows.
    let cfg = DeterminacyConfig::new(
        p,
        DeterminacyConfig::default_ladder(5),
        512,
        BrownianSampler::new(99, 5e-3, 40.0, 2)?,
    )?;
    let (sample, rungs) = sample_tau_scheme_with_rungs(&cfg, 3)?;
    println!("\nladder on one driver (path 3):");
    for rung in &rungs {
        let s_bar = barrier_for_local_time(p, 1.0 - rung.delta)?;
        match rung.valid_until {
            Some(t) => println!(
                "  delta = {:.3}: sigma_p solution certified on [0, {t:.4}] \
                 (barrier {s_bar:.4}), L there = {:.4}",
                rung.delta,
                rung.solution.local_time.eval(t)?
            ),
            None => println!(
                "  delta = {:.3}: barrier {s_bar:.4} not reached by T",
                rung.delta
            ),
        }
    }
    match sample.tau {
        Some(t) => println!("  time of determinacy: {t:.4} (noise exhausted)"),
        None => println!(
            "  censored by the horizon, L(T) = {:.4}",
            sample.local_time_at_horizon
        ),
    }
    Ok(())
}
