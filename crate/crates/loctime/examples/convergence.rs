//! Level doubling until consecutive solutions are uniformly close.
//!
//! On the ramp driver `f(t) = -t` with `sigma(l) = 1 + l` the limit is
//! known in closed form (`x = 1 - e^t`), which makes the study an oracle:
//! the gaps must shrink and the final level must sit on the exponential.
//!
//! ```sh
//! cargo run --example convergence
//! ```

use loctime::noise::NoiseCoefficient;
use loctime::paths::{BrownianSampler, PiecewiseLinearPath};
use loctime::scheme::refine_until;

fn main() -> loctime::Result<()> {
    let horizon = 3.0f64.ln();
    let ramp = PiecewiseLinearPath::ramp(-1.0, horizon)?;
    let sigma = NoiseCoefficient::affine(1.0, 1.0)?;

    let report = refine_until(&ramp, &sigma, 0.0, 64, 1e-3, 12)?;
    println!("ramp driver on [0, ln 3], tol 1e-3:");
    for (i, gap) in report.sup_gaps.iter().enumerate() {
        println!(
            "  sup gap n = {:>5} -> {:>5}: {gap:.3e}",
            report.levels[i],
            report.levels[i + 1]
        );
    }
    let mut worst = 0.0f64;
    for (t, xv) in report.final_solution.x.knots() {
        worst = worst.max((xv - (1.0 - t.exp())).abs());
    }
    println!(
        "converged = {} at n = {}; max |x - (1 - e^t)| = {worst:.2e}",
        report.converged, report.final_solution.n
    );
    println!(
        "time-change check: L(ln 2) = {:.5} (exact limit 1)",
        report.final_solution.local_time.eval(2.0f64.ln())?
    );

    // The same study on a Brownian driver: no closed form, but the gaps
    // still contract.
    let sampler = BrownianSampler::new(11, 0.005, 1.0, 1)?;
    let driver = sampler.sample(0);
    let report = refine_until(&driver, &sigma, 0.0, 64, 1e-3, 10)?;
    println!("\nBrownian driver, tol 1e-3:");
    for (i, gap) in report.sup_gaps.iter().enumerate() {
        println!(
            "  sup gap n = {:>5} -> {:>5}: {gap:.3e}",
            report.levels[i],
            report.levels[i + 1]
        );
    }
    println!(
        "converged = {} at n = {}, events = {}",
        report.converged,
        report.final_solution.n,
        report.final_solution.event_times.len()
    );
    Ok(())
}
