//! Deterministic Brownian drivers and dyadic bridge refinement.
//!
//! ```sh
//! cargo run --example brownian_driver
//! ```

use loctime::paths::BrownianSampler;

fn main() -> loctime::Result<()> {
    let sampler = BrownianSampler::new(42, 0.125, 1.0, 0)?;
    let coarse = sampler.sample(0);
    println!("coarse path (seed 42, path 0, dt = 0.125):");
    for (t, v) in coarse.knots() {
        println!("  B({t:.4}) = {v:+.6}");
    }

    // Refining inserts conditionally-correct midpoints and never moves the
    // existing knots; refining a sampled path equals sampling deeper.
    let refined = sampler.refine_bridge(&coarse, 0, 2)?;
    let direct = sampler.sample_at_depth(0, 2);
    println!(
        "\nrefined twice: {} knots, equals depth-2 sampling: {}",
        refined.num_knots(),
        refined == direct
    );

    // Identical inputs reproduce identical paths; distinct indices differ.
    println!("resample identical: {}", sampler.sample(0) == coarse);
    println!("path 1 differs:     {}", sampler.sample(1) != coarse);

    // Endpoint statistics across an ensemble: Var B(1) = 1.
    let fine = BrownianSampler::new(42, 0.01, 1.0, 0)?;
    let n = 20_000u64;
    let (mut s1, mut s2) = (0.0, 0.0);
    for i in 0..n {
        let v = fine.sample_endpoint(i);
        s1 += v;
        s2 += v * v;
    }
    let mean = s1 / n as f64;
    println!(
        "\n{n} endpoints: mean = {mean:+.4}, variance = {:.4} (target 1)",
        s2 / n as f64 - mean * mean
    );
    Ok(())
}
