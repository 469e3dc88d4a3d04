//! One level of the hitting-time scheme, built two independent ways.
//!
//! ```sh
//! cargo run --example scheme_levels
//! ```

use loctime::noise::NoiseCoefficient;
use loctime::paths::BrownianSampler;
use loctime::scheme::{construct_by_hitting, construct_inductive, sup_gap, verify_solution};

fn main() -> loctime::Result<()> {
    let sampler = BrownianSampler::new(7, 0.01, 1.0, 1)?;
    let driver = sampler.sample(0);
    let sigma = NoiseCoefficient::truncated_power_law(0.5, 0.1)?;
    let n = 64;

    let by_hitting = construct_by_hitting(&driver, &sigma, n, 0.0)?;
    let inductive = construct_inductive(&driver, &sigma, n, 0.0)?;

    println!(
        "level n = {n}: {} reflection events, L(T) = {:.4}",
        by_hitting.event_times.len(),
        by_hitting.local_time.last_value()
    );
    println!("first events (threshold a_i -> time t_i, solution level -i/n):");
    for i in 0..by_hitting.event_times.len().min(6) {
        println!(
            "  a_{:<2} = {:.5}  t = {:.5}  x(t) = {:+.5}",
            i + 1,
            by_hitting.thresholds[i + 1],
            by_hitting.event_times[i],
            by_hitting.x.eval(by_hitting.event_times[i])?
        );
    }

    let event_gap = by_hitting
        .event_times
        .iter()
        .zip(&inductive.event_times)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0f64, f64::max);
    println!(
        "\ndual-construction agreement: max event-time gap = {event_gap:.2e}, \
         max solution gap = {:.2e}",
        sup_gap(&by_hitting.x, &inductive.x)
    );

    let defects = verify_solution(&by_hitting, 1e-6);
    println!("identity defects (all ~ machine precision expected):");
    println!("  event levels      {:.2e}", defects.event_level);
    println!("  driver increments {:.2e}", defects.driver_increment);
    println!("  segment scaling   {:.2e}", defects.segment_scaling);
    println!("  positivity        {:.2e}", defects.positivity);
    println!("  flatness          {:.2e}", defects.flatness);
    Ok(())
}
