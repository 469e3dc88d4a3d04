//! The reflected pair `Y = X + L` and its pathwise identities:
//! quadratic variation against the clock `int sigma^2(L) ds`, and the
//! occupation-density estimate of local time against the regulator.
//!
//! ```sh
//! cargo run --example reflected_identities
//! ```

use loctime::noise::NoiseCoefficient;
use loctime::paths::BrownianSampler;
use loctime::reflected::{
    occupation_local_time, realized_qv, reflect, sigma2_integral, tanaka_residual,
};
use loctime::scheme::construct_by_hitting;

fn main() -> loctime::Result<()> {
    let sampler = BrownianSampler::new(21, 1e-4, 4.0, 0)?;
    let sigma = NoiseCoefficient::affine(1.0, 0.5)?;

    println!("per-path quadratic variation vs the sigma^2 clock (T = 4):");
    println!(
        "{:>6} {:>12} {:>12} {:>9}",
        "path", "realized QV", "clock", "rel err"
    );
    for i in 0..5 {
        let f = sampler.sample(i);
        let s = construct_by_hitting(&f, &sigma, 512, 0.0)?;
        let qv = realized_qv(&s.x, 1e-4)?.last_value();
        let clock = sigma2_integral(&s.local_time, &sigma)?.last_value();
        println!(
            "{i:>6} {qv:>12.5} {clock:>12.5} {:>9.4}",
            (qv - clock).abs() / clock
        );
    }

    println!("\nboundary local time by occupation windows (eps = 0.05):");
    println!(
        "{:>6} {:>10} {:>12} {:>12}",
        "path", "L(T)", "Lambda(T,0)", "rel defect"
    );
    let bounded = NoiseCoefficient::truncated_power_law(0.5, 0.2)?;
    for i in 0..5 {
        let f = sampler.sample(i);
        let s = construct_by_hitting(&f, &bounded, 512, 0.0)?;
        let rp = reflect(&s);
        let lam = occupation_local_time(&rp, 0.0, 0.05, 1e-4)?.last_value();
        let l = rp.local_time.last_value();
        println!(
            "{i:>6} {l:>10.4} {lam:>12.4} {:>12.4}",
            (lam - l).abs() / l.max(0.1)
        );
    }

    // The generalized change-of-variable check at an interior level: the
    // residual is small relative to the accumulated local time there.
    let f = sampler.sample(1);
    let s = construct_by_hitting(&f, &bounded, 512, 0.0)?;
    let rp = reflect(&s);
    let a = 0.2;
    let res = tanaka_residual(&rp, a, 0.05, 1e-4)?;
    let lam = occupation_local_time(&rp, a, 0.05, 1e-4)?.last_value();
    println!("\nTanaka residual at level a = {a}: {res:.4} vs Lambda(T, a) = {lam:.4}");
    Ok(())
}
