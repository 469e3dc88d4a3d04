//! Piecewise-linear paths: evaluation, running minimum, hitting times.
//!
//! ```sh
//! cargo run --example running_minimum
//! ```

use loctime::paths::PiecewiseLinearPath;

fn main() -> loctime::Result<()> {
    // A path that dips, recovers, and dips deeper.
    let g = PiecewiseLinearPath::new(vec![(0.0, 0.0), (1.0, -1.0), (2.0, -0.5), (3.0, -2.0)])?;

    println!("path g on [0, {}]:", g.horizon());
    for (t, v) in g.knots() {
        println!("  g({t:.3}) = {v:+.3}");
    }

    let m = g.running_min();
    println!("\nrunning minimum M(t) = max(-g) v 0 (exact knots):");
    for (t, v) in m.knots() {
        println!("  M({t:.4}) = {v:.4}");
    }

    println!("\nhitting times tau(a) = first t with M(t) > a:");
    for a in [0.0, 0.5, 1.0, 1.5, 2.5] {
        match g.hitting_time(a)? {
            Some(t) => println!("  tau({a}) = {t:.6}   (M there = {:.6})", m.eval(t)?),
            None => println!("  tau({a}) = not reached (M(T) = {:.4})", m.last_value()),
        }
    }
    println!("\nnote tau(1.0): M touches 1 at t = 1 but only strictly exceeds it later.");
    Ok(())
}
