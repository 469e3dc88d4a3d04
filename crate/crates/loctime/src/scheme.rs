//! The inductive hitting-time approximation scheme.
//!
//! Level `n` approximates the pair `(x, L)` driven by a continuous path by
//! freezing the noise coefficient between reflection events: while the
//! accumulated local time sits in `[i/n, (i+1)/n)` the solution moves as
//! `x(t) = x(t_i) + sigma(i/n) (f(t) - f(t_i))`, and the next event fires
//! when `x` first drops strictly below `-(i+1)/n`.
//!
//! Two independent constructions are provided and must agree exactly:
//!
//! * [`construct_by_hitting`] precomputes the event thresholds
//!   `a_i = sum_{j<i} 1/(n sigma(j/n))` and sweeps the driver once for the
//!   successive first-passage times;
//! * [`construct_inductive`] scans driver segments statefully, solving each
//!   event crossing in solution space.
//!
//! Both detect events on the piecewise-linear driver exactly (one division
//! per crossing), so the level-`n` solution is a deterministic function of
//! the driver. [`refine_until`] doubles `n` until consecutive levels are
//! uniformly close, producing the limit pair.

use crate::error::{Error, Result};
use crate::noise::NoiseCoefficient;
use crate::paths::PiecewiseLinearPath;
use crate::rng::SequentialRng;

/// One run of the level-`n` approximation.
#[derive(Clone, Debug)]
pub struct SchemeSolution {
    /// Approximation level.
    pub n: u32,
    /// Realized event times `t_1 < t_2 < ...` within the horizon; the `i`-th
    /// entry (1-based) is the time the solution first reaches `-i/n`.
    pub event_times: Vec<f64>,
    /// Thresholds `a_0 = 0, a_1, ..., a_m` in running-minimum units.
    pub thresholds: Vec<f64>,
    /// The approximate solution path.
    pub x: PiecewiseLinearPath,
    /// Its regulator `L = running_min(x)`.
    pub local_time: PiecewiseLinearPath,
    /// Coefficient the run used.
    pub sigma: NoiseCoefficient,
    /// Initial value (the driver actually used is `x0 + f`).
    pub x0: f64,
    /// The driving path `f` (with `f(0) = 0`).
    pub driver: PiecewiseLinearPath,
}

/// Cauchy evidence from an `n`-doubling run.
#[derive(Clone, Debug)]
pub struct ConvergenceReport {
    pub levels: Vec<u32>,
    /// Sup-norm distances between consecutive levels.
    pub sup_gaps: Vec<f64>,
    pub final_solution: SchemeSolution,
    pub converged: bool,
    pub tol: f64,
}

fn validate_inputs(
    f: &PiecewiseLinearPath,
    sigma: &NoiseCoefficient,
    n: u32,
    x0: f64,
) -> Result<()> {
    if f.first_value() != 0.0 {
        return Err(Error::domain(format!(
            "driver must start at 0, got f(0) = {}",
            f.first_value()
        )));
    }
    if !(x0 >= 0.0) {
        return Err(Error::domain(format!("x0 = {x0} must be >= 0")));
    }
    if n < 1 {
        return Err(Error::domain("level n must be >= 1"));
    }
    let (_, delta) = sigma.constants();
    if !(delta > 0.0) {
        return Err(Error::domain(
            "the scheme needs a coefficient bounded away from zero (delta > 0)",
        ));
    }
    Ok(())
}

/// Threshold increment `1 / (n sigma(i/n))`.
#[inline]
fn threshold_step(sigma: &NoiseCoefficient, n: f64, i: u64) -> f64 {
    1.0 / (n * sigma.eval_unchecked(i as f64 / n))
}

/// Thresholds `a_i = sum_{j=0}^{i-1} 1/(n sigma(j/n))` for `i = 0..=i_max`,
/// so `a_0 = 0` and event `i` is the hitting time of the driver's running
/// minimum at `a_i`. Strictly increasing, with gaps below `1/(n delta)`.
pub fn build_thresholds(sigma: &NoiseCoefficient, n: u32, i_max: usize) -> Result<Vec<f64>> {
    let (_, delta) = sigma.constants();
    if !(delta > 0.0) {
        return Err(Error::domain("thresholds need delta > 0"));
    }
    if n < 1 {
        return Err(Error::domain("level n must be >= 1"));
    }
    let nf = n as f64;
    let mut out = Vec::with_capacity(i_max + 1);
    let mut a = 0.0;
    out.push(a);
    for i in 0..i_max {
        a += threshold_step(sigma, nf, i as u64);
        out.push(a);
    }
    Ok(out)
}

/// Smallest integer `C` with `C / (K C + sigma(0)) > 1/K - eps`, giving the
/// event-index budget that covers `[0, tau_f(1/K - eps)]` at every level.
/// `None` when `K = 0` (a constant coefficient needs no cutoff).
pub fn coverage_constant(sigma: &NoiseCoefficient, eps: f64) -> Result<Option<u64>> {
    let (k, _) = sigma.constants();
    if k == 0.0 {
        return Ok(None);
    }
    if !(eps > 0.0 && eps < 1.0 / k) {
        return Err(Error::domain(format!(
            "eps = {eps} must lie in (0, 1/K) = (0, {})",
            1.0 / k
        )));
    }
    let s0 = sigma.at_zero();
    let r = 1.0 / k - eps;
    let cond = |c: u64| c as f64 / (k * c as f64 + s0) > r;
    // Closed-form start, then settle the boundary by direct search.
    let mut c = ((r * s0) / (eps * k)).floor() as u64 + 1;
    while c > 1 && cond(c - 1) {
        c -= 1;
    }
    while !cond(c) {
        c += 1;
    }
    Ok(Some(c))
}

/// The oscillation-control constant
/// `C' = 2 (sigma(0) + K C(eps)) + K + 2 + 1/delta`, used as a runtime
/// modulus-of-continuity diagnostic (see [`oscillation_check`]).
pub fn oscillation_constant(sigma: &NoiseCoefficient, eps: f64) -> Result<f64> {
    let (k, delta) = sigma.constants();
    if !(delta > 0.0) {
        return Err(Error::domain("oscillation constant needs delta > 0"));
    }
    let c = match coverage_constant(sigma, eps)? {
        Some(c) => c as f64,
        None => 0.0,
    };
    Ok(2.0 * (sigma.at_zero() + k * c) + k + 2.0 + 1.0 / delta)
}

/// Builds the level-`n` solution by precomputed thresholds: event `i` is the
/// exact first time the driver `x0 + f` makes its running minimum strictly
/// exceed a barrier, and `x` is assembled by the scaled telescoping sum with
/// knots at the union of `f`'s knots and the event times.
pub fn construct_by_hitting(
    f: &PiecewiseLinearPath,
    sigma: &NoiseCoefficient,
    n: u32,
    x0: f64,
) -> Result<SchemeSolution> {
    validate_inputs(f, sigma, n, x0)?;
    let nf = n as f64;
    let times = f.times();
    let vals = f.values();

    // Event i happens when f first goes strictly below -(a_i + x0/sigma(0)):
    // the solution must travel from x0 to -1/n at speed sigma(0) before the
    // first event, hence the x0/sigma(0) offset in driver units.
    let offset = x0 / sigma.eval_unchecked(0.0);
    let mut thresholds = vec![0.0f64];
    let mut next_a = threshold_step(sigma, nf, 0);
    let mut barrier = -(next_a + offset);
    let mut event_times = Vec::new();
    for s in 0..times.len().saturating_sub(1) {
        let (t0, t1) = (times[s], times[s + 1]);
        let (v0, v1) = (vals[s], vals[s + 1]);
        while v1 < barrier {
            let t_star = t0 + (v0 - barrier) / (v0 - v1) * (t1 - t0);
            event_times.push(t_star);
            thresholds.push(next_a);
            next_a += threshold_step(sigma, nf, event_times.len() as u64);
            barrier = -(next_a + offset);
        }
    }

    // Telescoping assembly over the union of driver knots and event times.
    let mut kt = Vec::with_capacity(times.len() + event_times.len());
    let mut kv = Vec::with_capacity(times.len() + event_times.len());
    let mut i = 0usize; // events passed
    let mut sig = sigma.eval_unchecked(0.0);
    let mut x_event = x0;
    let mut f_event = vals[0];
    let mut knot_idx = 0usize;
    let mut ev_idx = 0usize;
    while knot_idx < times.len() || ev_idx < event_times.len() {
        // Next union knot; an event coinciding with a driver knot is one knot.
        let take_event = match (event_times.get(ev_idx), times.get(knot_idx)) {
            (Some(&te), Some(&tk)) => te <= tk,
            (Some(_), None) => true,
            (None, Some(_)) => false,
            (None, None) => unreachable!(),
        };
        if take_event {
            let te = event_times[ev_idx];
            // Driver value at an event is its barrier, by construction.
            let fe = -(thresholds[i + 1] + offset);
            let xv = x_event + sig * (fe - f_event);
            if kt.last() != Some(&te) {
                kt.push(te);
                kv.push(xv);
            }
            i += 1;
            x_event = xv;
            f_event = fe;
            sig = sigma.eval_unchecked(i as f64 / nf);
            ev_idx += 1;
            if times.get(knot_idx) == Some(&te) {
                knot_idx += 1; // merged
            }
        } else {
            let tk = times[knot_idx];
            let xv = x_event + sig * (vals[knot_idx] - f_event);
            if kt.last() != Some(&tk) {
                kt.push(tk);
                kv.push(xv);
            }
            knot_idx += 1;
        }
    }

    let x = PiecewiseLinearPath::from_columns(kt, kv)?;
    let local_time = x.running_min();
    Ok(SchemeSolution {
        n,
        event_times,
        thresholds,
        x,
        local_time,
        sigma: sigma.clone(),
        x0,
        driver: f.clone(),
    })
}

/// Builds the level-`n` solution by direct segment-by-segment induction:
/// within each driver segment, the next event is the exact solution of the
/// linear crossing `x(t_i) + sigma(i/n)(f(t) - f(t_i)) = -(i+1)/n`.
pub fn construct_inductive(
    f: &PiecewiseLinearPath,
    sigma: &NoiseCoefficient,
    n: u32,
    x0: f64,
) -> Result<SchemeSolution> {
    validate_inputs(f, sigma, n, x0)?;
    let nf = n as f64;
    let times = f.times();
    let vals = f.values();

    let mut i: u64 = 0;
    let mut x_event = x0;
    let mut f_event = vals[0];
    let mut sig = sigma.eval_unchecked(0.0);
    let mut target = -1.0 / nf;
    let mut event_times = Vec::new();
    let mut kt = Vec::with_capacity(times.len());
    let mut kv = Vec::with_capacity(times.len());
    kt.push(0.0);
    kv.push(x0);

    for s in 0..times.len().saturating_sub(1) {
        let (t0, t1) = (times[s], times[s + 1]);
        let (v0, v1) = (vals[s], vals[s + 1]);
        loop {
            let x_end = x_event + sig * (v1 - f_event);
            if x_end < target {
                // Event inside this segment: solve for the driver value at
                // which x reaches the target, then for the time on the
                // segment's line.
                let f_star = f_event + (target - x_event) / sig;
                let t_star = t0 + (f_star - v0) / (v1 - v0) * (t1 - t0);
                i += 1;
                x_event = target;
                f_event = f_star;
                sig = sigma.eval_unchecked(i as f64 / nf);
                target = -((i + 1) as f64) / nf;
                event_times.push(t_star);
                if kt.last() != Some(&t_star) {
                    kt.push(t_star);
                    kv.push(x_event);
                }
            } else {
                if kt.last() != Some(&t1) {
                    kt.push(t1);
                    kv.push(x_end);
                }
                break;
            }
        }
    }

    let x = PiecewiseLinearPath::from_columns(kt, kv)?;
    let local_time = x.running_min();
    let thresholds = build_thresholds(sigma, n, event_times.len())?;
    Ok(SchemeSolution {
        n,
        event_times,
        thresholds,
        x,
        local_time,
        sigma: sigma.clone(),
        x0,
        driver: f.clone(),
    })
}

/// Sup distance over the union of knot sets, taken over both `x` and `L`.
/// The two solutions must share driver, coefficient, and initial value.
pub fn sup_distance(a: &SchemeSolution, b: &SchemeSolution) -> Result<f64> {
    if a.driver != b.driver || a.sigma != b.sigma || a.x0 != b.x0 {
        return Err(Error::usage(
            "sup_distance compares solutions of the same (driver, sigma, x0)",
        ));
    }
    let dx = sup_gap(&a.x, &b.x);
    let dl = sup_gap(&a.local_time, &b.local_time);
    Ok(dx.max(dl))
}

/// Max of `|p - q|` over the union of their knot times.
pub fn sup_gap(p: &PiecewiseLinearPath, q: &PiecewiseLinearPath) -> f64 {
    let mut union = Vec::with_capacity(p.num_knots() + q.num_knots());
    let (pt, qt) = (p.times(), q.times());
    let (mut ip, mut iq) = (0usize, 0usize);
    while ip < pt.len() || iq < qt.len() {
        let t = match (pt.get(ip), qt.get(iq)) {
            (Some(&a), Some(&b)) => {
                if a <= b {
                    ip += 1;
                    if a == b {
                        iq += 1;
                    }
                    a
                } else {
                    iq += 1;
                    b
                }
            }
            (Some(&a), None) => {
                ip += 1;
                a
            }
            (None, Some(&b)) => {
                iq += 1;
                b
            }
            (None, None) => unreachable!(),
        };
        union.push(t);
    }
    let horizon = p.horizon().min(q.horizon());
    union.retain(|&t| t <= horizon);
    let pv = p.eval_sorted(&union).expect("union within horizon");
    let qv = q.eval_sorted(&union).expect("union within horizon");
    pv.iter()
        .zip(&qv)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max)
}

/// Runs levels `n0, 2 n0, 4 n0, ...` until the sup distance of consecutive
/// levels is at most `tol`, or `max_doublings` doublings have been spent.
/// Non-convergence is reported, not an error.
pub fn refine_until(
    f: &PiecewiseLinearPath,
    sigma: &NoiseCoefficient,
    x0: f64,
    n0: u32,
    tol: f64,
    max_doublings: u32,
) -> Result<ConvergenceReport> {
    if !(tol > 0.0) {
        return Err(Error::domain(format!("tol = {tol} must be positive")));
    }
    if n0 < 1 {
        return Err(Error::domain("n0 must be >= 1"));
    }
    let mut levels = vec![n0];
    let mut sup_gaps = Vec::new();
    let mut prev = construct_by_hitting(f, sigma, n0, x0)?;
    let mut converged = false;
    for _ in 0..max_doublings {
        let n_next = prev
            .n
            .checked_mul(2)
            .ok_or_else(|| Error::domain("level overflow while doubling"))?;
        let next = construct_by_hitting(f, sigma, n_next, x0)?;
        let gap = sup_distance(&prev, &next)?;
        levels.push(n_next);
        sup_gaps.push(gap);
        prev = next;
        if gap <= tol {
            converged = true;
            break;
        }
    }
    Ok(ConvergenceReport {
        levels,
        sup_gaps,
        final_solution: prev,
        converged,
        tol,
    })
}

/// Worst-case defects of the exact identities a level-`n` solution must
/// satisfy. All of these are zero in exact arithmetic.
#[derive(Clone, Copy, Debug, Default)]
pub struct SolutionDefects {
    /// max over events of `|x(t_i) + i/n|`.
    pub event_level: f64,
    /// max over realized consecutive events of
    /// `|f(t_{i+1}) - f(t_i) + 1/(n sigma(i/n))|` (from the first event when
    /// `x0 = 0`).
    pub driver_increment: f64,
    /// max over knots of the segment-scaling identity defect
    /// `|x(t) - x(t_i) - sigma(i/n)(f(t) - f(t_i))|`.
    pub segment_scaling: f64,
    /// max over knots of `(-(x + L)) v 0` (reflected-positivity defect).
    pub positivity: f64,
    /// total increase of `L` over segments with `x + L` above the flatness
    /// cutoff, divided by `max(L(T), 1)`.
    pub flatness: f64,
}

impl SolutionDefects {
    pub fn max_defect(&self) -> f64 {
        self.event_level
            .max(self.driver_increment)
            .max(self.segment_scaling)
            .max(self.positivity)
            .max(self.flatness)
    }
}

/// Measures the exact identities a solution must satisfy: event levels `-i/n`,
/// driver increments `-1/(n sigma(i/n))` between events, per-segment scaling,
/// reflected positivity, and flatness of `L` off the contact set.
pub fn verify_solution(s: &SchemeSolution, eps_flat: f64) -> SolutionDefects {
    let nf = s.n as f64;
    let mut d = SolutionDefects::default();

    for (idx, &te) in s.event_times.iter().enumerate() {
        let want = -((idx + 1) as f64) / nf;
        let got = s.x.eval_unchecked(te);
        d.event_level = d.event_level.max((got - want).abs());
    }

    // Driver increments between realized events.
    let f_at = |t: f64| s.driver.eval_unchecked(t);
    let start = if s.x0 == 0.0 { 0 } else { 1 };
    for idx in start..s.event_times.len() {
        let (t_prev, i_prev) = if idx == 0 {
            (0.0, 0u64)
        } else {
            (s.event_times[idx - 1], idx as u64)
        };
        let step = threshold_step(&s.sigma, nf, i_prev);
        let inc = f_at(s.event_times[idx]) - f_at(t_prev);
        d.driver_increment = d.driver_increment.max((inc + step).abs());
    }

    // Segment scaling at every solution knot.
    let mut ev = 0usize;
    let mut x_anchor = s.x0;
    let mut f_anchor = 0.0f64;
    let mut sig = s.sigma.eval_unchecked(0.0);
    for (t, xv) in s.x.knots() {
        while ev < s.event_times.len() && s.event_times[ev] <= t {
            let t_anchor = s.event_times[ev];
            ev += 1;
            x_anchor = -(ev as f64) / nf;
            f_anchor = f_at(t_anchor);
            sig = s.sigma.eval_unchecked(ev as f64 / nf);
        }
        let want = x_anchor + sig * (f_at(t) - f_anchor);
        d.segment_scaling = d.segment_scaling.max((xv - want).abs());
    }

    // Positivity and flatness on the regulator's knot set.
    let lt = &s.local_time;
    let xs = s.x.eval_sorted(lt.times()).expect("L knots within horizon");
    let total_l = lt.last_value();
    let mut off_contact_increase = 0.0;
    for i in 0..lt.num_knots() {
        let y = xs[i] + lt.values()[i];
        d.positivity = d.positivity.max(-y);
        if i + 1 < lt.num_knots() {
            let y_next = xs[i + 1] + lt.values()[i + 1];
            if y.min(y_next) > eps_flat {
                off_contact_increase += lt.values()[i + 1] - lt.values()[i];
            }
        }
    }
    d.flatness = off_contact_increase / total_l.max(1.0);
    d
}

/// Result of sampling the oscillation bound at random time pairs.
#[derive(Clone, Copy, Debug)]
pub struct OscillationCheck {
    /// Largest observed `|x(t) - x(s)|` divided by the bound; above 1 is a
    /// violation.
    pub max_ratio: f64,
    pub pairs_checked: usize,
    /// Right end of the window `[0, tau_f(1/K - eps)]` the bound covers.
    pub window_end: f64,
}

/// Samples `(s, t)` pairs inside `[0, tau_f(1/K - eps)]` and compares the
/// observed oscillation of `x` against
/// `4 K ||f|| (1/n + C' osc_f) + C' osc_f`, where `osc_f` is the exact
/// oscillation of the driver over `[s, t]` and `C'` comes from
/// [`oscillation_constant`].
pub fn oscillation_check(
    s: &SchemeSolution,
    eps: f64,
    pairs: usize,
    seed: u64,
) -> Result<OscillationCheck> {
    let (k, _) = s.sigma.constants();
    let c_prime = oscillation_constant(&s.sigma, eps)?;
    let horizon = s.driver.horizon();
    let window_end = if k > 0.0 {
        match s.driver.hitting_time(1.0 / k - eps)? {
            Some(t) => t.min(horizon),
            None => horizon,
        }
    } else {
        horizon
    };

    // Sup norm of the driver over the window.
    let mut f_norm = 0.0f64;
    for (t, v) in s.driver.knots() {
        if t > window_end {
            break;
        }
        f_norm = f_norm.max(v.abs());
    }
    f_norm = f_norm.max(s.driver.eval_unchecked(window_end).abs());

    let mut rng = SequentialRng::new(seed);
    let mut max_ratio = 0.0f64;
    for _ in 0..pairs {
        let mut a = rng.next_range(0.0, window_end);
        let mut b = rng.next_range(0.0, window_end);
        if a > b {
            std::mem::swap(&mut a, &mut b);
        }
        let f_s = s.driver.eval_unchecked(a);
        // Exact oscillation of a piecewise-linear path over [a, b].
        let mut osc = (s.driver.eval_unchecked(b) - f_s).abs();
        for (t, v) in s.driver.knots() {
            if t <= a {
                continue;
            }
            if t >= b {
                break;
            }
            osc = osc.max((v - f_s).abs());
        }
        let lhs = (s.x.eval_unchecked(b) - s.x.eval_unchecked(a)).abs();
        let bound = 4.0 * k * f_norm * (1.0 / s.n as f64 + c_prime * osc) + c_prime * osc;
        if bound > 0.0 {
            max_ratio = max_ratio.max(lhs / bound);
        } else {
            // Zero oscillation window: x must be flat there too.
            max_ratio = max_ratio.max(if lhs > 1e-12 { f64::INFINITY } else { 0.0 });
        }
    }
    Ok(OscillationCheck {
        max_ratio,
        pairs_checked: pairs,
        window_end,
    })
}
