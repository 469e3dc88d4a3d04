//! Continuous paths as piecewise-linear interpolants.
//!
//! Every trajectory in this crate (driving noise, solution, local time,
//! reflected process) is a [`PiecewiseLinearPath`]: an ordered list of
//! `(time, value)` knots evaluated by linear interpolation. The path *is*
//! its interpolant; there is no hidden data. This makes three operations
//! exact rather than approximate:
//!
//! * the running minimum of a path is again piecewise linear, with knots
//!   computable in closed form,
//! * first-passage (hitting) times reduce to solving one linear segment
//!   equation (a single division),
//! * evaluation at a knot returns the stored value bit-for-bit.
//!
//! Brownian drivers are produced by [`BrownianSampler`], which addresses
//! every increment and every bridge midpoint by a counter, so a path is a
//! pure function of `(master_seed, dt, horizon, refine_depth, path_index)`.

use crate::error::{Error, Result};
use crate::rng;

/// A continuous function on `[0, T]` given by ordered knots.
///
/// Invariants (enforced at construction):
/// * knot times strictly increasing, first knot at `t = 0`;
/// * all times and values finite.
#[derive(Clone, Debug, PartialEq)]
pub struct PiecewiseLinearPath {
    times: Vec<f64>,
    values: Vec<f64>,
}

impl PiecewiseLinearPath {
    /// Builds a path from `(time, value)` knots, validating the invariants.
    pub fn new(knots: Vec<(f64, f64)>) -> Result<Self> {
        let (times, values) = knots.into_iter().unzip();
        Self::from_columns(times, values)
    }

    /// Builds a path from parallel time/value columns.
    pub fn from_columns(times: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if times.is_empty() {
            return Err(Error::domain("path needs at least one knot"));
        }
        if times.len() != values.len() {
            return Err(Error::usage("times and values have different lengths"));
        }
        if times[0] != 0.0 {
            return Err(Error::domain(format!(
                "first knot time must be 0, got {}",
                times[0]
            )));
        }
        for w in times.windows(2) {
            if !(w[1] > w[0]) {
                return Err(Error::domain(format!(
                    "knot times must be strictly increasing ({} then {})",
                    w[0], w[1]
                )));
            }
        }
        if times.iter().chain(values.iter()).any(|v| !v.is_finite()) {
            return Err(Error::domain("knot times and values must be finite"));
        }
        Ok(PiecewiseLinearPath { times, values })
    }

    /// Constant path `v` on `[0, horizon]` (single knot when `horizon = 0`).
    pub fn constant(v: f64, horizon: f64) -> Result<Self> {
        if horizon == 0.0 {
            Self::from_columns(vec![0.0], vec![v])
        } else {
            Self::from_columns(vec![0.0, horizon], vec![v, v])
        }
    }

    /// The ramp `t -> slope * t` on `[0, horizon]`.
    pub fn ramp(slope: f64, horizon: f64) -> Result<Self> {
        Self::from_columns(vec![0.0, horizon], vec![0.0, slope * horizon])
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn knots(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.times.iter().copied().zip(self.values.iter().copied())
    }

    pub fn num_knots(&self) -> usize {
        self.times.len()
    }

    /// The horizon `T` (time of the last knot).
    pub fn horizon(&self) -> f64 {
        *self.times.last().unwrap()
    }

    pub fn first_value(&self) -> f64 {
        self.values[0]
    }

    pub fn last_value(&self) -> f64 {
        *self.values.last().unwrap()
    }

    /// Index of the segment `[times[i], times[i+1]]` containing `t`, by
    /// binary search. Exact knot hits resolve to the knot on the left.
    fn segment_index(&self, t: f64) -> usize {
        match self
            .times
            .binary_search_by(|probe| probe.partial_cmp(&t).unwrap())
        {
            Ok(i) => i.min(self.times.len().saturating_sub(2)),
            Err(i) => i - 1,
        }
    }

    /// Linear interpolation at `t`; exact at knots.
    pub fn eval(&self, t: f64) -> Result<f64> {
        if !(t >= 0.0 && t <= self.horizon()) {
            return Err(Error::domain(format!(
                "t = {t} outside [0, {}]",
                self.horizon()
            )));
        }
        Ok(self.eval_unchecked(t))
    }

    pub(crate) fn eval_unchecked(&self, t: f64) -> f64 {
        if self.times.len() == 1 {
            return self.values[0];
        }
        let i = self.segment_index(t);
        let (t0, t1) = (self.times[i], self.times[i + 1]);
        if t == t0 {
            return self.values[i];
        }
        if t == t1 {
            return self.values[i + 1];
        }
        let w = (t - t0) / (t1 - t0);
        self.values[i] + w * (self.values[i + 1] - self.values[i])
    }

    /// Evaluates at many nondecreasing times with a single forward sweep.
    pub fn eval_sorted(&self, ts: &[f64]) -> Result<Vec<f64>> {
        let mut out = Vec::with_capacity(ts.len());
        let mut seg = 0usize;
        let last = self.times.len() - 1;
        for &t in ts {
            if !(t >= 0.0 && t <= self.horizon()) {
                return Err(Error::domain(format!(
                    "t = {t} outside [0, {}]",
                    self.horizon()
                )));
            }
            while seg < last && self.times[seg + 1] < t {
                seg += 1;
            }
            if last == 0 {
                out.push(self.values[0]);
                continue;
            }
            let (t0, t1) = (self.times[seg], self.times[seg + 1]);
            let v = if t == t0 {
                self.values[seg]
            } else if t == t1 {
                self.values[seg + 1]
            } else {
                self.values[seg] + (t - t0) / (t1 - t0) * (self.values[seg + 1] - self.values[seg])
            };
            out.push(v);
        }
        Ok(out)
    }

    /// The signed running minimum clipped at zero,
    ///
    /// ```text
    /// M(t) = max_{s <= t} (-g(s))  v  0,
    /// ```
    ///
    /// returned as a piecewise-linear path with a knot at every input knot
    /// and at every level crossing. `M` is nondecreasing, `M(t) >= -g(t)`,
    /// with equality wherever `M` increases.
    pub fn running_min(&self) -> PiecewiseLinearPath {
        let mut m = (-self.values[0]).max(0.0);
        let n = self.times.len();
        let mut times = Vec::with_capacity(n + 8);
        let mut values = Vec::with_capacity(n + 8);
        times.push(self.times[0]);
        values.push(m);
        for i in 0..n.saturating_sub(1) {
            let (t0, t1) = (self.times[i], self.times[i + 1]);
            let u0 = -self.values[i]; // -g is linear on the segment
            let u1 = -self.values[i + 1];
            debug_assert!(u0 <= m + 1e-12 * m.abs().max(1.0));
            if u1 > m {
                // The segment pushes the running maximum of -g upward.
                if u0 < m {
                    // Flat until -g re-reaches the previous record.
                    let s = t0 + (m - u0) / (u1 - u0) * (t1 - t0);
                    if s > t0 && s < t1 {
                        times.push(s);
                        values.push(m);
                    }
                }
                m = u1;
            }
            times.push(t1);
            values.push(m);
        }
        PiecewiseLinearPath { times, values }
    }

    /// First time the running minimum strictly exceeds `a`, solved exactly on
    /// the crossing segment; `None` if `M(T) <= a`.
    pub fn hitting_time(&self, a: f64) -> Result<Option<f64>> {
        if !(a >= 0.0) {
            return Err(Error::domain(format!("hitting level a = {a} must be >= 0")));
        }
        // M(t) > a  <=>  g dips strictly below -a by time t.
        Ok(self.first_passage_below(-a))
    }

    /// First time the path goes strictly below `level`, with the crossing
    /// solved exactly on the bracketing segment. A touch without crossing
    /// does not count.
    pub(crate) fn first_passage_below(&self, level: f64) -> Option<f64> {
        if self.values[0] < level {
            return Some(0.0);
        }
        for i in 0..self.times.len().saturating_sub(1) {
            let v1 = self.values[i + 1];
            if v1 < level {
                let v0 = self.values[i];
                let (t0, t1) = (self.times[i], self.times[i + 1]);
                // v0 >= level > v1 here; one division.
                let s = t0 + (v0 - level) / (v0 - v1) * (t1 - t0);
                return Some(s);
            }
        }
        None
    }

    /// Minimum value over the whole horizon (exact for piecewise-linear).
    pub fn min_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Maximum value over the whole horizon.
    pub fn max_value(&self) -> f64 {
        self.values
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Maximum supported dyadic refinement depth (bridge node addressing).
pub const MAX_REFINE_DEPTH: u32 = 12;

/// Outcome of a streaming first-passage scan.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Passage {
    /// Crossing time of the (refined) piecewise-linear path.
    Hit(f64),
    /// No crossing by the horizon; carries the minimum value seen.
    NoHit { min_value: f64 },
}

/// Deterministic Brownian path sampler.
///
/// A sampled path has knots on the uniform grid of step `dt` (plus the
/// horizon if `dt` does not divide it), refined `refine_depth` times by
/// dyadic Brownian-bridge midpoints. Identical
/// `(master_seed, dt, horizon, refine_depth, path_index)` reproduce the
/// identical path, and refinement commutes with sampling: refining a
/// depth-`d` path yields the depth-`d+1` path bit-for-bit.
#[derive(Clone, Debug, PartialEq)]
pub struct BrownianSampler {
    pub master_seed: u64,
    pub dt: f64,
    pub horizon: f64,
    pub refine_depth: u32,
}

impl BrownianSampler {
    pub fn new(master_seed: u64, dt: f64, horizon: f64, refine_depth: u32) -> Result<Self> {
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(Error::config(format!("dt = {dt} must be positive")));
        }
        if !(horizon > 0.0) || !horizon.is_finite() {
            return Err(Error::config(format!(
                "horizon = {horizon} must be positive"
            )));
        }
        if dt >= horizon {
            return Err(Error::config(format!(
                "dt = {dt} must be smaller than the horizon {horizon}"
            )));
        }
        if refine_depth > MAX_REFINE_DEPTH {
            return Err(Error::config(format!(
                "refine_depth = {refine_depth} exceeds the supported maximum {MAX_REFINE_DEPTH}"
            )));
        }
        let steps = horizon / dt;
        if steps >= (1u64 << 40) as f64 || (refine_depth > 0 && steps >= (1u64 << 25) as f64) {
            return Err(Error::config(format!(
                "horizon/dt = {steps:.0} steps exceeds the bridge addressing capacity"
            )));
        }
        Ok(BrownianSampler {
            master_seed,
            dt,
            horizon,
            refine_depth,
        })
    }

    /// Stream key for one path (same mixing as `ensemble::per_path_seed`).
    fn path_key(&self, path_index: u64) -> u64 {
        rng::derive_key(self.master_seed, path_index)
    }

    /// Number of coarse steps (intervals); the final knot is the horizon, a
    /// shortened last step when `dt` does not divide it.
    fn coarse_step_count(&self) -> u64 {
        // Smallest k with k dt >= horizon, resolved near the boundary.
        let mut k = (self.horizon / self.dt).floor() as u64;
        while k as f64 * self.dt >= self.horizon {
            k -= 1;
        }
        while (k + 1) as f64 * self.dt < self.horizon {
            k += 1;
        }
        let interior = k + 1; // knots dt, ..., k dt are strictly inside
                              // Merge a vanishingly short final step into the previous one.
        if interior > 1 && self.horizon - k as f64 * self.dt < 1e-12 * self.dt {
            interior - 1
        } else {
            interior
        }
    }

    /// Knot `i` of the coarse grid (`i <= coarse_step_count`).
    #[inline]
    fn coarse_time(&self, i: u64, steps: u64) -> f64 {
        if i >= steps {
            self.horizon
        } else {
            i as f64 * self.dt
        }
    }

    /// Coarse grid times: `0, dt, 2 dt, ..., horizon`.
    fn coarse_times(&self) -> Vec<f64> {
        let steps = self.coarse_step_count();
        (0..=steps).map(|i| self.coarse_time(i, steps)).collect()
    }

    /// Counter for the coarse increment over step `k`: consecutive so that
    /// sequential sweeps can consume normal pairs.
    #[inline]
    fn coarse_node(k: u64) -> u64 {
        debug_assert!(k < 1 << 40);
        k
    }

    /// Counter for the `j`-th midpoint inserted at refinement level `level`
    /// (1-based) inside coarse step `k`; offset far above the coarse range.
    #[inline]
    fn bridge_node(k: u64, level: u32, j: u64) -> u64 {
        debug_assert!(k < 1 << 25 && (1..=16).contains(&level) && j < 1 << 16);
        (1 << 45) | (k << 20) | ((level as u64) << 16) | j
    }

    /// Samples path `path_index` at the sampler's own refinement depth.
    pub fn sample(&self, path_index: u64) -> PiecewiseLinearPath {
        self.sample_at_depth(path_index, self.refine_depth)
    }

    /// Samples path `path_index` at an explicit refinement depth
    /// (`depth <= MAX_REFINE_DEPTH`).
    pub fn sample_at_depth(&self, path_index: u64, depth: u32) -> PiecewiseLinearPath {
        assert!(depth <= MAX_REFINE_DEPTH);
        let key = self.path_key(path_index);
        let coarse = self.coarse_times();
        let mut values = Vec::with_capacity(coarse.len());
        values.push(0.0);
        let mut b = 0.0;
        let mut draws = CoarseDraws::new(key);
        for k in 0..coarse.len() - 1 {
            let h = coarse[k + 1] - coarse[k];
            b += h.sqrt() * draws.next(k as u64);
            values.push(b);
        }
        let mut path = PiecewiseLinearPath {
            times: coarse,
            values,
        };
        for level in 1..=depth {
            path = refine_once(&path, key, level);
        }
        path
    }

    /// The endpoint `B(horizon)` without materializing the path (refinement
    /// preserves endpoints, so this is depth-independent).
    pub fn sample_endpoint(&self, path_index: u64) -> f64 {
        let key = self.path_key(path_index);
        let steps = self.coarse_step_count();
        let mut b = 0.0;
        let mut draws = CoarseDraws::new(key);
        for k in 0..steps {
            let h = self.coarse_time(k + 1, steps) - self.coarse_time(k, steps);
            b += h.sqrt() * draws.next(k);
        }
        b
    }

    /// Applies `levels` further rounds of bridge refinement to a path this
    /// sampler produced for `path_index`. Endpoint values are unchanged and
    /// the result equals sampling at the higher depth directly.
    pub fn refine_bridge(
        &self,
        path: &PiecewiseLinearPath,
        path_index: u64,
        levels: u32,
    ) -> Result<PiecewiseLinearPath> {
        let coarse = self.coarse_times();
        let n_coarse = coarse.len() - 1;
        let n_int = path.times.len().saturating_sub(1);
        if n_int == 0 || !n_int.is_multiple_of(n_coarse) || !(n_int / n_coarse).is_power_of_two() {
            return Err(Error::config(format!(
                "path with {} intervals does not sit on this sampler's grid ({} coarse steps)",
                n_int, n_coarse
            )));
        }
        let depth = (n_int / n_coarse).trailing_zeros();
        if depth + levels > MAX_REFINE_DEPTH {
            return Err(Error::config(format!(
                "refinement depth {} exceeds the supported maximum {MAX_REFINE_DEPTH}",
                depth + levels
            )));
        }
        // The grid must be this sampler's, not merely the right shape.
        if path.times != self.grid_at_depth(depth) {
            return Err(Error::config(
                "path knot times do not match this sampler's refined grid".to_string(),
            ));
        }
        let key = self.path_key(path_index);
        let mut out = path.clone();
        for l in 1..=levels {
            out = refine_once(&out, key, depth + l);
        }
        Ok(out)
    }

    /// Knot times of the depth-`depth` refined grid.
    fn grid_at_depth(&self, depth: u32) -> Vec<f64> {
        let mut times = self.coarse_times();
        for _ in 0..depth {
            let n_int = times.len() - 1;
            let mut finer = Vec::with_capacity(2 * n_int + 1);
            for i in 0..n_int {
                finer.push(times[i]);
                finer.push(0.5 * (times[i] + times[i + 1]));
            }
            finer.push(*times.last().unwrap());
            times = finer;
        }
        times
    }

    /// First passage of the refined path strictly below `level <= 0`,
    /// streamed lazily so long censored paths never materialize.
    ///
    /// Agrees with `self.sample(path_index).first_passage_below(level)`:
    /// a coarse step is refined exactly when its endpoints come within
    /// `8 * sqrt(dt)` of the running minimum seen so far (which always sits
    /// at or above the barrier); a bridge dip deeper than that margin has
    /// probability below `exp(-128)` per step. On `NoHit`, `min_value` is
    /// the exact minimum of the refined lattice under the same rule.
    pub fn first_passage_below(&self, path_index: u64, level: f64) -> Passage {
        if 0.0 < level {
            return Passage::Hit(0.0);
        }
        let key = self.path_key(path_index);
        let steps = self.coarse_step_count();
        let margin = 8.0 * self.dt.sqrt();
        let mut b = 0.0f64;
        let mut min_seen = 0.0f64;
        let mut draws = CoarseDraws::new(key);
        for k in 0..steps {
            let tl = self.coarse_time(k, steps);
            let tr = self.coarse_time(k + 1, steps);
            let h = tr - tl;
            let b_next = b + h.sqrt() * draws.next(k);
            if b.min(b_next) < min_seen + margin {
                // Materialize this step at full depth and scan its lattice.
                let (sub_t, sub_v) = self.refine_step(key, k, tl, tr, b, b_next);
                for i in 0..sub_t.len() - 1 {
                    let v1 = sub_v[i + 1];
                    min_seen = min_seen.min(v1);
                    if v1 < level {
                        let v0 = sub_v[i];
                        let s = sub_t[i] + (v0 - level) / (v0 - v1) * (sub_t[i + 1] - sub_t[i]);
                        return Passage::Hit(s);
                    }
                }
            } else {
                min_seen = min_seen.min(b_next);
            }
            b = b_next;
        }
        Passage::NoHit {
            min_value: min_seen,
        }
    }

    /// Fully refines one coarse step, reproducing exactly the lattice
    /// `sample` would produce for that step.
    fn refine_step(
        &self,
        key: u64,
        k: u64,
        tl: f64,
        tr: f64,
        vl: f64,
        vr: f64,
    ) -> (Vec<f64>, Vec<f64>) {
        let mut times = vec![tl, tr];
        let mut values = vec![vl, vr];
        for level in 1..=self.refine_depth {
            let n_int = times.len() - 1;
            let mut nt = Vec::with_capacity(2 * n_int + 1);
            let mut nv = Vec::with_capacity(2 * n_int + 1);
            for j in 0..n_int {
                let h = times[j + 1] - times[j];
                let z = rng::standard_normal(key, Self::bridge_node(k, level, j as u64));
                nt.push(times[j]);
                nv.push(values[j]);
                nt.push(0.5 * (times[j] + times[j + 1]));
                nv.push(0.5 * (values[j] + values[j + 1]) + 0.5 * h.sqrt() * z);
            }
            nt.push(tr);
            nv.push(vr);
            times = nt;
            values = nv;
        }
        (times, values)
    }

    /// Running minimum `max(-B) v 0` of the refined path at the horizon,
    /// computed lazily under the same refinement rule as
    /// [`Self::first_passage_below`].
    pub fn running_min_at_horizon(&self, path_index: u64) -> f64 {
        match self.first_passage_below(path_index, f64::NEG_INFINITY) {
            Passage::NoHit { min_value } => (-min_value).max(0.0),
            Passage::Hit(_) => unreachable!("no finite value is below -inf"),
        }
    }
}

/// Sequential reader of the coarse-increment stream: consumes whole normal
/// pairs so consecutive steps share one polar draw. `next(k)` must be called
/// with `k = 0, 1, 2, ...` and equals `standard_normal(key, coarse_node(k))`.
struct CoarseDraws {
    key: u64,
    buffered: Option<f64>,
}

impl CoarseDraws {
    fn new(key: u64) -> Self {
        CoarseDraws {
            key,
            buffered: None,
        }
    }

    #[inline]
    fn next(&mut self, k: u64) -> f64 {
        if k & 1 == 0 {
            let (a, b) = rng::normal_pair(self.key, BrownianSampler::coarse_node(k) >> 1);
            self.buffered = Some(b);
            a
        } else {
            self.buffered
                .take()
                .unwrap_or_else(|| rng::standard_normal(self.key, BrownianSampler::coarse_node(k)))
        }
    }
}

/// One level of dyadic bridge refinement; `level` is the global level of the
/// midpoints being inserted (existing depth + 1).
fn refine_once(path: &PiecewiseLinearPath, key: u64, level: u32) -> PiecewiseLinearPath {
    let per_step = 1usize << (level - 1); // intervals per coarse step before this pass
    let n_int = path.times.len() - 1;
    let mut times = Vec::with_capacity(2 * n_int + 1);
    let mut values = Vec::with_capacity(2 * n_int + 1);
    for i in 0..n_int {
        let (tl, tr) = (path.times[i], path.times[i + 1]);
        let (vl, vr) = (path.values[i], path.values[i + 1]);
        let k = (i / per_step) as u64;
        let j = (i % per_step) as u64;
        let h = tr - tl;
        let z = rng::standard_normal(key, BrownianSampler::bridge_node(k, level, j));
        times.push(tl);
        values.push(vl);
        times.push(0.5 * (tl + tr));
        values.push(0.5 * (vl + vr) + 0.5 * h.sqrt() * z);
    }
    times.push(path.horizon());
    values.push(*path.values.last().unwrap());
    PiecewiseLinearPath { times, values }
}
