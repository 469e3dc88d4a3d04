//! The noise coefficient: a function of accumulated local time, carrying its
//! Lipschitz constant and uniform lower bound.
//!
//! The scheme requires a coefficient that is Lipschitz and bounded away from
//! zero. The power-law family `(1 - l)^p` violates both at `l = 1`; it is
//! representable here but only consumed through the truncation ladder in the
//! determinacy module, never fed to the scheme directly.

use crate::error::{Error, Result};
use crate::paths::PiecewiseLinearPath;

/// The shape of a noise coefficient.
#[derive(Clone, Debug, PartialEq)]
pub enum NoiseKind {
    /// `sigma(l) = c` with `c > 0`.
    Constant { c: f64 },
    /// `sigma(l) = intercept + slope * l` with `intercept > 0`, `slope >= 0`.
    Affine { intercept: f64, slope: f64 },
    /// `sigma(l) = (1 - l)^p` on `[0, 1]`, zero beyond. Not Lipschitz for
    /// `p < 1` and not bounded away from zero.
    PowerLaw { p: f64 },
    /// `sigma(l) = (1 - l)^p` on `[0, 1 - delta]`, constant `delta^p` beyond.
    TruncatedPowerLaw { p: f64, delta: f64 },
    /// Linear interpolation over knots on `[0, l_max]`; evaluation outside
    /// the table is a domain error.
    Tabulated { table: PiecewiseLinearPath },
}

/// A validated noise coefficient with derived constants `(K, delta)`.
#[derive(Clone, Debug, PartialEq)]
pub struct NoiseCoefficient {
    kind: NoiseKind,
    lipschitz: f64,
    lower_bound: f64,
}

impl NoiseCoefficient {
    /// Builds a coefficient, verifying positivity and deriving the Lipschitz
    /// constant and lower bound from the parameters (for tabulated kinds,
    /// from an exhaustive segment check).
    pub fn make(kind: NoiseKind) -> Result<Self> {
        let (lipschitz, lower_bound) = match &kind {
            NoiseKind::Constant { c } => {
                if !(*c > 0.0) || !c.is_finite() {
                    return Err(Error::config(format!("constant c = {c} must be positive")));
                }
                (0.0, *c)
            }
            NoiseKind::Affine { intercept, slope } => {
                if !(*intercept > 0.0) || !intercept.is_finite() {
                    return Err(Error::config(format!(
                        "affine intercept = {intercept} must be positive"
                    )));
                }
                if !(*slope >= 0.0) || !slope.is_finite() {
                    return Err(Error::config(format!(
                        "affine slope = {slope} must be nonnegative (the coefficient would cross zero)"
                    )));
                }
                (*slope, *intercept)
            }
            NoiseKind::PowerLaw { p } => {
                if !(*p >= 0.0) || !p.is_finite() {
                    return Err(Error::config(format!("power p = {p} must be >= 0")));
                }
                // Lipschitz only for p >= 1 (slope bounded by p); the p < 1
                // family has unbounded slope near l = 1, and p = 0 jumps at 1.
                let k = if *p >= 1.0 { *p } else { f64::INFINITY };
                (k, 0.0)
            }
            NoiseKind::TruncatedPowerLaw { p, delta } => {
                if !(*p >= 0.0) || !p.is_finite() {
                    return Err(Error::config(format!("power p = {p} must be >= 0")));
                }
                if !(*delta > 0.0 && *delta <= 1.0) {
                    return Err(Error::config(format!(
                        "truncation delta = {delta} must lie in (0, 1]"
                    )));
                }
                // max |sigma'| over [0, 1 - delta]: p * (1 - l)^(p-1) peaks at
                // l = 0 for p >= 1 and at l = 1 - delta for p < 1.
                let k = if *p >= 1.0 {
                    *p
                } else {
                    *p * delta.powf(*p - 1.0)
                };
                (k, delta.powf(*p))
            }
            NoiseKind::Tabulated { table } => {
                let mut min_v = f64::INFINITY;
                let mut max_slope = 0.0f64;
                for v in table.values() {
                    min_v = min_v.min(*v);
                }
                if !(min_v > 0.0) {
                    return Err(Error::config(format!(
                        "tabulated values must be positive (min = {min_v})"
                    )));
                }
                for i in 0..table.num_knots().saturating_sub(1) {
                    let dt = table.times()[i + 1] - table.times()[i];
                    let dv = table.values()[i + 1] - table.values()[i];
                    max_slope = max_slope.max((dv / dt).abs());
                }
                (max_slope, min_v)
            }
        };
        Ok(NoiseCoefficient {
            kind,
            lipschitz,
            lower_bound,
        })
    }

    pub fn constant(c: f64) -> Result<Self> {
        Self::make(NoiseKind::Constant { c })
    }

    pub fn affine(intercept: f64, slope: f64) -> Result<Self> {
        Self::make(NoiseKind::Affine { intercept, slope })
    }

    pub fn power_law(p: f64) -> Result<Self> {
        Self::make(NoiseKind::PowerLaw { p })
    }

    pub fn truncated_power_law(p: f64, delta: f64) -> Result<Self> {
        Self::make(NoiseKind::TruncatedPowerLaw { p, delta })
    }

    pub fn tabulated(table: PiecewiseLinearPath) -> Result<Self> {
        Self::make(NoiseKind::Tabulated { table })
    }

    pub fn kind(&self) -> &NoiseKind {
        &self.kind
    }

    /// The declared `(K, delta)`: Lipschitz constant and uniform lower bound.
    pub fn constants(&self) -> (f64, f64) {
        (self.lipschitz, self.lower_bound)
    }

    pub fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    pub fn lower_bound(&self) -> f64 {
        self.lower_bound
    }

    /// `sigma(0)`, used by the coverage and oscillation constants.
    pub fn at_zero(&self) -> f64 {
        self.eval_unchecked(0.0)
    }

    /// Evaluates the coefficient at local-time value `l >= 0`.
    pub fn eval(&self, l: f64) -> Result<f64> {
        if !(l >= 0.0) {
            return Err(Error::domain(format!("l = {l} must be >= 0")));
        }
        if let NoiseKind::Tabulated { table } = &self.kind {
            if l > table.horizon() {
                return Err(Error::domain(format!(
                    "l = {l} outside the tabulated domain [0, {}]",
                    table.horizon()
                )));
            }
        }
        Ok(self.eval_unchecked(l))
    }

    #[inline]
    pub(crate) fn eval_unchecked(&self, l: f64) -> f64 {
        match &self.kind {
            NoiseKind::Constant { c } => *c,
            NoiseKind::Affine { intercept, slope } => intercept + slope * l,
            NoiseKind::PowerLaw { p } => {
                if l > 1.0 {
                    0.0
                } else {
                    (1.0 - l).powf(*p)
                }
            }
            NoiseKind::TruncatedPowerLaw { p, delta } => {
                if l > 1.0 - delta {
                    delta.powf(*p)
                } else {
                    (1.0 - l).powf(*p)
                }
            }
            // Clamped: the scheme may probe slightly past the table; constant
            // extension preserves both K and the lower bound.
            NoiseKind::Tabulated { table } => table.eval_unchecked(l.min(table.horizon())),
        }
    }

    /// Upper end of the coefficient's natural evaluation domain, used when
    /// sampling invariant checks. Unbounded kinds report `hi` back.
    pub(crate) fn domain_cap(&self, hi: f64) -> f64 {
        match &self.kind {
            NoiseKind::Tabulated { table } => table.horizon().min(hi),
            _ => hi,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SequentialRng;

    #[test]
    fn eval_examples() {
        let power = NoiseCoefficient::power_law(2.0).unwrap();
        assert_eq!(power.eval(0.5).unwrap(), 0.25);
        assert_eq!(power.eval(1.5).unwrap(), 0.0);

        let trunc = NoiseCoefficient::truncated_power_law(1.0, 0.1).unwrap();
        assert!((trunc.eval(0.95).unwrap() - 0.1).abs() < 1e-15);

        let c = NoiseCoefficient::constant(3.0).unwrap();
        assert_eq!(c.eval(0.0).unwrap(), 3.0);
        assert_eq!(c.eval(17.0).unwrap(), 3.0);

        assert!(c.eval(-0.1).is_err());
    }

    #[test]
    fn constants_examples() {
        assert_eq!(
            NoiseCoefficient::affine(1.0, 1.0).unwrap().constants(),
            (1.0, 1.0)
        );
        let (k, d) = NoiseCoefficient::truncated_power_law(1.0, 0.1)
            .unwrap()
            .constants();
        assert!((k - 1.0).abs() < 1e-15 && (d - 0.1).abs() < 1e-15);
        assert_eq!(
            NoiseCoefficient::constant(2.0).unwrap().constants(),
            (0.0, 2.0)
        );
    }

    #[test]
    fn make_validates() {
        assert!(NoiseCoefficient::truncated_power_law(0.5, 0.0).is_err());
        assert!(NoiseCoefficient::constant(0.0).is_err());
        assert!(NoiseCoefficient::affine(1.0, -0.5).is_err());
        assert!(NoiseCoefficient::power_law(-1.0).is_err());

        // p = 0 is the unit coefficient on [0, 1], zero after.
        let p0 = NoiseCoefficient::power_law(0.0).unwrap();
        assert_eq!(p0.eval(0.3).unwrap(), 1.0);
        assert_eq!(p0.eval(1.0).unwrap(), 1.0);
        assert_eq!(p0.eval(1.01).unwrap(), 0.0);

        let tab = NoiseCoefficient::tabulated(
            PiecewiseLinearPath::new(vec![(0.0, 1.0), (1.0, 2.0)]).unwrap(),
        )
        .unwrap();
        assert_eq!(tab.constants(), (1.0, 1.0));
        assert!(tab.eval(1.5).is_err());

        let bad_tab = PiecewiseLinearPath::new(vec![(0.0, 1.0), (1.0, -0.5)]).unwrap();
        assert!(NoiseCoefficient::tabulated(bad_tab).is_err());
    }

    fn sample_kinds() -> Vec<NoiseCoefficient> {
        vec![
            NoiseCoefficient::constant(2.0).unwrap(),
            NoiseCoefficient::affine(1.0, 1.0).unwrap(),
            NoiseCoefficient::affine(0.25, 3.0).unwrap(),
            NoiseCoefficient::power_law(1.5).unwrap(),
            NoiseCoefficient::truncated_power_law(0.5, 0.1).unwrap(),
            NoiseCoefficient::truncated_power_law(2.0, 0.25).unwrap(),
            NoiseCoefficient::tabulated(
                PiecewiseLinearPath::new(vec![(0.0, 1.0), (0.5, 0.3), (2.0, 2.2)]).unwrap(),
            )
            .unwrap(),
        ]
    }

    #[test]
    fn lipschitz_bound_holds_on_random_pairs() {
        let mut rng = SequentialRng::new(11);
        for sigma in sample_kinds() {
            let (k, _) = sigma.constants();
            if !k.is_finite() {
                continue;
            }
            let hi = sigma.domain_cap(3.0);
            for _ in 0..10_000 {
                let a = rng.next_range(0.0, hi);
                let b = rng.next_range(0.0, hi);
                let lhs = (sigma.eval(a).unwrap() - sigma.eval(b).unwrap()).abs();
                assert!(
                    lhs <= k * (a - b).abs() + 1e-12,
                    "{:?}: |sigma({a}) - sigma({b})| = {lhs} > K|a-b|",
                    sigma.kind()
                );
            }
        }
    }

    #[test]
    fn lower_bound_holds_on_random_points() {
        let mut rng = SequentialRng::new(12);
        for sigma in sample_kinds() {
            let (_, d) = sigma.constants();
            let hi = sigma.domain_cap(3.0);
            for _ in 0..10_000 {
                let l = rng.next_range(0.0, hi);
                assert!(sigma.eval(l).unwrap() >= d - 1e-12);
            }
        }
    }

    #[test]
    fn truncation_agrees_with_power_law_below_cut() {
        let mut rng = SequentialRng::new(13);
        for &(p, delta) in &[(0.5, 0.1), (1.0, 0.25), (2.0, 0.5), (0.0, 0.3)] {
            let full = NoiseCoefficient::power_law(p).unwrap();
            let trunc = NoiseCoefficient::truncated_power_law(p, delta).unwrap();
            for _ in 0..2_000 {
                let l = rng.next_range(0.0, 1.0 - delta);
                assert_eq!(full.eval(l).unwrap(), trunc.eval(l).unwrap());
            }
        }
    }
}
