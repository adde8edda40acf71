//! Domain types shared by the engines, estimators and oracle, plus the two
//! closed-form helpers: the window functional `f` and the large-rate margin
//! polynomial.

use std::collections::HashSet;
use std::fmt;

use crate::error::{invalid, Result};

/// Finite set of infected sites of Z.
///
/// Stored as a hash set together with the cached bounding interval of the
/// support. The empty set is the absorbing all-healthy state.
#[derive(Debug, Clone, Default)]
pub struct Configuration {
    infected: HashSet<i64>,
    bounds: Option<(i64, i64)>,
}

impl Configuration {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_sites<I: IntoIterator<Item = i64>>(sites: I) -> Self {
        let mut c = Self::new();
        for s in sites {
            c.insert(s);
        }
        c
    }

    pub fn singleton(site: i64) -> Self {
        Self::from_sites([site])
    }

    /// Returns `true` if the site was not already infected.
    pub fn insert(&mut self, site: i64) -> bool {
        let fresh = self.infected.insert(site);
        if fresh {
            self.bounds = Some(match self.bounds {
                None => (site, site),
                Some((lo, hi)) => (lo.min(site), hi.max(site)),
            });
        }
        fresh
    }

    pub fn remove(&mut self, site: i64) -> bool {
        let had = self.infected.remove(&site);
        if had {
            if let Some((lo, hi)) = self.bounds {
                if site == lo || site == hi {
                    self.bounds = self
                        .infected
                        .iter()
                        .fold(None, |acc, &s| match acc {
                            None => Some((s, s)),
                            Some((a, b)) => Some((a.min(s), b.max(s))),
                        });
                }
            }
        }
        had
    }

    pub fn contains(&self, site: i64) -> bool {
        self.infected.contains(&site)
    }

    pub fn len(&self) -> usize {
        self.infected.len()
    }

    pub fn is_empty(&self) -> bool {
        self.infected.is_empty()
    }

    /// Smallest interval containing the support, `None` when empty.
    pub fn bounds(&self) -> Option<(i64, i64)> {
        self.bounds
    }

    pub fn iter(&self) -> impl Iterator<Item = i64> + '_ {
        self.infected.iter().copied()
    }

    pub fn sorted(&self) -> Vec<i64> {
        let mut v: Vec<i64> = self.iter().collect();
        v.sort_unstable();
        v
    }

    pub fn is_subset(&self, other: &Configuration) -> bool {
        self.infected.is_subset(&other.infected)
    }

    /// Sites in `self` but not in `other`.
    pub fn difference<'a>(&'a self, other: &'a Configuration) -> impl Iterator<Item = i64> + 'a {
        self.infected.difference(&other.infected).copied()
    }

    /// `|self ∩ sites|`.
    pub fn count_in(&self, sites: &[i64]) -> usize {
        sites.iter().filter(|s| self.contains(**s)).count()
    }
}

impl PartialEq for Configuration {
    fn eq(&self, other: &Self) -> bool {
        self.infected == other.infected
    }
}

impl Eq for Configuration {}

impl FromIterator<i64> for Configuration {
    fn from_iter<I: IntoIterator<Item = i64>>(iter: I) -> Self {
        Self::from_sites(iter)
    }
}

impl fmt::Display for Configuration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (k, s) in self.sorted().into_iter().enumerate() {
            if k > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{s}")?;
        }
        write!(f, "}}")
    }
}

/// The observation window `{-r, r}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WindowLambdaR {
    r: i64,
}

impl WindowLambdaR {
    pub fn new(r: i64) -> Result<Self> {
        if r < 1 {
            return Err(invalid("r", format!("window half-width must be >= 1, got {r}")));
        }
        Ok(WindowLambdaR { r })
    }

    pub fn r(&self) -> i64 {
        self.r
    }

    pub fn sites(&self) -> [i64; 2] {
        [-self.r, self.r]
    }
}

/// Parameters of one sensitivity experiment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    pub lambda: f64,
    pub p: f64,
    pub q: f64,
    pub r: i64,
    pub t: f64,
}

impl ModelParams {
    /// Validates `lambda >= 0`, `0 < p < q < 1`, `r >= 1` and `t > 0`.
    ///
    /// `lambda = 0` is admitted as the pure-death limit.
    pub fn new(lambda: f64, p: f64, q: f64, r: i64, t: f64) -> Result<Self> {
        check_rate("lambda", lambda)?;
        check_densities(p, q)?;
        WindowLambdaR::new(r)?;
        if !(t > 0.0 && t.is_finite()) {
            return Err(invalid("t", format!("horizon must be positive and finite, got {t}")));
        }
        Ok(ModelParams { lambda, p, q, r, t })
    }

    /// The stricter regime `q > p > 2/3` under which both sign regimes of
    /// the sensitivity variation are guaranteed.
    pub fn check_large_density_regime(&self) -> Result<()> {
        if self.p <= 2.0 / 3.0 {
            return Err(invalid("p", format!("this preset requires p > 2/3, got {}", self.p)));
        }
        Ok(())
    }

    pub fn window(&self) -> WindowLambdaR {
        WindowLambdaR { r: self.r }
    }

    pub fn with_lambda(&self, lambda: f64) -> Result<Self> {
        Self::new(lambda, self.p, self.q, self.r, self.t)
    }
}

pub(crate) fn check_rate(name: &'static str, lambda: f64) -> Result<()> {
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(invalid(name, format!("rate must be finite and >= 0, got {lambda}")));
    }
    Ok(())
}

pub(crate) fn check_horizon(t: f64) -> Result<()> {
    if !(t >= 0.0 && t.is_finite()) {
        return Err(invalid("t", format!("horizon must be finite and >= 0, got {t}")));
    }
    Ok(())
}

pub(crate) fn check_densities(p: f64, q: f64) -> Result<()> {
    if !(p > 0.0 && p < 1.0) {
        return Err(invalid("p", format!("density must lie in (0, 1), got {p}")));
    }
    if !(q > 0.0 && q < 1.0) {
        return Err(invalid("q", format!("density must lie in (0, 1), got {q}")));
    }
    if p >= q {
        return Err(invalid("q", format!("need p < q, got p = {p}, q = {q}")));
    }
    Ok(())
}

#[inline]
pub(crate) fn f_unchecked(x: u32, p: f64, q: f64) -> f64 {
    (1.0 - p).powi(x as i32) - (1.0 - q).powi(x as i32)
}

/// `(1-p)^x - (1-q)^x`: the probability that `x` sites, each occupied
/// independently under the maximal coupling of Bernoulli(p) and
/// Bernoulli(q), are all empty under `p` but not all empty under `q`.
pub fn f_sensitivity(x: u32, p: f64, q: f64) -> Result<f64> {
    check_densities(p, q)?;
    Ok(f_unchecked(x, p, q))
}

/// `2(1-e)(1-d)^2 - e(1-d)d - 4d - e(1-d)^2`.
///
/// A positive value certifies that the limiting sensitivity variation is
/// bounded away from zero once the survival probability exceeds `1 - d`.
pub fn imp_margin(epsilon: f64, delta: f64) -> Result<f64> {
    if !(epsilon > 0.0 && epsilon < 2.0 / 3.0) {
        return Err(invalid("epsilon", format!("need 0 < epsilon < 2/3, got {epsilon}")));
    }
    if !(0.0..1.0).contains(&delta) {
        return Err(invalid("delta", format!("need 0 <= delta < 1, got {delta}")));
    }
    let u = 1.0 - delta;
    Ok(2.0 * (1.0 - epsilon) * u * u - epsilon * u * delta - 4.0 * delta - epsilon * u * u)
}

/// Largest `d` in `[0, 1)` with `imp_margin(epsilon, d) >= 0`, by bisection.
///
/// The margin is strictly decreasing in `d` and positive at `d = 0`, so the
/// root is unique.
pub fn imp_threshold(epsilon: f64) -> Result<f64> {
    let (mut lo, mut hi) = (0.0_f64, 1.0_f64 - f64::EPSILON);
    if imp_margin(epsilon, hi)? >= 0.0 {
        return Ok(hi);
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if imp_margin(epsilon, mid)? >= 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-15 {
            break;
        }
    }
    Ok(lo)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn f_examples() {
        assert_eq!(f_sensitivity(0, 0.7, 0.9).unwrap(), 0.0);
        assert!((f_sensitivity(1, 0.7, 0.9).unwrap() - 0.2).abs() < 1e-15);
        assert!((f_sensitivity(2, 0.7, 0.9).unwrap() - 0.08).abs() < 1e-15);
        let d = f_sensitivity(2, 0.7, 0.9).unwrap() - f_sensitivity(1, 0.7, 0.9).unwrap();
        assert!((d - (-0.12)).abs() < 1e-15);
        assert!((d - (0.9 - 0.7) * (1.0 - 0.7 - 0.9)).abs() < 1e-15);
        assert!((f_sensitivity(3, 0.5, 0.75).unwrap() - 0.109375).abs() < 1e-15);
    }

    #[test]
    fn f_rejects_bad_densities() {
        assert!(f_sensitivity(1, 0.9, 0.7).is_err());
        assert!(f_sensitivity(1, 0.5, 0.5).is_err());
        assert!(f_sensitivity(1, 0.0, 0.5).is_err());
        assert!(f_sensitivity(1, 0.5, 1.0).is_err());
    }

    #[test]
    fn imp_examples() {
        for eps in [0.05, 0.3, 0.6, 0.66] {
            let m = imp_margin(eps, 0.0).unwrap();
            assert!((m - (2.0 * (1.0 - eps) - eps)).abs() < 1e-15);
            assert!(m > 0.0);
        }
        // 1.083 - 0.019 - 0.2 - 0.361
        assert!((imp_margin(0.4, 0.05).unwrap() - 0.503).abs() < 1e-12);
        assert!(imp_margin(0.7, 0.1).is_err());
        assert!(imp_margin(0.4, 1.0).is_err());
    }

    #[test]
    fn imp_threshold_matches_grid_scan() {
        let eps = 0.4;
        let star = imp_threshold(eps).unwrap();
        // independent dense scan of the explicit polynomial
        let poly = |d: f64| {
            2.0 * 0.6 * (1.0 - d).powi(2) - 0.4 * (1.0 - d) * d - 4.0 * d - 0.4 * (1.0 - d).powi(2)
        };
        let steps = 1_000_000;
        let mut last_ok = 0.0;
        for k in 0..steps {
            let d = k as f64 / steps as f64;
            if poly(d) >= 0.0 {
                last_ok = d;
            }
        }
        assert!((star - last_ok).abs() <= 1.0 / steps as f64, "{star} vs {last_ok}");
        // closed form: 1.2 u^2 + 3.6 u - 4 = 0 with u = 1 - d
        let u = (-3.6 + (3.6f64 * 3.6 + 4.0 * 1.2 * 4.0).sqrt()) / 2.4;
        assert!((star - (1.0 - u)).abs() < 1e-12);
    }

    #[test]
    fn configuration_bounds_follow_removals() {
        let mut c = Configuration::from_sites([-3, 0, 4, 4]);
        assert_eq!(c.len(), 3);
        assert_eq!(c.bounds(), Some((-3, 4)));
        c.remove(4);
        assert_eq!(c.bounds(), Some((-3, 0)));
        c.remove(-3);
        c.remove(0);
        assert!(c.is_empty());
        assert_eq!(c.bounds(), None);
        assert_eq!(Configuration::from_sites([2, -1]).to_string(), "{-1, 2}");
    }

    #[test]
    fn params_validation() {
        assert!(ModelParams::new(1.0, 0.7, 0.9, 2, 3.0).is_ok());
        assert!(ModelParams::new(0.0, 0.7, 0.9, 2, 3.0).is_ok());
        assert!(ModelParams::new(-1.0, 0.7, 0.9, 2, 3.0).is_err());
        assert!(ModelParams::new(1.0, 0.9, 0.7, 2, 3.0).is_err());
        assert!(ModelParams::new(1.0, 0.7, 0.9, 0, 3.0).is_err());
        assert!(ModelParams::new(1.0, 0.7, 0.9, 2, 0.0).is_err());
        let m = ModelParams::new(1.0, 0.6, 0.9, 2, 3.0).unwrap();
        assert!(m.check_large_density_regime().is_err());
    }

    proptest! {
        #[test]
        fn f_monotone_in_densities(x in 1u32..12, p in 0.01f64..0.98, dq in 0.005f64..0.5, h in 1e-4f64..0.01) {
            let q = (p + dq).min(0.95);
            prop_assume!(q > p + 1e-6);
            let base = f_sensitivity(x, p, q).unwrap();
            prop_assert!(base > 0.0);
            if q + h < 1.0 {
                prop_assert!(f_sensitivity(x, p, q + h).unwrap() > base);
            }
            if p - h > 0.0 {
                prop_assert!(f_sensitivity(x, p - h, q).unwrap() > base);
            }
        }

        #[test]
        fn sign_of_f2_minus_f1(p in 0.01f64..0.98, dq in 0.001f64..0.9) {
            let q = p + dq;
            prop_assume!(q < 0.999);
            let d = f_sensitivity(2, p, q).unwrap() - f_sensitivity(1, p, q).unwrap();
            let s = 1.0 - p - q;
            prop_assume!(s.abs() > 1e-9);
            prop_assert_eq!(d > 0.0, s > 0.0);
        }

        #[test]
        fn f_vanishes_at_infinity(p in 0.05f64..0.9, dq in 0.01f64..0.09) {
            let q = p + dq;
            let vals: Vec<f64> = (0..2000u32).map(|x| f_unchecked(x, p, q)).collect();
            prop_assert!(vals[1999] < 1e-40);
            let argmax = vals.iter().enumerate().fold(0, |b, (i, v)| if *v > vals[b] { i } else { b });
            prop_assert!(argmax >= 1 && argmax < 2000);
        }

        #[test]
        fn imp_margin_decreasing(eps in 0.01f64..0.66, d1 in 0.0f64..0.99, d2 in 0.0f64..0.99) {
            prop_assume!((d1 - d2).abs() > 1e-9);
            let (a, b) = if d1 < d2 { (d1, d2) } else { (d2, d1) };
            prop_assert!(imp_margin(eps, a).unwrap() > imp_margin(eps, b).unwrap());
        }

        #[test]
        fn configuration_is_a_set(sites in proptest::collection::vec(-50i64..50, 0..60)) {
            let c = Configuration::from_sites(sites.iter().copied());
            let mut uniq = sites.clone();
            uniq.sort_unstable();
            uniq.dedup();
            prop_assert_eq!(c.len(), uniq.len());
            prop_assert_eq!(c.sorted(), uniq.clone());
            prop_assert_eq!(c.bounds(), uniq.first().map(|lo| (*lo, *uniq.last().unwrap())));
        }
    }
}
