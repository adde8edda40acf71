//! Localization of the sensitivity peak and of the survival transition.

use std::io::Write;

use contact_core::{
    delta_sensitivity, survival_profile, DeltaMode, EstimateWithCI, RunConfig, Sign, WindowSetup,
};

use crate::error::{invalid, CliError, Result};
use crate::spec::LocateSpec;
use crate::sweep::{build_id, engine_name, sentinel, ResultRow, CSV_HEADER};

/// One evaluated pair `Delta(lambda, lambda + step)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SignCall {
    pub lambda1: f64,
    pub lambda2: f64,
    pub estimate: EstimateWithCI,
    pub sign: Sign,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    /// Every evaluation, in the order performed.
    pub calls: Vec<SignCall>,
    /// Interval containing the maximiser of the sensitivity, or `None` when
    /// no sign change was detected.
    pub interval: Option<(f64, f64)>,
}

impl Transition {
    pub fn describe(&self) -> String {
        match self.interval {
            Some((a, b)) => format!("sensitivity peak in [{a}, {b}]"),
            None => "no sign change detected".to_string(),
        }
    }
}

fn call(l1: f64, step: f64, setup: &WindowSetup, cfg: &RunConfig) -> Result<SignCall> {
    let l2 = l1 + step;
    let estimate = delta_sensitivity(l1, l2, setup, cfg, DeltaMode::Coupled)?;
    Ok(SignCall {
        lambda1: l1,
        lambda2: l2,
        estimate,
        sign: estimate.sign(),
    })
}

/// Bisection on the sign of `g(l) = Delta(l, l + step)` over
/// `l in [a, b - step]`.
///
/// Needs `g(a) > 0` and `g(b - step) < 0` at 95% confidence. The left ends
/// are bisected until they are `tol` apart or a midpoint is inconclusive;
/// the sensitivity then peaks inside `[lo, hi + step]`.
pub fn locate_transition(
    setup: &WindowSetup,
    range: (f64, f64),
    step: f64,
    tol: f64,
    cfg: &RunConfig,
) -> Result<Transition> {
    let (a, b) = range;
    if !(a < b) {
        return Err(invalid(format!("degenerate range [{a}, {b}]")));
    }
    if !(step > 0.0 && step < b - a) {
        return Err(invalid(format!("pair spacing {step} must lie in (0, {})", b - a)));
    }
    if !(tol > 0.0) {
        return Err(invalid("tolerance must be positive"));
    }
    let mut calls = vec![call(a, step, setup, cfg)?];
    let last = b - step;
    calls.push(call(last, step, setup, cfg)?);
    if calls[0].sign != Sign::Positive || calls[1].sign != Sign::Negative {
        return Ok(Transition { calls, interval: None });
    }
    let (mut lo, mut hi) = (a, last);
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        let c = call(mid, step, setup, cfg)?;
        calls.push(c);
        match c.sign {
            Sign::Positive => lo = mid,
            Sign::Negative => hi = mid,
            Sign::Inconclusive => break,
        }
    }
    Ok(Transition {
        calls,
        interval: Some((lo, hi + step)),
    })
}

/// Runs [`locate_transition`] and writes one CSV row per evaluated pair, in
/// evaluation order, followed by the completion sentinel.
pub fn run_locate(spec: &LocateSpec, sink: &mut dyn Write) -> Result<Transition> {
    let io = |e| CliError::Io {
        path: spec.out.clone().unwrap_or_else(|| "<stdout>".into()),
        source: e,
    };
    let tr = locate_transition(&spec.setup, spec.range, spec.step, spec.tol, &spec.cfg)?;
    let engine = engine_name(spec.cfg.backend);
    writeln!(sink, "{CSV_HEADER}").map_err(io)?;
    for c in &tr.calls {
        let row = ResultRow {
            mode: "locate-peak".to_string(),
            lambda1: c.lambda1,
            lambda2: Some(c.lambda2),
            p: spec.setup.p,
            q: spec.setup.q,
            r: spec.setup.r,
            t: spec.setup.t,
            n: spec.cfg.n,
            mean: c.estimate.mean,
            stderr: c.estimate.stderr,
            seed: spec.cfg.seed,
            estimator: format!("coupled:{engine}"),
            wall_s: spec.wall_time.then_some(c.estimate.wall_time),
            build: build_id(),
        };
        writeln!(sink, "{}", row.to_csv()).map_err(io)?;
    }
    writeln!(sink, "{}", sentinel(tr.calls.len())).map_err(io)?;
    sink.flush().map_err(io)?;
    Ok(tr)
}

/// Decay exponent of survival at the critical point of 1+1 dimensional
/// directed percolation, `P(survive to t) ~ t^-delta`.
pub const DP_SURVIVAL_EXPONENT: f64 = 0.1595;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    Subcritical,
    Supercritical,
    Unresolved,
}

/// Survival to `T` and `2T` at one rate, from the same replicas.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanPoint {
    pub lambda: f64,
    pub survival: f64,
    pub survival_2t: f64,
    /// `log2(s(T) / s(2T))` with its 95% interval.
    pub local_exponent: f64,
    pub exponent_ci: (f64, f64),
    pub phase: Phase,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CriticalBracket {
    pub points: Vec<ScanPoint>,
    /// Largest subcritical and smallest supercritical rate of the scan.
    pub bracket: Option<(f64, f64)>,
}

fn scan_point(lambda: f64, horizon: f64, cfg: &RunConfig) -> Result<ScanPoint> {
    let prof = survival_profile(lambda, &[horizon, 2.0 * horizon], cfg)?;
    let (s1, s2) = (prof[0].estimate.mean, prof[1].estimate.mean);
    let alive = (s1 * cfg.n as f64).round();
    let exponent = |pi: f64| -(1.0 - pi.clamp(0.0, 1.0)).log2();
    let (local, ci) = if alive == 0.0 {
        (f64::INFINITY, (f64::INFINITY, f64::INFINITY))
    } else {
        // fraction of the survivors at T that die before 2T
        let pi = 1.0 - s2 / s1;
        let half = 1.96 * (pi * (1.0 - pi) / alive).sqrt();
        (exponent(pi), (exponent(pi - half), exponent(pi + half)))
    };
    let phase = if ci.0 > DP_SURVIVAL_EXPONENT {
        Phase::Subcritical
    } else if ci.1 < DP_SURVIVAL_EXPONENT {
        Phase::Supercritical
    } else {
        Phase::Unresolved
    };
    Ok(ScanPoint {
        lambda,
        survival: s1,
        survival_2t: s2,
        local_exponent: local,
        exponent_ci: ci,
        phase,
    })
}

/// Classifies each rate by comparing the local survival exponent between
/// `T` and `2T` with the critical one, and brackets the transition.
pub fn critical_bracket(lambdas: &[f64], horizon: f64, cfg: &RunConfig) -> Result<CriticalBracket> {
    if lambdas.is_empty() {
        return Err(invalid("the survival scan needs at least one rate"));
    }
    let points = lambdas
        .iter()
        .map(|&l| scan_point(l, horizon, cfg))
        .collect::<Result<Vec<_>>>()?;
    let sub = points
        .iter()
        .filter(|p| p.phase == Phase::Subcritical)
        .map(|p| p.lambda)
        .fold(None, |m: Option<f64>, l| Some(m.map_or(l, |m| m.max(l))));
    let sup = points
        .iter()
        .filter(|p| p.phase == Phase::Supercritical)
        .map(|p| p.lambda)
        .fold(None, |m: Option<f64>, l| Some(m.map_or(l, |m| m.min(l))));
    let bracket = match (sub, sup) {
        (Some(a), Some(b)) if a < b => Some((a, b)),
        _ => None,
    };
    Ok(CriticalBracket { points, bracket })
}

#[cfg(test)]
mod tests {
    use super::*;
    use contact_core::Execution;

    fn cfg(n: u64) -> RunConfig {
        RunConfig::new(5, n).with_exec(Execution::Sequential)
    }

    #[test]
    fn subcritical_range_has_no_sign_change() {
        let setup = WindowSetup::new(0.7, 0.9, 5, 30.0).unwrap();
        let t = locate_transition(&setup, (0.2, 1.0), 0.4, 0.1, &cfg(2000)).unwrap();
        assert_eq!(t.interval, None);
        assert_eq!(t.describe(), "no sign change detected");
    }

    #[test]
    fn rejects_degenerate_ranges() {
        let setup = WindowSetup::new(0.7, 0.9, 5, 30.0).unwrap();
        assert!(locate_transition(&setup, (1.0, 1.0), 0.1, 0.1, &cfg(10)).is_err());
        assert!(locate_transition(&setup, (1.0, 2.0), 1.0, 0.1, &cfg(10)).is_err());
    }

    #[test]
    fn pure_death_scan_is_subcritical() {
        let b = critical_bracket(&[0.0, 0.2], 3.0, &cfg(4000)).unwrap();
        assert!(b.points.iter().all(|p| p.phase == Phase::Subcritical));
        assert_eq!(b.bracket, None);
        // exact local exponent of pure death over [3, 6] is 3 / ln 2
        let e = b.points[0].local_exponent;
        assert!((e - 3.0 / std::f64::consts::LN_2).abs() < 1.5, "{e}");
    }
}
