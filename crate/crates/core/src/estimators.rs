//! Monte Carlo estimators of the sensitivity, its variation in the
//! infection rate, the survival probability and the conditional occupation
//! probabilities of the dual process.
//!
//! Every estimator is a deterministic function of `(seed, n, parameters)`:
//! replica `k` draws all of its randomness from `ReplicaStream::new(seed, k)`.

use std::time::Instant;

use crate::error::{invalid, Error, Result};
use crate::exec::{map_reduce, Accumulator, Execution};
use crate::harris::{window_draw, Backend, Rates, Simulator};
use crate::lattice::{check_densities, check_horizon, check_rate, f_unchecked, Configuration, ModelParams, WindowLambdaR};
use crate::rng::ReplicaStream;
use crate::stats::{chi_square_2x2, Moments, Z95};

/// Replica budget and execution policy shared by all estimators.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunConfig {
    pub seed: u64,
    pub n: u64,
    pub exec: Execution,
    pub backend: Backend,
}

impl RunConfig {
    pub fn new(seed: u64, n: u64) -> Self {
        RunConfig {
            seed,
            n,
            exec: Execution::default(),
            backend: Backend::default(),
        }
    }

    pub fn with_exec(mut self, exec: Execution) -> Self {
        self.exec = exec;
        self
    }

    pub fn with_backend(mut self, backend: Backend) -> Self {
        self.backend = backend;
        self
    }

    fn check(&self) -> Result<()> {
        if self.n == 0 {
            return Err(invalid("n", "at least one replica is required"));
        }
        Ok(())
    }
}

/// Monte Carlo mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimateWithCI {
    pub mean: f64,
    pub stderr: f64,
    pub n: u64,
    pub seed: u64,
    pub wall_time: f64,
}

/// Outcome of a two-sided sign test at the 95% level.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sign {
    Positive,
    Negative,
    Inconclusive,
}

impl EstimateWithCI {
    fn from_moments(m: &Moments, seed: u64, started: Instant) -> Self {
        EstimateWithCI {
            mean: m.mean,
            stderr: m.stderr(),
            n: m.n,
            seed,
            wall_time: started.elapsed().as_secs_f64(),
        }
    }

    /// Normal-approximation 95% interval.
    pub fn ci95(&self) -> (f64, f64) {
        (self.mean - Z95 * self.stderr, self.mean + Z95 * self.stderr)
    }

    pub fn sign(&self) -> Sign {
        let (lo, hi) = self.ci95();
        if lo > 0.0 {
            Sign::Positive
        } else if hi < 0.0 {
            Sign::Negative
        } else {
            Sign::Inconclusive
        }
    }

    /// `|a - b| <= k * sqrt(se_a^2 + se_b^2)`.
    pub fn agrees_with(&self, other: &EstimateWithCI, k: f64) -> bool {
        (self.mean - other.mean).abs() <= k * self.stderr.hypot(other.stderr)
    }

    /// `|a - value| <= k * se_a`.
    pub fn within(&self, value: f64, k: f64) -> bool {
        (self.mean - value).abs() <= k * self.stderr
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EstimatorKind {
    /// Average of `f(|dual ∩ window|)` over dual runs from `{0}`.
    Dual,
    /// Disagreement frequency at the origin under the monotone coupling of
    /// the two Bernoulli initializations.
    Direct,
}

impl EstimatorKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            EstimatorKind::Dual => "dual",
            EstimatorKind::Direct => "direct",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SensitivityPoint {
    pub params: ModelParams,
    pub estimate: EstimateWithCI,
    pub kind: EstimatorKind,
}

/// `(p, q, r, t)` without the infection rate, for estimators that compare
/// several rates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WindowSetup {
    pub p: f64,
    pub q: f64,
    pub r: i64,
    pub t: f64,
}

impl WindowSetup {
    pub fn new(p: f64, q: f64, r: i64, t: f64) -> Result<Self> {
        let m = ModelParams::new(0.0, p, q, r, t)?;
        Ok(WindowSetup { p: m.p, q: m.q, r: m.r, t: m.t })
    }

    pub fn with_lambda(&self, lambda: f64) -> Result<ModelParams> {
        ModelParams::new(lambda, self.p, self.q, self.r, self.t)
    }
}

impl From<ModelParams> for WindowSetup {
    fn from(m: ModelParams) -> Self {
        WindowSetup { p: m.p, q: m.q, r: m.r, t: m.t }
    }
}

impl Accumulator for [u64; 4] {
    fn merge(&mut self, o: Self) {
        for (a, b) in self.iter_mut().zip(o) {
            *a += b;
        }
    }
}

fn workspace(backend: Backend) -> impl Fn() -> Simulator + Sync {
    move || Simulator::new(backend)
}

const ORIGIN: [i64; 1] = [0];

/// Sensitivity through the dual process started from the origin.
pub fn sensitivity_dual(params: &ModelParams, cfg: &RunConfig) -> Result<SensitivityPoint> {
    cfg.check()?;
    let started = Instant::now();
    let rates = Rates::single(params.lambda)?;
    let [a, b] = params.window().sites();
    let (p, q, t, seed) = (params.p, params.q, params.t, cfg.seed);
    let m = map_reduce(cfg.n, cfg.exec, workspace(cfg.backend), Moments::default, |sim, acc, k| {
        sim.run(ORIGIN, ORIGIN, rates, t, &ReplicaStream::new(seed, k))
            .expect("validated input");
        let hits = sim.upper_at(a) as u32 + sim.upper_at(b) as u32;
        acc.push(f_unchecked(hits, p, q));
    });
    Ok(SensitivityPoint {
        params: *params,
        estimate: EstimateWithCI::from_moments(&m, seed, started),
        kind: EstimatorKind::Dual,
    })
}

/// Sensitivity as the frequency of `{lower(0) = 0, upper(0) = 1}` for the
/// monotone coupling started from the maximal coupling of the window
/// initializations.
pub fn sensitivity_direct(params: &ModelParams, cfg: &RunConfig) -> Result<SensitivityPoint> {
    cfg.check()?;
    let started = Instant::now();
    let rates = Rates::single(params.lambda)?;
    let sites = params.window().sites();
    let (p, q, t, seed) = (params.p, params.q, params.t, cfg.seed);
    let m = map_reduce(cfg.n, cfg.exec, workspace(cfg.backend), Moments::default, |sim, acc, k| {
        let stream = ReplicaStream::new(seed, k);
        let mut lower = [None; 2];
        let mut upper = [None; 2];
        for (slot, &site) in sites.iter().enumerate() {
            let (l, u) = window_draw(p, q, site, &stream);
            lower[slot] = l.then_some(site);
            upper[slot] = u.then_some(site);
        }
        sim.run(lower.into_iter().flatten(), upper.into_iter().flatten(), rates, t, &stream)
            .expect("validated input");
        let split = !sim.lower_at(0) && sim.upper_at(0);
        acc.push(split as u8 as f64);
    });
    Ok(SensitivityPoint {
        params: *params,
        estimate: EstimateWithCI::from_moments(&m, seed, started),
        kind: EstimatorKind::Direct,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DeltaMode {
    /// Both rates evaluated on one coupled pair per replica.
    #[default]
    Coupled,
    /// Independent dual runs for the two rates; kept for variance
    /// comparisons.
    Independent,
}

/// `S(lambda2, t) - S(lambda1, t)` for `lambda1 < lambda2`.
pub fn delta_sensitivity(
    lambda1: f64,
    lambda2: f64,
    setup: &WindowSetup,
    cfg: &RunConfig,
    mode: DeltaMode,
) -> Result<EstimateWithCI> {
    cfg.check()?;
    check_rate("lambda1", lambda1)?;
    check_rate("lambda2", lambda2)?;
    if lambda1 >= lambda2 {
        return Err(invalid(
            "lambda2",
            format!("need lambda1 < lambda2, got {lambda1} >= {lambda2}"),
        ));
    }
    check_densities(setup.p, setup.q)?;
    let started = Instant::now();
    let [a, b] = WindowLambdaR::new(setup.r)?.sites();
    let (p, q, t, seed, n) = (setup.p, setup.q, setup.t, cfg.seed, cfg.n);
    let m = match mode {
        DeltaMode::Coupled => {
            let rates = Rates::coupled(lambda1, lambda2)?;
            map_reduce(n, cfg.exec, workspace(cfg.backend), Moments::default, |sim, acc, k| {
                sim.run(ORIGIN, ORIGIN, rates, t, &ReplicaStream::new(seed, k))
                    .expect("validated input");
                let hi = sim.upper_at(a) as u32 + sim.upper_at(b) as u32;
                let lo = sim.lower_at(a) as u32 + sim.lower_at(b) as u32;
                acc.push(f_unchecked(hi, p, q) - f_unchecked(lo, p, q));
            })
        }
        DeltaMode::Independent => {
            let r1 = Rates::single(lambda1)?;
            let r2 = Rates::single(lambda2)?;
            map_reduce(n, cfg.exec, workspace(cfg.backend), Moments::default, |sim, acc, k| {
                sim.run(ORIGIN, ORIGIN, r2, t, &ReplicaStream::new(seed, k))
                    .expect("validated input");
                let hi = sim.upper_at(a) as u32 + sim.upper_at(b) as u32;
                sim.run(ORIGIN, ORIGIN, r1, t, &ReplicaStream::new(seed, n + k))
                    .expect("validated input");
                let lo = sim.upper_at(a) as u32 + sim.upper_at(b) as u32;
                acc.push(f_unchecked(hi, p, q) - f_unchecked(lo, p, q));
            })
        }
    };
    Ok(EstimateWithCI::from_moments(&m, seed, started))
}

/// `P(site ∈ eta_t)` for the process started from `initial`.
pub fn occupation_estimate(
    lambda: f64,
    initial: &Configuration,
    site: i64,
    t: f64,
    cfg: &RunConfig,
) -> Result<EstimateWithCI> {
    cfg.check()?;
    check_horizon(t)?;
    let started = Instant::now();
    let rates = Rates::single(lambda)?;
    let sites = initial.sorted();
    let seed = cfg.seed;
    let m = map_reduce(cfg.n, cfg.exec, workspace(cfg.backend), Moments::default, |sim, acc, k| {
        sim.run(sites.iter().copied(), sites.iter().copied(), rates, t, &ReplicaStream::new(seed, k))
            .expect("validated input");
        acc.push(sim.upper_at(site) as u8 as f64);
    });
    Ok(EstimateWithCI::from_moments(&m, seed, started))
}

/// Survival to a finite horizon, the proxy for the probability of surviving
/// forever. It over-estimates the latter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurvivalEstimate {
    pub lambda: f64,
    pub horizon: f64,
    pub estimate: EstimateWithCI,
}

/// `P(process from {0} is nonempty at t_max)`; replicas stop at extinction.
pub fn survival_probability(lambda: f64, t_max: f64, cfg: &RunConfig) -> Result<SurvivalEstimate> {
    let mut out = survival_profile(lambda, &[t_max], cfg)?;
    Ok(out.remove(0))
}

/// Survival probabilities at several horizons from the same replicas.
pub fn survival_profile(lambda: f64, horizons: &[f64], cfg: &RunConfig) -> Result<Vec<SurvivalEstimate>> {
    cfg.check()?;
    if horizons.is_empty() || horizons.iter().any(|h| !(*h > 0.0 && h.is_finite())) {
        return Err(invalid("t_max", "horizons must be positive and finite"));
    }
    let started = Instant::now();
    let rates = Rates::single(lambda)?;
    let t_end = horizons.iter().copied().fold(0.0, f64::max);
    let seed = cfg.seed;
    let hs = horizons.to_vec();
    let acc = map_reduce(
        cfg.n,
        cfg.exec,
        workspace(cfg.backend),
        || vec![Moments::default(); hs.len()],
        |sim, acc: &mut Vec<Moments>, k| {
            let s = sim
                .run(ORIGIN, ORIGIN, rates, t_end, &ReplicaStream::new(seed, k))
                .expect("validated input");
            for (m, &h) in acc.iter_mut().zip(&hs) {
                let alive = s.extinct_at.is_none_or(|e| e > h);
                m.push(alive as u8 as f64);
            }
        },
    );
    Ok(horizons
        .iter()
        .zip(acc)
        .map(|(&h, m)| SurvivalEstimate {
            lambda,
            horizon: h,
            estimate: EstimateWithCI::from_moments(&m, seed, started),
        })
        .collect())
}

impl Accumulator for Vec<Moments> {
    fn merge(&mut self, o: Self) {
        for (a, b) in self.iter_mut().zip(o) {
            a.merge(b);
        }
    }
}

/// Finite-time conditional occupation of `r` given that `-r` is empty, for
/// the process started from the origin.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConditionalOccupation {
    /// `P(eta_t(r) = 1 | eta_t(-r) = 0)`.
    pub occupied: EstimateWithCI,
    /// `P(eta_t(r) = 0 | eta_t(-r) = 0)`; `occupied.mean + vacant.mean = 1`.
    pub vacant: EstimateWithCI,
    /// Replicas satisfying the conditioning event.
    pub conditioned: u64,
    pub replicas: u64,
}

pub fn conditional_occupation(lambda: f64, r: i64, t: f64, cfg: &RunConfig) -> Result<ConditionalOccupation> {
    cfg.check()?;
    let started = Instant::now();
    let [minus, plus] = WindowLambdaR::new(r)?.sites();
    if !(t > 0.0 && t.is_finite()) {
        return Err(invalid("t", format!("horizon must be positive, got {t}")));
    }
    let rates = Rates::single(lambda)?;
    let seed = cfg.seed;
    // [conditioned, occupied, -, -]
    let counts = map_reduce(cfg.n, cfg.exec, workspace(cfg.backend), || [0u64; 4], |sim, acc, k| {
        sim.run(ORIGIN, ORIGIN, rates, t, &ReplicaStream::new(seed, k))
            .expect("validated input");
        if !sim.upper_at(minus) {
            acc[0] += 1;
            acc[1] += sim.upper_at(plus) as u64;
        }
    });
    let (m, a) = (counts[0], counts[1]);
    if m == 0 {
        return Err(Error::DegenerateConditioning {
            event: format!("eta_t({minus}) = 0"),
            replicas: cfg.n,
        });
    }
    let p1 = a as f64 / m as f64;
    let se = if m > 1 {
        (p1 * (1.0 - p1) / (m - 1) as f64).sqrt()
    } else {
        0.0
    };
    let wall_time = started.elapsed().as_secs_f64();
    let est = |mean| EstimateWithCI { mean, stderr: se, n: m, seed, wall_time };
    Ok(ConditionalOccupation {
        occupied: est(p1),
        vacant: est(1.0 - p1),
        conditioned: m,
        replicas: cfg.n,
    })
}

/// Contingency table of `{lower_t(r) = 1}` against `{upper_t(-r) = 1}` on the
/// event `{lower_t(-r) = 0}`, for the rate coupling started from the origin.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IndependenceTest {
    /// `table[lower(r)][upper(-r)]`.
    pub table: [[u64; 2]; 2],
    pub conditioned: u64,
    pub replicas: u64,
    pub chi_square: f64,
    pub p_value: f64,
}

impl IndependenceTest {
    pub fn passes(&self, significance: f64) -> bool {
        self.p_value >= significance
    }
}

pub fn conditional_independence(
    lambda1: f64,
    lambda2: f64,
    r: i64,
    t: f64,
    cfg: &RunConfig,
) -> Result<IndependenceTest> {
    cfg.check()?;
    let [minus, plus] = WindowLambdaR::new(r)?.sites();
    let rates = Rates::coupled(lambda1, lambda2)?;
    let seed = cfg.seed;
    let cells = map_reduce(cfg.n, cfg.exec, workspace(cfg.backend), || [0u64; 4], |sim, acc, k| {
        sim.run(ORIGIN, ORIGIN, rates, t, &ReplicaStream::new(seed, k))
            .expect("validated input");
        if !sim.lower_at(minus) {
            let row = sim.lower_at(plus) as usize;
            let col = sim.upper_at(minus) as usize;
            acc[2 * row + col] += 1;
        }
    });
    let table = [[cells[0], cells[1]], [cells[2], cells[3]]];
    let conditioned = cells.iter().sum();
    if conditioned == 0 {
        return Err(Error::DegenerateConditioning {
            event: format!("lower_t({minus}) = 0"),
            replicas: cfg.n,
        });
    }
    let (chi_square, p_value) = chi_square_2x2(table);
    Ok(IndependenceTest {
        table,
        conditioned,
        replicas: cfg.n,
        chi_square,
        p_value,
    })
}
