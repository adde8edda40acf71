//! Event-driven simulation of the contact process from finite initial sets.
//!
//! Every run evolves an ordered pair `(lower, upper)` of configurations
//! under shared randomness. Each site carries five clocks:
//!
//! | kind                | rate          | drives          |
//! |---------------------|---------------|-----------------|
//! | `Death`             | 1             | both            |
//! | `InfectRight`/`Left`| `lambda1`     | both            |
//! | `ExtraRight`/`Left` | `lambda2 - lambda1` | upper only |
//!
//! An infection clock at `i` pointing to `j` sets `j` to 1 in a marginal
//! whenever `i` is infected in that marginal; otherwise the ring is a no-op.
//! With `lambda1 = lambda2` the extra clocks never ring and the pair is two
//! copies of the single-rate process, which is how single runs are done.
//!
//! Two backends realize this construction:
//!
//! * [`Backend::Graphical`] materializes the per-site clock streams lazily
//!   from counter-based keys `(seed, replica, site, kind)` and schedules
//!   them with a priority queue. Re-running with the same replica stream
//!   reuses the same Poisson clocks, so runs from different initial sets
//!   are coupled pathwise.
//! * [`Backend::Jump`] simulates the induced Markov jump process on pairs
//!   directly, drawing only transitions that change the state. It has the
//!   same joint law as the graphical construction and is several times
//!   faster in dense supercritical regimes.

mod graphical;
mod jump;

use crate::error::{invalid, Error, Result};
use crate::lattice::{check_horizon, check_rate, Configuration, WindowLambdaR};
use crate::rng::{tag, ReplicaStream};

pub use graphical::GraphicalEngine;
pub use jump::JumpEngine;

/// The five clocks attached to every site.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[repr(u8)]
pub enum ClockKind {
    Death = 0,
    InfectRight = 1,
    InfectLeft = 2,
    ExtraRight = 3,
    ExtraLeft = 4,
}

impl ClockKind {
    pub const ALL: [ClockKind; 5] = [
        ClockKind::Death,
        ClockKind::InfectRight,
        ClockKind::InfectLeft,
        ClockKind::ExtraRight,
        ClockKind::ExtraLeft,
    ];

    pub fn rate(self, rates: Rates) -> f64 {
        match self {
            ClockKind::Death => 1.0,
            ClockKind::InfectRight | ClockKind::InfectLeft => rates.lambda1,
            ClockKind::ExtraRight | ClockKind::ExtraLeft => rates.lambda2 - rates.lambda1,
        }
    }

    /// Offset of the target site, `None` for the death clock.
    pub fn offset(self) -> Option<i64> {
        match self {
            ClockKind::Death => None,
            ClockKind::InfectRight | ClockKind::ExtraRight => Some(1),
            ClockKind::InfectLeft | ClockKind::ExtraLeft => Some(-1),
        }
    }

    pub fn drives_lower(self) -> bool {
        matches!(
            self,
            ClockKind::Death | ClockKind::InfectRight | ClockKind::InfectLeft
        )
    }
}

/// Infection rates of the lower and upper marginal, `0 <= lambda1 <= lambda2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rates {
    lambda1: f64,
    lambda2: f64,
}

impl Rates {
    pub fn coupled(lambda1: f64, lambda2: f64) -> Result<Self> {
        check_rate("lambda1", lambda1)?;
        check_rate("lambda2", lambda2)?;
        if lambda1 > lambda2 {
            return Err(invalid(
                "lambda2",
                format!("coupling needs lambda1 <= lambda2, got {lambda1} > {lambda2}"),
            ));
        }
        Ok(Rates { lambda1, lambda2 })
    }

    pub fn single(lambda: f64) -> Result<Self> {
        Self::coupled(lambda, lambda)
    }

    pub fn lambda1(&self) -> f64 {
        self.lambda1
    }

    pub fn lambda2(&self) -> f64 {
        self.lambda2
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Backend {
    /// Lazily generated per-site Poisson clocks with priority-queue scheduling.
    Graphical,
    /// Rejection-free jump chain on the coupled pair.
    #[default]
    Jump,
}

impl std::str::FromStr for Backend {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "graphical" => Ok(Backend::Graphical),
            "jump" => Ok(Backend::Jump),
            other => Err(invalid("engine", format!("unknown engine `{other}`"))),
        }
    }
}

/// Outcome of one coupled run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunSummary {
    /// Time the state refers to: the horizon, or the extinction time of the
    /// upper marginal if that came first.
    pub time: f64,
    pub extinct_at: Option<f64>,
    /// Clock rings processed (graphical) or transitions applied (jump).
    pub events: u64,
}

/// Paired configurations evolved under shared randomness, with
/// `lower ⊆ upper` at every event.
#[derive(Debug, Clone, PartialEq)]
pub struct CoupledTrajectory {
    pub lower: Configuration,
    pub upper: Configuration,
    pub horizon: f64,
    pub time: f64,
    pub events: u64,
}

pub(crate) trait CoupledEngine {
    /// `lower` and `upper` must be sorted, deduplicated and nested.
    fn run_sorted(
        &mut self,
        lower: &[i64],
        upper: &[i64],
        rates: Rates,
        t: f64,
        stream: &ReplicaStream,
    ) -> RunSummary;
    fn lower_at(&self, site: i64) -> bool;
    fn upper_at(&self, site: i64) -> bool;
    fn lower_config(&self) -> Configuration;
    fn upper_config(&self) -> Configuration;
}

enum EngineImpl {
    Graphical(GraphicalEngine),
    Jump(JumpEngine),
}

/// Reusable simulation workspace for one thread.
pub struct Simulator {
    engine: EngineImpl,
    lower_buf: Vec<i64>,
    upper_buf: Vec<i64>,
}

impl Simulator {
    pub fn new(backend: Backend) -> Self {
        let engine = match backend {
            Backend::Graphical => EngineImpl::Graphical(GraphicalEngine::new()),
            Backend::Jump => EngineImpl::Jump(JumpEngine::new()),
        };
        Simulator {
            engine,
            lower_buf: Vec::new(),
            upper_buf: Vec::new(),
        }
    }

    pub fn backend(&self) -> Backend {
        match self.engine {
            EngineImpl::Graphical(_) => Backend::Graphical,
            EngineImpl::Jump(_) => Backend::Jump,
        }
    }

    fn inner(&self) -> &dyn CoupledEngine {
        match &self.engine {
            EngineImpl::Graphical(e) => e,
            EngineImpl::Jump(e) => e,
        }
    }

    /// Runs the pair from `lower ⊆ upper` up to time `t`. After the call the
    /// final state can be queried with [`Self::lower_at`] and friends.
    pub fn run<L, U>(
        &mut self,
        lower: L,
        upper: U,
        rates: Rates,
        t: f64,
        stream: &ReplicaStream,
    ) -> Result<RunSummary>
    where
        L: IntoIterator<Item = i64>,
        U: IntoIterator<Item = i64>,
    {
        check_horizon(t)?;
        self.lower_buf.clear();
        self.lower_buf.extend(lower);
        self.lower_buf.sort_unstable();
        self.lower_buf.dedup();
        self.upper_buf.clear();
        self.upper_buf.extend(upper);
        self.upper_buf.sort_unstable();
        self.upper_buf.dedup();
        if let Some(&site) = self
            .lower_buf
            .iter()
            .find(|s| self.upper_buf.binary_search(s).is_err())
        {
            return Err(Error::NotNested { site });
        }
        let (l, u) = (&self.lower_buf, &self.upper_buf);
        Ok(match &mut self.engine {
            EngineImpl::Graphical(e) => e.run_sorted(l, u, rates, t, stream),
            EngineImpl::Jump(e) => e.run_sorted(l, u, rates, t, stream),
        })
    }

    /// Single-rate run from `initial` (both marginals identical).
    pub fn run_from<I: IntoIterator<Item = i64>>(
        &mut self,
        initial: I,
        lambda: f64,
        t: f64,
        stream: &ReplicaStream,
    ) -> Result<RunSummary> {
        let sites: Vec<i64> = initial.into_iter().collect();
        self.run(sites.clone(), sites, Rates::single(lambda)?, t, stream)
    }

    pub fn lower_at(&self, site: i64) -> bool {
        self.inner().lower_at(site)
    }

    pub fn upper_at(&self, site: i64) -> bool {
        self.inner().upper_at(site)
    }

    pub fn lower_config(&self) -> Configuration {
        self.inner().lower_config()
    }

    pub fn upper_config(&self) -> Configuration {
        self.inner().upper_config()
    }

    pub fn single(
        &mut self,
        a: &Configuration,
        lambda: f64,
        t: f64,
        stream: &ReplicaStream,
    ) -> Result<Configuration> {
        self.run_from(a.iter(), lambda, t, stream)?;
        Ok(self.upper_config())
    }

    pub fn coupled_lambda(
        &mut self,
        a: &Configuration,
        lambda1: f64,
        lambda2: f64,
        t: f64,
        stream: &ReplicaStream,
    ) -> Result<CoupledTrajectory> {
        let rates = Rates::coupled(lambda1, lambda2)?;
        let summary = self.run(a.iter(), a.iter(), rates, t, stream)?;
        Ok(self.trajectory(t, summary))
    }

    pub fn coupled_initial(
        &mut self,
        xi_lower: &Configuration,
        xi_upper: &Configuration,
        lambda: f64,
        t: f64,
        stream: &ReplicaStream,
    ) -> Result<CoupledTrajectory> {
        let summary = self.run(xi_lower.iter(), xi_upper.iter(), Rates::single(lambda)?, t, stream)?;
        Ok(self.trajectory(t, summary))
    }

    fn trajectory(&self, horizon: f64, s: RunSummary) -> CoupledTrajectory {
        CoupledTrajectory {
            lower: self.lower_config(),
            upper: self.upper_config(),
            horizon,
            time: s.time,
            events: s.events,
        }
    }
}

/// Support of the process with rate `lambda` at time `t`, started from `a`,
/// realized on the graphical construction of `stream`.
pub fn run_single(a: &Configuration, lambda: f64, t: f64, stream: &ReplicaStream) -> Result<Configuration> {
    Simulator::new(Backend::Graphical).single(a, lambda, t, stream)
}

/// Five-clock monotone coupling of the processes with rates `lambda1 <= lambda2`.
pub fn run_coupled_lambda(
    a: &Configuration,
    lambda1: f64,
    lambda2: f64,
    t: f64,
    stream: &ReplicaStream,
) -> Result<CoupledTrajectory> {
    Simulator::new(Backend::Graphical).coupled_lambda(a, lambda1, lambda2, t, stream)
}

/// Monotone coupling of the processes started from nested sets.
pub fn run_coupled_initial(
    xi_lower: &Configuration,
    xi_upper: &Configuration,
    lambda: f64,
    t: f64,
    stream: &ReplicaStream,
) -> Result<CoupledTrajectory> {
    Simulator::new(Backend::Graphical).coupled_initial(xi_lower, xi_upper, lambda, t, stream)
}

/// Maximal coupling of product Bernoulli(p) and Bernoulli(q) on the window:
/// one uniform `U_i` per window site, `xi(i) = 1{U_i < p}` and
/// `xi'(i) = 1{U_i < q}`.
pub fn sample_bernoulli_window(
    p: f64,
    q: f64,
    window: WindowLambdaR,
    stream: &ReplicaStream,
) -> Result<(Configuration, Configuration)> {
    if !(0.0..=1.0).contains(&p) || !(0.0..=1.0).contains(&q) || p > q {
        return Err(invalid("p", format!("need 0 <= p <= q <= 1, got p = {p}, q = {q}")));
    }
    let mut lower = Configuration::new();
    let mut upper = Configuration::new();
    for site in window.sites() {
        let (l, u) = window_draw(p, q, site, stream);
        if l {
            lower.insert(site);
        }
        if u {
            upper.insert(site);
        }
    }
    Ok((lower, upper))
}

#[inline]
pub(crate) fn window_draw(p: f64, q: f64, site: i64, stream: &ReplicaStream) -> (bool, bool) {
    let u = stream.sub(tag::WINDOW).site(site).rng().uniform();
    (u < p, u < q)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn both() -> [Simulator; 2] {
        [Simulator::new(Backend::Graphical), Simulator::new(Backend::Jump)]
    }

    #[test]
    fn empty_is_absorbing() {
        for mut sim in both() {
            let out = sim
                .single(&Configuration::new(), 3.0, 10.0, &ReplicaStream::new(1, 0))
                .unwrap();
            assert!(out.is_empty());
        }
    }

    #[test]
    fn zero_horizon_returns_initial() {
        let a = Configuration::from_sites([-3, 0, 5]);
        for mut sim in both() {
            let out = sim.single(&a, 2.0, 0.0, &ReplicaStream::new(1, 0)).unwrap();
            assert_eq!(out, a);
        }
    }

    #[test]
    fn rejects_reversed_rates_and_non_nested_sets() {
        let a = Configuration::singleton(0);
        let s = ReplicaStream::new(0, 0);
        assert!(run_coupled_lambda(&a, 2.0, 1.0, 1.0, &s).is_err());
        let err = run_coupled_initial(&Configuration::from_sites([0, 3]), &a, 1.0, 1.0, &s).unwrap_err();
        assert_eq!(err, Error::NotNested { site: 3 });
        assert!(run_single(&a, 1.0, -1.0, &s).is_err());
    }

    #[test]
    fn pure_death_lifetime() {
        // P({0} alive at t) = e^{-t} when lambda = 0
        let t = 0.7;
        for mut sim in both() {
            let n = 40_000;
            let mut alive = 0;
            for k in 0..n {
                let out = sim.single(&Configuration::singleton(0), 0.0, t, &ReplicaStream::new(3, k)).unwrap();
                assert!(out.is_empty() || out == Configuration::singleton(0));
                alive += out.len();
            }
            let p = alive as f64 / n as f64;
            let e = (-t as f64).exp();
            let se = (e * (1.0 - e) / n as f64).sqrt();
            assert!((p - e).abs() < 4.0 * se, "{:?}: {p} vs {e}", sim.backend());
        }
    }

    #[test]
    fn equal_rates_give_identical_marginals() {
        for mut sim in both() {
            for k in 0..200 {
                let tr = sim
                    .coupled_lambda(&Configuration::from_sites([0, 1]), 2.5, 2.5, 4.0, &ReplicaStream::new(9, k))
                    .unwrap();
                assert_eq!(tr.lower, tr.upper);
            }
        }
    }

    #[test]
    fn identical_initial_sets_give_identical_trajectories() {
        let a = Configuration::from_sites([-2, 2]);
        for mut sim in both() {
            for k in 0..200 {
                let tr = sim.coupled_initial(&a, &a, 1.7, 3.0, &ReplicaStream::new(4, k)).unwrap();
                assert_eq!(tr.lower, tr.upper);
            }
        }
    }

    #[test]
    fn empty_lower_stays_empty() {
        let a = Configuration::from_sites([-2, 2]);
        for mut sim in both() {
            for k in 0..200 {
                let tr = sim
                    .coupled_initial(&Configuration::new(), &a, 3.0, 3.0, &ReplicaStream::new(4, k))
                    .unwrap();
                assert!(tr.lower.is_empty());
            }
        }
    }

    #[test]
    fn window_table_is_maximal_coupling() {
        let w = WindowLambdaR::new(3).unwrap();
        let n = 100_000u64;
        let (mut both11, mut c01, mut c00) = (0u64, 0u64, 0u64);
        for k in 0..n {
            let s = ReplicaStream::new(11, k);
            let (lo, hi) = sample_bernoulli_window(0.7, 0.9, w, &s).unwrap();
            assert!(lo.is_subset(&hi));
            for site in w.sites() {
                match (lo.contains(site), hi.contains(site)) {
                    (true, true) => both11 += 1,
                    (false, true) => c01 += 1,
                    (false, false) => c00 += 1,
                    (true, false) => unreachable!(),
                }
            }
        }
        let m = 2.0 * n as f64;
        for (count, p) in [(both11, 0.7), (c01, 0.2), (c00, 0.1)] {
            let se = (p * (1.0 - p) / m).sqrt();
            assert!((count as f64 / m - p).abs() < 4.0 * se, "{count} vs {p}");
        }
        let (a, b) = sample_bernoulli_window(0.5, 0.5, w, &ReplicaStream::new(1, 1)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn rate_table() {
        let r = Rates::coupled(0.5, 2.0).unwrap();
        let rates: Vec<f64> = ClockKind::ALL.iter().map(|k| k.rate(r)).collect();
        assert_eq!(rates, vec![1.0, 0.5, 0.5, 1.5, 1.5]);
        let s = Rates::single(3.0).unwrap();
        assert_eq!(ClockKind::ExtraLeft.rate(s), 0.0);
    }
}
