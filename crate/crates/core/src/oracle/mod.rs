//! Exact transient distributions of the contact process on small rings.
//!
//! Configurations of an `n`-site ring are encoded as `n`-bit integers; bit
//! `k` carries the site labelled `k - floor(n/2)`, so labels run over
//! `-floor(n/2) ..= ceil(n/2) - 1` and `0`, `-r`, `r` keep their meaning on
//! Z. Transient laws are computed by uniformization with an adaptive
//! Poisson tail cut.

pub mod fixtures;

use statrs::function::gamma::ln_gamma;

use crate::error::{invalid, Error, Result};
use crate::lattice::{check_horizon, check_rate, f_unchecked, Configuration, WindowLambdaR};

pub const MAX_SITES: usize = 14;

/// Boundary handling for the finite chain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Boundary {
    /// Periodic: the two extreme labels are neighbours.
    #[default]
    Ring,
    /// Closed segment: the end sites have a single neighbour.
    Segment,
    /// Segment whose outward infection attempts move the chain to an extra
    /// absorbing "escaped" state. The mass of that state is the probability
    /// that the process on Z has left the segment by time `t`.
    Escape,
}

/// Generator of the contact process on `n` sites, stored row-wise.
#[derive(Debug, Clone)]
pub struct RingChain {
    n: usize,
    lambda: f64,
    boundary: Boundary,
    row_ptr: Vec<usize>,
    cols: Vec<u32>,
    rates: Vec<f64>,
    /// Total exit rate of each state.
    exit: Vec<f64>,
}

impl RingChain {
    pub fn new(n: usize, lambda: f64) -> Result<Self> {
        Self::with_boundary(n, lambda, Boundary::Ring)
    }

    pub fn with_boundary(n: usize, lambda: f64, boundary: Boundary) -> Result<Self> {
        if !(2..=MAX_SITES).contains(&n) {
            return Err(Error::RingTooLarge(n));
        }
        check_rate("lambda", lambda)?;
        let states = 1usize << n;
        let total = states + (boundary == Boundary::Escape) as usize;
        let mut row_ptr = Vec::with_capacity(total + 1);
        let mut cols = Vec::with_capacity(states * n);
        let mut rates = Vec::with_capacity(states * n);
        let mut exit = vec![0.0; total];
        row_ptr.push(0);
        for s in 0..states {
            let infected = |k: usize| (s >> k) & 1 == 1;
            let mut out = 0.0;
            for k in 0..n {
                let (to, rate) = if infected(k) {
                    (s & !(1 << k), 1.0)
                } else {
                    let left = match (k, boundary) {
                        (0, Boundary::Ring) => infected(n - 1),
                        (0, _) => false,
                        _ => infected(k - 1),
                    };
                    let right = match (k + 1 == n, boundary) {
                        (true, Boundary::Ring) => infected(0),
                        (true, _) => false,
                        _ => infected(k + 1),
                    };
                    (s | (1 << k), lambda * (left as u8 + right as u8) as f64)
                };
                if rate > 0.0 {
                    cols.push(to as u32);
                    rates.push(rate);
                    out += rate;
                }
            }
            if boundary == Boundary::Escape {
                let outward = infected(0) as u8 + infected(n - 1) as u8;
                let rate = lambda * outward as f64;
                if rate > 0.0 {
                    cols.push(states as u32);
                    rates.push(rate);
                    out += rate;
                }
            }
            exit[s] = out;
            row_ptr.push(cols.len());
        }
        if boundary == Boundary::Escape {
            row_ptr.push(cols.len());
        }
        Ok(RingChain {
            n,
            lambda,
            boundary,
            row_ptr,
            cols,
            rates,
            exit,
        })
    }

    pub fn sites(&self) -> usize {
        self.n
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn boundary(&self) -> Boundary {
        self.boundary
    }

    pub fn states(&self) -> usize {
        self.exit.len()
    }

    pub fn min_label(&self) -> i64 {
        -((self.n / 2) as i64)
    }

    pub fn max_label(&self) -> i64 {
        self.n.div_ceil(2) as i64 - 1
    }

    pub fn bit_of(&self, site: i64) -> Result<usize> {
        if site < self.min_label() || site > self.max_label() {
            return Err(Error::SiteOutsideRing { site, n: self.n });
        }
        Ok((site - self.min_label()) as usize)
    }

    pub fn encode(&self, config: &Configuration) -> Result<usize> {
        config
            .iter()
            .try_fold(0usize, |acc, s| Ok(acc | (1 << self.bit_of(s)?)))
    }

    pub fn decode(&self, state: usize) -> Configuration {
        (0..self.n)
            .filter(|k| (state >> k) & 1 == 1)
            .map(|k| k as i64 + self.min_label())
            .collect()
    }

    /// Off-diagonal entries of row `s` as `(target, rate)`.
    pub fn row(&self, s: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let span = self.row_ptr[s]..self.row_ptr[s + 1];
        self.cols[span.clone()]
            .iter()
            .zip(&self.rates[span])
            .map(|(&c, &r)| (c as usize, r))
    }

    /// Diagonal entry of row `s`: minus the total exit rate.
    pub fn diagonal(&self, s: usize) -> f64 {
        -self.exit[s]
    }

    pub fn max_exit_rate(&self) -> f64 {
        self.exit.iter().copied().fold(0.0, f64::max)
    }

    /// Largest absolute row sum of the generator (zero up to rounding).
    pub fn row_sum_residual(&self) -> f64 {
        (0..self.states())
            .map(|s| (self.row(s).map(|(_, r)| r).sum::<f64>() + self.diagonal(s)).abs())
            .fold(0.0, f64::max)
    }

    /// `out = v P` with `P = I + Q / rate`.
    fn step(&self, v: &[f64], out: &mut [f64], rate: f64) {
        for (o, (x, e)) in out.iter_mut().zip(v.iter().zip(&self.exit)) {
            *o = x * (1.0 - e / rate);
        }
        for (s, &x) in v.iter().enumerate() {
            if x == 0.0 {
                continue;
            }
            let scaled = x / rate;
            for (to, r) in self.row(s) {
                out[to] += scaled * r;
            }
        }
    }
}

/// Probability vector over the states of a [`RingChain`].
#[derive(Debug, Clone, PartialEq)]
pub struct DistributionVector {
    pub probs: Vec<f64>,
    /// Upper bound on the Poisson mass dropped by the series truncation.
    pub truncation: f64,
    pub terms: usize,
}

impl DistributionVector {
    pub fn total(&self) -> f64 {
        self.probs.iter().sum()
    }

    /// Probability of the set of states selected by `pred`.
    pub fn mass<F: Fn(usize) -> bool>(&self, pred: F) -> f64 {
        self.probs
            .iter()
            .enumerate()
            .filter(|(s, _)| pred(*s))
            .map(|(_, p)| p)
            .sum()
    }
}

/// Truncation policy of the uniformization series.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Uniformization {
    pub tail: f64,
    pub max_terms: usize,
}

impl Default for Uniformization {
    fn default() -> Self {
        Uniformization {
            tail: 1e-13,
            max_terms: 200_000,
        }
    }
}

fn ln_poisson(k: usize, a: f64) -> f64 {
    if a == 0.0 {
        return if k == 0 { 0.0 } else { f64::NEG_INFINITY };
    }
    -a + k as f64 * a.ln() - ln_gamma(k as f64 + 1.0)
}

pub fn transient_distribution(chain: &RingChain, initial: &Configuration, t: f64) -> Result<DistributionVector> {
    transient_distribution_with(chain, initial, t, Uniformization::default())
}

/// `delta_initial · exp(tQ)` by uniformization at the maximal exit rate.
pub fn transient_distribution_with(
    chain: &RingChain,
    initial: &Configuration,
    t: f64,
    policy: Uniformization,
) -> Result<DistributionVector> {
    check_horizon(t)?;
    let start = chain.encode(initial)?;
    let mut v = vec![0.0; chain.states()];
    v[start] = 1.0;
    let rate = chain.max_exit_rate();
    let a = rate * t;
    if a == 0.0 {
        return Ok(DistributionVector {
            probs: v,
            truncation: 0.0,
            terms: 1,
        });
    }
    let mut acc = vec![0.0; chain.states()];
    let mut next = vec![0.0; chain.states()];
    let mut k = 0usize;
    loop {
        let w = ln_poisson(k, a).exp();
        if w > 0.0 {
            for (o, x) in acc.iter_mut().zip(&v) {
                *o += w * x;
            }
        }
        // mass of the terms j > k, bounded by a geometric series once past the mode
        if (k + 2) as f64 > a {
            let ratio = a / (k + 2) as f64;
            let tail = ln_poisson(k + 1, a).exp() / (1.0 - ratio);
            if tail < policy.tail {
                return Ok(DistributionVector {
                    probs: acc,
                    truncation: tail,
                    terms: k + 1,
                });
            }
        }
        k += 1;
        if k >= policy.max_terms {
            return Err(Error::NoConvergence {
                cap: policy.max_terms,
                rate,
                t,
            });
        }
        chain.step(&v, &mut next, rate);
        std::mem::swap(&mut v, &mut next);
    }
}

/// `P(site ∈ eta_t)` for the chain started from `initial`.
pub fn occupation_probability(chain: &RingChain, initial: &Configuration, site: i64, t: f64) -> Result<f64> {
    let bit = chain.bit_of(site)?;
    let d = transient_distribution(chain, initial, t)?;
    let states = 1usize << chain.sites();
    Ok(d.mass(|s| s < states && (s >> bit) & 1 == 1))
}

/// `|P(eta_t^xi ∩ A ≠ ∅) - P(eta_t^A ∩ xi ≠ ∅)|`, both sides exact.
pub fn check_duality(chain: &RingChain, xi: &Configuration, a: &Configuration, t: f64) -> Result<f64> {
    if xi.is_empty() || a.is_empty() {
        return Err(invalid("xi", "duality check needs nonempty sets"));
    }
    let states = 1usize << chain.sites();
    let xi_mask = chain.encode(xi)?;
    let a_mask = chain.encode(a)?;
    let lhs = transient_distribution(chain, xi, t)?.mass(|s| s < states && s & a_mask != 0);
    let rhs = transient_distribution(chain, a, t)?.mass(|s| s < states && s & xi_mask != 0);
    Ok((lhs - rhs).abs())
}

/// `E[(1-p)^X - (1-q)^X]` with `X = |eta_t^{0} ∩ {-r, r}|`, exactly.
pub fn exact_sensitivity(chain: &RingChain, p: f64, q: f64, window: WindowLambdaR, t: f64) -> Result<f64> {
    if !(p > 0.0 && p <= q && q < 1.0) {
        return Err(invalid("p", format!("need 0 < p <= q < 1, got p = {p}, q = {q}")));
    }
    let [minus, plus] = window.sites();
    let mask = (1usize << chain.bit_of(minus)?) | (1usize << chain.bit_of(plus)?);
    let d = transient_distribution(chain, &Configuration::singleton(0), t)?;
    let states = 1usize << chain.sites();
    Ok(d.probs
        .iter()
        .enumerate()
        .take(states)
        .map(|(s, &pr)| pr * f_unchecked((s & mask).count_ones(), p, q))
        .sum())
}

/// Probability that the process on Z started from `initial` (labels of an
/// `n`-site segment) infects a site outside the segment before `t`. It
/// bounds the total-variation distance between the ring and the lattice.
pub fn escape_probability(n: usize, lambda: f64, initial: &Configuration, t: f64) -> Result<f64> {
    let chain = RingChain::with_boundary(n, lambda, Boundary::Escape)?;
    let d = transient_distribution(&chain, initial, t)?;
    Ok(d.probs[1usize << n])
}
