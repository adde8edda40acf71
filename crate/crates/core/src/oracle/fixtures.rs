//! Versioned plain-text file of oracle values.
//!
//! ```text
//! # contact-oracle-fixtures v1
//! kind=occupation n=10 lambda=1 t=1.5 init=0 site=0 value=0.40... residual=3.1e-14
//! ```
//!
//! One record per line: `kind`, the parameters as `key=value` pairs, then
//! the computed `value` and the solver `residual` (Poisson tail bound).
//! Floats use the shortest representation that round-trips exactly.

use std::fmt::Write as _;

use super::{escape_probability, exact_sensitivity, occupation_probability, transient_distribution, RingChain};
use crate::error::{Error, Result};
use crate::lattice::{Configuration, WindowLambdaR};

pub const HEADER: &str = "# contact-oracle-fixtures v1";

#[derive(Debug, Clone, PartialEq)]
pub struct FixtureRecord {
    pub kind: String,
    pub params: Vec<(String, String)>,
    pub value: f64,
    pub residual: f64,
}

impl FixtureRecord {
    pub fn param(&self, key: &str) -> Option<&str> {
        self.params.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn to_line(&self) -> String {
        let mut s = format!("kind={}", self.kind);
        for (k, v) in &self.params {
            let _ = write!(s, " {k}={v}");
        }
        let _ = write!(s, " value={} residual={:e}", self.value, self.residual);
        s
    }

    pub fn parse_line(line: &str) -> Result<Self> {
        let mut kind = None;
        let mut params = Vec::new();
        let mut value = None;
        let mut residual = None;
        for token in line.split_whitespace() {
            let (k, v) = token
                .split_once('=')
                .ok_or_else(|| Error::Fixture(format!("malformed token `{token}`")))?;
            let num = || {
                v.parse::<f64>()
                    .map_err(|e| Error::Fixture(format!("bad number `{v}`: {e}")))
            };
            match k {
                "kind" => kind = Some(v.to_string()),
                "value" => value = Some(num()?),
                "residual" => residual = Some(num()?),
                _ => params.push((k.to_string(), v.to_string())),
            }
        }
        match (kind, value, residual) {
            (Some(kind), Some(value), Some(residual)) => Ok(FixtureRecord {
                kind,
                params,
                value,
                residual,
            }),
            _ => Err(Error::Fixture(format!("incomplete record `{line}`"))),
        }
    }
}

pub fn render(records: &[FixtureRecord]) -> String {
    let mut out = String::from(HEADER);
    out.push('\n');
    for r in records {
        out.push_str(&r.to_line());
        out.push('\n');
    }
    out
}

pub fn parse(text: &str) -> Result<Vec<FixtureRecord>> {
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h.trim() == HEADER => {}
        other => {
            return Err(Error::Fixture(format!(
                "expected header `{HEADER}`, found {other:?}"
            )))
        }
    }
    lines
        .filter(|l| !l.trim().is_empty() && !l.starts_with('#'))
        .map(FixtureRecord::parse_line)
        .collect()
}

fn sites(c: &Configuration) -> String {
    c.sorted().iter().map(|s| s.to_string()).collect::<Vec<_>>().join(",")
}

fn record(kind: &str, params: &[(&str, String)], value: f64, residual: f64) -> FixtureRecord {
    FixtureRecord {
        kind: kind.to_string(),
        params: params.iter().map(|(k, v)| (k.to_string(), v.clone())).collect(),
        value,
        residual,
    }
}

/// `P(eta_t(site) = 1)` from `init` on the `n`-ring.
pub fn occupation(n: usize, lambda: f64, t: f64, init: &Configuration, site: i64) -> Result<FixtureRecord> {
    let chain = RingChain::new(n, lambda)?;
    let value = occupation_probability(&chain, init, site, t)?;
    let residual = transient_distribution(&chain, init, t)?.truncation;
    Ok(record(
        "occupation",
        &[
            ("n", n.to_string()),
            ("lambda", lambda.to_string()),
            ("t", t.to_string()),
            ("init", sites(init)),
            ("site", site.to_string()),
        ],
        value,
        residual,
    ))
}

pub fn sensitivity(n: usize, lambda: f64, p: f64, q: f64, r: i64, t: f64) -> Result<FixtureRecord> {
    let chain = RingChain::new(n, lambda)?;
    let value = exact_sensitivity(&chain, p, q, WindowLambdaR::new(r)?, t)?;
    let residual = transient_distribution(&chain, &Configuration::singleton(0), t)?.truncation;
    Ok(record(
        "sensitivity",
        &[
            ("n", n.to_string()),
            ("lambda", lambda.to_string()),
            ("p", p.to_string()),
            ("q", q.to_string()),
            ("r", r.to_string()),
            ("t", t.to_string()),
        ],
        value,
        residual,
    ))
}

/// `P(lower_t(site) = 0, upper_t(site) = 1)` for the monotone coupling from
/// `lower ⊆ upper`, as the difference of the two occupation probabilities.
pub fn split(n: usize, lambda: f64, t: f64, lower: &Configuration, upper: &Configuration, site: i64) -> Result<FixtureRecord> {
    let chain = RingChain::new(n, lambda)?;
    let hi = occupation_probability(&chain, upper, site, t)?;
    let lo = occupation_probability(&chain, lower, site, t)?;
    let residual = transient_distribution(&chain, upper, t)?.truncation
        + transient_distribution(&chain, lower, t)?.truncation;
    Ok(record(
        "split",
        &[
            ("n", n.to_string()),
            ("lambda", lambda.to_string()),
            ("t", t.to_string()),
            ("lower", sites(lower)),
            ("upper", sites(upper)),
            ("site", site.to_string()),
        ],
        hi - lo,
        residual,
    ))
}

pub fn escape(n: usize, lambda: f64, t: f64, init: &Configuration) -> Result<FixtureRecord> {
    let value = escape_probability(n, lambda, init, t)?;
    Ok(record(
        "escape",
        &[
            ("n", n.to_string()),
            ("lambda", lambda.to_string()),
            ("t", t.to_string()),
            ("init", sites(init)),
        ],
        value,
        0.0,
    ))
}

/// The oracle values the Monte Carlo tests are checked against.
pub fn standard_fixtures() -> Result<Vec<FixtureRecord>> {
    let origin = Configuration::singleton(0);
    Ok(vec![
        occupation(10, 1.0, 1.5, &origin, 0)?,
        escape(10, 1.0, 1.5, &origin)?,
        sensitivity(12, 1.0, 0.7, 0.9, 2, 3.0)?,
        escape(12, 1.0, 3.0, &origin)?,
        split(
            12,
            1.0,
            3.0,
            &Configuration::singleton(-2),
            &Configuration::from_sites([-2, 2]),
            0,
        )?,
        escape(12, 1.0, 3.0, &Configuration::from_sites([-2, 2]))?,
    ])
}
