//! Sweep execution and CSV output.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use contact_core::oracle::{exact_sensitivity, transient_distribution, RingChain};
use contact_core::{
    conditional_independence, conditional_occupation, delta_sensitivity, sensitivity_direct,
    sensitivity_dual, survival_probability, Backend, Configuration, DeltaMode, EstimateWithCI,
    EstimatorKind, IndependenceTest, Sign, WindowLambdaR,
};

use crate::error::{CliError, Result};
use crate::spec::{Mode, Points, SweepSpec};

pub const CSV_HEADER: &str = "mode,lambda1,lambda2,p,q,r,t,n,mean,stderr,seed,estimator,wall_s,build";

/// Build identifier written to every row.
pub fn build_id() -> String {
    let id = option_env!("CONTACT_BUILD_ID").unwrap_or(env!("CARGO_PKG_VERSION"));
    format!("contact-{id}")
}

/// Last line of a complete CSV file.
pub fn sentinel(rows: usize) -> String {
    format!("# end rows={rows}")
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub mode: String,
    pub lambda1: f64,
    pub lambda2: Option<f64>,
    pub p: f64,
    pub q: f64,
    pub r: i64,
    pub t: f64,
    pub n: u64,
    pub mean: f64,
    pub stderr: f64,
    pub seed: u64,
    pub estimator: String,
    pub wall_s: Option<f64>,
    pub build: String,
}

impl ResultRow {
    /// Floats use the shortest representation that parses back exactly.
    pub fn to_csv(&self) -> String {
        let opt = |x: Option<f64>| x.map(|v| v.to_string()).unwrap_or_default();
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            self.mode,
            self.lambda1,
            opt(self.lambda2),
            self.p,
            self.q,
            self.r,
            self.t,
            self.n,
            self.mean,
            self.stderr,
            self.seed,
            self.estimator,
            self.wall_s.map(|w| format!("{w:.3}")).unwrap_or_default(),
            self.build
        )
    }

    pub fn sign(&self) -> Sign {
        EstimateWithCI {
            mean: self.mean,
            stderr: self.stderr,
            n: self.n,
            seed: self.seed,
            wall_time: 0.0,
        }
        .sign()
    }
}

/// Rows of a finished sweep and the indices of rows whose sign test was
/// inconclusive (delta sweeps only).
#[derive(Debug, Clone, PartialEq)]
pub struct SweepOutcome {
    pub rows: Vec<ResultRow>,
    pub inconclusive: Vec<usize>,
    /// Chi-square p-values of conditional independence rows.
    pub p_values: Vec<f64>,
}

pub(crate) fn engine_name(b: Backend) -> &'static str {
    match b {
        Backend::Graphical => "graphical",
        Backend::Jump => "jump",
    }
}

/// Conditional covariance of the two indicator events and its standard
/// error under independence; `(cov / se)^2` is the chi-square statistic.
pub fn covariance_of(test: &IndependenceTest) -> (f64, f64) {
    let m = test.conditioned as f64;
    let t = test.table;
    let pa = (t[1][0] + t[1][1]) as f64 / m;
    let pb = (t[0][1] + t[1][1]) as f64 / m;
    let cov = t[1][1] as f64 / m - pa * pb;
    let se = (pa * (1.0 - pa) * pb * (1.0 - pb) / m).sqrt();
    (cov, se)
}

struct RowCtx<'a> {
    spec: &'a SweepSpec,
}

impl RowCtx<'_> {
    fn row(&self, lambda1: f64, lambda2: Option<f64>, mean: f64, stderr: f64, estimator: String, wall: f64) -> ResultRow {
        let s = self.spec;
        ResultRow {
            mode: s.mode.as_str().to_string(),
            lambda1,
            lambda2,
            p: s.p,
            q: s.q,
            r: s.r,
            t: s.t,
            n: s.n,
            mean,
            stderr,
            seed: s.seed,
            estimator,
            wall_s: s.wall_time.then_some(wall),
            build: build_id(),
        }
    }
}

/// Computes one row per grid point, in grid order, and streams them to
/// `sink` followed by the completion sentinel.
pub fn run_sweep(spec: &SweepSpec, sink: &mut dyn Write) -> Result<SweepOutcome> {
    let io = |e| CliError::Io {
        path: spec.out.clone().unwrap_or_else(|| "<stdout>".into()),
        source: e,
    };
    writeln!(sink, "{CSV_HEADER}").map_err(io)?;
    let cfg = spec.run_config();
    let engine = engine_name(spec.engine);
    let ctx = RowCtx { spec };
    let mut out = SweepOutcome {
        rows: Vec::new(),
        inconclusive: Vec::new(),
        p_values: Vec::new(),
    };
    let mut emit = |out: &mut SweepOutcome, row: ResultRow| -> Result<()> {
        writeln!(sink, "{}", row.to_csv()).map_err(io)?;
        sink.flush().map_err(io)?;
        out.rows.push(row);
        Ok(())
    };

    match (&spec.mode, &spec.points) {
        (Mode::Sensitivity, Points::Rates(rates)) => {
            for &l in rates {
                let params = spec.setup().with_lambda(l)?;
                let point = match spec.estimator {
                    EstimatorKind::Dual => sensitivity_dual(&params, &cfg)?,
                    EstimatorKind::Direct => sensitivity_direct(&params, &cfg)?,
                };
                let e = point.estimate;
                let est = format!("{}:{engine}", spec.estimator.as_str());
                emit(&mut out, ctx.row(l, None, e.mean, e.stderr, est, e.wall_time))?;
            }
        }
        (Mode::Delta, Points::Pairs(pairs)) => {
            for &(a, b) in pairs {
                let e = delta_sensitivity(a, b, &spec.setup(), &cfg, DeltaMode::Coupled)?;
                if e.sign() == Sign::Inconclusive {
                    out.inconclusive.push(out.rows.len());
                }
                let est = format!("coupled:{engine}");
                emit(&mut out, ctx.row(a, Some(b), e.mean, e.stderr, est, e.wall_time))?;
            }
        }
        (Mode::Survival, Points::Rates(rates)) => {
            for &l in rates {
                let e = survival_probability(l, spec.t, &cfg)?.estimate;
                let est = format!("survival:{engine}");
                emit(&mut out, ctx.row(l, None, e.mean, e.stderr, est, e.wall_time))?;
            }
        }
        (Mode::Conditional, Points::Rates(rates)) => {
            for &l in rates {
                let c = conditional_occupation(l, spec.r, spec.t, &cfg)?;
                let e = c.occupied;
                let est = format!("conditional:{engine}");
                emit(&mut out, ctx.row(l, None, e.mean, e.stderr, est, e.wall_time))?;
            }
        }
        (Mode::Conditional, Points::Pairs(pairs)) => {
            for &(a, b) in pairs {
                let started = std::time::Instant::now();
                let test = conditional_independence(a, b, spec.r, spec.t, &cfg)?;
                let (cov, se) = covariance_of(&test);
                out.p_values.push(test.p_value);
                let est = format!("covariance:{engine}");
                let wall = started.elapsed().as_secs_f64();
                emit(&mut out, ctx.row(a, Some(b), cov, se, est, wall))?;
            }
        }
        (Mode::OracleCheck, Points::Rates(rates)) => {
            for &l in rates {
                let started = std::time::Instant::now();
                let chain = RingChain::new(spec.ring, l)?;
                let window = WindowLambdaR::new(spec.r)?;
                let value = exact_sensitivity(&chain, spec.p, spec.q, window, spec.t)?;
                let residual = transient_distribution(&chain, &Configuration::singleton(0), spec.t)?.truncation;
                let est = format!("exact:ring{}", spec.ring);
                let wall = started.elapsed().as_secs_f64();
                emit(&mut out, ctx.row(l, None, value, residual, est, wall))?;
            }
        }
        (mode, _) => unreachable!("points of {mode:?} resolved to the wrong shape"),
    }
    writeln!(sink, "{}", sentinel(out.rows.len())).map_err(io)?;
    sink.flush().map_err(io)?;
    Ok(out)
}

/// Runs the sweep into `spec.out`, or stdout when no path is set.
pub fn run_sweep_to_output(spec: &SweepSpec) -> Result<SweepOutcome> {
    match &spec.out {
        Some(path) => {
            let mut w = BufWriter::new(create(path)?);
            run_sweep(spec, &mut w)
        }
        None => run_sweep(spec, &mut std::io::stdout().lock()),
    }
}

pub(crate) fn create(path: &Path) -> Result<File> {
    File::create(path).map_err(|e| CliError::Io {
        path: path.to_path_buf(),
        source: e,
    })
}
