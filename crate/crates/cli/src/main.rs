use std::fs;
use std::io::BufWriter;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use contact_cli::error::CliError;
use contact_cli::spec::{parse_engine, parse_estimator, parse_samples};
use contact_cli::{
    critical_bracket, run_locate, run_sweep_to_output, LocateSpec, Mode, Points, Settings, SweepSpec,
    EXIT_INCONCLUSIVE,
};
use contact_core::oracle::{check_duality, fixtures, RingChain};
use contact_core::Configuration;

#[derive(Parser, Debug)]
#[command(name = "contact", version, about = "Sensitivity experiments for the 1-d contact process")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Sensitivity S(lambda, t) on a rate grid.
    Sensitivity(Common),
    /// Sensitivity variation Delta = S(lambda2) - S(lambda1) with a 95% sign test.
    Delta(Common),
    /// Survival probability to the horizon t.
    Survival {
        #[command(flatten)]
        common: Common,
        /// Also classify each rate from survival at t and 2t and bracket the transition.
        #[arg(long)]
        bracket: bool,
    },
    /// Conditional occupation of r given -r empty; with --lambda2, the
    /// conditional covariance of the coupled pair.
    Conditional(Common),
    /// Exact values on a small ring and solver self-checks.
    OracleCheck {
        #[command(flatten)]
        common: Common,
        /// Write the standard oracle fixture file here.
        #[arg(long, value_name = "PATH")]
        fixtures: Option<PathBuf>,
    },
    /// Bisection for the rate where Delta changes sign (the sensitivity peak).
    LocatePeak(Common),
}

#[derive(Args, Debug, Default)]
struct Common {
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    lambda2: Option<f64>,
    /// Rate grid `a:b:step`.
    #[arg(long, value_name = "A:B:STEP")]
    lambda_grid: Option<String>,
    #[arg(long)]
    p: Option<f64>,
    #[arg(long)]
    q: Option<f64>,
    /// Window radius.
    #[arg(long)]
    r: Option<i64>,
    /// Time horizon.
    #[arg(long)]
    t: Option<f64>,
    /// Replicas per grid point (`2e5` accepted).
    #[arg(long)]
    samples: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; 0 uses every core, 1 runs sequentially.
    #[arg(long)]
    workers: Option<usize>,
    /// CSV output path (stdout when absent).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_name = "NAME")]
    preset: Option<String>,
    /// Flat `key = value` file with the same keys as the flags.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// `dual` or `direct`.
    #[arg(long)]
    estimator: Option<String>,
    /// `jump` or `graphical`.
    #[arg(long)]
    engine: Option<String>,
    /// Ring size for oracle-check.
    #[arg(long)]
    ring: Option<usize>,
    /// Bracket width at which locate-peak stops.
    #[arg(long)]
    tol: Option<f64>,
    /// Record wall time per row (makes output differ between runs).
    #[arg(long)]
    wall_time: bool,
}

impl Common {
    fn settings(&self) -> Result<Settings, CliError> {
        let file = match &self.config {
            Some(path) => {
                let text = fs::read_to_string(path).map_err(|e| CliError::Io {
                    path: path.clone(),
                    source: e,
                })?;
                Settings::parse_config(&text)?
            }
            None => Settings::default(),
        };
        let flags = Settings {
            lambda: self.lambda,
            lambda2: self.lambda2,
            lambda_grid: self.lambda_grid.as_deref().map(str::parse).transpose()?,
            p: self.p,
            q: self.q,
            r: self.r,
            t: self.t,
            samples: self.samples.as_deref().map(parse_samples).transpose()?,
            seed: self.seed,
            workers: self.workers,
            out: self.out.clone(),
            preset: self.preset.as_deref().map(str::parse).transpose()?,
            estimator: self.estimator.as_deref().map(parse_estimator).transpose()?,
            engine: self.engine.as_deref().map(parse_engine).transpose()?,
            ring: self.ring,
            tol: self.tol,
            wall_time: self.wall_time.then_some(true),
        };
        Ok(file.overlay(flags))
    }
}

fn sweep(mode: Mode, common: &Common) -> Result<i32, CliError> {
    let spec = SweepSpec::resolve(mode, common.settings()?)?;
    let out = run_sweep_to_output(&spec)?;
    if mode == Mode::Delta {
        for row in &out.rows {
            eprintln!(
                "Delta({}, {}) = {} +- {} ({:?})",
                row.lambda1,
                row.lambda2.unwrap_or(f64::NAN),
                row.mean,
                row.stderr,
                row.sign()
            );
        }
        if !out.inconclusive.is_empty() {
            eprintln!("inconclusive sign test on {} row(s)", out.inconclusive.len());
            return Ok(EXIT_INCONCLUSIVE);
        }
    }
    for p in &out.p_values {
        eprintln!("chi-square independence p-value: {p}");
    }
    Ok(0)
}

fn survival_bracket(common: &Common) -> Result<(), CliError> {
    let spec = SweepSpec::resolve(Mode::Survival, common.settings()?)?;
    let Points::Rates(rates) = &spec.points else {
        unreachable!("survival sweeps are over rates");
    };
    let b = critical_bracket(rates, spec.t, &spec.run_config())?;
    for p in &b.points {
        eprintln!(
            "lambda={} s(T)={} s(2T)={} local exponent={:.4} [{:.4}, {:.4}] {:?}",
            p.lambda, p.survival, p.survival_2t, p.local_exponent, p.exponent_ci.0, p.exponent_ci.1, p.phase
        );
    }
    match b.bracket {
        Some((lo, hi)) => eprintln!("transition bracket: [{lo}, {hi}]"),
        None => eprintln!("transition not bracketed by this grid"),
    }
    Ok(())
}

fn oracle_check(common: &Common, fixture_path: Option<&PathBuf>) -> Result<i32, CliError> {
    let settings = common.settings()?;
    if let Some(path) = fixture_path {
        let recs = fixtures::standard_fixtures()?;
        fs::write(path, fixtures::render(&recs)).map_err(|e| CliError::Io {
            path: path.clone(),
            source: e,
        })?;
        eprintln!("wrote {} fixture records to {}", recs.len(), path.display());
    }
    if settings.lambda.is_none() && settings.lambda_grid.is_none() {
        return Ok(0);
    }
    let spec = SweepSpec::resolve(Mode::OracleCheck, settings)?;
    let Points::Rates(rates) = &spec.points else {
        unreachable!("oracle sweeps are over rates");
    };
    for &l in rates {
        let chain = RingChain::new(spec.ring, l)?;
        let rows = chain.row_sum_residual();
        let xi = Configuration::from_sites([-1, 1]);
        let dual = check_duality(&chain, &xi, &Configuration::singleton(0), spec.t)?;
        eprintln!("lambda={l}: generator row-sum residual {rows:e}, duality residual {dual:e}");
        if rows > 1e-12 || dual > 1e-8 {
            return Err(CliError::Check(format!("lambda={l}: residuals {rows:e}, {dual:e}")));
        }
    }
    run_sweep_to_output(&spec)?;
    Ok(0)
}

fn locate(common: &Common) -> Result<i32, CliError> {
    let spec = LocateSpec::resolve(common.settings()?)?;
    let tr = match &spec.out {
        Some(path) => {
            let file = fs::File::create(path).map_err(|e| CliError::Io {
                path: path.clone(),
                source: e,
            })?;
            run_locate(&spec, &mut BufWriter::new(file))?
        }
        None => run_locate(&spec, &mut std::io::stdout().lock())?,
    };
    for c in &tr.calls {
        eprintln!(
            "Delta({}, {}) = {} +- {} ({:?})",
            c.lambda1, c.lambda2, c.estimate.mean, c.estimate.stderr, c.sign
        );
    }
    eprintln!("{}", tr.describe());
    Ok(if tr.interval.is_some() { 0 } else { EXIT_INCONCLUSIVE })
}

fn run(cli: Cli) -> Result<i32, CliError> {
    match &cli.command {
        Command::Sensitivity(c) => sweep(Mode::Sensitivity, c),
        Command::Delta(c) => sweep(Mode::Delta, c),
        Command::Survival { common, bracket } => {
            let code = sweep(Mode::Survival, common)?;
            if *bracket {
                survival_bracket(common)?;
            }
            Ok(code)
        }
        Command::Conditional(c) => sweep(Mode::Conditional, c),
        Command::OracleCheck { common, fixtures } => oracle_check(common, fixtures.as_ref()),
        Command::LocatePeak(c) => locate(c),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
