//! Experiment settings: flags, config files, presets and their resolution
//! into a validated [`SweepSpec`].

use std::path::PathBuf;
use std::str::FromStr;

use contact_core::{Backend, EstimatorKind, Execution, ModelParams, RunConfig, WindowSetup};

use crate::error::{invalid, Result};

/// `start:stop:step`, inclusive of `stop` up to rounding.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl FromStr for Grid {
    type Err = crate::CliError;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        let [a, b, c] = parts[..] else {
            return Err(invalid(format!("grid `{s}` is not of the form a:b:step")));
        };
        let num = |x: &str| {
            x.trim()
                .parse::<f64>()
                .map_err(|_| invalid(format!("grid `{s}`: `{x}` is not a number")))
        };
        let g = Grid {
            start: num(a)?,
            stop: num(b)?,
            step: num(c)?,
        };
        if !(g.start.is_finite() && g.stop.is_finite() && g.step.is_finite() && g.step > 0.0) {
            return Err(invalid(format!("grid `{s}`: step must be positive and bounds finite")));
        }
        Ok(g)
    }
}

impl Grid {
    /// Grid points; empty when `start > stop`.
    pub fn points(&self) -> Vec<f64> {
        if self.start > self.stop {
            return Vec::new();
        }
        let count = ((self.stop - self.start) / self.step + 1e-9).floor() as usize + 1;
        (0..count)
            .map(|k| round12(self.start + k as f64 * self.step))
            .collect()
    }
}

/// Trims float noise such as `0.30000000000000004` from grid points.
fn round12(x: f64) -> f64 {
    (x * 1e12).round() / 1e12
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    Theorem1,
}

impl FromStr for Preset {
    type Err = crate::CliError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "theorem1" => Ok(Preset::Theorem1),
            _ => Err(invalid(format!("unknown preset `{s}` (expected theorem1)"))),
        }
    }
}

impl Preset {
    /// Rate pairs of the sign-reproduction run.
    ///
    /// Calibration (seed 7, 20 000 replicas, jump engine):
    /// `Delta(1.0, 1.4) = 0.01440 +- 0.00036`,
    /// `Delta(6.0, 8.0) = -0.00186 +- 0.00022`.
    pub const THEOREM1_PAIRS: [(f64, f64); 2] = [(1.0, 1.4), (6.0, 8.0)];

    fn layer(self) -> Settings {
        match self {
            Preset::Theorem1 => Settings {
                p: Some(0.7),
                q: Some(0.9),
                r: Some(5),
                t: Some(30.0),
                samples: Some(200_000),
                ..Settings::default()
            },
        }
    }
}

/// Raw, possibly partial settings. Later layers override earlier ones:
/// defaults, preset, config file, command-line flags.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Settings {
    pub lambda: Option<f64>,
    pub lambda2: Option<f64>,
    pub lambda_grid: Option<Grid>,
    pub p: Option<f64>,
    pub q: Option<f64>,
    pub r: Option<i64>,
    pub t: Option<f64>,
    pub samples: Option<u64>,
    pub seed: Option<u64>,
    pub workers: Option<usize>,
    pub out: Option<PathBuf>,
    pub preset: Option<Preset>,
    pub estimator: Option<EstimatorKind>,
    pub engine: Option<Backend>,
    pub ring: Option<usize>,
    pub tol: Option<f64>,
    pub wall_time: Option<bool>,
}

macro_rules! overlay {
    ($self:ident, $over:ident, $($f:ident),*) => {
        Settings { $($f: $over.$f.or($self.$f)),* }
    };
}

fn parse_value<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .trim()
        .parse()
        .map_err(|_| invalid(format!("`{key}`: cannot parse `{value}`")))
}

pub fn parse_estimator(s: &str) -> Result<EstimatorKind> {
    match s {
        "dual" => Ok(EstimatorKind::Dual),
        "direct" => Ok(EstimatorKind::Direct),
        _ => Err(invalid(format!("unknown estimator `{s}` (expected dual or direct)"))),
    }
}

pub fn parse_engine(s: &str) -> Result<Backend> {
    s.parse()
        .map_err(|_| invalid(format!("unknown engine `{s}` (expected jump or graphical)")))
}

impl Settings {
    /// `over` wins wherever it is set.
    pub fn overlay(self, over: Settings) -> Settings {
        overlay!(
            self, over, lambda, lambda2, lambda_grid, p, q, r, t, samples, seed, workers, out, preset,
            estimator, engine, ring, tol, wall_time
        )
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let v = value.trim();
        match key.trim().replace('_', "-").as_str() {
            "lambda" => self.lambda = Some(parse_value(key, v)?),
            "lambda2" => self.lambda2 = Some(parse_value(key, v)?),
            "lambda-grid" => self.lambda_grid = Some(v.parse()?),
            "p" => self.p = Some(parse_value(key, v)?),
            "q" => self.q = Some(parse_value(key, v)?),
            "r" => self.r = Some(parse_value(key, v)?),
            "t" => self.t = Some(parse_value(key, v)?),
            "samples" => self.samples = Some(parse_samples(v)?),
            "seed" => self.seed = Some(parse_value(key, v)?),
            "workers" => self.workers = Some(parse_value(key, v)?),
            "out" => self.out = Some(PathBuf::from(v)),
            "preset" => self.preset = Some(v.parse()?),
            "estimator" => self.estimator = Some(parse_estimator(v)?),
            "engine" => self.engine = Some(parse_engine(v)?),
            "ring" => self.ring = Some(parse_value(key, v)?),
            "tol" => self.tol = Some(parse_value(key, v)?),
            "wall-time" => self.wall_time = Some(parse_value(key, v)?),
            other => return Err(invalid(format!("unknown setting `{other}`"))),
        }
        Ok(())
    }

    /// Flat `key = value` file; `#` starts a comment.
    pub fn parse_config(text: &str) -> Result<Settings> {
        let mut s = Settings::default();
        for (no, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| invalid(format!("config line {}: expected key = value", no + 1)))?;
            s.set(k, v)?;
        }
        Ok(s)
    }

    /// Applies the preset (if any) underneath these settings.
    fn with_preset(self) -> Settings {
        match self.preset {
            Some(p) => p.layer().overlay(self),
            None => self,
        }
    }
}

/// Replica counts accept scientific notation such as `2e5`.
pub fn parse_samples(s: &str) -> Result<u64> {
    if let Ok(n) = s.parse::<u64>() {
        return Ok(n);
    }
    let x: f64 = s
        .parse()
        .map_err(|_| invalid(format!("`samples`: cannot parse `{s}`")))?;
    if x.fract() != 0.0 || !(x >= 0.0 && x <= u64::MAX as f64) {
        return Err(invalid(format!("`samples` must be a whole number, got `{s}`")));
    }
    Ok(x as u64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Sensitivity,
    Delta,
    Survival,
    Conditional,
    OracleCheck,
}

impl Mode {
    pub fn as_str(&self) -> &'static str {
        match self {
            Mode::Sensitivity => "sensitivity",
            Mode::Delta => "delta",
            Mode::Survival => "survival",
            Mode::Conditional => "conditional",
            Mode::OracleCheck => "oracle-check",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Points {
    Rates(Vec<f64>),
    Pairs(Vec<(f64, f64)>),
}

impl Points {
    pub fn len(&self) -> usize {
        match self {
            Points::Rates(v) => v.len(),
            Points::Pairs(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// A validated sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub mode: Mode,
    pub points: Points,
    pub p: f64,
    pub q: f64,
    pub r: i64,
    pub t: f64,
    pub n: u64,
    pub seed: u64,
    pub workers: usize,
    pub estimator: EstimatorKind,
    pub engine: Backend,
    pub ring: usize,
    pub wall_time: bool,
    pub out: Option<PathBuf>,
}

pub const DEFAULT_P: f64 = 0.7;
pub const DEFAULT_Q: f64 = 0.9;
pub const DEFAULT_R: i64 = 5;
pub const DEFAULT_T: f64 = 10.0;
pub const DEFAULT_SAMPLES: u64 = 10_000;
pub const DEFAULT_SEED: u64 = 1;
pub const DEFAULT_RING: usize = 12;
pub const DEFAULT_TOL: f64 = 0.25;

fn strictly_increasing(xs: &[f64]) -> bool {
    xs.windows(2).all(|w| w[0] < w[1])
}

fn rates_from(s: &Settings) -> Result<Vec<f64>> {
    let v = match (&s.lambda_grid, s.lambda) {
        (Some(g), _) => g.points(),
        (None, Some(l)) => vec![l],
        (None, None) => return Err(invalid("no infection rate given (use --lambda or --lambda-grid)")),
    };
    if v.is_empty() {
        return Err(invalid("the rate grid is empty"));
    }
    Ok(v)
}

impl SweepSpec {
    pub fn resolve(mode: Mode, settings: Settings) -> Result<SweepSpec> {
        let preset = settings.preset;
        let s = settings.with_preset();
        let points = match mode {
            Mode::Delta => {
                let pairs = if let Some(g) = &s.lambda_grid {
                    let pts = g.points();
                    if pts.len() < 2 {
                        return Err(invalid("a delta grid needs at least two rates"));
                    }
                    pts.windows(2).map(|w| (w[0], w[1])).collect()
                } else if let (Some(a), Some(b)) = (s.lambda, s.lambda2) {
                    vec![(a, b)]
                } else if preset == Some(Preset::Theorem1) {
                    Preset::THEOREM1_PAIRS.to_vec()
                } else {
                    return Err(invalid("delta needs --lambda and --lambda2, --lambda-grid or a preset"));
                };
                Points::Pairs(pairs)
            }
            Mode::Conditional if s.lambda2.is_some() => {
                let a = s.lambda.ok_or_else(|| invalid("--lambda2 needs --lambda"))?;
                Points::Pairs(vec![(a, s.lambda2.unwrap_or(a))])
            }
            _ => Points::Rates(rates_from(&s)?),
        };
        let spec = SweepSpec {
            mode,
            points,
            p: s.p.unwrap_or(DEFAULT_P),
            q: s.q.unwrap_or(DEFAULT_Q),
            r: s.r.unwrap_or(DEFAULT_R),
            t: s.t.unwrap_or(DEFAULT_T),
            n: s.samples.unwrap_or(DEFAULT_SAMPLES),
            seed: s.seed.unwrap_or(DEFAULT_SEED),
            workers: s.workers.unwrap_or(0),
            estimator: s.estimator.unwrap_or(EstimatorKind::Dual),
            engine: s.engine.unwrap_or_default(),
            ring: s.ring.unwrap_or(DEFAULT_RING),
            wall_time: s.wall_time.unwrap_or(false),
            out: s.out.clone(),
        };
        spec.validate(preset)?;
        Ok(spec)
    }

    fn validate(&self, preset: Option<Preset>) -> Result<()> {
        if self.points.is_empty() {
            return Err(invalid("the grid is empty"));
        }
        if self.n == 0 {
            return Err(invalid("--samples must be positive"));
        }
        match &self.points {
            Points::Rates(v) => {
                if !strictly_increasing(v) {
                    return Err(invalid("rates must be strictly increasing"));
                }
                for &l in v {
                    ModelParams::new(l, self.p, self.q, self.r, self.t)?;
                }
            }
            Points::Pairs(v) => {
                let firsts: Vec<f64> = v.iter().map(|p| p.0).collect();
                if !strictly_increasing(&firsts) {
                    return Err(invalid("rate pairs must be sorted"));
                }
                for &(a, b) in v {
                    ModelParams::new(a, self.p, self.q, self.r, self.t)?;
                    ModelParams::new(b, self.p, self.q, self.r, self.t)?;
                    if a >= b {
                        return Err(invalid(format!("pair ({a}, {b}): need lambda < lambda2")));
                    }
                }
            }
        }
        if preset == Some(Preset::Theorem1) {
            ModelParams::new(0.0, self.p, self.q, self.r, self.t)?.check_large_density_regime()?;
        }
        if self.mode == Mode::OracleCheck && !(2 * self.r < self.ring as i64) {
            return Err(invalid(format!(
                "window radius {} does not fit on a ring of {} sites",
                self.r, self.ring
            )));
        }
        Ok(())
    }

    pub fn setup(&self) -> WindowSetup {
        WindowSetup {
            p: self.p,
            q: self.q,
            r: self.r,
            t: self.t,
        }
    }

    pub fn run_config(&self) -> RunConfig {
        RunConfig::new(self.seed, self.n)
            .with_exec(Execution::with_workers(self.workers))
            .with_backend(self.engine)
    }
}

/// Validated input of [`crate::locate_transition`].
#[derive(Debug, Clone, PartialEq)]
pub struct LocateSpec {
    pub setup: WindowSetup,
    pub range: (f64, f64),
    /// Spacing of the compared rate pairs.
    pub step: f64,
    /// Bisection stops once the bracket of left pair ends is this narrow.
    pub tol: f64,
    pub cfg: RunConfig,
    pub out: Option<PathBuf>,
    pub wall_time: bool,
}

impl LocateSpec {
    pub fn resolve(settings: Settings) -> Result<LocateSpec> {
        let preset = settings.preset;
        let s = settings.with_preset();
        let g = s
            .lambda_grid
            .ok_or_else(|| invalid("locate-peak needs --lambda-grid a:b:step"))?;
        if !(g.start < g.stop) {
            return Err(invalid("locate-peak needs a range with a < b"));
        }
        if g.step >= g.stop - g.start {
            return Err(invalid("the pair spacing must be smaller than the range"));
        }
        let tol = s.tol.unwrap_or(DEFAULT_TOL);
        if !(tol > 0.0 && tol.is_finite()) {
            return Err(invalid("--tol must be positive"));
        }
        let setup = WindowSetup::new(
            s.p.unwrap_or(DEFAULT_P),
            s.q.unwrap_or(DEFAULT_Q),
            s.r.unwrap_or(DEFAULT_R),
            s.t.unwrap_or(DEFAULT_T),
        )?;
        setup.with_lambda(g.start)?;
        if preset == Some(Preset::Theorem1) {
            setup.with_lambda(g.start)?.check_large_density_regime()?;
        }
        let n = s.samples.unwrap_or(DEFAULT_SAMPLES);
        if n == 0 {
            return Err(invalid("--samples must be positive"));
        }
        let cfg = RunConfig::new(s.seed.unwrap_or(DEFAULT_SEED), n)
            .with_exec(Execution::with_workers(s.workers.unwrap_or(0)))
            .with_backend(s.engine.unwrap_or_default());
        Ok(LocateSpec {
            setup,
            range: (g.start, g.stop),
            step: g.step,
            tol,
            cfg,
            out: s.out,
            wall_time: s.wall_time.unwrap_or(false),
        })
    }
}
