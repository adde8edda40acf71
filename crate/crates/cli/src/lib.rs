//! Batch experiments for the contact-process sensitivity estimators:
//! settings resolution, grid sweeps with CSV output, and localization of
//! the sensitivity peak and of the survival transition.

pub mod error;
pub mod locate;
pub mod spec;
pub mod sweep;

pub use error::{CliError, Result};
pub use locate::{critical_bracket, locate_transition, run_locate, CriticalBracket, Phase, SignCall, Transition};
pub use spec::{Grid, LocateSpec, Mode, Points, Preset, Settings, SweepSpec};
pub use sweep::{run_sweep, run_sweep_to_output, ResultRow, SweepOutcome, CSV_HEADER};

/// Exit code of sign-test subcommands whose result is inconclusive.
pub const EXIT_INCONCLUSIVE: i32 = 3;
