//! Configuration-driven front end: the JSON run configuration and the five
//! subcommand implementations behind the `eps` binary.
//!
//! The binary itself only parses arguments and maps errors to exit codes;
//! everything observable - files written, report contents, pass/fail
//! decisions - lives here where it can be tested directly.

pub mod commands;
pub mod config;

pub use commands::{
    cmd_algebra, cmd_evolve, cmd_state, cmd_transform, cmd_verify, AlgebraAction, CheckOutcome,
    CheckStatus, RoutePath, TransformKind, TransformOutcome, VerifyReport, VerifySuite,
};
pub use config::{thread_cap_from_env, GridSection, RunConfig, Tolerances, WidthChoice};
