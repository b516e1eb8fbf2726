//! Experiment harness behind the `crlab` binary.
//!
//! Every command resolves to an [`config::ExperimentConfig`], runs through
//! [`runner::run_command`], and produces a [`report::RunReport`] that
//! renders as text, JSON, or CSV. Each trial draws from an independent
//! substream derived from the master seed and the trial index, so reports
//! are byte-identical across runs with the same configuration (apart from
//! the wall-time field) and single trials can be replayed in isolation.

pub mod config;
pub mod report;
pub mod runner;
