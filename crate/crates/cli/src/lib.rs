//! Command-line driver for the wind estimators: generates training datasets
//! from the scenario grid, trains the network, runs evaluation scenarios
//! through all estimators on identical sensor streams, and computes the
//! RMS comparison tables.
//!
//! See [`commands`] for the operations behind each subcommand and
//! [`runner`] for the scenario execution machinery.

pub mod commands;
pub mod logs;
pub mod manifest;
pub mod reference;
pub mod rms;
pub mod runner;
