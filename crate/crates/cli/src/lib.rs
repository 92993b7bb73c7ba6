//! Command-line front end: configuration loading and validation, named
//! builders, definitional checks and experiment runners with deterministic
//! CSV/JSON output.

pub mod builders;
pub mod check;
pub mod config;
pub mod doc;
pub mod error;
pub mod exec;
pub mod setup;
pub mod experiments;
