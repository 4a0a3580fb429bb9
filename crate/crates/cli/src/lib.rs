//! Command-line front end for the co-allocation clearing engine: instance
//! files, results files and the `ptdf`, `clear`, `settle` and `verify`
//! commands.

pub mod commands;
pub mod error;
pub mod instance;
pub mod results;
