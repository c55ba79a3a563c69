//! Command-line front end for the `mtkit` toolkit.

pub mod args;
pub mod commands;
pub mod error;
pub mod run;
pub mod demo;
