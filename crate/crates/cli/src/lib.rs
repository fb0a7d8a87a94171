//! Command-line front end for the belief network simulator: knowledge-base
//! checking, experiments, sweeps and figure reproduction.

pub mod check;
pub mod config;
pub mod output;
pub mod reproduce;
pub mod runner;
