//! Command-line front end for the micromorphic elasticity library:
//! scenario files, check execution, and deterministic reports.

pub mod config;
pub mod report;
