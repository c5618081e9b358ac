//! Experiment harness around `cirseq-core`: configuration, seeded
//! parallel replication, bound verification and report emission. The
//! `cirseq` binary is a thin shell over this library so the acceptance
//! suite can drive everything in-process.

pub mod config;
pub mod lab;
pub mod report;
pub mod runner;
