//! Experiment harness and file front end for the `atmoray` solver: run
//! configuration with layered overrides, the reproduction studies, and the
//! TSV output format. The binary in `main.rs` is a thin dispatcher over
//! these modules so regression tests drive the exact code paths the CLI
//! does.

pub mod config;
pub mod experiments;
pub mod tsv;
