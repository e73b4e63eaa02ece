//! Peak-aware conditional generation of GC-MS spectra and two-stream detection.

pub mod cgan;
pub mod cli;
pub mod datastore;
pub mod detector;
pub mod error;
pub mod metrics;
pub mod nn;
pub mod peak_attention;
pub mod simulator;
pub mod spectrum;

pub use error::{Error, Result};
