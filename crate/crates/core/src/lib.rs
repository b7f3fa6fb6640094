//! A five-equation inflation-targeting model for a small open economy.
//!
//! The crate covers the full pipeline from raw monthly series to structural
//! estimates:
//!
//! - [`series`]: monthly containers and data transforms (year-over-year
//!   rates, trailing means, splicing, alignment, CSV I/O).
//! - [`detrend`]: output-gap construction (Hodrick-Prescott and polynomial
//!   trend).
//! - [`unitroot`]: augmented Dickey-Fuller tests with response-surface
//!   p-values.
//! - [`model`]: parameters, reduced form, steady state, simulation, impulse
//!   responses and shock recovery.
//! - [`gmm`]: moment conditions, HAC weighting, optimizer and two-step
//!   estimation.
//! - [`synth`]: synthetic datasets with known parameters.
//! - [`report`]: plain-text and CSV reports.
//!
//! Inside the model, rates are decimal fractions per year; datasets read
//! from disk are in percent and are converted with
//! [`series::MacroDataset::to_decimal`].

pub mod detrend;
pub mod error;
pub mod gmm;
mod linalg;
pub mod model;
pub mod report;
pub mod series;
pub mod synth;
pub mod unitroot;

pub use error::{Error, Result};
