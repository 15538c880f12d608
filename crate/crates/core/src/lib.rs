//! Pre- and post-selected quantum systems in finite dimension.
//!
//! - [`hilbert`]: dense states, operators, tensor products, spectral projectors
//! - [`tsvf`]: two-state vectors, ABL probabilities, weak values, elements of reality
//! - [`measure`]: projective and Gaussian-pointer measurement simulation
//! - [`scenarios`]: built-in three-box and singlet setups, scenario files
//! - [`cli`]: report generation behind the `tsvf` binary

pub mod cli;
pub mod error;
pub mod hilbert;
pub mod measure;
pub mod scenarios;
pub mod tsvf;

pub use error::{Error, ErrorKind, Result};
