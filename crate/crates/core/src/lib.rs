//! Conjugate equations between interval map systems: exact linear-fractional
//! analysis, the conjugacy itself, relative-entropy optimization, the driving
//! Markov chain and Hausdorff dimension upper bounds.

pub mod cli_io;
pub mod conjugacy;
pub mod dim_certificate;
pub mod entropy_opt;
pub mod error;
pub mod exact_maps;
pub mod markov_sim;
pub mod par;
pub mod rat;
pub mod spectral_y;

pub use error::{Error, Result};
