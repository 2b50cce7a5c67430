//! Simulator for a cavity-resonated backward-wave SPDC biphoton source in a
//! periodically poled crystal.

// `!(x > 0.0)` style guards are used on purpose so that NaN is rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod biphoton;
pub mod cavity;
pub mod cli;
pub mod config;
pub mod dispersion;
pub mod error;
pub mod numerics;
pub mod output;
pub mod oracle;
pub mod pairgen;
pub mod source;
pub mod phasematch;
pub mod plot;
pub mod units;

pub use error::{Category, Error, Result};
