//! Multilingual conflicting-needle haystack evaluation.
//!
//! The crate covers the whole batch pipeline: deterministic corpus
//! synthesis ([`corpus`]), querying answer providers ([`backends`],
//! [`runner`]), outcome classification ([`classify`]), statistical
//! inference of per-language selection bias ([`inference`]) and table
//! rendering ([`report`]). [`pipeline`] wires the stages to on-disk
//! artifacts for the command-line tool.

pub mod backends;
pub mod classify;
pub mod corpus;
pub mod error;
pub mod inference;
pub mod lang;
pub mod pipeline;
pub mod report;
pub mod rng;
pub mod runner;
mod util;

pub use error::{Error, Result};
pub use lang::LanguageCode;
