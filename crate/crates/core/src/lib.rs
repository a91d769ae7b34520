//! Algorithms for turning customer reviews into per-aspect perception
//! features and forecasting quarterly revenue growth from them.
//!
//! The crate is `no_std` (with `alloc`). Everything that touches files,
//! text formats or the command line lives in the `aspectcast` crate.
//!
//! Pipeline, bottom-up:
//!
//! - [`corpus`]: quarters, reviews, revenue series.
//! - [`aspect`]: the sixteen cloud aspects, keyword vocabularies and
//!   phrase matching.
//! - [`sentiment`]: lexicon + heuristic sentiment scoring with a
//!   normalized compound score.
//! - [`features`]: revenue growth, per-aspect perceptions, design matrix,
//!   chronological split.
//! - [`models`]: OLS, an LM-trained perceptron, nu-SVR and ARIMA behind
//!   one [`models::FittedModel`] contract, plus grid search.
//! - [`metrics`]: MSE, RMSE, Theil's U and backtesting.
#![cfg_attr(not(test), no_std)]
#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod aspect;
pub mod corpus;
mod error;
pub mod features;
pub mod linalg;
pub mod metrics;
pub mod models;
pub mod optim;
pub mod sentiment;
pub mod stats;

pub use error::{Error, Result};
