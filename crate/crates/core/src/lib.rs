//! Bayesian model comparison: closed-form and quadrature Bayes factors,
//! mixture-weight inference for Poisson versus Geometric counts, predictive
//! calibration of decision statistics and a seed-pinned experiment harness.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod calibration;
pub mod distributions;
pub mod evidence;
pub mod experiments;
pub mod mixture;
pub mod quadrature;
pub mod special;

pub use distributions::{CountDataset, CountFamily, RngSeed, SeededRng};
pub use evidence::{LogBayesFactor, LogEvidence, Method, ModelWeights, NormalSummary};
