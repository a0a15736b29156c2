//! Certified deterministic generalization bounds for weighted majority votes.
//!
//! A weighted majority vote is scored by a posterior distribution `Q` over its
//! voter weights. Classical PAC-Bayes certificates bound the *stochastic* risk
//! (the `Q`-expected error of a randomly drawn vote); this crate converts those
//! into *deterministic* certificates for the single vote built from the
//! posterior mean, by pairing a stochastic upper bound with deterministic lower
//! bounds on the conditional risks derived from the number-partitioning
//! problem. The resulting "partition bound" is assembled as
//! `(L̃ − b̃) / (c̃ − b̃)` and is never worse than the classical factor-2 bound.
//!
//! The crate ships:
//!
//! * [`special`] — binary kl divergence and its two-sided inversion, the
//!   normal upper tail, the regularized incomplete beta function, and a
//!   Monte-Carlo multivariate-normal CDF;
//! * [`partition`] — certified solvers for the two partition-problem variants
//!   the bounds consume (sound lower bounds despite floating-point weights);
//! * [`pac_bayes`] — Seeger, conditional and cross-split kl certificates plus
//!   closed-form KL divergences for the three posterior families;
//! * [`ensemble`] — dataset ingestion, decision stumps, small random forests,
//!   and the prediction/error matrices every bound consumes;
//! * [`s2d`] — the stochastic risks of the Categorical / Dirichlet / Gaussian
//!   families, conditional risk splits, deterministic lower bounds, and the
//!   partition-bound assembly;
//! * [`baselines`] — first-order, second-order (tandem), binomial, C-bound and
//!   VC-dimension comparison bounds;
//! * [`optimizer`] — an Adam trainer for the bound objective and the three
//!   post-training tightening heuristics;
//! * [`oracle`] — independent Monte-Carlo and brute-force oracles used by the
//!   test suite and the `oracle-check` command, never by the bound pipeline;
//! * [`experiment`] — the desk-scale experiment runner and report emission.
//!
//! Heavy inner loops (Monte-Carlo estimation, per-example risk profiles, tree
//! training, sweep grids) run data-parallel through [`exec`] when the default
//! `parallel` feature is enabled, and sequentially otherwise.

pub mod baselines;
pub mod ensemble;
mod error;
pub mod exec;
pub mod experiment;
pub mod optimizer;
pub mod oracle;
pub mod pac_bayes;
pub mod partition;
pub mod report;
pub mod s2d;
pub mod special;
pub mod synth;

pub use error::{Error, Result};
pub use pac_bayes::{Family, Posterior, Prior};
pub use report::BoundReport;
