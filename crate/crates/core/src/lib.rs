//! Algorithms and exact-expectation oracles for stochastic contextual
//! bandits with sparse rewards.
//!
//! The crate provides:
//!
//! - [`env`]: finite-support environments with validated sparsity
//!   certificates, plus exact policy-value oracles ([`policy`]).
//! - [`gen`]: synthetic instance generators, including the two-context
//!   lower-bound construction.
//! - [`mwu`]: log-space Hedge over a policy class with an executable form of
//!   its constant-factor regret bound.
//! - [`lve`]: the two-phase low-variance-exploration algorithm for the
//!   bandit setting, with exact variance and unbiasedness diagnostics.
//! - [`ccsb`]: its extension to combinatorial semi-bandits over m-subsets.
//! - [`exo`]: a desk-scale exploration-by-optimization loop, the convex
//!   re-parametrized minimax solver behind it, and numerical estimation of
//!   the decision-estimation coefficient.
//! - [`oracles`]: executable lemma checkers (harmonic sum, multiplicative
//!   Freedman coverage) alongside re-exports of the Hedge-regret and
//!   Hellinger-variance checkers.
//!
//! Everything stochastic draws from splittable [`rng::RngStream`]s, so runs,
//! sweeps, and tests are reproducible bit for bit.

pub mod ccsb;
pub mod env;
pub mod exo;
pub mod gen;
pub mod lve;
pub mod mwu;
pub mod oracle;
pub mod oracles;
pub mod policy;
pub mod report;
pub mod rng;

pub use env::{ActionId, ActionSpace, ContextId, Environment, RewardVector, Sparsity, SparsityMode};
pub use policy::{Policy, PolicyClass, SubsetAction, SubsetPolicy, SubsetPolicyClass};
pub use report::RunReport;
pub use rng::RngStream;
