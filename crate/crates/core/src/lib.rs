//! Exact-arithmetic participatory budgeting: approval-based PB rules, ballot
//! noise models, brute-force maximum-likelihood estimation and checkers for
//! weak reinforcement.
//!
//! Every quantity that a rule or a likelihood depends on is an exact rational
//! ([`Rational`]); there is no floating point anywhere in rule evaluation or
//! likelihood computation. The crate is `no_std` and only needs `alloc`, so IO,
//! file formats and the command-line front end live in the companion `pbtruth`
//! crate.
#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod checks;
pub mod error;
pub mod mle;
pub mod model;
pub mod noise;
pub mod proportional;
pub mod rational;
pub mod rule;
pub mod welfare;

pub use error::{Error, Result};
pub use model::{
    Ballot, BudgetAllocation, Instance, Profile, Project, ProjectSet, RuleOutcome, DEFAULT_ENUMERATION_CAP,
};
pub use rational::Rational;
pub use rule::{Limits, RuleId, DEFAULT_BRANCH_CAP};
