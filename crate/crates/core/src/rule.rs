//! Uniform access to every PB rule by name.

use core::fmt;
use core::str::FromStr;

use crate::error::{Error, Result};
use crate::model::{Instance, Profile, RuleOutcome, DEFAULT_ENUMERATION_CAP};
use crate::proportional::{mes, sequential_phragmen, Satisfaction};
use crate::welfare::{argmax_rule, greedy_cost_approval, ScoreKind};

/// Default cap on distinct tie-branching states.
pub const DEFAULT_BRANCH_CAP: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Limits {
    /// Largest project count for brute-force enumeration.
    pub enumeration_cap: usize,
    pub branch_cap: usize,
}

impl Default for Limits {
    fn default() -> Self {
        Self { enumeration_cap: DEFAULT_ENUMERATION_CAP, branch_cap: DEFAULT_BRANCH_CAP }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum RuleId {
    Welfare(ScoreKind),
    Greedy,
    Phragmen,
    MesCard,
    MesCost,
}

impl RuleId {
    pub const ALL: [RuleId; 12] = [
        RuleId::Welfare(ScoreKind::UtilCard),
        RuleId::Welfare(ScoreKind::UtilCost),
        RuleId::Welfare(ScoreKind::UtilNormCard),
        RuleId::Welfare(ScoreKind::UtilNormCost),
        RuleId::Welfare(ScoreKind::NashCard),
        RuleId::Welfare(ScoreKind::NashCost),
        RuleId::Welfare(ScoreKind::NashNormCard),
        RuleId::Welfare(ScoreKind::NashNormCost),
        RuleId::Greedy,
        RuleId::Phragmen,
        RuleId::MesCard,
        RuleId::MesCost,
    ];

    pub fn name(self) -> &'static str {
        match self {
            RuleId::Welfare(k) => k.name(),
            RuleId::Greedy => "greedy",
            RuleId::Phragmen => "phragmen",
            RuleId::MesCard => "mes-card",
            RuleId::MesCost => "mes-cost",
        }
    }

    pub fn score_kind(self) -> Option<ScoreKind> {
        match self {
            RuleId::Welfare(k) => Some(k),
            _ => None,
        }
    }

    pub fn apply(self, inst: &Instance, prof: &Profile, limits: &Limits) -> Result<RuleOutcome> {
        match self {
            RuleId::Welfare(k) => argmax_rule(k, inst, prof, limits.enumeration_cap),
            RuleId::Greedy => greedy_cost_approval(inst, prof, limits.branch_cap),
            RuleId::Phragmen => sequential_phragmen(inst, prof, limits.branch_cap),
            RuleId::MesCard => mes(inst, prof, &Satisfaction::Card, limits.branch_cap),
            RuleId::MesCost => mes(inst, prof, &Satisfaction::Cost, limits.branch_cap),
        }
    }
}

impl fmt::Display for RuleId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for RuleId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        RuleId::ALL.into_iter().find(|r| r.name() == s).ok_or_else(|| Error::UnknownName(s.into()))
    }
}
