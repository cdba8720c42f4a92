//! Brute-force maximum-likelihood estimation over a space of candidate
//! ground truths.

use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::error::{Error, Result};
use crate::model::{BudgetAllocation, Instance, Profile, RuleOutcome};
use crate::noise::{likelihood, NoiseModel};
use crate::rational::Rational;
use crate::rule::{Limits, RuleId};
use crate::welfare::score;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum TruthSpace {
    /// Every feasible allocation; degenerate truths have likelihood 0.
    #[default]
    AllFeasible,
    ExhaustiveOnly,
    /// Feasible allocations the noise model is defined for.
    NondegenerateOnly,
}

impl TruthSpace {
    pub fn name(self) -> &'static str {
        match self {
            TruthSpace::AllFeasible => "all",
            TruthSpace::ExhaustiveOnly => "exhaustive",
            TruthSpace::NondegenerateOnly => "nondegenerate",
        }
    }

    pub fn candidates(
        self,
        model: NoiseModel,
        inst: &Instance,
        enumeration_cap: usize,
    ) -> Result<Vec<BudgetAllocation>> {
        let mut all = inst.enumerate_allocations(self == TruthSpace::ExhaustiveOnly, enumeration_cap)?;
        if self == TruthSpace::NondegenerateOnly {
            all.retain(|a| model.accepts(a));
        }
        if all.is_empty() {
            return Err(Error::EmptyTruthSpace);
        }
        Ok(all)
    }
}

impl fmt::Display for TruthSpace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for TruthSpace {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "all" | "all-feasible" => Ok(TruthSpace::AllFeasible),
            "exhaustive" | "exhaustive-only" => Ok(TruthSpace::ExhaustiveOnly),
            "nondegenerate" | "nondegenerate-only" => Ok(TruthSpace::NondegenerateOnly),
            _ => Err(Error::UnknownName(s.into())),
        }
    }
}

/// All truths in `space` maximising the likelihood of `prof`. If every
/// candidate has likelihood 0 the whole space is returned.
pub fn mle(
    model: NoiseModel,
    inst: &Instance,
    prof: &Profile,
    space: TruthSpace,
    enumeration_cap: usize,
) -> Result<RuleOutcome> {
    prof.check_against(inst)?;
    let candidates = space.candidates(model, inst, enumeration_cap)?;
    let mut scored = Vec::with_capacity(candidates.len());
    for c in candidates {
        let l = likelihood(model, inst, &c, prof)?;
        scored.push((c, l));
    }
    let best = scored.iter().map(|(_, l)| l).max().cloned();
    RuleOutcome::new(scored.into_iter().filter(|(_, l)| Some(l) == best.as_ref()).map(|(c, _)| c))
}

/// An allocation returned by only one side of an MLE/rule comparison.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Discrepancy {
    pub allocation: BudgetAllocation,
    pub likelihood: Rational,
    /// The rule's score, for argmax rules.
    pub score: Option<Rational>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MatchReport {
    pub mle: RuleOutcome,
    pub rule: RuleOutcome,
    pub only_mle: Vec<Discrepancy>,
    pub only_rule: Vec<Discrepancy>,
}

impl MatchReport {
    pub fn matches(&self) -> bool {
        self.only_mle.is_empty() && self.only_rule.is_empty()
    }
}

/// Compares the MLE over `space` with the rule's outcome. The rule's winners
/// are restricted to `space` first, so a rule matches the MLE on a space
/// exactly when it agrees with it there.
pub fn mle_matches_rule(
    model: NoiseModel,
    rule: RuleId,
    inst: &Instance,
    prof: &Profile,
    space: TruthSpace,
    limits: &Limits,
) -> Result<MatchReport> {
    let mle_out = mle(model, inst, prof, space, limits.enumeration_cap)?;
    let rule_out = rule.apply(inst, prof, limits)?;
    let describe = |a: &BudgetAllocation| -> Result<Discrepancy> {
        Ok(Discrepancy {
            allocation: a.clone(),
            likelihood: likelihood(model, inst, a, prof)?,
            score: rule.score_kind().map(|k| score(k, inst, prof, a).value),
        })
    };
    let in_space = |a: &BudgetAllocation| match space {
        TruthSpace::AllFeasible => true,
        TruthSpace::ExhaustiveOnly => inst.is_exhaustive(a),
        TruthSpace::NondegenerateOnly => model.accepts(a),
    };
    let only_mle = mle_out.iter().filter(|a| !rule_out.contains(a)).map(describe).collect::<Result<Vec<_>>>()?;
    let only_rule =
        rule_out.iter().filter(|a| !mle_out.contains(a) && in_space(a)).map(describe).collect::<Result<Vec<_>>>()?;
    Ok(MatchReport { mle: mle_out, rule: rule_out, only_mle, only_rule })
}
