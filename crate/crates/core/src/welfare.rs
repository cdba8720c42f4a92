//! Welfare-maximising argmax rules and the greedy cost approval rule.
//!
//! Nash scores are kept in product space: the score of an allocation is the
//! product of the agents' satisfactions, and 0 whenever some agent gets
//! nothing. Normalised scores divide each agent's satisfaction by `|π|` (or
//! `c(π)`); the empty allocation scores 0 under every normalised kind.

use alloc::collections::BTreeSet;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use num_bigint::BigInt;
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::model::{BudgetAllocation, Instance, Profile, ProjectSet, RuleOutcome};
use crate::rational::Rational;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ScoreKind {
    UtilCard,
    UtilCost,
    UtilNormCard,
    UtilNormCost,
    NashCard,
    NashCost,
    NashNormCard,
    NashNormCost,
}

impl ScoreKind {
    pub const ALL: [ScoreKind; 8] = [
        ScoreKind::UtilCard,
        ScoreKind::UtilCost,
        ScoreKind::UtilNormCard,
        ScoreKind::UtilNormCost,
        ScoreKind::NashCard,
        ScoreKind::NashCost,
        ScoreKind::NashNormCard,
        ScoreKind::NashNormCost,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ScoreKind::UtilCard => "util-card",
            ScoreKind::UtilCost => "util-cost",
            ScoreKind::UtilNormCard => "util-norm-card",
            ScoreKind::UtilNormCost => "util-norm-cost",
            ScoreKind::NashCard => "nash-card",
            ScoreKind::NashCost => "nash-cost",
            ScoreKind::NashNormCard => "nash-norm-card",
            ScoreKind::NashNormCost => "nash-norm-cost",
        }
    }

    pub fn is_nash(self) -> bool {
        matches!(self, ScoreKind::NashCard | ScoreKind::NashCost | ScoreKind::NashNormCard | ScoreKind::NashNormCost)
    }

    pub fn is_normalised(self) -> bool {
        matches!(
            self,
            ScoreKind::UtilNormCard | ScoreKind::UtilNormCost | ScoreKind::NashNormCard | ScoreKind::NashNormCost
        )
    }

    fn uses_cost(self) -> bool {
        matches!(self, ScoreKind::UtilCost | ScoreKind::UtilNormCost | ScoreKind::NashCost | ScoreKind::NashNormCost)
    }
}

impl fmt::Display for ScoreKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ScoreKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ScoreKind::ALL.into_iter().find(|k| k.name() == s).ok_or_else(|| Error::UnknownName(s.into()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Score {
    pub value: Rational,
    /// Set for a zero Nash product and for the empty allocation under a
    /// normalised kind.
    pub degenerate: bool,
}

/// Per-agent satisfaction `|A ∩ π|` or `c(A ∩ π)`.
fn satisfaction(kind: ScoreKind, inst: &Instance, approved: &ProjectSet, alloc: &BudgetAllocation) -> u64 {
    let common = approved.intersection(alloc.projects());
    if kind.uses_cost() {
        inst.cost_unchecked(&common)
    } else {
        common.len() as u64
    }
}

pub fn score(kind: ScoreKind, inst: &Instance, prof: &Profile, alloc: &BudgetAllocation) -> Score {
    let size = if kind.uses_cost() { alloc.cost() } else { alloc.len() as u64 };
    if kind.is_normalised() && size == 0 {
        return Score { value: Rational::zero(), degenerate: true };
    }
    let sats = prof.ballots().iter().map(|b| satisfaction(kind, inst, b.approved(), alloc));
    if kind.is_nash() {
        let product = sats.fold(BigInt::one(), |acc, s| acc * s);
        let value = if kind.is_normalised() {
            Rational::new(product, BigInt::from(size).pow(prof.len() as u32))
        } else {
            Rational::from_integer(product)
        };
        let degenerate = value.is_zero();
        Score { value, degenerate }
    } else {
        let total: u64 = sats.sum();
        let value = if kind.is_normalised() {
            Rational::new(total.into(), size.into())
        } else {
            Rational::from_integer(total.into())
        };
        Score { value, degenerate: false }
    }
}

/// All candidates achieving the maximum of `f`. `candidates` must be nonempty.
pub fn argmax_by<T, F>(candidates: impl IntoIterator<Item = BudgetAllocation>, mut f: F) -> Result<RuleOutcome>
where
    T: Ord,
    F: FnMut(&BudgetAllocation) -> T,
{
    let mut best: Option<T> = None;
    let mut winners = Vec::new();
    for alloc in candidates {
        let s = f(&alloc);
        match best.as_ref().map(|b| s.cmp(b)) {
            Some(core::cmp::Ordering::Less) => {}
            Some(core::cmp::Ordering::Equal) => winners.push(alloc),
            _ => {
                best = Some(s);
                winners.clear();
                winners.push(alloc);
            }
        }
    }
    RuleOutcome::new(winners)
}

/// `argmax_{π ∈ A(I)} f(I, A, π)` for a welfare score.
pub fn argmax_rule(kind: ScoreKind, inst: &Instance, prof: &Profile, enumeration_cap: usize) -> Result<RuleOutcome> {
    let candidates = inst.enumerate_allocations(false, enumeration_cap)?;
    argmax_by(candidates, |a| score(kind, inst, prof, a).value)
}

/// `n_p`: number of ballots approving the project with index `project`.
pub fn approval_score(prof: &Profile, project: usize) -> usize {
    prof.ballots().iter().filter(|b| b.approves(project)).count()
}

/// Approval score looked up by project id.
pub fn approval_score_of(inst: &Instance, prof: &Profile, id: &str) -> Result<usize> {
    let p = inst.index_of(id).ok_or_else(|| Error::UnknownProject(id.into()))?;
    Ok(approval_score(prof, p))
}

pub fn approval_scores(inst: &Instance, prof: &Profile) -> Vec<usize> {
    (0..inst.num_projects()).map(|p| approval_score(prof, p)).collect()
}

/// The greedy cost approval rule: every `GREED(▷)` over strict rankings that
/// respect approval scores.
///
/// Rankings are explored per tie group. A group member that no longer fits can
/// never fit later, and if all fitting members fit together their order is
/// irrelevant, so only genuinely conflicting members are branched on.
/// `branch_cap` bounds the number of distinct search states.
pub fn greedy_cost_approval(inst: &Instance, prof: &Profile, branch_cap: usize) -> Result<RuleOutcome> {
    let scores = approval_scores(inst, prof);
    let distinct: BTreeSet<usize> = scores.iter().copied().collect();
    let groups: Vec<ProjectSet> =
        distinct.iter().rev().map(|&s| (0..scores.len()).filter(|&p| scores[p] == s).collect()).collect();

    let mut results = BTreeSet::new();
    let mut seen = BTreeSet::new();
    let mut stack = alloc::vec![(0usize, groups[0].clone(), ProjectSet::new(), 0u64)];
    while let Some((group, pending, selected, spent)) = stack.pop() {
        if !seen.insert((group, pending.clone(), selected.clone())) {
            continue;
        }
        if seen.len() > branch_cap {
            return Err(Error::BranchLimit { cap: branch_cap });
        }
        let left = inst.budget() - spent;
        let fitting: ProjectSet = pending.iter().filter(|&p| inst.cost_of(p) <= left).collect();
        let fitting_cost = inst.cost_unchecked(&fitting);
        if fitting.is_empty() || fitting_cost <= left {
            let selected = selected.union(&fitting);
            let spent = spent + fitting_cost;
            match groups.get(group + 1) {
                Some(next) => stack.push((group + 1, next.clone(), selected, spent)),
                None => {
                    results.insert(BudgetAllocation::new(inst, selected)?);
                }
            }
            continue;
        }
        for p in fitting.iter() {
            let mut rest = fitting.clone();
            rest.remove(p);
            let mut sel = selected.clone();
            sel.insert(p);
            stack.push((group, rest, sel, spent + inst.cost_of(p)));
        }
    }
    RuleOutcome::new(results)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Ballot, DEFAULT_ENUMERATION_CAP};
    use crate::rational::{int, ratio};
    use alloc::vec;
    use proptest::prelude::*;

    fn two_unit() -> Instance {
        Instance::from_costs(&[1, 1], 2).unwrap()
    }

    fn outcome(inst: &Instance, sets: &[&[&str]]) -> RuleOutcome {
        RuleOutcome::from_ids(inst, sets).unwrap()
    }

    #[test]
    fn names_round_trip() {
        for k in ScoreKind::ALL {
            assert_eq!(k.name().parse::<ScoreKind>().unwrap(), k);
        }
        assert!("nash".parse::<ScoreKind>().is_err());
    }

    #[test]
    fn score_examples() {
        let inst = two_unit();
        let prof = Profile::from_ids(&inst, &[&["p1"], &["p2"]]).unwrap();
        let both = BudgetAllocation::from_ids(&inst, &["p1", "p2"]).unwrap();
        assert_eq!(score(ScoreKind::UtilCard, &inst, &prof, &both).value, int(2));

        let single = Profile::from_ids(&inst, &[&["p1"]]).unwrap();
        let p2 = BudgetAllocation::from_ids(&inst, &["p2"]).unwrap();
        let s = score(ScoreKind::NashCard, &inst, &single, &p2);
        assert_eq!(s.value, int(0));
        assert!(s.degenerate);

        let s = score(ScoreKind::UtilNormCard, &inst, &single, &BudgetAllocation::empty());
        assert_eq!(s.value, int(0));
        assert!(s.degenerate);
    }

    #[test]
    fn normalised_nash_prefers_the_shared_project() {
        // b = 4, P = {p*, p1..p4}; A1 = {p*, p1, p3}, A2 = {p*, p2, p4}
        let inst = Instance::from_costs(&[1, 1, 1, 1, 1], 4).unwrap();
        let prof = Profile::from_ids(&inst, &[&["p1", "p2", "p4"], &["p1", "p3", "p5"]]).unwrap();
        let star = BudgetAllocation::from_ids(&inst, &["p1"]).unwrap();
        let rest = BudgetAllocation::from_ids(&inst, &["p2", "p3", "p4", "p5"]).unwrap();
        assert_eq!(score(ScoreKind::NashNormCard, &inst, &prof, &star).value, int(1));
        assert_eq!(score(ScoreKind::NashNormCard, &inst, &prof, &rest).value, ratio(1, 4));
        let out = argmax_rule(ScoreKind::NashNormCard, &inst, &prof, DEFAULT_ENUMERATION_CAP).unwrap();
        assert_eq!(out, outcome(&inst, &[&["p1"]]));
        let out = argmax_rule(ScoreKind::NashNormCost, &inst, &prof, DEFAULT_ENUMERATION_CAP).unwrap();
        assert_eq!(out, outcome(&inst, &[&["p1"]]));
    }

    #[test]
    fn two_project_outcomes() {
        let inst = two_unit();
        let run = |kind, ballot: &[&str]| {
            let prof = Profile::new(vec![Ballot::from_ids(&inst, ballot).unwrap()]);
            argmax_rule(kind, &inst, &prof, DEFAULT_ENUMERATION_CAP).unwrap()
        };
        for kind in [ScoreKind::NashCard, ScoreKind::UtilCard] {
            assert_eq!(run(kind, &["p1"]), outcome(&inst, &[&["p1"], &["p1", "p2"]]));
            assert_eq!(run(kind, &["p2"]), outcome(&inst, &[&["p2"], &["p1", "p2"]]));
            assert_eq!(run(kind, &["p1", "p2"]), outcome(&inst, &[&["p1", "p2"]]));
            assert_eq!(run(kind, &[]), outcome(&inst, &[&[], &["p1"], &["p2"], &["p1", "p2"]]));
        }
        // scores 0, 1, 0, 1/2 over ∅, {p1}, {p2}, {p1,p2}
        assert_eq!(run(ScoreKind::NashNormCard, &["p1"]), outcome(&inst, &[&["p1"]]));
    }

    #[test]
    fn approval_score_examples() {
        let inst = Instance::from_costs(&[1, 1, 1, 1], 3).unwrap();
        let a1 = Profile::from_ids(
            &inst,
            &[&["p1"], &["p1", "p3", "p4"], &["p2", "p3", "p4"], &["p2", "p3", "p4"], &["p2", "p3", "p4"]],
        )
        .unwrap();
        assert_eq!(approval_score_of(&inst, &a1, "p3").unwrap(), 4);
        let none = Profile::from_ids(&inst, &[&["p1"]]).unwrap();
        assert_eq!(approval_score_of(&inst, &none, "p4").unwrap(), 0);
        assert!(approval_score_of(&inst, &none, "q").is_err());
    }

    fn score_profile(inst: &Instance, scores: &[usize]) -> Profile {
        let mut prof = Profile::default();
        for (p, &s) in scores.iter().enumerate() {
            for _ in 0..s {
                prof.push(Ballot::new(inst, ProjectSet::from_iter([p])).unwrap());
            }
        }
        prof
    }

    #[test]
    fn greedy_examples() {
        let inst = Instance::from_costs(&[2, 2, 3], 4).unwrap();
        let a = score_profile(&inst, &[10, 1, 9]);
        let b = score_profile(&inst, &[1, 10, 9]);
        assert_eq!(greedy_cost_approval(&inst, &a, 10_000).unwrap(), outcome(&inst, &[&["p1", "p2"]]));
        assert_eq!(greedy_cost_approval(&inst, &b, 10_000).unwrap(), outcome(&inst, &[&["p1", "p2"]]));
        assert_eq!(approval_score_of(&inst, &a.concat(&b), "p3").unwrap(), 18);
        assert_eq!(greedy_cost_approval(&inst, &a.concat(&b), 10_000).unwrap(), outcome(&inst, &[&["p3"]]));
    }

    #[test]
    fn greedy_skips_an_overflowing_project() {
        let inst = Instance::from_costs(&[3, 2, 1], 4).unwrap();
        let prof = score_profile(&inst, &[3, 2, 1]);
        assert_eq!(greedy_cost_approval(&inst, &prof, 100).unwrap(), outcome(&inst, &[&["p1", "p3"]]));
    }

    #[test]
    fn greedy_ties_branch() {
        let inst = Instance::from_costs(&[2, 2, 2], 4).unwrap();
        let prof = Profile::from_ids::<&str>(&inst, &[&[]]).unwrap();
        let out = greedy_cost_approval(&inst, &prof, 100).unwrap();
        assert_eq!(out, outcome(&inst, &[&["p1", "p2"], &["p1", "p3"], &["p2", "p3"]]));
        assert_eq!(greedy_cost_approval(&inst, &prof, 2), Err(Error::BranchLimit { cap: 2 }));
    }

    fn small_instance(unit: bool) -> impl Strategy<Value = (Instance, Profile)> {
        (1usize..=5, 1u64..=4).prop_flat_map(move |(n, l)| {
            let costs = if unit { Just(vec![l; n]).boxed() } else { proptest::collection::vec(1u64..=4, n).boxed() };
            (costs, 1u64..=6, proptest::collection::vec(0u64..(1 << n), 1..6)).prop_map(move |(costs, k, masks)| {
                let budget = if unit { k * costs[0] } else { k };
                let inst = Instance::from_costs(&costs, budget).unwrap();
                let prof = Profile::new(
                    masks.into_iter().map(|m| Ballot::new(&inst, ProjectSet::from_mask(m)).unwrap()).collect(),
                );
                (inst, prof)
            })
        })
    }

    proptest! {
        #[test]
        fn greedy_equals_exhaustive_util_card_on_unit_cost((inst, prof) in small_instance(true)) {
            let greedy = greedy_cost_approval(&inst, &prof, 10_000).unwrap();
            let util = argmax_rule(ScoreKind::UtilCard, &inst, &prof, DEFAULT_ENUMERATION_CAP).unwrap();
            let filtered: Vec<_> = util.iter().filter(|a| inst.is_exhaustive(a)).cloned().collect();
            prop_assert_eq!(greedy, RuleOutcome::new(filtered).unwrap());
        }

        #[test]
        fn unit_cost_card_and_cost_coincide((inst, prof) in small_instance(true)) {
            let run = |k| argmax_rule(k, &inst, &prof, DEFAULT_ENUMERATION_CAP).unwrap();
            prop_assert_eq!(run(ScoreKind::UtilCard), run(ScoreKind::UtilCost));
            prop_assert_eq!(run(ScoreKind::NashCard), run(ScoreKind::NashCost));
        }

        #[test]
        fn greedy_is_exhaustive((inst, prof) in small_instance(false)) {
            let out = greedy_cost_approval(&inst, &prof, 10_000).unwrap();
            prop_assert!(out.iter().all(|a| inst.is_exhaustive(a)));
        }

        #[test]
        fn welfare_winners_exhaustive_when_all_projects_approved((inst, prof) in small_instance(false)) {
            let covered = prof.ballots().iter().fold(ProjectSet::new(), |acc, b| acc.union(b.approved()));
            prop_assume!(covered == inst.all_projects());
            for kind in [ScoreKind::UtilCard, ScoreKind::UtilCost] {
                let out = argmax_rule(kind, &inst, &prof, DEFAULT_ENUMERATION_CAP).unwrap();
                prop_assert!(out.iter().all(|a| inst.is_exhaustive(a)));
            }
            for kind in [ScoreKind::NashCard, ScoreKind::NashCost] {
                let out = argmax_rule(kind, &inst, &prof, DEFAULT_ENUMERATION_CAP).unwrap();
                for a in out.iter() {
                    if !score(kind, &inst, &prof, a).degenerate {
                        prop_assert!(inst.is_exhaustive(a));
                    }
                }
            }
        }
    }
}
