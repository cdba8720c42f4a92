//! Checkers for weak reinforcement and the monotonic-argmax conditions, a
//! seeded fuzzer, and the built-in counterexample fixtures.

use alloc::string::String;
use alloc::vec::Vec;
use core::cmp::Ordering;

use rand::Rng;

use crate::error::{Error, Result};
use crate::model::{Ballot, BudgetAllocation, Instance, Profile, ProjectSet, RuleOutcome};
use crate::noise::{all_ballots, stream_rng};
use crate::rule::{Limits, RuleId};
use crate::welfare::{score, ScoreKind};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ViolationReport {
    pub rule: RuleId,
    pub instance: Instance,
    pub profile_a: Profile,
    pub profile_b: Profile,
    pub outcome_a: RuleOutcome,
    pub outcome_b: RuleOutcome,
    pub outcome_joint: RuleOutcome,
}

impl ViolationReport {
    /// True when no winner on the joint profile was a winner on `A`, so no
    /// tie-breaking of the rule can repair the violation.
    pub fn disjoint(&self) -> bool {
        self.outcome_joint.iter().all(|w| !self.outcome_a.contains(w))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Reinforcement {
    Pass,
    /// `F(A) != F(A')`, so the implication holds vacuously.
    NotApplicable,
    Violation(ViolationReport),
}

pub fn check_weak_reinforcement(
    rule: RuleId,
    inst: &Instance,
    a: &Profile,
    b: &Profile,
    limits: &Limits,
) -> Result<Reinforcement> {
    a.check_against(inst)?;
    b.check_against(inst)?;
    let fa = rule.apply(inst, a, limits)?;
    let fb = rule.apply(inst, b, limits)?;
    if fa != fb {
        return Ok(Reinforcement::NotApplicable);
    }
    let joint = rule.apply(inst, &a.concat(b), limits)?;
    if joint == fa {
        return Ok(Reinforcement::Pass);
    }
    Ok(Reinforcement::Violation(ViolationReport {
        rule,
        instance: inst.clone(),
        profile_a: a.clone(),
        profile_b: b.clone(),
        outcome_a: fa,
        outcome_b: fb,
        outcome_joint: joint,
    }))
}

/// Shape of the random instances and profiles drawn by the fuzzer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FuzzParams {
    pub min_projects: usize,
    pub max_projects: usize,
    /// Costs are drawn from `1..=max_cost`; 1 gives unit-cost instances.
    pub max_cost: u64,
    /// Agents per profile are drawn from `1..=max_agents`.
    pub max_agents: usize,
}

impl Default for FuzzParams {
    fn default() -> Self {
        Self { min_projects: 2, max_projects: 4, max_cost: 1, max_agents: 9 }
    }
}

impl FuzzParams {
    fn validate(&self) -> Result<()> {
        if self.min_projects == 0 {
            return Err(Error::InvalidGenerator("min_projects must be at least 1"));
        }
        if self.min_projects > self.max_projects {
            return Err(Error::InvalidGenerator("min_projects exceeds max_projects"));
        }
        if self.max_projects > 16 {
            return Err(Error::InvalidGenerator("max_projects must be at most 16"));
        }
        if self.max_cost == 0 {
            return Err(Error::InvalidGenerator("max_cost must be at least 1"));
        }
        if self.max_agents == 0 {
            return Err(Error::InvalidGenerator("max_agents must be at least 1"));
        }
        Ok(())
    }
}

/// The random `(I, A, A')` triple of one fuzz trial.
pub fn fuzz_case(params: &FuzzParams, seed: u64, trial: u64) -> Result<(Instance, Profile, Profile)> {
    params.validate()?;
    let mut rng = stream_rng(seed, trial, 0);
    let n = rng.gen_range(params.min_projects..=params.max_projects);
    let costs: Vec<u64> = (0..n).map(|_| rng.gen_range(1..=params.max_cost)).collect();
    let total: u64 = costs.iter().sum();
    let budget = rng.gen_range(1..=total);
    let inst = Instance::from_costs(&costs, budget)?;
    // Inclusion probability varies per profile so that both sparse and dense
    // profiles show up.
    let profile = |rng: &mut rand_chacha::ChaCha8Rng| -> Result<Profile> {
        let agents = rng.gen_range(1..=params.max_agents);
        let density = rng.gen_range(1..=3u32);
        let mut ballots = Vec::with_capacity(agents);
        for _ in 0..agents {
            let set: ProjectSet = (0..n).filter(|_| rng.gen_range(0..4) < density).collect();
            ballots.push(Ballot::new(&inst, set)?);
        }
        Ok(Profile::new(ballots))
    };
    let a = profile(&mut rng)?;
    let b = profile(&mut rng)?;
    Ok((inst, a, b))
}

pub fn fuzz_trial(rule: RuleId, params: &FuzzParams, seed: u64, trial: u64, limits: &Limits) -> Result<Reinforcement> {
    let (inst, a, b) = fuzz_case(params, seed, trial)?;
    check_weak_reinforcement(rule, &inst, &a, &b, limits)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FuzzSummary {
    pub rule: RuleId,
    pub trials: u64,
    /// Trials where `F(A) = F(A')`.
    pub applicable: u64,
    pub violations: u64,
    pub first_violation: Option<(u64, ViolationReport)>,
}

impl FuzzSummary {
    pub fn new(rule: RuleId) -> Self {
        Self { rule, trials: 0, applicable: 0, violations: 0, first_violation: None }
    }

    /// Folds in the result of `trial`. Trials must be recorded in order.
    pub fn record(&mut self, trial: u64, result: Reinforcement) {
        self.trials += 1;
        match result {
            Reinforcement::NotApplicable => {}
            Reinforcement::Pass => self.applicable += 1,
            Reinforcement::Violation(v) => {
                self.applicable += 1;
                self.violations += 1;
                if self.first_violation.is_none() {
                    self.first_violation = Some((trial, v));
                }
            }
        }
    }
}

pub fn fuzz_weak_reinforcement(
    rule: RuleId,
    params: &FuzzParams,
    trials: u64,
    seed: u64,
    limits: &Limits,
) -> Result<FuzzSummary> {
    if trials == 0 {
        return Err(Error::ZeroTrials);
    }
    params.validate()?;
    let mut summary = FuzzSummary::new(rule);
    for t in 0..trials {
        summary.record(t, fuzz_trial(rule, params, seed, t, limits)?);
    }
    Ok(summary)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Monotonicity {
    Pass,
    /// Strict preference on both profiles is lost on the concatenation.
    Condition1,
    /// Equality on both profiles is lost on the concatenation.
    Condition2,
}

/// Evaluates both monotonic-argmax conditions for an arbitrary score `f`, in
/// both directions of the pair `(x, y)`.
pub fn check_monotonic_with<T, F>(
    mut f: F,
    a: &Profile,
    b: &Profile,
    x: &BudgetAllocation,
    y: &BudgetAllocation,
) -> Result<Monotonicity>
where
    T: Ord,
    F: FnMut(&Profile, &BudgetAllocation) -> Result<T>,
{
    let joint = a.concat(b);
    let on_a = f(a, x)?.cmp(&f(a, y)?);
    let on_b = f(b, x)?.cmp(&f(b, y)?);
    let on_joint = f(&joint, x)?.cmp(&f(&joint, y)?);
    if on_a == on_b && on_a != on_joint {
        return Ok(match on_a {
            Ordering::Equal => Monotonicity::Condition2,
            _ => Monotonicity::Condition1,
        });
    }
    Ok(Monotonicity::Pass)
}

pub fn check_monotonic_conditions(
    kind: ScoreKind,
    inst: &Instance,
    a: &Profile,
    b: &Profile,
    x: &BudgetAllocation,
    y: &BudgetAllocation,
) -> Result<Monotonicity> {
    a.check_against(inst)?;
    b.check_against(inst)?;
    inst.check_members(x.projects())?;
    inst.check_members(y.projects())?;
    check_monotonic_with(|p, alloc| Ok(score(kind, inst, p, alloc).value), a, b, x, y)
}

/// The indicator score of a rule: 1 on its winners, 0 elsewhere. Every rule is
/// the argmax of its indicator, so this is monotonic only for rules that
/// satisfy weak reinforcement.
pub fn indicator_score<'a>(
    rule: RuleId,
    inst: &'a Instance,
    limits: &'a Limits,
) -> impl FnMut(&Profile, &BudgetAllocation) -> Result<u8> + 'a {
    move |prof, alloc| Ok(u8::from(rule.apply(inst, prof, limits)?.contains(alloc)))
}

/// Per-ballot relation between `P(A | truth_a)` and `P(A | truth_b)` forced on
/// any noise model for which a rule is the MLE.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ForcedRelation {
    pub ballot: Ballot,
    pub outcome: RuleOutcome,
    /// `None` when neither truth wins on the ballot.
    pub relation: Option<Ordering>,
}

/// A pair of truths whose single-ballot outcomes force
/// `P(A | truth_a) >= P(A | truth_b)` for every ballot, strictly for at least
/// one. Both distributions cannot then sum to 1.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConflictWitness {
    pub rule: RuleId,
    pub instance: Instance,
    pub truth_a: BudgetAllocation,
    pub truth_b: BudgetAllocation,
    pub relations: Vec<ForcedRelation>,
}

fn forced_relations(
    outcomes: &[(Ballot, RuleOutcome)],
    x: &BudgetAllocation,
    y: &BudgetAllocation,
) -> Vec<ForcedRelation> {
    outcomes
        .iter()
        .map(|(ballot, out)| {
            let relation = match (out.contains(x), out.contains(y)) {
                (true, true) => Some(Ordering::Equal),
                (true, false) => Some(Ordering::Greater),
                (false, true) => Some(Ordering::Less),
                (false, false) => None,
            };
            ForcedRelation { ballot: ballot.clone(), outcome: out.clone(), relation }
        })
        .collect()
}

fn is_conflict(relations: &[ForcedRelation]) -> bool {
    relations.iter().all(|r| matches!(r.relation, Some(Ordering::Equal | Ordering::Greater)))
        && relations.iter().any(|r| r.relation == Some(Ordering::Greater))
}

pub fn check_normalisation_conflict(
    rule: RuleId,
    inst: &Instance,
    truth_a: &BudgetAllocation,
    truth_b: &BudgetAllocation,
    limits: &Limits,
) -> Result<Option<ConflictWitness>> {
    inst.check_members(truth_a.projects())?;
    inst.check_members(truth_b.projects())?;
    let outcomes = single_ballot_outcomes(rule, inst, limits)?;
    let relations = forced_relations(&outcomes, truth_a, truth_b);
    Ok(is_conflict(&relations).then(|| ConflictWitness {
        rule,
        instance: inst.clone(),
        truth_a: truth_a.clone(),
        truth_b: truth_b.clone(),
        relations,
    }))
}

/// Searches every ordered pair of feasible allocations for a conflict.
pub fn find_normalisation_conflict(rule: RuleId, inst: &Instance, limits: &Limits) -> Result<Option<ConflictWitness>> {
    let outcomes = single_ballot_outcomes(rule, inst, limits)?;
    let allocs = inst.enumerate_allocations(false, limits.enumeration_cap)?;
    for x in &allocs {
        for y in &allocs {
            if x == y {
                continue;
            }
            let relations = forced_relations(&outcomes, x, y);
            if is_conflict(&relations) {
                return Ok(Some(ConflictWitness {
                    rule,
                    instance: inst.clone(),
                    truth_a: x.clone(),
                    truth_b: y.clone(),
                    relations,
                }));
            }
        }
    }
    Ok(None)
}

fn single_ballot_outcomes(rule: RuleId, inst: &Instance, limits: &Limits) -> Result<Vec<(Ballot, RuleOutcome)>> {
    all_ballots(inst, limits.enumeration_cap)?
        .into_iter()
        .map(|b| {
            let out = rule.apply(inst, &Profile::new(alloc::vec![b.clone()]), limits)?;
            Ok((b, out))
        })
        .collect()
}

pub mod fixtures {
    //! The counterexample instances behind each impossibility result.

    use super::*;
    use crate::welfare::ScoreKind;
    use alloc::string::ToString;
    use alloc::vec;

    #[derive(Debug, Clone, PartialEq, Eq)]
    pub enum Expectation {
        /// `F(A) = F(A')` for every listed profile, yet the concatenation of
        /// the profiles yields `joint`.
        WeakReinforcement { joint: RuleOutcome },
        /// Single-ballot profiles whose outcomes leave no consistent
        /// distribution for the two truths.
        NormalisationConflict { truth_a: BudgetAllocation, truth_b: BudgetAllocation },
    }

    #[derive(Debug, Clone, PartialEq, Eq)]
    pub struct Fixture {
        pub name: String,
        /// Rules the fixture refutes.
        pub rules: Vec<RuleId>,
        pub instance: Instance,
        pub profiles: Vec<Profile>,
        pub expected: Vec<RuleOutcome>,
        pub expectation: Expectation,
    }

    impl Fixture {
        pub fn joint_profile(&self) -> Profile {
            self.profiles.iter().fold(Profile::default(), |acc, p| acc.concat(p))
        }
    }

    #[derive(Debug, Clone, PartialEq, Eq)]
    pub enum Witness {
        Violation(ViolationReport),
        Conflict(ConflictWitness),
    }

    #[derive(Debug, Clone, PartialEq, Eq)]
    pub struct RuleCheck {
        pub rule: RuleId,
        pub outcomes: Vec<RuleOutcome>,
        pub joint: Option<RuleOutcome>,
        /// Every computed outcome equals the fixture's expectation.
        pub reproduced: bool,
        pub witness: Option<Witness>,
    }

    #[derive(Debug, Clone, PartialEq, Eq)]
    pub struct FixtureReport {
        pub name: String,
        pub checks: Vec<RuleCheck>,
    }

    impl FixtureReport {
        pub fn reproduced(&self) -> bool {
            self.checks.iter().all(|c| c.reproduced && c.witness.is_some())
        }
    }

    fn ids(inst: &Instance, rows: &[&[&str]]) -> Profile {
        Profile::from_ids(inst, rows).expect("fixture ballots are valid")
    }

    fn outcome(inst: &Instance, rows: &[&[&str]]) -> RuleOutcome {
        RuleOutcome::from_ids(inst, rows).expect("fixture outcomes are feasible")
    }

    /// Profile of single-project ballots with the given approval scores.
    pub fn score_profile(inst: &Instance, scores: &[usize]) -> Profile {
        let mut prof = Profile::default();
        for (p, &s) in scores.iter().enumerate() {
            for _ in 0..s {
                prof.push(Ballot::new(inst, ProjectSet::from_iter([p])).expect("index in range"));
            }
        }
        prof
    }

    pub fn phragmen() -> Fixture {
        let inst = Instance::from_costs(&[1, 1, 1, 1], 3).expect("valid");
        let a1 =
            ids(&inst, &[&["p1"], &["p1", "p3", "p4"], &["p2", "p3", "p4"], &["p2", "p3", "p4"], &["p2", "p3", "p4"]]);
        let a2 = ids(&inst, &[&["p2"], &["p1", "p4"], &["p1", "p3"], &["p1", "p3"], &["p1", "p3", "p4"]]);
        let pi = outcome(&inst, &[&["p1", "p3", "p4"]]);
        Fixture {
            name: "phragmen".to_string(),
            rules: vec![RuleId::Phragmen],
            expected: vec![pi.clone(), pi],
            expectation: Expectation::WeakReinforcement { joint: outcome(&inst, &[&["p1", "p2", "p3"]]) },
            profiles: vec![a1, a2],
            instance: inst,
        }
    }

    pub fn mes() -> Fixture {
        let inst = Instance::from_costs(&[1, 1], 2).expect("valid");
        let both = outcome(&inst, &[&["p1", "p2"]]);
        Fixture {
            name: "mes".to_string(),
            rules: vec![RuleId::MesCard, RuleId::MesCost],
            profiles: vec![ids(&inst, &[&["p1"], &["p2"]]), ids(&inst, &[&["p1", "p2"], &["p1", "p2"]])],
            expected: vec![both.clone(), both],
            expectation: Expectation::WeakReinforcement { joint: outcome(&inst, &[&["p1"], &["p2"]]) },
            instance: inst,
        }
    }

    pub fn greedy() -> Fixture {
        let inst = Instance::from_costs(&[2, 2, 3], 4).expect("valid");
        let pair = outcome(&inst, &[&["p1", "p2"]]);
        Fixture {
            name: "greedy".to_string(),
            rules: vec![RuleId::Greedy],
            profiles: vec![score_profile(&inst, &[10, 1, 9]), score_profile(&inst, &[1, 10, 9])],
            expected: vec![pair.clone(), pair],
            expectation: Expectation::WeakReinforcement { joint: outcome(&inst, &[&["p3"]]) },
            instance: inst,
        }
    }

    /// Two unit-cost projects, budget 2, and the four single-ballot profiles.
    pub fn two_project() -> Fixture {
        let inst = Instance::from_costs(&[1, 1], 2).expect("valid");
        let truth_a = BudgetAllocation::from_ids(&inst, &["p1", "p2"]).expect("feasible");
        let truth_b = BudgetAllocation::from_ids(&inst, &["p1"]).expect("feasible");
        Fixture {
            name: "two-project".to_string(),
            rules: vec![
                RuleId::Welfare(ScoreKind::NashCard),
                RuleId::Welfare(ScoreKind::NashCost),
                RuleId::Welfare(ScoreKind::UtilCard),
                RuleId::Welfare(ScoreKind::UtilCost),
            ],
            profiles: vec![
                Profile::from_ids::<&str>(&inst, &[&[]]).expect("valid"),
                ids(&inst, &[&["p1"]]),
                ids(&inst, &[&["p2"]]),
                ids(&inst, &[&["p1", "p2"]]),
            ],
            expected: vec![
                outcome(&inst, &[&[], &["p1"], &["p2"], &["p1", "p2"]]),
                outcome(&inst, &[&["p1"], &["p1", "p2"]]),
                outcome(&inst, &[&["p2"], &["p1", "p2"]]),
                outcome(&inst, &[&["p1", "p2"]]),
            ],
            expectation: Expectation::NormalisationConflict { truth_a, truth_b },
            instance: inst,
        }
    }

    pub fn builtin_fixtures() -> Vec<Fixture> {
        vec![phragmen(), mes(), greedy(), two_project()]
    }

    pub fn verify_fixture(fixture: &Fixture, limits: &Limits) -> Result<FixtureReport> {
        let inst = &fixture.instance;
        let mut checks = Vec::with_capacity(fixture.rules.len());
        for &rule in &fixture.rules {
            let outcomes = fixture.profiles.iter().map(|p| rule.apply(inst, p, limits)).collect::<Result<Vec<_>>>()?;
            let mut reproduced = outcomes == fixture.expected;
            let (joint, witness) = match &fixture.expectation {
                Expectation::WeakReinforcement { joint: expected_joint } => {
                    let joint = rule.apply(inst, &fixture.joint_profile(), limits)?;
                    reproduced &= joint == *expected_joint;
                    let witness = match fixture.profiles.as_slice() {
                        [a, b] => match check_weak_reinforcement(rule, inst, a, b, limits)? {
                            Reinforcement::Violation(v) => Some(Witness::Violation(v)),
                            _ => None,
                        },
                        _ => None,
                    };
                    (Some(joint), witness)
                }
                Expectation::NormalisationConflict { truth_a, truth_b } => {
                    let witness = check_normalisation_conflict(rule, inst, truth_a, truth_b, limits)?;
                    (None, witness.map(Witness::Conflict))
                }
            };
            checks.push(RuleCheck { rule, outcomes, joint, reproduced, witness });
        }
        Ok(FixtureReport { name: fixture.name.clone(), checks })
    }
}
