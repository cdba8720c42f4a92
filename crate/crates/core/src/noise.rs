//! Ballot noise models conditioned on a ground-truth allocation `π*`.
//!
//! | model   | weight of ballot `A`   | normalisation `Z(π*)`          |
//! |---------|------------------------|--------------------------------|
//! | m-app   | `2^{|A ∩ π*|}`         | `2^{|P|} · (3/2)^{|π*|}`       |
//! | m-ncost | `c(A ∩ π*)`            | `2^{|P|-1} · c(π*)`            |
//! | m-napp  | `|A ∩ π*|`             | `2^{|P|-1} · |π*|`             |
//!
//! The samplers are constructive: m-app includes every project independently
//! (truth projects with probability 2/3, the others with 1/2); m-ncost and
//! m-napp draw one anchor project from `π*` (cost-weighted resp. uniform),
//! force it into the ballot and flip a fair coin for every other project.

use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use num_bigint::BigInt;
use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::model::{Ballot, BudgetAllocation, Instance, Profile, ProjectSet};
use crate::rational::{int, pow2, ratio, Rational};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum NoiseModel {
    App,
    Ncost,
    Napp,
}

impl NoiseModel {
    pub const ALL: [NoiseModel; 3] = [NoiseModel::App, NoiseModel::Ncost, NoiseModel::Napp];

    pub fn name(self) -> &'static str {
        match self {
            NoiseModel::App => "m-app",
            NoiseModel::Ncost => "m-ncost",
            NoiseModel::Napp => "m-napp",
        }
    }

    /// Whether `truth` gives this model a nonzero normalisation factor.
    pub fn accepts(self, truth: &BudgetAllocation) -> bool {
        match self {
            NoiseModel::App => true,
            NoiseModel::Ncost => truth.cost() > 0,
            NoiseModel::Napp => !truth.is_empty(),
        }
    }

    /// Unnormalised weight of `ballot`.
    pub fn weight(self, inst: &Instance, truth: &BudgetAllocation, ballot: &ProjectSet) -> BigInt {
        let common = ballot.intersection(truth.projects());
        match self {
            NoiseModel::App => pow2(common.len()),
            NoiseModel::Ncost => BigInt::from(inst.cost_unchecked(&common)),
            NoiseModel::Napp => BigInt::from(common.len()),
        }
    }
}

impl fmt::Display for NoiseModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for NoiseModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        NoiseModel::ALL.into_iter().find(|m| m.name() == s).ok_or_else(|| Error::UnknownName(s.into()))
    }
}

/// A ground truth that is valid for a particular noise model.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroundTruth {
    model: NoiseModel,
    allocation: BudgetAllocation,
}

impl GroundTruth {
    pub fn new(model: NoiseModel, allocation: BudgetAllocation) -> Result<Self> {
        if !model.accepts(&allocation) {
            return Err(Error::DegenerateTruth);
        }
        Ok(Self { model, allocation })
    }

    pub fn model(&self) -> NoiseModel {
        self.model
    }

    pub fn allocation(&self) -> &BudgetAllocation {
        &self.allocation
    }
}

/// Closed-form normalisation factor.
pub fn normalisation_factor(model: NoiseModel, inst: &Instance, truth: &BudgetAllocation) -> Result<Rational> {
    if !model.accepts(truth) {
        return Err(Error::DegenerateTruth);
    }
    let n = inst.num_projects();
    Ok(match model {
        NoiseModel::App => {
            // 2^|P| (3/2)^|π*| = 2^{|P| - |π*|} 3^|π*|
            let k = truth.len();
            Rational::from_integer(pow2(n - k) * BigInt::from(3u8).pow(k as u32))
        }
        NoiseModel::Ncost => Rational::from_integer(pow2(n - 1) * truth.cost()),
        NoiseModel::Napp => Rational::from_integer(pow2(n - 1) * truth.len()),
    })
}

/// `Σ_{A ⊆ P} weight(A)` by enumeration of all `2^|P|` ballots.
pub fn brute_force_normalisation(
    model: NoiseModel,
    inst: &Instance,
    truth: &BudgetAllocation,
    enumeration_cap: usize,
) -> Result<Rational> {
    let n = inst.num_projects();
    if n > enumeration_cap || n >= 64 {
        return Err(Error::EnumerationLimit { projects: n, cap: enumeration_cap });
    }
    let total: BigInt = (0..1u64 << n).map(|mask| model.weight(inst, truth, &ProjectSet::from_mask(mask))).sum();
    Ok(Rational::from_integer(total))
}

/// Closed-form factor together with the enumeration cross-check, when the
/// instance is small enough for it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NormalisationCheck {
    pub closed_form: Rational,
    pub brute_force: Option<Rational>,
}

impl NormalisationCheck {
    pub fn consistent(&self) -> bool {
        self.brute_force.as_ref().is_none_or(|b| *b == self.closed_form)
    }
}

pub fn check_normalisation(
    model: NoiseModel,
    inst: &Instance,
    truth: &BudgetAllocation,
    enumeration_cap: usize,
) -> Result<NormalisationCheck> {
    let closed_form = normalisation_factor(model, inst, truth)?;
    let brute_force = match brute_force_normalisation(model, inst, truth, enumeration_cap) {
        Ok(z) => Some(z),
        Err(Error::EnumerationLimit { .. }) => None,
        Err(e) => return Err(e),
    };
    Ok(NormalisationCheck { closed_form, brute_force })
}

/// `P_M(A | π*, I)`.
pub fn ballot_probability(
    model: NoiseModel,
    inst: &Instance,
    truth: &BudgetAllocation,
    ballot: &Ballot,
) -> Result<Rational> {
    inst.check_members(ballot.approved())?;
    let z = normalisation_factor(model, inst, truth)?;
    Ok(Rational::from_integer(model.weight(inst, truth, ballot.approved())) / z)
}

/// `L_M(A, π, I) = Π_A P_M(A | π, I)`. A degenerate truth has likelihood 0.
pub fn likelihood(model: NoiseModel, inst: &Instance, truth: &BudgetAllocation, prof: &Profile) -> Result<Rational> {
    prof.check_against(inst)?;
    let z = match normalisation_factor(model, inst, truth) {
        Ok(z) => z,
        Err(Error::DegenerateTruth) => return Ok(Rational::zero()),
        Err(e) => return Err(e),
    };
    let weights = prof.ballots().iter().fold(BigInt::one(), |acc, b| acc * model.weight(inst, truth, b.approved()));
    let zn = z.numer().pow(prof.len() as u32);
    Ok(Rational::new(weights, zn))
}

/// Probability that the constructive sampler emits `ballot`, computed from
/// the sampler's own coin and anchor probabilities rather than from the
/// model's weights.
pub fn sampler_probability(inst: &Instance, truth: &GroundTruth, ballot: &Ballot) -> Result<Rational> {
    inst.check_members(ballot.approved())?;
    let model = truth.model();
    let n = inst.num_projects();
    let pi = truth.allocation().projects();
    let a = ballot.approved();
    let half = ratio(1, 2);
    match model {
        NoiseModel::App => Ok((0..n)
            .map(|p| match (pi.contains(p), a.contains(p)) {
                (true, true) => ratio(2, 3),
                (true, false) => ratio(1, 3),
                (false, _) => half.clone(),
            })
            .product()),
        NoiseModel::Ncost | NoiseModel::Napp => {
            let rest = Rational::new(BigInt::one(), pow2(n - 1));
            let anchors: Rational = pi
                .iter()
                .filter(|&p| a.contains(p))
                .map(|p| anchor_probability(model, inst, truth.allocation(), p))
                .sum();
            Ok(anchors * rest)
        }
    }
}

fn anchor_probability(model: NoiseModel, inst: &Instance, truth: &BudgetAllocation, p: usize) -> Rational {
    match model {
        NoiseModel::Ncost => Rational::new(inst.cost_of(p).into(), truth.cost().into()),
        _ => Rational::new(BigInt::one(), BigInt::from(truth.len())),
    }
}

/// Draws one ballot. Uses only exact integer draws, so the emitted
/// distribution is exactly [`ballot_probability`].
pub fn sample_ballot<R: Rng + ?Sized>(inst: &Instance, truth: &GroundTruth, rng: &mut R) -> Ballot {
    let n = inst.num_projects();
    let pi = truth.allocation().projects();
    let mut approved = ProjectSet::new();
    match truth.model() {
        NoiseModel::App => {
            for p in 0..n {
                let keep = if pi.contains(p) { rng.gen_range(0..3u32) < 2 } else { rng.gen::<bool>() };
                if keep {
                    approved.insert(p);
                }
            }
        }
        NoiseModel::Ncost | NoiseModel::Napp => {
            let anchor = if truth.model() == NoiseModel::Ncost {
                let mut ticket = rng.gen_range(0..truth.allocation().cost());
                pi.iter()
                    .find(|&p| {
                        let c = inst.cost_of(p);
                        if ticket < c {
                            true
                        } else {
                            ticket -= c;
                            false
                        }
                    })
                    .expect("ticket below total cost")
            } else {
                let k = rng.gen_range(0..pi.len());
                pi.iter().nth(k).expect("index below |π*|")
            };
            for p in 0..n {
                if p == anchor || rng.gen::<bool>() {
                    approved.insert(p);
                }
            }
        }
    }
    Ballot::new(inst, approved).expect("sampled projects belong to the instance")
}

/// `agents` i.i.d. ballots, agent `i` drawing from its own stream.
pub fn sample_profile(inst: &Instance, truth: &GroundTruth, agents: usize, seed: u64, trial: u64) -> Profile {
    Profile::new((0..agents).map(|i| sample_ballot(inst, truth, &mut stream_rng(seed, trial, i as u64))).collect())
}

/// Independent, reproducible random stream for `(root seed, trial, agent)`.
///
/// The root seed and trial index form the ChaCha key and the agent index
/// selects the stream, so streams never overlap and can be generated in any
/// order or in parallel.
pub fn stream_rng(seed: u64, trial: u64, agent: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&trial.to_le_bytes());
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(agent);
    rng
}

/// Every ballot over the instance, in mask order. Used by the exact
/// normalisation checks.
pub fn all_ballots(inst: &Instance, enumeration_cap: usize) -> Result<Vec<Ballot>> {
    let n = inst.num_projects();
    if n > enumeration_cap || n >= 64 {
        return Err(Error::EnumerationLimit { projects: n, cap: enumeration_cap });
    }
    (0..1u64 << n).map(|m| Ballot::new(inst, ProjectSet::from_mask(m))).collect()
}

/// Convenience: `Σ_A P(A)`; equals 1 for every valid truth.
pub fn total_probability(
    model: NoiseModel,
    inst: &Instance,
    truth: &BudgetAllocation,
    enumeration_cap: usize,
) -> Result<Rational> {
    all_ballots(inst, enumeration_cap)?.iter().map(|b| ballot_probability(model, inst, truth, b)).sum()
}

/// Expected `|A ∩ π*|` under m-app: every truth project is kept with
/// probability 2/3.
pub fn app_expected_overlap(truth: &BudgetAllocation) -> Rational {
    ratio(2, 3) * int(truth.len() as u64)
}
