//! Instances, ballots, profiles and budget allocations.
//!
//! Projects are addressed by their position in the [`Instance`]; sets of
//! projects are compact bitsets ([`ProjectSet`]) ordered lexicographically by
//! their ascending index sequence, which is also the canonical order of
//! allocations inside a [`RuleOutcome`].

use alloc::collections::BTreeSet;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::fmt;

use crate::error::{Error, Result};

/// Largest project count the brute-force enumerations accept by default.
pub const DEFAULT_ENUMERATION_CAP: usize = 20;

/// A set of project indices.
#[derive(Clone, Default, PartialEq, Eq, Hash)]
pub struct ProjectSet {
    // trailing zero words are always trimmed so that equality is structural
    words: Vec<u64>,
}

impl ProjectSet {
    pub fn new() -> Self {
        Self::default()
    }

    /// The set whose members are the set bits of `mask`.
    pub fn from_mask(mask: u64) -> Self {
        let mut set = Self { words: alloc::vec![mask] };
        set.trim();
        set
    }

    /// `{0, 1, ..., n - 1}`.
    pub fn full(n: usize) -> Self {
        (0..n).collect()
    }

    pub fn insert(&mut self, index: usize) -> bool {
        let (w, b) = (index / 64, index % 64);
        if self.words.len() <= w {
            self.words.resize(w + 1, 0);
        }
        let had = self.words[w] & (1 << b) != 0;
        self.words[w] |= 1 << b;
        !had
    }

    pub fn remove(&mut self, index: usize) -> bool {
        let (w, b) = (index / 64, index % 64);
        match self.words.get_mut(w) {
            Some(word) if *word & (1 << b) != 0 => {
                *word &= !(1 << b);
                self.trim();
                true
            }
            _ => false,
        }
    }

    pub fn contains(&self, index: usize) -> bool {
        self.words.get(index / 64).is_some_and(|w| w & (1 << (index % 64)) != 0)
    }

    pub fn len(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    /// Largest member, if any.
    pub fn max_index(&self) -> Option<usize> {
        let last = self.words.last()?;
        Some((self.words.len() - 1) * 64 + 63 - last.leading_zeros() as usize)
    }

    /// Members in ascending order.
    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(w, &word)| {
            let mut bits = word;
            core::iter::from_fn(move || {
                if bits == 0 {
                    return None;
                }
                let b = bits.trailing_zeros() as usize;
                bits &= bits - 1;
                Some(w * 64 + b)
            })
        })
    }

    pub fn intersection(&self, other: &Self) -> Self {
        let mut words: Vec<u64> = self.words.iter().zip(&other.words).map(|(a, b)| a & b).collect();
        while words.last() == Some(&0) {
            words.pop();
        }
        Self { words }
    }

    pub fn union(&self, other: &Self) -> Self {
        let n = self.words.len().max(other.words.len());
        let words = (0..n)
            .map(|i| self.words.get(i).copied().unwrap_or(0) | other.words.get(i).copied().unwrap_or(0))
            .collect();
        Self { words }
    }

    pub fn difference(&self, other: &Self) -> Self {
        let mut set = Self {
            words: self.words.iter().enumerate().map(|(i, a)| a & !other.words.get(i).copied().unwrap_or(0)).collect(),
        };
        set.trim();
        set
    }

    pub fn intersection_len(&self, other: &Self) -> usize {
        self.words.iter().zip(&other.words).map(|(a, b)| (a & b).count_ones() as usize).sum()
    }

    pub fn is_subset(&self, other: &Self) -> bool {
        self.words.iter().enumerate().all(|(i, a)| a & !other.words.get(i).copied().unwrap_or(0) == 0)
    }

    pub fn is_disjoint(&self, other: &Self) -> bool {
        self.intersection_len(other) == 0
    }

    fn trim(&mut self) {
        while self.words.last() == Some(&0) {
            self.words.pop();
        }
    }
}

impl FromIterator<usize> for ProjectSet {
    fn from_iter<I: IntoIterator<Item = usize>>(iter: I) -> Self {
        let mut set = Self::new();
        for i in iter {
            set.insert(i);
        }
        set
    }
}

impl Ord for ProjectSet {
    fn cmp(&self, other: &Self) -> Ordering {
        self.iter().cmp(other.iter())
    }
}

impl PartialOrd for ProjectSet {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Debug for ProjectSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Project {
    pub id: String,
    pub cost: u64,
}

impl Project {
    pub fn new(id: impl Into<String>, cost: u64) -> Self {
        Self { id: id.into(), cost }
    }
}

/// A PB instance: an ordered project list with positive integer costs and a
/// positive budget limit.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Instance {
    projects: Vec<Project>,
    budget: u64,
}

impl Instance {
    pub fn new(projects: Vec<Project>, budget: u64) -> Result<Self> {
        if projects.is_empty() {
            return Err(Error::NoProjects);
        }
        if budget == 0 {
            return Err(Error::ZeroBudget);
        }
        let mut ids = BTreeSet::new();
        for p in &projects {
            if p.cost == 0 {
                return Err(Error::ZeroCost(p.id.clone()));
            }
            if !ids.insert(p.id.as_str()) {
                return Err(Error::DuplicateProject(p.id.clone()));
            }
        }
        Ok(Self { projects, budget })
    }

    /// Projects named `p1, p2, ...` with the given costs.
    pub fn from_costs(costs: &[u64], budget: u64) -> Result<Self> {
        let projects = costs.iter().enumerate().map(|(i, &c)| Project::new(alloc::format!("p{}", i + 1), c)).collect();
        Self::new(projects, budget)
    }

    pub fn projects(&self) -> &[Project] {
        &self.projects
    }

    pub fn num_projects(&self) -> usize {
        self.projects.len()
    }

    pub fn budget(&self) -> u64 {
        self.budget
    }

    pub fn cost_of(&self, index: usize) -> u64 {
        self.projects[index].cost
    }

    pub fn id(&self, index: usize) -> &str {
        &self.projects[index].id
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.projects.iter().position(|p| p.id == id)
    }

    pub fn all_projects(&self) -> ProjectSet {
        ProjectSet::full(self.projects.len())
    }

    /// Resolves project ids to a set; unknown ids are an error.
    pub fn set_from_ids<S: AsRef<str>>(&self, ids: &[S]) -> Result<ProjectSet> {
        ids.iter()
            .map(|id| self.index_of(id.as_ref()).ok_or_else(|| Error::UnknownProject(id.as_ref().to_string())))
            .collect()
    }

    pub fn ids_of(&self, set: &ProjectSet) -> Vec<&str> {
        set.iter().map(|i| self.id(i)).collect()
    }

    pub fn check_members(&self, set: &ProjectSet) -> Result<()> {
        match set.max_index() {
            Some(index) if index >= self.projects.len() => {
                Err(Error::ProjectIndexOutOfRange { index, len: self.projects.len() })
            }
            _ => Ok(()),
        }
    }

    /// `c(P)`: total cost of a set of projects.
    pub fn cost(&self, set: &ProjectSet) -> Result<u64> {
        self.check_members(set)?;
        Ok(self.cost_unchecked(set))
    }

    pub(crate) fn cost_unchecked(&self, set: &ProjectSet) -> u64 {
        set.iter().map(|i| self.projects[i].cost).sum()
    }

    pub fn total_cost(&self, alloc: &BudgetAllocation) -> u64 {
        alloc.cost
    }

    /// No unselected project fits into the remaining budget.
    pub fn is_exhaustive(&self, alloc: &BudgetAllocation) -> bool {
        let left = self.budget - alloc.cost;
        (0..self.projects.len()).all(|i| alloc.set.contains(i) || self.projects[i].cost > left)
    }

    /// The common cost `ℓ` if every project costs `ℓ` and `ℓ` divides the
    /// budget limit.
    pub fn unit_cost(&self) -> Option<u64> {
        let l = self.projects[0].cost;
        (self.projects.iter().all(|p| p.cost == l) && self.budget.is_multiple_of(l)).then_some(l)
    }

    pub fn is_unit_cost(&self) -> bool {
        self.unit_cost().is_some()
    }

    /// All feasible (or only the exhaustive) allocations, in canonical order.
    pub fn enumerate_allocations(&self, exhaustive_only: bool, cap: usize) -> Result<Vec<BudgetAllocation>> {
        let n = self.projects.len();
        if n > cap || n >= 64 {
            return Err(Error::EnumerationLimit { projects: n, cap });
        }
        let mut out = Vec::new();
        for mask in 0..(1u64 << n) {
            let set = ProjectSet::from_mask(mask);
            let cost = self.cost_unchecked(&set);
            if cost > self.budget {
                continue;
            }
            let alloc = BudgetAllocation { set, cost };
            if !exhaustive_only || self.is_exhaustive(&alloc) {
                out.push(alloc);
            }
        }
        out.sort();
        Ok(out)
    }
}

/// An approval ballot.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Ballot(ProjectSet);

impl Ballot {
    pub fn new(inst: &Instance, approved: ProjectSet) -> Result<Self> {
        inst.check_members(&approved)?;
        Ok(Self(approved))
    }

    pub fn from_ids<S: AsRef<str>>(inst: &Instance, ids: &[S]) -> Result<Self> {
        Ok(Self(inst.set_from_ids(ids)?))
    }

    pub fn empty() -> Self {
        Self::default()
    }

    pub fn approved(&self) -> &ProjectSet {
        &self.0
    }

    pub fn approves(&self, project: usize) -> bool {
        self.0.contains(project)
    }
}

/// An ordered sequence of ballots, one per agent.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct Profile {
    ballots: Vec<Ballot>,
}

impl Profile {
    pub fn new(ballots: Vec<Ballot>) -> Self {
        Self { ballots }
    }

    /// Builds a profile from id lists, one list per agent.
    pub fn from_ids<S: AsRef<str>>(inst: &Instance, ballots: &[&[S]]) -> Result<Self> {
        ballots.iter().map(|ids| Ballot::from_ids(inst, ids)).collect::<Result<Vec<_>>>().map(Self::new)
    }

    pub fn ballots(&self) -> &[Ballot] {
        &self.ballots
    }

    pub fn len(&self) -> usize {
        self.ballots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ballots.is_empty()
    }

    pub fn push(&mut self, ballot: Ballot) {
        self.ballots.push(ballot);
    }

    /// `A ++ A'`.
    pub fn concat(&self, other: &Profile) -> Profile {
        let mut ballots = self.ballots.clone();
        ballots.extend_from_slice(&other.ballots);
        Profile { ballots }
    }

    /// Agents approving `project`.
    pub fn approvers(&self, project: usize) -> impl Iterator<Item = usize> + '_ {
        self.ballots.iter().enumerate().filter(move |(_, b)| b.approves(project)).map(|(i, _)| i)
    }

    pub fn check_against(&self, inst: &Instance) -> Result<()> {
        self.ballots.iter().try_for_each(|b| inst.check_members(b.approved()))
    }
}

/// A feasible set of projects. Feasibility is checked at construction.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BudgetAllocation {
    set: ProjectSet,
    cost: u64,
}

impl BudgetAllocation {
    pub fn new(inst: &Instance, set: ProjectSet) -> Result<Self> {
        let cost = inst.cost(&set)?;
        if cost > inst.budget() {
            return Err(Error::Infeasible { cost, budget: inst.budget() });
        }
        Ok(Self { set, cost })
    }

    pub fn from_ids<S: AsRef<str>>(inst: &Instance, ids: &[S]) -> Result<Self> {
        Self::new(inst, inst.set_from_ids(ids)?)
    }

    pub fn empty() -> Self {
        Self { set: ProjectSet::new(), cost: 0 }
    }

    pub fn projects(&self) -> &ProjectSet {
        &self.set
    }

    pub fn cost(&self) -> u64 {
        self.cost
    }

    pub fn len(&self) -> usize {
        self.set.len()
    }

    pub fn is_empty(&self) -> bool {
        self.set.is_empty()
    }

    pub fn contains(&self, project: usize) -> bool {
        self.set.contains(project)
    }
}

impl Ord for BudgetAllocation {
    fn cmp(&self, other: &Self) -> Ordering {
        self.set.cmp(&other.set)
    }
}

impl PartialOrd for BudgetAllocation {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// The nonempty set of tied winning allocations returned by an irresolute
/// rule.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct RuleOutcome {
    winners: BTreeSet<BudgetAllocation>,
}

impl RuleOutcome {
    pub fn new<I: IntoIterator<Item = BudgetAllocation>>(winners: I) -> Result<Self> {
        let winners: BTreeSet<_> = winners.into_iter().collect();
        if winners.is_empty() {
            return Err(Error::EmptyOutcome);
        }
        Ok(Self { winners })
    }

    pub fn single(winner: BudgetAllocation) -> Self {
        Self { winners: BTreeSet::from([winner]) }
    }

    /// Convenience for tests and fixtures: each inner slice is one allocation.
    pub fn from_ids<S: AsRef<str>>(inst: &Instance, winners: &[&[S]]) -> Result<Self> {
        Self::new(winners.iter().map(|ids| BudgetAllocation::from_ids(inst, ids)).collect::<Result<Vec<_>>>()?)
    }

    pub fn winners(&self) -> &BTreeSet<BudgetAllocation> {
        &self.winners
    }

    pub fn iter(&self) -> impl Iterator<Item = &BudgetAllocation> {
        self.winners.iter()
    }

    pub fn len(&self) -> usize {
        self.winners.len()
    }

    pub fn is_empty(&self) -> bool {
        self.winners.is_empty()
    }

    pub fn contains(&self, alloc: &BudgetAllocation) -> bool {
        self.winners.contains(alloc)
    }

    pub fn is_singleton(&self) -> bool {
        self.winners.len() == 1
    }

    /// Winners as id lists, canonically ordered.
    pub fn to_id_lists(&self, inst: &Instance) -> Vec<Vec<String>> {
        self.winners.iter().map(|a| a.projects().iter().map(|i| inst.id(i).to_string()).collect()).collect()
    }
}
