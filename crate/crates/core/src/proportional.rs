//! Sequential Phragmén and the Method of Equal Shares, irresolute.
//!
//! Both rules are simulated exactly over rationals and every tie is branched
//! on. Search states `(selected, balances)` are memoised, so the number of
//! distinct states is what the branch cap bounds.

use alloc::collections::BTreeSet;
use alloc::vec::Vec;

use num_traits::Zero;

use crate::error::{Error, Result};
use crate::model::{BudgetAllocation, Instance, Profile, ProjectSet, RuleOutcome};
use crate::rational::{int, Rational};

/// One purchase in a Phragmén run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Purchase {
    pub project: usize,
    /// Elapsed time at which the approvers' balances reached the cost.
    pub time: Rational,
    /// Sum of the approvers' balances at that time; always equals the cost.
    pub collected: Rational,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PhragmenReport {
    pub outcome: RuleOutcome,
    /// One purchase log per distinct terminal branch reached by the search.
    pub runs: Vec<Vec<Purchase>>,
}

struct PhragmenSearch<'a> {
    inst: &'a Instance,
    approvers: Vec<Vec<usize>>,
    cap: usize,
    seen: BTreeSet<(ProjectSet, Vec<Rational>)>,
    winners: BTreeSet<BudgetAllocation>,
    runs: Vec<Vec<Purchase>>,
}

impl PhragmenSearch<'_> {
    fn explore(
        &mut self,
        selected: ProjectSet,
        spent: u64,
        balances: Vec<Rational>,
        time: Rational,
        log: Vec<Purchase>,
    ) -> Result<()> {
        if !self.seen.insert((selected.clone(), balances.clone())) {
            return Ok(());
        }
        if self.seen.len() > self.cap {
            return Err(Error::BranchLimit { cap: self.cap });
        }
        // Time until each unbought project with approvers becomes affordable:
        // the approvers' balances grow at rate = #approvers.
        let mut best: Option<Rational> = None;
        let mut next = Vec::new();
        for (p, approvers) in self.approvers.iter().enumerate() {
            if selected.contains(p) || approvers.is_empty() {
                continue;
            }
            let have: Rational = approvers.iter().map(|&i| &balances[i]).sum();
            let mut wait = (int(self.inst.cost_of(p)) - have) / int(approvers.len() as u64);
            if wait < Rational::zero() {
                wait = Rational::zero();
            }
            match best.as_ref().map(|b| wait.cmp(b)) {
                Some(core::cmp::Ordering::Greater) => {}
                Some(core::cmp::Ordering::Equal) => next.push(p),
                _ => {
                    best = Some(wait);
                    next = alloc::vec![p];
                }
            }
        }
        let Some(wait) = best else {
            return self.finish(selected, log);
        };
        // the whole process stops as soon as one tied project overflows
        if next.iter().any(|&p| spent + self.inst.cost_of(p) > self.inst.budget()) {
            return self.finish(selected, log);
        }
        let time = time + &wait;
        let grown: Vec<Rational> = balances.iter().map(|b| b + &wait).collect();
        for p in next {
            let mut balances = grown.clone();
            let collected: Rational = self.approvers[p].iter().map(|&i| &balances[i]).sum();
            for &i in &self.approvers[p] {
                balances[i] = Rational::zero();
            }
            let mut selected = selected.clone();
            selected.insert(p);
            let mut log = log.clone();
            log.push(Purchase { project: p, time: time.clone(), collected });
            self.explore(selected, spent + self.inst.cost_of(p), balances, time.clone(), log)?;
        }
        Ok(())
    }

    fn finish(&mut self, selected: ProjectSet, log: Vec<Purchase>) -> Result<()> {
        self.winners.insert(BudgetAllocation::new(self.inst, selected)?);
        self.runs.push(log);
        Ok(())
    }
}

fn approver_lists(inst: &Instance, prof: &Profile) -> Vec<Vec<usize>> {
    (0..inst.num_projects()).map(|p| prof.approvers(p).collect()).collect()
}

/// Sequential Phragmén with full tie branching, plus the purchase logs.
pub fn sequential_phragmen_report(inst: &Instance, prof: &Profile, branch_cap: usize) -> Result<PhragmenReport> {
    if prof.is_empty() {
        return Err(Error::EmptyProfile);
    }
    prof.check_against(inst)?;
    let mut search = PhragmenSearch {
        inst,
        approvers: approver_lists(inst, prof),
        cap: branch_cap,
        seen: BTreeSet::new(),
        winners: BTreeSet::new(),
        runs: Vec::new(),
    };
    search.explore(ProjectSet::new(), 0, alloc::vec![Rational::zero(); prof.len()], Rational::zero(), Vec::new())?;
    Ok(PhragmenReport { outcome: RuleOutcome::new(search.winners)?, runs: search.runs })
}

pub fn sequential_phragmen(inst: &Instance, prof: &Profile, branch_cap: usize) -> Result<RuleOutcome> {
    sequential_phragmen_report(inst, prof, branch_cap).map(|r| r.outcome)
}

/// Per-project satisfaction levels `μ(p) > 0` for MES.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Satisfaction {
    /// `μ(p) = 1`.
    Card,
    /// `μ(p) = c(p)`.
    Cost,
    /// One positive level per project, in instance order.
    Custom(Vec<Rational>),
}

impl Satisfaction {
    fn level(&self, inst: &Instance, p: usize) -> Rational {
        match self {
            Satisfaction::Card => int(1),
            Satisfaction::Cost => int(inst.cost_of(p)),
            Satisfaction::Custom(levels) => levels[p].clone(),
        }
    }

    fn validate(&self, inst: &Instance) -> Result<()> {
        match self {
            Satisfaction::Custom(levels)
                if levels.len() != inst.num_projects() || levels.iter().any(|l| *l <= Rational::zero()) =>
            {
                Err(Error::InvalidSatisfaction)
            }
            _ => Ok(()),
        }
    }
}

/// Smallest `α` with `Σ min(b_i, α·μ) ≥ cost`, or `None` if the approvers
/// cannot afford the project at all.
///
/// With budgets sorted ascending, suppose the `j` poorest approvers pay their
/// whole budget and the rest pay `α·μ`; then `α = (cost − Σ_{<j} b) / ((m−j)·μ)`
/// and the candidate is valid once `α·μ ≤ b_j`.
pub fn min_affordable_alpha(budgets: &[Rational], cost: &Rational, mu: &Rational) -> Option<Rational> {
    let total: Rational = budgets.iter().sum();
    if total < *cost {
        return None;
    }
    let mut sorted: Vec<&Rational> = budgets.iter().collect();
    sorted.sort();
    let m = sorted.len();
    let mut paid_in_full = Rational::zero();
    for (j, b) in sorted.iter().enumerate() {
        let alpha = (cost - &paid_in_full) / (int((m - j) as u64) * mu);
        if &(&alpha * mu) <= *b {
            return Some(alpha);
        }
        paid_in_full += *b;
    }
    None
}

/// One selection in an MES run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MesPurchase {
    pub project: usize,
    pub alpha: Rational,
    /// `(agent, amount)` for every approver, amounts summing to the cost.
    pub payments: Vec<(usize, Rational)>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MesReport {
    pub outcome: RuleOutcome,
    pub runs: Vec<Vec<MesPurchase>>,
}

struct MesSearch<'a> {
    inst: &'a Instance,
    mu: &'a Satisfaction,
    approvers: Vec<Vec<usize>>,
    cap: usize,
    seen: BTreeSet<(ProjectSet, Vec<Rational>)>,
    winners: BTreeSet<BudgetAllocation>,
    runs: Vec<Vec<MesPurchase>>,
}

impl MesSearch<'_> {
    fn explore(&mut self, selected: ProjectSet, budgets: Vec<Rational>, log: Vec<MesPurchase>) -> Result<()> {
        if !self.seen.insert((selected.clone(), budgets.clone())) {
            return Ok(());
        }
        if self.seen.len() > self.cap {
            return Err(Error::BranchLimit { cap: self.cap });
        }
        let mut best: Option<Rational> = None;
        let mut next = Vec::new();
        for (p, approvers) in self.approvers.iter().enumerate() {
            if selected.contains(p) || approvers.is_empty() {
                continue;
            }
            let held: Vec<Rational> = approvers.iter().map(|&i| budgets[i].clone()).collect();
            let mu = self.mu.level(self.inst, p);
            let Some(alpha) = min_affordable_alpha(&held, &int(self.inst.cost_of(p)), &mu) else {
                continue;
            };
            match best.as_ref().map(|b| alpha.cmp(b)) {
                Some(core::cmp::Ordering::Greater) => {}
                Some(core::cmp::Ordering::Equal) => next.push(p),
                _ => {
                    best = Some(alpha);
                    next = alloc::vec![p];
                }
            }
        }
        let Some(alpha) = best else {
            self.winners.insert(BudgetAllocation::new(self.inst, selected)?);
            self.runs.push(log);
            return Ok(());
        };
        for p in next {
            let share = &alpha * self.mu.level(self.inst, p);
            let mut budgets = budgets.clone();
            let mut payments = Vec::with_capacity(self.approvers[p].len());
            for &i in &self.approvers[p] {
                let pay = core::cmp::min(budgets[i].clone(), share.clone());
                budgets[i] -= &pay;
                payments.push((i, pay));
            }
            let mut selected = selected.clone();
            selected.insert(p);
            let mut log = log.clone();
            log.push(MesPurchase { project: p, alpha: alpha.clone(), payments });
            self.explore(selected, budgets, log)?;
        }
        Ok(())
    }
}

/// MES with satisfaction function `mu` and full tie branching, plus the
/// payment logs.
pub fn mes_report(inst: &Instance, prof: &Profile, mu: &Satisfaction, branch_cap: usize) -> Result<MesReport> {
    if prof.is_empty() {
        return Err(Error::EmptyProfile);
    }
    prof.check_against(inst)?;
    mu.validate(inst)?;
    let share = Rational::new(inst.budget().into(), (prof.len() as u64).into());
    let mut search = MesSearch {
        inst,
        mu,
        approvers: approver_lists(inst, prof),
        cap: branch_cap,
        seen: BTreeSet::new(),
        winners: BTreeSet::new(),
        runs: Vec::new(),
    };
    search.explore(ProjectSet::new(), alloc::vec![share; prof.len()], Vec::new())?;
    Ok(MesReport { outcome: RuleOutcome::new(search.winners)?, runs: search.runs })
}

pub fn mes(inst: &Instance, prof: &Profile, mu: &Satisfaction, branch_cap: usize) -> Result<RuleOutcome> {
    mes_report(inst, prof, mu, branch_cap).map(|r| r.outcome)
}
