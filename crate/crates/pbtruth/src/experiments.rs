//! Seeded truth-recovery experiments: plant a ground truth, sample profiles
//! from a noise model and measure how often each estimator returns it.

use std::fmt::Write as _;
use std::str::FromStr;

use num_bigint::BigInt;
use pbtruth_core::mle::{mle, TruthSpace};
use pbtruth_core::noise::{sample_profile, GroundTruth, NoiseModel};
use pbtruth_core::{BudgetAllocation, Instance, Limits, Rational, RuleId, RuleOutcome};
use rayon::prelude::*;

use crate::format::decimal;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Model(#[from] pbtruth_core::Error),
    #[error("trials must be at least 1")]
    ZeroTrials,
    #[error("agent counts must be at least 1")]
    ZeroAgents,
    #[error("no estimators given")]
    NoEstimators,
}

/// A rule, or the brute-force MLE under the experiment's own noise model.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Estimator {
    Rule(RuleId),
    Mle,
}

impl Estimator {
    pub fn name(self) -> &'static str {
        match self {
            Estimator::Rule(r) => r.name(),
            Estimator::Mle => "mle",
        }
    }
}

impl FromStr for Estimator {
    type Err = pbtruth_core::Error;

    fn from_str(s: &str) -> pbtruth_core::Result<Self> {
        if s == "mle" {
            return Ok(Estimator::Mle);
        }
        s.parse().map(Estimator::Rule)
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub model: NoiseModel,
    pub instance: Instance,
    pub truth: BudgetAllocation,
    pub estimators: Vec<Estimator>,
    pub agent_counts: Vec<usize>,
    pub trials: u64,
    pub seed: u64,
    /// Candidate truths of the MLE estimator.
    pub space: TruthSpace,
    pub limits: Limits,
}

pub const DEFAULT_SEED: u64 = 2024;

impl ExperimentConfig {
    /// Four projects with costs (1, 1, 2, 2), budget 4, truth {p1, p3},
    /// m-ncost noise and agent counts 1, 5, 25.
    pub fn example() -> Self {
        let instance = Instance::from_costs(&[1, 1, 2, 2], 4).expect("valid");
        let truth = BudgetAllocation::from_ids(&instance, &["p1", "p3"]).expect("feasible");
        ExperimentConfig {
            model: NoiseModel::Ncost,
            instance,
            truth,
            estimators: ["mle", "nash-norm-cost", "util-cost", "greedy", "phragmen", "mes-cost"]
                .iter()
                .map(|s| s.parse().expect("known"))
                .collect(),
            agent_counts: vec![1, 5, 25],
            trials: 200,
            seed: DEFAULT_SEED,
            space: TruthSpace::AllFeasible,
            limits: Limits::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RecoveryRow {
    pub estimator: String,
    pub agents: usize,
    pub trials: u64,
    /// Trials whose winner set was exactly `{π*}`.
    pub exact: u64,
    /// Trials whose winner set contained `π*`.
    pub hits: u64,
    pub total_winners: u64,
}

impl RecoveryRow {
    fn rate(&self, count: u64) -> Rational {
        Rational::new(BigInt::from(count), BigInt::from(self.trials))
    }

    pub fn exact_recovery(&self) -> Rational {
        self.rate(self.exact)
    }

    pub fn hit_rate(&self) -> Rational {
        self.rate(self.hits)
    }

    pub fn mean_winners(&self) -> Rational {
        self.rate(self.total_winners)
    }
}

fn estimate(cfg: &ExperimentConfig, est: Estimator, prof: &pbtruth_core::Profile) -> pbtruth_core::Result<RuleOutcome> {
    match est {
        Estimator::Rule(r) => r.apply(&cfg.instance, prof, &cfg.limits),
        Estimator::Mle => mle(cfg.model, &cfg.instance, prof, cfg.space, cfg.limits.enumeration_cap),
    }
}

/// One row per (estimator, agent count), estimators outermost. Every
/// estimator sees the same sampled profiles, and trial `t` with `n` agents
/// uses the first `n` agent streams of `(seed, t)`, so the output does not
/// depend on the thread count.
pub fn run_recovery(cfg: &ExperimentConfig) -> Result<Vec<RecoveryRow>, ExperimentError> {
    if cfg.trials == 0 {
        return Err(ExperimentError::ZeroTrials);
    }
    if cfg.agent_counts.contains(&0) {
        return Err(ExperimentError::ZeroAgents);
    }
    if cfg.estimators.is_empty() {
        return Err(ExperimentError::NoEstimators);
    }
    cfg.instance.check_members(cfg.truth.projects())?;
    let truth = GroundTruth::new(cfg.model, cfg.truth.clone())?;
    let mut rows = Vec::with_capacity(cfg.estimators.len() * cfg.agent_counts.len());
    for &est in &cfg.estimators {
        for &n in &cfg.agent_counts {
            let outcomes = (0..cfg.trials)
                .into_par_iter()
                .map(|t| {
                    let prof = sample_profile(&cfg.instance, &truth, n, cfg.seed, t);
                    estimate(cfg, est, &prof)
                })
                .collect::<pbtruth_core::Result<Vec<_>>>()?;
            let mut row = RecoveryRow {
                estimator: est.name().to_string(),
                agents: n,
                trials: cfg.trials,
                exact: 0,
                hits: 0,
                total_winners: 0,
            };
            for out in &outcomes {
                let hit = out.contains(&cfg.truth);
                row.hits += u64::from(hit);
                row.exact += u64::from(hit && out.is_singleton());
                row.total_winners += out.len() as u64;
            }
            rows.push(row);
        }
    }
    Ok(rows)
}

pub const CSV_HEADER: &str = "rule,n_agents,exact_recovery,hit_rate,mean_winners";

pub fn emit_csv(rows: &[RecoveryRow]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            r.estimator,
            r.agents,
            decimal(&r.exact_recovery()),
            decimal(&r.hit_rate()),
            decimal(&r.mean_winners())
        );
    }
    out
}
