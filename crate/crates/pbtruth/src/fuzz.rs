//! Weak-reinforcement fuzzing spread over the rayon pool. Trials are merged
//! in trial order, so the summary equals the serial one.

use pbtruth_core::checks::{fuzz_trial, FuzzParams, FuzzSummary};
use pbtruth_core::{Error, Limits, Result, RuleId};
use rayon::prelude::*;

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
    let results =
        (0..trials).into_par_iter().map(|t| fuzz_trial(rule, params, seed, t, limits)).collect::<Result<Vec<_>>>()?;
    let mut summary = FuzzSummary::new(rule);
    for (t, r) in results.into_iter().enumerate() {
        summary.record(t as u64, r);
    }
    Ok(summary)
}
