//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero when any criterion fails.

use std::collections::BTreeMap;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use pbtruth::core::checks::fixtures::{greedy, mes, phragmen, two_project};
use pbtruth::core::checks::FuzzParams;
use pbtruth::core::mle::{mle, mle_matches_rule, TruthSpace};
use pbtruth::core::noise::{
    all_ballots, ballot_probability, brute_force_normalisation, likelihood, normalisation_factor, sample_profile,
    sampler_probability, GroundTruth, NoiseModel,
};
use pbtruth::core::proportional::sequential_phragmen_report;
use pbtruth::core::rational::{one, ratio};
use pbtruth::core::welfare::ScoreKind;
use pbtruth::core::{Ballot, BudgetAllocation, Instance, Limits, Profile, ProjectSet, Rational, RuleId, RuleOutcome};
use pbtruth::fuzz::fuzz_weak_reinforcement;
use pbtruth::pabulib::{parse_pb, parse_pb_bytes, write_pb};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SEED: u64 = 2024;
const FIXTURE_TIME_LIMIT: Duration = Duration::from_secs(1);
const NORMALISATION_TIME_LIMIT: Duration = Duration::from_secs(10);
const MLE_TIME_LIMIT: Duration = Duration::from_secs(30);
const FUZZ_TIME_LIMIT: Duration = Duration::from_secs(120);
const FUZZ_TRIALS: u64 = 10_000;
const RANDOM_INSTANCES: usize = 200;
const PRODUCT_LAW_CASES: usize = 500;
const ROUND_TRIP_FILES: usize = 50;
const SAMPLES: usize = 60_000;
const L1_TOLERANCE: f64 = 0.02;

type Verdict = Result<String, String>;
type Criterion = (&'static str, fn() -> Verdict);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(elapsed: Duration, limit: Duration) -> Result<(), String> {
    ensure(elapsed < limit, || format!("took {elapsed:?}, limit {limit:?}"))
}

fn err<E: std::fmt::Debug>(e: E) -> String {
    format!("{e:?}")
}

fn rng(tag: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&SEED.to_le_bytes());
    key[8..16].copy_from_slice(&tag.to_le_bytes());
    ChaCha8Rng::from_seed(key)
}

fn random_instance(r: &mut ChaCha8Rng, max_projects: usize, max_cost: u64) -> Instance {
    let n = r.gen_range(1..=max_projects);
    let costs: Vec<u64> = (0..n).map(|_| r.gen_range(1..=max_cost)).collect();
    let budget = r.gen_range(1..=costs.iter().sum::<u64>());
    Instance::from_costs(&costs, budget).unwrap()
}

fn random_set(r: &mut ChaCha8Rng, n: usize) -> ProjectSet {
    (0..n).filter(|_| r.gen_bool(0.5)).collect()
}

fn random_profile(r: &mut ChaCha8Rng, inst: &Instance, min_agents: usize, max_agents: usize) -> Profile {
    let agents = r.gen_range(min_agents..=max_agents);
    Profile::new((0..agents).map(|_| Ballot::new(inst, random_set(r, inst.num_projects())).unwrap()).collect())
}

fn random_allocation(r: &mut ChaCha8Rng, inst: &Instance) -> BudgetAllocation {
    let all = inst.enumerate_allocations(false, 20).unwrap();
    all[r.gen_range(0..all.len())].clone()
}

fn outcome(inst: &Instance, rows: &[&[&str]]) -> RuleOutcome {
    RuleOutcome::from_ids(inst, rows).unwrap()
}

fn criterion_1() -> Verdict {
    let start = Instant::now();
    let f = phragmen();
    let limits = Limits::default();
    let inst = &f.instance;
    let pi = outcome(inst, &[&["p1", "p3", "p4"]]);
    for (i, p) in f.profiles.iter().enumerate() {
        let out = RuleId::Phragmen.apply(inst, p, &limits).map_err(err)?;
        ensure(out == pi, || format!("F(A{}) = {:?}", i + 1, out.to_id_lists(inst)))?;
    }
    let report = sequential_phragmen_report(inst, &f.joint_profile(), limits.branch_cap).map_err(err)?;
    ensure(report.outcome == outcome(inst, &[&["p1", "p2", "p3"]]), || {
        format!("joint = {:?}", report.outcome.to_id_lists(inst))
    })?;
    let first: Vec<_> = report.runs.iter().map(|run| (run[0].project, run[0].time.clone())).collect();
    ensure(first.iter().all(|(p, t)| *p == 2 && *t == ratio(1, 7)), || format!("first purchases {first:?}"))?;
    within(start.elapsed(), FIXTURE_TIME_LIMIT)?;
    Ok(format!("joint {{p1,p2,p3}}, p3 bought at t=1/7, {:?}", start.elapsed()))
}

fn criterion_2() -> Verdict {
    let f = mes();
    let inst = &f.instance;
    let both = outcome(inst, &[&["p1", "p2"]]);
    let singles = outcome(inst, &[&["p1"], &["p2"]]);
    for rule in [RuleId::MesCard, RuleId::MesCost] {
        for p in &f.profiles {
            let out = rule.apply(inst, p, &Limits::default()).map_err(err)?;
            ensure(out == both, || format!("{rule}: {:?}", out.to_id_lists(inst)))?;
        }
        let joint = rule.apply(inst, &f.joint_profile(), &Limits::default()).map_err(err)?;
        ensure(!joint.winners().is_empty() && joint.iter().all(|a| singles.contains(a)), || {
            format!("{rule} joint {:?}", joint.to_id_lists(inst))
        })?;
        ensure(joint == singles, || format!("{rule} joint {:?}", joint.to_id_lists(inst)))?;
    }
    Ok("mes-card and mes-cost: {{p1,p2}}, {{p1,p2}}, joint {{p1},{p2}}".into())
}

fn criterion_3() -> Verdict {
    let f = greedy();
    let inst = &f.instance;
    let expected = [outcome(inst, &[&["p1", "p2"]]), outcome(inst, &[&["p1", "p2"]]), outcome(inst, &[&["p3"]])];
    let profiles = [f.profiles[0].clone(), f.profiles[1].clone(), f.joint_profile()];
    for (p, e) in profiles.iter().zip(&expected) {
        let out = RuleId::Greedy.apply(inst, p, &Limits::default()).map_err(err)?;
        ensure(out == *e, || format!("got {:?}", out.to_id_lists(inst)))?;
    }
    Ok("{{p1,p2}}, {{p1,p2}}, {{p3}}".into())
}

fn criterion_4() -> Verdict {
    let f = two_project();
    let inst = &f.instance;
    for kind in [ScoreKind::NashCard, ScoreKind::UtilCard] {
        let rule = RuleId::Welfare(kind);
        for (p, e) in f.profiles.iter().zip(&f.expected) {
            let out = rule.apply(inst, p, &Limits::default()).map_err(err)?;
            ensure(out == *e, || format!("{rule}: got {:?}, want {:?}", out.to_id_lists(inst), e.to_id_lists(inst)))?;
        }
    }
    Ok("nash-card and util-card match all four listed outcome sets".into())
}

fn criterion_5() -> Verdict {
    let start = Instant::now();
    let mut r = rng(5);
    let mut checked = 0;
    for i in 0..RANDOM_INSTANCES {
        let n = r.gen_range(1..=10usize);
        let costs: Vec<u64> = (0..n).map(|_| r.gen_range(1..=9)).collect();
        let mut set = random_set(&mut r, n);
        if set.is_empty() {
            set.insert(r.gen_range(0..n));
        }
        let need: u64 = set.iter().map(|p| costs[p]).sum();
        let inst = Instance::from_costs(&costs, r.gen_range(need..=costs.iter().sum())).unwrap();
        let truth = BudgetAllocation::new(&inst, set).map_err(err)?;
        for model in NoiseModel::ALL {
            let closed = normalisation_factor(model, &inst, &truth).map_err(err)?;
            let brute = brute_force_normalisation(model, &inst, &truth, 20).map_err(err)?;
            ensure(closed == brute, || format!("instance {i} {}: {closed} vs {brute}", model.name()))?;
            checked += 1;
        }
    }
    within(start.elapsed(), NORMALISATION_TIME_LIMIT)?;
    Ok(format!("{checked} exact equalities, {:?}", start.elapsed()))
}

fn criterion_6() -> Verdict {
    let start = Instant::now();
    let mut r = rng(6);
    let limits = Limits::default();
    for i in 0..RANDOM_INSTANCES {
        let inst = random_instance(&mut r, 4, 9);
        let prof = random_profile(&mut r, &inst, 1, 4);
        for (model, kind) in [(NoiseModel::Ncost, ScoreKind::NashNormCost), (NoiseModel::Napp, ScoreKind::NashNormCard)]
        {
            let rep = mle_matches_rule(model, RuleId::Welfare(kind), &inst, &prof, TruthSpace::AllFeasible, &limits)
                .map_err(err)?;
            ensure(rep.mle == rep.rule, || format!("instance {i} {}: {rep:?}", model.name()))?;
        }
    }
    within(start.elapsed(), MLE_TIME_LIMIT)?;
    Ok(format!("{} instances, both models, {:?}", RANDOM_INSTANCES, start.elapsed()))
}

fn criterion_7() -> Verdict {
    let mut r = rng(7);
    let limits = Limits::default();
    for i in 0..RANDOM_INSTANCES {
        let n = r.gen_range(1..=5usize);
        let unit = r.gen_range(1..=3u64);
        let inst = Instance::from_costs(&vec![unit; n], unit * r.gen_range(1..=n as u64)).unwrap();
        let prof = random_profile(&mut r, &inst, 1, 6);
        let m = mle(NoiseModel::App, &inst, &prof, TruthSpace::ExhaustiveOnly, limits.enumeration_cap).map_err(err)?;
        let util = RuleId::Welfare(ScoreKind::UtilCard).apply(&inst, &prof, &limits).map_err(err)?;
        let util_ex = RuleOutcome::new(util.iter().filter(|a| inst.is_exhaustive(a)).cloned()).map_err(err)?;
        let g = RuleId::Greedy.apply(&inst, &prof, &limits).map_err(err)?;
        ensure(m == util_ex && util_ex == g, || {
            format!(
                "instance {i}: mle {:?} util {:?} greedy {:?}",
                m.to_id_lists(&inst),
                util_ex.to_id_lists(&inst),
                g.to_id_lists(&inst)
            )
        })?;
    }
    Ok(format!("{RANDOM_INSTANCES} unit-cost instances"))
}

fn criterion_8() -> Verdict {
    let start = Instant::now();
    let limits = Limits::default();
    let unit = FuzzParams::default();
    let costed = FuzzParams { max_cost: 3, ..unit };
    let run = |rule: RuleId, params: &FuzzParams| fuzz_weak_reinforcement(rule, params, FUZZ_TRIALS, SEED, &limits);
    let mut lines = Vec::new();
    for kind in ScoreKind::ALL {
        let s = run(RuleId::Welfare(kind), &costed).map_err(err)?;
        ensure(s.violations == 0, || {
            format!("{} violated at trial {:?}", kind.name(), s.first_violation.map(|v| v.0))
        })?;
        lines.push(format!("{} 0", kind.name()));
    }
    for (rule, params) in
        [(RuleId::Phragmen, &unit), (RuleId::MesCard, &unit), (RuleId::MesCost, &unit), (RuleId::Greedy, &costed)]
    {
        let s = run(rule, params).map_err(err)?;
        ensure(s.violations >= 1, || format!("{rule}: no violation in {FUZZ_TRIALS} trials"))?;
        let first = s.first_violation.as_ref().unwrap();
        lines.push(format!("{rule} {} (first at {})", s.violations, first.0));
    }
    let g_unit = run(RuleId::Greedy, &unit).map_err(err)?;
    println!("info: greedy on unit-cost instances: {} violations", g_unit.violations);
    within(start.elapsed(), FUZZ_TIME_LIMIT)?;
    Ok(format!("{}; {:?}", lines.join(", "), start.elapsed()))
}

fn criterion_9() -> Verdict {
    let inst = Instance::from_costs(&[1, 2, 3], 6).unwrap();
    let ballots = all_ballots(&inst, 20).map_err(err)?;
    ensure(ballots.len() == 8, || "expected 8 ballots".into())?;
    let mut worst = 0.0f64;
    for model in NoiseModel::ALL {
        for alloc in inst.enumerate_allocations(false, 20).map_err(err)? {
            if !model.accepts(&alloc) {
                continue;
            }
            let truth = GroundTruth::new(model, alloc.clone()).map_err(err)?;
            for b in &ballots {
                let s = sampler_probability(&inst, &truth, b).map_err(err)?;
                let p = ballot_probability(model, &inst, &alloc, b).map_err(err)?;
                ensure(s == p, || format!("{}: sampler {s} vs model {p}", model.name()))?;
            }
        }
        let alloc = BudgetAllocation::from_ids(&inst, &["p1", "p3"]).unwrap();
        let truth = GroundTruth::new(model, alloc.clone()).map_err(err)?;
        let prof = sample_profile(&inst, &truth, SAMPLES, SEED, 0);
        let mut counts = BTreeMap::new();
        for b in prof.ballots() {
            *counts.entry(b.approved().clone()).or_insert(0usize) += 1;
        }
        let mut l1 = 0.0;
        for b in &ballots {
            let p = ballot_probability(model, &inst, &alloc, b).map_err(err)?;
            let p = p.numer().to_string().parse::<f64>().unwrap() / p.denom().to_string().parse::<f64>().unwrap();
            let emp = *counts.get(b.approved()).unwrap_or(&0) as f64 / SAMPLES as f64;
            l1 += (p - emp).abs();
        }
        ensure(l1 < L1_TOLERANCE, || format!("{}: L1 {l1:.4}", model.name()))?;
        worst = worst.max(l1);
    }
    Ok(format!("exact on all truths, worst L1 {worst:.4}"))
}

fn criterion_10() -> Verdict {
    let mut r = rng(10);
    for i in 0..PRODUCT_LAW_CASES {
        let inst = random_instance(&mut r, 5, 9);
        let truth = random_allocation(&mut r, &inst);
        let a = random_profile(&mut r, &inst, 0, 4);
        let b = random_profile(&mut r, &inst, 0, 4);
        for model in NoiseModel::ALL {
            let la = likelihood(model, &inst, &truth, &a).map_err(err)?;
            let lb = likelihood(model, &inst, &truth, &b).map_err(err)?;
            let lab = likelihood(model, &inst, &truth, &a.concat(&b)).map_err(err)?;
            ensure(lab == la.clone() * lb, || format!("case {i} {}: concatenation", model.name()))?;
            if !model.accepts(&truth) {
                continue;
            }
            let prod = a
                .ballots()
                .iter()
                .try_fold(one(), |acc, x| ballot_probability(model, &inst, &truth, x).map(|p| acc * p));
            ensure(prod.map_err(err)? == la, || format!("case {i} {}: product", model.name()))?;
            let total = all_ballots(&inst, 20)
                .map_err(err)?
                .iter()
                .try_fold(Rational::from_integer(0.into()), |acc, x| {
                    ballot_probability(model, &inst, &truth, x).map(|p| acc + p)
                })
                .map_err(err)?;
            ensure(total == one(), || format!("case {i} {}: total {total}", model.name()))?;
        }
    }
    Ok(format!("{PRODUCT_LAW_CASES} cases, all three models"))
}

const MALFORMED: &[&str] = &[
    "",
    "META\n",
    "PROJECTS\nproject_id;cost\np1;1\n",
    "META\nkey;value\nbudget;x\n",
    "META\nkey;value\nnum_projects;1\nnum_votes;1\nbudget;1\nvote_type;approval\nPROJECTS\nproject_id;cost\np1;1\nVOTES\nvoter_id;vote\n1;p9\n",
    "META\nkey;value\nnum_projects;1\nnum_votes;1\nbudget;1\nvote_type;approval\nPROJECTS\nproject_id;cost\np1;1\np1;1\nVOTES\nvoter_id;vote\n1;p1\n",
    "META\nkey;value\nnum_projects;1\nnum_votes;2\nbudget;1\nvote_type;approval\nPROJECTS\nproject_id;cost\np1;1\nVOTES\nvoter_id;vote\n1;p1\n",
    "META\nkey;value\nnum_projects;1\nnum_votes;1\nbudget;1\nvote_type;ordinal\nPROJECTS\nproject_id;cost\np1;1\nVOTES\nvoter_id;vote\n1;p1\n",
    "META\nkey;value\nnum_projects;1\nnum_votes;1\nbudget;1\nvote_type;approval\nPROJECTS\nproject_id\np1\nVOTES\nvoter_id;vote\n1;p1\n",
    "META\nkey;value\nnum_projects;1\nnum_votes;1\nbudget;1\nvote_type;approval\nPROJECTS\nproject_id;cost\np1;-3\nVOTES\nvoter_id;vote\n1;p1\n",
    "META\nkey;value\nnum_projects;1\nnum_votes;1\nbudget;1\nvote_type;approval\nMETA\nkey;value\n",
    "garbage;row\nMETA\n",
];

fn criterion_11() -> Verdict {
    let mut r = rng(11);
    let mut texts = Vec::new();
    for i in 0..ROUND_TRIP_FILES {
        let inst = random_instance(&mut r, 8, 50);
        let prof = random_profile(&mut r, &inst, 0, 12);
        let text = write_pb(&inst, &prof, &BTreeMap::new()).map_err(err)?;
        let parsed = parse_pb(&text).map_err(|e| format!("file {i}: {e}"))?;
        let (inst2, prof2) = parsed.to_instance_profile().map_err(err)?;
        ensure(inst2 == inst && prof2 == prof, || format!("file {i}: model changed"))?;
        let again = write_pb(&inst2, &prof2, &parsed.extra_meta()).map_err(err)?;
        ensure(again == text, || format!("file {i}: text changed"))?;
        texts.push(text);
    }
    for (i, bad) in MALFORMED.iter().enumerate() {
        match catch_unwind(|| parse_pb(bad)) {
            Ok(Err(e)) => ensure(!e.to_string().is_empty(), || format!("malformed {i}: empty diagnostic"))?,
            Ok(Ok(_)) => return Err(format!("malformed {i} accepted")),
            Err(_) => return Err(format!("malformed {i} panicked")),
        }
    }
    let mut mutated = 0;
    for text in &texts {
        for _ in 0..20 {
            let mut bytes = text.clone().into_bytes();
            let pos = r.gen_range(0..bytes.len());
            match r.gen_range(0..3) {
                0 => bytes.truncate(pos),
                1 => bytes[pos] = r.gen(),
                _ => bytes.insert(pos, b";"[0]),
            }
            let res = catch_unwind(AssertUnwindSafe(|| parse_pb_bytes(&bytes)));
            ensure(res.is_ok(), || format!("mutation panicked: {:?}", String::from_utf8_lossy(&bytes)))?;
            if let Ok(Err(e)) = res {
                ensure(!e.to_string().is_empty(), || "empty diagnostic".into())?;
            }
            mutated += 1;
        }
    }
    Ok(format!(
        "{ROUND_TRIP_FILES} round trips, {} malformed rejected, {mutated} mutations without panic",
        MALFORMED.len()
    ))
}

fn main() {
    std::panic::set_hook(Box::new(|_| {}));
    let criteria: [Criterion; 11] = [
        ("phragmen fixture", criterion_1),
        ("mes fixture", criterion_2),
        ("greedy fixture", criterion_3),
        ("two-project instance", criterion_4),
        ("normalisation factors", criterion_5),
        ("normalised nash mle equivalence", criterion_6),
        ("unit-cost exhaustive mle", criterion_7),
        ("weak reinforcement fuzz", criterion_8),
        ("sampler exactness", criterion_9),
        ("likelihood product law", criterion_10),
        ("pabulib round trip", criterion_11),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let verdict = catch_unwind(f).unwrap_or_else(|_| Err("panicked".into()));
        match verdict {
            Ok(detail) => println!("criterion {:>2} PASS  {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {name}: {detail}", i + 1)
            }
        }
    }
    println!("{} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
