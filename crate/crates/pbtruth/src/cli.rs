//! The `pbtruth` command line.
//!
//! Output is JSON on stdout (CSV or `.pb` text where requested), diagnostics
//! go to stderr. Exit codes: 0 success, 1 a check found a violation, 2 usage
//! error, 3 input or format error.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use pbtruth_core::checks::fixtures::{builtin_fixtures, verify_fixture, FixtureReport, Witness};
use pbtruth_core::checks::{ConflictWitness, FuzzParams, ViolationReport};
use pbtruth_core::mle::{mle, TruthSpace};
use pbtruth_core::noise::{check_normalisation, likelihood, sample_profile, GroundTruth, NoiseModel};
use pbtruth_core::{
    BudgetAllocation, Instance, Limits, Profile, Project, RuleId, DEFAULT_BRANCH_CAP, DEFAULT_ENUMERATION_CAP,
};
use serde_json::{json, Value};

use crate::experiments::{emit_csv, run_recovery, Estimator, ExperimentConfig, ExperimentError, DEFAULT_SEED};
use crate::format::{outcome, rational, set_ids};
use crate::pabulib::{parse_pb_bytes, write_pb, PbError, WriteError};

pub const SCHEMA: &str = "1";

pub const EXIT_OK: u8 = 0;
pub const EXIT_VIOLATION: u8 = 1;
pub const EXIT_USAGE: u8 = 2;
pub const EXIT_INPUT: u8 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "pbtruth",
    version,
    about = "Participatory budgeting rules, noise models and maximum-likelihood checks"
)]
pub struct Cli {
    /// Cap on distinct tie-branching states of irresolute rules.
    #[arg(long, global = true, env = "PB_EPISTEMIC_BRANCH_CAP", default_value_t = DEFAULT_BRANCH_CAP)]
    pub branch_cap: usize,
    /// Largest project count for brute-force enumeration.
    #[arg(long, global = true, default_value_t = DEFAULT_ENUMERATION_CAP)]
    pub enumeration_cap: usize,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a PB rule.
    #[command(subcommand)]
    Rule(RuleCommand),
    /// Brute-force maximum-likelihood truths of a profile.
    Mle(MleArgs),
    /// Sample a profile from a noise model.
    Sample(SampleArgs),
    /// Normalisation factor of a noise model, closed form and by enumeration.
    ZFactor(TruthArgs),
    /// Likelihood of a profile given a ground truth.
    Likelihood(TruthArgs),
    /// Property checks.
    #[command(subcommand)]
    Check(CheckCommand),
    /// Built-in counterexamples.
    #[command(subcommand)]
    Verify(VerifyCommand),
    /// Monte-Carlo experiments.
    #[command(subcommand)]
    Experiment(ExperimentCommand),
    /// `.pb` file utilities.
    #[command(subcommand)]
    Pb(PbCommand),
}

#[derive(Debug, Subcommand)]
pub enum RuleCommand {
    /// Compute the winning allocations.
    Run(RuleRunArgs),
}

#[derive(Debug, Subcommand)]
pub enum CheckCommand {
    /// Fuzz weak reinforcement on random instances and profile pairs.
    Reinforcement(ReinforcementArgs),
}

#[derive(Debug, Subcommand)]
pub enum VerifyCommand {
    /// Reproduce every built-in counterexample.
    Counterexamples,
}

#[derive(Debug, Subcommand)]
pub enum ExperimentCommand {
    /// Truth-recovery rates of rules and the MLE on sampled profiles.
    Recovery(RecoveryArgs),
}

#[derive(Debug, Subcommand)]
pub enum PbCommand {
    /// Parse and check a `.pb` file.
    Validate(PbValidateArgs),
}

/// Instance and profile, inline or from a `.pb` file.
#[derive(Debug, Args)]
pub struct InputArgs {
    /// `.pb` file holding the instance and, unless --profile is given, the votes.
    #[arg(long, value_name = "FILE", conflicts_with_all = ["projects", "budget"])]
    pub instance: Option<PathBuf>,
    /// Inline projects, e.g. "p1:1,p2:1,p3:2".
    #[arg(long, value_name = "ID:COST,...", value_parser = parse_projects, requires = "budget")]
    pub projects: Option<ProjectsSpec>,
    #[arg(long, requires = "projects")]
    pub budget: Option<u64>,
    /// Inline profile, agents separated by '|', e.g. "p1|p2|p1,p2". An empty
    /// segment or "-" is an empty ballot.
    #[arg(long, value_name = "BALLOTS", value_parser = parse_profile, allow_hyphen_values = true)]
    pub profile: Option<ProfileSpec>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SatisfactionArg {
    Card,
    Cost,
}

#[derive(Debug, Args)]
pub struct RuleRunArgs {
    /// Rule name: a welfare score name, greedy, phragmen, mes, mes-card or mes-cost.
    #[arg(long, value_parser = rule_names())]
    pub rule: String,
    /// Satisfaction function for --rule mes.
    #[arg(long, value_enum)]
    pub satisfaction: Option<SatisfactionArg>,
    #[command(flatten)]
    pub input: InputArgs,
}

#[derive(Debug, Args)]
pub struct MleArgs {
    #[arg(long, value_parser = parse_model)]
    pub model: NoiseModel,
    #[arg(long, value_parser = parse_space, default_value = "all")]
    pub space: TruthSpace,
    #[command(flatten)]
    pub input: InputArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SampleFormat {
    Json,
    Pb,
}

#[derive(Debug, Args)]
pub struct SampleArgs {
    #[arg(long, value_parser = parse_model)]
    pub model: NoiseModel,
    /// Ground truth, e.g. "p1,p3"; "-" or "" for the empty allocation.
    #[arg(long, value_parser = parse_ids, allow_hyphen_values = true)]
    pub truth: IdList,
    #[arg(long)]
    pub agents: usize,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    #[arg(long, default_value_t = 0)]
    pub trial: u64,
    #[arg(long, value_enum, default_value = "json")]
    pub out: SampleFormat,
    #[command(flatten)]
    pub input: InputArgs,
}

#[derive(Debug, Args)]
pub struct TruthArgs {
    #[arg(long, value_parser = parse_model)]
    pub model: NoiseModel,
    #[arg(long, value_parser = parse_ids, allow_hyphen_values = true)]
    pub truth: IdList,
    #[command(flatten)]
    pub input: InputArgs,
}

#[derive(Debug, Args)]
pub struct ReinforcementArgs {
    #[arg(long, value_parser = rule_names())]
    pub rule: String,
    #[arg(long, value_enum)]
    pub satisfaction: Option<SatisfactionArg>,
    #[arg(long, default_value_t = 10_000)]
    pub trials: u64,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    #[arg(long, default_value_t = FuzzParams::default().min_projects)]
    pub min_projects: usize,
    #[arg(long, default_value_t = FuzzParams::default().max_projects)]
    pub max_projects: usize,
    /// Largest project cost; 1 gives unit-cost instances.
    #[arg(long, default_value_t = FuzzParams::default().max_cost)]
    pub max_cost: u64,
    #[arg(long, default_value_t = FuzzParams::default().max_agents)]
    pub max_agents: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TableFormat {
    Csv,
    Json,
}

/// Without --instance or --projects the built-in example is used: costs
/// (1,1,2,2), budget 4, truth p1,p3, model m-ncost.
#[derive(Debug, Args)]
pub struct RecoveryArgs {
    #[arg(long, value_parser = parse_model)]
    pub model: Option<NoiseModel>,
    #[arg(long, value_parser = parse_ids, allow_hyphen_values = true)]
    pub truth: Option<IdList>,
    /// Comma-separated estimators: rule names or "mle".
    #[arg(long, value_delimiter = ',', value_parser = parse_estimator)]
    pub rules: Option<Vec<Estimator>>,
    #[arg(long, value_delimiter = ',')]
    pub n_grid: Option<Vec<usize>>,
    #[arg(long)]
    pub trials: Option<u64>,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    #[arg(long, value_parser = parse_space, default_value = "all")]
    pub space: TruthSpace,
    #[arg(long, value_enum, default_value = "csv")]
    pub out: TableFormat,
    #[command(flatten)]
    pub input: InputArgs,
}

#[derive(Debug, Args)]
pub struct PbValidateArgs {
    pub file: PathBuf,
    /// Print the canonical form of the file instead of a summary.
    #[arg(long)]
    pub canonical: bool,
}

/// Inline `id:cost` list.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProjectsSpec(pub Vec<(String, u64)>);

/// Comma-separated project ids.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IdList(pub Vec<String>);

/// One id list per agent.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProfileSpec(pub Vec<Vec<String>>);

fn parse_projects(s: &str) -> Result<ProjectsSpec, String> {
    s.split(',')
        .map(|item| {
            let (id, cost) = item.split_once(':').ok_or_else(|| format!("expected ID:COST, found {item:?}"))?;
            let cost = cost.trim().parse::<u64>().map_err(|_| format!("invalid cost in {item:?}"))?;
            let id = id.trim();
            if id.is_empty() {
                return Err(format!("empty project id in {item:?}"));
            }
            Ok((id.to_string(), cost))
        })
        .collect::<Result<_, _>>()
        .map(ProjectsSpec)
}

fn parse_ids(s: &str) -> Result<IdList, String> {
    split_ids(s).map(IdList)
}

fn split_ids(s: &str) -> Result<Vec<String>, String> {
    let s = s.trim();
    if s.is_empty() || s == "-" {
        return Ok(Vec::new());
    }
    s.split(',')
        .map(|id| match id.trim() {
            "" => Err(format!("empty project id in {s:?}")),
            id => Ok(id.to_string()),
        })
        .collect()
}

fn parse_profile(s: &str) -> Result<ProfileSpec, String> {
    s.split('|').map(split_ids).collect::<Result<_, _>>().map(ProfileSpec)
}

fn parse_model(s: &str) -> Result<NoiseModel, String> {
    s.parse().map_err(|_| format!("unknown model {s:?} (expected m-app, m-ncost or m-napp)"))
}

fn parse_space(s: &str) -> Result<TruthSpace, String> {
    s.parse().map_err(|_| format!("unknown space {s:?} (expected all, exhaustive or nondegenerate)"))
}

fn parse_estimator(s: &str) -> Result<Estimator, String> {
    if s == "mes" {
        return Err("use mes-card or mes-cost in --rules".to_string());
    }
    s.parse().map_err(|_| format!("unknown rule {s:?}"))
}

fn rule_names() -> clap::builder::PossibleValuesParser {
    let mut names: Vec<&'static str> = RuleId::ALL.iter().map(|r| r.name()).collect();
    names.push("mes");
    clap::builder::PossibleValuesParser::new(names)
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Model(#[from] pbtruth_core::Error),
    #[error("{path}: {source}")]
    Pb { path: String, source: PbError },
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error(transparent)]
    Write(#[from] WriteError),
    #[error(transparent)]
    Experiment(#[from] ExperimentError),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            _ => EXIT_INPUT,
        }
    }
}

/// What a command prints and the exit code it reports.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Output {
    pub stdout: String,
    pub code: u8,
}

impl Output {
    fn json(v: Value, code: u8) -> Self {
        let mut stdout = serde_json::to_string_pretty(&v).expect("values serialise");
        stdout.push('\n');
        Output { stdout, code }
    }
}

fn resolve_rule(name: &str, satisfaction: Option<SatisfactionArg>) -> Result<RuleId, CliError> {
    match (name, satisfaction) {
        ("mes", None | Some(SatisfactionArg::Card)) => Ok(RuleId::MesCard),
        ("mes", Some(SatisfactionArg::Cost)) => Ok(RuleId::MesCost),
        (_, Some(_)) => Err(CliError::Usage("--satisfaction only applies to --rule mes".to_string())),
        (name, None) => name.parse().map_err(|_| CliError::Usage(format!("unknown rule {name:?}"))),
    }
}

fn read_file(path: &PathBuf) -> Result<Vec<u8>, CliError> {
    std::fs::read(path).map_err(|source| CliError::Io { path: path.display().to_string(), source })
}

fn load_instance(input: &InputArgs) -> Result<(Instance, Option<Profile>), CliError> {
    if let Some(path) = &input.instance {
        let file = parse_pb_bytes(&read_file(path)?)
            .map_err(|source| CliError::Pb { path: path.display().to_string(), source })?;
        let (inst, prof) = file.to_instance_profile()?;
        return Ok((inst, Some(prof)));
    }
    match (&input.projects, input.budget) {
        (Some(projects), Some(budget)) => {
            let inst = Instance::new(projects.0.iter().map(|(id, c)| Project::new(id.clone(), *c)).collect(), budget)?;
            Ok((inst, None))
        }
        _ => Err(CliError::Usage("give --instance FILE or --projects with --budget".to_string())),
    }
}

/// Instance and profile; an inline --profile replaces the file's votes.
fn load_input(input: &InputArgs) -> Result<(Instance, Profile), CliError> {
    let (inst, file_profile) = load_instance(input)?;
    let prof = match (&input.profile, file_profile) {
        (Some(rows), _) => inline_profile(&inst, &rows.0)?,
        (None, Some(p)) => p,
        (None, None) => return Err(CliError::Usage("--profile is required with inline projects".to_string())),
    };
    Ok((inst, prof))
}

fn inline_profile(inst: &Instance, rows: &[Vec<String>]) -> Result<Profile, CliError> {
    let ballots =
        rows.iter().map(|r| pbtruth_core::Ballot::from_ids(inst, r)).collect::<pbtruth_core::Result<Vec<_>>>()?;
    Ok(Profile::new(ballots))
}

fn instance_json(inst: &Instance) -> Value {
    json!({
        "budget": inst.budget(),
        "projects": inst.projects().iter().map(|p| json!({"id": p.id, "cost": p.cost})).collect::<Vec<_>>(),
    })
}

fn profile_json(inst: &Instance, prof: &Profile) -> Value {
    json!(prof.ballots().iter().map(|b| inst.ids_of(b.approved())).collect::<Vec<_>>())
}

fn violation_json(v: &ViolationReport) -> Value {
    let inst = &v.instance;
    json!({
        "kind": "weak-reinforcement",
        "rule": v.rule.name(),
        "instance": instance_json(inst),
        "profile_a": profile_json(inst, &v.profile_a),
        "profile_b": profile_json(inst, &v.profile_b),
        "outcome_a": outcome(inst, &v.outcome_a),
        "outcome_b": outcome(inst, &v.outcome_b),
        "outcome_joint": outcome(inst, &v.outcome_joint),
        "disjoint": v.disjoint(),
    })
}

fn conflict_json(w: &ConflictWitness) -> Value {
    let inst = &w.instance;
    let relation = |r: Option<std::cmp::Ordering>| match r {
        Some(std::cmp::Ordering::Greater) => ">",
        Some(std::cmp::Ordering::Equal) => "=",
        Some(std::cmp::Ordering::Less) => "<",
        None => "?",
    };
    json!({
        "kind": "normalisation-conflict",
        "rule": w.rule.name(),
        "instance": instance_json(inst),
        "truth_a": set_ids(inst, w.truth_a.projects()),
        "truth_b": set_ids(inst, w.truth_b.projects()),
        "ballots": w.relations.iter().map(|r| json!({
            "ballot": set_ids(inst, r.ballot.approved()),
            "outcome": outcome(inst, &r.outcome),
            "relation": relation(r.relation),
        })).collect::<Vec<_>>(),
    })
}

fn fixture_json(f: &pbtruth_core::checks::fixtures::Fixture, r: &FixtureReport) -> Value {
    let inst = &f.instance;
    json!({
        "fixture": r.name,
        "reproduced": r.reproduced(),
        "instance": instance_json(inst),
        "profiles": f.profiles.iter().map(|p| profile_json(inst, p)).collect::<Vec<_>>(),
        "rules": r.checks.iter().map(|c| json!({
            "rule": c.rule.name(),
            "reproduced": c.reproduced,
            "outcomes": c.outcomes.iter().map(|o| outcome(inst, o)).collect::<Vec<_>>(),
            "joint": c.joint.as_ref().map(|o| outcome(inst, o)),
            "witness": match &c.witness {
                Some(Witness::Violation(v)) => violation_json(v),
                Some(Witness::Conflict(w)) => conflict_json(w),
                None => Value::Null,
            },
        })).collect::<Vec<_>>(),
    })
}

fn truth_allocation(inst: &Instance, ids: &IdList) -> Result<BudgetAllocation, CliError> {
    Ok(BudgetAllocation::from_ids(inst, &ids.0)?)
}

pub fn execute(cli: &Cli) -> Result<Output, CliError> {
    let limits = Limits { enumeration_cap: cli.enumeration_cap, branch_cap: cli.branch_cap };
    match &cli.command {
        Command::Rule(RuleCommand::Run(args)) => {
            let rule = resolve_rule(&args.rule, args.satisfaction)?;
            let (inst, prof) = load_input(&args.input)?;
            let out = rule.apply(&inst, &prof, &limits)?;
            Ok(Output::json(
                json!({"schema": SCHEMA, "command": "rule run", "rule": rule.name(), "winners": outcome(&inst, &out)}),
                EXIT_OK,
            ))
        }
        Command::Mle(args) => {
            let (inst, prof) = load_input(&args.input)?;
            let out = mle(args.model, &inst, &prof, args.space, limits.enumeration_cap)?;
            let best = out.iter().next().map(|w| likelihood(args.model, &inst, w, &prof)).transpose()?;
            Ok(Output::json(
                json!({
                    "schema": SCHEMA,
                    "command": "mle",
                    "model": args.model.name(),
                    "space": args.space.name(),
                    "winners": outcome(&inst, &out),
                    "likelihood": best.as_ref().map(rational),
                }),
                EXIT_OK,
            ))
        }
        Command::Sample(args) => {
            let (inst, _) = load_instance(&args.input)?;
            let truth = GroundTruth::new(args.model, truth_allocation(&inst, &args.truth)?)?;
            let prof = sample_profile(&inst, &truth, args.agents, args.seed, args.trial);
            match args.out {
                SampleFormat::Pb => Ok(Output { stdout: write_pb(&inst, &prof, &BTreeMap::new())?, code: EXIT_OK }),
                SampleFormat::Json => Ok(Output::json(
                    json!({
                        "schema": SCHEMA,
                        "command": "sample",
                        "model": args.model.name(),
                        "truth": set_ids(&inst, truth.allocation().projects()),
                        "seed": args.seed,
                        "trial": args.trial,
                        "ballots": profile_json(&inst, &prof),
                    }),
                    EXIT_OK,
                )),
            }
        }
        Command::ZFactor(args) => {
            let (inst, _) = load_instance(&args.input)?;
            let truth = truth_allocation(&inst, &args.truth)?;
            let check = check_normalisation(args.model, &inst, &truth, limits.enumeration_cap)?;
            let code = if check.consistent() { EXIT_OK } else { EXIT_VIOLATION };
            Ok(Output::json(
                json!({
                    "schema": SCHEMA,
                    "command": "z-factor",
                    "model": args.model.name(),
                    "truth": set_ids(&inst, truth.projects()),
                    "closed_form": rational(&check.closed_form),
                    "brute_force": check.brute_force.as_ref().map(rational),
                    "consistent": check.consistent(),
                }),
                code,
            ))
        }
        Command::Likelihood(args) => {
            let (inst, prof) = load_input(&args.input)?;
            let truth = truth_allocation(&inst, &args.truth)?;
            let l = likelihood(args.model, &inst, &truth, &prof)?;
            Ok(Output::json(
                json!({
                    "schema": SCHEMA,
                    "command": "likelihood",
                    "model": args.model.name(),
                    "truth": set_ids(&inst, truth.projects()),
                    "degenerate": !args.model.accepts(&truth),
                    "likelihood": rational(&l),
                }),
                EXIT_OK,
            ))
        }
        Command::Check(CheckCommand::Reinforcement(args)) => {
            let rule = resolve_rule(&args.rule, args.satisfaction)?;
            let params = FuzzParams {
                min_projects: args.min_projects,
                max_projects: args.max_projects,
                max_cost: args.max_cost,
                max_agents: args.max_agents,
            };
            pbtruth_core::checks::fuzz_case(&params, args.seed, 0).map_err(|e| CliError::Usage(e.to_string()))?;
            if args.trials == 0 {
                return Err(CliError::Usage("--trials must be at least 1".to_string()));
            }
            let s = crate::fuzz::fuzz_weak_reinforcement(rule, &params, args.trials, args.seed, &limits)?;
            let code = if s.violations > 0 { EXIT_VIOLATION } else { EXIT_OK };
            Ok(Output::json(
                json!({
                    "schema": SCHEMA,
                    "command": "check reinforcement",
                    "rule": rule.name(),
                    "seed": args.seed,
                    "trials": s.trials,
                    "applicable": s.applicable,
                    "violations": s.violations,
                    "first_violation": s.first_violation.as_ref().map(|(t, v)| {
                        let mut j = violation_json(v);
                        j["trial"] = json!(t);
                        j
                    }),
                }),
                code,
            ))
        }
        Command::Verify(VerifyCommand::Counterexamples) => {
            let fixtures = builtin_fixtures();
            let mut items = Vec::with_capacity(fixtures.len());
            let mut found = 0usize;
            for f in &fixtures {
                let report = verify_fixture(f, &limits)?;
                found += usize::from(report.checks.iter().any(|c| c.witness.is_some()));
                items.push(fixture_json(f, &report));
            }
            let code = if found > 0 { EXIT_VIOLATION } else { EXIT_OK };
            Ok(Output::json(
                json!({"schema": SCHEMA, "command": "verify counterexamples", "violations": found, "counterexamples": items}),
                code,
            ))
        }
        Command::Experiment(ExperimentCommand::Recovery(args)) => {
            let mut cfg = ExperimentConfig::example();
            if args.input.instance.is_some() || args.input.projects.is_some() {
                let (inst, _) = load_instance(&args.input)?;
                let truth = args
                    .truth
                    .as_ref()
                    .ok_or_else(|| CliError::Usage("--truth is required with a custom instance".to_string()))?;
                cfg.truth = truth_allocation(&inst, truth)?;
                cfg.instance = inst;
            } else if let Some(truth) = &args.truth {
                cfg.truth = truth_allocation(&cfg.instance, truth)?;
            }
            if let Some(m) = args.model {
                cfg.model = m;
            }
            if let Some(r) = &args.rules {
                cfg.estimators = r.clone();
            }
            if let Some(n) = &args.n_grid {
                cfg.agent_counts = n.clone();
            }
            if let Some(t) = args.trials {
                cfg.trials = t;
            }
            cfg.seed = args.seed;
            cfg.space = args.space;
            cfg.limits = limits;
            let rows = run_recovery(&cfg)?;
            match args.out {
                TableFormat::Csv => Ok(Output { stdout: emit_csv(&rows), code: EXIT_OK }),
                TableFormat::Json => Ok(Output::json(
                    json!({
                        "schema": SCHEMA,
                        "command": "experiment recovery",
                        "model": cfg.model.name(),
                        "truth": set_ids(&cfg.instance, cfg.truth.projects()),
                        "seed": cfg.seed,
                        "trials": cfg.trials,
                        "rows": rows.iter().map(|r| json!({
                            "rule": r.estimator,
                            "n_agents": r.agents,
                            "exact_recovery": rational(&r.exact_recovery()),
                            "hit_rate": rational(&r.hit_rate()),
                            "mean_winners": rational(&r.mean_winners()),
                        })).collect::<Vec<_>>(),
                    }),
                    EXIT_OK,
                )),
            }
        }
        Command::Pb(PbCommand::Validate(args)) => {
            let path = args.file.display().to_string();
            let file = parse_pb_bytes(&read_file(&args.file)?)
                .map_err(|source| CliError::Pb { path: path.clone(), source })?;
            let (inst, prof) = file.to_instance_profile()?;
            if args.canonical {
                return Ok(Output { stdout: write_pb(&inst, &prof, &file.extra_meta())?, code: EXIT_OK });
            }
            Ok(Output::json(
                json!({
                    "schema": SCHEMA,
                    "command": "pb validate",
                    "file": path,
                    "valid": true,
                    "budget": inst.budget(),
                    "num_projects": inst.num_projects(),
                    "num_votes": prof.len(),
                    "unit_cost": inst.is_unit_cost(),
                }),
                EXIT_OK,
            ))
        }
    }
}

/// Parses `args`, runs the command and writes its output. Returns the exit
/// code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            if e.use_stderr() {
                let _ = write!(stderr, "{text}");
                return EXIT_USAGE;
            }
            let _ = write!(stdout, "{text}");
            return EXIT_OK;
        }
    };
    match execute(&cli) {
        Ok(out) => {
            let _ = stdout.write_all(out.stdout.as_bytes());
            out.code
        }
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.exit_code()
        }
    }
}

pub fn main_with_args<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    run(args, &mut std::io::stdout().lock(), &mut std::io::stderr().lock())
}
