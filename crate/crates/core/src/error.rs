use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum Error {
    #[error("instance has no projects")]
    NoProjects,
    #[error("budget limit must be at least 1")]
    ZeroBudget,
    #[error("project `{0}` has cost 0; costs must be positive integers")]
    ZeroCost(String),
    #[error("duplicate project id `{0}`")]
    DuplicateProject(String),
    #[error("unknown project `{0}`")]
    UnknownProject(String),
    #[error("project index {index} is out of range for an instance with {len} projects")]
    ProjectIndexOutOfRange { index: usize, len: usize },
    #[error("allocation costs {cost}, which exceeds the budget limit {budget}")]
    Infeasible { cost: u64, budget: u64 },
    #[error("enumeration over {projects} projects exceeds the cap of {cap}")]
    EnumerationLimit { projects: usize, cap: usize },
    #[error("tie branching exceeded the cap of {cap} branches")]
    BranchLimit { cap: usize },
    #[error("profile has no ballots")]
    EmptyProfile,
    #[error("a rule outcome must contain at least one allocation")]
    EmptyOutcome,
    #[error("ground truth makes the noise model undefined (normalisation factor is zero)")]
    DegenerateTruth,
    #[error("the truth space is empty for this instance")]
    EmptyTruthSpace,
    #[error("satisfaction levels must be positive and cover every project")]
    InvalidSatisfaction,
    #[error("number of trials must be at least 1")]
    ZeroTrials,
    #[error("invalid generator parameters: {0}")]
    InvalidGenerator(&'static str),
    #[error("unknown name `{0}`")]
    UnknownName(String),
}
