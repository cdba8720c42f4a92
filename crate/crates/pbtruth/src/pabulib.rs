//! Reader and writer for pabulib `.pb` election files (approval votes only).
//!
//! A file has three sections, each introduced by a line holding only the
//! section name:
//!
//! ```text
//! META
//! key;value
//! num_projects;2
//! num_votes;2
//! budget;2
//! vote_type;approval
//! PROJECTS
//! project_id;cost
//! p1;1
//! p2;1
//! VOTES
//! voter_id;vote
//! 1;p1,p2
//! 2;
//! ```
//!
//! Fields are semicolon separated and may be double-quoted. Unknown meta
//! keys and extra columns are kept but otherwise ignored. Diagnostics carry
//! the 1-based line and the 1-based field number as column.

use std::collections::{BTreeMap, HashMap, HashSet};

use csv::{ReaderBuilder, StringRecord, Trim, WriterBuilder};
use pbtruth_core::{Ballot, Instance, Profile, Project};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PbError {
    #[error("line {line}: {message}")]
    Syntax { line: u64, message: String },
    #[error("line {line}: invalid UTF-8")]
    Utf8 { line: u64 },
    #[error("line {line}: row outside of any section")]
    OutsideSection { line: u64 },
    #[error("line {line}: section {name} appears twice")]
    DuplicateSection { line: u64, name: String },
    #[error("missing section {0}")]
    MissingSection(&'static str),
    #[error("line {line}, column 1: unexpected single-field row {value:?}")]
    UnexpectedRow { line: u64, value: String },
    #[error("line {line}, column {column}: {section} header lacks column {name:?}")]
    MissingColumn { line: u64, column: usize, section: &'static str, name: &'static str },
    #[error("line {line}: expected at least {expected} fields, found {found}")]
    FieldCount { line: u64, expected: usize, found: usize },
    #[error("missing meta key {0:?}")]
    MissingMeta(&'static str),
    #[error("line {line}, column 1: duplicate meta key {key:?}")]
    DuplicateMeta { line: u64, key: String },
    #[error("line {line}, column 2: vote_type {found:?} is not supported (only \"approval\")")]
    UnsupportedVoteType { line: u64, found: String },
    #[error("line {line}, column {column}: {what} {value:?} is not a valid integer")]
    InvalidInteger { line: u64, column: usize, what: &'static str, value: String },
    #[error("line {line}: {what} declares {declared} but {actual} rows follow")]
    CountMismatch { line: u64, what: &'static str, declared: u64, actual: u64 },
    #[error("line {line}, column {column}: duplicate project id {id:?}")]
    DuplicateProject { line: u64, column: usize, id: String },
    #[error("line {line}, column {column}: duplicate voter id {id:?}")]
    DuplicateVoter { line: u64, column: usize, id: String },
    #[error("line {line}, column {column}: empty id")]
    EmptyId { line: u64, column: usize },
    #[error("line {line}, column {column}: vote references unknown project {id:?}")]
    DanglingReference { line: u64, column: usize, id: String },
    #[error("line {line}, column {column}: project {id:?} approved twice")]
    DuplicateApproval { line: u64, column: usize, id: String },
}

impl PbError {
    pub fn line(&self) -> Option<u64> {
        match self {
            PbError::MissingSection(_) | PbError::MissingMeta(_) => None,
            PbError::Syntax { line, .. }
            | PbError::Utf8 { line }
            | PbError::OutsideSection { line }
            | PbError::DuplicateSection { line, .. }
            | PbError::UnexpectedRow { line, .. }
            | PbError::MissingColumn { line, .. }
            | PbError::FieldCount { line, .. }
            | PbError::DuplicateMeta { line, .. }
            | PbError::UnsupportedVoteType { line, .. }
            | PbError::InvalidInteger { line, .. }
            | PbError::CountMismatch { line, .. }
            | PbError::DuplicateProject { line, .. }
            | PbError::DuplicateVoter { line, .. }
            | PbError::EmptyId { line, .. }
            | PbError::DanglingReference { line, .. }
            | PbError::DuplicateApproval { line, .. } => Some(*line),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum WriteError {
    #[error("project id {0:?} cannot be written: ids must be nonempty, untrimmed and free of ','")]
    UnrepresentableId(String),
    #[error("meta key {0:?} is computed from the instance and cannot be overridden")]
    ReservedMetaKey(String),
    #[error("meta entry {0:?} cannot be written: keys and values must be untrimmed")]
    UnrepresentableMeta(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PbProject {
    pub id: String,
    pub cost: u64,
    /// Columns other than `project_id` and `cost`, by header name.
    pub extra: Vec<(String, String)>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PbVote {
    pub voter_id: String,
    pub approved: Vec<String>,
    pub extra: Vec<(String, String)>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PbFile {
    /// Meta entries in file order.
    pub meta: Vec<(String, String)>,
    pub budget: u64,
    pub projects: Vec<PbProject>,
    pub votes: Vec<PbVote>,
}

const RESERVED_META: [&str; 4] = ["num_projects", "num_votes", "budget", "vote_type"];

impl PbFile {
    pub fn meta(&self, key: &str) -> Option<&str> {
        self.meta.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    /// Meta entries other than the counts, budget and vote type.
    pub fn extra_meta(&self) -> BTreeMap<String, String> {
        self.meta.iter().filter(|(k, _)| !RESERVED_META.contains(&k.as_str())).cloned().collect()
    }

    /// The instance and the profile, voters in file order.
    pub fn to_instance_profile(&self) -> pbtruth_core::Result<(Instance, Profile)> {
        let inst =
            Instance::new(self.projects.iter().map(|p| Project::new(p.id.clone(), p.cost)).collect(), self.budget)?;
        let ballots = self
            .votes
            .iter()
            .map(|v| Ballot::from_ids(&inst, &v.approved))
            .collect::<pbtruth_core::Result<Vec<_>>>()?;
        Ok((inst, Profile::new(ballots)))
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Section {
    Meta,
    Projects,
    Votes,
}

impl Section {
    fn parse(name: &str) -> Option<Self> {
        match name {
            "META" => Some(Section::Meta),
            "PROJECTS" => Some(Section::Projects),
            "VOTES" => Some(Section::Votes),
            _ => None,
        }
    }

    fn name(self) -> &'static str {
        match self {
            Section::Meta => "META",
            Section::Projects => "PROJECTS",
            Section::Votes => "VOTES",
        }
    }
}

struct Header {
    columns: Vec<String>,
    key: usize,
    value: usize,
}

impl Header {
    fn new(
        record: &StringRecord,
        line: u64,
        section: &'static str,
        key: &'static str,
        value: &'static str,
    ) -> Result<Self, PbError> {
        let columns: Vec<String> = record.iter().map(str::to_string).collect();
        let find = |name: &'static str| {
            columns.iter().position(|c| c == name).ok_or(PbError::MissingColumn {
                line,
                column: columns.len() + 1,
                section,
                name,
            })
        };
        Ok(Header { key: find(key)?, value: find(value)?, columns })
    }

    fn extras(&self, record: &StringRecord) -> Vec<(String, String)> {
        self.columns
            .iter()
            .enumerate()
            .filter(|&(i, _)| i != self.key && i != self.value)
            .map(|(i, name)| (name.clone(), record.get(i).unwrap_or_default().to_string()))
            .collect()
    }

    fn check_len(&self, record: &StringRecord, line: u64) -> Result<(), PbError> {
        let expected = self.key.max(self.value) + 1;
        if record.len() < expected {
            return Err(PbError::FieldCount { line, expected, found: record.len() });
        }
        Ok(())
    }
}

fn parse_u64(value: &str, line: u64, column: usize, what: &'static str, positive: bool) -> Result<u64, PbError> {
    match value.parse::<u64>() {
        Ok(v) if !positive || v > 0 => Ok(v),
        _ => Err(PbError::InvalidInteger { line, column, what, value: value.to_string() }),
    }
}

pub fn parse_pb(text: &str) -> Result<PbFile, PbError> {
    parse_pb_bytes(text.as_bytes())
}

pub fn parse_pb_bytes(bytes: &[u8]) -> Result<PbFile, PbError> {
    let mut reader =
        ReaderBuilder::new().delimiter(b';').has_headers(false).flexible(true).trim(Trim::All).from_reader(bytes);

    let mut section: Option<Section> = None;
    let mut seen: Vec<Section> = Vec::new();
    let mut header: Option<Header> = None;
    let mut meta: Vec<(String, String)> = Vec::new();
    let mut meta_lines: HashMap<String, u64> = HashMap::new();
    let mut projects: Vec<PbProject> = Vec::new();
    let mut project_ids: HashSet<String> = HashSet::new();
    let mut votes: Vec<PbVote> = Vec::new();
    let mut vote_lines: Vec<u64> = Vec::new();
    let mut voter_ids: HashSet<String> = HashSet::new();

    let mut record = StringRecord::new();
    loop {
        let line = reader.position().line();
        match reader.read_record(&mut record) {
            Ok(true) => {}
            Ok(false) => break,
            Err(e) => return Err(csv_error(&e, line)),
        }
        let line = record.position().map_or(line, |p| p.line());
        if record.len() == 1 {
            let name = &record[0];
            match Section::parse(name) {
                Some(s) if seen.contains(&s) => return Err(PbError::DuplicateSection { line, name: name.to_string() }),
                Some(s) => {
                    seen.push(s);
                    section = Some(s);
                    header = None;
                    continue;
                }
                None => return Err(PbError::UnexpectedRow { line, value: name.to_string() }),
            }
        }
        match section {
            None => return Err(PbError::OutsideSection { line }),
            Some(Section::Meta) => {
                if meta.is_empty() && header.is_none() && &record[0] == "key" && record.get(1) == Some("value") {
                    header = Some(Header { columns: vec!["key".into(), "value".into()], key: 0, value: 1 });
                    continue;
                }
                if record.len() < 2 {
                    return Err(PbError::FieldCount { line, expected: 2, found: record.len() });
                }
                let key = record[0].to_string();
                if meta_lines.insert(key.clone(), line).is_some() {
                    return Err(PbError::DuplicateMeta { line, key });
                }
                meta.push((key, record[1].to_string()));
            }
            Some(Section::Projects) => {
                let Some(h) = &header else {
                    header = Some(Header::new(&record, line, "PROJECTS", "project_id", "cost")?);
                    continue;
                };
                h.check_len(&record, line)?;
                let id = record[h.key].to_string();
                if id.is_empty() {
                    return Err(PbError::EmptyId { line, column: h.key + 1 });
                }
                let cost = parse_u64(&record[h.value], line, h.value + 1, "cost", true)?;
                if !project_ids.insert(id.clone()) {
                    return Err(PbError::DuplicateProject { line, column: h.key + 1, id });
                }
                projects.push(PbProject { id, cost, extra: h.extras(&record) });
            }
            Some(Section::Votes) => {
                let Some(h) = &header else {
                    header = Some(Header::new(&record, line, "VOTES", "voter_id", "vote")?);
                    continue;
                };
                h.check_len(&record, line)?;
                let voter_id = record[h.key].to_string();
                if !voter_ids.insert(voter_id.clone()) {
                    return Err(PbError::DuplicateVoter { line, column: h.key + 1, id: voter_id });
                }
                let field = &record[h.value];
                let approved: Vec<String> = if field.is_empty() {
                    Vec::new()
                } else {
                    field.split(',').map(|s| s.trim().to_string()).collect()
                };
                if approved.iter().any(String::is_empty) {
                    return Err(PbError::EmptyId { line, column: h.value + 1 });
                }
                votes.push(PbVote { voter_id, approved, extra: h.extras(&record) });
                vote_lines.push(line);
            }
        }
    }

    for s in [Section::Meta, Section::Projects, Section::Votes] {
        if !seen.contains(&s) {
            return Err(PbError::MissingSection(s.name()));
        }
    }
    let get = |key: &'static str| -> Result<(&str, u64), PbError> {
        let value = meta.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str()).ok_or(PbError::MissingMeta(key))?;
        Ok((value, meta_lines[key]))
    };
    let (vote_type, line) = get("vote_type")?;
    if vote_type != "approval" {
        return Err(PbError::UnsupportedVoteType { line, found: vote_type.to_string() });
    }
    let (value, line) = get("budget")?;
    let budget = parse_u64(value, line, 2, "budget", true)?;
    for (key, actual) in [("num_projects", projects.len()), ("num_votes", votes.len())] {
        let (value, line) = get(key)?;
        let declared = parse_u64(value, line, 2, key, false)?;
        if declared != actual as u64 {
            return Err(PbError::CountMismatch { line, what: key, declared, actual: actual as u64 });
        }
    }
    if projects.is_empty() {
        return Err(PbError::CountMismatch {
            line: meta_lines["num_projects"],
            what: "num_projects",
            declared: 0,
            actual: 0,
        });
    }
    for (vote, &line) in votes.iter().zip(&vote_lines) {
        let mut seen = HashSet::new();
        for id in &vote.approved {
            if !project_ids.contains(id) {
                return Err(PbError::DanglingReference { line, column: 2, id: id.clone() });
            }
            if !seen.insert(id) {
                return Err(PbError::DuplicateApproval { line, column: 2, id: id.clone() });
            }
        }
    }
    Ok(PbFile { meta, budget, projects, votes })
}

fn csv_error(e: &csv::Error, line: u64) -> PbError {
    match e.kind() {
        csv::ErrorKind::Utf8 { pos, .. } => PbError::Utf8 { line: pos.as_ref().map_or(line, |p| p.line()) },
        _ => PbError::Syntax { line: e.position().map_or(line, |p| p.line()), message: e.to_string() },
    }
}

fn representable(s: &str) -> bool {
    !s.is_empty() && s.trim() == s && !s.contains(',')
}

/// Canonical text for an instance and profile: sections in the order META,
/// PROJECTS, VOTES; computed meta keys first, then `meta` sorted by key;
/// projects in instance order; voters numbered from 1.
pub fn write_pb(inst: &Instance, prof: &Profile, meta: &BTreeMap<String, String>) -> Result<String, WriteError> {
    for p in inst.projects() {
        if !representable(&p.id) {
            return Err(WriteError::UnrepresentableId(p.id.clone()));
        }
    }
    for (k, v) in meta {
        if RESERVED_META.contains(&k.as_str()) {
            return Err(WriteError::ReservedMetaKey(k.clone()));
        }
        if k.is_empty() || k.trim() != k || v.trim() != v || Section::parse(k).is_some() || k == "key" {
            return Err(WriteError::UnrepresentableMeta(k.clone()));
        }
    }
    let mut w = WriterBuilder::new().delimiter(b';').flexible(true).from_writer(Vec::new());
    let mut row = |fields: &[&str]| w.write_record(fields).expect("writing to memory cannot fail");
    row(&["META"]);
    row(&["key", "value"]);
    row(&["num_projects", &inst.num_projects().to_string()]);
    row(&["num_votes", &prof.len().to_string()]);
    row(&["budget", &inst.budget().to_string()]);
    row(&["vote_type", "approval"]);
    for (k, v) in meta {
        row(&[k, v]);
    }
    row(&["PROJECTS"]);
    row(&["project_id", "cost"]);
    for p in inst.projects() {
        row(&[&p.id, &p.cost.to_string()]);
    }
    row(&["VOTES"]);
    row(&["voter_id", "vote"]);
    for (i, b) in prof.ballots().iter().enumerate() {
        row(&[&(i + 1).to_string(), &inst.ids_of(b.approved()).join(",")]);
    }
    let bytes = w.into_inner().expect("in-memory writer");
    Ok(String::from_utf8(bytes).expect("written from UTF-8 strings"))
}

#[derive(Debug, thiserror::Error)]
pub enum CanonicalError {
    #[error(transparent)]
    Parse(#[from] PbError),
    #[error(transparent)]
    Model(#[from] pbtruth_core::Error),
    #[error(transparent)]
    Write(#[from] WriteError),
}

/// `write ∘ parse`, keeping the extra meta entries.
pub fn canonicalize(text: &str) -> Result<String, CanonicalError> {
    let file = parse_pb(text)?;
    let (inst, prof) = file.to_instance_profile()?;
    Ok(write_pb(&inst, &prof, &file.extra_meta())?)
}
