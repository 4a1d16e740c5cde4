//! Problem files and CSV records.
//!
//! A problem file holds one sequent per line, `P1, P2 |- C`, with `#`
//! comments and an optional trailing `@provable` or `@refutable` tag.

use std::fmt;
use std::io;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::formula::Sequent;
use crate::search::{Outcome, SearchStats, Summary};
use crate::syntax::{parse_sequent, ParseError};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Provable,
    Refutable,
}

impl Label {
    pub fn of(outcome: Outcome) -> Option<Label> {
        match outcome {
            Outcome::Proved => Some(Label::Provable),
            Outcome::Refuted => Some(Label::Refutable),
            Outcome::BudgetExhausted => None,
        }
    }

    pub fn matches(self, outcome: Outcome) -> bool {
        Label::of(outcome) == Some(self)
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Label::Provable => "provable",
            Label::Refutable => "refutable",
        })
    }
}

impl FromStr for Label {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "provable" => Ok(Label::Provable),
            "refutable" => Ok(Label::Refutable),
            _ => Err(format!("unknown label `@{s}`")),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Problem {
    /// 1-based position in the file.
    pub id: usize,
    pub line: usize,
    pub sequent: Sequent,
    pub label: Option<Label>,
}

#[derive(Debug, Error)]
pub enum ProblemFileError {
    #[error("line {line}: {source}")]
    Parse { line: usize, source: ParseError },
    #[error("line {line}: {msg}")]
    Label { line: usize, msg: String },
    #[error(transparent)]
    Io(#[from] io::Error),
}

pub fn parse_problems(text: &str) -> Result<Vec<Problem>, ProblemFileError> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let (body, label) = match body.rsplit_once('@') {
            Some((rest, tag)) => {
                let label = tag.trim().parse().map_err(|msg| ProblemFileError::Label { line, msg })?;
                (rest.trim(), Some(label))
            }
            None => (body, None),
        };
        let sequent = parse_sequent(body).map_err(|source| ProblemFileError::Parse { line, source })?;
        out.push(Problem {
            id: out.len() + 1,
            line,
            sequent,
            label,
        });
    }
    Ok(out)
}

pub fn read_problems(path: &std::path::Path) -> Result<Vec<Problem>, ProblemFileError> {
    parse_problems(&std::fs::read_to_string(path)?)
}

pub fn format_problems<'a>(items: impl IntoIterator<Item = (&'a Sequent, Option<Label>)>) -> String {
    let mut out = String::new();
    for (s, label) in items {
        out.push_str(&s.to_string());
        if let Some(l) = label {
            out.push_str(" @");
            out.push_str(&l.to_string());
        }
        out.push('\n');
    }
    out
}

/// One row of the per-problem stats CSV shared by `prove`, `bench` and `cv`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StatsRow {
    pub problem: usize,
    pub outcome: Outcome,
    pub p: u64,
    pub t: u64,
    /// Left empty unless timing is requested, so that output is reproducible.
    pub wall_ms: Option<f64>,
    pub strategy: String,
    pub features: String,
    pub seed: u64,
}

impl StatsRow {
    pub fn new(problem: usize, stats: &SearchStats, strategy: &str, features: &str, seed: u64) -> Self {
        StatsRow {
            problem,
            outcome: stats.outcome,
            p: stats.p,
            t: stats.t,
            wall_ms: None,
            strategy: strategy.to_string(),
            features: features.to_string(),
            seed,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochRow {
    pub epoch: usize,
    pub attempted: usize,
    pub solved: usize,
    pub refuted: usize,
    pub mean_t: f64,
    pub mean_p: f64,
    pub mean_t_all: f64,
    pub epsilon: f64,
    pub max_delta: f64,
}

/// Fold summary shaped like a train/test results table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FoldRow {
    /// Fold number, or `all` for the pooled test rows.
    pub fold: String,
    pub phase: String,
    pub strategy: String,
    pub features: String,
    pub problems: usize,
    pub solved: usize,
    pub mean_t: f64,
    pub mean_p: f64,
    pub mean_t_all: f64,
}

impl FoldRow {
    pub fn new(fold: &str, phase: &str, strategy: &str, features: &str, s: &Summary) -> Self {
        FoldRow {
            fold: fold.to_string(),
            phase: phase.to_string(),
            strategy: strategy.to_string(),
            features: features.to_string(),
            problems: s.attempted,
            solved: s.solved,
            mean_t: s.mean_t,
            mean_p: s.mean_p,
            mean_t_all: s.mean_t_all,
        }
    }
}

/// Serializes rows under an explicit header line, present even with no rows.
pub fn write_csv<R: Serialize>(rows: &[R], header: &[&str], out: impl io::Write) -> Result<(), csv::Error> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(header)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn csv_string<R: Serialize>(rows: &[R], header: &[&str]) -> String {
    let mut buf = Vec::new();
    write_csv(rows, header, &mut buf).expect("writing to memory");
    String::from_utf8(buf).expect("csv output is utf-8")
}

pub const STATS_HEADER: [&str; 8] = ["problem", "outcome", "p", "t", "wall_ms", "strategy", "features", "seed"];
pub const EPOCH_HEADER: [&str; 9] = [
    "epoch", "attempted", "solved", "refuted", "mean_t", "mean_p", "mean_t_all", "epsilon", "max_delta",
];
pub const FOLD_HEADER: [&str; 9] = [
    "fold", "phase", "strategy", "features", "problems", "solved", "mean_t", "mean_p", "mean_t_all",
];

/// Reads a stats CSV, rejecting any header other than [`STATS_HEADER`].
pub fn read_stats(text: &str) -> Result<Vec<StatsRow>, csv::Error> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let header = r.headers()?.clone();
    if header.iter().ne(STATS_HEADER.iter().copied()) {
        return Err(csv::Error::from(io::Error::new(
            io::ErrorKind::InvalidData,
            format!("unexpected stats header `{}`", header.iter().collect::<Vec<_>>().join(",")),
        )));
    }
    r.deserialize().collect()
}
