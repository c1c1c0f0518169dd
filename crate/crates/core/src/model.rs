//! Domain types shared by every module and the dataset record contract.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::kernels::AccuracyFactors;
use crate::parser::{month_distance, RefusalStatus};
use crate::scalar::Scalar;
use crate::shaping::RepetitionBreakdown;

pub const MIN_YEAR: i32 = 2000;
pub const MAX_YEAR: i32 = 2100;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DateError {
    #[error("year {0} outside {MIN_YEAR}..={MAX_YEAR}")]
    Year(i32),
    #[error("month {0} outside 1..=12")]
    Month(u32),
    #[error("expected YYYY-MM, got {0:?}")]
    Syntax(String),
}

/// A year-month date. Ordering is lexicographic on (year, month).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct DateYM {
    year: i32,
    month: u8,
}

impl DateYM {
    pub fn new(year: i32, month: u32) -> Result<Self, DateError> {
        if !(MIN_YEAR..=MAX_YEAR).contains(&year) {
            return Err(DateError::Year(year));
        }
        if !(1..=12).contains(&month) {
            return Err(DateError::Month(month));
        }
        Ok(Self {
            year,
            month: month as u8,
        })
    }

    pub fn year(self) -> i32 {
        self.year
    }

    pub fn month(self) -> u32 {
        self.month as u32
    }

    /// Months since January of year 0; used for signed differences.
    pub fn ordinal(self) -> i64 {
        self.year as i64 * 12 + (self.month as i64 - 1)
    }

    pub fn from_ordinal(ordinal: i64) -> Result<Self, DateError> {
        let year = ordinal.div_euclid(12);
        let month = ordinal.rem_euclid(12) + 1;
        let year = i32::try_from(year).map_err(|_| DateError::Year(i32::MAX))?;
        Self::new(year, month as u32)
    }

    /// The date `months` months later (or earlier, if negative).
    pub fn offset(self, months: i64) -> Result<Self, DateError> {
        Self::from_ordinal(self.ordinal() + months)
    }
}

impl fmt::Display for DateYM {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:04}-{:02}", self.year, self.month)
    }
}

impl FromStr for DateYM {
    type Err = DateError;

    /// Strict `YYYY-MM`: four-digit year, two-digit month.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let b = s.as_bytes();
        if b.len() != 7 || b[4] != b'-' || !b[..4].iter().chain(&b[5..]).all(u8::is_ascii_digit) {
            return Err(DateError::Syntax(s.to_string()));
        }
        let year: i32 = s[..4].parse().map_err(|_| DateError::Syntax(s.to_string()))?;
        let month: u32 = s[5..].parse().map_err(|_| DateError::Syntax(s.to_string()))?;
        Self::new(year, month)
    }
}

impl TryFrom<String> for DateYM {
    type Error = DateError;
    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<DateYM> for String {
    fn from(d: DateYM) -> Self {
        d.to_string()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskKind {
    Inference,
    Difference,
    Ordering,
    Completion,
    /// Future-event variant of `Inference`, always scored strictly.
    Prediction,
}

impl TaskKind {
    pub const ALL: [TaskKind; 5] = [
        TaskKind::Inference,
        TaskKind::Difference,
        TaskKind::Ordering,
        TaskKind::Completion,
        TaskKind::Prediction,
    ];

    /// Number of events (and ground-truth dates) the task carries.
    pub fn event_count(self) -> usize {
        match self {
            TaskKind::Difference => 2,
            TaskKind::Ordering => 3,
            _ => 1,
        }
    }

    pub fn default_stage(self) -> Stage {
        match self {
            TaskKind::Prediction => Stage::Stage2,
            _ => Stage::Stage1,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            TaskKind::Inference => "inference",
            TaskKind::Difference => "difference",
            TaskKind::Ordering => "ordering",
            TaskKind::Completion => "completion",
            TaskKind::Prediction => "prediction",
        }
    }
}

impl fmt::Display for TaskKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Training stage a rollout belongs to. Stage 2 is future-event prediction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Stage1,
    Stage2,
}

impl FromStr for Stage {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "1" | "stage1" | "s1" => Ok(Stage::Stage1),
            "2" | "stage2" | "s2" => Ok(Stage::Stage2),
            _ => Err(format!("unknown stage {s:?} (expected stage1 or stage2)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EventText {
    pub headline: String,
    #[serde(rename = "abstract", default)]
    pub abstract_text: String,
}

impl EventText {
    pub fn new(headline: impl Into<String>, abstract_text: impl Into<String>) -> Self {
        Self {
            headline: headline.into(),
            abstract_text: abstract_text.into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Difficulty {
    Easy,
    NormalHard,
    #[default]
    Unset,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Split {
    Train,
    Test,
}

/// Whether a record comes from real news or was synthesized.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Real,
    Synthetic,
}

/// A masked temporal entity: either a year or a month index (1-12).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Entity {
    Year(i32),
    Month(u32),
}

impl Entity {
    pub fn kind(self) -> EntityKind {
        match self {
            Entity::Year(_) => EntityKind::Year,
            Entity::Month(_) => EntityKind::Month,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EntityKind {
    Year,
    Month,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{0:?} is not a permutation of 1, 2, 3")]
pub struct PermutationError(pub [u8; 3]);

/// Chronological order of three events, as 1-based event indices.
///
/// `2-1-3` means event 2 happened first, then event 1, then event 3.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "[u8; 3]", into = "[u8; 3]")]
pub struct Permutation([u8; 3]);

impl Permutation {
    pub const IDENTITY: Permutation = Permutation([1, 2, 3]);

    pub fn new(order: [u8; 3]) -> Result<Self, PermutationError> {
        let mut seen = [false; 3];
        for &e in &order {
            if !(1..=3).contains(&e) || seen[(e - 1) as usize] {
                return Err(PermutationError(order));
            }
            seen[(e - 1) as usize] = true;
        }
        Ok(Self(order))
    }

    /// All six permutations in lexicographic order.
    pub fn all() -> [Permutation; 6] {
        [
            Permutation([1, 2, 3]),
            Permutation([1, 3, 2]),
            Permutation([2, 1, 3]),
            Permutation([2, 3, 1]),
            Permutation([3, 1, 2]),
            Permutation([3, 2, 1]),
        ]
    }

    pub fn as_array(self) -> [u8; 3] {
        self.0
    }

    /// Position (0-based rank) of each event, indexed by event number minus one.
    pub fn ranks(self) -> [usize; 3] {
        let mut ranks = [0; 3];
        for (pos, &event) in self.0.iter().enumerate() {
            ranks[(event - 1) as usize] = pos;
        }
        ranks
    }

    /// The chronological order implied by three dates; ties keep event order.
    pub fn sorting(dates: &[DateYM; 3]) -> Self {
        let mut idx = [1u8, 2, 3];
        idx.sort_by_key(|&e| dates[(e - 1) as usize]);
        Self(idx)
    }
}

impl TryFrom<[u8; 3]> for Permutation {
    type Error = PermutationError;
    fn try_from(v: [u8; 3]) -> Result<Self, Self::Error> {
        Self::new(v)
    }
}

impl From<Permutation> for [u8; 3] {
    fn from(p: Permutation) -> Self {
        p.0
    }
}

impl fmt::Display for Permutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-{}-{}", self.0[0], self.0[1], self.0[2])
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct GroundTruth {
    pub dates: Vec<DateYM>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta_months: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub order: Option<Permutation>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub entity: Option<Entity>,
}

/// One dataset row.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BenchRecord {
    pub id: String,
    pub task: TaskKind,
    pub events: Vec<EventText>,
    pub ground_truth: GroundTruth,
    #[serde(default)]
    pub difficulty: Difficulty,
    #[serde(default)]
    pub desk: String,
    pub split: Split,
    pub period: DateYM,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub provenance: Option<Provenance>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub field: String,
    pub rule: String,
}

impl Violation {
    fn new(field: impl Into<String>, rule: impl Into<String>) -> Self {
        Self {
            field: field.into(),
            rule: rule.into(),
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.rule)
    }
}

/// Check every record invariant. An empty list means the record is valid.
pub fn validate_record(record: &BenchRecord) -> Vec<Violation> {
    let mut out = Vec::new();
    let task = record.task;
    let expected = task.event_count();

    if record.id.trim().is_empty() {
        out.push(Violation::new("id", "empty id"));
    }
    if record.events.len() != expected {
        out.push(Violation::new(
            "events",
            format!(
                "event count: {} task needs {expected}, got {}",
                task,
                record.events.len()
            ),
        ));
    }
    for (i, e) in record.events.iter().enumerate() {
        if e.headline.trim().is_empty() {
            out.push(Violation::new(format!("events[{i}].headline"), "empty headline"));
        }
    }

    let gt = &record.ground_truth;
    if gt.dates.len() != expected {
        out.push(Violation::new(
            "ground_truth.dates",
            format!("date count: {} task needs {expected}, got {}", task, gt.dates.len()),
        ));
    }

    match (task, gt.delta_months) {
        (TaskKind::Difference, None) => {
            out.push(Violation::new("ground_truth.delta_months", "missing for difference task"))
        }
        (TaskKind::Difference, Some(delta)) => {
            if let [a, b] = gt.dates[..] {
                let actual = month_distance(a, b);
                if actual != delta {
                    out.push(Violation::new(
                        "ground_truth.delta_months",
                        format!("delta mismatch: stated {delta}, dates are {actual} months apart"),
                    ));
                }
            }
        }
        (_, Some(_)) => out.push(Violation::new(
            "ground_truth.delta_months",
            format!("not allowed for {task} task"),
        )),
        (_, None) => {}
    }

    match (task, gt.order) {
        (TaskKind::Ordering, None) => {
            out.push(Violation::new("ground_truth.order", "missing for ordering task"))
        }
        (TaskKind::Ordering, Some(order)) => {
            if let [a, b, c] = gt.dates[..] {
                let dates = [a, b, c];
                let ranks = order.ranks();
                let sorted = order
                    .as_array()
                    .windows(2)
                    .all(|w| dates[(w[0] - 1) as usize] <= dates[(w[1] - 1) as usize]);
                if !sorted {
                    out.push(Violation::new(
                        "ground_truth.order",
                        format!("order mismatch: {order} does not sort the dates (ranks {ranks:?})"),
                    ));
                }
            }
        }
        (_, Some(_)) => {
            out.push(Violation::new("ground_truth.order", format!("not allowed for {task} task")))
        }
        (_, None) => {}
    }

    match (task, gt.entity) {
        (TaskKind::Completion, None) => {
            out.push(Violation::new("ground_truth.entity", "missing for completion task"))
        }
        (TaskKind::Completion, Some(Entity::Month(m))) if !(1..=12).contains(&m) => {
            out.push(Violation::new("ground_truth.entity", format!("month {m} outside 1..=12")))
        }
        (TaskKind::Completion, Some(_)) => {}
        (_, Some(_)) => {
            out.push(Violation::new("ground_truth.entity", format!("not allowed for {task} task")))
        }
        (_, None) => {}
    }

    out
}

/// One rollout's full reward breakdown.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct ScoredSample<T> {
    pub r_acc: T,
    pub r_ans_fmt: T,
    pub r_tags: T,
    pub p_no_event: T,
    pub p_len_rep: T,
    pub total: T,
    pub diagnostics: Diagnostics<T>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct Diagnostics<T> {
    pub token_count: usize,
    pub refusal: RefusalStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub format_error: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub accuracy: Option<AccuracyFactors<T>>,
    pub p_length: T,
    pub repetition: RepetitionBreakdown<T>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<Vec<T>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub flags: Vec<String>,
}
