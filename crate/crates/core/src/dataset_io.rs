//! Line-delimited JSON datasets: streaming reads, validation, manifests and
//! split/desk reporting.
//!
//! Each line holds one record. Serialization writes fields in a fixed order:
//! `id, task, events, ground_truth, difficulty, desk, split, period,
//! provenance` (the last omitted when absent), so a read/write/read cycle is a
//! fixed point. See `docs/record-schema.md`.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{self, BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::error::Category;
use thiserror::Error;

use crate::model::{validate_record, BenchRecord, DateYM, Split, Violation};

pub const SCHEMA_VERSION: u32 = 1;

/// Reference desk mix of the real-news corpus, in percent.
pub const DESK_TARGETS: [(&str, f64); 8] = [
    ("Foreign", 20.8),
    ("Business", 16.5),
    ("OpEd", 14.2),
    ("National", 10.9),
    ("Washington", 9.6),
    ("Metro", 8.6),
    ("Politics", 5.5),
    ("Science", 4.6),
];

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("cannot open {path}: {source}")]
    Open { path: String, source: io::Error },
    #[error("read failed at line {line}: {source}")]
    Read { line: usize, source: io::Error },
    #[error("period range is inverted: {start} > {end}")]
    InvertedRange { start: DateYM, end: DateYM },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum IssueKind {
    /// Not parseable as JSON.
    Json { message: String },
    /// Valid JSON that does not match the record shape.
    Schema { message: String },
    /// Well-formed record that breaks a record invariant.
    Violations { violations: Vec<Violation> },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LineIssue {
    /// 1-based line number.
    pub line: usize,
    #[serde(flatten)]
    pub kind: IssueKind,
}

/// Maps one parsed JSON line to a record. Lets foreign layouts reuse the reader.
pub trait RecordAdapter: Send + Sync {
    fn adapt(&self, value: serde_json::Value) -> Result<BenchRecord, String>;
}

/// The native layout, field for field.
#[derive(Debug, Clone, Copy, Default)]
pub struct NativeAdapter;

impl RecordAdapter for NativeAdapter {
    fn adapt(&self, value: serde_json::Value) -> Result<BenchRecord, String> {
        serde_json::from_value(value).map_err(|e| e.to_string())
    }
}

fn classify(err: serde_json::Error) -> IssueKind {
    match err.classify() {
        Category::Data => IssueKind::Schema {
            message: err.to_string(),
        },
        _ => IssueKind::Json {
            message: err.to_string(),
        },
    }
}

/// Streaming reader yielding one item per non-blank line.
pub struct RecordReader<R> {
    lines: io::Lines<R>,
    line: usize,
    adapter: Option<Box<dyn RecordAdapter>>,
    validate: bool,
}

impl RecordReader<BufReader<File>> {
    pub fn open(path: impl AsRef<Path>) -> Result<Self, DatasetError> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|source| DatasetError::Open {
            path: path.display().to_string(),
            source,
        })?;
        Ok(Self::new(BufReader::new(file)))
    }
}

impl<R: BufRead> RecordReader<R> {
    pub fn new(reader: R) -> Self {
        Self {
            lines: reader.lines(),
            line: 0,
            adapter: None,
            validate: true,
        }
    }

    pub fn with_adapter(mut self, adapter: Box<dyn RecordAdapter>) -> Self {
        self.adapter = Some(adapter);
        self
    }

    /// Skip invariant checks; only JSON and shape errors are reported.
    pub fn without_validation(mut self) -> Self {
        self.validate = false;
        self
    }

    fn parse(&self, text: &str) -> Result<BenchRecord, IssueKind> {
        let record = match &self.adapter {
            None => serde_json::from_str::<BenchRecord>(text).map_err(classify)?,
            Some(adapter) => {
                let value: serde_json::Value = serde_json::from_str(text).map_err(classify)?;
                adapter.adapt(value).map_err(|message| IssueKind::Schema { message })?
            }
        };
        if self.validate {
            let violations = validate_record(&record);
            if !violations.is_empty() {
                return Err(IssueKind::Violations { violations });
            }
        }
        Ok(record)
    }
}

impl<R: BufRead> Iterator for RecordReader<R> {
    type Item = Result<Result<BenchRecord, LineIssue>, DatasetError>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            let text = match self.lines.next()? {
                Ok(t) => t,
                Err(source) => {
                    return Some(Err(DatasetError::Read {
                        line: self.line + 1,
                        source,
                    }))
                }
            };
            self.line += 1;
            if text.trim().is_empty() {
                continue;
            }
            let line = self.line;
            return Some(Ok(self.parse(&text).map_err(|kind| LineIssue { line, kind })));
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ReadOutcome {
    pub records: Vec<BenchRecord>,
    pub issues: Vec<LineIssue>,
}

/// Collect a whole file. I/O errors abort; bad lines land in `issues`.
pub fn read_records(path: impl AsRef<Path>) -> Result<ReadOutcome, DatasetError> {
    collect(RecordReader::open(path)?)
}

pub fn read_from<R: BufRead>(reader: R) -> Result<ReadOutcome, DatasetError> {
    collect(RecordReader::new(reader))
}

fn collect<R: BufRead>(reader: RecordReader<R>) -> Result<ReadOutcome, DatasetError> {
    let mut out = ReadOutcome::default();
    for item in reader {
        match item? {
            Ok(r) => out.records.push(r),
            Err(issue) => out.issues.push(issue),
        }
    }
    Ok(out)
}

pub fn to_json_line(record: &BenchRecord) -> String {
    serde_json::to_string(record).expect("records always serialize")
}

pub fn write_records<W: Write>(mut out: W, records: &[BenchRecord]) -> io::Result<()> {
    for r in records {
        writeln!(out, "{}", to_json_line(r))?;
    }
    out.flush()
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IssueSummary {
    pub json: usize,
    pub schema: usize,
    pub violations: usize,
    /// First few offending line numbers.
    pub sample_lines: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub schema_version: u32,
    pub total_records: usize,
    pub per_task: BTreeMap<String, usize>,
    pub per_split: BTreeMap<String, usize>,
    pub per_desk: BTreeMap<String, usize>,
    pub per_month: BTreeMap<String, usize>,
    pub issues: IssueSummary,
}

const SAMPLE_LINES: usize = 20;

impl DatasetManifest {
    pub fn build(records: &[BenchRecord], issues: &[LineIssue]) -> Self {
        let mut m = Self {
            schema_version: SCHEMA_VERSION,
            total_records: records.len(),
            per_task: BTreeMap::new(),
            per_split: BTreeMap::new(),
            per_desk: BTreeMap::new(),
            per_month: BTreeMap::new(),
            issues: IssueSummary::default(),
        };
        for r in records {
            *m.per_task.entry(r.task.as_str().to_string()).or_default() += 1;
            let split = match r.split {
                Split::Train => "train",
                Split::Test => "test",
            };
            *m.per_split.entry(split.to_string()).or_default() += 1;
            *m.per_desk.entry(r.desk.clone()).or_default() += 1;
            *m.per_month.entry(r.period.to_string()).or_default() += 1;
        }
        for issue in issues {
            match issue.kind {
                IssueKind::Json { .. } => m.issues.json += 1,
                IssueKind::Schema { .. } => m.issues.schema += 1,
                IssueKind::Violations { .. } => m.issues.violations += 1,
            }
            if m.issues.sample_lines.len() < SAMPLE_LINES {
                m.issues.sample_lines.push(issue.line);
            }
        }
        m
    }

    pub fn issue_count(&self) -> usize {
        self.issues.json + self.issues.schema + self.issues.violations
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeskRow {
    pub desk: String,
    pub count: usize,
    pub percent: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
}

pub fn default_desk_targets() -> Vec<(String, f64)> {
    DESK_TARGETS.iter().map(|&(d, p)| (d.to_string(), p)).collect()
}

/// Percentage per desk, most common first (ties by name). Target desks that
/// never occur get a zero row. Empty input gives an empty table.
pub fn desk_distribution(records: &[BenchRecord], target: &[(String, f64)]) -> Vec<DeskRow> {
    if records.is_empty() {
        return Vec::new();
    }
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for r in records {
        *counts.entry(r.desk.as_str()).or_default() += 1;
    }
    for (desk, _) in target {
        counts.entry(desk.as_str()).or_default();
    }
    let total = records.len() as f64;
    let mut rows: Vec<DeskRow> = counts
        .into_iter()
        .map(|(desk, count)| {
            let percent = 100.0 * count as f64 / total;
            let target = target.iter().find(|(d, _)| d == desk).map(|&(_, p)| p);
            DeskRow {
                desk: desk.to_string(),
                count,
                percent,
                target,
                delta: target.map(|t| percent - t),
            }
        })
        .collect();
    rows.sort_by(|a, b| b.count.cmp(&a.count).then_with(|| a.desk.cmp(&b.desk)));
    rows
}

/// Inclusive month range.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PeriodRange {
    start: DateYM,
    end: DateYM,
}

impl PeriodRange {
    pub fn new(start: DateYM, end: DateYM) -> Result<Self, DatasetError> {
        if start > end {
            return Err(DatasetError::InvertedRange { start, end });
        }
        Ok(Self { start, end })
    }

    /// The real-news test window for future-event prediction.
    pub fn prediction_test_window() -> Self {
        Self {
            start: DateYM::new(2024, 8).expect("valid"),
            end: DateYM::new(2025, 2).expect("valid"),
        }
    }

    pub fn full() -> Self {
        Self {
            start: DateYM::new(crate::model::MIN_YEAR, 1).expect("valid"),
            end: DateYM::new(crate::model::MAX_YEAR, 12).expect("valid"),
        }
    }

    pub fn start(&self) -> DateYM {
        self.start
    }

    pub fn end(&self) -> DateYM {
        self.end
    }

    pub fn contains(&self, d: DateYM) -> bool {
        self.start <= d && d <= self.end
    }
}

/// Records of `split` whose period falls inside `range`, in input order.
pub fn split_filter(records: &[BenchRecord], split: Split, range: &PeriodRange) -> Vec<BenchRecord> {
    records
        .iter()
        .filter(|r| r.split == split && range.contains(r.period))
        .cloned()
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{EventText, GroundTruth, TaskKind};

    fn record(id: &str, split: Split, period: &str, desk: &str) -> BenchRecord {
        BenchRecord {
            id: id.into(),
            task: TaskKind::Inference,
            events: vec![EventText::new("Headline", "Abstract")],
            ground_truth: GroundTruth {
                dates: vec![period.parse().unwrap()],
                ..Default::default()
            },
            difficulty: Default::default(),
            desk: desk.into(),
            split,
            period: period.parse().unwrap(),
            provenance: None,
        }
    }

    fn lines(records: &[BenchRecord]) -> String {
        records.iter().map(|r| to_json_line(r) + "\n").collect()
    }

    #[test]
    fn valid_lines_read_cleanly() {
        let recs: Vec<_> = (0..3).map(|i| record(&format!("r{i}"), Split::Train, "2020-04", "Metro")).collect();
        let out = read_from(lines(&recs).as_bytes()).unwrap();
        assert_eq!(out.records, recs);
        assert!(out.issues.is_empty());
    }

    #[test]
    fn malformed_line_is_logged() {
        let good = to_json_line(&record("a", Split::Train, "2020-04", "Metro"));
        let text = format!("{good}\n\n{{\"id\": \n");
        let out = read_from(text.as_bytes()).unwrap();
        assert_eq!(out.records.len(), 1);
        assert_eq!(out.issues.len(), 1);
        assert_eq!(out.issues[0].line, 3);
        assert!(matches!(out.issues[0].kind, IssueKind::Json { .. }));
    }

    #[test]
    fn schema_and_violation_issues() {
        let text = "{\"id\":\"x\",\"task\":\"teleport\"}\n";
        let out = read_from(text.as_bytes()).unwrap();
        assert!(matches!(out.issues[0].kind, IssueKind::Schema { .. }));

        let mut bad = record("b", Split::Train, "2020-04", "Metro");
        bad.task = TaskKind::Ordering;
        let out = read_from(lines(&[bad]).as_bytes()).unwrap();
        assert!(out.records.is_empty());
        match &out.issues[0].kind {
            IssueKind::Violations { violations } => {
                assert!(violations.iter().any(|v| v.rule.contains("event count")))
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn missing_file_is_fatal() {
        assert!(matches!(
            read_records("/nonexistent/file.jsonl"),
            Err(DatasetError::Open { .. })
        ));
    }

    #[test]
    fn round_trip_fixed_point() {
        let recs = vec![record("a", Split::Test, "2024-09", "Foreign")];
        let first = lines(&recs);
        let again = lines(&read_from(first.as_bytes()).unwrap().records);
        assert_eq!(first, again);
        assert!(first.starts_with("{\"id\":\"a\",\"task\":\"inference\",\"events\""));
    }

    #[test]
    fn desk_distribution_cases() {
        assert!(desk_distribution(&[], &default_desk_targets()).is_empty());
        let one = vec![record("a", Split::Train, "2020-04", "Metro"); 4];
        let t = desk_distribution(&one, &[]);
        assert_eq!(t.len(), 1);
        assert_eq!(t[0].percent, 100.0);
    }

    #[test]
    fn desk_distribution_matches_targets() {
        let mut recs = Vec::new();
        for (desk, pct) in DESK_TARGETS {
            for _ in 0..(pct * 10.0).round() as usize {
                recs.push(record("x", Split::Train, "2020-01", desk));
            }
        }
        while recs.len() < 1000 {
            recs.push(record("x", Split::Train, "2020-01", "Other"));
        }
        let rows = desk_distribution(&recs, &default_desk_targets());
        assert_eq!(rows[0].desk, "Foreign");
        for r in rows.iter().filter(|r| r.target.is_some()) {
            assert!(r.delta.unwrap().abs() < 1e-9, "{r:?}");
        }
        let sum: f64 = rows.iter().map(|r| r.percent).sum();
        assert!((sum - 100.0).abs() < 1e-9);
    }

    #[test]
    fn split_filter_window() {
        let recs = vec![
            record("a", Split::Test, "2024-07", "Metro"),
            record("b", Split::Test, "2024-08", "Metro"),
            record("c", Split::Train, "2024-09", "Metro"),
            record("d", Split::Test, "2025-02", "Metro"),
            record("e", Split::Test, "2025-03", "Metro"),
        ];
        let w = PeriodRange::prediction_test_window();
        let ids: Vec<_> = split_filter(&recs, Split::Test, &w).into_iter().map(|r| r.id).collect();
        assert_eq!(ids, ["b", "d"]);
        let start: DateYM = "2030-01".parse().unwrap();
        let end: DateYM = "2030-02".parse().unwrap();
        assert!(split_filter(&recs, Split::Test, &PeriodRange::new(start, end).unwrap()).is_empty());
        assert!(PeriodRange::new(end, start).is_err());
        let all: Vec<_> = recs.iter().filter(|r| r.split == Split::Test).cloned().collect();
        assert_eq!(split_filter(&recs, Split::Test, &PeriodRange::full()), all);
    }

    #[test]
    fn manifest_counts() {
        let recs = vec![
            record("a", Split::Test, "2024-08", "Metro"),
            record("b", Split::Train, "2020-01", "Foreign"),
        ];
        let issues = vec![LineIssue {
            line: 7,
            kind: IssueKind::Json { message: "x".into() },
        }];
        let m = DatasetManifest::build(&recs, &issues);
        assert_eq!(m.total_records, 2);
        assert_eq!(m.per_task.values().sum::<usize>(), 2);
        assert_eq!(m.per_split.values().sum::<usize>(), 2);
        assert_eq!(m.issues.json, 1);
        assert_eq!(m.issues.sample_lines, vec![7]);
    }
}
