//! Chain-of-thought extraction and task answer grammars.
//!
//! A response is expected to look like `<think>...</think><answer>...</answer>`.
//! [`extract_sections`] pulls out the spans and counts tags; [`parse_answer`]
//! applies the per-task answer grammar (see `docs/answer-grammar.md`):
//!
//! | task | canonical answer |
//! |------|------------------|
//! | inference, prediction | `YYYY-MM` |
//! | difference | `Event 1: YYYY-MM. Event 2: YYYY-MM. Difference: N months.` |
//! | ordering | `Event 1: YYYY-MM. Event 2: YYYY-MM. Event 3: YYYY-MM. Order: a-b-c.` |
//! | completion | `Event: YYYY-MM. Missing entity: <year or month>.` |
//!
//! Labels are case-insensitive, whitespace between tokens is free and the
//! final period is optional.

use std::fmt;
use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{DateYM, Entity, Permutation, TaskKind};

pub const THINK_OPEN: &str = "<think>";
pub const THINK_CLOSE: &str = "</think>";
pub const ANSWER_OPEN: &str = "<answer>";
pub const ANSWER_CLOSE: &str = "</answer>";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct TagStats {
    pub think_open: usize,
    pub think_close: usize,
    pub answer_open: usize,
    pub answer_close: usize,
}

impl TagStats {
    pub fn counts(&self) -> [usize; 4] {
        [self.think_open, self.think_close, self.answer_open, self.answer_close]
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ParsedResponse {
    pub think_text: Option<String>,
    pub answer_text: Option<String>,
    pub tag_stats: TagStats,
    /// Whitespace-separated tokens in the whole response.
    pub token_count: usize,
}

/// First `open ... close` span, with `close` searched after `open`.
fn first_span<'a>(raw: &'a str, open: &str, close: &str) -> Option<&'a str> {
    let start = raw.find(open)? + open.len();
    let len = raw[start..].find(close)?;
    Some(&raw[start..start + len])
}

pub fn extract_sections(raw: &str) -> ParsedResponse {
    ParsedResponse {
        think_text: first_span(raw, THINK_OPEN, THINK_CLOSE).map(str::to_owned),
        answer_text: first_span(raw, ANSWER_OPEN, ANSWER_CLOSE).map(str::to_owned),
        tag_stats: TagStats {
            think_open: raw.matches(THINK_OPEN).count(),
            think_close: raw.matches(THINK_CLOSE).count(),
            answer_open: raw.matches(ANSWER_OPEN).count(),
            answer_close: raw.matches(ANSWER_CLOSE).count(),
        },
        token_count: raw.split_whitespace().count(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RefusalStatus {
    None,
    Refusal,
    Missing,
}

static REFUSAL: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?i)\b(?:no\s+event|none)\b").expect("refusal pattern"));

/// Classify the answer span: absent or blank is `Missing`; a whole-word
/// "no event" or "none" (any case) is `Refusal`.
pub fn detect_refusal(answer_text: Option<&str>) -> RefusalStatus {
    match answer_text {
        None => RefusalStatus::Missing,
        Some(t) if t.trim().is_empty() => RefusalStatus::Missing,
        Some(t) if REFUSAL.is_match(t) => RefusalStatus::Refusal,
        Some(_) => RefusalStatus::None,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DifferenceAnswer {
    pub dates: [DateYM; 2],
    pub delta_months: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct OrderingAnswer {
    pub dates: [DateYM; 3],
    pub order: Permutation,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CompletionAnswer {
    pub date: DateYM,
    pub entity: Entity,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskAnswer {
    Inference(DateYM),
    Prediction(DateYM),
    Difference(DifferenceAnswer),
    Ordering(OrderingAnswer),
    Completion(CompletionAnswer),
}

impl TaskAnswer {
    pub fn task(&self) -> TaskKind {
        match self {
            TaskAnswer::Inference(_) => TaskKind::Inference,
            TaskAnswer::Prediction(_) => TaskKind::Prediction,
            TaskAnswer::Difference(_) => TaskKind::Difference,
            TaskAnswer::Ordering(_) => TaskKind::Ordering,
            TaskAnswer::Completion(_) => TaskKind::Completion,
        }
    }

    /// Canonical text form; `parse_answer(task, &a.render()) == Ok(a)`.
    pub fn render(&self) -> String {
        match self {
            TaskAnswer::Inference(d) | TaskAnswer::Prediction(d) => d.to_string(),
            TaskAnswer::Difference(a) => format!(
                "Event 1: {}. Event 2: {}. Difference: {} months.",
                a.dates[0], a.dates[1], a.delta_months
            ),
            TaskAnswer::Ordering(a) => format!(
                "Event 1: {}. Event 2: {}. Event 3: {}. Order: {}.",
                a.dates[0], a.dates[1], a.dates[2], a.order
            ),
            TaskAnswer::Completion(a) => {
                let entity = match a.entity {
                    Entity::Year(y) => y.to_string(),
                    Entity::Month(m) => MONTH_NAMES[(m - 1) as usize].to_string(),
                };
                format!("Event: {}. Missing entity: {entity}.", a.date)
            }
        }
    }
}

/// The grammar production that failed first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GrammarRule {
    NonEmpty,
    Date,
    Label,
    Separator,
    Integer,
    Unit,
    OrderIndex,
    Permutation,
    Entity,
    EndOfAnswer,
}

impl fmt::Display for GrammarRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            GrammarRule::NonEmpty => "non-empty answer",
            GrammarRule::Date => "YYYY-MM date",
            GrammarRule::Label => "label",
            GrammarRule::Separator => "'.' separator",
            GrammarRule::Integer => "non-negative integer",
            GrammarRule::Unit => "'months'",
            GrammarRule::OrderIndex => "event index 1-3",
            GrammarRule::Permutation => "permutation of 1-2-3",
            GrammarRule::Entity => "year or month entity",
            GrammarRule::EndOfAnswer => "end of answer",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("expected {rule}{} at byte {offset}, found {found:?}", expected.map(|e| format!(" {e:?}")).unwrap_or_default())]
pub struct FormatError {
    pub rule: GrammarRule,
    pub expected: Option<&'static str>,
    pub offset: usize,
    pub found: String,
}

struct Cursor<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn new(src: &'a str) -> Self {
        Self { src, pos: 0 }
    }

    fn rest(&self) -> &'a str {
        &self.src[self.pos..]
    }

    fn fail(&self, rule: GrammarRule, expected: Option<&'static str>) -> FormatError {
        let found: String = self.rest().chars().take(16).collect();
        FormatError {
            rule,
            expected,
            offset: self.pos,
            found,
        }
    }

    fn skip_ws(&mut self) {
        let rest = self.rest();
        self.pos += rest.len() - rest.trim_start().len();
    }

    /// Case-insensitive ASCII keyword.
    fn eat_word(&mut self, word: &str) -> bool {
        let rest = self.rest();
        if rest.len() >= word.len()
            && rest.is_char_boundary(word.len())
            && rest[..word.len()].eq_ignore_ascii_case(word)
        {
            self.pos += word.len();
            true
        } else {
            false
        }
    }

    fn eat_char(&mut self, c: char) -> bool {
        if self.rest().starts_with(c) {
            self.pos += c.len_utf8();
            true
        } else {
            false
        }
    }

    /// `word *WSP word ... *WSP ":"`
    fn label(&mut self, words: &[&'static str], shown: &'static str) -> Result<(), FormatError> {
        self.skip_ws();
        let start = self.pos;
        for (i, w) in words.iter().enumerate() {
            if i > 0 {
                self.skip_ws();
            }
            if !self.eat_word(w) {
                self.pos = start;
                return Err(self.fail(GrammarRule::Label, Some(shown)));
            }
        }
        self.skip_ws();
        if !self.eat_char(':') {
            return Err(self.fail(GrammarRule::Label, Some(shown)));
        }
        Ok(())
    }

    fn digits(&mut self) -> &'a str {
        let rest = self.rest();
        let n = rest.bytes().take_while(u8::is_ascii_digit).count();
        self.pos += n;
        &rest[..n]
    }

    fn date(&mut self) -> Result<DateYM, FormatError> {
        self.skip_ws();
        let start = self.pos;
        let rest = self.rest();
        let end = rest
            .bytes()
            .take_while(|b| b.is_ascii_digit() || *b == b'-')
            .count();
        match rest[..end].parse::<DateYM>() {
            Ok(d) => {
                self.pos += end;
                Ok(d)
            }
            Err(_) => {
                self.pos = start;
                Err(self.fail(GrammarRule::Date, None))
            }
        }
    }

    fn separator(&mut self) -> Result<(), FormatError> {
        self.skip_ws();
        if self.eat_char('.') {
            Ok(())
        } else {
            Err(self.fail(GrammarRule::Separator, None))
        }
    }

    fn integer(&mut self) -> Result<u32, FormatError> {
        self.skip_ws();
        let start = self.pos;
        let s = self.digits();
        s.parse().map_err(|_| {
            self.pos = start;
            self.fail(GrammarRule::Integer, None)
        })
    }

    fn order_index(&mut self) -> Result<u8, FormatError> {
        self.skip_ws();
        match self.rest().as_bytes().first() {
            Some(b @ b'1'..=b'3') => {
                self.pos += 1;
                Ok(b - b'0')
            }
            _ => Err(self.fail(GrammarRule::OrderIndex, None)),
        }
    }

    /// `*WSP ["."] *WSP` followed by end of input.
    fn end(&mut self) -> Result<(), FormatError> {
        self.skip_ws();
        self.eat_char('.');
        self.skip_ws();
        if self.rest().is_empty() {
            Ok(())
        } else {
            Err(self.fail(GrammarRule::EndOfAnswer, None))
        }
    }
}

/// Parse `answer_text` with the grammar for `task`.
pub fn parse_answer(task: TaskKind, answer_text: &str) -> Result<TaskAnswer, FormatError> {
    let mut c = Cursor::new(answer_text);
    if answer_text.trim().is_empty() {
        return Err(c.fail(GrammarRule::NonEmpty, None));
    }
    let answer = match task {
        TaskKind::Inference | TaskKind::Prediction => {
            let d = c.date()?;
            c.end()?;
            if task == TaskKind::Inference {
                TaskAnswer::Inference(d)
            } else {
                TaskAnswer::Prediction(d)
            }
        }
        TaskKind::Difference => {
            c.label(&["event", "1"], "Event 1:")?;
            let d1 = c.date()?;
            c.separator()?;
            c.label(&["event", "2"], "Event 2:")?;
            let d2 = c.date()?;
            c.separator()?;
            c.label(&["difference"], "Difference:")?;
            let delta = c.integer()?;
            c.skip_ws();
            if !(c.eat_word("months") || c.eat_word("month")) {
                return Err(c.fail(GrammarRule::Unit, None));
            }
            c.end()?;
            TaskAnswer::Difference(DifferenceAnswer {
                dates: [d1, d2],
                delta_months: delta,
            })
        }
        TaskKind::Ordering => {
            let mut dates = Vec::with_capacity(3);
            for (words, shown) in [
                (["event", "1"], "Event 1:"),
                (["event", "2"], "Event 2:"),
                (["event", "3"], "Event 3:"),
            ] {
                c.label(&words, shown)?;
                dates.push(c.date()?);
                c.separator()?;
            }
            c.label(&["order"], "Order:")?;
            let start = c.pos;
            let a = c.order_index()?;
            let mut idx = [a, 0, 0];
            for slot in idx.iter_mut().skip(1) {
                c.skip_ws();
                if !c.eat_char('-') {
                    return Err(c.fail(GrammarRule::Permutation, Some("-")));
                }
                *slot = c.order_index()?;
            }
            let order = Permutation::new(idx).map_err(|_| {
                c.pos = start;
                c.fail(GrammarRule::Permutation, None)
            })?;
            c.end()?;
            TaskAnswer::Ordering(OrderingAnswer {
                dates: [dates[0], dates[1], dates[2]],
                order,
            })
        }
        TaskKind::Completion => {
            c.label(&["event"], "Event:")?;
            let date = c.date()?;
            c.separator()?;
            c.label(&["missing", "entity"], "Missing entity:")?;
            c.skip_ws();
            let start = c.pos;
            let body = c.rest().trim_end();
            let body = body.strip_suffix('.').unwrap_or(body).trim_end();
            let entity = parse_entity(body).map_err(|_| {
                c.pos = start;
                c.fail(GrammarRule::Entity, None)
            })?;
            TaskAnswer::Completion(CompletionAnswer { date, entity })
        }
    };
    Ok(answer)
}

/// A four-digit number is a year; anything else must be a month variant.
fn parse_entity(text: &str) -> Result<Entity, FormatError> {
    if text.len() == 4 && text.bytes().all(|b| b.is_ascii_digit()) {
        let year = text.parse().expect("four ascii digits");
        return Ok(Entity::Year(year));
    }
    parse_month_entity(text).map(Entity::Month)
}

pub const MONTH_NAMES: [&str; 12] = [
    "January",
    "February",
    "March",
    "April",
    "May",
    "June",
    "July",
    "August",
    "September",
    "October",
    "November",
    "December",
];

/// Accepted month spellings besides the numerals: full name and the standard
/// three-letter abbreviation ("May" is both), matched case-insensitively.
pub const MONTH_VARIANTS: [(&str, u32); 23] = [
    ("january", 1),
    ("jan", 1),
    ("february", 2),
    ("feb", 2),
    ("march", 3),
    ("mar", 3),
    ("april", 4),
    ("apr", 4),
    ("may", 5),
    ("june", 6),
    ("jun", 6),
    ("july", 7),
    ("jul", 7),
    ("august", 8),
    ("aug", 8),
    ("september", 9),
    ("sep", 9),
    ("october", 10),
    ("oct", 10),
    ("november", 11),
    ("nov", 11),
    ("december", 12),
    ("dec", 12),
];

pub fn parse_month_entity(text: &str) -> Result<u32, FormatError> {
    let t = text.trim();
    let fail = || FormatError {
        rule: GrammarRule::Entity,
        expected: Some("month name, abbreviation or 1-12"),
        offset: 0,
        found: t.chars().take(16).collect(),
    };
    if !t.is_empty() && t.len() <= 2 && t.bytes().all(|b| b.is_ascii_digit()) {
        return match t.parse::<u32>() {
            Ok(m @ 1..=12) => Ok(m),
            _ => Err(fail()),
        };
    }
    MONTH_VARIANTS
        .iter()
        .find(|(name, _)| name.eq_ignore_ascii_case(t))
        .map(|&(_, m)| m)
        .ok_or_else(fail)
}

/// Absolute distance between two dates in months.
pub fn month_distance(a: DateYM, b: DateYM) -> u32 {
    (a.ordinal() - b.ordinal()).unsigned_abs() as u32
}

/// Distance between two month indices on the 12-month circle, in `0..=6`.
pub fn circular_month_distance(m1: u32, m2: u32) -> u32 {
    let d = m1.abs_diff(m2) % 12;
    d.min(12 - d)
}
