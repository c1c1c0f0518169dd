//! Bonuses and penalties shared by all tasks, and the final reward sum
//! `total = r_acc + r_ans_fmt + r_tags - p_no_event - p_len_rep`.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::kernels::AccuracyResult;
use crate::model::{Diagnostics, ScoredSample, Stage};
use crate::parser::{
    detect_refusal, FormatError, ParsedResponse, RefusalStatus, ANSWER_CLOSE, ANSWER_OPEN,
    THINK_CLOSE, THINK_OPEN,
};
use crate::scalar::{clamp, Scalar};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("{0} must be non-negative")]
    Negative(&'static str),
    #[error("length threshold {thresh} must be below max length {max}")]
    LengthBounds { thresh: usize, max: usize },
    #[error("{0} must be positive")]
    NonPositive(&'static str),
    #[error("{field}: {rule}")]
    Invalid { field: &'static str, rule: &'static str },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
#[serde(bound = "T: Scalar")]
pub struct NoEventPenalties<T> {
    pub stage1_refusal: T,
    pub stage1_missing: T,
    pub stage2_refusal: T,
    pub stage2_missing: T,
}

impl<T: Scalar> Default for NoEventPenalties<T> {
    fn default() -> Self {
        Self {
            stage1_refusal: T::of(0.1),
            stage1_missing: T::of(0.2),
            stage2_refusal: T::of(0.2),
            stage2_missing: T::of(0.3),
        }
    }
}

/// Detector thresholds and linear ramps for the repetition penalty.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
#[serde(bound = "T: Scalar")]
pub struct RepetitionConfig<T> {
    /// Runs of identical words longer than this are penalized.
    pub max_word_run: usize,
    pub word_run_step: T,
    pub phrase_len: usize,
    pub phrase_min_repeats: usize,
    pub phrase_step: T,
    pub ngram_n: usize,
    pub ngram_diversity_floor: T,
    pub cap: T,
}

impl<T: Scalar> Default for RepetitionConfig<T> {
    fn default() -> Self {
        Self {
            max_word_run: 5,
            word_run_step: T::of(0.1),
            phrase_len: 8,
            phrase_min_repeats: 2,
            phrase_step: T::of(0.15),
            ngram_n: 3,
            ngram_diversity_floor: T::of(0.35),
            cap: T::of(0.5),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
#[serde(bound = "T: Scalar")]
pub struct ShapingConfig<T> {
    pub format_bonus: T,
    pub tag_bonus: T,
    pub length_threshold: usize,
    pub length_max: usize,
    pub length_scale: T,
    pub no_event: NoEventPenalties<T>,
    pub repetition: RepetitionConfig<T>,
}

impl<T: Scalar> Default for ShapingConfig<T> {
    fn default() -> Self {
        Self {
            format_bonus: T::of(0.05),
            tag_bonus: T::of(0.025),
            length_threshold: 900,
            length_max: 1024,
            length_scale: T::of(0.3),
            no_event: NoEventPenalties::default(),
            repetition: RepetitionConfig::default(),
        }
    }
}

impl<T: Scalar> ShapingConfig<T> {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let ne = &self.no_event;
        let rep = &self.repetition;
        for (name, v) in [
            ("format_bonus", self.format_bonus),
            ("tag_bonus", self.tag_bonus),
            ("length_scale", self.length_scale),
            ("no_event.stage1_refusal", ne.stage1_refusal),
            ("no_event.stage1_missing", ne.stage1_missing),
            ("no_event.stage2_refusal", ne.stage2_refusal),
            ("no_event.stage2_missing", ne.stage2_missing),
            ("repetition.word_run_step", rep.word_run_step),
            ("repetition.phrase_step", rep.phrase_step),
            ("repetition.ngram_diversity_floor", rep.ngram_diversity_floor),
            ("repetition.cap", rep.cap),
        ] {
            if v.is_nan() || v < T::zero() {
                return Err(ConfigError::Negative(name));
            }
        }
        if self.length_threshold >= self.length_max {
            return Err(ConfigError::LengthBounds {
                thresh: self.length_threshold,
                max: self.length_max,
            });
        }
        if rep.phrase_len == 0 {
            return Err(ConfigError::NonPositive("repetition.phrase_len"));
        }
        if rep.ngram_n == 0 {
            return Err(ConfigError::NonPositive("repetition.ngram_n"));
        }
        if rep.phrase_min_repeats < 2 {
            return Err(ConfigError::Invalid {
                field: "repetition.phrase_min_repeats",
                rule: "must be at least 2",
            });
        }
        Ok(())
    }
}

/// Awarded only when the answer span exists and parsed under its grammar.
pub fn format_bonus<T: Scalar>(parsed: &ParsedResponse, parse_ok: bool, cfg: &ShapingConfig<T>) -> T {
    if parsed.answer_text.is_some() && parse_ok {
        cfg.format_bonus
    } else {
        T::zero()
    }
}

/// One share for all four tags being present, one for each appearing exactly once.
pub fn tag_bonus<T: Scalar>(parsed: &ParsedResponse, cfg: &ShapingConfig<T>) -> T {
    let counts = parsed.tag_stats.counts();
    let mut bonus = T::zero();
    if counts.iter().all(|&c| c >= 1) {
        bonus = bonus + cfg.tag_bonus;
    }
    if counts.iter().all(|&c| c == 1) {
        bonus = bonus + cfg.tag_bonus;
    }
    bonus
}

pub fn no_event_penalty<T: Scalar>(status: RefusalStatus, stage: Stage, cfg: &ShapingConfig<T>) -> T {
    let p = &cfg.no_event;
    match (status, stage) {
        (RefusalStatus::None, _) => T::zero(),
        (RefusalStatus::Refusal, Stage::Stage1) => p.stage1_refusal,
        (RefusalStatus::Missing, Stage::Stage1) => p.stage1_missing,
        (RefusalStatus::Refusal, Stage::Stage2) => p.stage2_refusal,
        (RefusalStatus::Missing, Stage::Stage2) => p.stage2_missing,
    }
}

/// Zero up to the threshold, then a linear ramp reaching `length_scale` at
/// the maximum length.
pub fn length_penalty<T: Scalar>(n_tokens: usize, cfg: &ShapingConfig<T>) -> T {
    if n_tokens <= cfg.length_threshold {
        return T::zero();
    }
    let over = T::from_count(n_tokens - cfg.length_threshold);
    let span = T::from_count(cfg.length_max - cfg.length_threshold);
    (over / span).min(T::one()) * cfg.length_scale
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct RepetitionBreakdown<T> {
    pub word_repeat: T,
    pub phrase_repeat: T,
    pub ngram_diversity: T,
    /// Maximum of the three detectors.
    pub penalty: T,
    pub longest_run: usize,
    pub repeated_phrases: usize,
    pub distinct_ngram_ratio: T,
}

/// Lowercased words with surrounding punctuation and structural tags removed.
pub fn repetition_tokens(raw: &str) -> Vec<String> {
    let mut text = raw.to_string();
    for tag in [THINK_OPEN, THINK_CLOSE, ANSWER_OPEN, ANSWER_CLOSE] {
        text = text.replace(tag, " ");
    }
    text.split_whitespace()
        .map(|w| {
            w.trim_matches(|c: char| !c.is_alphanumeric())
                .to_lowercase()
        })
        .filter(|w| !w.is_empty())
        .collect()
}

fn intern(tokens: &[String]) -> Vec<u32> {
    let mut ids: HashMap<&str, u32> = HashMap::with_capacity(tokens.len());
    tokens
        .iter()
        .map(|t| {
            let next = ids.len() as u32;
            *ids.entry(t.as_str()).or_insert(next)
        })
        .collect()
}

fn longest_run(ids: &[u32]) -> usize {
    let mut best = 0;
    let mut run = 0;
    for (i, t) in ids.iter().enumerate() {
        run = if i > 0 && ids[i - 1] == *t { run + 1 } else { 1 };
        best = best.max(run);
    }
    best
}

/// Occurrence count of each distinct window of length `n`, in sorted window order.
fn window_counts(ids: &[u32], n: usize) -> Vec<usize> {
    if n == 0 || ids.len() < n {
        return Vec::new();
    }
    let mut windows: Vec<&[u32]> = ids.windows(n).collect();
    windows.sort_unstable();
    windows
        .chunk_by(|a, b| a == b)
        .map(<[_]>::len)
        .collect()
}

pub fn repetition_penalty<T: Scalar>(raw: &str, cfg: &RepetitionConfig<T>) -> RepetitionBreakdown<T> {
    let tokens = intern(&repetition_tokens(raw));

    let run = longest_run(&tokens);
    let word_repeat = if run > cfg.max_word_run {
        (cfg.word_run_step * T::from_count(run - cfg.max_word_run)).min(cfg.cap)
    } else {
        T::zero()
    };

    let repeated = window_counts(&tokens, cfg.phrase_len)
        .into_iter()
        .filter(|&c| c >= cfg.phrase_min_repeats)
        .count();
    let phrase_repeat = (cfg.phrase_step * T::from_count(repeated)).min(cfg.cap);

    let grams = window_counts(&tokens, cfg.ngram_n);
    let total: usize = grams.iter().sum();
    let ratio = if total == 0 {
        T::one()
    } else {
        T::from_count(grams.len()) / T::from_count(total)
    };
    let floor = cfg.ngram_diversity_floor;
    let ngram_diversity = if ratio >= floor || floor <= T::zero() {
        T::zero()
    } else {
        (cfg.cap * (floor - ratio) / floor).min(cfg.cap)
    };

    RepetitionBreakdown {
        word_repeat,
        phrase_repeat,
        ngram_diversity,
        penalty: word_repeat.max(phrase_repeat).max(ngram_diversity),
        longest_run: run,
        repeated_phrases: repeated,
        distinct_ngram_ratio: ratio,
    }
}

/// Assemble the scored sample. Accuracy only counts when the answer span is
/// present and parsed; otherwise it is zero regardless of `acc`.
pub fn total_reward<T: Scalar>(
    acc: Option<AccuracyResult<T>>,
    parsed: &ParsedResponse,
    format_error: Option<&FormatError>,
    raw: &str,
    stage: Stage,
    cfg: &ShapingConfig<T>,
) -> ScoredSample<T> {
    let parse_ok = parsed.answer_text.is_some() && format_error.is_none();
    let acc = if parse_ok { acc } else { None };
    let r_acc = acc
        .as_ref()
        .map(|a| clamp(a.r_acc, T::zero(), T::one()))
        .unwrap_or_else(T::zero);
    let r_ans_fmt = format_bonus(parsed, parse_ok, cfg);
    let r_tags = tag_bonus(parsed, cfg);
    let refusal = detect_refusal(parsed.answer_text.as_deref());
    let p_no_event = no_event_penalty(refusal, stage, cfg);
    let p_length = length_penalty(parsed.token_count, cfg);
    let repetition = repetition_penalty(raw, &cfg.repetition);
    let p_len_rep = p_length.max(repetition.penalty);
    let total = r_acc + r_ans_fmt + r_tags - p_no_event - p_len_rep;

    ScoredSample {
        r_acc,
        r_ans_fmt,
        r_tags,
        p_no_event,
        p_len_rep,
        total,
        diagnostics: Diagnostics {
            token_count: parsed.token_count,
            refusal,
            format_error: format_error.map(ToString::to_string),
            accuracy: acc.map(|a| a.factors),
            p_length,
            repetition,
            alpha: None,
            flags: Vec::new(),
        },
    }
}
