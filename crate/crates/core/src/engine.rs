//! End-to-end scoring of one response against one record.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::EngineConfig;
use crate::curriculum::{alpha_for, CurriculumError, Phase};
use crate::kernels::{score_accuracy, AlphaPolicy, ScoreError};
use crate::model::{BenchRecord, ScoredSample, Stage, TaskKind};
use crate::parser::{extract_sections, parse_answer};
use crate::scalar::Scalar;
use crate::shaping::total_reward;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EngineError {
    #[error(transparent)]
    Score(#[from] ScoreError),
    #[error(transparent)]
    Curriculum(#[from] CurriculumError),
    #[error("{task} records belong to {expected:?}, not {given:?}")]
    StageMismatch {
        task: TaskKind,
        expected: Stage,
        given: Stage,
    },
}

/// Where in training a rollout was sampled. The default is evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScoringContext {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stage: Option<Stage>,
    pub phase: Phase,
    #[serde(default)]
    pub step: u32,
}

impl Default for ScoringContext {
    fn default() -> Self {
        Self {
            stage: None,
            phase: Phase::Eval,
            step: 0,
        }
    }
}

impl ScoringContext {
    pub fn new(phase: Phase, step: u32) -> Self {
        Self {
            stage: None,
            phase,
            step,
        }
    }

    pub fn eval() -> Self {
        Self::default()
    }
}

fn alpha_policy<T: Scalar>(
    record: &BenchRecord,
    ctx: &ScoringContext,
    cfg: &EngineConfig<T>,
) -> Result<AlphaPolicy<T>, EngineError> {
    let slots = record.task.event_count();
    if record.task == TaskKind::Prediction || ctx.phase == Phase::Eval {
        return Ok(AlphaPolicy::strict(cfg.reward.strict_alpha, slots));
    }
    let state = cfg.curriculum.state(ctx.phase, ctx.step)?;
    state.admits(record.task, record.difficulty)?;
    let alpha = alpha_for(record.difficulty, &state)?;
    Ok(AlphaPolicy::uniform(alpha, slots)?)
}

/// Extract, parse and score. Record/phase problems are errors; a malformed
/// response is not, it just earns no accuracy or format bonus.
pub fn score_response<T: Scalar>(
    record: &BenchRecord,
    response: &str,
    ctx: &ScoringContext,
    cfg: &EngineConfig<T>,
) -> Result<ScoredSample<T>, EngineError> {
    let expected = record.task.default_stage();
    let stage = match ctx.stage {
        Some(given) if given != expected => {
            return Err(EngineError::StageMismatch {
                task: record.task,
                expected,
                given,
            })
        }
        _ => expected,
    };
    let alpha = alpha_policy(record, ctx, cfg)?;

    let parsed = extract_sections(response);
    let answer = parsed.answer_text.as_deref().map(|t| parse_answer(record.task, t));
    let (acc, format_error) = match answer {
        Some(Ok(ans)) => (
            Some(score_accuracy(record.task, &ans, &record.ground_truth, &alpha, &cfg.reward)?),
            None,
        ),
        Some(Err(e)) => (None, Some(e)),
        None => (None, None),
    };
    let mut sample = total_reward(acc, &parsed, format_error.as_ref(), response, stage, &cfg.shaping);

    let d = &mut sample.diagnostics;
    d.alpha = Some(alpha.slots().to_vec());
    if parsed.answer_text.is_none() {
        d.flags.push("missing_answer".into());
    }
    if format_error.is_some() {
        d.flags.push("format_error".into());
    }
    if d.accuracy.as_ref().is_some_and(|a| a.entity_kind_mismatch) {
        d.flags.push("entity_kind_mismatch".into());
    }
    if d.repetition.penalty > d.p_length {
        d.flags.push("repetition".into());
    } else if d.p_length > T::zero() {
        d.flags.push("length".into());
    }
    Ok(sample)
}

/// One scoring request.
#[derive(Debug, Clone, Copy)]
pub struct ScoreCall<'a> {
    pub record: &'a BenchRecord,
    pub response: &'a str,
    pub ctx: ScoringContext,
}

/// Score in parallel; output order matches input order.
pub fn score_batch<T: Scalar>(
    calls: &[ScoreCall<'_>],
    cfg: &EngineConfig<T>,
) -> Vec<Result<ScoredSample<T>, EngineError>> {
    calls
        .par_iter()
        .map(|c| score_response(c.record, c.response, &c.ctx, cfg))
        .collect()
}
