//! Rule-based reward engine for temporal-reasoning rollouts.
//!
//! A rollout is a free-text model response with `<think>` and `<answer>`
//! sections. [`score_response`] parses the answer under the record's task
//! grammar, computes the task accuracy with curriculum-dependent decay, adds
//! format and tag bonuses and subtracts refusal, length and repetition
//! penalties. The crate also carries the group-relative advantage and
//! clipped-objective kernels, the decay schedule, a generation-plausibility
//! evaluator and line-delimited JSON dataset tooling.
//!
//! All numeric code is generic over [`Scalar`] (`f32` or `f64`). The aliases
//! at the crate root fix the precision to `f64`; `*F32` variants exist for
//! callers that want single precision.
//!
//! ```
//! use temporal_reward::{score_response, BenchRecord, EngineConfig, ScoringContext};
//!
//! let record: BenchRecord = serde_json::from_str(r#"{
//!     "id": "t6", "task": "inference",
//!     "events": [{"headline": "h", "abstract": "a"}],
//!     "ground_truth": {"dates": ["2020-03"]},
//!     "split": "test", "period": "2020-03"
//! }"#).unwrap();
//! let cfg = EngineConfig::default();
//! let s = score_response(&record, "<think>...</think><answer>2020-04</answer>",
//!                        &ScoringContext::eval(), &cfg).unwrap();
//! assert!((s.total - 1.005).abs() < 1e-3);
//! ```

pub mod config;
pub mod curriculum;
pub mod dataset_io;
pub mod engine;
pub mod geneval;
pub mod grpo;
pub mod kernels;
pub mod model;
pub mod parser;
pub mod scalar;
pub mod shaping;

pub use config::ConfigValidationError;
pub use curriculum::{alpha_for, stratify, CurriculumError, Phase, PhasePlan};
pub use dataset_io::{desk_distribution, read_records, split_filter, PeriodRange};
pub use engine::{EngineError, ScoreCall, ScoringContext};
pub use grpo::{batch_advantages, clipped_term, group_advantages, kl_penalty_estimate, objective_value};
pub use model::{
    validate_record, BenchRecord, DateYM, Difficulty, Entity, EventText, GroundTruth, Permutation, Split,
    Stage, TaskKind, Violation,
};
pub use parser::{detect_refusal, extract_sections, parse_answer, ParsedResponse, TaskAnswer};
pub use scalar::Scalar;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub type ScoredSample = model::ScoredSample<f64>;
pub type ScoredSampleF32 = model::ScoredSample<f32>;
pub type EngineConfig = config::EngineConfig<f64>;
pub type EngineConfigF32 = config::EngineConfig<f32>;
pub type CurriculumState = curriculum::CurriculumState<f64>;
pub type CurriculumStateF32 = curriculum::CurriculumState<f32>;
pub type RewardConfig = kernels::RewardConfig<f64>;
pub type ShapingConfig = shaping::ShapingConfig<f64>;
pub type Embedding = geneval::Embedding<f64>;
pub type GenEvalReport = geneval::GenEvalReport<f64>;
pub type RolloutGroup = grpo::RolloutGroup<f64>;

/// Score one response with `f64` arithmetic.
pub fn score_response(
    record: &BenchRecord,
    response: &str,
    ctx: &ScoringContext,
    cfg: &EngineConfig,
) -> Result<ScoredSample, EngineError> {
    engine::score_response(record, response, ctx, cfg)
}

/// Score many responses in parallel, preserving order.
pub fn score_batch(calls: &[ScoreCall<'_>], cfg: &EngineConfig) -> Vec<Result<ScoredSample, EngineError>> {
    engine::score_batch(calls, cfg)
}

/// Per-group advantages for nested reward lists.
pub fn advantages(rewards: &[Vec<f64>]) -> Vec<Result<Vec<f64>, grpo::GrpoError>> {
    batch_advantages(rewards)
}

pub fn version() -> &'static str {
    VERSION
}
