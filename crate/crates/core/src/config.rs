//! One configuration object holding every reward, schedule and evaluation
//! constant. Missing fields take their defaults; unknown fields are errors.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::curriculum::{CurriculumConfig, CurriculumError};
use crate::geneval::GenevalConfig;
use crate::grpo::GrpoConfig;
use crate::kernels::{RewardConfig, ALPHA_MAX, ALPHA_MIN};
use crate::scalar::Scalar;
use crate::shaping::{ConfigError, ShapingConfig};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigValidationError {
    #[error("shaping: {0}")]
    Shaping(#[from] ConfigError),
    #[error("curriculum: {0}")]
    Curriculum(#[from] CurriculumError),
    #[error("reward.{field}: {rule}")]
    Reward { field: &'static str, rule: String },
    #[error("grpo.{field}: {rule}")]
    Grpo { field: &'static str, rule: String },
    #[error("geneval.{field}: {rule}")]
    Geneval { field: &'static str, rule: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
#[serde(bound(serialize = "T: Scalar", deserialize = "T: Scalar"))]
pub struct EngineConfig<T> {
    pub reward: RewardConfig<T>,
    pub shaping: ShapingConfig<T>,
    pub curriculum: CurriculumConfig<T>,
    pub grpo: GrpoConfig<T>,
    pub geneval: GenevalConfig,
}

impl<T: Scalar> Default for EngineConfig<T> {
    fn default() -> Self {
        Self {
            reward: RewardConfig::default(),
            shaping: ShapingConfig::default(),
            curriculum: CurriculumConfig::default(),
            grpo: GrpoConfig::default(),
            geneval: GenevalConfig::default(),
        }
    }
}

impl<T: Scalar> EngineConfig<T> {
    pub fn validate(&self) -> Result<(), ConfigValidationError> {
        self.shaping.validate()?;
        self.curriculum.validate()?;

        let r = &self.reward;
        for (field, a) in [
            ("strict_alpha", r.strict_alpha),
            ("large_gap_delta_alpha", r.large_gap_delta_alpha),
            ("curriculum.alpha_start", self.curriculum.alpha_start),
            ("curriculum.alpha_target", self.curriculum.alpha_target),
        ] {
            if !(ALPHA_MIN..=ALPHA_MAX).contains(&a.as_f64()) {
                return Err(ConfigValidationError::Reward {
                    field,
                    rule: format!("{a} outside [{ALPHA_MIN}, {ALPHA_MAX}]"),
                });
            }
        }
        let weights = [
            ("difference_date_weight", r.difference_date_weight),
            ("difference_delta_weight", r.difference_delta_weight),
            ("incon_alpha", r.incon_alpha),
            ("large_gap_incon_alpha", r.large_gap_incon_alpha),
            ("ordering_date_weight", r.ordering_date_weight),
            ("ordering_pair_weight", r.ordering_pair_weight),
            ("ordering_div_penalty", r.ordering_div_penalty),
            ("completion_date_weight", r.completion_date_weight),
            ("completion_entity_weight", r.completion_entity_weight),
            ("entity_alpha_scale", r.entity_alpha_scale),
        ];
        for (field, w) in weights {
            if !(w >= T::zero() && w.is_finite()) {
                return Err(ConfigValidationError::Reward {
                    field,
                    rule: "must be finite and non-negative".into(),
                });
            }
        }
        if r.ordering_incon_factors.iter().any(|f| !(*f >= T::zero() && *f <= T::one())) {
            return Err(ConfigValidationError::Reward {
                field: "ordering_incon_factors",
                rule: "entries must lie in [0, 1]".into(),
            });
        }

        let g = &self.grpo;
        if !(g.epsilon > T::zero() && g.epsilon < T::one()) {
            return Err(ConfigValidationError::Grpo {
                field: "epsilon",
                rule: "must lie in (0, 1)".into(),
            });
        }
        if g.beta.is_nan() || g.beta < T::zero() {
            return Err(ConfigValidationError::Grpo {
                field: "beta",
                rule: "must be non-negative".into(),
            });
        }
        if g.group_size < 2 {
            return Err(ConfigValidationError::Grpo {
                field: "group_size",
                rule: "must be at least 2".into(),
            });
        }

        let ge = &self.geneval;
        if ge.dimension == 0 || ge.n_div == 0 || ge.batch_size == 0 || ge.max_in_flight == 0 {
            return Err(ConfigValidationError::Geneval {
                field: "dimension/n_div/batch_size/max_in_flight",
                rule: "must be positive".into(),
            });
        }
        if ge.themes.is_empty() {
            return Err(ConfigValidationError::Geneval {
                field: "themes",
                rule: "must not be empty".into(),
            });
        }
        Ok(())
    }

    /// Hex SHA-256 of the compact JSON form.
    pub fn config_hash(&self) -> String {
        let json = serde_json::to_string(self).expect("config always serializes");
        hex::encode(Sha256::digest(json.as_bytes()))
    }
}
