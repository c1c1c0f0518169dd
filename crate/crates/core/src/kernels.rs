//! Task-specific accuracy scores.
//!
//! Every score is built from the exponential date reward
//! `exp(-alpha * months_off)` and lies in `[0, 1]`:
//!
//! * inference / prediction: the date reward alone;
//! * difference: `(0.25 R_d1 + 0.25 R_d2 + 0.5 R_delta) * P_incon`;
//! * ordering: `(0.2 (R_d1 + R_d2 + R_d3) + 0.4 R_order) * P_incon * P_div`;
//! * completion: `0.5 R_date + 0.5 R_entity`, with `R_entity = exp(-3 alpha d)`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{DateYM, Entity, EntityKind, GroundTruth, Permutation, TaskKind};
use crate::parser::{
    circular_month_distance, month_distance, CompletionAnswer, DifferenceAnswer, OrderingAnswer,
    TaskAnswer,
};
use crate::scalar::Scalar;

pub const ALPHA_MIN: f64 = 0.05;
pub const ALPHA_MAX: f64 = 0.2;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScoreError {
    #[error("answer is for {answer} but the record is {record}")]
    TaskMismatch { answer: TaskKind, record: TaskKind },
    #[error("ground truth: {0}")]
    GroundTruth(String),
    #[error("decay coefficient {0} outside [{ALPHA_MIN}, {ALPHA_MAX}]")]
    Alpha(f64),
    #[error("alpha policy has {got} slots, task needs {need}")]
    AlphaSlots { need: usize, got: usize },
}

/// How year entities are measured before the `3 alpha` decay.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum YearDistance {
    /// One unit per year of error.
    #[default]
    Years,
    /// Twelve units per year of error.
    Months,
}

/// Weights, thresholds and factor sets for the accuracy scores.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
#[serde(bound = "T: Scalar")]
pub struct RewardConfig<T> {
    pub strict_alpha: T,
    pub difference_date_weight: T,
    pub difference_delta_weight: T,
    /// `delta_p` at or above which the large-gap decays apply.
    pub large_gap_months: u32,
    pub large_gap_delta_alpha: T,
    pub incon_alpha: T,
    pub large_gap_incon_alpha: T,
    pub ordering_date_weight: T,
    pub ordering_pair_weight: T,
    /// Consistency factor indexed by the number of agreeing pairs (0..=3).
    pub ordering_incon_factors: [T; 4],
    pub ordering_div_penalty: T,
    pub completion_date_weight: T,
    pub completion_entity_weight: T,
    pub entity_alpha_scale: T,
    pub year_distance: YearDistance,
}

impl<T: Scalar> Default for RewardConfig<T> {
    fn default() -> Self {
        Self {
            strict_alpha: T::of(0.1),
            difference_date_weight: T::of(0.25),
            difference_delta_weight: T::of(0.5),
            large_gap_months: 25,
            large_gap_delta_alpha: T::of(0.05),
            incon_alpha: T::of(0.1),
            large_gap_incon_alpha: T::of(0.05),
            ordering_date_weight: T::of(0.2),
            ordering_pair_weight: T::of(0.4),
            ordering_incon_factors: [T::of(0.2), T::of(0.4), T::of(0.7), T::of(1.0)],
            ordering_div_penalty: T::of(0.2),
            completion_date_weight: T::of(0.5),
            completion_entity_weight: T::of(0.5),
            entity_alpha_scale: T::of(3.0),
            year_distance: YearDistance::Years,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlphaMode {
    /// Per-slot coefficients from the curriculum.
    Curriculum,
    /// Every slot uses the strict coefficient.
    StrictEval,
}

/// Decay coefficients for the date slots of one sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlphaPolicy<T> {
    slots: Vec<T>,
    mode: AlphaMode,
}

impl<T: Scalar> AlphaPolicy<T> {
    pub fn strict(strict_alpha: T, slots: usize) -> Self {
        Self {
            slots: vec![strict_alpha; slots],
            mode: AlphaMode::StrictEval,
        }
    }

    pub fn curriculum(slots: Vec<T>) -> Result<Self, ScoreError> {
        for &a in &slots {
            let v = a.as_f64();
            if !(ALPHA_MIN..=ALPHA_MAX).contains(&v) {
                return Err(ScoreError::Alpha(v));
            }
        }
        Ok(Self {
            slots,
            mode: AlphaMode::Curriculum,
        })
    }

    pub fn uniform(alpha: T, slots: usize) -> Result<Self, ScoreError> {
        Self::curriculum(vec![alpha; slots])
    }

    pub fn mode(&self) -> AlphaMode {
        self.mode
    }

    pub fn slots(&self) -> &[T] {
        &self.slots
    }

    fn need(&self, n: usize) -> Result<&[T], ScoreError> {
        if self.slots.len() < n {
            return Err(ScoreError::AlphaSlots {
                need: n,
                got: self.slots.len(),
            });
        }
        Ok(&self.slots[..n])
    }
}

/// Factor breakdown behind an accuracy score.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct AccuracyFactors<T> {
    pub date_rewards: Vec<T>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta_reward: Option<T>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta_alpha: Option<T>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub order_reward: Option<T>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub entity_reward: Option<T>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p_incon: Option<T>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p_div: Option<T>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub entity_kind_mismatch: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct AccuracyResult<T> {
    pub r_acc: T,
    pub factors: AccuracyFactors<T>,
}

/// `exp(-alpha * delta_m)`.
pub fn r_date<T: Scalar>(delta_m: u32, alpha: T) -> T {
    (-alpha * T::of(delta_m as f64)).exp()
}

fn gt_dates<const N: usize>(gt: &GroundTruth) -> Result<[DateYM; N], ScoreError> {
    gt.dates
        .as_slice()
        .try_into()
        .map_err(|_| ScoreError::GroundTruth(format!("need {N} dates, got {}", gt.dates.len())))
}

pub fn score_inference<T: Scalar>(
    predicted: DateYM,
    gt: &GroundTruth,
    alpha: &AlphaPolicy<T>,
) -> Result<AccuracyResult<T>, ScoreError> {
    let [truth] = gt_dates::<1>(gt)?;
    let a = alpha.need(1)?[0];
    let r = r_date(month_distance(predicted, truth), a);
    Ok(AccuracyResult {
        r_acc: r,
        factors: AccuracyFactors {
            date_rewards: vec![r],
            ..Default::default()
        },
    })
}

/// Prediction ignores the curriculum and always decays at the strict alpha.
pub fn score_prediction<T: Scalar>(
    predicted: DateYM,
    gt: &GroundTruth,
    cfg: &RewardConfig<T>,
) -> Result<AccuracyResult<T>, ScoreError> {
    score_inference(predicted, gt, &AlphaPolicy::strict(cfg.strict_alpha, 1))
}

pub fn score_difference<T: Scalar>(
    ans: &DifferenceAnswer,
    gt: &GroundTruth,
    alpha: &AlphaPolicy<T>,
    cfg: &RewardConfig<T>,
) -> Result<AccuracyResult<T>, ScoreError> {
    let [gt1, gt2] = gt_dates::<2>(gt)?;
    let delta_gt = gt
        .delta_months
        .ok_or_else(|| ScoreError::GroundTruth("missing delta_months".into()))?;
    let alphas = alpha.need(2)?;
    let (a1, a2) = (alphas[0], alphas[1]);
    let [p1, p2] = ans.dates;
    let delta_p = ans.delta_months;

    let rd1 = r_date(month_distance(p1, gt1), a1);
    let rd2 = r_date(month_distance(p2, gt2), a2);

    let large_gap = delta_p >= cfg.large_gap_months;
    let delta_alpha = if large_gap {
        cfg.large_gap_delta_alpha
    } else {
        match alpha.mode() {
            AlphaMode::StrictEval => cfg.strict_alpha,
            AlphaMode::Curriculum => (a1 + a2) / T::of(2.0),
        }
    };
    let r_delta = r_date(delta_p.abs_diff(delta_gt), delta_alpha);

    let implied = month_distance(p1, p2);
    let incon_alpha = if large_gap {
        cfg.large_gap_incon_alpha
    } else {
        cfg.incon_alpha
    };
    let p_incon = r_date(implied.abs_diff(delta_p), incon_alpha);

    let w_d = cfg.difference_date_weight;
    let r_acc = (w_d * rd1 + w_d * rd2 + cfg.difference_delta_weight * r_delta) * p_incon;
    Ok(AccuracyResult {
        r_acc,
        factors: AccuracyFactors {
            date_rewards: vec![rd1, rd2],
            delta_reward: Some(r_delta),
            delta_alpha: Some(delta_alpha),
            p_incon: Some(p_incon),
            ..Default::default()
        },
    })
}

const PAIRS: [(usize, usize); 3] = [(0, 1), (0, 2), (1, 2)];

/// Fraction of the three event pairs whose relative order agrees.
pub fn order_pair_accuracy<T: Scalar>(pred: Permutation, gt: Permutation) -> T {
    let (rp, rg) = (pred.ranks(), gt.ranks());
    let agree = PAIRS
        .iter()
        .filter(|&&(i, j)| (rp[i] < rp[j]) == (rg[i] < rg[j]))
        .count();
    T::from_count(agree) / T::of(3.0)
}

/// Pairs on which the stated order agrees with the predicted dates. A tie
/// in dates never contradicts the stated order.
pub fn ordering_agreeing_pairs(pred_dates: &[DateYM; 3], stated: Permutation) -> usize {
    let ranks = stated.ranks();
    PAIRS
        .iter()
        .filter(|&&(i, j)| {
            let (di, dj) = (pred_dates[i], pred_dates[j]);
            di == dj || (di < dj) == (ranks[i] < ranks[j])
        })
        .count()
}

pub fn ordering_inconsistency_factor<T: Scalar>(
    pred_dates: &[DateYM; 3],
    stated: Permutation,
    cfg: &RewardConfig<T>,
) -> T {
    cfg.ordering_incon_factors[ordering_agreeing_pairs(pred_dates, stated)]
}

/// Penalizes three identical dates, or one-month steps stated as `1-2-3`.
pub fn ordering_diversity_factor<T: Scalar>(
    pred_dates: &[DateYM; 3],
    stated: Permutation,
    cfg: &RewardConfig<T>,
) -> T {
    let [a, b, c] = pred_dates.map(DateYM::ordinal);
    let identical = a == b && b == c;
    let sequential = b - a == 1 && c - b == 1 && stated == Permutation::IDENTITY;
    if identical || sequential {
        cfg.ordering_div_penalty
    } else {
        T::one()
    }
}

pub fn score_ordering<T: Scalar>(
    ans: &OrderingAnswer,
    gt: &GroundTruth,
    alpha: &AlphaPolicy<T>,
    cfg: &RewardConfig<T>,
) -> Result<AccuracyResult<T>, ScoreError> {
    let truth = gt_dates::<3>(gt)?;
    let gt_order = gt
        .order
        .ok_or_else(|| ScoreError::GroundTruth("missing order".into()))?;
    let alphas = alpha.need(3)?;

    let date_rewards: Vec<T> = (0..3)
        .map(|i| r_date(month_distance(ans.dates[i], truth[i]), alphas[i]))
        .collect();
    let order_reward: T = order_pair_accuracy(ans.order, gt_order);
    let p_incon = ordering_inconsistency_factor(&ans.dates, ans.order, cfg);
    let p_div = ordering_diversity_factor(&ans.dates, ans.order, cfg);

    let date_sum: T = date_rewards.iter().copied().sum();
    let r_acc =
        (cfg.ordering_date_weight * date_sum + cfg.ordering_pair_weight * order_reward) * p_incon * p_div;
    Ok(AccuracyResult {
        r_acc,
        factors: AccuracyFactors {
            date_rewards,
            order_reward: Some(order_reward),
            p_incon: Some(p_incon),
            p_div: Some(p_div),
            ..Default::default()
        },
    })
}

/// Distance between predicted and true entity, or `None` if the kinds differ.
pub fn entity_distance(pred: Entity, truth: Entity, year_distance: YearDistance) -> Option<u32> {
    match (pred, truth) {
        (Entity::Month(p), Entity::Month(t)) => Some(circular_month_distance(p, t)),
        (Entity::Year(p), Entity::Year(t)) => {
            let years = p.abs_diff(t);
            Some(match year_distance {
                YearDistance::Years => years,
                YearDistance::Months => years.saturating_mul(12),
            })
        }
        _ => None,
    }
}

pub fn score_completion<T: Scalar>(
    ans: &CompletionAnswer,
    gt: &GroundTruth,
    alpha: &AlphaPolicy<T>,
    cfg: &RewardConfig<T>,
) -> Result<AccuracyResult<T>, ScoreError> {
    let [truth] = gt_dates::<1>(gt)?;
    let gt_entity = gt
        .entity
        .ok_or_else(|| ScoreError::GroundTruth("missing entity".into()))?;
    let a = alpha.need(1)?[0];

    let r_d = r_date(month_distance(ans.date, truth), a);
    let distance = entity_distance(ans.entity, gt_entity, cfg.year_distance);
    let r_e = match distance {
        Some(dm) => r_date(dm, cfg.entity_alpha_scale * a),
        None => T::zero(),
    };
    Ok(AccuracyResult {
        r_acc: cfg.completion_date_weight * r_d + cfg.completion_entity_weight * r_e,
        factors: AccuracyFactors {
            date_rewards: vec![r_d],
            entity_reward: Some(r_e),
            entity_kind_mismatch: distance.is_none(),
            ..Default::default()
        },
    })
}

/// Dispatch on the answer variant, checking it against the record's task.
pub fn score_accuracy<T: Scalar>(
    task: TaskKind,
    ans: &TaskAnswer,
    gt: &GroundTruth,
    alpha: &AlphaPolicy<T>,
    cfg: &RewardConfig<T>,
) -> Result<AccuracyResult<T>, ScoreError> {
    if ans.task() != task {
        return Err(ScoreError::TaskMismatch {
            answer: ans.task(),
            record: task,
        });
    }
    match ans {
        TaskAnswer::Inference(d) => score_inference(*d, gt, alpha),
        TaskAnswer::Prediction(d) => score_prediction(*d, gt, cfg),
        TaskAnswer::Difference(a) => score_difference(a, gt, alpha, cfg),
        TaskAnswer::Ordering(a) => score_ordering(a, gt, alpha, cfg),
        TaskAnswer::Completion(a) => score_completion(a, gt, alpha, cfg),
    }
}

/// Entity kind expected by a completion record, if any.
pub fn expected_entity_kind(gt: &GroundTruth) -> Option<EntityKind> {
    gt.entity.map(Entity::kind)
}
