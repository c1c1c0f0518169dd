//! Scalar kernels for group-relative policy optimization: baseline-subtracted
//! advantages, the clipped surrogate term, a KL estimate and the group
//! objective. No gradients; an external trainer consumes these numbers.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GrpoError {
    #[error("group has {0} responses; need at least 2")]
    GroupTooSmall(usize),
    #[error("probability ratio must be positive and finite, got {0}")]
    Ratio(f64),
    #[error("epsilon must lie in (0, 1), got {0}")]
    Epsilon(f64),
    #[error("log-probability lists differ in length ({current} vs {reference})")]
    LengthMismatch { current: usize, reference: usize },
    #[error("log-probability lists are empty")]
    Empty,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
#[serde(bound = "T: Scalar")]
pub struct GrpoConfig<T> {
    /// Clip range. Left symbolic in the method description; 0.2 is the
    /// customary PPO value.
    pub epsilon: T,
    pub beta: T,
    pub group_size: usize,
}

impl<T: Scalar> Default for GrpoConfig<T> {
    fn default() -> Self {
        Self {
            epsilon: T::of(0.2),
            beta: T::of(0.001),
            group_size: 5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rollout<T> {
    pub reward: T,
    pub logprob_current: T,
    pub logprob_reference: T,
}

/// The K responses sampled for one prompt.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RolloutGroup<T> {
    prompt_id: String,
    responses: Vec<Rollout<T>>,
}

impl<T: Scalar> RolloutGroup<T> {
    pub fn new(prompt_id: impl Into<String>, responses: Vec<Rollout<T>>) -> Result<Self, GrpoError> {
        if responses.len() < 2 {
            return Err(GrpoError::GroupTooSmall(responses.len()));
        }
        Ok(Self {
            prompt_id: prompt_id.into(),
            responses,
        })
    }

    pub fn prompt_id(&self) -> &str {
        &self.prompt_id
    }

    pub fn responses(&self) -> &[Rollout<T>] {
        &self.responses
    }

    pub fn rewards(&self) -> Vec<T> {
        self.responses.iter().map(|r| r.reward).collect()
    }
}

/// Neumaier-compensated sum.
fn compensated_sum<T: Scalar>(xs: impl IntoIterator<Item = T>) -> T {
    let mut sum = T::zero();
    let mut comp = T::zero();
    for x in xs {
        let t = sum + x;
        if sum.abs() >= x.abs() {
            comp = comp + ((sum - t) + x);
        } else {
            comp = comp + ((x - t) + sum);
        }
        sum = t;
    }
    sum + comp
}

fn mean<T: Scalar>(xs: &[T]) -> T {
    compensated_sum(xs.iter().copied()) / T::from_count(xs.len())
}

/// `A_k = R_k - mean(R)`.
pub fn group_advantages<T: Scalar>(rewards: &[T]) -> Result<Vec<T>, GrpoError> {
    if rewards.len() < 2 {
        return Err(GrpoError::GroupTooSmall(rewards.len()));
    }
    let baseline = mean(rewards);
    Ok(rewards.iter().map(|&r| r - baseline).collect())
}

/// Per-group advantages for a batch; short groups fail individually.
pub fn batch_advantages<T: Scalar>(groups: &[Vec<T>]) -> Vec<Result<Vec<T>, GrpoError>> {
    groups.iter().map(|g| group_advantages(g)).collect()
}

fn check_epsilon<T: Scalar>(epsilon: T) -> Result<(), GrpoError> {
    if !(epsilon > T::zero() && epsilon < T::one()) {
        return Err(GrpoError::Epsilon(epsilon.as_f64()));
    }
    Ok(())
}

/// `min(r A, clip(r, 1 - eps, 1 + eps) A)`.
pub fn clipped_term<T: Scalar>(ratio: T, advantage: T, epsilon: T) -> Result<T, GrpoError> {
    check_epsilon(epsilon)?;
    if !(ratio > T::zero() && ratio.is_finite()) {
        return Err(GrpoError::Ratio(ratio.as_f64()));
    }
    let clipped = ratio.max(T::one() - epsilon).min(T::one() + epsilon);
    Ok((ratio * advantage).min(clipped * advantage))
}

/// Sample estimate of `KL(current || reference)`: the mean log-ratio.
pub fn kl_penalty_estimate<T: Scalar>(logp_current: &[T], logp_reference: &[T]) -> Result<T, GrpoError> {
    if logp_current.len() != logp_reference.len() {
        return Err(GrpoError::LengthMismatch {
            current: logp_current.len(),
            reference: logp_reference.len(),
        });
    }
    if logp_current.is_empty() {
        return Err(GrpoError::Empty);
    }
    let diffs = logp_current
        .iter()
        .zip(logp_reference)
        .map(|(&c, &r)| c - r);
    Ok(compensated_sum(diffs) / T::from_count(logp_current.len()))
}

/// Mean clipped term over the group minus `beta` times the KL estimate.
pub fn objective_value<T: Scalar>(group: &RolloutGroup<T>, epsilon: T, beta: T) -> Result<T, GrpoError> {
    let advantages = group_advantages(&group.rewards())?;
    let terms = group
        .responses
        .iter()
        .zip(&advantages)
        .map(|(r, &adv)| clipped_term((r.logprob_current - r.logprob_reference).exp(), adv, epsilon))
        .collect::<Result<Vec<_>, _>>()?;
    let current: Vec<T> = group.responses.iter().map(|r| r.logprob_current).collect();
    let reference: Vec<T> = group.responses.iter().map(|r| r.logprob_reference).collect();
    let kl = kl_penalty_estimate(&current, &reference)?;
    Ok(mean(&terms) - beta * kl)
}
