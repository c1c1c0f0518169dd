//! Difficulty stratification and the three-phase decay-coefficient schedule.
//!
//! Phase 1 trains on easy inference samples only at the target alpha. Phase 2
//! opens every task and scores normal/hard samples leniently at the start
//! alpha. Phase 3 moves normal/hard samples linearly from the start alpha to
//! the target over `s_transition` steps, then holds. Easy samples and every
//! evaluation use the target alpha throughout.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{Difficulty, TaskKind};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CurriculumError {
    #[error("phase 1 admits only easy inference samples, got {difficulty:?} {task}")]
    NotAdmitted { task: TaskKind, difficulty: Difficulty },
    #[error("record has no difficulty; stratify it before scoring in {0}")]
    Unstratified(Phase),
    #[error("alpha_start {start} must be below alpha_target {target}")]
    AlphaOrder { start: f64, target: f64 },
    #[error("s_transition must be positive")]
    ZeroTransition,
    #[error("phase {0} has zero length")]
    ZeroLength(&'static str),
    #[error("unknown phase {0:?} (expected p1, p2, p3 or eval)")]
    UnknownPhase(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    P1,
    P2,
    P3,
    Eval,
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Phase::P1 => "P1",
            Phase::P2 => "P2",
            Phase::P3 => "P3",
            Phase::Eval => "Eval",
        })
    }
}

impl FromStr for Phase {
    type Err = CurriculumError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "p1" | "1" | "phase1" => Ok(Phase::P1),
            "p2" | "2" | "phase2" => Ok(Phase::P2),
            "p3" | "3" | "phase3" => Ok(Phase::P3),
            "eval" | "evaluation" => Ok(Phase::Eval),
            _ => Err(CurriculumError::UnknownPhase(s.to_string())),
        }
    }
}

/// Schedule constants. Not part of the per-call state so they can live in
/// the engine configuration file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
#[serde(bound = "T: Scalar")]
pub struct CurriculumConfig<T> {
    pub alpha_start: T,
    pub alpha_target: T,
    pub s_transition: u32,
    /// Baseline error (months) at or below which a sample is easy.
    pub easy_max_delta: u32,
    pub plan: PhasePlan,
}

impl<T: Scalar> Default for CurriculumConfig<T> {
    fn default() -> Self {
        Self {
            alpha_start: T::of(0.07),
            alpha_target: T::of(0.1),
            s_transition: 50,
            easy_max_delta: 3,
            plan: PhasePlan::default(),
        }
    }
}

impl<T: Scalar> CurriculumConfig<T> {
    pub fn validate(&self) -> Result<(), CurriculumError> {
        if self.alpha_start.is_nan() || self.alpha_target.is_nan() || self.alpha_start >= self.alpha_target {
            return Err(CurriculumError::AlphaOrder {
                start: self.alpha_start.as_f64(),
                target: self.alpha_target.as_f64(),
            });
        }
        if self.s_transition == 0 {
            return Err(CurriculumError::ZeroTransition);
        }
        self.plan.validate()
    }

    pub fn state(&self, phase: Phase, step_in_phase: u32) -> Result<CurriculumState<T>, CurriculumError> {
        CurriculumState::new(
            phase,
            step_in_phase,
            self.alpha_start,
            self.alpha_target,
            self.s_transition,
        )
    }
}

/// Phase and step used for one scoring call. Steps count from 0 per phase.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurriculumState<T> {
    phase: Phase,
    step_in_phase: u32,
    alpha_start: T,
    alpha_target: T,
    s_transition: u32,
}

impl<T: Scalar> CurriculumState<T> {
    pub fn new(
        phase: Phase,
        step_in_phase: u32,
        alpha_start: T,
        alpha_target: T,
        s_transition: u32,
    ) -> Result<Self, CurriculumError> {
        if alpha_start.is_nan() || alpha_target.is_nan() || alpha_start >= alpha_target {
            return Err(CurriculumError::AlphaOrder {
                start: alpha_start.as_f64(),
                target: alpha_target.as_f64(),
            });
        }
        if s_transition == 0 {
            return Err(CurriculumError::ZeroTransition);
        }
        Ok(Self {
            phase,
            step_in_phase,
            alpha_start,
            alpha_target,
            s_transition,
        })
    }

    /// Default constants (0.07 to 0.1 over 50 steps).
    pub fn at(phase: Phase, step_in_phase: u32) -> Self {
        CurriculumConfig::default()
            .state(phase, step_in_phase)
            .expect("default schedule is valid")
    }

    pub fn eval() -> Self {
        Self::at(Phase::Eval, 0)
    }

    pub fn phase(&self) -> Phase {
        self.phase
    }

    pub fn step_in_phase(&self) -> u32 {
        self.step_in_phase
    }

    pub fn alpha_target(&self) -> T {
        self.alpha_target
    }

    /// `alpha_start + (alpha_target - alpha_start) * min(1, s / s_transition)`.
    pub fn transition_alpha(&self) -> T {
        let progress = (T::of(self.step_in_phase as f64) / T::of(self.s_transition as f64)).min(T::one());
        self.alpha_start + (self.alpha_target - self.alpha_start) * progress
    }

    /// Whether a sample may be drawn at all in this phase.
    pub fn admits(&self, task: TaskKind, difficulty: Difficulty) -> Result<(), CurriculumError> {
        if self.phase == Phase::P1 && (task != TaskKind::Inference || difficulty != Difficulty::Easy) {
            return Err(CurriculumError::NotAdmitted { task, difficulty });
        }
        Ok(())
    }
}

/// Easy iff the baseline model's inference error is at most `easy_max_delta`.
pub fn stratify(baseline_delta_m: u32, easy_max_delta: u32) -> Difficulty {
    if baseline_delta_m <= easy_max_delta {
        Difficulty::Easy
    } else {
        Difficulty::NormalHard
    }
}

pub fn alpha_for<T: Scalar>(difficulty: Difficulty, state: &CurriculumState<T>) -> Result<T, CurriculumError> {
    let target = state.alpha_target;
    match (state.phase, difficulty) {
        (Phase::Eval, _) => Ok(target),
        (_, Difficulty::Easy) => Ok(target),
        (phase, Difficulty::Unset) => Err(CurriculumError::Unstratified(phase)),
        (Phase::P1, d) => Err(CurriculumError::NotAdmitted {
            task: TaskKind::Inference,
            difficulty: d,
        }),
        (Phase::P2, Difficulty::NormalHard) => Ok(state.alpha_start),
        (Phase::P3, Difficulty::NormalHard) => Ok(state.transition_alpha()),
    }
}

/// Which tasks a training phase draws from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskScope {
    EasyInference,
    AllStage1,
    Prediction,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhaseSpec {
    pub name: &'static str,
    pub steps: u32,
    pub scope: TaskScope,
    pub alpha_rule: &'static str,
}

/// Training lengths (in steps) of the curriculum phases and of stage 2.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PhasePlan {
    pub p1_steps: u32,
    pub p2_steps: u32,
    pub p3_steps: u32,
    pub stage2_steps: u32,
}

impl Default for PhasePlan {
    fn default() -> Self {
        Self {
            p1_steps: 100,
            p2_steps: 500,
            p3_steps: 1000,
            stage2_steps: 100,
        }
    }
}

impl PhasePlan {
    pub fn new(p1_steps: u32, p2_steps: u32, p3_steps: u32, stage2_steps: u32) -> Result<Self, CurriculumError> {
        let plan = Self {
            p1_steps,
            p2_steps,
            p3_steps,
            stage2_steps,
        };
        plan.validate()?;
        Ok(plan)
    }

    pub fn validate(&self) -> Result<(), CurriculumError> {
        for (name, steps) in [
            ("P1", self.p1_steps),
            ("P2", self.p2_steps),
            ("P3", self.p3_steps),
            ("Stage2", self.stage2_steps),
        ] {
            if steps == 0 {
                return Err(CurriculumError::ZeroLength(name));
            }
        }
        Ok(())
    }

    pub fn phases(&self) -> [PhaseSpec; 4] {
        [
            PhaseSpec {
                name: "P1",
                steps: self.p1_steps,
                scope: TaskScope::EasyInference,
                alpha_rule: "alpha_target for every sample",
            },
            PhaseSpec {
                name: "P2",
                steps: self.p2_steps,
                scope: TaskScope::AllStage1,
                alpha_rule: "easy: alpha_target; normal/hard: alpha_start",
            },
            PhaseSpec {
                name: "P3",
                steps: self.p3_steps,
                scope: TaskScope::AllStage1,
                alpha_rule: "easy: alpha_target; normal/hard: linear alpha_start -> alpha_target over s_transition",
            },
            PhaseSpec {
                name: "Stage2",
                steps: self.stage2_steps,
                scope: TaskScope::Prediction,
                alpha_rule: "strict alpha for every sample",
            },
        ]
    }

    /// Map a global stage-1 step onto (phase, step within phase). Steps past
    /// the end of P3 stay in P3.
    pub fn locate(&self, global_step: u32) -> (Phase, u32) {
        if global_step < self.p1_steps {
            (Phase::P1, global_step)
        } else if global_step < self.p1_steps + self.p2_steps {
            (Phase::P2, global_step - self.p1_steps)
        } else {
            (Phase::P3, global_step - self.p1_steps - self.p2_steps)
        }
    }
}

/// The default plan.
pub fn phase_plan() -> PhasePlan {
    PhasePlan::default()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlphaRow<T> {
    pub phase: Phase,
    pub step: u32,
    pub easy: T,
    /// `None` where normal/hard samples are not drawn (phase 1).
    pub normal_hard: Option<T>,
}

pub fn alpha_row<T: Scalar>(state: &CurriculumState<T>) -> AlphaRow<T> {
    AlphaRow {
        phase: state.phase,
        step: state.step_in_phase,
        easy: alpha_for(Difficulty::Easy, state).expect("easy is always admitted"),
        normal_hard: alpha_for(Difficulty::NormalHard, state).ok(),
    }
}
