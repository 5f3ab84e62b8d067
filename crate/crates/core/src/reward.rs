//! Per-step rewards: the sparse collision/goal reward and the dense
//! social-force reward with its optional late-arrival discount.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::vec2::Vec2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RewardVariant {
    Cri,
    Sfm,
    SfmDiscounted,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RewardSpec {
    pub variant: RewardVariant,
    /// Scale of the proximity penalty (negative).
    pub a: f64,
    /// Decay rate of the proximity penalty (1/m).
    pub b: f64,
    pub k_reward: f64,
    pub collision_penalty: f64,
    /// Clearance (m) under which the proximity penalty applies.
    pub proximity_threshold: f64,
    pub goal_reward: f64,
    /// Goal reward lost per second after `discount_onset`.
    pub discount_rate: f64,
    pub discount_onset: f64,
    /// Penalty per metre of remaining goal distance.
    pub distance_coeff: f64,
}

impl Default for RewardSpec {
    fn default() -> Self {
        Self {
            variant: RewardVariant::Cri,
            a: -0.03,
            b: 10.0,
            k_reward: 0.001,
            collision_penalty: -0.25,
            proximity_threshold: 0.2,
            goal_reward: 1.0,
            discount_rate: 0.02,
            discount_onset: 10.0,
            distance_coeff: 0.0001,
        }
    }
}

impl RewardSpec {
    pub fn with_variant(variant: RewardVariant) -> Self {
        Self {
            variant,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.b > 0.0) {
            return Err(Error::Config(format!("reward b must be positive, got {}", self.b)));
        }
        if !(self.proximity_threshold > 0.0) {
            return Err(Error::Config(format!(
                "proximity_threshold must be positive, got {}",
                self.proximity_threshold
            )));
        }
        let all = [
            self.a,
            self.k_reward,
            self.collision_penalty,
            self.goal_reward,
            self.discount_rate,
            self.discount_onset,
            self.distance_coeff,
        ];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(Error::Config("reward constants must be finite".into()));
        }
        Ok(())
    }

    /// Reward for the step described by `input` under the configured variant.
    pub fn evaluate(&self, input: &RewardInput) -> f64 {
        match self.variant {
            RewardVariant::Cri => cri_with(input, self),
            RewardVariant::Sfm | RewardVariant::SfmDiscounted => reward_sfm(input, self),
        }
    }

    /// Goal reward granted on arrival at time `t`.
    pub fn goal_value(&self, t: f64) -> f64 {
        if self.variant == RewardVariant::SfmDiscounted && t >= self.discount_onset {
            self.goal_reward - self.discount_rate * (t - self.discount_onset)
        } else {
            self.goal_reward
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RewardInput {
    /// Smallest `d_i - r - r_i` over all entities this step; infinite when alone.
    pub min_dt: f64,
    pub reached_goal: bool,
    pub v: Vec2,
    /// Preferred velocity: speed `v_pref` pointing at the goal.
    pub v_pref_vec: Vec2,
    pub d_g: f64,
    pub t: f64,
}

/// Sparse reward with the default constants.
pub fn reward_cri(input: &RewardInput) -> f64 {
    cri_with(input, &RewardSpec::default())
}

fn cri_with(input: &RewardInput, spec: &RewardSpec) -> f64 {
    if input.min_dt < 0.0 {
        spec.collision_penalty
    } else if input.min_dt < spec.proximity_threshold {
        0.25 * (-0.1 + input.min_dt / 2.0)
    } else if input.reached_goal {
        spec.goal_reward
    } else {
        0.0
    }
}

pub fn reward_sfm(input: &RewardInput, spec: &RewardSpec) -> f64 {
    if input.min_dt < 0.0 {
        spec.collision_penalty
    } else if input.min_dt < spec.proximity_threshold {
        spec.a * (-spec.b * input.min_dt).exp()
    } else if input.reached_goal {
        spec.goal_value(input.t)
    } else {
        let k = spec.k_reward;
        k - (k * (input.v - input.v_pref_vec)).length() / 2.0 - spec.distance_coeff * input.d_g
    }
}
