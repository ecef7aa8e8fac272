use serde::{Deserialize, Serialize};

use crate::plausibility::PlausibilityVerdict;

/// Reward magnitudes. The alignment reward is `-worsen`, `-stagnate` or `+improve`; the
/// plausibility reward is `+plausibility` when stable and `-plausibility` otherwise.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RewardConfig {
    pub worsen: f64,
    pub stagnate: f64,
    pub improve: f64,
    pub plausibility: f64,
}

impl Default for RewardConfig {
    fn default() -> Self {
        Self { worsen: 0.6, stagnate: 0.1, improve: 0.5, plausibility: 0.5 }
    }
}

/// CD changes within this tolerance count as stagnation.
pub const STAGNATION_TOLERANCE: f64 = 1e-12;

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RewardSet {
    pub alignment: f64,
    pub plausibility: f64,
}

pub fn alignment_reward(prev_cd: f64, next_cd: f64, cfg: &RewardConfig) -> f64 {
    if (next_cd - prev_cd).abs() <= STAGNATION_TOLERANCE {
        -cfg.stagnate
    } else if next_cd > prev_cd {
        -cfg.worsen
    } else {
        cfg.improve
    }
}

pub fn plausibility_reward(verdict: &PlausibilityVerdict, rho_p: f64) -> f64 {
    if verdict.stable {
        rho_p
    } else {
        -rho_p
    }
}
