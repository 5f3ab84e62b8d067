//! Social Force Model terms.
//!
//! Only the robot's forces are used downstream: the attractive term feeds the
//! dense reward, and the repulsive terms (and their sum) are appended to the
//! network state. Obstacles act through the circle embedded in each square.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::vec2::Vec2;

/// Below this distance to the goal the preferred velocity is zero.
pub const GOAL_EPSILON: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SfmParams {
    /// Gain of the attractive force.
    pub k_attract: f64,
    /// Repulsion amplitude.
    pub a_z: f64,
    /// Repulsion decay length in metres; must be positive.
    pub b_z: f64,
    /// Repulsion offset distance in metres.
    pub d_z: f64,
}

impl Default for SfmParams {
    /// The parameters used for force-augmented states.
    fn default() -> Self {
        Self {
            k_attract: 1.0,
            a_z: 1.0,
            b_z: 1.0,
            d_z: 0.0,
        }
    }
}

impl SfmParams {
    pub fn validate(&self) -> Result<()> {
        let ok = self.k_attract >= 0.0
            && self.a_z >= 0.0
            && self.b_z > 0.0
            && self.d_z >= 0.0
            && [self.k_attract, self.a_z, self.b_z, self.d_z]
                .iter()
                .all(|v| v.is_finite());
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("invalid SFM parameters {self:?}")))
        }
    }
}

/// Velocity of magnitude `v_pref` pointing from `position` to `goal`; zero on the goal.
pub fn preferred_velocity(position: Vec2, goal: Vec2, v_pref: f64) -> Vec2 {
    let to_goal = goal - position;
    let dist = to_goal.length();
    if dist < GOAL_EPSILON {
        Vec2::ZERO
    } else {
        to_goal * (v_pref / dist)
    }
}

/// `k * (v0 - v)`.
pub fn attractive_force(current_velocity: Vec2, preferred_velocity: Vec2, params: &SfmParams) -> Vec2 {
    (preferred_velocity - current_velocity) * params.k_attract
}

/// Repulsion exerted by `source` on `subject`, pointing from the source to the subject.
pub fn repulsive_force(subject_position: Vec2, source_position: Vec2, params: &SfmParams) -> Result<Vec2> {
    let offset = subject_position - source_position;
    let dist = offset.length();
    if dist == 0.0 {
        return Err(Error::DegenerateRepulsor);
    }
    let magnitude = params.a_z * ((params.d_z - dist) / params.b_z).exp();
    Ok(offset * (magnitude / dist))
}

/// Sum of the repulsive forces of every source on `robot_position`.
pub fn resultant_repulsive_force(robot_position: Vec2, sources: &[Vec2], params: &SfmParams) -> Result<Vec2> {
    sources.iter().try_fold(Vec2::ZERO, |acc, &source| {
        Ok(acc + repulsive_force(robot_position, source, params)?)
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit() -> SfmParams {
        SfmParams::default()
    }

    fn close(a: Vec2, b: Vec2, tol: f64) -> bool {
        (a.x - b.x).abs() <= tol && (a.y - b.y).abs() <= tol
    }

    #[test]
    fn attractive_examples() {
        let p = unit();
        assert_eq!(attractive_force(Vec2::ZERO, Vec2::new(1.0, 0.0), &p), Vec2::new(1.0, 0.0));
        let v = Vec2::new(0.7, 0.7);
        assert_eq!(attractive_force(v, v, &p), Vec2::ZERO);
        let p2 = SfmParams { k_attract: 2.0, ..unit() };
        assert_eq!(
            attractive_force(Vec2::new(0.0, 1.0), Vec2::new(1.0, 0.0), &p2),
            Vec2::new(2.0, -2.0)
        );
    }

    #[test]
    fn repulsive_examples() {
        let p = unit();
        let f = repulsive_force(Vec2::new(1.0, 0.0), Vec2::ZERO, &p).unwrap();
        assert!(close(f, Vec2::new((-1.0f64).exp(), 0.0), 1e-15));
        assert!((f.x - 0.367879).abs() < 1e-6);
        let f = repulsive_force(Vec2::new(0.0, 0.5), Vec2::ZERO, &p).unwrap();
        assert!(close(f, Vec2::new(0.0, (-0.5f64).exp()), 1e-15));
        assert!((f.y - 0.606531).abs() < 1e-6);
        assert!(matches!(
            repulsive_force(Vec2::ZERO, Vec2::ZERO, &p),
            Err(Error::DegenerateRepulsor)
        ));
    }

    #[test]
    fn resultant_examples() {
        let p = unit();
        let f = resultant_repulsive_force(Vec2::ZERO, &[Vec2::new(1.0, 0.0), Vec2::new(-1.0, 0.0)], &p).unwrap();
        assert!(close(f, Vec2::ZERO, 1e-15));
        assert_eq!(resultant_repulsive_force(Vec2::ZERO, &[], &p).unwrap(), Vec2::ZERO);
        let f = resultant_repulsive_force(Vec2::ZERO, &[Vec2::new(1.0, 0.0), Vec2::new(0.0, 1.0)], &p).unwrap();
        let e = (-1.0f64).exp();
        assert!(close(f, Vec2::new(-e, -e), 1e-15));
        assert!(matches!(
            resultant_repulsive_force(Vec2::ZERO, &[Vec2::new(1.0, 0.0), Vec2::ZERO], &p),
            Err(Error::DegenerateRepulsor)
        ));
    }

    #[test]
    fn magnitude_equals_amplitude_at_offset_distance() {
        let p = SfmParams { a_z: 2.5, b_z: 0.7, d_z: 1.3, k_attract: 1.0 };
        let f = repulsive_force(Vec2::new(1.3, 0.0), Vec2::ZERO, &p).unwrap();
        assert!((f.length() - 2.5).abs() < 1e-15);
    }

    #[test]
    fn preferred_velocity_is_zero_on_goal() {
        assert_eq!(preferred_velocity(Vec2::new(1.0, 1.0), Vec2::new(1.0, 1.0), 1.0), Vec2::ZERO);
        let v = preferred_velocity(Vec2::new(0.0, -4.0), Vec2::new(0.0, 4.0), 1.5);
        assert!(close(v, Vec2::new(0.0, 1.5), 1e-15));
    }

    #[test]
    fn rejects_non_positive_decay() {
        assert!(SfmParams { b_z: 0.0, ..unit() }.validate().is_err());
        assert!(unit().validate().is_ok());
    }
}
