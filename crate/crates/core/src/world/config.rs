//! Scenario parameters. Every number that shapes a scene lives here so that
//! preset files, not code, pin the environments.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::orca::OrcaConfig;
use crate::vec2::Vec2;

/// Axis-aligned sampling box.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Region {
    pub min: Vec2,
    pub max: Vec2,
}

impl Region {
    pub fn new(min: Vec2, max: Vec2) -> Self {
        Self { min, max }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    /// Simulation step in seconds.
    pub time_step: f64,
    /// Episodes end with a timeout at this time (seconds).
    pub time_limit: f64,
    pub robot_radius: f64,
    pub robot_v_pref: f64,
    pub robot_start: Vec2,
    pub robot_goal: Vec2,
    pub human_radius: f64,
    pub human_v_pref: f64,
    /// Humans start on a circle of this radius around the origin.
    pub circle_radius: f64,
    /// Half-width of the uniform angular perturbation of a human's antipodal goal (rad).
    pub goal_angle_noise: f64,
    /// Half-width of the uniform radial perturbation of a human's goal (m).
    pub goal_radial_noise: f64,
    /// Number of elements in environment 1.
    pub element_count: usize,
    /// Probability that an element of environment 1 is a human.
    pub human_probability: f64,
    /// Number of circle humans in environments 2, 3 and 5.
    pub barrier_env_humans: usize,
    /// Region for free-standing obstacles of environment 1.
    pub obstacle_region: Region,
    /// Obstacles keep at least this distance from the robot start and goal.
    pub endpoint_clearance: f64,
    /// Extra gap required between any two entities at t = 0.
    pub placement_margin: f64,
    pub max_placement_attempts: usize,
    /// Square centres of the concave barrier relative to its reference point.
    pub concave_barrier: Vec<Vec2>,
    /// Reference point of the concave barrier in environments 2 and 4.
    pub concave_barrier_center: Vec2,
    /// Sampling region of the concave barrier's reference point in environment 3.
    pub concave_barrier_region: Region,
    /// Sampling region of straight barrier centres (environments 4 and 5).
    pub straight_barrier_region: Region,
    pub orca: OrcaConfig,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        let side = 0.6;
        Self {
            time_step: 0.25,
            time_limit: 25.0,
            robot_radius: 0.3,
            robot_v_pref: 1.0,
            robot_start: Vec2::new(0.0, -4.0),
            robot_goal: Vec2::new(0.0, 4.0),
            human_radius: 0.3,
            human_v_pref: 1.0,
            circle_radius: 4.0,
            goal_angle_noise: 0.5,
            goal_radial_noise: 0.3,
            element_count: 10,
            human_probability: 0.6,
            barrier_env_humans: 5,
            obstacle_region: Region::new(Vec2::new(-3.0, -3.0), Vec2::new(3.0, 3.0)),
            endpoint_clearance: 1.0,
            placement_margin: 0.05,
            max_placement_attempts: 1000,
            // Three-square wall with a return at each end pointing at the robot.
            concave_barrier: vec![
                Vec2::new(-side, side / 2.0),
                Vec2::new(0.0, side / 2.0),
                Vec2::new(side, side / 2.0),
                Vec2::new(-side, -side / 2.0),
                Vec2::new(side, -side / 2.0),
            ],
            concave_barrier_center: Vec2::ZERO,
            concave_barrier_region: Region::new(Vec2::new(-1.5, -1.5), Vec2::new(1.5, 1.5)),
            straight_barrier_region: Region::new(Vec2::new(-2.5, -2.0), Vec2::new(2.5, 2.0)),
            orca: OrcaConfig::default(),
        }
    }
}

impl ScenarioConfig {
    /// Side of a square obstacle: the diameter of the agents.
    pub fn obstacle_side(&self) -> f64 {
        2.0 * self.human_radius
    }

    pub fn max_steps(&self) -> usize {
        (self.time_limit / self.time_step - 1e-9).ceil() as usize
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("time_step", self.time_step),
            ("time_limit", self.time_limit),
            ("robot_radius", self.robot_radius),
            ("human_radius", self.human_radius),
            ("circle_radius", self.circle_radius),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Config(format!("{name} must be positive, got {v}")));
            }
        }
        if !(0.0..=1.0).contains(&self.human_probability) {
            return Err(Error::Config("human_probability must lie in [0, 1]".into()));
        }
        if self.robot_v_pref < 0.0 || self.human_v_pref < 0.0 {
            return Err(Error::Config("preferred speeds must be non-negative".into()));
        }
        if (self.orca.time_step - self.time_step).abs() > 1e-12 {
            return Err(Error::Config("orca.time_step must equal time_step".into()));
        }
        self.orca.validate()
    }
}
