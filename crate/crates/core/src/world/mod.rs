//! The simulated scene: robot, ORCA-driven humans and square obstacles with
//! an embedded stationary agent, advanced in fixed time steps.

mod config;
mod scenario;

use std::sync::Arc;

use serde::{Deserialize, Serialize};

pub use config::{Region, ScenarioConfig};
pub use scenario::generate_scenario;

use crate::error::{Error, Result};
use crate::orca::{orca_velocity, LineObstacle, OrcaAgentView};
use crate::vec2::{closest_approach, Vec2};

/// Slack on the action speed bound.
pub const SPEED_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum AgentKind {
    Robot,
    Human,
    ObstacleCore,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AgentBody {
    pub id: u32,
    pub kind: AgentKind,
    pub position: Vec2,
    pub velocity: Vec2,
    pub radius: f64,
    pub goal: Vec2,
    pub v_pref: f64,
    pub heading_theta: f64,
}

impl AgentBody {
    /// Velocity of at most `v_pref` toward the goal that does not overshoot it within `dt`.
    pub fn goal_velocity(&self, dt: f64) -> Vec2 {
        let to_goal = self.goal - self.position;
        let dist = to_goal.length();
        if dist < crate::sfm::GOAL_EPSILON {
            return Vec2::ZERO;
        }
        to_goal * (self.v_pref.min(dist / dt) / dist)
    }

    /// ORCA view with the radius padded by `margin`.
    pub fn orca_view(&self, preferred_velocity: Vec2, margin: f64) -> OrcaAgentView {
        OrcaAgentView {
            position: self.position,
            velocity: self.velocity,
            radius: self.radius + margin,
            preferred_velocity,
            max_speed: self.v_pref.max(f64::MIN_POSITIVE),
        }
    }
}

/// A square obstacle; the circle agent at its centre is what the robot perceives.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SquareObstacle {
    pub center: Vec2,
    pub side: f64,
    pub core: AgentBody,
}

impl SquareObstacle {
    pub fn core_agent_id(&self) -> u32 {
        self.core.id
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Outcome {
    Running,
    ReachedGoal,
    Collision,
    Timeout,
}

impl Outcome {
    pub fn is_terminal(self) -> bool {
        self != Outcome::Running
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepEvent {
    pub outcome: Outcome,
    /// Smallest clearance (centre distance minus both radii) between the
    /// robot and any entity during the step; `+inf` in an empty scene.
    pub min_separation: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct World {
    pub robot: AgentBody,
    pub humans: Vec<AgentBody>,
    pub obstacles: Vec<SquareObstacle>,
    /// Number of steps taken; `time = steps * time_step`.
    pub steps: usize,
    pub time_step: f64,
    pub env_id: u8,
    pub rng_seed: u64,
    pub config: Arc<ScenarioConfig>,
    line_obstacles: Vec<LineObstacle>,
}

impl World {
    pub fn new(
        robot: AgentBody,
        humans: Vec<AgentBody>,
        obstacles: Vec<SquareObstacle>,
        env_id: u8,
        rng_seed: u64,
        config: Arc<ScenarioConfig>,
    ) -> Self {
        let line_obstacles = obstacles
            .iter()
            .flat_map(|o| LineObstacle::square(o.center, o.side))
            .collect();
        Self {
            robot,
            humans,
            obstacles,
            steps: 0,
            time_step: config.time_step,
            env_id,
            rng_seed,
            config,
            line_obstacles,
        }
    }

    /// A scene containing only the robot at its configured start.
    pub fn empty(config: Arc<ScenarioConfig>) -> Self {
        let robot = robot_body(&config);
        Self::new(robot, Vec::new(), Vec::new(), 0, 0, config)
    }

    pub fn time(&self) -> f64 {
        self.steps as f64 * self.time_step
    }

    pub fn line_obstacles(&self) -> &[LineObstacle] {
        &self.line_obstacles
    }

    /// Every entity the robot perceives: humans, then obstacle cores, each in id order.
    pub fn entities(&self) -> impl Iterator<Item = &AgentBody> + '_ {
        self.humans.iter().chain(self.obstacles.iter().map(|o| &o.core))
    }

    pub fn entity_count(&self) -> usize {
        self.humans.len() + self.obstacles.len()
    }

    /// Distance from the robot to its goal.
    pub fn goal_distance(&self) -> f64 {
        self.robot.position.distance(self.robot.goal)
    }

    /// ORCA velocities for all humans from the current snapshot; the robot is
    /// one of their neighbours.
    pub fn human_velocities(&self) -> Vec<Vec2> {
        let dt = self.time_step;
        let margin = self.config.orca.safety_margin;
        let views: Vec<OrcaAgentView> = self
            .humans
            .iter()
            .map(|h| h.orca_view(h.goal_velocity(dt), margin))
            .collect();
        let robot_view = self.robot.orca_view(self.robot.velocity, margin);
        let mut neighbors = Vec::with_capacity(views.len());
        (0..views.len())
            .map(|i| {
                neighbors.clear();
                neighbors.extend(views.iter().enumerate().filter(|(j, _)| *j != i).map(|(_, v)| *v));
                neighbors.push(robot_view);
                orca_velocity(&views[i], &neighbors, &self.line_obstacles, &self.config.orca)
            })
            .collect()
    }

    /// Advances the scene by one step with the robot moving at `action`.
    pub fn step(&mut self, action: Vec2) -> Result<StepEvent> {
        let speed = action.length();
        if !action.is_finite() || speed > self.robot.v_pref + SPEED_TOLERANCE {
            return Err(Error::IllegalAction {
                speed,
                v_pref: self.robot.v_pref,
            });
        }
        let dt = self.time_step;
        let human_velocities = self.human_velocities();

        let robot_before = self.robot.position;
        let humans_before: Vec<Vec2> = self.humans.iter().map(|h| h.position).collect();

        self.robot.velocity = action;
        self.robot.position += action * dt;
        for (h, v) in self.humans.iter_mut().zip(human_velocities) {
            h.velocity = v;
            h.position += v * dt;
        }
        self.steps += 1;

        let robot_after = self.robot.position;
        let r = self.robot.radius;
        let mut min_separation = f64::INFINITY;
        for (h, before) in self.humans.iter().zip(&humans_before) {
            let d = closest_approach(robot_before, robot_after, *before, h.position) - r - h.radius;
            min_separation = min_separation.min(d);
        }
        for o in &self.obstacles {
            let d = closest_approach(robot_before, robot_after, o.core.position, o.core.position) - r - o.core.radius;
            min_separation = min_separation.min(d);
        }

        Ok(StepEvent {
            outcome: self.classify(min_separation),
            min_separation,
        })
    }

    fn classify(&self, min_separation: f64) -> Outcome {
        if min_separation < 0.0 {
            Outcome::Collision
        } else if self.goal_distance() < self.robot.radius {
            Outcome::ReachedGoal
        } else if self.time() >= self.config.time_limit - 1e-9 {
            Outcome::Timeout
        } else {
            Outcome::Running
        }
    }

    /// Applies a global rotation about the origin followed by a translation to
    /// every position, goal and velocity.
    pub fn transformed(&self, rotation: f64, translation: Vec2) -> World {
        let tf_body = |b: &AgentBody| AgentBody {
            position: b.position.rotate(rotation) + translation,
            goal: b.goal.rotate(rotation) + translation,
            velocity: b.velocity.rotate(rotation),
            ..*b
        };
        let mut out = self.clone();
        out.robot = tf_body(&self.robot);
        out.humans = self.humans.iter().map(tf_body).collect();
        out.obstacles = self
            .obstacles
            .iter()
            .map(|o| SquareObstacle {
                center: o.center.rotate(rotation) + translation,
                side: o.side,
                core: tf_body(&o.core),
            })
            .collect();
        // Rotated squares are no longer axis-aligned; rebuild them as rotated polygons.
        out.line_obstacles = out
            .obstacles
            .iter()
            .flat_map(|o| {
                let h = o.side / 2.0;
                let corners: Vec<Vec2> = [(-h, -h), (h, -h), (h, h), (-h, h)]
                    .iter()
                    .map(|&(x, y)| o.center + Vec2::new(x, y).rotate(rotation))
                    .collect();
                LineObstacle::polygon(&corners)
            })
            .collect();
        out
    }
}

pub(crate) fn robot_body(config: &ScenarioConfig) -> AgentBody {
    AgentBody {
        id: 0,
        kind: AgentKind::Robot,
        position: config.robot_start,
        velocity: Vec2::ZERO,
        radius: config.robot_radius,
        goal: config.robot_goal,
        v_pref: config.robot_v_pref,
        heading_theta: 0.0,
    }
}
