//! Optimal Reciprocal Collision Avoidance.
//!
//! Each agent turns every neighbour into a half-plane of admissible
//! velocities (taking half of the avoidance effort) and every nearby obstacle
//! edge into a half-plane it must respect alone. The new velocity is the
//! admissible velocity closest to the preferred one; if no velocity satisfies
//! every half-plane, the agent minimises the worst violation of the agent
//! constraints while obstacle constraints stay hard.

mod linear_program;
mod obstacle;

use serde::{Deserialize, Serialize};

pub use linear_program::{linear_program2, linear_program3, Line};
pub use obstacle::LineObstacle;

use crate::error::{Error, Result};
use crate::vec2::Vec2;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrcaAgentView {
    pub position: Vec2,
    pub velocity: Vec2,
    pub radius: f64,
    pub preferred_velocity: Vec2,
    pub max_speed: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OrcaConfig {
    pub time_horizon_agents: f64,
    pub time_horizon_obstacles: f64,
    pub neighbor_distance: f64,
    pub time_step: f64,
    /// Added to every agent radius when building constraints, so that agents
    /// keep a small gap instead of touching.
    pub safety_margin: f64,
}

impl Default for OrcaConfig {
    fn default() -> Self {
        Self {
            time_horizon_agents: 5.0,
            time_horizon_obstacles: 5.0,
            neighbor_distance: 10.0,
            time_step: 0.25,
            safety_margin: 0.1,
        }
    }
}

impl OrcaConfig {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            self.time_horizon_agents,
            self.time_horizon_obstacles,
            self.neighbor_distance,
            self.time_step,
        ];
        if fields.iter().all(|v| v.is_finite() && *v > 0.0) && self.safety_margin >= 0.0 {
            Ok(())
        } else {
            Err(Error::Config(format!("ORCA parameters must be positive: {self:?}")))
        }
    }
}

/// Half-plane induced on `agent` by `other`, with the agent taking
/// `responsibility` of the required velocity change.
fn agent_line(agent: &OrcaAgentView, other: &OrcaAgentView, config: &OrcaConfig, responsibility: f64) -> Line {
    let inv_horizon = 1.0 / config.time_horizon_agents;
    let rel_pos = other.position - agent.position;
    let rel_vel = agent.velocity - other.velocity;
    let dist_sq = rel_pos.length_squared();
    let combined_radius = agent.radius + other.radius;
    let combined_radius_sq = combined_radius * combined_radius;

    let (direction, u) = if dist_sq > combined_radius_sq {
        // Vector from the cut-off circle centre to the relative velocity.
        let w = rel_vel - rel_pos * inv_horizon;
        let w_len_sq = w.length_squared();
        let dot1 = w.dot(rel_pos);
        if dot1 < 0.0 && dot1 * dot1 > combined_radius_sq * w_len_sq {
            // Closest boundary point lies on the cut-off circle.
            let w_len = w_len_sq.sqrt();
            let unit_w = w / w_len;
            (
                Vec2::new(unit_w.y, -unit_w.x),
                unit_w * (combined_radius * inv_horizon - w_len),
            )
        } else {
            // Closest boundary point lies on one of the cone legs.
            let leg = (dist_sq - combined_radius_sq).sqrt();
            let direction = if rel_pos.det(w) > 0.0 {
                Vec2::new(
                    rel_pos.x * leg - rel_pos.y * combined_radius,
                    rel_pos.x * combined_radius + rel_pos.y * leg,
                ) / dist_sq
            } else {
                -Vec2::new(
                    rel_pos.x * leg + rel_pos.y * combined_radius,
                    -rel_pos.x * combined_radius + rel_pos.y * leg,
                ) / dist_sq
            };
            let u = direction * rel_vel.dot(direction) - rel_vel;
            (direction, u)
        }
    } else {
        // Already overlapping: resolve within one time step.
        let inv_step = 1.0 / config.time_step;
        let w = rel_vel - rel_pos * inv_step;
        let w_len = w.length();
        let unit_w = if w_len > 0.0 { w / w_len } else { overlap_direction(rel_pos) };
        (
            Vec2::new(unit_w.y, -unit_w.x),
            unit_w * (combined_radius * inv_step - w_len),
        )
    };

    Line {
        point: agent.velocity + u * responsibility,
        direction,
    }
}

/// Push-apart direction for the degenerate case of coincident relative state.
fn overlap_direction(rel_pos: Vec2) -> Vec2 {
    let away = (-rel_pos).normalize_or_zero();
    if away == Vec2::ZERO {
        Vec2::new(-1.0, 0.0)
    } else {
        away
    }
}

/// ORCA velocity for `agent`, treating every neighbour as an equally
/// responsible ORCA agent.
pub fn orca_velocity(
    agent: &OrcaAgentView,
    neighbors: &[OrcaAgentView],
    obstacles: &[LineObstacle],
    config: &OrcaConfig,
) -> Vec2 {
    let mut lines = Vec::new();

    // Obstacle edges facing the agent, nearest first.
    let range = config.time_horizon_obstacles * agent.max_speed + agent.radius;
    let range_sq = range * range;
    let mut nearby: Vec<(f64, &LineObstacle)> = obstacles
        .iter()
        .filter(|e| e.left_of(agent.position) < 0.0)
        .map(|e| (e.distance_squared_to(agent.position), e))
        .filter(|(d, _)| *d < range_sq)
        .collect();
    nearby.sort_by(|a, b| a.0.total_cmp(&b.0));
    for (_, edge) in nearby {
        obstacle::push_obstacle_line(
            &mut lines,
            edge,
            agent.position,
            agent.velocity,
            agent.radius,
            config.time_horizon_obstacles,
        );
    }
    let num_obstacle_lines = lines.len();

    let range_sq = config.neighbor_distance * config.neighbor_distance;
    let mut close: Vec<(f64, &OrcaAgentView)> = neighbors
        .iter()
        .map(|n| ((n.position - agent.position).length_squared(), n))
        .filter(|(d, _)| *d < range_sq)
        .collect();
    close.sort_by(|a, b| a.0.total_cmp(&b.0));
    lines.extend(close.into_iter().map(|(_, n)| agent_line(agent, n, config, 0.5)));

    let (mut velocity, fail) = linear_program2(&lines, agent.max_speed, agent.preferred_velocity, false);
    if fail < lines.len() {
        velocity = linear_program3(&lines, num_obstacle_lines, fail, agent.max_speed, velocity);
    }
    velocity.clamp_length(agent.max_speed)
}

/// New velocities for every agent, computed from the same snapshot.
pub fn step_all_orca(agents: &[OrcaAgentView], obstacles: &[LineObstacle], config: &OrcaConfig) -> Vec<Vec2> {
    let mut others = Vec::with_capacity(agents.len().saturating_sub(1));
    (0..agents.len())
        .map(|i| {
            others.clear();
            others.extend(
                agents
                    .iter()
                    .enumerate()
                    .filter(|(j, _)| *j != i)
                    .map(|(_, a)| *a),
            );
            orca_velocity(&agents[i], &others, obstacles, config)
        })
        .collect()
}
