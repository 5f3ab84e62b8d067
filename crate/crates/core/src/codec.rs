//! Robot-centred joint states.
//!
//! Everything is expressed in a frame centred on the robot whose x axis points
//! at the goal, which makes the encoding invariant to global rotations and
//! translations of the scene. The force-augmented variant appends the
//! repulsive force of each entity on the robot and their resultant.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sfm::{repulsive_force, SfmParams};
use crate::vec2::Vec2;
use crate::world::World;

pub const SELF_WIDTH_PLAIN: usize = 6;
pub const SELF_WIDTH_FORCES: usize = 8;
pub const ENTITY_WIDTH_PLAIN: usize = 7;
pub const ENTITY_WIDTH_FORCES: usize = 9;

/// Distance of the placeholder entity used when the scene is empty.
pub const NULL_ENTITY_DISTANCE: f64 = 100.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StateEncoding {
    Plain,
    ForceAugmented,
}

impl StateEncoding {
    pub fn force_augmented(self) -> bool {
        self == StateEncoding::ForceAugmented
    }

    pub fn self_width(self) -> usize {
        match self {
            StateEncoding::Plain => SELF_WIDTH_PLAIN,
            StateEncoding::ForceAugmented => SELF_WIDTH_FORCES,
        }
    }

    pub fn row_width(self) -> usize {
        match self {
            StateEncoding::Plain => SELF_WIDTH_PLAIN + ENTITY_WIDTH_PLAIN,
            StateEncoding::ForceAugmented => SELF_WIDTH_FORCES + ENTITY_WIDTH_FORCES,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RobotSelfState {
    pub d_g: f64,
    pub v_pref: f64,
    pub theta: f64,
    pub r: f64,
    pub v: Vec2,
    pub force: Option<Vec2>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EntityObservable {
    pub p: Vec2,
    pub v: Vec2,
    pub r_i: f64,
    pub d_i: f64,
    pub r_sum: f64,
    pub force: Option<Vec2>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct JointState {
    pub self_state: RobotSelfState,
    /// Humans, then obstacle cores, each in id order.
    pub entities: Vec<EntityObservable>,
    pub force_augmented: bool,
}

/// Row-major `rows x width` matrix: one row per entity, each row holding the
/// robot state followed by that entity's state.
#[derive(Debug, Clone, PartialEq)]
pub struct StateMatrix {
    pub rows: usize,
    pub width: usize,
    pub data: Vec<f64>,
}

impl StateMatrix {
    pub fn new(rows: usize, width: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || data.len() != rows * width {
            return Err(Error::ShapeMismatch(format!(
                "{} values cannot form a {rows}x{width} state",
                data.len()
            )));
        }
        Ok(Self { rows, width, data })
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.width..(i + 1) * self.width]
    }
}

/// Rotation into the goal-aligned frame: `x` along `axis`, `y` to its left.
#[derive(Clone, Copy)]
struct Frame {
    axis: Vec2,
}

impl Frame {
    fn apply(self, v: Vec2) -> Vec2 {
        Vec2::new(self.axis.dot(v), self.axis.det(v))
    }
}

pub fn encode(world: &World, force_augmented: bool, sfm: &SfmParams) -> JointState {
    let robot = &world.robot;
    let to_goal = robot.goal - robot.position;
    let d_g = to_goal.length();
    let axis = if d_g > 0.0 { to_goal / d_g } else { Vec2::new(1.0, 0.0) };
    let frame = Frame { axis };

    let mut resultant = Vec2::ZERO;
    let entities = world
        .entities()
        .map(|e| {
            let offset = e.position - robot.position;
            let force = force_augmented.then(|| {
                // Coincident centres only happen deep inside a collision; no direction exists.
                let f = repulsive_force(robot.position, e.position, sfm).unwrap_or(Vec2::ZERO);
                resultant += f;
                frame.apply(f)
            });
            EntityObservable {
                p: frame.apply(offset),
                v: frame.apply(e.velocity),
                r_i: e.radius,
                d_i: offset.length(),
                r_sum: robot.radius + e.radius,
                force,
            }
        })
        .collect();

    JointState {
        self_state: RobotSelfState {
            d_g,
            v_pref: robot.v_pref,
            theta: robot.heading_theta,
            r: robot.radius,
            v: frame.apply(robot.velocity),
            force: force_augmented.then(|| frame.apply(resultant)),
        },
        entities,
        force_augmented,
    }
}

impl JointState {
    pub fn encoding(&self) -> StateEncoding {
        if self.force_augmented {
            StateEncoding::ForceAugmented
        } else {
            StateEncoding::Plain
        }
    }

    fn null_entity(&self) -> EntityObservable {
        EntityObservable {
            p: Vec2::new(NULL_ENTITY_DISTANCE, 0.0),
            v: Vec2::ZERO,
            r_i: 0.0,
            d_i: NULL_ENTITY_DISTANCE,
            r_sum: self.self_state.r,
            force: self.force_augmented.then_some(Vec2::ZERO),
        }
    }

    /// Network input; an empty scene yields one placeholder row.
    pub fn flatten(&self) -> StateMatrix {
        let width = self.encoding().row_width();
        let null;
        let entities: &[EntityObservable] = if self.entities.is_empty() {
            null = [self.null_entity()];
            &null
        } else {
            &self.entities
        };
        let s = &self.self_state;
        let mut data = Vec::with_capacity(entities.len() * width);
        for e in entities {
            data.extend_from_slice(&[s.d_g, s.v_pref, s.theta, s.r, s.v.x, s.v.y]);
            if let Some(f) = s.force {
                data.extend_from_slice(&[f.x, f.y]);
            }
            data.extend_from_slice(&[e.p.x, e.p.y, e.v.x, e.v.y, e.r_i, e.d_i, e.r_sum]);
            if let Some(f) = e.force {
                data.extend_from_slice(&[f.x, f.y]);
            }
        }
        StateMatrix {
            rows: entities.len(),
            width,
            data,
        }
    }
}
