//! Static line obstacles and their velocity constraints.
//!
//! Polygons are stored as counter-clockwise chains of edges. Each edge keeps
//! the direction of its neighbouring edges and the convexity of its endpoints,
//! which is what the constraint construction needs from the chain.

use serde::{Deserialize, Serialize};

use super::linear_program::Line;
use crate::vec2::Vec2;

const COVER_EPSILON: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LineObstacle {
    pub endpoint_a: Vec2,
    pub endpoint_b: Vec2,
    /// Unit direction of the edge that ends at `endpoint_a`.
    pub prev_direction: Vec2,
    /// Unit direction of the edge that starts at `endpoint_b`.
    pub next_direction: Vec2,
    pub a_convex: bool,
    pub b_convex: bool,
}

impl LineObstacle {
    /// A free-standing segment. It blocks agents on its right-hand side
    /// (walking from `a` to `b`); its endpoints are convex.
    pub fn segment(a: Vec2, b: Vec2) -> Self {
        let back = (a - b).normalize_or_zero();
        Self {
            endpoint_a: a,
            endpoint_b: b,
            prev_direction: back,
            next_direction: back,
            a_convex: true,
            b_convex: true,
        }
    }

    /// Edges of a simple polygon given in counter-clockwise order.
    pub fn polygon(vertices: &[Vec2]) -> Vec<LineObstacle> {
        let n = vertices.len();
        match n {
            0 | 1 => return Vec::new(),
            2 => {
                return vec![
                    Self::segment(vertices[0], vertices[1]),
                    Self::segment(vertices[1], vertices[0]),
                ]
            }
            _ => {}
        }
        let convex = |i: usize| {
            let prev = vertices[(i + n - 1) % n];
            let this = vertices[i];
            let next = vertices[(i + 1) % n];
            (prev - next).det(this - prev) >= 0.0
        };
        let dir = |i: usize| (vertices[(i + 1) % n] - vertices[i]).normalize_or_zero();
        (0..n)
            .map(|i| LineObstacle {
                endpoint_a: vertices[i],
                endpoint_b: vertices[(i + 1) % n],
                prev_direction: dir((i + n - 1) % n),
                next_direction: dir((i + 1) % n),
                a_convex: convex(i),
                b_convex: convex((i + 1) % n),
            })
            .collect()
    }

    /// The four edges of an axis-aligned square.
    pub fn square(center: Vec2, side: f64) -> Vec<LineObstacle> {
        let h = side / 2.0;
        Self::polygon(&[
            center + Vec2::new(-h, -h),
            center + Vec2::new(h, -h),
            center + Vec2::new(h, h),
            center + Vec2::new(-h, h),
        ])
    }

    pub fn direction(&self) -> Vec2 {
        (self.endpoint_b - self.endpoint_a).normalize_or_zero()
    }

    /// Squared distance from `p` to the segment.
    pub fn distance_squared_to(&self, p: Vec2) -> f64 {
        let ab = self.endpoint_b - self.endpoint_a;
        let len_sq = ab.length_squared();
        let t = if len_sq > 0.0 {
            ((p - self.endpoint_a).dot(ab) / len_sq).clamp(0.0, 1.0)
        } else {
            0.0
        };
        (p - (self.endpoint_a + ab * t)).length_squared()
    }

    /// Positive when `p` is left of the directed edge (the solid side).
    pub fn left_of(&self, p: Vec2) -> f64 {
        (self.endpoint_a - p).det(self.endpoint_b - self.endpoint_a)
    }
}

/// Endpoint of an edge as seen by the constraint construction.
#[derive(Clone, Copy)]
struct Vertex {
    point: Vec2,
    /// Direction of the edge leaving this vertex.
    unit_dir: Vec2,
    /// Direction of the edge arriving at this vertex.
    prev_unit_dir: Vec2,
    convex: bool,
}

fn leg_directions(rel: Vec2, dist_sq: f64, radius: f64) -> (Vec2, Vec2) {
    let leg = (dist_sq - radius * radius).max(0.0).sqrt();
    let left = Vec2::new(rel.x * leg - rel.y * radius, rel.x * radius + rel.y * leg) / dist_sq;
    let right = Vec2::new(rel.x * leg + rel.y * radius, -rel.x * radius + rel.y * leg) / dist_sq;
    (left, right)
}

/// Appends the constraint (if any) contributed by `edge` to `lines`.
///
/// `lines` must hold only obstacle constraints built so far; they are used to
/// skip edges whose velocity obstacle is already excluded.
pub(crate) fn push_obstacle_line(
    lines: &mut Vec<Line>,
    edge: &LineObstacle,
    position: Vec2,
    velocity: Vec2,
    radius: f64,
    time_horizon: f64,
) {
    let inv_horizon = 1.0 / time_horizon;
    let dir = edge.direction();
    let mut v1 = Vertex {
        point: edge.endpoint_a,
        unit_dir: dir,
        prev_unit_dir: edge.prev_direction,
        convex: edge.a_convex,
    };
    let mut v2 = Vertex {
        point: edge.endpoint_b,
        unit_dir: edge.next_direction,
        prev_unit_dir: dir,
        convex: edge.b_convex,
    };

    let rel1 = v1.point - position;
    let rel2 = v2.point - position;

    let covered = lines.iter().any(|l| {
        (rel1 * inv_horizon - l.point).det(l.direction) - inv_horizon * radius >= -COVER_EPSILON
            && (rel2 * inv_horizon - l.point).det(l.direction) - inv_horizon * radius >= -COVER_EPSILON
    });
    if covered {
        return;
    }

    let dist_sq1 = rel1.length_squared();
    let dist_sq2 = rel2.length_squared();
    let radius_sq = radius * radius;
    let edge_vec = v2.point - v1.point;
    let s = (-rel1).dot(edge_vec) / edge_vec.length_squared();
    let dist_sq_line = (-rel1 - edge_vec * s).length_squared();

    // Already touching the edge or one of its corners.
    if s < 0.0 && dist_sq1 <= radius_sq {
        if v1.convex {
            lines.push(Line {
                point: Vec2::ZERO,
                direction: rel1.perp().normalize_or_zero(),
            });
        }
        return;
    } else if s > 1.0 && dist_sq2 <= radius_sq {
        if v2.convex && rel2.det(v2.unit_dir) >= 0.0 {
            lines.push(Line {
                point: Vec2::ZERO,
                direction: rel2.perp().normalize_or_zero(),
            });
        }
        return;
    } else if (0.0..1.0).contains(&s) && dist_sq_line <= radius_sq {
        lines.push(Line {
            point: Vec2::ZERO,
            direction: -v1.unit_dir,
        });
        return;
    }

    let oblique_single_vertex;
    let (mut left_leg, mut right_leg);
    if s < 0.0 && dist_sq_line <= radius_sq {
        // Seen obliquely: the first vertex alone shapes the velocity obstacle.
        if !v1.convex {
            return;
        }
        v2 = v1;
        oblique_single_vertex = true;
        (left_leg, right_leg) = leg_directions(rel1, dist_sq1, radius);
    } else if s > 1.0 && dist_sq_line <= radius_sq {
        if !v2.convex {
            return;
        }
        v1 = v2;
        oblique_single_vertex = true;
        (left_leg, right_leg) = leg_directions(rel2, dist_sq2, radius);
    } else {
        oblique_single_vertex = false;
        left_leg = if v1.convex {
            leg_directions(rel1, dist_sq1, radius).0
        } else {
            // Non-convex vertex: the leg continues the cut-off line.
            -v1.unit_dir
        };
        right_leg = if v2.convex {
            leg_directions(rel2, dist_sq2, radius).1
        } else {
            v1.unit_dir
        };
    }

    // A leg pointing into the neighbouring edge is replaced by that edge; a
    // velocity projecting onto such a foreign leg is handled by the neighbour.
    let mut left_foreign = false;
    let mut right_foreign = false;
    if v1.convex && left_leg.det(-v1.prev_unit_dir) >= 0.0 {
        left_leg = -v1.prev_unit_dir;
        left_foreign = true;
    }
    if v2.convex && right_leg.det(v2.unit_dir) <= 0.0 {
        right_leg = v2.unit_dir;
        right_foreign = true;
    }

    let left_cutoff = (v1.point - position) * inv_horizon;
    let right_cutoff = (v2.point - position) * inv_horizon;
    let cutoff_vec = right_cutoff - left_cutoff;

    let t = if oblique_single_vertex {
        0.5
    } else {
        (velocity - left_cutoff).dot(cutoff_vec) / cutoff_vec.length_squared()
    };
    let t_left = (velocity - left_cutoff).dot(left_leg);
    let t_right = (velocity - right_cutoff).dot(right_leg);

    if (t < 0.0 && t_left < 0.0) || (oblique_single_vertex && t_left < 0.0 && t_right < 0.0) {
        let unit_w = (velocity - left_cutoff).normalize_or_zero();
        lines.push(Line {
            direction: Vec2::new(unit_w.y, -unit_w.x),
            point: left_cutoff + unit_w * (radius * inv_horizon),
        });
        return;
    } else if t > 1.0 && t_right < 0.0 {
        let unit_w = (velocity - right_cutoff).normalize_or_zero();
        lines.push(Line {
            direction: Vec2::new(unit_w.y, -unit_w.x),
            point: right_cutoff + unit_w * (radius * inv_horizon),
        });
        return;
    }

    let dist_sq_cutoff = if !(0.0..=1.0).contains(&t) || oblique_single_vertex {
        f64::INFINITY
    } else {
        (velocity - (left_cutoff + cutoff_vec * t)).length_squared()
    };
    let dist_sq_left = if t_left < 0.0 {
        f64::INFINITY
    } else {
        (velocity - (left_cutoff + left_leg * t_left)).length_squared()
    };
    let dist_sq_right = if t_right < 0.0 {
        f64::INFINITY
    } else {
        (velocity - (right_cutoff + right_leg * t_right)).length_squared()
    };

    if dist_sq_cutoff <= dist_sq_left && dist_sq_cutoff <= dist_sq_right {
        let direction = -v1.unit_dir;
        lines.push(Line {
            direction,
            point: left_cutoff + direction.perp() * (radius * inv_horizon),
        });
    } else if dist_sq_left <= dist_sq_right {
        if !left_foreign {
            lines.push(Line {
                direction: left_leg,
                point: left_cutoff + left_leg.perp() * (radius * inv_horizon),
            });
        }
    } else if !right_foreign {
        let direction = -right_leg;
        lines.push(Line {
            direction,
            point: right_cutoff + direction.perp() * (radius * inv_horizon),
        });
    }
}
