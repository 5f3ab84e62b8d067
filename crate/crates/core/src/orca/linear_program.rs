//! Incremental 2D linear programs over half-planes bounded by a speed disc,
//! and the 3D fallback that minimises the largest constraint violation.

use crate::vec2::Vec2;

const PARALLEL_EPSILON: f64 = 1e-9;

/// Boundary of the half-plane of admissible velocities. Admissible velocities
/// lie to the left of `direction` (or on the line) when walking from `point`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Line {
    pub point: Vec2,
    pub direction: Vec2,
}

impl Line {
    /// Signed violation; positive means `v` lies on the forbidden side.
    pub fn violation(&self, v: Vec2) -> f64 {
        self.direction.det(self.point - v)
    }
}

/// Optimises along `lines[line_no]` subject to the earlier lines and the disc.
fn linear_program1(
    lines: &[Line],
    line_no: usize,
    radius: f64,
    opt_velocity: Vec2,
    direction_opt: bool,
) -> Option<Vec2> {
    let line = lines[line_no];
    let dot = line.point.dot(line.direction);
    let discriminant = dot * dot + radius * radius - line.point.length_squared();
    if discriminant < 0.0 {
        // The line misses the disc entirely.
        return None;
    }
    let sqrt_disc = discriminant.sqrt();
    let mut t_left = -dot - sqrt_disc;
    let mut t_right = -dot + sqrt_disc;

    for other in &lines[..line_no] {
        let denominator = line.direction.det(other.direction);
        let numerator = other.direction.det(line.point - other.point);
        if denominator.abs() <= PARALLEL_EPSILON {
            if numerator < 0.0 {
                return None;
            }
            continue;
        }
        let t = numerator / denominator;
        if denominator >= 0.0 {
            t_right = t_right.min(t);
        } else {
            t_left = t_left.max(t);
        }
        if t_left > t_right {
            return None;
        }
    }

    let t = if direction_opt {
        if opt_velocity.dot(line.direction) > 0.0 {
            t_right
        } else {
            t_left
        }
    } else {
        line.direction
            .dot(opt_velocity - line.point)
            .clamp(t_left, t_right)
    };
    Some(line.point + line.direction * t)
}

/// Returns the optimum and the index of the first line that made the program
/// infeasible (`lines.len()` on success). On failure the optimum is the best
/// point found before that line.
pub fn linear_program2(lines: &[Line], radius: f64, opt_velocity: Vec2, direction_opt: bool) -> (Vec2, usize) {
    let mut result = if direction_opt {
        opt_velocity * radius
    } else if opt_velocity.length_squared() > radius * radius {
        opt_velocity.normalize_or_zero() * radius
    } else {
        opt_velocity
    };

    for i in 0..lines.len() {
        if lines[i].violation(result) > 0.0 {
            match linear_program1(lines, i, radius, opt_velocity, direction_opt) {
                Some(v) => result = v,
                None => return (result, i),
            }
        }
    }
    (result, lines.len())
}

/// Fallback when the 2D program is infeasible: keeps the first
/// `num_obstacle_lines` hard and minimises the maximum violation of the rest.
pub fn linear_program3(
    lines: &[Line],
    num_obstacle_lines: usize,
    begin_line: usize,
    radius: f64,
    mut result: Vec2,
) -> Vec2 {
    let mut distance = 0.0;
    for i in begin_line..lines.len() {
        if lines[i].violation(result) <= distance {
            continue;
        }
        let mut projected: Vec<Line> = lines[..num_obstacle_lines].to_vec();
        for j in num_obstacle_lines..i {
            let determinant = lines[i].direction.det(lines[j].direction);
            let point = if determinant.abs() <= PARALLEL_EPSILON {
                if lines[i].direction.dot(lines[j].direction) > 0.0 {
                    // Same direction: line j adds nothing.
                    continue;
                }
                (lines[i].point + lines[j].point) * 0.5
            } else {
                lines[i].point
                    + lines[i].direction
                        * (lines[j].direction.det(lines[i].point - lines[j].point) / determinant)
            };
            let direction = (lines[j].direction - lines[i].direction).normalize_or_zero();
            projected.push(Line { point, direction });
        }
        let previous = result;
        let (candidate, fail) = linear_program2(&projected, radius, lines[i].direction.perp(), true);
        // Only floating-point trouble makes this fail; keep the last good point.
        result = if fail < projected.len() { previous } else { candidate };
        distance = lines[i].violation(result);
    }
    result
}
