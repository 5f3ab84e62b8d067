//! Randomised scene generation for the five environments.
//!
//! 1. `element_count` elements, each a circle-crossing human with probability
//!    `human_probability`, otherwise a free-standing square obstacle.
//! 2. Circle-crossing humans plus the concave barrier at its fixed position.
//! 3. Circle-crossing humans plus the concave barrier at a sampled position.
//! 4. The fixed concave barrier plus straight barriers of 2 and 3 squares.
//! 5. Circle-crossing humans plus straight barriers of 2 and 3 squares.

use std::f64::consts::TAU;
use std::sync::Arc;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{robot_body, AgentBody, AgentKind, Region, ScenarioConfig, SquareObstacle, World};
use crate::error::{Error, Result};
use crate::vec2::Vec2;

/// A disc that later placements must keep clear of.
#[derive(Clone, Copy)]
struct Footprint {
    center: Vec2,
    radius: f64,
}

struct Builder<'a> {
    cfg: &'a ScenarioConfig,
    rng: ChaCha8Rng,
    env_id: u8,
    seed: u64,
    occupied: Vec<Footprint>,
    humans: Vec<AgentBody>,
    obstacles: Vec<SquareObstacle>,
    next_id: u32,
}

impl<'a> Builder<'a> {
    fn new(cfg: &'a ScenarioConfig, env_id: u8, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(env_id as u64);
        let occupied = vec![
            Footprint {
                center: cfg.robot_start,
                radius: cfg.robot_radius,
            },
            Footprint {
                center: cfg.robot_goal,
                radius: cfg.robot_radius,
            },
        ];
        Self {
            cfg,
            rng,
            env_id,
            seed,
            occupied,
            humans: Vec::new(),
            obstacles: Vec::new(),
            next_id: 1,
        }
    }

    fn infeasible(&self, what: &str) -> Error {
        Error::ScenarioInfeasible {
            env_id: self.env_id,
            seed: self.seed,
            reason: format!("could not place {what} after {} attempts", self.cfg.max_placement_attempts),
        }
    }

    fn is_clear(&self, f: Footprint) -> bool {
        let margin = self.cfg.placement_margin;
        self.occupied
            .iter()
            .all(|o| o.center.distance(f.center) >= o.radius + f.radius + margin)
    }

    fn square_footprint(&self, center: Vec2) -> Footprint {
        Footprint {
            center,
            radius: self.cfg.obstacle_side() / std::f64::consts::SQRT_2,
        }
    }

    /// Square obstacles must also stay away from the robot's start and goal.
    fn clear_of_endpoints(&self, center: Vec2) -> bool {
        let reach = self.cfg.endpoint_clearance + self.cfg.obstacle_side() / std::f64::consts::SQRT_2;
        center.distance(self.cfg.robot_start) >= reach && center.distance(self.cfg.robot_goal) >= reach
    }

    fn sample_in(&mut self, region: Region) -> Vec2 {
        Vec2::new(
            self.rng.gen_range(region.min.x..=region.max.x),
            self.rng.gen_range(region.min.y..=region.max.y),
        )
    }

    fn take_id(&mut self) -> u32 {
        let id = self.next_id;
        self.next_id += 1;
        id
    }

    fn push_square(&mut self, center: Vec2) {
        let id = self.take_id();
        let side = self.cfg.obstacle_side();
        let core = AgentBody {
            id,
            kind: AgentKind::ObstacleCore,
            position: center,
            velocity: Vec2::ZERO,
            radius: side / 2.0,
            goal: center,
            v_pref: 0.0,
            heading_theta: 0.0,
        };
        self.occupied.push(self.square_footprint(center));
        self.obstacles.push(SquareObstacle { center, side, core });
    }

    /// Places a group of squares at `centers` if all are clear.
    fn try_squares(&mut self, centers: &[Vec2]) -> bool {
        let ok = centers.iter().all(|&c| {
            self.clear_of_endpoints(c) && self.is_clear(self.square_footprint(c))
        });
        if ok {
            for &c in centers {
                self.push_square(c);
            }
        }
        ok
    }

    fn place_circle_human(&mut self) -> Result<()> {
        let cfg = self.cfg;
        let r = cfg.human_radius;
        for _ in 0..cfg.max_placement_attempts {
            let angle = self.rng.gen_range(0.0..TAU);
            let start = Vec2::from_angle(angle) * cfg.circle_radius;
            let goal_angle = angle + std::f64::consts::PI + self.rng.gen_range(-cfg.goal_angle_noise..=cfg.goal_angle_noise);
            let goal_radius = cfg.circle_radius + self.rng.gen_range(-cfg.goal_radial_noise..=cfg.goal_radial_noise);
            let goal = Vec2::from_angle(goal_angle) * goal_radius;
            let start_fp = Footprint { center: start, radius: r };
            let goal_fp = Footprint { center: goal, radius: r };
            if !self.is_clear(start_fp) || !self.is_clear(goal_fp) {
                continue;
            }
            if start_fp.center.distance(goal_fp.center) < 2.0 * r + cfg.placement_margin {
                continue;
            }
            let id = self.take_id();
            self.humans.push(AgentBody {
                id,
                kind: AgentKind::Human,
                position: start,
                velocity: Vec2::ZERO,
                radius: r,
                goal,
                v_pref: cfg.human_v_pref,
                heading_theta: 0.0,
            });
            self.occupied.push(start_fp);
            self.occupied.push(goal_fp);
            return Ok(());
        }
        Err(self.infeasible("a human"))
    }

    fn place_free_square(&mut self) -> Result<()> {
        for _ in 0..self.cfg.max_placement_attempts {
            let c = self.sample_in(self.cfg.obstacle_region);
            if self.try_squares(&[c]) {
                return Ok(());
            }
        }
        Err(self.infeasible("an obstacle"))
    }

    fn concave_barrier_at(&self, reference: Vec2) -> Vec<Vec2> {
        self.cfg.concave_barrier.iter().map(|&o| reference + o).collect()
    }

    fn place_concave_barrier(&mut self, reference: Vec2) -> Result<()> {
        let centers = self.concave_barrier_at(reference);
        if self.try_squares(&centers) {
            Ok(())
        } else {
            Err(self.infeasible("the concave barrier"))
        }
    }

    fn place_random_concave_barrier(&mut self) -> Result<()> {
        for _ in 0..self.cfg.max_placement_attempts {
            let reference = self.sample_in(self.cfg.concave_barrier_region);
            let centers = self.concave_barrier_at(reference);
            if self.try_squares(&centers) {
                return Ok(());
            }
        }
        Err(self.infeasible("the concave barrier"))
    }

    /// A horizontal row of `len` touching squares.
    fn place_straight_barrier(&mut self, len: usize) -> Result<()> {
        let side = self.cfg.obstacle_side();
        for _ in 0..self.cfg.max_placement_attempts {
            let mid = self.sample_in(self.cfg.straight_barrier_region);
            let first = mid.x - side * (len as f64 - 1.0) / 2.0;
            let centers: Vec<Vec2> = (0..len)
                .map(|k| Vec2::new(first + side * k as f64, mid.y))
                .collect();
            if self.try_squares(&centers) {
                return Ok(());
            }
        }
        Err(self.infeasible("a straight barrier"))
    }

    fn finish(self, config: Arc<ScenarioConfig>) -> World {
        let robot = robot_body(&config);
        World::new(robot, self.humans, self.obstacles, self.env_id, self.seed, config)
    }
}

/// Builds the scene for `env_id` (1..=5). The same `(env_id, rng_seed, config)`
/// always yields the same world.
pub fn generate_scenario(env_id: u8, rng_seed: u64, config: &Arc<ScenarioConfig>) -> Result<World> {
    if !(1..=5).contains(&env_id) {
        return Err(Error::UnknownEnvironment(env_id));
    }
    let cfg = config.as_ref();
    let mut b = Builder::new(cfg, env_id, rng_seed);
    match env_id {
        1 => {
            // Decide the kinds first so the element mix does not depend on placement retries.
            let kinds: Vec<bool> = (0..cfg.element_count)
                .map(|_| b.rng.gen_bool(cfg.human_probability))
                .collect();
            for is_human in kinds {
                if is_human {
                    b.place_circle_human()?;
                } else {
                    b.place_free_square()?;
                }
            }
        }
        2 => {
            b.place_concave_barrier(cfg.concave_barrier_center)?;
            for _ in 0..cfg.barrier_env_humans {
                b.place_circle_human()?;
            }
        }
        3 => {
            b.place_random_concave_barrier()?;
            for _ in 0..cfg.barrier_env_humans {
                b.place_circle_human()?;
            }
        }
        4 => {
            b.place_concave_barrier(cfg.concave_barrier_center)?;
            b.place_straight_barrier(2)?;
            b.place_straight_barrier(3)?;
        }
        5 => {
            b.place_straight_barrier(2)?;
            b.place_straight_barrier(3)?;
            for _ in 0..cfg.barrier_env_humans {
                b.place_circle_human()?;
            }
        }
        _ => unreachable!(),
    }
    Ok(b.finish(Arc::clone(config)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> Arc<ScenarioConfig> {
        Arc::new(ScenarioConfig::default())
    }

    fn no_initial_overlap(w: &World) {
        let bodies: Vec<&AgentBody> = std::iter::once(&w.robot).chain(w.entities()).collect();
        for i in 0..bodies.len() {
            for j in i + 1..bodies.len() {
                let gap = bodies[i].position.distance(bodies[j].position) - bodies[i].radius - bodies[j].radius;
                assert!(gap >= -1e-9, "overlap between {:?} and {:?}", bodies[i].id, bodies[j].id);
            }
        }
    }

    #[test]
    fn env1_has_ten_elements_and_fixed_endpoints() {
        for seed in 0..50 {
            let w = generate_scenario(1, seed, &cfg()).unwrap();
            assert_eq!(w.entity_count(), 10);
            assert_eq!(w.robot.position, Vec2::new(0.0, -4.0));
            assert_eq!(w.robot.goal, Vec2::new(0.0, 4.0));
            no_initial_overlap(&w);
        }
    }

    #[test]
    fn env1_human_share_is_near_sixty_percent() {
        let total: usize = (0..300)
            .map(|s| generate_scenario(1, s, &cfg()).unwrap().humans.len())
            .sum();
        let share = total as f64 / 3000.0;
        assert!((share - 0.6).abs() < 0.03, "share {share}");
    }

    #[test]
    fn env2_concave_barrier() {
        for seed in 0..20 {
            let w = generate_scenario(2, seed, &cfg()).unwrap();
            assert_eq!(w.humans.len(), 5);
            assert_eq!(w.obstacles.len(), 5);
            no_initial_overlap(&w);
            // Every core touches at least one other core.
            for (i, a) in w.obstacles.iter().enumerate() {
                let touching = w.obstacles.iter().enumerate().any(|(j, b)| {
                    i != j && (a.core.position.distance(b.core.position) - a.core.radius - b.core.radius).abs() < 1e-6
                });
                assert!(touching);
            }
            // The returns sit below the wall, i.e. the cavity opens toward the robot.
            let wall_y = w.obstacles.iter().map(|o| o.center.y).fold(f64::MIN, f64::max);
            let lower: Vec<_> = w.obstacles.iter().filter(|o| o.center.y < wall_y).collect();
            assert_eq!(lower.len(), 2);
            assert!(lower.iter().all(|o| o.center.x.abs() > 0.5));
        }
    }

    #[test]
    fn all_envs_have_ten_elements() {
        for env in 1..=5 {
            for seed in 0..20 {
                let w = generate_scenario(env, seed, &cfg()).unwrap();
                assert_eq!(w.entity_count(), 10, "env {env} seed {seed}");
                no_initial_overlap(&w);
                for o in &w.obstacles {
                    assert_eq!(o.side, 2.0 * o.core.radius);
                    assert_eq!(o.core.position, o.center);
                }
            }
        }
    }

    #[test]
    fn deterministic() {
        for env in 1..=5 {
            let a = generate_scenario(env, 42, &cfg()).unwrap();
            let b = generate_scenario(env, 42, &cfg()).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn env3_barrier_moves_with_seed() {
        let centers: Vec<Vec2> = (0..5)
            .map(|s| generate_scenario(3, s, &cfg()).unwrap().obstacles[1].center)
            .collect();
        assert!(centers.windows(2).any(|w| w[0] != w[1]));
    }

    #[test]
    fn unknown_env_rejected() {
        assert!(matches!(generate_scenario(6, 0, &cfg()), Err(Error::UnknownEnvironment(6))));
        assert!(matches!(generate_scenario(0, 0, &cfg()), Err(Error::UnknownEnvironment(0))));
    }

    #[test]
    fn impossible_layout_reports_infeasible() {
        let crowded = Arc::new(ScenarioConfig {
            element_count: 200,
            human_probability: 0.0,
            max_placement_attempts: 50,
            ..ScenarioConfig::default()
        });
        assert!(matches!(
            generate_scenario(1, 0, &crowded),
            Err(Error::ScenarioInfeasible { .. })
        ));
    }
}
