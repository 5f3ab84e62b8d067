//! Robot policies: the discrete action space, the ORCA expert, simple
//! baselines, and the value-guided greedy policy with optional ε-exploration.

use std::f64::consts::TAU;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::codec::{encode, StateEncoding};
use crate::error::{Error, Result};
use crate::orca::{orca_velocity, OrcaAgentView};
use crate::reward::{RewardInput, RewardSpec};
use crate::sfm::SfmParams;
use crate::value_net::NetworkParams;
use crate::vec2::{closest_approach, Vec2};
use crate::world::World;

/// Speeds are fractions of the robot's `v_pref`; headings are measured from
/// the current goal direction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ActionSpace {
    pub speeds: Vec<f64>,
    pub headings: Vec<f64>,
    pub includes_stop: bool,
}

impl Default for ActionSpace {
    fn default() -> Self {
        Self::exponential(5, 16)
    }
}

impl ActionSpace {
    /// `n_speeds` exponentially spaced speeds in `(0, 1]` and `n_headings`
    /// evenly spaced headings in `[0, 2π)`, plus the stop action.
    pub fn exponential(n_speeds: usize, n_headings: usize) -> Self {
        let e = std::f64::consts::E;
        let speeds = (1..=n_speeds)
            .map(|i| ((i as f64 / n_speeds as f64).exp() - 1.0) / (e - 1.0))
            .collect();
        let headings = (0..n_headings).map(|i| i as f64 * TAU / n_headings as f64).collect();
        Self {
            speeds,
            headings,
            includes_stop: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.speeds.iter().any(|s| !(*s > 0.0 && *s <= 1.0)) {
            return Err(Error::Config("action speeds must lie in (0, 1] of v_pref".into()));
        }
        if self.is_empty() {
            return Err(Error::Config("action space is empty".into()));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.speeds.len() * self.headings.len() + usize::from(self.includes_stop)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Action `index` as a world-frame velocity for the robot of `world`.
    /// Index 0 is the stop action when present; the rest are heading-major.
    pub fn velocity(&self, index: usize, world: &World) -> Vec2 {
        let robot = &world.robot;
        let mut i = index;
        if self.includes_stop {
            if i == 0 {
                return Vec2::ZERO;
            }
            i -= 1;
        }
        let n_speeds = self.speeds.len();
        let heading = self.headings[i / n_speeds];
        let speed = self.speeds[i % n_speeds] * robot.v_pref;
        let to_goal = robot.goal - robot.position;
        let base = if to_goal.length_squared() > 0.0 { to_goal.angle() } else { 0.0 };
        Vec2::from_angle(base + heading) * speed
    }

    pub fn velocities(&self, world: &World) -> Vec<Vec2> {
        (0..self.len()).map(|i| self.velocity(i, world)).collect()
    }
}

pub trait Policy {
    /// Velocity command for the robot in the current scene.
    fn act(&mut self, world: &World) -> Result<Vec2>;

    fn name(&self) -> &str;
}

/// The robot runs ORCA like the humans, seeing humans as agents and squares
/// as polygonal obstacles.
#[derive(Debug, Clone, Default)]
pub struct OrcaPolicy;

impl Policy for OrcaPolicy {
    fn act(&mut self, world: &World) -> Result<Vec2> {
        let robot = &world.robot;
        let margin = world.config.orca.safety_margin;
        let me = robot.orca_view(robot.goal_velocity(world.time_step), margin);
        let neighbors: Vec<OrcaAgentView> = world.humans.iter().map(|h| h.orca_view(h.velocity, margin)).collect();
        let v = orca_velocity(&me, &neighbors, world.line_obstacles(), &world.config.orca);
        Ok(v.clamp_length(robot.v_pref))
    }

    fn name(&self) -> &str {
        "orca"
    }
}

/// Full speed straight at the goal, ignoring everything else.
#[derive(Debug, Clone, Default)]
pub struct StraightPolicy;

impl Policy for StraightPolicy {
    fn act(&mut self, world: &World) -> Result<Vec2> {
        let r = &world.robot;
        Ok((r.goal - r.position).normalize_or_zero() * r.v_pref)
    }

    fn name(&self) -> &str {
        "straight"
    }
}

/// Never moves.
#[derive(Debug, Clone, Default)]
pub struct StopPolicy;

impl Policy for StopPolicy {
    fn act(&mut self, _world: &World) -> Result<Vec2> {
        Ok(Vec2::ZERO)
    }

    fn name(&self) -> &str {
        "stop"
    }
}

/// Uniformly random discrete actions.
#[derive(Debug, Clone)]
pub struct RandomPolicy {
    pub actions: ActionSpace,
    pub rng: ChaCha8Rng,
}

impl Policy for RandomPolicy {
    fn act(&mut self, world: &World) -> Result<Vec2> {
        let i = self.rng.gen_range(0..self.actions.len());
        Ok(self.actions.velocity(i, world))
    }

    fn name(&self) -> &str {
        "random"
    }
}

/// Scene advanced by one step under the constant-velocity assumption for
/// every entity, with the reward inputs of that hypothetical step.
pub fn lookahead(world: &World, action: Vec2) -> (World, RewardInput) {
    let dt = world.time_step;
    let mut next = world.clone();
    let robot = &world.robot;
    let v_pref_vec = (robot.goal - robot.position).normalize_or_zero() * robot.v_pref;
    next.robot.velocity = action;
    next.robot.position += action * dt;
    for h in &mut next.humans {
        h.position += h.velocity * dt;
    }
    next.steps += 1;

    let (r0, r1) = (robot.position, next.robot.position);
    let mut min_dt = f64::INFINITY;
    for (before, after) in world.entities().zip(next.entities()) {
        let d = closest_approach(r0, r1, before.position, after.position) - robot.radius - after.radius;
        min_dt = min_dt.min(d);
    }
    let d_g = next.goal_distance();
    let input = RewardInput {
        min_dt,
        reached_goal: d_g < robot.radius,
        v: action,
        v_pref_vec,
        d_g,
        t: next.time(),
    };
    (next, input)
}

/// One-step lookahead argmax of reward plus discounted value, with ties
/// resolved toward the lowest action index. Terminal lookahead steps
/// (collision, arrival, time limit) are worth their reward alone, matching
/// the temporal-difference targets. Returns the action index.
pub fn greedy_action(
    params: &NetworkParams,
    world: &World,
    actions: &ActionSpace,
    reward: &RewardSpec,
    discount: f64,
    encoding: StateEncoding,
) -> Result<usize> {
    let sfm = SfmParams::default();
    let mut best = (0, f64::NEG_INFINITY);
    for (i, v) in actions.velocities(world).into_iter().enumerate() {
        let (next, input) = lookahead(world, v);
        let terminal = input.min_dt < 0.0 || input.reached_goal || next.time() >= next.config.time_limit - 1e-9;
        let mut score = reward.evaluate(&input);
        if !terminal {
            let state = encode(&next, encoding.force_augmented(), &sfm).flatten();
            score += discount * params.forward(&state)?;
        }
        if score > best.1 {
            best = (i, score);
        }
    }
    Ok(best.0)
}

/// Greedy value policy; with probability `epsilon` a uniformly random action
/// is taken instead.
#[derive(Debug, Clone)]
pub struct ValuePolicy<'a> {
    pub params: &'a NetworkParams,
    pub actions: &'a ActionSpace,
    pub reward: &'a RewardSpec,
    pub discount: f64,
    pub encoding: StateEncoding,
    pub epsilon: f64,
    pub rng: ChaCha8Rng,
}

impl Policy for ValuePolicy<'_> {
    fn act(&mut self, world: &World) -> Result<Vec2> {
        let index = if self.epsilon > 0.0 && self.rng.gen_bool(self.epsilon.min(1.0)) {
            self.rng.gen_range(0..self.actions.len())
        } else {
            greedy_action(self.params, world, self.actions, self.reward, self.discount, self.encoding)?
        };
        Ok(self.actions.velocity(index, world))
    }

    fn name(&self) -> &str {
        "value"
    }
}

/// Discount applied to the next-state value in the lookahead. With
/// `time_scaled` the per-step factor becomes `gamma^(dt * v_pref)`.
pub fn lookahead_discount(gamma: f64, time_scaled: bool, dt: f64, v_pref: f64) -> f64 {
    if time_scaled {
        gamma.powf(dt * v_pref)
    } else {
        gamma
    }
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use rand::SeedableRng;

    use super::*;
    use crate::codec::StateEncoding;
    use crate::reward::{reward_sfm, RewardVariant};
    use crate::value_net::{NetworkShape, NetworkWidths};
    use crate::world::ScenarioConfig;

    fn empty() -> World {
        World::empty(Arc::new(ScenarioConfig::default()))
    }

    fn zero_net(encoding: StateEncoding) -> NetworkParams {
        NetworkParams::zeros(NetworkShape::new(encoding, &NetworkWidths::default()).unwrap())
    }

    #[test]
    fn default_action_space() {
        let a = ActionSpace::default();
        assert_eq!(a.len(), 81);
        assert!((a.speeds[4] - 1.0).abs() < 1e-15);
        assert!(a.speeds.windows(2).all(|w| w[0] < w[1] && w[0] > 0.0));
        let w = empty();
        assert!(a.velocities(&w).iter().all(|v| v.length() <= 1.0 + 1e-12));
        assert_eq!(a.velocity(0, &w), Vec2::ZERO);
        // Heading 0, fastest speed: straight at the goal.
        assert!((a.velocity(5, &w) - Vec2::new(0.0, 1.0)).length() < 1e-12);
    }

    #[test]
    fn sfm_greedy_in_empty_scene_heads_for_goal() {
        let w = empty();
        let a = ActionSpace::default();
        let spec = RewardSpec::with_variant(RewardVariant::Sfm);
        let net = zero_net(StateEncoding::Plain);
        let chosen = greedy_action(&net, &w, &a, &spec, 0.9, StateEncoding::Plain).unwrap();
        // Oracle: enumerate every action with the closed-form reward.
        let pref = Vec2::new(0.0, 1.0);
        let best = (0..a.len())
            .map(|i| {
                let v = a.velocity(i, &w);
                let d_g = (w.robot.position + v * 0.25).distance(w.robot.goal);
                let k = spec.k_reward;
                (i, k - (k * (v - pref)).length() / 2.0 - 0.0001 * d_g)
            })
            .fold((0, f64::NEG_INFINITY), |b, (i, r)| if r > b.1 { (i, r) } else { b });
        assert_eq!(chosen, best.0);
        assert!((a.velocity(chosen, &w) - pref).length() < 1e-12);
        let (_, input) = lookahead(&w, pref);
        assert!((reward_sfm(&input, &spec) - best.1).abs() < 1e-15);
    }

    #[test]
    fn cri_greedy_ties_resolve_to_first_action() {
        let w = empty();
        let net = zero_net(StateEncoding::ForceAugmented);
        let chosen = greedy_action(
            &net,
            &w,
            &ActionSpace::default(),
            &RewardSpec::default(),
            0.9,
            StateEncoding::ForceAugmented,
        )
        .unwrap();
        assert_eq!(chosen, 0);
    }

    #[test]
    fn epsilon_one_is_uniform() {
        let w = empty();
        let actions = ActionSpace::default();
        let net = zero_net(StateEncoding::Plain);
        let reward = RewardSpec::default();
        let mut p = ValuePolicy {
            params: &net,
            actions: &actions,
            reward: &reward,
            discount: 0.9,
            encoding: StateEncoding::Plain,
            epsilon: 1.0,
            rng: ChaCha8Rng::seed_from_u64(3),
        };
        let vels = actions.velocities(&w);
        let mut counts = vec![0usize; actions.len()];
        let n = 10_000;
        for _ in 0..n {
            let v = p.act(&w).unwrap();
            let i = vels.iter().position(|u| *u == v).unwrap();
            counts[i] += 1;
        }
        let expected = n as f64 / actions.len() as f64;
        let chi2: f64 = counts.iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
        // 80 degrees of freedom: the 0.999 quantile is about 124.8.
        assert!(chi2 < 124.8, "chi2 = {chi2}");
    }

    #[test]
    fn lookahead_flags_collisions() {
        let cfg = Arc::new(ScenarioConfig::default());
        let w = crate::world::generate_scenario(2, 1, &cfg).unwrap();
        let mut moved = w.clone();
        // Put the robot right below the barrier and step into it.
        let core = moved.obstacles[1].core.position;
        moved.robot.position = core - Vec2::new(0.0, 0.7);
        let (_, input) = lookahead(&moved, Vec2::new(0.0, 1.0));
        assert!(input.min_dt < 0.0);
    }

    #[test]
    fn orca_policy_respects_speed() {
        let cfg = Arc::new(ScenarioConfig::default());
        let w = crate::world::generate_scenario(1, 4, &cfg).unwrap();
        let v = OrcaPolicy.act(&w).unwrap();
        assert!(v.length() <= w.robot.v_pref + 1e-12);
    }
}
