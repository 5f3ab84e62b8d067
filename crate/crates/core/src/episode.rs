//! Episode loop and the trajectory record it produces.
//!
//! Trajectories are exported as JSON lines. The first line is the episode
//! header:
//!
//! ```text
//! {"record":"episode","env_id":1,"seed":7,"outcome":"reached_goal","nav_time":9.5,
//!  "cumulative_reward":0.37,"robot_radius":0.3,"robot_goal":{"x":0.0,"y":4.0},
//!  "obstacles":[{"center":{"x":..,"y":..},"side":0.6}, ...]}
//! ```
//!
//! followed by one line per snapshot, starting with the initial scene:
//!
//! ```text
//! {"record":"step","t":0.25,"reward":0.0,"robot":{..},"entities":[{..}, ...]}
//! ```
//!
//! where every body is `{"id","kind","position","velocity","radius"}`.

use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::policy::Policy;
use crate::reward::{RewardInput, RewardSpec};
use crate::vec2::Vec2;
use crate::world::{generate_scenario, AgentBody, AgentKind, Outcome, ScenarioConfig, World};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EpisodeOutcome {
    ReachedGoal,
    Collision,
    Timeout,
}

impl EpisodeOutcome {
    fn from_terminal(o: Outcome) -> Option<Self> {
        match o {
            Outcome::Running => None,
            Outcome::ReachedGoal => Some(Self::ReachedGoal),
            Outcome::Collision => Some(Self::Collision),
            Outcome::Timeout => Some(Self::Timeout),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::ReachedGoal => "reached_goal",
            Self::Collision => "collision",
            Self::Timeout => "timeout",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BodyState {
    pub id: u32,
    pub kind: AgentKind,
    pub position: Vec2,
    pub velocity: Vec2,
    pub radius: f64,
}

impl From<&AgentBody> for BodyState {
    fn from(b: &AgentBody) -> Self {
        Self {
            id: b.id,
            kind: b.kind,
            position: b.position,
            velocity: b.velocity,
            radius: b.radius,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub t: f64,
    /// Reward of the step that produced this snapshot; absent for the initial scene.
    pub reward: Option<f64>,
    pub robot: BodyState,
    pub entities: Vec<BodyState>,
}

impl Snapshot {
    fn of(world: &World, reward: Option<f64>) -> Self {
        Self {
            t: world.time(),
            reward,
            robot: BodyState::from(&world.robot),
            entities: world.entities().map(BodyState::from).collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObstacleShape {
    pub center: Vec2,
    pub side: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeHeader {
    pub env_id: u8,
    pub seed: u64,
    pub outcome: EpisodeOutcome,
    pub nav_time: Option<f64>,
    pub cumulative_reward: f64,
    pub robot_radius: f64,
    pub robot_goal: Vec2,
    pub obstacles: Vec<ObstacleShape>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeRecord {
    pub header: EpisodeHeader,
    /// Initial scene followed by one snapshot per step; empty when not recorded.
    pub trajectory: Vec<Snapshot>,
}

impl EpisodeRecord {
    pub fn outcome(&self) -> EpisodeOutcome {
        self.header.outcome
    }

    pub fn nav_time(&self) -> Option<f64> {
        self.header.nav_time
    }

    pub fn cumulative_reward(&self) -> f64 {
        self.header.cumulative_reward
    }
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "record", rename_all = "snake_case")]
enum TrajectoryLine {
    Episode(EpisodeHeader),
    Step(Snapshot),
}

/// What the runner reports after every step.
pub struct StepReport<'a> {
    pub before: &'a World,
    pub after: &'a World,
    pub reward: f64,
    pub outcome: Outcome,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpisodeSettings {
    pub reward: RewardSpec,
    /// Discount of the cumulative reward: a reward earned at time `t` counts
    /// `gamma^(t * v_pref)`. Use 1 for a plain sum.
    pub gamma: f64,
    pub record_trajectory: bool,
}

/// Runs `policy` on `world` until a terminal outcome.
pub fn run_world(
    policy: &mut dyn Policy,
    mut world: World,
    settings: &EpisodeSettings,
    mut on_step: impl FnMut(StepReport<'_>),
) -> Result<EpisodeRecord> {
    let obstacles = world
        .obstacles
        .iter()
        .map(|o| ObstacleShape {
            center: o.center,
            side: o.side,
        })
        .collect();
    let mut trajectory = Vec::new();
    if settings.record_trajectory {
        trajectory.push(Snapshot::of(&world, None));
    }
    let v_pref = world.robot.v_pref;
    let mut cumulative = 0.0;
    let max_steps = world.config.max_steps() + 1;
    for _ in 0..max_steps {
        let action = policy.act(&world)?;
        let before = world.clone();
        let t_before = world.time();
        let v_pref_vec = (world.robot.goal - world.robot.position).normalize_or_zero() * v_pref;
        let event = world.step(action)?;
        let input = RewardInput {
            min_dt: event.min_separation,
            reached_goal: event.outcome == Outcome::ReachedGoal,
            v: action,
            v_pref_vec,
            d_g: world.goal_distance(),
            t: world.time(),
        };
        let reward = settings.reward.evaluate(&input);
        cumulative += settings.gamma.powf(t_before * v_pref) * reward;
        if settings.record_trajectory {
            trajectory.push(Snapshot::of(&world, Some(reward)));
        }
        on_step(StepReport {
            before: &before,
            after: &world,
            reward,
            outcome: event.outcome,
        });
        if let Some(outcome) = EpisodeOutcome::from_terminal(event.outcome) {
            let nav_time = (outcome == EpisodeOutcome::ReachedGoal).then(|| world.time());
            return Ok(EpisodeRecord {
                header: EpisodeHeader {
                    env_id: world.env_id,
                    seed: world.rng_seed,
                    outcome,
                    nav_time,
                    cumulative_reward: cumulative,
                    robot_radius: world.robot.radius,
                    robot_goal: world.robot.goal,
                    obstacles,
                },
                trajectory,
            });
        }
    }
    unreachable!("the time limit ends every episode")
}

/// Generates scenario (`env_id`, `seed`) and runs `policy` on it.
pub fn run_episode(
    policy: &mut dyn Policy,
    env_id: u8,
    seed: u64,
    config: &Arc<ScenarioConfig>,
    settings: &EpisodeSettings,
) -> Result<EpisodeRecord> {
    let world = generate_scenario(env_id, seed, config)?;
    run_world(policy, world, settings, |_| {})
}

pub fn write_trajectory(record: &EpisodeRecord, path: &Path) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    let mut line = |l: &TrajectoryLine| -> Result<()> {
        serde_json::to_writer(&mut out, l).map_err(|e| Error::io(path, e.into()))?;
        out.write_all(b"\n").map_err(|e| Error::io(path, e))
    };
    line(&TrajectoryLine::Episode(record.header.clone()))?;
    for s in &record.trajectory {
        line(&TrajectoryLine::Step(s.clone()))?;
    }
    out.flush().map_err(|e| Error::io(path, e))
}

pub fn read_trajectory(path: &Path) -> Result<EpisodeRecord> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut header = None;
    let mut trajectory = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let parsed: TrajectoryLine = serde_json::from_str(&line).map_err(|e| Error::MalformedLog {
            line: i + 1,
            reason: e.to_string(),
        })?;
        match parsed {
            TrajectoryLine::Episode(h) if header.is_none() => header = Some(h),
            TrajectoryLine::Episode(_) => {
                return Err(Error::MalformedLog {
                    line: i + 1,
                    reason: "second episode header".into(),
                })
            }
            TrajectoryLine::Step(s) => trajectory.push(s),
        }
    }
    let header = header.ok_or(Error::MalformedLog {
        line: 1,
        reason: "missing episode header".into(),
    })?;
    Ok(EpisodeRecord { header, trajectory })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::policy::{OrcaPolicy, StopPolicy, StraightPolicy};

    fn settings() -> EpisodeSettings {
        EpisodeSettings {
            reward: RewardSpec::default(),
            gamma: 0.9,
            record_trajectory: true,
        }
    }

    #[test]
    fn straight_run_in_empty_scene() {
        let world = World::empty(Arc::new(ScenarioConfig::default()));
        let rec = run_world(&mut StraightPolicy, world, &settings(), |_| {}).unwrap();
        assert_eq!(rec.outcome(), EpisodeOutcome::ReachedGoal);
        // Arrival is detected once within one radius of the goal: 7.7 m of travel.
        assert_eq!(rec.nav_time(), Some(7.75));
        assert_eq!(rec.trajectory.len(), 32);
        // Only the arrival step is rewarded, discounted by its start time 7.5 s.
        assert!((rec.cumulative_reward() - 0.9f64.powf(7.5)).abs() < 1e-12);
    }

    #[test]
    fn standing_still_times_out() {
        let cfg = Arc::new(ScenarioConfig::default());
        let rec = run_episode(&mut StopPolicy, 2, 3, &cfg, &settings()).unwrap();
        assert_eq!(rec.outcome(), EpisodeOutcome::Timeout);
        assert_eq!(rec.trajectory.last().unwrap().t, 25.0);
        assert_eq!(rec.nav_time(), None);
    }

    #[test]
    fn trajectory_round_trip() {
        let cfg = Arc::new(ScenarioConfig::default());
        let rec = run_episode(&mut OrcaPolicy, 1, 11, &cfg, &settings()).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.jsonl");
        write_trajectory(&rec, &path).unwrap();
        let back = read_trajectory(&path).unwrap();
        assert_eq!(back, rec);
    }

    #[test]
    fn obstacle_cores_never_move() {
        let cfg = Arc::new(ScenarioConfig::default());
        let rec = run_episode(&mut OrcaPolicy, 4, 2, &cfg, &settings()).unwrap();
        let first = &rec.trajectory[0].entities;
        for s in &rec.trajectory {
            assert_eq!(s.entities.len(), first.len());
            for (a, b) in s.entities.iter().zip(first) {
                if a.kind == AgentKind::ObstacleCore {
                    assert_eq!(a.position, b.position);
                }
            }
        }
    }
}
