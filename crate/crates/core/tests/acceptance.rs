//! Acceptance suite. Every criterion prints one `PASS`/`FAIL` line with the
//! measured numbers before asserting. The target runs without the libtest
//! harness so the report is never captured.

use std::f64::consts::{E, PI};
use std::sync::Arc;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crowdnav_core::codec::{encode, StateEncoding, StateMatrix};
use crowdnav_core::episode::{EpisodeHeader, EpisodeOutcome, EpisodeRecord};
use crowdnav_core::experiment::{preset, ExperimentConfig, Version};
use crowdnav_core::metrics::{aggregate, MetricsReport};
use crowdnav_core::orca::step_all_orca;
use crowdnav_core::policy::RandomPolicy;
use crowdnav_core::reward::{reward_cri, reward_sfm, RewardInput, RewardSpec, RewardVariant};
use crowdnav_core::sfm::{attractive_force, repulsive_force, resultant_repulsive_force, SfmParams};
use crowdnav_core::trainer::{
    collect_imitation, evaluate, evaluate_policy, train_imitation, train_rl, EnvWeight, JsonLines, SeedBlock,
};
use crowdnav_core::value_net::{NetworkParams, NetworkShape, NetworkWidths};
use crowdnav_core::vec2::closest_approach;
use crowdnav_core::world::{generate_scenario, ScenarioConfig};
use crowdnav_core::Vec2;

fn report(criterion: &str, pass: bool, detail: String) {
    println!("{} {criterion}: {detail}", if pass { "PASS" } else { "FAIL" });
    assert!(pass, "{criterion}: {detail}");
}

// Closed forms written out independently of the library.

fn cri_oracle(min_dt: f64, at_goal: bool) -> f64 {
    if min_dt < 0.0 {
        -0.25
    } else if min_dt < 0.2 {
        0.25 * (-0.1 + min_dt / 2.0)
    } else if at_goal {
        1.0
    } else {
        0.0
    }
}

fn sfm_oracle(min_dt: f64, at_goal: bool, v: Vec2, v_pref: Vec2, d_g: f64, t: f64, discounted: bool) -> f64 {
    let (a, b, k) = (-0.03, 10.0, 0.001);
    if min_dt < 0.0 {
        -0.25
    } else if min_dt < 0.2 {
        a * (-b * min_dt).exp()
    } else if at_goal {
        if discounted && t >= 10.0 {
            1.0 - 0.02 * (t - 10.0)
        } else {
            1.0
        }
    } else {
        let dx = k * (v.x - v_pref.x);
        let dy = k * (v.y - v_pref.y);
        k - (dx * dx + dy * dy).sqrt() / 2.0 - 0.0001 * d_g
    }
}

fn analytic_reward_conformance() {
    let start = Instant::now();
    let min_dts = [-0.3, -1e-9, 0.0, 0.05, 0.1, 0.199, 0.2, 0.5, 2.0, 7.0];
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let sfm = RewardSpec::with_variant(RewardVariant::Sfm);
    let disc = RewardSpec::with_variant(RewardVariant::SfmDiscounted);
    let mut points = 0;
    let mut worst: f64 = 0.0;
    let mut branches = [0usize; 4];
    for &min_dt in &min_dts {
        for j in 0..20 {
            let at_goal = j % 2 == 0 && min_dt >= 0.0;
            let t = 0.25 * rng.gen_range(1..=100) as f64;
            let d_g = rng.gen_range(0.0..10.0);
            let heading = rng.gen_range(-PI..PI);
            let v = Vec2::from_angle(heading) * rng.gen_range(0.0..1.0);
            let goal_dir = rng.gen_range(-PI..PI);
            let v_pref_vec = Vec2::from_angle(goal_dir);
            let input = RewardInput {
                min_dt,
                reached_goal: at_goal,
                v,
                v_pref_vec,
                d_g,
                t,
            };
            let branch = if min_dt < 0.0 {
                0
            } else if min_dt < 0.2 {
                1
            } else if at_goal {
                2
            } else {
                3
            };
            branches[branch] += 1;
            let errs = [
                reward_cri(&input) - cri_oracle(min_dt, at_goal),
                reward_sfm(&input, &sfm) - sfm_oracle(min_dt, at_goal, v, v_pref_vec, d_g, t, false),
                reward_sfm(&input, &disc) - sfm_oracle(min_dt, at_goal, v, v_pref_vec, d_g, t, true),
            ];
            worst = errs.iter().fold(worst, |m, e| m.max(e.abs()));
            points += 1;
        }
    }
    let pass = points == 200 && worst <= 1e-12 && branches.iter().all(|&n| n > 0);
    report(
        "analytic reward conformance",
        pass,
        format!(
            "{points} grid points, branch counts {branches:?}, max abs error {worst:.2e} (tol 1e-12), {:?}",
            start.elapsed()
        ),
    );
}

fn sfm_force_conformance() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst: f64 = 0.0;
    let mut property_failures = 0;
    for _ in 0..1000 {
        let params = SfmParams {
            k_attract: rng.gen_range(0.0..3.0),
            a_z: rng.gen_range(0.1..3.0),
            b_z: rng.gen_range(0.2..3.0),
            d_z: rng.gen_range(0.0..1.0),
        };
        let p = |rng: &mut ChaCha8Rng| Vec2::new(rng.gen_range(-6.0..6.0), rng.gen_range(-6.0..6.0));

        let (v, v0) = (p(&mut rng), p(&mut rng));
        let f = attractive_force(v, v0, &params);
        worst = worst
            .max((f.x - params.k_attract * (v0.x - v.x)).abs())
            .max((f.y - params.k_attract * (v0.y - v.y)).abs());

        let subject = p(&mut rng);
        let sources: Vec<Vec2> = (0..rng.gen_range(0..6)).map(|_| p(&mut rng)).collect();
        let mut sum = (0.0, 0.0);
        for &src in &sources {
            let (dx, dy) = (subject.x - src.x, subject.y - src.y);
            let d = (dx * dx + dy * dy).sqrt();
            let mag = params.a_z * ((params.d_z - d) / params.b_z).exp();
            let expect = (mag * dx / d, mag * dy / d);
            let got = repulsive_force(subject, src, &params).unwrap();
            worst = worst.max((got.x - expect.0).abs()).max((got.y - expect.1).abs());
            sum.0 += expect.0;
            sum.1 += expect.1;

            // Direction points at the subject; magnitude decays with distance.
            if got.dot(subject - src) <= 0.0 {
                property_failures += 1;
            }
            let farther = subject + (subject - src) * rng.gen_range(0.01..1.0);
            if repulsive_force(farther, src, &params).unwrap().length() >= got.length() {
                property_failures += 1;
            }
        }
        let total = resultant_repulsive_force(subject, &sources, &params).unwrap();
        worst = worst.max((total.x - sum.0).abs()).max((total.y - sum.1).abs());
    }
    let unit = SfmParams {
        k_attract: 1.0,
        a_z: 1.0,
        b_z: 1.0,
        d_z: 0.0,
    };
    let e = repulsive_force(Vec2::new(1.0, 0.0), Vec2::ZERO, &unit).unwrap();
    worst = worst.max((e.x - 1.0 / E).abs());
    let pass = worst <= 1e-12 && property_failures == 0;
    report(
        "SFM force conformance",
        pass,
        format!(
            "1000 configurations, max abs error {worst:.2e} (tol 1e-12), {property_failures} property violations, {:?}",
            start.elapsed()
        ),
    );
}

fn orca_zero_collisions() {
    let start = Instant::now();
    let config = Arc::new(ScenarioConfig::default());
    let margin = config.orca.safety_margin;
    let mut overlaps = 0;
    let mut closest = f64::INFINITY;
    let mut agents_seen = 0;
    for scene in 0..50u64 {
        let world = generate_scenario(1, 90_000 + scene, &config).unwrap();
        let dt = world.time_step;
        let mut bodies: Vec<_> = std::iter::once(world.robot).chain(world.humans.iter().copied()).collect();
        agents_seen += bodies.len();
        let obstacles = world.line_obstacles();
        for _ in 0..100 {
            let views: Vec<_> = bodies.iter().map(|b| b.orca_view(b.goal_velocity(dt), margin)).collect();
            let velocities = step_all_orca(&views, obstacles, &config.orca);
            let before: Vec<Vec2> = bodies.iter().map(|b| b.position).collect();
            for (b, v) in bodies.iter_mut().zip(velocities) {
                b.velocity = v;
                b.position += v * dt;
            }
            for i in 0..bodies.len() {
                for j in i + 1..bodies.len() {
                    let d = closest_approach(before[i], bodies[i].position, before[j], bodies[j].position)
                        - bodies[i].radius
                        - bodies[j].radius;
                    closest = closest.min(d);
                    if d < 0.0 {
                        overlaps += 1;
                    }
                }
                for edge in obstacles {
                    let d = edge.distance_squared_to(bodies[i].position).sqrt() - bodies[i].radius;
                    closest = closest.min(d);
                    if d < 0.0 {
                        overlaps += 1;
                    }
                }
            }
        }
    }
    let elapsed = start.elapsed();
    report(
        "ORCA zero-collision property",
        overlaps == 0 && elapsed.as_secs_f64() < 30.0,
        format!("50 env-1 scenes ({agents_seen} agents), 100 steps each: {overlaps} overlaps, closest clearance {closest:.4} m, {elapsed:?}"),
    );
}

fn encoder_frame_invariance() {
    let start = Instant::now();
    let config = Arc::new(ScenarioConfig::default());
    let sfm = SfmParams::default();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst: f64 = 0.0;
    for k in 0..100u64 {
        let env = 1 + (k % 5) as u8;
        let mut world = generate_scenario(env, 50_000 + k, &config).unwrap();
        // A few steps give the humans non-trivial velocities.
        for _ in 0..rng.gen_range(0..6) {
            let action = Vec2::from_angle(rng.gen_range(-PI..PI)) * rng.gen_range(0.0..1.0);
            world.step(action).unwrap();
        }
        for force in [false, true] {
            let reference = encode(&world, force, &sfm).flatten();
            for _ in 0..20 {
                let moved = world.transformed(
                    rng.gen_range(-PI..PI),
                    Vec2::new(rng.gen_range(-50.0..50.0), rng.gen_range(-50.0..50.0)),
                );
                let other = encode(&moved, force, &sfm).flatten();
                assert_eq!((other.rows, other.width), (reference.rows, reference.width));
                for (a, b) in reference.data.iter().zip(&other.data) {
                    worst = worst.max((a - b).abs());
                }
            }
        }
    }
    let elapsed = start.elapsed();
    report(
        "encoder frame invariance",
        worst <= 1e-9 && elapsed.as_secs_f64() < 5.0,
        format!("100 worlds x 20 transforms, both encodings: max deviation {worst:.2e} (tol 1e-9), {elapsed:?}"),
    );
}

fn gradient_check() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst: f64 = 0.0;
    let mut checked = 0;
    let mut kinks = 0;
    for k in 0..10u64 {
        let encoding = if k % 2 == 0 { StateEncoding::Plain } else { StateEncoding::ForceAugmented };
        let mut w = || rng.gen_range(2..7);
        let widths = NetworkWidths {
            embed: vec![w(), w()],
            pair: vec![w(), w()],
            attn_hidden: vec![w()],
            value_hidden: vec![w(), w()],
        };
        let shape = NetworkShape::new(encoding, &widths).unwrap();
        let mut params = NetworkParams::init(shape, 100 + k);
        let rows = rng.gen_range(1..5);
        let width = encoding.row_width();
        let data = (0..rows * width).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let state = StateMatrix::new(rows, width, data).unwrap();
        let target = rng.gen_range(-1.0..1.0);
        let grad = params.backward(&state, target).unwrap();
        let loss = |p: &NetworkParams| 0.5 * (p.forward(&state).unwrap() - target).powi(2);
        // Fourth-order central differences keep both truncation and rounding
        // error well below the tolerance. A component whose perturbation moves a
        // ReLU across its kink has no derivative to compare against; such
        // components show up as one-sided slopes that disagree and are counted.
        let h = 3e-5;
        let base = loss(&params);
        for i in 0..params.weights.len() {
            let w0 = params.weights[i];
            let mut at = |dw: f64| {
                params.weights[i] = w0 + dw;
                loss(&params)
            };
            let (p1, m1, p2, m2) = (at(h), at(-h), at(2.0 * h), at(-2.0 * h));
            params.weights[i] = w0;
            let numeric = (8.0 * (p1 - m1) - (p2 - m2)) / (12.0 * h);
            let (right, left) = ((p1 - base) / h, (base - m1) / h);
            if (right - left).abs() > 1e-3 * right.abs().max(left.abs()).max(1e-3) {
                kinks += 1;
                continue;
            }
            let analytic = grad.0[i];
            // Relative error with a floor so that exact zeros compare sensibly.
            let rel = (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-7);
            worst = worst.max(rel);
            checked += 1;
        }
    }
    let elapsed = start.elapsed();
    report(
        "gradient check",
        worst < 1e-4 && kinks * 100 < checked && elapsed.as_secs_f64() < 30.0,
        format!(
            "10 networks, {checked} components: max relative error {worst:.2e} (tol 1e-4), {kinks} skipped at ReLU kinks, {elapsed:?}"
        ),
    );
}

struct DeskRun {
    log: Vec<u8>,
    imitation: NetworkParams,
    final_params: NetworkParams,
}

fn desk_run(exp: &ExperimentConfig) -> DeskRun {
    let mut log = JsonLines(Vec::new());
    let data = collect_imitation(exp).unwrap();
    let imitation = train_imitation(&data, exp, &mut log).unwrap();
    let final_params = train_rl(imitation.clone(), &data, exp, &mut log).unwrap();
    DeskRun {
        log: log.0,
        imitation,
        final_params,
    }
}

/// Determinism and the learning smoke test share the two desk-scale runs.
fn desk_scale_training() {
    let exp = preset("desk").unwrap();
    assert_eq!(exp.version, Version::Sarl);
    assert_eq!(exp.scenario.element_count, 5);
    assert_eq!(
        exp.train.env_mix,
        vec![EnvWeight {
            env_id: 1,
            probability: 1.0
        }]
    );
    assert_eq!((exp.train.il_episodes, exp.train.rl_episodes), (300, 1000));

    let start = Instant::now();
    let a = desk_run(&exp);
    let first = start.elapsed();
    let b = desk_run(&exp);
    let same = a.log == b.log
        && a.imitation.to_bytes() == b.imitation.to_bytes()
        && a.final_params.to_bytes() == b.final_params.to_bytes();
    report(
        "determinism",
        same,
        format!(
            "two desk runs: logs {} bytes, checkpoints {} bytes, identical: {same}, {:?}",
            a.log.len(),
            a.final_params.to_bytes().len(),
            start.elapsed()
        ),
    );

    let held_out = 100;
    let seed_base = 2024;
    let (rl, _) = evaluate(&a.final_params, &exp, held_out, seed_base).unwrap();
    let (il, _) = evaluate(&a.imitation, &exp, held_out, seed_base).unwrap();
    let mut random = RandomPolicy {
        actions: exp.actions.clone(),
        rng: ChaCha8Rng::seed_from_u64(seed_base),
    };
    let (rand_m, _) = evaluate_policy(&mut random, &exp, held_out, seed_base, SeedBlock::Test).unwrap();
    let summary = format!(
        "success on {held_out} held-out seeds: trained {:.2} (collision {:.2}), IL-only {:.2}, random {:.2}; one run {first:?}",
        rl.success_rate, rl.collision_rate, il.success_rate, rand_m.success_rate
    );
    report(
        "desk-scale learning",
        rl.success_rate >= 0.60 && rl.success_rate > rand_m.success_rate && rl.success_rate >= il.success_rate,
        summary.clone(),
    );
    // A strict improvement over imitation cannot exist once imitation alone
    // solves every held-out seed, so the line is printed but only asserted
    // below that ceiling.
    let beats_il = rl.success_rate > il.success_rate;
    if il.success_rate < 1.0 {
        report("desk-scale learning beats IL-only", beats_il, summary);
    } else {
        println!(
            "{} desk-scale learning beats IL-only: not asserted, IL-only is already at 1.00; {summary}",
            if beats_il { "PASS" } else { "FAIL" }
        );
    }
}

fn version_matrix_wiring() {
    use RewardVariant::*;
    let split = vec![
        EnvWeight {
            env_id: 1,
            probability: 0.7,
        },
        EnvWeight {
            env_id: 2,
            probability: 0.3,
        },
    ];
    let env1 = vec![EnvWeight {
        env_id: 1,
        probability: 1.0,
    }];
    let expected = [
        ("SARL", Cri, 13, 0.001, &split),
        ("SARL-SFM", SfmDiscounted, 13, 0.001, &split),
        ("SARL-SFM2", Sfm, 13, 0.001, &split),
        ("SARL-SFM3", Sfm, 13, 0.001, &env1),
        ("SARL-SFM4", Sfm, 13, 0.003, &split),
        ("SARL-SFM5", Cri, 17, 0.001, &split),
        ("SARL-SFM6", Sfm, 17, 0.001, &split),
    ];
    let mut mismatches = Vec::new();
    for (name, variant, width, k, mix) in expected {
        let exp = preset(name).unwrap();
        let got = (
            exp.version.label(),
            exp.reward.variant,
            exp.state_encoding.row_width(),
            exp.reward.k_reward,
            &exp.train.env_mix,
        );
        if got != (name, variant, width, k, mix) {
            mismatches.push(name);
        }
    }
    report(
        "version-matrix wiring",
        mismatches.is_empty(),
        format!("7 presets checked, mismatches: {mismatches:?}"),
    );
}

fn record(outcome: EpisodeOutcome, nav_time: Option<f64>, reward: f64) -> EpisodeRecord {
    EpisodeRecord {
        header: EpisodeHeader {
            env_id: 1,
            seed: 0,
            outcome,
            nav_time,
            cumulative_reward: reward,
            robot_radius: 0.3,
            robot_goal: Vec2::new(0.0, 4.0),
            obstacles: vec![],
        },
        trajectory: vec![],
    }
}

fn metrics_arithmetic() {
    use EpisodeOutcome::*;
    let mut failures = Vec::new();
    let mut check = |name: &str, got: MetricsReport, want: MetricsReport| {
        if got != want {
            failures.push(format!("{name}: {got:?} != {want:?}"));
        }
    };

    // Two successes (8 s, 10 s), one collision, one timeout.
    let four = [
        record(ReachedGoal, Some(8.0), 0.5),
        record(Collision, None, -0.25),
        record(ReachedGoal, Some(10.0), 0.25),
        record(Timeout, None, 0.0),
    ];
    check(
        "4 records",
        aggregate(&four).unwrap(),
        MetricsReport {
            success_rate: 0.5,
            collision_rate: 0.25,
            avg_nav_time: Some(9.0),
            total_reward: 0.125,
            episode_count: 4,
        },
    );

    // Twelve successes at 10.5 s, five collisions, three timeouts.
    let mut twenty = Vec::new();
    for i in 0..20 {
        twenty.push(if i < 12 {
            record(ReachedGoal, Some(10.5), 0.375)
        } else if i < 17 {
            record(Collision, None, -0.25)
        } else {
            record(Timeout, None, 0.0)
        });
    }
    check(
        "20 records",
        aggregate(&twenty).unwrap(),
        MetricsReport {
            success_rate: 0.6,
            collision_rate: 0.25,
            avg_nav_time: Some(10.5),
            total_reward: (12.0 * 0.375 - 5.0 * 0.25) / 20.0,
            episode_count: 20,
        },
    );

    // 455 successes averaging 11.83 s, 15 collisions and 30 timeouts out of 500.
    let mut table_row = Vec::new();
    for i in 0..455 {
        let t = if i % 2 == 0 { 11.33 } else { 12.33 };
        table_row.push(record(ReachedGoal, Some(t), 0.3));
    }
    table_row.extend((0..15).map(|_| record(Collision, None, -0.25)));
    table_row.extend((0..30).map(|_| record(Timeout, None, 0.0)));
    let m = aggregate(&table_row).unwrap();
    let nav = m.avg_nav_time.unwrap();
    // 228 runs at 11.33 s and 227 at 12.33 s average 11.8289 s, printed as 11.83.
    let rounded = (m.success_rate, m.collision_rate, (nav * 100.0).round() / 100.0);
    if rounded != (0.91, 0.03, 11.83) {
        failures.push(format!("table row: {rounded:?}"));
    }
    report(
        "metrics arithmetic",
        failures.is_empty(),
        format!(
            "4- and 20-record fixtures exact; table row success {:.2} collision {:.2} nav time {:.2}; failures {failures:?}",
            m.success_rate, m.collision_rate, nav
        ),
    );
}

fn main() {
    let checks: [(&str, fn()); 8] = [
        ("analytic_reward_conformance", analytic_reward_conformance),
        ("sfm_force_conformance", sfm_force_conformance),
        ("orca_zero_collisions", orca_zero_collisions),
        ("encoder_frame_invariance", encoder_frame_invariance),
        ("gradient_check", gradient_check),
        ("version_matrix_wiring", version_matrix_wiring),
        ("metrics_arithmetic", metrics_arithmetic),
        ("desk_scale_training", desk_scale_training),
    ];
    let mut failed = Vec::new();
    for (name, check) in checks {
        if std::panic::catch_unwind(check).is_err() {
            failed.push(name);
        }
    }
    if failed.is_empty() {
        println!("acceptance: all {} checks passed", checks.len());
    } else {
        println!("acceptance: failed {failed:?}");
        std::process::exit(1);
    }
}
