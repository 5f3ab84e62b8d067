use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use log::info;
use serde::{Deserialize, Serialize};

use crowdnav_core::episode::{run_episode, write_trajectory, EpisodeSettings};
use crowdnav_core::experiment::{preset_names, ExperimentConfig, Version};
use crowdnav_core::metrics::{compare_versions, MetricsReport};
use crowdnav_core::plot::{plot_trajectory, plot_validation_curve, read_validation_points};
use crowdnav_core::policy::{OrcaPolicy, Policy};
use crowdnav_core::trainer::{evaluate, train, value_policy, JsonLines};
use crowdnav_core::value_net::NetworkParams;

#[derive(Parser)]
#[command(name = "crowdnav", version, about = "Crowd navigation experiments: simulate, train, evaluate, compare, plot")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one episode and write its trajectory.
    Simulate {
        #[arg(long)]
        env: u8,
        #[arg(long)]
        seed: u64,
        /// `orca`, or `checkpoint PATH` for a trained value network.
        #[arg(long, num_args = 1..=2, value_names = ["KIND", "PATH"], default_values_t = [String::from("orca")])]
        policy: Vec<String>,
        #[arg(long, default_value = "SARL")]
        preset: String,
        #[arg(long)]
        out: PathBuf,
        /// Also render the episode as an SVG.
        #[arg(long)]
        plot: bool,
    },
    /// Imitation then reinforcement learning; writes checkpoints and the training log.
    Train {
        #[arg(long)]
        preset: String,
        /// Overrides the preset's master seed.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Greedy test episodes of a checkpoint.
    Evaluate {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        preset: String,
        /// Defaults to the preset's test episode count.
        #[arg(long)]
        episodes: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed_base: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Collect the reports under a directory into one comparison table.
    Compare {
        #[arg(long)]
        reports: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Render a trajectory or validation curves as SVG.
    Plot {
        kind: PlotKind,
        /// Trajectory file, or one or more training logs (optionally `LABEL=PATH`).
        #[arg(long = "in", required = true, num_args = 1..)]
        input: Vec<String>,
        #[arg(long)]
        out: PathBuf,
    },
    /// List the built-in presets.
    Presets,
}

#[derive(Clone, Copy, ValueEnum)]
enum PlotKind {
    Trajectory,
    Validation,
}

/// What `evaluate` writes and `compare` reads.
#[derive(Serialize, Deserialize)]
struct ReportFile {
    version: Version,
    preset: String,
    metrics: MetricsReport,
}

const REPORT_FILE: &str = "report.json";

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match Cli::parse().command {
        Command::Simulate {
            env,
            seed,
            policy,
            preset,
            out,
            plot,
        } => simulate(env, seed, &policy, &preset, &out, plot),
        Command::Train { preset, seed, out } => run_train(&preset, seed, &out),
        Command::Evaluate {
            checkpoint,
            preset,
            episodes,
            seed_base,
            out,
        } => run_evaluate(&checkpoint, &preset, episodes, seed_base, &out),
        Command::Compare { reports, out } => compare(&reports, &out),
        Command::Plot { kind, input, out } => plot(kind, &input, &out),
        Command::Presets => {
            for name in preset_names() {
                println!("{name}");
            }
            Ok(())
        }
    }
}

fn load_preset(name: &str) -> Result<ExperimentConfig> {
    ExperimentConfig::resolve(name).with_context(|| format!("loading preset {name}"))
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

fn simulate(env: u8, seed: u64, policy: &[String], preset: &str, out: &Path, plot: bool) -> Result<()> {
    let exp = load_preset(preset)?;
    create_dir(out)?;
    let settings = EpisodeSettings {
        record_trajectory: true,
        ..crowdnav_core::trainer::episode_settings(&exp)
    };
    let scenario = exp.scenario();
    let params;
    let mut value;
    let mut orca = OrcaPolicy;
    let chosen: &mut dyn Policy = match policy {
        [kind] if kind == "orca" => &mut orca,
        [kind, path] if kind == "checkpoint" => {
            params = NetworkParams::load_expecting(Path::new(path), &exp.network_shape()?)?;
            value = value_policy(&params, &exp, 0.0, seed);
            &mut value
        }
        _ => bail!("--policy expects `orca` or `checkpoint PATH`"),
    };
    let record = run_episode(chosen, env, seed, &scenario, &settings)?;
    let path = out.join(format!("episode_env{env}_seed{seed}.jsonl"));
    write_trajectory(&record, &path)?;
    println!(
        "{}: {} (time {}, reward {:.4}) -> {}",
        chosen.name(),
        record.outcome().as_str(),
        record.nav_time().map_or_else(|| "-".into(), |t| format!("{t:.2}")),
        record.cumulative_reward(),
        path.display()
    );
    if plot {
        let svg = path.with_extension("svg");
        plot_trajectory(&record, &svg)?;
        println!("plot -> {}", svg.display());
    }
    Ok(())
}

fn run_train(preset: &str, seed: Option<u64>, out: &Path) -> Result<()> {
    let mut exp = load_preset(preset)?;
    if let Some(seed) = seed {
        exp.train.seed = seed;
    }
    create_dir(out)?;
    let config_path = out.join("config.toml");
    fs::write(&config_path, exp.to_toml()?).with_context(|| format!("writing {}", config_path.display()))?;
    let log_path = out.join("training_log.jsonl");
    let file = fs::File::create(&log_path).with_context(|| format!("creating {}", log_path.display()))?;
    let mut log = JsonLines(BufWriter::new(file));
    info!("training {} with seed {}", exp.name, exp.train.seed);
    let model = train(&exp, &mut log)?;
    drop(log);
    model.imitation.save(&out.join("imitation.ckpt"))?;
    model.final_params.save(&out.join("final.ckpt"))?;
    println!("wrote {}/{{config.toml,training_log.jsonl,imitation.ckpt,final.ckpt}}", out.display());
    Ok(())
}

fn run_evaluate(checkpoint: &Path, preset: &str, episodes: Option<usize>, seed_base: u64, out: &Path) -> Result<()> {
    let exp = load_preset(preset)?;
    let params = NetworkParams::load_expecting(checkpoint, &exp.network_shape()?)?;
    let episodes = episodes.unwrap_or(exp.train.test_episodes);
    let (metrics, _) = evaluate(&params, &exp, episodes, seed_base)?;
    create_dir(out)?;
    let report = ReportFile {
        version: exp.version,
        preset: exp.name.clone(),
        metrics,
    };
    let path = out.join(REPORT_FILE);
    fs::write(&path, serde_json::to_string_pretty(&report)? + "\n")
        .with_context(|| format!("writing {}", path.display()))?;
    print!("{}", compare_versions([(exp.version.label(), metrics)]).render());
    Ok(())
}

/// Every report file below `dir`, in file-name order.
fn find_reports(dir: &Path, found: &mut Vec<PathBuf>) -> Result<()> {
    let mut entries: Vec<_> = fs::read_dir(dir)
        .with_context(|| format!("reading {}", dir.display()))?
        .map(|e| e.map(|e| e.path()))
        .collect::<std::io::Result<_>>()?;
    entries.sort();
    for path in entries {
        if path.is_dir() {
            find_reports(&path, found)?;
        } else if path.extension().is_some_and(|e| e == "json") {
            found.push(path);
        }
    }
    Ok(())
}

fn compare(dir: &Path, out: &Path) -> Result<()> {
    let mut paths = Vec::new();
    find_reports(dir, &mut paths)?;
    let mut reports = Vec::new();
    for path in paths {
        let text = fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
        let report: ReportFile =
            serde_json::from_str(&text).with_context(|| format!("parsing report {}", path.display()))?;
        reports.push(report);
    }
    if reports.is_empty() {
        bail!("no reports found under {}", dir.display());
    }
    // Rows follow the version order of the comparison; runs of one version keep file order.
    reports.sort_by_key(|r| Version::ALL.iter().position(|v| *v == r.version));
    let table = compare_versions(reports.iter().map(|r| (r.version.label(), r.metrics)));
    table.write_csv(out)?;
    print!("{}", table.render());
    Ok(())
}

fn plot(kind: PlotKind, input: &[String], out: &Path) -> Result<()> {
    match kind {
        PlotKind::Trajectory => {
            let [path] = input else {
                bail!("a trajectory plot takes exactly one --in file");
            };
            let record = crowdnav_core::episode::read_trajectory(Path::new(path))?;
            plot_trajectory(&record, out)?;
        }
        PlotKind::Validation => {
            let mut series = Vec::new();
            for arg in input {
                let (label, path) = match arg.split_once('=') {
                    Some((label, path)) => (label.to_string(), PathBuf::from(path)),
                    None => (default_label(Path::new(arg)), PathBuf::from(arg)),
                };
                let points = read_validation_points(&path).with_context(|| format!("reading {}", path.display()))?;
                series.push((label, points));
            }
            plot_validation_curve(&series, out)?;
        }
    }
    println!("plot -> {}", out.display());
    Ok(())
}

/// The run directory name for the usual `DIR/training_log.jsonl`, else the file stem.
fn default_label(path: &Path) -> String {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    if stem == "training_log" {
        if let Some(dir) = path.parent().and_then(|p| p.file_name()) {
            return dir.to_string_lossy().into_owned();
        }
    }
    stem
}
