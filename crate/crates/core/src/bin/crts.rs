use std::collections::BTreeMap;
use std::net::TcpListener;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::{error, info};

use crts_core::bev::{BevSpec, Variant};
use crts_core::data::{
    ingest, read_canonical, validate_track, write_canonical, ColumnMapping, IngestOptions, TrajectoryDataset,
};
use crts_core::env::{
    evaluate, serve, Episode, EpisodeConfig, NamedPolicy, ScenarioOrder, SplitSelection, SuiteContext,
};
use crts_core::map::{read_map, RoadMap};
use crts_core::reward::RewardScheme;
use crts_core::scenario::{
    assign_split, assign_split_by_recording, extract_lane_changes, extract_roundabout_crossings, write_suite,
    ExtractionReport, Split, SplitMode, SuiteFile,
};
use crts_core::sim::{read_catalog, PhysicsConfig};
use crts_core::synthetic::{generate, write_synthetic, SyntheticOptions};
use crts_core::{Error, Result};

#[derive(Parser)]
#[command(
    name = "crts",
    version,
    about = "Closed-loop driving scenarios replayed from trajectory recordings"
)]
struct Cli {
    /// Physics overrides (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Vehicle catalog replacing the built-in one.
    #[arg(long, global = true)]
    catalog: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print a per-track sanity report for a recording.
    Validate {
        #[arg(long)]
        data: PathBuf,
        /// `ngsim`, `opendd` or a TOML mapping file; omit for canonical `.crtd` input.
        #[arg(long)]
        mapping: Option<String>,
        /// Allowed gap between stored and displacement speed, m/s.
        #[arg(long, default_value_t = 1.0)]
        tolerance: f64,
    },
    /// Ingest a tabular recording into a canonical `.crtd` file.
    Convert {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        mapping: String,
        #[arg(long)]
        map_id: String,
        #[arg(long)]
        recording_id: Option<String>,
        /// Smoothing window in seconds (0 disables).
        #[arg(long)]
        smoothing: Option<f64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Mine scenarios from canonical recordings and write a suite.
    Extract {
        /// Canonical `.crtd` recordings.
        #[arg(long, required = true, num_args = 1..)]
        data: Vec<PathBuf>,
        /// `.crtm` maps; each recording uses the map with its map id.
        #[arg(long, required = true, num_args = 1..)]
        map: Vec<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// `auto` mines roundabout crossings on maps with gates and lane changes elsewhere.
        #[arg(long, value_enum, default_value_t = KindArg::Auto)]
        kind: KindArg,
        #[arg(long, default_value = "scenario")]
        split_mode: SplitMode,
        #[arg(long)]
        out: PathBuf,
        /// Print scenario counts per split and kind.
        #[arg(long)]
        stats: bool,
    },
    /// Run a named policy on every scenario of a split.
    Eval {
        #[command(flatten)]
        episode: EpisodeArgs,
        #[arg(long, default_value = "replay-follower")]
        policy: NamedPolicy,
        #[arg(long, default_value_t = 1)]
        workers: usize,
        /// Render observations on every step even though named policies ignore them.
        #[arg(long)]
        render: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Serve episodes over TCP.
    Serve {
        #[command(flatten)]
        episode: EpisodeArgs,
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
        #[arg(long, default_value_t = 7777)]
        port: u16,
    },
    /// Write one grayscale PNG per observation channel after N policy steps.
    Render {
        #[command(flatten)]
        episode: EpisodeArgs,
        #[arg(long)]
        scenario: String,
        #[arg(long, default_value_t = 0)]
        step: usize,
        #[arg(long, default_value = "replay-follower")]
        policy: NamedPolicy,
        #[arg(long)]
        out: PathBuf,
    },
    /// Generate the scripted synthetic suite.
    Synth {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = SyntheticOptions::default().seed)]
        seed: u64,
        #[arg(long, default_value_t = SyntheticOptions::default().lane_change_slots)]
        lane_change_slots: usize,
        #[arg(long, default_value_t = SyntheticOptions::default().roundabout_vehicles)]
        roundabout_vehicles: usize,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum KindArg {
    Auto,
    LaneChange,
    Roundabout,
    All,
}

#[derive(Args)]
struct EpisodeArgs {
    #[arg(long)]
    suite: PathBuf,
    /// `train`, `validation` or `all`.
    #[arg(long, default_value = "validation")]
    split: SplitSelection,
    /// `dense`, `sparse` or `no-failure`.
    #[arg(long, default_value = "dense")]
    scheme: RewardScheme,
    /// `full`, `front_only` or `no_centerline`.
    #[arg(long, default_value = "full")]
    obs: Variant,
    #[arg(long, default_value_t = 1)]
    stack: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    shuffle: bool,
}

impl EpisodeArgs {
    fn config(&self) -> EpisodeConfig {
        EpisodeConfig {
            split: self.split,
            scheme: self.scheme,
            observation: BevSpec::with_variant(self.obs, self.stack),
            seed: self.seed,
            order: if self.shuffle {
                ScenarioOrder::Shuffled
            } else {
                ScenarioOrder::Sequential
            },
            render: true,
        }
    }
}

fn load_context(cli: &Cli, suite: &Path) -> Result<SuiteContext> {
    let physics = match &cli.config {
        Some(p) => PhysicsConfig::load(p)?,
        None => PhysicsConfig::default(),
    };
    let catalog = cli.catalog.as_deref().map(read_catalog).transpose()?;
    SuiteContext::load(suite, physics, catalog)
}

fn write_json(path: &Path, value: &impl serde::Serialize) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::Argument(e.to_string()))?;
    std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}

fn validate(data: &Path, mapping: Option<&str>, tolerance: f64) -> Result<()> {
    let ds = match mapping {
        Some(m) => ingest(data, &ColumnMapping::load(m)?, &IngestOptions::new("unmapped"))?,
        None => read_canonical(data)?,
    };
    println!("track\tsamples\tduration_s\ton_grid\tmax_speed_mismatch\tflagged\tok");
    let mut bad = 0;
    for track in ds.tracks.values() {
        let r = validate_track(track, tolerance);
        bad += usize::from(!r.ok);
        println!(
            "{}\t{}\t{:.1}\t{}\t{:.3}\t{}\t{}",
            r.id, r.samples, r.duration, r.on_grid, r.max_speed_mismatch, r.flagged_steps, r.ok
        );
    }
    println!("# {} tracks, {} flagged", ds.tracks.len(), bad);
    Ok(())
}

/// Suite paths relative to the suite directory when possible.
fn suite_path(path: &Path, suite_dir: &Path) -> Result<PathBuf> {
    let abs = std::fs::canonicalize(path).map_err(|e| Error::io(path, e))?;
    Ok(abs.strip_prefix(suite_dir).map(Path::to_path_buf).unwrap_or(abs))
}

fn print_report(rec: &str, kind: &str, r: &ExtractionReport) {
    println!(
        "{rec}\t{kind}\ttracks={}\tevents={}\tscenarios={}\tskipped={}",
        r.tracks_scanned,
        r.events,
        r.scenarios,
        r.skipped.len()
    );
}

fn extract(
    data: &[PathBuf],
    map_paths: &[PathBuf],
    seed: u64,
    kind: KindArg,
    mode: SplitMode,
    out: &Path,
    stats: bool,
) -> Result<()> {
    let mut maps: BTreeMap<String, (RoadMap, PathBuf)> = BTreeMap::new();
    for p in map_paths {
        let m = read_map(p)?;
        maps.insert(m.map_id.clone(), (m, p.clone()));
    }
    let out_dir = match out.parent().filter(|p| !p.as_os_str().is_empty()) {
        Some(d) => {
            std::fs::create_dir_all(d).map_err(|e| Error::io(d, e))?;
            std::fs::canonicalize(d).map_err(|e| Error::io(d, e))?
        }
        None => std::env::current_dir().map_err(|e| Error::io(".", e))?,
    };
    let mut scenarios = Vec::new();
    let mut datasets = Vec::new();
    let mut used_maps = BTreeMap::new();
    for p in data {
        let ds: TrajectoryDataset = read_canonical(p)?;
        let (map, map_path) = maps
            .get(&ds.map_id)
            .ok_or_else(|| Error::Lookup(format!("{}: map `{}` not given", p.display(), ds.map_id)))?;
        let kind = match kind {
            KindArg::Auto if map.gates.is_empty() => KindArg::LaneChange,
            KindArg::Auto => KindArg::Roundabout,
            k => k,
        };
        if kind != KindArg::Roundabout {
            let ex = extract_lane_changes(&ds, map);
            if stats {
                print_report(&ds.recording_id, "lane_change", &ex.report);
            }
            scenarios.extend(ex.scenarios);
        }
        if kind != KindArg::LaneChange {
            let ex = extract_roundabout_crossings(&ds, map);
            if stats {
                print_report(&ds.recording_id, "roundabout", &ex.report);
            }
            scenarios.extend(ex.scenarios);
        }
        used_maps.insert(ds.map_id.clone(), suite_path(map_path, &out_dir)?);
        datasets.push((ds.recording_id.clone(), suite_path(p, &out_dir)?));
    }
    let set = match mode {
        SplitMode::PerScenario => assign_split(scenarios, seed),
        SplitMode::PerRecording => assign_split_by_recording(scenarios, seed),
    };
    if stats {
        for split in [Split::Train, Split::Validation] {
            let mut per_kind: BTreeMap<&str, usize> = BTreeMap::new();
            for s in set.of_split(split) {
                *per_kind.entry(s.maneuver.kind()).or_default() += 1;
            }
            let detail: Vec<String> = per_kind.iter().map(|(k, n)| format!("{k}={n}")).collect();
            println!("{split}\t{}\t{}", set.count(split), detail.join("\t"));
        }
        println!("total\t{}", set.scenarios.len());
    }
    let suite = SuiteFile {
        set,
        maps: used_maps.into_iter().collect(),
        datasets,
    };
    write_suite(&suite, out)?;
    info!("wrote {} scenarios to {}", suite.set.scenarios.len(), out.display());
    Ok(())
}

fn render(
    ctx: &SuiteContext,
    config: EpisodeConfig,
    scenario: &str,
    steps: usize,
    policy: NamedPolicy,
    out: &Path,
) -> Result<()> {
    let names = config.observation.channels();
    let mut episode = Episode::new(ctx, config)?;
    let (mut obs, _) = episode.reset(Some(scenario))?;
    let s = episode.current_scenario().expect("episode is active");
    for _ in 0..steps {
        if episode.is_done() {
            break;
        }
        let action = policy.act(s, episode.current_world().expect("episode is active"), &ctx.physics);
        obs = episode.step(action)?.observation;
    }
    let world = episode.current_world().expect("episode is active");
    let frame = obs.ok_or_else(|| Error::Argument("rendering is disabled".into()))?;
    std::fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    let stem = format!("{scenario}_step{}", world.step_index);
    let raw = out.join(format!("{stem}.raw"));
    std::fs::write(&raw, frame.to_raw()).map_err(|e| Error::io(&raw, e))?;
    for p in frame.write_pngs(out, &stem, &names)? {
        println!("{}", p.display());
    }
    println!("{}", raw.display());
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match &cli.command {
        Command::Validate {
            data,
            mapping,
            tolerance,
        } => validate(data, mapping.as_deref(), *tolerance),
        Command::Convert {
            data,
            mapping,
            map_id,
            recording_id,
            smoothing,
            out,
        } => {
            let mut options = IngestOptions::new(map_id.clone());
            options.recording_id = recording_id.clone();
            options.smoothing_window = *smoothing;
            let ds = ingest(data, &ColumnMapping::load(mapping)?, &options)?;
            write_canonical(&ds, out)?;
            info!("wrote {} tracks to {}", ds.tracks.len(), out.display());
            Ok(())
        }
        Command::Extract {
            data,
            map,
            seed,
            kind,
            split_mode,
            out,
            stats,
        } => extract(data, map, *seed, *kind, *split_mode, out, *stats),
        Command::Eval {
            episode,
            policy,
            workers,
            render,
            out,
        } => {
            let ctx = load_context(&cli, &episode.suite)?;
            let mut config = episode.config();
            config.render = *render;
            let started = Instant::now();
            let report = evaluate(&ctx, &config, *policy, *workers)?;
            println!(
                "{} on {} ({}): {}/{} success ({:.3}), mean return {:.3}, mean length {:.1} steps, {:.1} s",
                report.policy,
                report.split,
                report.scheme,
                report.successes,
                report.n_scenarios,
                report.success_rate,
                report.mean_return,
                report.mean_length,
                started.elapsed().as_secs_f64()
            );
            for (reason, n) in &report.failures {
                println!("  {reason}: {n}");
            }
            if let Some(out) = out {
                write_json(out, &report)?;
            }
            Ok(())
        }
        Command::Serve { episode, host, port } => {
            let ctx = Arc::new(load_context(&cli, &episode.suite)?);
            let listener =
                TcpListener::bind((host.as_str(), *port)).map_err(|e| Error::io(format!("{host}:{port}"), e))?;
            serve(listener, ctx, episode.config())
        }
        Command::Render {
            episode,
            scenario,
            step,
            policy,
            out,
        } => {
            let ctx = load_context(&cli, &episode.suite)?;
            let mut config = episode.config();
            config.split = SplitSelection(None);
            render(&ctx, config, scenario, *step, *policy, out)
        }
        Command::Synth {
            out,
            seed,
            lane_change_slots,
            roundabout_vehicles,
        } => {
            let suite = generate(&SyntheticOptions {
                seed: *seed,
                lane_change_slots: *lane_change_slots,
                roundabout_vehicles: *roundabout_vehicles,
            })?;
            let path = write_synthetic(&suite, out)?;
            println!(
                "{}: {} scenarios ({} train / {} validation)",
                path.display(),
                suite.set.scenarios.len(),
                suite.set.count(Split::Train),
                suite.set.count(Split::Validation)
            );
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("CRTS_LOG", "warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            error!("{e}");
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
