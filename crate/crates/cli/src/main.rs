//! `scenefit` command line: validate scene files, augment a corpus, train
//! per-group models, score placements and run the removal benchmark.

mod config;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

use scenefit::augment::{augment_training_rooms, build_augmented_dataset};
use scenefit::io::{self, Manifest, BUNDLE_FORMAT};
use scenefit::model::train_group;
use scenefit::placement::{probability_map, removal_experiment, top_k, PlacementScorer};
use scenefit::{FurnitureGroup, Scene};

use config::RunConfig;

/// Bad invocation or configuration (exit code 1).
#[derive(Debug, thiserror::Error)]
#[error("{0}")]
pub struct Usage(pub String);

#[derive(Parser)]
#[command(name = "scenefit", version, about = "Score and propose furniture placements from learned room context")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// TOML run configuration.
    #[arg(long, global = true, env = "SCENEFIT_CONFIG")]
    config: Option<PathBuf>,
    /// Master seed; overrides the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Comma-separated furniture groups; overrides the config.
    #[arg(long, global = true, value_delimiter = ',')]
    groups: Option<Vec<String>>,
    /// Grid cell size in meters; overrides the config.
    #[arg(long, global = true)]
    grid_cell: Option<f64>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Parse and schema-check scene files or directories of them.
    Validate { paths: Vec<PathBuf> },
    /// Write an augmented corpus and its stage report to --out.
    Augment { corpus: PathBuf },
    /// Train one model bundle per group into --out.
    Train { corpus: PathBuf },
    /// Heatmap and top-k proposals for one object in a scene.
    Place {
        /// A bundle directory, or a directory holding one bundle per group.
        models: PathBuf,
        scene: PathBuf,
        group: String,
        /// Object size as `length,width,height` in meters.
        #[arg(long, value_delimiter = ',', required = true)]
        dims: Vec<f64>,
        #[arg(long, default_value_t = 5)]
        k: usize,
    },
    /// K-fold object-removal benchmark; report goes to --out.
    Evaluate { corpus: PathBuf },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &anyhow::Error) -> u8 {
    use scenefit::Error as E;
    for cause in e.chain() {
        if cause.downcast_ref::<Usage>().is_some() {
            return 1;
        }
        if let Some(se) = cause.downcast_ref::<E>() {
            return match se {
                E::InvalidParam(_) => 1,
                E::Schema { .. }
                | E::Parse { .. }
                | E::InvalidScene { .. }
                | E::Geometry(_)
                | E::InsufficientData(_)
                | E::OutsideFloor { .. } => 2,
                _ => 3,
            };
        }
    }
    3
}

fn run(cli: Cli) -> Result<()> {
    let g = cli.global;
    let mut cfg = match &g.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(s) = g.seed {
        cfg.seed = s;
    }
    if let Some(list) = &g.groups {
        cfg.groups = list
            .iter()
            .map(|s| s.trim().parse::<FurnitureGroup>().map_err(|e| Usage(format!("--groups: {e}"))))
            .collect::<Result<_, _>>()?;
    }
    if let Some(c) = g.grid_cell {
        cfg.grid.cell_size = c;
    }
    let cfg = cfg.finish()?;
    let out = || g.out.clone().ok_or_else(|| Usage("this command needs --out".into()));
    match cli.command {
        Command::Validate { paths } => validate(&paths),
        Command::Augment { corpus } => augment(&corpus, &out()?, &cfg),
        Command::Train { corpus } => train(&corpus, &out()?, &cfg),
        Command::Place { models, scene, group, dims, k } => {
            let group: FurnitureGroup = group.parse().map_err(|e| Usage(format!("{e}")))?;
            if dims.len() != 3 {
                return Err(Usage(format!("--dims takes length,width,height, got {} values", dims.len())).into());
            }
            place(&models, &scene, group, [dims[0], dims[1], dims[2]], k, g.out.as_deref(), g.grid_cell, &cfg)
        }
        Command::Evaluate { corpus } => evaluate(&corpus, &out()?, &cfg),
    }
}

fn validate(paths: &[PathBuf]) -> Result<()> {
    if paths.is_empty() {
        return Err(Usage("validate needs at least one path".into()).into());
    }
    for p in paths {
        let files = if p.is_dir() { io::scene_paths(p)? } else { vec![p.clone()] };
        for f in files {
            match io::load_scene(&f) {
                Ok(s) => println!(
                    "ok {}: scene `{}`, {} walls, {} objects",
                    f.display(),
                    s.id(),
                    s.walls().len(),
                    s.objects().len()
                ),
                Err(scenefit::Error::Schema { source_name, violations }) => {
                    eprintln!("schema error in {source_name}:");
                    for v in &violations {
                        eprintln!("  {v}");
                    }
                    return Err(scenefit::Error::Schema { source_name, violations }.into());
                }
                Err(e @ scenefit::Error::Io(_)) => {
                    return Err(anyhow::Error::new(e).context(format!("io error reading {}", f.display())))
                }
                Err(e) => return Err(e.into()),
            }
        }
    }
    Ok(())
}

fn load_corpus(dir: &Path) -> Result<Vec<Scene>> {
    let scenes = io::load_corpus(dir).with_context(|| format!("loading corpus {}", dir.display()))?;
    if scenes.is_empty() {
        return Err(scenefit::Error::InsufficientData(format!("no scene files in {}", dir.display())).into());
    }
    Ok(scenes)
}

fn augment(corpus: &Path, out: &Path, cfg: &RunConfig) -> Result<()> {
    let scenes = load_corpus(corpus)?;
    let aug = build_augmented_dataset(&scenes, &cfg.augment)?;
    for s in &aug.rooms {
        io::save_scene(&out.join(format!("{}.json", s.id())), s)?;
    }
    let text = aug.report.to_text();
    io::write_atomic(&out.join("stage_report.txt"), text.as_bytes())?;
    io::write_atomic(&out.join("stage_report.json"), serde_json::to_string_pretty(&aug.report)?.as_bytes())?;
    print!("{text}");
    Ok(())
}

fn groups_to_run(cfg: &RunConfig, scenes: &[Scene]) -> Vec<FurnitureGroup> {
    if !cfg.groups.is_empty() {
        return cfg.groups.clone();
    }
    FurnitureGroup::ALL.into_iter().filter(|g| scenes.iter().flat_map(|s| s.objects()).any(|o| o.group == *g)).collect()
}

fn training_rooms(rooms: &[Arc<Scene>], cfg: &RunConfig, stream: u64) -> Result<Vec<Arc<Scene>>> {
    Ok(if cfg.augment_training { augment_training_rooms(rooms, &cfg.augment, stream)? } else { rooms.to_vec() })
}

fn train(corpus: &Path, out: &Path, cfg: &RunConfig) -> Result<()> {
    let scenes = load_corpus(corpus)?;
    let fingerprint = io::dataset_fingerprint(&scenes);
    let rooms: Vec<Arc<Scene>> = scenes.iter().cloned().map(Arc::new).collect();
    let rooms = training_rooms(&rooms, cfg, 0)?;
    let mut trained = 0;
    for group in groups_to_run(cfg, &scenes) {
        let (model, report) = match train_group(&rooms, group, &cfg.model, &cfg.features, &cfg.train) {
            Ok(r) => r,
            Err(scenefit::Error::InsufficientData(why)) => {
                log::warn!("{group} skipped: {why}");
                eprintln!("warning: {group} skipped: {why}");
                continue;
            }
            Err(e) => return Err(e.into()),
        };
        let dir = out.join(group.label());
        let manifest = Manifest {
            format: BUNDLE_FORMAT,
            group,
            dims: cfg.model.clone(),
            feature_params: cfg.features,
            support_height_max: cfg.train.support_height_max,
            train: cfg.train.clone(),
            seed: cfg.seed,
            dataset_fingerprint: fingerprint.clone(),
            training_rooms: rooms.len(),
        };
        io::save_bundle(&dir, &model, &manifest)?;
        io::write_atomic(&dir.join("losses.csv"), io::loss_csv(&report).as_bytes())?;
        println!(
            "{group}: siamese loss {:.4}, autoencoder loss {:.6} -> {}",
            report.siamese.last().copied().unwrap_or(f64::NAN),
            report.autoencoder.last().copied().unwrap_or(f64::NAN),
            dir.display()
        );
        trained += 1;
    }
    if trained == 0 {
        return Err(scenefit::Error::InsufficientData("no group could be trained".into()).into());
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn place(
    models: &Path,
    scene: &Path,
    group: FurnitureGroup,
    dims: [f64; 3],
    k: usize,
    out: Option<&Path>,
    grid_cell: Option<f64>,
    cfg: &RunConfig,
) -> Result<()> {
    let bundle = if models.join("manifest.json").is_file() { models.to_path_buf() } else { models.join(group.label()) };
    let (model, _) = io::load_bundle(&bundle).with_context(|| format!("loading bundle {}", bundle.display()))?;
    if model.group != group {
        return Err(Usage(format!("bundle {} is for {}, not {group}", bundle.display(), model.group)).into());
    }
    if dims.iter().any(|d| !(d.is_finite() && *d > 0.0)) {
        return Err(Usage(format!("--dims must be positive, got {dims:?}")).into());
    }
    let scene = io::load_scene(scene)?;
    let mut grid = scenefit::placement::GridOptions::for_model(&model);
    grid = grid.with_cell_size(grid_cell.unwrap_or(cfg.grid.cell_size));
    let map = probability_map(&model as &dyn PlacementScorer, &scene, group, dims, &grid)?;
    let radius = cfg.evaluate.nms_radius.unwrap_or((dims[0].hypot(dims[1])) / 2.0);
    let props = top_k(&map, k, radius)?;
    if let Some(out) = out {
        io::write_atomic(&out.join("heatmap.csv"), io::heatmap_csv(&map).as_bytes())?;
        io::write_atomic(&out.join("heatmap.pgm"), &io::heatmap_pgm(&map))?;
    }
    println!("rank, x, y, P");
    for (i, p) in props.iter().enumerate() {
        println!("{}, {:.3}, {:.3}, {:.6}", i + 1, p.point.x, p.point.y, p.prob);
    }
    Ok(())
}

fn evaluate(corpus: &Path, out: &Path, cfg: &RunConfig) -> Result<()> {
    let scenes = load_corpus(corpus)?;
    let groups = groups_to_run(cfg, &scenes);
    let rooms: Vec<Arc<Scene>> = scenes.iter().cloned().map(Arc::new).collect();
    let train = |fold: usize, tr: &[Arc<Scene>], group: FurnitureGroup| -> scenefit::Result<Box<dyn PlacementScorer>> {
        let rooms =
            if cfg.augment_training { augment_training_rooms(tr, &cfg.augment, fold as u64)? } else { tr.to_vec() };
        let (model, _) = train_group(&rooms, group, &cfg.model, &cfg.features, &cfg.train)?;
        Ok(Box::new(model))
    };
    let report = removal_experiment(&rooms, &groups, &train, &cfg.eval_options())?;
    let text = report.to_text();
    io::write_atomic(&out.join("report.txt"), text.as_bytes())?;
    io::write_atomic(&out.join("report.json"), serde_json::to_string_pretty(&report)?.as_bytes())?;
    print!("{text}");
    Ok(())
}
