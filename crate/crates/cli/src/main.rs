use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use rastmap::io::{self, Difficulty, MaskFormat};
use rastmap::matcher::{assign, cost_matrix};
use rastmap::metrics::{evaluate, EvalScene, SceneVectors};
use rastmap::perturb::perturb_scene;
use rastmap::pipeline::{fidelity, rasterize_and_vectorize};
use rastmap::postprocess::vectorize;
use rastmap::raster::rasterize_scene;
use rastmap::{Error, Point, RunConfig, Scene};

#[derive(Parser)]
#[command(name = "rastmap", version, about = "Raster/vector conversion, matching and evaluation for HD-map elements")]
struct Cli {
    /// Seed for synthetic data and perturbations (overrides the config).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for scene-level parallelism.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Reject unknown keys in scene files.
    #[arg(long, global = true)]
    strict: bool,
    /// TOML or JSON run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Pgm,
    Png,
}

#[derive(Clone, Copy, ValueEnum)]
enum DifficultyArg {
    Easy,
    Hard,
}

#[derive(Subcommand)]
enum Command {
    /// Rasterize a scene into instance masks.
    Rasterize {
        scene: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
        #[arg(long, value_enum, default_value = "pgm")]
        format: FormatArg,
    },
    /// Trace and post-process a mask directory into a scene file.
    Vectorize {
        mask_dir: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Ego position "x,y" recorded in the output scene.
        #[arg(long, default_value = "0,0")]
        ego: String,
    },
    /// Cost matrix and optimal assignment between two mask directories.
    Match {
        preds: PathBuf,
        gts: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Evaluate predicted scenes against ground truth (files or directories).
    Eval {
        preds: PathBuf,
        gts: PathBuf,
        /// Comma-separated Chamfer thresholds in meters.
        #[arg(long)]
        thresholds: Option<String>,
        /// Predicted mask directory (per scene stem when evaluating directories),
        /// enabling IoU.
        #[arg(long)]
        pred_masks: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Rasterize, vectorize and report per-instance Chamfer distances.
    Roundtrip {
        scene: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Perturb a scene into synthetic predicted masks.
    Perturb {
        scene: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
        #[arg(long, value_enum, default_value = "pgm")]
        format: FormatArg,
    },
    /// Generate synthetic scenes.
    Gen {
        #[arg(long, default_value_t = 1)]
        count: usize,
        #[arg(long, value_enum, default_value = "easy")]
        difficulty: DifficultyArg,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Render a scene as SVG.
    Svg {
        scene: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

struct Failure {
    code: u8,
    kind: String,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Io { .. }
            | Error::Parse { .. }
            | Error::Schema { .. }
            | Error::UnknownClass(_)
            | Error::Config(_)
            | Error::InvalidGrid(_) => 2,
            _ => 3,
        };
        Failure {
            code,
            kind: e.code().to_string(),
            message: e.to_string(),
        }
    }
}

fn usage(message: impl Into<String>) -> Failure {
    Failure {
        code: 2,
        kind: "usage".into(),
        message: message.into(),
    }
}

type Res<T> = Result<T, Failure>;

fn emit(json: &str, out: Option<&Path>) -> Res<()> {
    match out {
        Some(p) => io::write_atomic(p, json.as_bytes()).map_err(Failure::from),
        None => {
            use std::io::Write;
            let mut stdout = std::io::stdout().lock();
            match writeln!(stdout, "{}", json.trim_end()) {
                Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(Error::io("<stdout>", e).into()),
                _ => Ok(()),
            }
        }
    }
}

fn to_json(v: &impl Serialize) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serializable");
    s.push('\n');
    s
}

fn format_of(f: FormatArg) -> MaskFormat {
    match f {
        FormatArg::Pgm => MaskFormat::Pgm,
        FormatArg::Png => MaskFormat::Png,
    }
}

fn parse_pair(s: &str) -> Res<Point> {
    let v: Vec<f64> = s
        .split(',')
        .map(|t| t.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| usage(format!("expected \"x,y\", got {s:?}")))?;
    match v[..] {
        [x, y] => Ok(Point::new(x, y)),
        _ => Err(usage(format!("expected \"x,y\", got {s:?}"))),
    }
}

/// Scene files in a directory, sorted by name, or the single file given.
fn scene_paths(p: &Path) -> Res<Vec<PathBuf>> {
    if !p.is_dir() {
        if !p.exists() {
            return Err(Error::io(p, std::io::Error::from(std::io::ErrorKind::NotFound)).into());
        }
        return Ok(vec![p.to_path_buf()]);
    }
    let mut out: Vec<PathBuf> = std::fs::read_dir(p)
        .map_err(|e| Error::io(p, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    out.sort();
    Ok(out)
}

fn run(cli: Cli) -> Res<()> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.perturb.seed = seed;
    }
    let strict = cli.strict;
    match cli.command {
        Command::Rasterize { scene, out_dir, format } => {
            let scene = io::load_scene(&scene, strict)?;
            let masks = rasterize_scene(&scene, &cfg.raster)?;
            io::write_masks(&out_dir, &scene.grid, &masks, None, format_of(format))?;
            log::info!("wrote {} masks to {}", masks.len(), out_dir.display());
        }
        Command::Vectorize { mask_dir, out, ego } => {
            let ego = parse_pair(&ego)?;
            let (grid, masks, _) = io::read_masks(&mask_dir)?;
            let vectors = vectorize(&masks, &grid, &cfg.trace, &cfg.postprocess);
            let scene = Scene::new(grid, vectors, ego)?;
            io::save_scene(&scene, &out)?;
        }
        Command::Match { preds, gts, out } => {
            let (pg, preds) = io::read_predictions(&preds)?;
            let (gg, gts, _) = io::read_masks(&gts)?;
            if pg != gg {
                return Err(Error::Config("prediction and ground-truth grids differ".into()).into());
            }
            let costs = cost_matrix(&preds, &gts, &cfg.matcher.weights, cfg.matcher.dilation)?;
            let assignment = assign(&costs);
            let total = assignment.total_cost(&costs);
            emit(
                &to_json(&json!({"costs": costs, "assignment": assignment, "total_cost": total})),
                out.as_deref(),
            )?;
        }
        Command::Eval {
            preds,
            gts,
            thresholds,
            pred_masks,
            out,
        } => {
            if let Some(t) = thresholds {
                cfg.eval.cd_thresholds = t
                    .split(',')
                    .map(|v| v.trim().parse::<f64>())
                    .collect::<Result<_, _>>()
                    .map_err(|_| usage(format!("bad --thresholds {t:?}")))?;
                cfg.eval.validate()?;
            }
            let pred_files = scene_paths(&preds)?;
            let gt_files = scene_paths(&gts)?;
            if pred_files.len() != gt_files.len() {
                return Err(usage(format!(
                    "{} prediction scenes vs {} ground-truth scenes",
                    pred_files.len(),
                    gt_files.len()
                )));
            }
            let dir_mode = preds.is_dir();
            let scenes = pred_files
                .iter()
                .zip(&gt_files)
                .map(|(p, g)| {
                    let ps = io::load_scene(p, strict)?;
                    let gs = io::load_scene(g, strict)?;
                    let pred_masks = match &pred_masks {
                        Some(dir) => {
                            let d = if dir_mode { dir.join(p.file_stem().unwrap()) } else { dir.clone() };
                            Some(io::read_masks(&d)?.1)
                        }
                        None => None,
                    };
                    let gt_masks = match pred_masks {
                        Some(_) => Some(rasterize_scene(&gs, &cfg.raster)?),
                        None => None,
                    };
                    Ok(EvalScene {
                        vectors: SceneVectors {
                            gts: gs.gt_vectors,
                            preds: ps.gt_vectors,
                        },
                        gt_masks,
                        pred_masks,
                    })
                })
                .collect::<Result<Vec<_>, Error>>()?;
            let report = evaluate(&scenes, &cfg.eval)?;
            emit(&report.to_json(), out.as_deref())?;
        }
        Command::Roundtrip { scene, out } => {
            let files = scene_paths(&scene)?;
            let reports = files
                .par_iter()
                .map(|f| {
                    let s = io::load_scene(f, strict)?;
                    let (_, outputs) = rasterize_and_vectorize(&s, &cfg)?;
                    let inst = fidelity(&s.gt_vectors, &outputs, &cfg.eval);
                    let max_cd = inst.iter().filter_map(|i| i.cd).fold(0.0, f64::max);
                    let missing = inst.iter().filter(|i| i.cd.is_none()).count();
                    Ok(json!({
                        "scene": f.display().to_string(),
                        "outputs": outputs.len(),
                        "max_cd": max_cd,
                        "missing": missing,
                        "instances": inst,
                    }))
                })
                .collect::<Result<Vec<_>, Error>>()?;
            let doc = if reports.len() == 1 && !scene.is_dir() {
                reports.into_iter().next().unwrap()
            } else {
                json!(reports)
            };
            emit(&to_json(&doc), out.as_deref())?;
        }
        Command::Perturb { scene, out_dir, format } => {
            let s = io::load_scene(&scene, strict)?;
            let preds = perturb_scene(&s, &cfg.perturb, &cfg.raster)?;
            io::write_predictions(&out_dir, &s.grid, &preds, format_of(format))?;
        }
        Command::Gen {
            count,
            difficulty,
            out_dir,
        } => {
            let difficulty = match difficulty {
                DifficultyArg::Easy => Difficulty::Easy,
                DifficultyArg::Hard => Difficulty::Hard,
            };
            let scenes = io::gen_synthetic(cfg.perturb.seed, count, difficulty);
            scenes
                .par_iter()
                .enumerate()
                .try_for_each(|(k, s)| io::save_scene(s, &out_dir.join(format!("scene_{k:04}.json"))))?;
        }
        Command::Svg { scene, out } => {
            let s = io::load_scene(&scene, strict)?;
            io::write_atomic(&out, io::scene_to_svg(&s).as_bytes())?;
        }
    }
    Ok(())
}

fn fail(f: &Failure) -> ExitCode {
    eprintln!("{}", json!({"error": f.kind, "message": f.message}));
    ExitCode::from(f.code)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return ExitCode::SUCCESS;
            }
            return fail(&usage(e.to_string().trim().to_string()));
        }
    };
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(j) = cli.jobs {
        if j == 0 {
            return fail(&usage("--jobs must be at least 1"));
        }
        pool = pool.num_threads(j);
    }
    let pool = match pool.build() {
        Ok(p) => p,
        Err(e) => return fail(&usage(e.to_string())),
    };
    match pool.install(|| run(cli)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => fail(&f),
    }
}
