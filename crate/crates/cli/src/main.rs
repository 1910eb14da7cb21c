use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use nalgebra::Point3;

use dynamap::evaluation::{absolute_trajectory_error, ate_series};
use dynamap::evaluation::{
    format_cell_checks, relative_pose_error, render_results_csv, render_results_table, reproduce_tables, ErrorSeries,
    MetricStats, ResultsRow, DEFAULT_RPE_DELTA,
};
use dynamap::kv::KeyValues;
use dynamap::octomap::{format_ply, format_voxel_points, parse_voxel_points, project_voxels};
use dynamap::odometry::CameraConfig;
use dynamap::pipeline::{run_pipeline, PipelineConfig};
use dynamap::synthbench::{generate_scene, write_as_tum, SceneSpec};
use dynamap::tum_io::{parse_trajectory_file, Trajectory, DEFAULT_MAX_DIFF};

#[derive(Parser)]
#[command(
    name = "dynamap",
    version,
    about = "RGB-D odometry and semantic mapping in dynamic scenes"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the pipeline on a TUM-layout dataset.
    Run(RunArgs),
    /// ATE/RPE of estimated trajectories against ground truth.
    Eval(EvalArgs),
    /// Convert a voxel point file to PLY or text.
    MapExport(MapExportArgs),
    /// Project a voxel point file onto a 2-D PGM grid.
    Costmap(CostmapArgs),
    /// Render a synthetic TUM-layout sequence.
    Synth(SynthArgs),
    /// Recompute the improvement columns of the bundled published tables.
    ReproduceTables,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    dataset: PathBuf,
    #[arg(long)]
    masks: Option<PathBuf>,
    /// Camera file (`fx`, `fy`, `cx`, `cy`, `depth_scale`).
    #[arg(long)]
    intrinsics: Option<PathBuf>,
    /// Key-value file overriding pipeline defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    no_dynamic_filter: bool,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    gt: PathBuf,
    /// Estimated trajectory; repeat for several sequences.
    #[arg(long, required = true)]
    est: Vec<PathBuf>,
    /// Baseline trajectory per `--est`, enabling the improvement columns.
    #[arg(long)]
    baseline: Vec<PathBuf>,
    /// RPE interval in seconds.
    #[arg(long, default_value_t = DEFAULT_RPE_DELTA)]
    delta: f64,
    #[arg(long, default_value_t = DEFAULT_MAX_DIFF)]
    max_diff: f64,
    /// Directory for CSV tables and the ATE error series.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum MapFormat {
    Ply,
    Txt,
}

#[derive(Args)]
struct MapExportArgs {
    /// Voxel point file written by `run`.
    #[arg(long)]
    map: PathBuf,
    #[arg(long, value_enum, default_value_t = MapFormat::Ply)]
    format: MapFormat,
    #[arg(long)]
    out: PathBuf,
}

/// World axis treated as "up" when projecting to the ground plane.
#[derive(Clone, Copy, ValueEnum)]
enum UpAxis {
    /// Camera convention of the first frame (y points down).
    NegY,
    Z,
}

#[derive(Args)]
struct CostmapArgs {
    #[arg(long)]
    map: PathBuf,
    #[arg(long, value_enum, default_value_t = UpAxis::NegY)]
    up: UpAxis,
    #[arg(long, default_value_t = 0.05)]
    resolution: f64,
    #[arg(long, allow_hyphen_values = true, default_value_t = -1.0)]
    z_min: f64,
    #[arg(long, allow_hyphen_values = true, default_value_t = 1.0)]
    z_max: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 100)]
    frames: usize,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    /// Omit the moving object.
    #[arg(long = "static")]
    static_scene: bool,
    #[arg(long, default_value_t = 0.0)]
    depth_noise: f64,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(a) => cmd_run(a),
        Command::Eval(a) => cmd_eval(a),
        Command::MapExport(a) => cmd_map_export(a),
        Command::Costmap(a) => cmd_costmap(a),
        Command::Synth(a) => cmd_synth(a),
        Command::ReproduceTables => cmd_reproduce_tables(),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn write(path: &Path, text: impl AsRef<[u8]>) -> Result<()> {
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn cmd_run(a: RunArgs) -> Result<()> {
    let mut cfg = PipelineConfig::new(&a.dataset)?;
    if let Some(p) = &a.intrinsics {
        cfg.camera = CameraConfig::load(p)?;
    }
    if let Some(p) = &a.config {
        cfg.apply_overrides(&KeyValues::load(p)?)?;
    }
    cfg.masks = a.masks.or(cfg.masks);
    if a.no_dynamic_filter {
        cfg.dynamic_filter = false;
    }
    if let Some(s) = a.seed {
        cfg.seed = s;
    }
    let report = run_pipeline(&cfg)?;
    report.write(&a.out)?;
    if let Some(map) = &report.map {
        let voxels = map.occupied_voxels();
        write(&a.out.join("map.txt"), format_voxel_points(&voxels))?;
        write(&a.out.join("map.ply"), format_ply(&voxels))?;
    }
    println!(
        "{} frames, {} lost, {} keyframes, {} occupied voxels -> {}",
        report.frames.len(),
        report.lost_frames(),
        report.map_summary.keyframes,
        report.map_summary.occupied_voxels,
        a.out.display()
    );
    Ok(())
}

struct Evaluated {
    ate: MetricStats<f64>,
    rpe_t: MetricStats<f64>,
    rpe_r: MetricStats<f64>,
    ate_series: ErrorSeries<f64>,
}

fn evaluate(est: &Trajectory<f64>, gt: &Trajectory<f64>, delta: f64, max_diff: f64) -> Result<Evaluated> {
    let (rpe_t, rpe_r) = relative_pose_error(est, gt, delta, max_diff)?;
    Ok(Evaluated {
        ate: absolute_trajectory_error(est, gt, max_diff)?,
        rpe_t,
        rpe_r,
        ate_series: ate_series(est, gt, max_diff)?,
    })
}

fn sequence_name(p: &Path) -> String {
    p.file_stem()
        .map_or_else(|| p.display().to_string(), |s| s.to_string_lossy().into_owned())
}

fn cmd_eval(a: EvalArgs) -> Result<()> {
    if !a.baseline.is_empty() && a.baseline.len() != a.est.len() {
        bail!(
            "--baseline must be given once per --est ({} vs {})",
            a.baseline.len(),
            a.est.len()
        );
    }
    let gt = parse_trajectory_file(&a.gt)?;
    let mut ate_rows = Vec::new();
    let mut rpe_t_rows = Vec::new();
    let mut rpe_r_rows = Vec::new();
    for (i, est_path) in a.est.iter().enumerate() {
        let est = evaluate(&parse_trajectory_file(est_path)?, &gt, a.delta, a.max_diff)
            .with_context(|| format!("evaluating {}", est_path.display()))?;
        let base = match a.baseline.get(i) {
            Some(p) => Some(evaluate(&parse_trajectory_file(p)?, &gt, a.delta, a.max_diff)?),
            None => None,
        };
        let name = sequence_name(est_path);
        let row = |f: fn(&Evaluated) -> MetricStats<f64>| ResultsRow {
            sequence: name.clone(),
            baseline: base.as_ref().map_or(f(&est), f),
            filtered: f(&est),
        };
        ate_rows.push(row(|e| e.ate));
        rpe_t_rows.push(row(|e| e.rpe_t));
        rpe_r_rows.push(row(|e| e.rpe_r));
        if let Some(dir) = &a.out {
            std::fs::create_dir_all(dir)?;
            est.ate_series.write(dir.join(format!("{name}.ate.txt")))?;
        }
    }
    let tables = [
        ("Absolute trajectory error", "m", "ate", &ate_rows),
        (
            "Relative pose error, translational drift",
            "m/s",
            "rpe_translational",
            &rpe_t_rows,
        ),
        (
            "Relative pose error, rotational drift",
            "deg/s",
            "rpe_rotational",
            &rpe_r_rows,
        ),
    ];
    for (title, unit, key, rows) in tables {
        if a.baseline.is_empty() {
            println!("{title} [{unit}]");
            println!(
                "{:<24} {:>10} {:>10} {:>10} {:>10}",
                "Sequence", "RMSE", "Mean", "Median", "S.D."
            );
            for r in rows.iter() {
                let s = r.filtered;
                println!(
                    "{:<24} {:>10.6} {:>10.6} {:>10.6} {:>10.6}",
                    r.sequence, s.rmse, s.mean, s.median, s.sd
                );
            }
            println!();
        } else {
            println!("{}", render_results_table(title, unit, rows));
        }
        if let Some(dir) = &a.out {
            write(&dir.join(format!("{key}.csv")), render_results_csv(rows))?;
        }
    }
    Ok(())
}

fn cmd_map_export(a: MapExportArgs) -> Result<()> {
    let text = std::fs::read_to_string(&a.map).with_context(|| format!("reading {}", a.map.display()))?;
    let voxels = parse_voxel_points(&text, &a.map)?;
    let out = match a.format {
        MapFormat::Ply => format_ply(&voxels),
        MapFormat::Txt => format_voxel_points(&voxels),
    };
    write(&a.out, out)?;
    println!("{} voxels -> {}", voxels.len(), a.out.display());
    Ok(())
}

fn cmd_costmap(a: CostmapArgs) -> Result<()> {
    let text = std::fs::read_to_string(&a.map).with_context(|| format!("reading {}", a.map.display()))?;
    let mut voxels = parse_voxel_points(&text, &a.map)?;
    if let UpAxis::NegY = a.up {
        // (x, y, z) -> (x, z, -y): ground plane x/forward, height -y
        for v in &mut voxels {
            let c = v.center;
            v.center = Point3::new(c.x, c.z, -c.y);
        }
    }
    let grid = project_voxels(&voxels, a.resolution, a.z_min, a.z_max)?;
    write(&a.out, grid.to_pgm())?;
    println!(
        "{}x{} grid, {} occupied cells -> {}",
        grid.width,
        grid.height,
        grid.occupied_count(),
        a.out.display()
    );
    Ok(())
}

fn cmd_synth(a: SynthArgs) -> Result<()> {
    let mut spec = if a.static_scene {
        SceneSpec::static_room(a.frames)
    } else {
        SceneSpec::moving_object(a.frames)
    };
    spec.seed = a.seed;
    spec.depth_noise_sigma = a.depth_noise;
    let seq = generate_scene(&spec)?;
    let layout = write_as_tum(&seq, &a.out)?;
    println!("{} frames -> {}", seq.frames.len(), layout.root.display());
    Ok(())
}

fn cmd_reproduce_tables() -> Result<()> {
    let checks = reproduce_tables()?;
    print!("{}", format_cell_checks(&checks));
    let bad = checks.iter().filter(|c| !c.within_tolerance()).count();
    println!("{} cells, {} outside tolerance", checks.len(), bad);
    if bad > 0 {
        bail!("{bad} improvement cells deviate beyond tolerance");
    }
    Ok(())
}
