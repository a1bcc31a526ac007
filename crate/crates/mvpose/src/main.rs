use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use mvpose::camera::ZOOM_RATIO;
use mvpose::config::ExperimentConfig;
use mvpose::error::Result;
use mvpose::eval::{
    accuracy_table, run_estimation_benchmark, run_gradient_check, run_selftest,
    run_tracking_benchmark, track_table,
};
use mvpose::render::{render_views, CanonicalViewSet};
use mvpose::synth::{realize_record, standardization_pool};

/// Gradient-check sample count; enough to exercise every loss term.
const GRADCHECK_POINTS: usize = 100;

/// Pool size behind persisted standardization statistics.
const STATS_POOL_SIZE: usize = 10_000;

#[derive(Parser)]
#[command(
    name = "mvpose",
    version,
    about = "Render-and-compare 6D pose estimation, refinement, and tracking"
)]
struct Cli {
    /// Experiment configuration JSON (defaults apply when omitted).
    #[arg(long, global = true, value_name = "path.json")]
    config: Option<PathBuf>,

    /// Override the seed of every random stream in the configuration.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Directory the subcommand writes its outputs into.
    #[arg(long, global = true, value_name = "dir", default_value = "./out")]
    out: PathBuf,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Render the six canonical views of the configured mesh.
    RenderViews,
    /// Generate the synthetic dataset: scenes.json, per-record rasters,
    /// boxes.csv, stats.json.
    GenDataset,
    /// Run the estimation benchmark: report.csv, errors.csv, traces.csv.
    BenchmarkEstimate,
    /// Run the tracking benchmark: track.csv.
    BenchmarkTrack,
    /// Compare analytic loss gradients against finite differences:
    /// gradcheck.csv.
    CheckGradients,
    /// Run the built-in invariant suite: selftest.csv.
    Selftest,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: &Cli) -> Result<ExitCode> {
    let mut config = match &cli.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = cli.seed {
        config.override_seed(seed);
    }
    config.validate()?;
    let out = cli.out.as_path();
    match cli.command {
        Command::RenderViews => cmd_render_views(&config, out),
        Command::GenDataset => cmd_gen_dataset(&config, out),
        Command::BenchmarkEstimate => cmd_benchmark_estimate(&config, out),
        Command::BenchmarkTrack => cmd_benchmark_track(&config, out),
        Command::CheckGradients => cmd_check_gradients(&config, out),
        Command::Selftest => cmd_selftest(out),
    }
}

fn cmd_render_views(config: &ExperimentConfig, out: &Path) -> Result<ExitCode> {
    let mesh = config.mesh.build()?;
    let views = CanonicalViewSet::standard();
    // Frame the object at a depth where it fills a good fraction of the
    // view: about 2.2 diameters puts a unit-diagonal object near 260 px.
    let z = 2.2 * mesh.diameter();
    let outputs = render_views(&mesh, &views, [0.0, 0.0, z], &config.camera)?;
    fs::create_dir_all(out)?;
    for (i, o) in outputs.iter().enumerate() {
        o.image.save_ppm(out.join(format!("view_{i}.ppm")))?;
        o.mask.save_pgm(out.join(format!("view_mask_{i}.pgm")))?;
    }
    println!("wrote {} canonical views to {}", outputs.len(), out.display());
    Ok(ExitCode::SUCCESS)
}

fn cmd_gen_dataset(config: &ExperimentConfig, out: &Path) -> Result<ExitCode> {
    let mesh = config.mesh.build()?;
    fs::create_dir_all(out)?;
    let mut records = Vec::with_capacity(config.dataset.n_samples);
    let mut boxes = String::from("x,y,w,h\n");
    for i in 0..config.dataset.n_samples {
        let realized = realize_record(&mesh, &config.camera, &config.dataset, i)?;
        realized
            .render
            .image
            .save_ppm(out.join(format!("render_{i}.ppm")))?;
        realized
            .detection_mask
            .save_pgm(out.join(format!("mask_{i}.pgm")))?;
        realized
            .observation
            .image
            .save_ppm(out.join(format!("crop_{i}.ppm")))?;
        realized
            .observation
            .mask
            .save_pgm(out.join(format!("crop_mask_{i}.pgm")))?;
        let b = realized.record.bbox;
        writeln!(boxes, "{},{},{},{}", b.x, b.y, b.w, b.h).expect("string write");
        records.push(realized.record);
    }
    fs::write(out.join("boxes.csv"), boxes)?;

    let scenes = serde_json::json!({
        "camera": config.camera,
        "params": config.dataset,
        "records": records,
    });
    fs::write(
        out.join("scenes.json"),
        format!("{}\n", serde_json::to_string_pretty(&scenes)?),
    )?;

    let stats = match &config.standardization {
        Some(stats) => stats.clone(),
        None => standardization_pool(&config.camera, &config.dataset, STATS_POOL_SIZE)?,
    };
    fs::write(
        out.join("stats.json"),
        format!("{}\n", serde_json::to_string_pretty(&stats)?),
    )?;

    println!("wrote {} records to {}", records.len(), out.display());
    Ok(ExitCode::SUCCESS)
}

fn cmd_benchmark_estimate(config: &ExperimentConfig, out: &Path) -> Result<ExitCode> {
    let (report, _rows) = run_estimation_benchmark(config, out)?;
    print!("{}", accuracy_table(&report, &config.baselines));
    println!(
        "{} records at {}:{} ratio crops, config {}",
        report.sample_count, ZOOM_RATIO.0, ZOOM_RATIO.1, report.config_digest
    );
    Ok(ExitCode::SUCCESS)
}

fn cmd_benchmark_track(config: &ExperimentConfig, out: &Path) -> Result<ExitCode> {
    let (report, _rows) = run_tracking_benchmark(config, out)?;
    print!("{}", track_table(&report));
    Ok(ExitCode::SUCCESS)
}

fn cmd_check_gradients(config: &ExperimentConfig, out: &Path) -> Result<ExitCode> {
    let (rows, all_ok) = run_gradient_check(GRADCHECK_POINTS, config.dataset.seed, out)?;
    let worst = rows.iter().map(|r| r.rel_err).fold(0.0f64, f64::max);
    println!(
        "checked {} smooth points, worst relative error {worst:.3e}",
        rows.len()
    );
    if all_ok {
        println!("gradient check passed");
        Ok(ExitCode::SUCCESS)
    } else {
        println!("gradient check FAILED");
        Ok(ExitCode::FAILURE)
    }
}

fn cmd_selftest(out: &Path) -> Result<ExitCode> {
    let (results, all_pass) = run_selftest(out)?;
    for r in &results {
        println!("{} {}", if r.pass { "pass" } else { "FAIL" }, r.name);
    }
    if all_pass {
        println!("selftest passed ({} checks)", results.len());
        Ok(ExitCode::SUCCESS)
    } else {
        println!("selftest FAILED");
        Ok(ExitCode::FAILURE)
    }
}
