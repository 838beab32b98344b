use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

use sharp_bench::batch::calibrate::{BaselineParams, Target};
use sharp_bench::batch::{self, CalibrationOptions, EvalOptions, GenPartialOptions};
use sharp_bench::degrade::HoleSpec;
use sharp_bench::obj::save_mesh;
use sharp_bench::scoring::{ScoreConfig, DEFAULT_SAMPLES};
use sharp_bench::synth;

/// Partial-scan generation and completion scoring for textured meshes.
#[derive(Parser)]
#[command(name = "sharp-bench", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Cut random holes into every mesh of a directory.
    GenPartial {
        input: PathBuf,
        output: PathBuf,
        #[command(flatten)]
        holes: HoleArgs,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 0)]
        jobs: usize,
    },
    /// Fit the shape and texture σ on ground-truth meshes and write a config.
    Calibrate {
        gt: PathBuf,
        /// Config file to write.
        #[arg(long, short, default_value = "sharp.toml")]
        config: PathBuf,
        /// Target score, `channel:baseline=score`; repeatable. Defaults to
        /// `shape:hole_filled=0.5` and `texture:hole_filled=0.5`.
        #[arg(long = "target")]
        targets: Vec<Target>,
        /// Calibrate on the first N meshes only.
        #[arg(long)]
        subset: Option<usize>,
        #[arg(long, default_value_t = DEFAULT_SAMPLES)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        no_texture: bool,
        #[command(flatten)]
        holes: HoleArgs,
        /// Vertex noise of the shape-noise baselines, meters.
        #[arg(long, default_value_t = 0.005)]
        shape_noise: f64,
        /// Radius of the local shape-noise regions, meters.
        #[arg(long, default_value_t = 0.1)]
        local_radius: f64,
        #[arg(long, default_value_t = 5)]
        local_regions: usize,
        /// Texel noise of the texture-noise baseline, RGB units.
        #[arg(long, default_value_t = 0.05)]
        texture_noise: f64,
        #[arg(long, default_value_t = 0)]
        jobs: usize,
    },
    /// Score reconstructions against ground truth.
    Eval {
        gt: PathBuf,
        recon: PathBuf,
        #[arg(long, short)]
        config: PathBuf,
        /// Output prefix; `<prefix>.csv` and `<prefix>.json` are written.
        #[arg(long, short)]
        output: PathBuf,
        /// Method name recorded in the report; defaults to the prefix stem.
        #[arg(long)]
        method: Option<String>,
        /// Override the config's sample count.
        #[arg(long)]
        samples: Option<usize>,
        /// Override the config's seed.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        no_texture: bool,
        #[arg(long, default_value_t = 0)]
        jobs: usize,
    },
    /// Compare aggregate reports and export plot data.
    Report {
        #[arg(required = true)]
        reports: Vec<PathBuf>,
        #[arg(long, short, default_value = "report")]
        output: PathBuf,
    },
    /// Write a set of synthetic textured spheres for trying the pipeline.
    Synth {
        output: PathBuf,
        #[arg(long, default_value_t = 10)]
        count: usize,
        #[arg(long, default_value_t = 40)]
        rings: usize,
        #[arg(long, default_value_t = 40)]
        segments: usize,
    },
}

#[derive(Args)]
struct HoleArgs {
    #[arg(long, default_value_t = 40)]
    holes: usize,
    /// Vertices removed per hole, as a fraction of the vertex count.
    #[arg(long, default_value_t = 0.02)]
    fraction: f64,
    /// File of eligible hole-center vertex indices, one per line.
    #[arg(long)]
    mask: Option<PathBuf>,
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::GenPartial {
            input,
            output,
            holes,
            seed,
            jobs,
        } => {
            let options = GenPartialOptions {
                holes: holes.holes,
                fraction: holes.fraction,
                seed,
                mask: holes.mask,
                jobs,
            };
            let summary = batch::gen_partial(&input, &output, &options)?;
            log::info!("wrote {} partial meshes, manifest {}", summary.rows.len(), summary.manifest.display());
            Ok(summary.failures() == 0)
        }
        Command::Calibrate {
            gt,
            config,
            targets,
            subset,
            samples,
            seed,
            no_texture,
            holes,
            shape_noise,
            local_radius,
            local_regions,
            texture_noise,
            jobs,
        } => {
            if holes.mask.is_some() {
                log::warn!("--mask is ignored by calibrate");
            }
            let options = CalibrationOptions {
                targets,
                params: BaselineParams {
                    holes: HoleSpec {
                        holes: holes.holes,
                        fraction: holes.fraction,
                        ..HoleSpec::default()
                    },
                    shape_noise,
                    local_radius,
                    local_regions,
                    texture_noise,
                },
                subset,
                samples,
                seed,
                texture: !no_texture,
                jobs,
            };
            let outcome = batch::calibrate(&gt, &config, &options)?;
            for (b, d) in &outcome.measurements {
                println!("{b}: shape {:e}, texture {:e}", d.shape, d.texture);
            }
            println!(
                "sigma_shape = {:e}, sigma_texture = {:e} -> {}",
                outcome.config.sigma_shape,
                outcome.config.sigma_texture,
                config.display()
            );
            Ok(true)
        }
        Command::Eval {
            gt,
            recon,
            config,
            output,
            method,
            samples,
            seed,
            no_texture,
            jobs,
        } => {
            let mut score_config = ScoreConfig::load(&config)?;
            if let Some(n) = samples {
                score_config.samples = n;
            }
            if let Some(s) = seed {
                score_config.seed = s;
            }
            if no_texture {
                score_config.texture = false;
            }
            let method = match method {
                Some(m) => m,
                None => output
                    .file_stem()
                    .and_then(|s| s.to_str())
                    .context("cannot derive a method name from the output path; pass --method")?
                    .to_string(),
            };
            let options = EvalOptions {
                config: score_config,
                method,
                jobs,
            };
            let out = batch::eval(&gt, &recon, &output, &options)?;
            let r = &out.report;
            println!(
                "{}: {} samples, overall {:.2} ± {:.2} %",
                r.method, r.n_samples, r.mean_percent["overall"], r.std_percent["overall"]
            );
            if !r.flagged.is_empty() {
                eprintln!("flagged samples: {}", r.flagged.join(", "));
            }
            Ok(r.flagged.is_empty())
        }
        Command::Report { reports, output } => {
            let out = batch::report(&reports, &output)?;
            print!("{}", out.table);
            Ok(true)
        }
        Command::Synth {
            output,
            count,
            rings,
            segments,
        } => {
            std::fs::create_dir_all(&output)?;
            for i in 0..count {
                let radius = 0.8 + 0.4 * i as f64 / count.max(1) as f64;
                let texture = Arc::new(synth::pattern_texture(64, 64, i as u64));
                let mesh = synth::uv_sphere_with_texture(rings, segments, radius, texture);
                save_mesh(&mesh, &output.join(format!("sphere_{i:03}.obj")))?;
            }
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
