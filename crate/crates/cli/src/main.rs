//! Command-line front end: exposure synthesis, masks, fusion, HDR
//! merging, metrics, dataset generation and seeded experiments.

use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use lumafuse::config::{BrightRange, ExposureConfig, PipelineConfig};
use lumafuse::crf::Crf;
use lumafuse::exposedness::compute_masks;
use lumafuse::fuse::{hdr_merge, mef_fuse};
use lumafuse::harness::camera::{make_triplet, NoiseModel};
use lumafuse::harness::experiment::{run_experiment, ExperimentConfig};
use lumafuse::harness::pipeline::{restore_pipeline, PipelineOptions};
use lumafuse::harness::refine::refiner_by_name;
use lumafuse::harness::scene::{generate_scene, SceneSpec};
use lumafuse::image::{LdrImage, RadianceImage, RealImage};
use lumafuse::metrics::{color_angle_loss, mef_ssim, mse, psnr, ssim};
use lumafuse::pfm;
use lumafuse::synth::{synthesize_bright_full, synthesize_dark_full, WeightMode};

#[derive(Parser)]
#[command(
    name = "lumafuse",
    about = "Synthesize darker/brighter exposures from one image, fuse or merge them, and verify with a synthetic camera"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Shared exposure/CRF flags.
#[derive(Args)]
struct ExposureArgs {
    /// Camera response: `gamma:<value>` or a path to a 256-line r,g,b CSV.
    #[arg(long)]
    crf: Option<String>,
    /// Mid exposure time (seconds, relative).
    #[arg(long, default_value_t = 1.0)]
    dt1: f64,
    /// Adjacent exposure ratio: dt0 = dt1/ratio, dt2 = dt1*ratio.
    #[arg(long, default_value_t = 4.0)]
    ratio: f64,
    /// Reliability weight flavour: verbatim | smooth.
    #[arg(long, default_value = "verbatim")]
    mode: String,
    /// Optional TOML config with keys dt0,dt1,dt2,xi_u,xi_l,gamma|crf_path.
    #[arg(long)]
    config: Option<PathBuf>,
}

struct ResolvedExposure {
    crf: Crf,
    exposure: ExposureConfig,
    bright: BrightRange,
    mode: WeightMode,
}

impl ExposureArgs {
    fn resolve(&self) -> Result<ResolvedExposure> {
        let mode: WeightMode = self
            .mode
            .parse()
            .map_err(|e: String| anyhow::anyhow!(e))?;
        if let Some(path) = &self.config {
            let file = PipelineConfig::from_path(path)
                .with_context(|| format!("reading config {}", path.display()))?;
            let crf = match &self.crf {
                Some(spec) => Crf::from_spec(spec)?,
                None => file.crf()?,
            };
            return Ok(ResolvedExposure {
                crf,
                exposure: file.exposure()?,
                bright: file.bright_range()?,
                mode,
            });
        }
        let spec = self
            .crf
            .as_deref()
            .context("--crf is required unless --config provides one")?;
        Ok(ResolvedExposure {
            crf: Crf::from_spec(spec)?,
            exposure: ExposureConfig::from_ratio(self.dt1, self.ratio)?,
            bright: BrightRange::default(),
            mode,
        })
    }
}

#[derive(Subcommand)]
enum Command {
    /// Synthesize the darker and brighter exposures of an image.
    Synth {
        #[arg(long)]
        input: PathBuf,
        #[command(flatten)]
        exposure: ExposureArgs,
        #[arg(long)]
        out_dark: PathBuf,
        #[arg(long)]
        out_bright: PathBuf,
        /// Write the per-pixel fallback ratios as a PFM (R = dark-path
        /// ratio, G = bright-path ratio, B = 0; zero marks IMF pixels).
        #[arg(long)]
        dump_gamma_map: Option<PathBuf>,
    },
    /// Write the exposedness masks of an image (0/255 per channel).
    Masks {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value_t = 250)]
        xi_u: u8,
        #[arg(long, default_value_t = 200)]
        xi_l: u8,
        #[arg(long)]
        out_m0: PathBuf,
        #[arg(long)]
        out_m2: PathBuf,
    },
    /// Score a test image against one or more references.
    Metrics {
        #[arg(long)]
        test: PathBuf,
        /// Reference images; mefssim uses all of them as the exposure
        /// stack, pairwise metrics report one value per reference.
        #[arg(long, num_args = 1.., required = true)]
        refs: Vec<PathBuf>,
        /// mefssim | ssim | psnr | mse | colorangle
        #[arg(long)]
        metric: String,
        /// Report per-pixel means instead of sums where applicable.
        #[arg(long)]
        mean: bool,
        #[arg(long)]
        json: bool,
    },
    /// Fuse three exposures into one 8-bit image.
    Fuse {
        /// Dark, mid, bright (in that order).
        #[arg(long, num_args = 3)]
        inputs: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// Extra pyramid levels over the standard full decomposition.
        #[arg(long, default_value_t = 1)]
        levels_extra: i32,
    },
    /// Merge differently exposed images into a PFM radiance map.
    Merge {
        #[arg(long, num_args = 1.., required = true)]
        inputs: Vec<PathBuf>,
        /// Exposure times, one per input.
        #[arg(long, num_args = 1.., required = true)]
        times: Vec<f64>,
        #[arg(long)]
        crf: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Generate synthetic scenes and their ground-truth triplets.
    Dataset {
        #[command(subcommand)]
        command: DatasetCommand,
    },
    /// Run the restoration pipeline on one image.
    Restore {
        #[arg(long)]
        input: PathBuf,
        #[command(flatten)]
        exposure: ExposureArgs,
        /// Refiner: `identity` or `gainbias:<target.png>`.
        #[arg(long, default_value = "identity")]
        refiner: String,
        #[arg(long)]
        out_dir: PathBuf,
        /// Also write the merged radiance map as hdr.pfm.
        #[arg(long)]
        hdr: bool,
    },
    /// Run a seeded multi-scene experiment and write the report.
    Experiment {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        report: PathBuf,
        /// Exit nonzero if any strict threshold fails.
        #[arg(long)]
        strict: bool,
    },
}

#[derive(Subcommand)]
enum DatasetCommand {
    Gen(DatasetGenArgs),
}

#[derive(Args)]
struct DatasetGenArgs {
    #[arg(long, default_value_t = 20)]
    scenes: usize,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    #[arg(long, default_value_t = 512)]
    width: usize,
    #[arg(long, default_value_t = 512)]
    height: usize,
    #[arg(long, default_value_t = 1e4)]
    dynamic_range: f64,
    /// Camera response used by the virtual camera.
    #[arg(long, default_value = "gamma:2.2")]
    crf: String,
    #[arg(long, default_value_t = 1.0)]
    dt1: f64,
    #[arg(long, default_value_t = 4.0)]
    ratio: f64,
    /// Gaussian read noise sigma (0 disables).
    #[arg(long, default_value_t = 0.0)]
    noise_read_sigma: f64,
    /// Poisson shot-noise gain (0 disables).
    #[arg(long, default_value_t = 0.0)]
    noise_poisson_gain: f64,
    #[arg(long)]
    out: PathBuf,
}

fn load_png(path: &PathBuf) -> Result<LdrImage> {
    LdrImage::open_png(path).with_context(|| format!("reading {}", path.display()))
}

fn pairwise_metric(name: &str, test: &RealImage, reference: &LdrImage, mean: bool) -> Result<f64> {
    let value = match name {
        "ssim" => ssim(test, &reference.to_real())?,
        "psnr" => psnr(test, &reference.to_real())?,
        "mse" => mse(test, &reference.to_real())?,
        "colorangle" => {
            let sum = color_angle_loss(reference, test)?;
            if mean {
                sum / (reference.width() * reference.height()) as f64
            } else {
                sum
            }
        }
        other => bail!("unknown metric `{other}`"),
    };
    Ok(value)
}

fn cmd_metrics(test: PathBuf, refs: Vec<PathBuf>, metric: String, mean: bool, json: bool) -> Result<()> {
    let test_img = load_png(&test)?;
    let ref_imgs: Vec<LdrImage> = refs.iter().map(load_png).collect::<Result<_>>()?;
    let mut results: Vec<(String, f64)> = Vec::new();
    if metric == "mefssim" {
        let stack: Vec<&LdrImage> = ref_imgs.iter().collect();
        results.push(("mefssim".into(), mef_ssim(&test_img, &stack)?));
    } else {
        let test_real = test_img.to_real();
        for (path, reference) in refs.iter().zip(&ref_imgs) {
            let v = pairwise_metric(&metric, &test_real, reference, mean)?;
            results.push((path.display().to_string(), v));
        }
    }
    if json {
        let obj: serde_json::Map<String, serde_json::Value> = results
            .iter()
            .map(|(k, v)| (k.clone(), serde_json::json!(v)))
            .collect();
        println!("{}", serde_json::to_string_pretty(&serde_json::Value::Object(obj))?);
    } else {
        for (k, v) in &results {
            println!("{metric}({k}) = {v}");
        }
    }
    Ok(())
}

fn cmd_dataset_gen(args: &DatasetGenArgs) -> Result<()> {
    let crf = Crf::from_spec(&args.crf)?;
    let exposure = ExposureConfig::from_ratio(args.dt1, args.ratio)?;
    std::fs::create_dir_all(&args.out)?;
    for i in 0..args.scenes {
        let dir = args.out.join(format!("scene_{i:02}"));
        std::fs::create_dir_all(&dir)?;
        let spec = SceneSpec::random(
            args.seed,
            i as u64,
            args.width,
            args.height,
            args.dynamic_range,
        );
        let radiance = generate_scene(&spec);
        let noise = if args.noise_read_sigma > 0.0 || args.noise_poisson_gain > 0.0 {
            NoiseModel::Sensor {
                read_sigma: args.noise_read_sigma,
                poisson_gain: args.noise_poisson_gain,
                seed: args.seed.wrapping_mul(1000).wrapping_add(i as u64),
            }
        } else {
            NoiseModel::None
        };
        let triplet = make_triplet(&radiance, &crf, &exposure, &noise)?;
        pfm::write(&radiance, dir.join("radiance.pfm"))?;
        triplet.dark.save_png(dir.join("zt0.png"))?;
        triplet.mid.save_png(dir.join("z1.png"))?;
        triplet.bright.save_png(dir.join("zt2.png"))?;
        std::fs::write(
            dir.join("meta.toml"),
            format!(
                "scene = {i}\nseed = {}\ndt0 = {}\ndt1 = {}\ndt2 = {}\ncrf = \"{}\"\n",
                args.seed, exposure.dt0, exposure.dt1, exposure.dt2, args.crf
            ),
        )?;
    }
    println!("wrote {} scenes to {}", args.scenes, args.out.display());
    Ok(())
}

fn cmd_restore(
    input: PathBuf,
    exposure: ExposureArgs,
    refiner: String,
    out_dir: PathBuf,
    hdr: bool,
) -> Result<()> {
    let resolved = exposure.resolve()?;
    let input_img = load_png(&input)?;
    let refiner = refiner_by_name(&refiner)?;
    let opts = PipelineOptions {
        mode: resolved.mode,
        bright_range: resolved.bright,
        extra_levels: 1,
        make_hdr: hdr,
    };
    let out = restore_pipeline(
        &input_img,
        &resolved.crf,
        &resolved.exposure,
        refiner.as_ref(),
        &opts,
    )?;
    std::fs::create_dir_all(&out_dir)?;
    out.dark.save_png(out_dir.join("z0.png"))?;
    out.bright.save_png(out_dir.join("z2.png"))?;
    out.fused.save_png(out_dir.join("fused.png"))?;
    out.masks.m0.to_ldr().save_png(out_dir.join("m0.png"))?;
    out.masks.m2.to_ldr().save_png(out_dir.join("m2.png"))?;
    if let Some(radiance) = &out.hdr {
        pfm::write(radiance, out_dir.join("hdr.pfm"))?;
    }
    println!("restored {} -> {}", input.display(), out_dir.display());
    Ok(())
}

fn ratio_map_pfm(
    width: usize,
    height: usize,
    dark: &lumafuse::synth::Synthesis,
    bright: &lumafuse::synth::Synthesis,
) -> RadianceImage {
    let mut data = vec![0.0f64; width * height * 3];
    for i in 0..width * height {
        data[i * 3] = dark.ratio_map[i];
        data[i * 3 + 1] = bright.ratio_map[i];
    }
    RadianceImage::new(width, height, data).expect("ratios are finite and non-negative")
}

fn run() -> Result<()> {
    let cli = Cli::parse();
    match cli.command {
        Command::Synth {
            input,
            exposure,
            out_dark,
            out_bright,
            dump_gamma_map,
        } => {
            let resolved = exposure.resolve()?;
            let img = load_png(&input)?;
            let dark = synthesize_dark_full(&img, &resolved.crf, &resolved.exposure, resolved.mode)?;
            let bright = synthesize_bright_full(
                &img,
                &resolved.crf,
                &resolved.exposure,
                resolved.bright,
                resolved.mode,
            )?;
            dark.image.save_png(&out_dark)?;
            bright.image.save_png(&out_bright)?;
            if let Some(path) = dump_gamma_map {
                let map = ratio_map_pfm(img.width(), img.height(), &dark, &bright);
                pfm::write(&map, path)?;
            }
            Ok(())
        }
        Command::Masks {
            input,
            xi_u,
            xi_l,
            out_m0,
            out_m2,
        } => {
            let img = load_png(&input)?;
            let masks = compute_masks(&img, xi_u, xi_l);
            masks.m0.to_ldr().save_png(out_m0)?;
            masks.m2.to_ldr().save_png(out_m2)?;
            Ok(())
        }
        Command::Metrics {
            test,
            refs,
            metric,
            mean,
            json,
        } => cmd_metrics(test, refs, metric, mean, json),
        Command::Fuse {
            inputs,
            out,
            levels_extra,
        } => {
            let imgs: Vec<LdrImage> = inputs.iter().map(load_png).collect::<Result<_>>()?;
            let fused = mef_fuse(&imgs[0], &imgs[1], &imgs[2], levels_extra)?;
            fused.save_png(out)?;
            Ok(())
        }
        Command::Merge {
            inputs,
            times,
            crf,
            out,
        } => {
            if inputs.len() != times.len() {
                bail!(
                    "got {} inputs but {} exposure times",
                    inputs.len(),
                    times.len()
                );
            }
            let crf = Crf::from_spec(&crf)?;
            let imgs: Vec<LdrImage> = inputs.iter().map(load_png).collect::<Result<_>>()?;
            let refs: Vec<&LdrImage> = imgs.iter().collect();
            let radiance = hdr_merge(&refs, &times, &crf)?;
            pfm::write(&radiance, out)?;
            Ok(())
        }
        Command::Dataset { command } => match command {
            DatasetCommand::Gen(args) => cmd_dataset_gen(&args),
        },
        Command::Restore {
            input,
            exposure,
            refiner,
            out_dir,
            hdr,
        } => cmd_restore(input, exposure, refiner, out_dir, hdr),
        Command::Experiment {
            config,
            report,
            strict,
        } => {
            let cfg = match config {
                Some(path) => ExperimentConfig::from_path(&path)
                    .with_context(|| format!("reading {}", path.display()))?,
                None => ExperimentConfig::default(),
            };
            let result = run_experiment(&cfg)?;
            std::fs::write(&report, result.to_json())?;
            print!("{}", result.render_table());
            if strict && !result.strict.passed {
                bail!(
                    "strict thresholds failed: mef_ssim_ok={} case1_dark_ok={} case1_bright_ok={}",
                    result.strict.mean_mef_ssim_ok,
                    result.strict.case1_dark_ok,
                    result.strict.case1_bright_ok
                );
            }
            Ok(())
        }
    }
}

fn main() {
    if let Err(err) = run() {
        eprintln!("error: {err:#}");
        std::process::exit(1);
    }
}
