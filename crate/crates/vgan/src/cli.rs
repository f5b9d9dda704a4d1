//! Command-line pipeline: synthdata, preprocess, augment, train, generate,
//! selftest. Exit codes: 0 ok, 1 usage/config, 2 data error, 3 numeric
//! failure.

use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::augment::{build_augmented_dataset, write_manifest};
use crate::checkpoint::Checkpoint;
use crate::config::RunConfig;
use crate::error::{Result, VganError};
use crate::nets::{generator_forward, StageConfig, TapedWeights};
use crate::selftest::run_selftest;
use crate::synth::phantom;
use crate::tape::Tape;
use crate::tensor::Tensor;
use crate::trainer::{sample_latents, Trainer};
use crate::volio::{
    center_crop, downsample_by_2, export_slices, normalize_intensity, read_nifti, upsample_to,
    write_nifti, Volume,
};

#[derive(Parser, Debug)]
#[command(name = "vgan", about = "Progressive-growing GAN for volumetric MR-like data", disable_version_flag = true)]
pub struct Cli {
    /// Flat key=value config file; flags override its keys.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory (overrides config out_dir).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Validate and echo the resolved config without doing any work.
    #[arg(long, global = true)]
    pub dry_run: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Write synthetic phantom volumes so the pipeline needs no external data.
    Synthdata {
        #[arg(long, default_value_t = 8)]
        count: usize,
        /// Cube edge length in voxels.
        #[arg(long, default_value_t = 64)]
        size: usize,
    },
    /// Downsample by 2, center-crop, normalize to [-1,1]; write a split manifest.
    Preprocess {
        /// Directory of .nii / .nii.gz inputs.
        #[arg(long)]
        input: PathBuf,
        /// Cube edge of the cropped output.
        #[arg(long, default_value_t = 128)]
        target_dim: usize,
    },
    /// Rotate each training volume k times per the manifest.
    Augment {
        /// Manifest written by preprocess.
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        k: Option<usize>,
        #[arg(long)]
        sigma: Option<f64>,
    },
    /// Run the progressive schedule over a volume directory or manifest.
    Train {
        /// Directory of training volumes, or a manifest file.
        #[arg(long)]
        data: PathBuf,
        /// Resume from a checkpoint instead of fresh initialization.
        #[arg(long)]
        resume: Option<PathBuf>,
        /// Stop after this many total steps (for smoke runs).
        #[arg(long)]
        stop_after: Option<u64>,
    },
    /// Sample volumes from a trained checkpoint.
    Generate {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long, default_value_t = 3)]
        count: usize,
        /// Nearest-neighbor upsample the outputs to this cube edge.
        #[arg(long)]
        upsample: Option<usize>,
    },
    /// Run the built-in verification suites.
    Selftest {
        /// Full case counts instead of the quick battery.
        #[arg(long)]
        full: bool,
    },
}

fn resolve_config(cli: &Cli) -> Result<RunConfig> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = Some(seed);
    }
    if let Some(out) = &cli.out {
        cfg.out_dir = out.clone();
    }
    Ok(cfg)
}

fn echo_config(cfg: &RunConfig, to: &Path) -> Result<()> {
    std::fs::create_dir_all(to)?;
    std::fs::write(to.join("config_resolved.txt"), cfg.render())?;
    Ok(())
}

fn list_nifti(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut files: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| VganError::Data(format!("cannot list {}: {e}", dir.display())))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            let name = p.file_name().map(|n| n.to_string_lossy().to_string()).unwrap_or_default();
            name.ends_with(".nii") || name.ends_with(".nii.gz")
        })
        .collect();
    files.sort();
    if files.is_empty() {
        return Err(VganError::Data(format!("no NIfTI files in {}", dir.display())));
    }
    Ok(files)
}

fn cmd_synthdata(cfg: &RunConfig, count: usize, size: usize) -> Result<()> {
    cfg.validate()?;
    let seed = cfg.seed.unwrap();
    let dir = cfg.out_dir.join("synth");
    std::fs::create_dir_all(&dir)?;
    for i in 0..count {
        let v = phantom(size, 0.7, seed.wrapping_add(i as u64));
        write_nifti(&v, &dir.join(format!("phantom{i:04}.nii.gz")))?;
    }
    println!("wrote {count} phantom volumes ({size}^3) to {}", dir.display());
    Ok(())
}

fn cmd_preprocess(cfg: &RunConfig, input: &Path, target_dim: usize) -> Result<()> {
    let files = list_nifti(input)?;
    let dir = cfg.out_dir.join("preprocessed");
    std::fs::create_dir_all(&dir)?;
    let mut processed: Vec<PathBuf> = Vec::new();
    for path in &files {
        let vol = match read_nifti(path) {
            Ok(v) => v,
            Err(e) => {
                eprintln!("warning: skipping {}: {e}", path.display());
                continue;
            }
        };
        let down = downsample_by_2(&vol);
        let cropped = center_crop(&down, (target_dim, target_dim, target_dim))?;
        let norm = normalize_intensity(&cropped)?;
        let name = path.file_name().unwrap().to_string_lossy();
        let stem = name.trim_end_matches(".nii.gz").trim_end_matches(".nii");
        let out = dir.join(format!("{stem}.nii.gz"));
        write_nifti(&norm, &out)?;
        processed.push(out);
    }
    if processed.is_empty() {
        return Err(VganError::Data("no readable volumes after preprocessing".into()));
    }
    if cfg.eval_count >= processed.len() {
        return Err(VganError::Data(format!(
            "eval_count {} leaves no training volumes out of {}",
            cfg.eval_count,
            processed.len()
        )));
    }
    // first files (sorted order) train, the configured tail is held out
    let train_n = processed.len() - cfg.eval_count;
    let mut manifest = String::new();
    for (i, p) in processed.iter().enumerate() {
        let split = if i < train_n { "train" } else { "eval" };
        manifest.push_str(&format!("{}\t{split}\n", p.display()));
    }
    let mpath = cfg.out_dir.join("preprocess_manifest.tsv");
    std::fs::write(&mpath, manifest)?;
    println!(
        "preprocessed {} volumes ({} train, {} eval); manifest {}",
        processed.len(),
        train_n,
        cfg.eval_count,
        mpath.display()
    );
    Ok(())
}

fn read_split_manifest(path: &Path, want: &str) -> Result<Vec<PathBuf>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| VganError::Data(format!("cannot read manifest {}: {e}", path.display())))?;
    let mut out = Vec::new();
    for line in text.lines() {
        if line.trim().is_empty() {
            continue;
        }
        let mut cols = line.split('\t');
        let (Some(p), split) = (cols.next(), cols.next().unwrap_or("train")) else {
            continue;
        };
        if split == want {
            out.push(PathBuf::from(p));
        }
    }
    if out.is_empty() {
        return Err(VganError::Data(format!(
            "manifest {} has no '{want}' entries",
            path.display()
        )));
    }
    Ok(out)
}

fn cmd_augment(cfg: &RunConfig, manifest: &Path, k: usize, sigma: f64) -> Result<()> {
    cfg.validate()?;
    let seed = cfg.seed.unwrap();
    let sources = read_split_manifest(manifest, "train")?;
    let mut inputs = Vec::with_capacity(sources.len());
    for p in sources {
        let v = read_nifti(&p)
            .map_err(|e| VganError::Data(format!("manifest source {}: {e}", p.display())))?;
        inputs.push((p, v));
    }
    let dir = cfg.out_dir.join("augmented");
    let (_, records) = build_augmented_dataset(&inputs, k, sigma, seed, Some(&dir))?;
    let mpath = cfg.out_dir.join("augment_manifest.tsv");
    write_manifest(&records, &mpath)?;
    println!(
        "augmented {} volumes x{k} -> {} outputs; manifest {}",
        inputs.len(),
        records.len(),
        mpath.display()
    );
    Ok(())
}

fn load_training_set(data: &Path) -> Result<Vec<Tensor<f32>>> {
    let paths = if data.is_dir() {
        list_nifti(data)?
    } else {
        // augment manifests put the output path first; split manifests too
        read_split_manifest(data, "train")?
    };
    let mut out = Vec::with_capacity(paths.len());
    for p in &paths {
        out.push(read_nifti(p)?.to_tensor());
    }
    Ok(out)
}

fn cmd_train(
    cfg: &RunConfig,
    data: &Path,
    resume: Option<&Path>,
    stop_after: Option<u64>,
) -> Result<()> {
    let tcfg = cfg.trainer_config()?;
    echo_config(cfg, &cfg.out_dir)?;
    let dataset = load_training_set(data)?;
    let mut trainer = match resume {
        Some(path) => Trainer::from_checkpoint(Checkpoint::load(path)?, tcfg)?,
        None => Trainer::new(tcfg),
    };
    let mut last_stage = usize::MAX;
    let final_cp = trainer.run_schedule(
        &dataset,
        stop_after,
        Some(&mut |r| {
            if r.stage != last_stage {
                println!("stage {} ({}^3)", r.stage, 4usize << r.stage);
                last_stage = r.stage;
            }
            if r.step % 50 == 0 {
                println!(
                    "step {} stage {} alpha {:.3} loss_d {:.4} loss_g {:.4}",
                    r.step, r.stage, r.alpha, r.loss_d, r.loss_g
                );
            }
        }),
    )?;
    println!(
        "training {} after {} steps; log {}",
        if final_cp.schedule.is_complete() { "complete" } else { "stopped" },
        final_cp.step_count,
        cfg.out_dir.join("train_log.tsv").display()
    );
    Ok(())
}

fn cmd_generate(
    cfg: &RunConfig,
    checkpoint: &Path,
    count: usize,
    upsample: Option<usize>,
) -> Result<()> {
    cfg.validate()?;
    let seed = cfg.seed.unwrap();
    let cp = Checkpoint::load(checkpoint)?;
    let dense_shape = cp
        .g
        .get("g.base.dense.weight")
        .ok_or_else(|| VganError::Checkpoint("checkpoint has no generator dense weight".into()))?
        .shape()
        .to_vec();
    let (n_filters, latent_dim) = (dense_shape[0] / 64, dense_shape[1]);
    let stage = cp.schedule.stage;
    let res = 4usize << stage;
    let scfg = StageConfig::new(stage, n_filters, latent_dim);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dir = cfg.out_dir.join("generated");
    std::fs::create_dir_all(&dir)?;
    let voxel_mm = 1.4 * (1 << (3usize.saturating_sub(stage))) as f32;
    for i in 0..count {
        let mut tape: Tape<f32> = Tape::new();
        let gw = TapedWeights::load(&mut tape, &cp.g, false);
        let z = sample_latents(&mut rng, 1, latent_dim);
        let zv = tape.constant(z);
        let y = generator_forward(&mut tape, &gw, zv, &scfg, stage, 1.0)?;
        let vol = tape.value(y).clone().reshape(&[1, res, res, res])?;
        let mut vol = Volume::from_tensor(&vol, (voxel_mm, voxel_mm, voxel_mm))?;
        if let Some(target) = upsample {
            vol = upsample_to(&vol, (target, target, target))?;
        }
        let stem = dir.join(format!("sample{i:03}"));
        write_nifti(&vol, &PathBuf::from(format!("{}.nii.gz", stem.display())))?;
        export_slices(&vol, &stem)?;
    }
    println!("wrote {count} volumes (+slices) to {}", dir.display());
    Ok(())
}

fn cmd_selftest(full: bool) -> Result<()> {
    let reports = run_selftest(!full)?;
    let mut ok = true;
    for r in &reports {
        println!("{}", r.line());
        ok &= r.passed();
    }
    if !ok {
        return Err(VganError::NonFinite("selftest suites failed".into()));
    }
    Ok(())
}

pub fn dispatch(cli: &Cli) -> Result<()> {
    let cfg = resolve_config(cli)?;
    if cli.dry_run {
        cfg.validate()?;
        print!("{}", cfg.render());
        return Ok(());
    }
    match &cli.command {
        Command::Synthdata { count, size } => cmd_synthdata(&cfg, *count, *size),
        Command::Preprocess { input, target_dim } => cmd_preprocess(&cfg, input, *target_dim),
        Command::Augment { manifest, k, sigma } => cmd_augment(
            &cfg,
            manifest,
            k.unwrap_or(cfg.augment_k),
            sigma.unwrap_or(cfg.augment_sigma),
        ),
        Command::Train { data, resume, stop_after } => {
            cmd_train(&cfg, data, resume.as_deref(), *stop_after)
        }
        Command::Generate { checkpoint, count, upsample } => {
            cmd_generate(&cfg, checkpoint, *count, *upsample)
        }
        Command::Selftest { full } => cmd_selftest(*full),
    }
}

pub fn exit_code(err: &VganError) -> i32 {
    match err {
        VganError::InvalidArgument(_) | VganError::Config(_) => 1,
        VganError::Data(_) | VganError::Nifti { .. } | VganError::Checkpoint(_) | VganError::Io(_) => 2,
        VganError::NonFinite(_) | VganError::ShapeMismatch { .. } => 3,
    }
}

/// Entry point for the binary; returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            // clap handles --help/--version printing through the error path
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
