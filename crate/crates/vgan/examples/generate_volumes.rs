//! Train briefly, checkpoint, then sample volumes from the checkpoint and
//! write them as NIfTI plus PGM slice images.
//!
//! ```bash
//! cargo run --release -p vgan --example generate_volumes
//! ```

use vgan::checkpoint::Checkpoint;
use vgan::nets::{generator_forward, StageConfig, TapedWeights};
use vgan::synth::phantom_set;
use vgan::trainer::{sample_latents, Trainer, TrainerConfig};
use vgan::volio::{export_slices, normalize_intensity, upsample_to, write_nifti, Volume};
use vgan::Tape;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> vgan::Result<()> {
    let out = std::env::temp_dir().join("vgan_generate_example");
    std::fs::create_dir_all(&out)?;

    let data: Vec<_> = phantom_set(8, 8, 1.4, 3)
        .iter()
        .map(|v| normalize_intensity(v).map(|n| n.to_tensor()))
        .collect::<vgan::Result<_>>()?;
    let mut cfg = TrainerConfig::desk(1, 5);
    cfg.n_filters = 8;
    cfg.latent_dim = 16;
    cfg.reals_per_phase = 32;
    cfg.batch_sizes = vec![4];
    let mut trainer = Trainer::new(cfg);
    trainer.run_schedule(&data, None, None)?;

    let ckpt_path = out.join("model.vgan");
    trainer.snapshot().save(&ckpt_path)?;
    let cp = Checkpoint::load(&ckpt_path)?;
    println!("checkpoint round-tripped: stage {}", cp.schedule.stage);

    let scfg = StageConfig::new(cp.schedule.stage, 8, 16);
    let res = 4usize << cp.schedule.stage;
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for i in 0..3 {
        let mut tape: Tape<f32> = Tape::new();
        let gw = TapedWeights::load(&mut tape, &cp.g, false);
        let z = tape.constant(sample_latents(&mut rng, 1, 16));
        let y = generator_forward(&mut tape, &gw, z, &scfg, cp.schedule.stage, 1.0)?;
        let t = tape.value(y).clone().reshape(&[1, res, res, res])?;
        let vol = Volume::from_tensor(&t, (1.4, 1.4, 1.4))?;
        let big = upsample_to(&vol, (res * 4, res * 4, res * 4))?;
        let stem = out.join(format!("sample{i}"));
        write_nifti(&big, &out.join(format!("sample{i}.nii.gz")))?;
        let slices = export_slices(&big, &stem)?;
        println!("sample {i}: {}^3 volume + {} slices", res * 4, slices.len());
    }
    println!("outputs in {}", out.display());
    Ok(())
}
