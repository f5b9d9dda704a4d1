//! Deterministic training with interrupt and resume: two runs with the same
//! seed are bit-identical, and a run resumed from a mid-point checkpoint
//! lands on exactly the same weights as the uninterrupted one.
//!
//! ```bash
//! cargo run --release -p vgan --example checkpoint_resume
//! ```

use vgan::checkpoint::Checkpoint;
use vgan::synth::phantom_set;
use vgan::trainer::{Trainer, TrainerConfig};
use vgan::volio::normalize_intensity;

fn config() -> TrainerConfig {
    let mut cfg = TrainerConfig::desk(1, 13);
    cfg.n_filters = 4;
    cfg.latent_dim = 8;
    cfg.reals_per_phase = 16;
    cfg.batch_sizes = vec![4];
    cfg
}

fn main() -> vgan::Result<()> {
    let data: Vec<_> = phantom_set(8, 8, 1.4, 77)
        .iter()
        .map(|v| normalize_intensity(v).map(|n| n.to_tensor()))
        .collect::<vgan::Result<_>>()?;

    let mut a = Trainer::new(config());
    let full = a.run_schedule(&data, None, None)?;
    let mut b = Trainer::new(config());
    let repeat = b.run_schedule(&data, None, None)?;
    println!("two identical runs bit-identical: {}", full == repeat);

    let mut c = Trainer::new(config());
    let mid = c.run_schedule(&data, Some(4), None)?;
    let path = std::env::temp_dir().join("vgan_resume_example.vgan");
    mid.save(&path)?;
    println!("interrupted at step {}, checkpoint {}", mid.step_count, path.display());

    let mut resumed = Trainer::from_checkpoint(Checkpoint::load(&path)?, config())?;
    let end = resumed.run_schedule(&data, None, None)?;
    println!(
        "resumed run reaches step {}, bit-identical to uninterrupted: {}",
        end.step_count,
        end == full
    );
    Ok(())
}
