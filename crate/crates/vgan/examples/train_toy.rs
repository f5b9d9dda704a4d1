//! Train a tiny WGAN-GP on synthetic phantoms through the full progressive
//! schedule (4^3 then 8^3), printing losses and the fade-in alpha.
//!
//! ```bash
//! cargo run --release -p vgan --example train_toy
//! ```

use vgan::synth::phantom_set;
use vgan::trainer::{Trainer, TrainerConfig};
use vgan::volio::normalize_intensity;

fn main() -> vgan::Result<()> {
    let data: Vec<_> = phantom_set(16, 8, 1.4, 42)
        .iter()
        .map(|v| normalize_intensity(v).map(|n| n.to_tensor()))
        .collect::<vgan::Result<_>>()?;

    let mut cfg = TrainerConfig::desk(1, 7);
    cfg.n_filters = 8;
    cfg.latent_dim = 16;
    cfg.reals_per_phase = 64;
    cfg.batch_sizes = vec![4];

    let mut trainer = Trainer::new(cfg);
    let cp = trainer.run_schedule(
        &data,
        None,
        Some(&mut |r| {
            println!(
                "step {:3} stage {} {:9?} alpha {:.3} loss_d {:8.4} loss_g {:8.4}",
                r.step, r.stage, r.phase, r.alpha, r.loss_d, r.loss_g
            );
        }),
    )?;
    println!(
        "schedule complete: {} steps, final stage {} ({}^3)",
        cp.step_count,
        cp.schedule.stage,
        4usize << cp.schedule.stage
    );
    Ok(())
}
