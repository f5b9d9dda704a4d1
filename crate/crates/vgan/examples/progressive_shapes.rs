//! Walk the progressive ladder: generator output sizes 4^3 through 32^3,
//! discriminator acceptance, parameter counts, and the fade-in endpoints.
//!
//! ```bash
//! cargo run --release -p vgan --example progressive_shapes
//! ```

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use vgan::nets::{
    build_discriminator, build_generator, discriminator_forward, generator_forward, StageConfig,
    TapedWeights,
};
use vgan::oracle::max_rel_err;
use vgan::trainer::sample_latents;
use vgan::Tape;

fn main() -> vgan::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for stage in 0..=3usize {
        let cfg = StageConfig::new(stage, 8, 16);
        let g = build_generator(&cfg, &mut rng);
        let d = build_discriminator(&cfg, &mut rng);

        let mut tape: Tape<f32> = Tape::new();
        let gw = TapedWeights::load(&mut tape, &g, false);
        let dw = TapedWeights::load(&mut tape, &d, false);
        let z = tape.constant(sample_latents(&mut rng, 2, 16));
        let y = generator_forward(&mut tape, &gw, z, &cfg, stage, 1.0)?;
        let score = discriminator_forward(&mut tape, &dw, y, &cfg, stage, 1.0)?;
        println!(
            "stage {stage}: G -> {:?} ({} params), D -> {:?} ({} params)",
            tape.value(y).shape(),
            g.param_count(),
            tape.value(score).shape(),
            d.param_count()
        );

        // at alpha = 0 the new stage reduces exactly to the previous one
        if stage > 0 {
            let faded = generator_forward(&mut tape, &gw, z, &cfg, stage, 0.0)?;
            let prev = generator_forward(&mut tape, &gw, z, &cfg, stage - 1, 1.0)?;
            let up = tape.upsample2x(prev);
            let err = max_rel_err(tape.value(faded), tape.value(up));
            println!("  fade alpha=0 vs upsampled stage {}: rel err {err:.2e}", stage - 1);
        }
    }
    Ok(())
}
