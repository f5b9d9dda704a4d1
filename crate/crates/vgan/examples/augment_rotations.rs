//! Rotation augmentation: sample angles from N(0, 10 degrees), rotate a
//! phantom, and build a k-copies-per-volume dataset with its manifest.
//!
//! ```bash
//! cargo run --release -p vgan --example augment_rotations
//! ```

use std::path::PathBuf;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use vgan::augment::{build_augmented_dataset, resample_trilinear, rotation_matrix, sample_rotation};
use vgan::synth::phantom;

fn main() -> vgan::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let r = sample_rotation(&mut rng, 10.0);
    println!(
        "sampled rotation: ({:+.2}, {:+.2}, {:+.2}) degrees",
        r.theta_x, r.theta_y, r.theta_z
    );
    let m = rotation_matrix(&r);
    for row in &m {
        println!("  [{:+.4} {:+.4} {:+.4}]", row[0], row[1], row[2]);
    }

    let v = phantom(16, 1.4, 1);
    let rotated = resample_trilinear(&v, &r, 0.0);
    let (lo, hi) = rotated.min_max();
    println!("rotated phantom range [{lo:.3}, {hi:.3}] (interpolation is contractive)");

    let inputs: Vec<(PathBuf, _)> = (0..4)
        .map(|i| (PathBuf::from(format!("phantom{i}.nii")), phantom(8, 1.4, i)))
        .collect();
    let (vols, records) = build_augmented_dataset(&inputs, 10, 10.0, 42, None)?;
    println!("{} inputs x 10 rotations -> {} volumes", inputs.len(), vols.len());
    println!("first manifest line:\n  {}", records[0].manifest_line());
    Ok(())
}
