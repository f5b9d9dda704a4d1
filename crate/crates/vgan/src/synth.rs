//! Synthetic phantom volumes so the whole pipeline runs without any
//! external dataset: a bright head-like Gaussian blob with a few random
//! satellite blobs and a dark ellipsoid "ventricle" pair.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::volio::Volume;

/// One deterministic phantom, intensity in [0, 1], background 0.
pub fn phantom(n: usize, voxel_mm: f32, seed: u64) -> Volume {
    assert!(n >= 4);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let c = (n as f64 - 1.0) / 2.0;

    // main head blob, slightly off-center and anisotropic
    let head = (
        c + rng.gen_range(-0.05..0.05) * n as f64,
        c + rng.gen_range(-0.05..0.05) * n as f64,
        c + rng.gen_range(-0.05..0.05) * n as f64,
        n as f64 * rng.gen_range(0.28..0.36),
    );
    // satellite blobs standing in for anatomical variability
    let n_sat = rng.gen_range(2..=4);
    let sats: Vec<(f64, f64, f64, f64, f64)> = (0..n_sat)
        .map(|_| {
            (
                c + rng.gen_range(-0.2..0.2) * n as f64,
                c + rng.gen_range(-0.2..0.2) * n as f64,
                c + rng.gen_range(-0.2..0.2) * n as f64,
                n as f64 * rng.gen_range(0.06..0.12),
                rng.gen_range(0.2..0.5),
            )
        })
        .collect();
    // dark ventricle pair: two ellipsoids mirrored about the midline
    let vent = (
        c + rng.gen_range(-0.05..0.05) * n as f64,
        c + rng.gen_range(-0.05..0.05) * n as f64,
        n as f64 * rng.gen_range(0.08..0.14),
        n as f64 * rng.gen_range(0.04..0.08),
        n as f64 * rng.gen_range(0.10..0.16),
        n as f64 * rng.gen_range(0.05..0.10),
    );

    let mut data = Vec::with_capacity(n * n * n);
    for z in 0..n {
        for y in 0..n {
            for x in 0..n {
                let (zf, yf, xf) = (z as f64, y as f64, x as f64);
                let r2 = (zf - head.0).powi(2) + (yf - head.1).powi(2) + (xf - head.2).powi(2);
                let mut v = (-r2 / (2.0 * head.3 * head.3)).exp();
                for s in &sats {
                    let r2 = (zf - s.0).powi(2) + (yf - s.1).powi(2) + (xf - s.2).powi(2);
                    v += s.4 * (-r2 / (2.0 * s.3 * s.3)).exp();
                }
                for side in [-1.0, 1.0] {
                    let cx = c + side * vent.2;
                    let e = ((zf - vent.0) / vent.5).powi(2)
                        + ((yf - vent.1) / vent.4).powi(2)
                        + ((xf - cx) / vent.3).powi(2);
                    if e < 1.0 {
                        v *= 0.25;
                    }
                }
                data.push(v.min(1.0) as f32);
            }
        }
    }
    Volume::new((n, n, n), (voxel_mm, voxel_mm, voxel_mm), data)
}

/// `count` phantoms with per-volume derived seeds.
pub fn phantom_set(count: usize, n: usize, voxel_mm: f32, seed: u64) -> Vec<Volume> {
    (0..count)
        .map(|i| phantom(n, voxel_mm, seed.wrapping_add(i as u64)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn phantom_is_deterministic_and_bounded() {
        let a = phantom(16, 1.4, 3);
        let b = phantom(16, 1.4, 3);
        assert_eq!(a, b);
        assert!(a.data.iter().all(|&v| (0.0..=1.0).contains(&v)));
        // has real structure, not a constant field
        let (lo, hi) = a.min_max();
        assert!(hi - lo > 0.5);
    }

    #[test]
    fn different_seeds_differ() {
        assert_ne!(phantom(8, 1.0, 1).data, phantom(8, 1.0, 2).data);
    }

    #[test]
    fn set_count_and_derivation() {
        let set = phantom_set(5, 8, 1.0, 10);
        assert_eq!(set.len(), 5);
        assert_eq!(set[2], phantom(8, 1.0, 12));
    }
}
