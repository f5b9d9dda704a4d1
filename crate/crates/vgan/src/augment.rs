//! Rotation augmentation: random Euler angles from N(0, sigma) applied by
//! trilinear resampling about the volume center.

use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Normal;
use rayon::prelude::*;

use crate::error::{Result, VganError};
use crate::volio::{write_nifti, Volume};

/// Euler angles in degrees, composed as Rz * Ry * Rx about the geometric
/// volume center ((N-1)/2 per axis in voxel coordinates).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Rotation {
    pub theta_x: f64,
    pub theta_y: f64,
    pub theta_z: f64,
}

impl Rotation {
    pub const IDENTITY: Rotation = Rotation {
        theta_x: 0.0,
        theta_y: 0.0,
        theta_z: 0.0,
    };

    pub fn is_identity(&self) -> bool {
        self.theta_x == 0.0 && self.theta_y == 0.0 && self.theta_z == 0.0
    }
}

/// Three i.i.d. N(0, sigma_deg^2) angles.
pub fn sample_rotation<R: Rng>(rng: &mut R, sigma_deg: f64) -> Rotation {
    assert!(sigma_deg >= 0.0);
    if sigma_deg == 0.0 {
        return Rotation::IDENTITY;
    }
    let n = Normal::new(0.0, sigma_deg).unwrap();
    Rotation {
        theta_x: rng.sample(n),
        theta_y: rng.sample(n),
        theta_z: rng.sample(n),
    }
}

/// Row-major 3x3 matrix Rz(tz) * Ry(ty) * Rx(tx) acting on (x, y, z).
pub fn rotation_matrix(r: &Rotation) -> [[f64; 3]; 3] {
    let (sx, cx) = r.theta_x.to_radians().sin_cos();
    let (sy, cy) = r.theta_y.to_radians().sin_cos();
    let (sz, cz) = r.theta_z.to_radians().sin_cos();
    [
        [cz * cy, cz * sy * sx - sz * cx, cz * sy * cx + sz * sx],
        [sz * cy, sz * sy * sx + cz * cx, sz * sy * cx - cz * sx],
        [-sy, cy * sx, cy * cx],
    ]
}

fn trilinear(v: &Volume, z: f64, y: f64, x: f64, fill: f32) -> f32 {
    let (d, h, w) = v.dims;
    let (z0, y0, x0) = (z.floor(), y.floor(), x.floor());
    let (fz, fy, fx) = (z - z0, y - y0, x - x0);
    let mut acc = 0.0f64;
    for dz in 0..2 {
        for dy in 0..2 {
            for dx in 0..2 {
                let wz = if dz == 0 { 1.0 - fz } else { fz };
                let wy = if dy == 0 { 1.0 - fy } else { fy };
                let wx = if dx == 0 { 1.0 - fx } else { fx };
                let wgt = wz * wy * wx;
                if wgt == 0.0 {
                    continue;
                }
                let (iz, iy, ix) = (z0 as i64 + dz, y0 as i64 + dy, x0 as i64 + dx);
                let s = if iz < 0
                    || iy < 0
                    || ix < 0
                    || iz >= d as i64
                    || iy >= h as i64
                    || ix >= w as i64
                {
                    fill
                } else {
                    v.at(iz as usize, iy as usize, ix as usize)
                };
                acc += wgt * s as f64;
            }
        }
    }
    acc as f32
}

/// Resamples `v` under an arbitrary 3x3 matrix: the output voxel at p takes
/// the trilinear sample of `v` at m * (p - c) + c. Out-of-bounds reads fill.
pub fn resample_matrix(v: &Volume, m: &[[f64; 3]; 3], fill: f32) -> Volume {
    let (d, h, w) = v.dims;
    let c = (
        (w as f64 - 1.0) / 2.0,
        (h as f64 - 1.0) / 2.0,
        (d as f64 - 1.0) / 2.0,
    );
    let mut out = v.clone();
    out.data
        .par_chunks_mut(h * w)
        .enumerate()
        .for_each(|(iz, slab)| {
            let pz = iz as f64 - c.2;
            for iy in 0..h {
                let py = iy as f64 - c.1;
                for ix in 0..w {
                    let px = ix as f64 - c.0;
                    let sx = m[0][0] * px + m[0][1] * py + m[0][2] * pz + c.0;
                    let sy = m[1][0] * px + m[1][1] * py + m[1][2] * pz + c.1;
                    let sz = m[2][0] * px + m[2][1] * py + m[2][2] * pz + c.2;
                    slab[iy * w + ix] = trilinear(v, sz, sy, sx, fill);
                }
            }
        });
    out
}

/// Rotates `v` by `r`: each output voxel samples the source at the inverse
/// rotation of its centered position. The identity rotation is exact.
pub fn resample_trilinear(v: &Volume, r: &Rotation, fill: f32) -> Volume {
    if r.is_identity() {
        return v.clone();
    }
    let m = rotation_matrix(r);
    // inverse of an orthonormal matrix is its transpose
    let inv = [
        [m[0][0], m[1][0], m[2][0]],
        [m[0][1], m[1][1], m[2][1]],
        [m[0][2], m[1][2], m[2][2]],
    ];
    resample_matrix(v, &inv, fill)
}

#[derive(Clone, Debug, PartialEq)]
pub struct AugmentRecord {
    pub output: PathBuf,
    pub source: PathBuf,
    pub rotation: Rotation,
    pub seed: u64,
}

impl AugmentRecord {
    pub fn manifest_line(&self) -> String {
        format!(
            "{}\t{}\t{}\t{}\t{}\t{}",
            self.output.display(),
            self.source.display(),
            self.rotation.theta_x,
            self.rotation.theta_y,
            self.rotation.theta_z,
            self.seed
        )
    }
}

fn derive_seed(global: u64, volume_idx: usize, copy_idx: usize, k: usize) -> u64 {
    // splitmix64 finalizer over the flat copy index; plain xor would collide
    let mut z = global ^ (volume_idx * k + copy_idx) as u64;
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Produces exactly k rotated copies per input (originals excluded). Each
/// copy gets its own derived RNG stream, so the parallel schedule never
/// changes the output. Volumes are written to `out_dir` when given.
pub fn build_augmented_dataset(
    inputs: &[(PathBuf, Volume)],
    k: usize,
    sigma_deg: f64,
    seed: u64,
    out_dir: Option<&Path>,
) -> Result<(Vec<Volume>, Vec<AugmentRecord>)> {
    if k < 1 {
        return Err(VganError::InvalidArgument("augmentation count k must be >= 1".into()));
    }
    let jobs: Vec<(usize, usize)> = (0..inputs.len())
        .flat_map(|i| (0..k).map(move |j| (i, j)))
        .collect();
    let results: Vec<(Volume, AugmentRecord)> = jobs
        .par_iter()
        .map(|&(i, j)| {
            let (source, vol) = &inputs[i];
            let s = derive_seed(seed, i, j, k);
            let mut rng = ChaCha8Rng::seed_from_u64(s);
            let rot = sample_rotation(&mut rng, sigma_deg);
            let rotated = resample_trilinear(vol, &rot, 0.0);
            let stem = source
                .file_stem()
                .map(|s| s.to_string_lossy().trim_end_matches(".nii").to_string())
                .unwrap_or_else(|| format!("vol{i:04}"));
            let output = out_dir
                .unwrap_or_else(|| Path::new("."))
                .join(format!("{stem}_rot{j:02}.nii.gz"));
            (
                rotated,
                AugmentRecord {
                    output,
                    source: source.clone(),
                    rotation: rot,
                    seed: s,
                },
            )
        })
        .collect();
    if let Some(dir) = out_dir {
        std::fs::create_dir_all(dir)?;
        for (vol, rec) in &results {
            write_nifti(vol, &rec.output)?;
        }
    }
    Ok(results.into_iter().unzip())
}

pub fn write_manifest(records: &[AugmentRecord], path: &Path) -> Result<()> {
    let mut s = String::new();
    for r in records {
        s.push_str(&r.manifest_line());
        s.push('\n');
    }
    std::fs::write(path, s)?;
    Ok(())
}
