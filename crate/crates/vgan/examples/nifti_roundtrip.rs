//! NIfTI-1 I/O and preprocessing: write, read back bit-identically (plain
//! and gzip), then run the downsample / crop / normalize chain.
//!
//! ```bash
//! cargo run --release -p vgan --example nifti_roundtrip
//! ```

use vgan::synth::phantom;
use vgan::volio::{
    center_crop, downsample_by_2, normalize_intensity, read_nifti, write_nifti,
};

fn main() -> vgan::Result<()> {
    let dir = std::env::temp_dir().join("vgan_nifti_example");
    std::fs::create_dir_all(&dir)?;

    let v = phantom(32, 0.7, 8);
    for name in ["phantom.nii", "phantom.nii.gz"] {
        let path = dir.join(name);
        write_nifti(&v, &path)?;
        let r = read_nifti(&path)?;
        println!(
            "{name}: dims {:?}, voxel {:?} mm, bit-identical: {}",
            r.dims,
            r.voxel_size_mm,
            r.data == v.data
        );
    }

    let down = downsample_by_2(&v);
    let cropped = center_crop(&down, (12, 12, 12))?;
    let norm = normalize_intensity(&cropped)?;
    let (lo, hi) = norm.min_max();
    println!(
        "preprocess chain: {:?} @ {:.1}mm -> {:?} @ {:.1}mm -> crop {:?} -> range [{lo}, {hi}]",
        v.dims, v.voxel_size_mm.0, down.dims, down.voxel_size_mm.0, norm.dims
    );
    Ok(())
}
