//! Volume I/O and preprocessing: NIfTI-1 read/write (plain and gzip),
//! factor-2 downsampling, center crop, intensity normalization to [-1,1],
//! nearest-neighbor upsampling, and PGM slice export.
//!
//! Byte formats are little-endian regardless of host. Only single-file
//! NIfTI-1 is handled; .hdr/.img pairs and NIfTI-2 are rejected.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use byteorder::{ByteOrder, LittleEndian};
use flate2::read::GzDecoder;
use flate2::write::GzEncoder;
use flate2::Compression;

use crate::error::{Result, VganError};
use crate::tensor::Tensor;

pub const HEADER_SIZE: usize = 348;
pub const VOX_OFFSET: usize = 352;
const DT_INT16: i16 = 4;
const DT_FLOAT32: i16 = 16;

/// A dense f32 grid with voxel spacing. `data` is in file order: the first
/// axis of `dims` varies slowest, the last fastest (NIfTI x is fastest, so
/// dims = (z, y, x) in scanner terms).
#[derive(Clone, Debug, PartialEq)]
pub struct Volume {
    pub dims: (usize, usize, usize),
    pub voxel_size_mm: (f32, f32, f32),
    pub data: Vec<f32>,
    /// (min, max) recorded by normalize_intensity so it can be inverted;
    /// set to the data range when loaded from disk.
    pub intensity_range: Option<(f32, f32)>,
    /// Original 348-byte header, preserved verbatim (orientation fields
    /// survive a round trip but are never interpreted).
    pub raw_header: Option<Box<[u8; HEADER_SIZE]>>,
}

impl Volume {
    pub fn new(dims: (usize, usize, usize), voxel_size_mm: (f32, f32, f32), data: Vec<f32>) -> Self {
        assert_eq!(dims.0 * dims.1 * dims.2, data.len(), "dims/data mismatch");
        assert!(dims.0 > 0 && dims.1 > 0 && dims.2 > 0);
        Volume {
            dims,
            voxel_size_mm,
            data,
            intensity_range: None,
            raw_header: None,
        }
    }

    pub fn at(&self, d: usize, h: usize, w: usize) -> f32 {
        let (_, hh, ww) = self.dims;
        self.data[(d * hh + h) * ww + w]
    }

    pub fn min_max(&self) -> (f32, f32) {
        let mut lo = f32::INFINITY;
        let mut hi = f32::NEG_INFINITY;
        for &v in &self.data {
            lo = lo.min(v);
            hi = hi.max(v);
        }
        (lo, hi)
    }

    /// Tensor view shaped [1, D, H, W] for the training pipeline.
    pub fn to_tensor(&self) -> Tensor<f32> {
        let (d, h, w) = self.dims;
        Tensor::from_vec(&[1, d, h, w], self.data.clone()).unwrap()
    }

    pub fn from_tensor(t: &Tensor<f32>, voxel_size_mm: (f32, f32, f32)) -> Result<Self> {
        let s = t.shape();
        if s.len() != 4 || s[0] != 1 {
            return Err(VganError::InvalidArgument(format!(
                "expected [1,D,H,W] tensor, got {s:?}"
            )));
        }
        Ok(Volume::new((s[1], s[2], s[3]), voxel_size_mm, t.data().to_vec()))
    }
}

fn nifti_err(path: &Path, msg: impl Into<String>) -> VganError {
    VganError::Nifti {
        path: path.to_path_buf(),
        msg: msg.into(),
    }
}

fn read_all(path: &Path) -> Result<Vec<u8>> {
    let mut f = File::open(path).map_err(|e| nifti_err(path, format!("cannot open: {e}")))?;
    let mut head = [0u8; 2];
    let n = f.read(&mut head)?;
    let mut bytes = Vec::new();
    if n == 2 && head == [0x1F, 0x8B] {
        // gzip container, detected by magic rather than extension
        let mut dec = GzDecoder::new(head.chain(f));
        dec.read_to_end(&mut bytes)
            .map_err(|e| nifti_err(path, format!("gzip decode failed: {e}")))?;
    } else {
        bytes.extend_from_slice(&head[..n]);
        f.read_to_end(&mut bytes)?;
    }
    Ok(bytes)
}

/// Reads a single-file NIfTI-1 volume (.nii or .nii.gz), applying
/// scl_slope/scl_inter when slope is nonzero.
pub fn read_nifti(path: &Path) -> Result<Volume> {
    let bytes = read_all(path)?;
    if bytes.len() < HEADER_SIZE {
        return Err(nifti_err(path, format!("file is {} bytes, header needs 348", bytes.len())));
    }
    let hdr = &bytes[..HEADER_SIZE];
    let sizeof_hdr = LittleEndian::read_i32(&hdr[0..4]);
    if sizeof_hdr != 348 {
        if sizeof_hdr.swap_bytes() == 348 {
            return Err(nifti_err(path, "big-endian NIfTI is not supported"));
        }
        return Err(nifti_err(path, format!("sizeof_hdr = {sizeof_hdr}, not a NIfTI-1 file")));
    }
    let magic = &hdr[344..348];
    if magic == b"ni1\0" {
        return Err(nifti_err(path, "two-file .hdr/.img NIfTI is not supported"));
    }
    if magic != b"n+1\0" {
        return Err(nifti_err(path, format!("bad magic {magic:?}, expected \"n+1\\0\"")));
    }
    let ndim = LittleEndian::read_i16(&hdr[40..42]);
    if !(1..=7).contains(&ndim) {
        return Err(nifti_err(path, format!("dim[0] = {ndim} out of range")));
    }
    let mut dim = [1i16; 7];
    for (i, d) in dim.iter_mut().enumerate() {
        if i < ndim as usize {
            *d = LittleEndian::read_i16(&hdr[42 + 2 * i..44 + 2 * i]);
        }
    }
    if ndim < 3 || dim.iter().any(|&d| d < 1) || dim[3..].iter().any(|&d| d > 1) {
        return Err(nifti_err(path, format!("unsupported dim {dim:?}; need a single 3D volume")));
    }
    let (nx, ny, nz) = (dim[0] as usize, dim[1] as usize, dim[2] as usize);
    let datatype = LittleEndian::read_i16(&hdr[70..72]);
    let vox_offset = LittleEndian::read_f32(&hdr[108..112]) as usize;
    let offset = vox_offset.max(HEADER_SIZE);
    let scl_slope = LittleEndian::read_f32(&hdr[112..116]);
    let scl_inter = LittleEndian::read_f32(&hdr[116..120]);
    let pixdim = (
        LittleEndian::read_f32(&hdr[80..84]),
        LittleEndian::read_f32(&hdr[84..88]),
        LittleEndian::read_f32(&hdr[88..92]),
    );

    let n = nx * ny * nz;
    let payload = &bytes[offset.min(bytes.len())..];
    let mut data = Vec::with_capacity(n);
    match datatype {
        DT_FLOAT32 => {
            if payload.len() < n * 4 {
                return Err(nifti_err(path, format!(
                    "truncated payload: need {} bytes of float32, have {}",
                    n * 4,
                    payload.len()
                )));
            }
            for i in 0..n {
                data.push(LittleEndian::read_f32(&payload[4 * i..4 * i + 4]));
            }
        }
        DT_INT16 => {
            if payload.len() < n * 2 {
                return Err(nifti_err(path, format!(
                    "truncated payload: need {} bytes of int16, have {}",
                    n * 2,
                    payload.len()
                )));
            }
            for i in 0..n {
                data.push(LittleEndian::read_i16(&payload[2 * i..2 * i + 2]) as f32);
            }
        }
        dt => {
            return Err(nifti_err(path, format!(
                "unsupported datatype {dt}; this reader handles 4 (int16) and 16 (float32)"
            )));
        }
    }
    if scl_slope != 0.0 && (scl_slope, scl_inter) != (1.0, 0.0) {
        for v in &mut data {
            *v = *v * scl_slope + scl_inter;
        }
    }

    // x is the fastest axis on disk; dims = (z, y, x) keeps file order
    let mut vol = Volume::new((nz, ny, nx), (pixdim.0, pixdim.1, pixdim.2), data);
    vol.intensity_range = Some(vol.min_max());
    let mut raw = Box::new([0u8; HEADER_SIZE]);
    raw.copy_from_slice(hdr);
    vol.raw_header = Some(raw);
    Ok(vol)
}

fn build_header(v: &Volume) -> [u8; HEADER_SIZE] {
    let mut hdr = match &v.raw_header {
        Some(raw) => **raw,
        None => [0u8; HEADER_SIZE],
    };
    let (d, h, w) = v.dims;
    LittleEndian::write_i32(&mut hdr[0..4], 348);
    LittleEndian::write_i16(&mut hdr[40..42], 3);
    LittleEndian::write_i16(&mut hdr[42..44], w as i16);
    LittleEndian::write_i16(&mut hdr[44..46], h as i16);
    LittleEndian::write_i16(&mut hdr[46..48], d as i16);
    for i in 4..8 {
        LittleEndian::write_i16(&mut hdr[40 + 2 * i..42 + 2 * i], 1);
    }
    LittleEndian::write_i16(&mut hdr[70..72], DT_FLOAT32);
    LittleEndian::write_i16(&mut hdr[72..74], 32);
    if LittleEndian::read_f32(&hdr[76..80]) == 0.0 {
        LittleEndian::write_f32(&mut hdr[76..80], 1.0);
    }
    LittleEndian::write_f32(&mut hdr[80..84], v.voxel_size_mm.0);
    LittleEndian::write_f32(&mut hdr[84..88], v.voxel_size_mm.1);
    LittleEndian::write_f32(&mut hdr[88..92], v.voxel_size_mm.2);
    LittleEndian::write_f32(&mut hdr[108..112], VOX_OFFSET as f32);
    LittleEndian::write_f32(&mut hdr[112..116], 0.0);
    LittleEndian::write_f32(&mut hdr[116..120], 0.0);
    hdr[344..348].copy_from_slice(b"n+1\0");
    hdr
}

/// Writes `v` as float32 NIfTI-1 (vox_offset 352). A `.gz` extension selects
/// the gzip container.
pub fn write_nifti(v: &Volume, path: &Path) -> Result<()> {
    let hdr = build_header(v);
    let mut bytes = Vec::with_capacity(VOX_OFFSET + v.data.len() * 4);
    bytes.extend_from_slice(&hdr);
    bytes.extend_from_slice(&[0u8; VOX_OFFSET - HEADER_SIZE]);
    for &x in &v.data {
        bytes.extend_from_slice(&x.to_le_bytes());
    }
    let f = File::create(path).map_err(|e| nifti_err(path, format!("cannot create: {e}")))?;
    if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("gz")) {
        let mut enc = GzEncoder::new(f, Compression::default());
        enc.write_all(&bytes)?;
        enc.finish()?;
    } else {
        let mut f = f;
        f.write_all(&bytes)?;
    }
    Ok(())
}

/// 2x2x2 block-mean pooling; voxel size doubles. Odd trailing slices are
/// truncated first (and reported on stderr, since data is silently lost).
pub fn downsample_by_2(v: &Volume) -> Volume {
    let (d, h, w) = v.dims;
    if d % 2 != 0 || h % 2 != 0 || w % 2 != 0 {
        eprintln!(
            "downsample_by_2: truncating odd extents {:?} -> {:?}",
            (d, h, w),
            (d & !1, h & !1, w & !1)
        );
    }
    let (d2, h2, w2) = (d / 2, h / 2, w / 2);
    let mut out = vec![0f32; d2 * h2 * w2];
    for z in 0..d2 {
        for y in 0..h2 {
            for x in 0..w2 {
                let mut acc = 0f64;
                for dz in 0..2 {
                    for dy in 0..2 {
                        for dx in 0..2 {
                            acc += v.at(2 * z + dz, 2 * y + dy, 2 * x + dx) as f64;
                        }
                    }
                }
                out[(z * h2 + y) * w2 + x] = (acc / 8.0) as f32;
            }
        }
    }
    let s = v.voxel_size_mm;
    let mut r = Volume::new((d2, h2, w2), (s.0 * 2.0, s.1 * 2.0, s.2 * 2.0), out);
    r.raw_header = v.raw_header.clone();
    r.intensity_range = v.intensity_range;
    r
}

/// Centered crop; when the margin is odd the extra removed voxel comes off
/// the high side.
pub fn center_crop(v: &Volume, target: (usize, usize, usize)) -> Result<Volume> {
    let (d, h, w) = v.dims;
    let (td, th, tw) = target;
    if td > d || th > h || tw > w || td == 0 || th == 0 || tw == 0 {
        return Err(VganError::InvalidArgument(format!(
            "crop target {target:?} exceeds volume dims {:?}",
            v.dims
        )));
    }
    let (od, oh, ow) = ((d - td) / 2, (h - th) / 2, (w - tw) / 2);
    let mut out = Vec::with_capacity(td * th * tw);
    for z in 0..td {
        for y in 0..th {
            for x in 0..tw {
                out.push(v.at(od + z, oh + y, ow + x));
            }
        }
    }
    let mut r = Volume::new(target, v.voxel_size_mm, out);
    r.raw_header = v.raw_header.clone();
    r.intensity_range = v.intensity_range;
    Ok(r)
}

/// Linear map of the volume's [min, max] onto [-1, 1]; the original range is
/// recorded so `invert_normalization` can undo it.
pub fn normalize_intensity(v: &Volume) -> Result<Volume> {
    let (lo, hi) = v.min_max();
    if !(hi > lo) {
        return Err(VganError::Data(format!(
            "cannot normalize: intensity range [{lo}, {hi}] is degenerate"
        )));
    }
    let mut r = v.clone();
    let scale = 2.0 / (hi - lo) as f64;
    for x in &mut r.data {
        *x = ((*x - lo) as f64 * scale - 1.0) as f32;
    }
    r.intensity_range = Some((lo, hi));
    Ok(r)
}

pub fn invert_normalization(v: &Volume) -> Result<Volume> {
    let (lo, hi) = v.intensity_range.ok_or_else(|| {
        VganError::Data("volume carries no intensity range to invert".into())
    })?;
    let mut r = v.clone();
    let scale = (hi - lo) as f64 / 2.0;
    for x in &mut r.data {
        *x = ((*x as f64 + 1.0) * scale + lo as f64) as f32;
    }
    Ok(r)
}

/// Nearest-neighbor upsampling to exact integer multiples of the source dims.
pub fn upsample_to(v: &Volume, target: (usize, usize, usize)) -> Result<Volume> {
    let (d, h, w) = v.dims;
    let (td, th, tw) = target;
    if td % d != 0 || th % h != 0 || tw % w != 0 || td == 0 {
        return Err(VganError::InvalidArgument(format!(
            "upsample target {target:?} is not an integer multiple of {:?}",
            v.dims
        )));
    }
    let (rd, rh, rw) = (td / d, th / h, tw / w);
    let mut out = Vec::with_capacity(td * th * tw);
    for z in 0..td {
        for y in 0..th {
            for x in 0..tw {
                out.push(v.at(z / rd, y / rh, x / rw));
            }
        }
    }
    let s = v.voxel_size_mm;
    let mut r = Volume::new(
        target,
        (s.0 / rd as f32, s.1 / rh as f32, s.2 / rw as f32),
        out,
    );
    r.intensity_range = v.intensity_range;
    Ok(r)
}

fn write_pgm(path: &Path, width: usize, height: usize, pixels: &[u8]) -> Result<()> {
    let mut f = File::create(path)?;
    write!(f, "P5\n{width} {height}\n255\n")?;
    f.write_all(pixels)?;
    Ok(())
}

fn to_byte(v: f32) -> u8 {
    (((v + 1.0) / 2.0 * 255.0).round().clamp(0.0, 255.0)) as u8
}

/// Writes the three central slices (axial/coronal/sagittal) of a [-1,1]
/// volume as 8-bit PGM files `<prefix>_axial.pgm` etc.
pub fn export_slices(v: &Volume, prefix: &Path) -> Result<Vec<std::path::PathBuf>> {
    let (d, h, w) = v.dims;
    let stem = prefix.to_string_lossy();
    let mut paths = Vec::with_capacity(3);

    let axial: Vec<u8> = {
        let z = d / 2;
        (0..h * w).map(|i| to_byte(v.at(z, i / w, i % w))).collect()
    };
    let coronal: Vec<u8> = {
        let y = h / 2;
        (0..d * w).map(|i| to_byte(v.at(i / w, y, i % w))).collect()
    };
    let sagittal: Vec<u8> = {
        let x = w / 2;
        (0..d * h).map(|i| to_byte(v.at(i / h, i % h, x))).collect()
    };
    for (name, wid, hei, px) in [
        ("axial", w, h, axial),
        ("coronal", w, d, coronal),
        ("sagittal", h, d, sagittal),
    ] {
        let path = std::path::PathBuf::from(format!("{stem}_{name}.pgm"));
        write_pgm(&path, wid, hei, &px)?;
        paths.push(path);
    }
    Ok(paths)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_volume(dims: (usize, usize, usize), seed: u64) -> Volume {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = dims.0 * dims.1 * dims.2;
        let data: Vec<f32> = (0..n).map(|_| rng.gen_range(-1.0f32..1.0)).collect();
        Volume::new(dims, (0.7, 0.7, 0.7), data)
    }

    #[test]
    fn round_trip_plain_is_bit_identical() {
        let v = random_volume((5, 4, 3), 1);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("v.nii");
        write_nifti(&v, &path).unwrap();
        let r = read_nifti(&path).unwrap();
        assert_eq!(r.dims, v.dims);
        assert_eq!(r.data, v.data);
        assert_eq!(r.voxel_size_mm, v.voxel_size_mm);
    }

    #[test]
    fn round_trip_gzip_is_bit_identical() {
        let v = random_volume((4, 4, 4), 2);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("v.nii.gz");
        write_nifti(&v, &path).unwrap();
        // confirm it really is gzip on disk
        let head = &std::fs::read(&path).unwrap()[..2];
        assert_eq!(head, [0x1F, 0x8B]);
        let r = read_nifti(&path).unwrap();
        assert_eq!(r.data, v.data);
    }

    fn hand_built_file(datatype: i16, scl: (f32, f32), payload: &[u8]) -> Vec<u8> {
        let mut hdr = [0u8; HEADER_SIZE];
        LittleEndian::write_i32(&mut hdr[0..4], 348);
        LittleEndian::write_i16(&mut hdr[40..42], 3);
        LittleEndian::write_i16(&mut hdr[42..44], 2);
        LittleEndian::write_i16(&mut hdr[44..46], 2);
        LittleEndian::write_i16(&mut hdr[46..48], 2);
        LittleEndian::write_i16(&mut hdr[70..72], datatype);
        LittleEndian::write_f32(&mut hdr[80..84], 0.7);
        LittleEndian::write_f32(&mut hdr[84..88], 0.7);
        LittleEndian::write_f32(&mut hdr[88..92], 0.7);
        LittleEndian::write_f32(&mut hdr[108..112], 352.0);
        LittleEndian::write_f32(&mut hdr[112..116], scl.0);
        LittleEndian::write_f32(&mut hdr[116..120], scl.1);
        hdr[344..348].copy_from_slice(b"n+1\0");
        let mut bytes = hdr.to_vec();
        bytes.extend_from_slice(&[0u8; 4]);
        bytes.extend_from_slice(payload);
        bytes
    }

    #[test]
    fn golden_float32_file_parses() {
        let vals: Vec<f32> = (0..8).map(|i| i as f32 * 0.5).collect();
        let payload: Vec<u8> = vals.iter().flat_map(|v| v.to_le_bytes()).collect();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("g.nii");
        std::fs::write(&path, hand_built_file(16, (0.0, 0.0), &payload)).unwrap();
        let v = read_nifti(&path).unwrap();
        assert_eq!(v.dims, (2, 2, 2));
        assert_eq!(v.voxel_size_mm, (0.7, 0.7, 0.7));
        assert_eq!(v.data, vals);
    }

    #[test]
    fn int16_scaling_applies_slope_and_intercept() {
        let payload: Vec<u8> = [3i16; 8].iter().flat_map(|v| v.to_le_bytes()).collect();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.nii");
        std::fs::write(&path, hand_built_file(4, (2.0, 1.0), &payload)).unwrap();
        let v = read_nifti(&path).unwrap();
        assert!(v.data.iter().all(|&x| x == 7.0));
    }

    #[test]
    fn distinct_errors_for_bad_files() {
        let dir = tempfile::tempdir().unwrap();

        let path = dir.path().join("magic.nii");
        let mut bad = hand_built_file(16, (0.0, 0.0), &[0u8; 32]);
        bad[344..348].copy_from_slice(b"xxx\0");
        std::fs::write(&path, bad).unwrap();
        assert!(read_nifti(&path).unwrap_err().to_string().contains("magic"));

        let path = dir.path().join("dtype.nii");
        let payload: Vec<u8> = vec![0; 64];
        std::fs::write(&path, hand_built_file(8, (0.0, 0.0), &payload)).unwrap();
        let err = read_nifti(&path).unwrap_err().to_string();
        assert!(err.contains("datatype"), "{err}");

        let path = dir.path().join("trunc.nii");
        std::fs::write(&path, hand_built_file(16, (0.0, 0.0), &[0u8; 7])).unwrap();
        let err = read_nifti(&path).unwrap_err().to_string();
        assert!(err.contains("truncated"), "{err}");
    }

    #[test]
    fn downsample_matches_block_mean_oracle() {
        let v = random_volume((4, 4, 4), 3);
        let d = downsample_by_2(&v);
        let src: Vec<f64> = v.data.iter().map(|&x| x as f64).collect();
        let (oracle, odims) = crate::oracle::block_mean_downsample(&src, v.dims);
        assert_eq!(d.dims, odims);
        assert_eq!(d.voxel_size_mm, (1.4, 1.4, 1.4));
        for (a, b) in d.data.iter().zip(&oracle) {
            assert!((*a as f64 - b).abs() < 1e-6);
        }
    }

    #[test]
    fn downsample_constant_stays_constant_and_truncates_odd() {
        let v = Volume::new((4, 5, 4), (0.7, 0.7, 0.7), vec![0.25; 80]);
        let d = downsample_by_2(&v);
        assert_eq!(d.dims, (2, 2, 2));
        assert!(d.data.iter().all(|&x| x == 0.25));
    }

    #[test]
    fn center_crop_is_a_source_subblock() {
        let v = random_volume((6, 7, 5), 4);
        let c = center_crop(&v, (4, 4, 4)).unwrap();
        // offsets (1, 1, 0): odd margins leave the extra removed voxel high
        for z in 0..4 {
            for y in 0..4 {
                for x in 0..4 {
                    assert_eq!(c.at(z, y, x), v.at(z + 1, y + 1, x));
                }
            }
        }
        let same = center_crop(&v, v.dims).unwrap();
        assert_eq!(same.data, v.data);
        assert!(center_crop(&v, (8, 4, 4)).is_err());
    }

    #[test]
    fn full_pipeline_dims() {
        // 260x311x260 at 0.7mm: truncate 311 to 310, pool, then crop to 128^3
        let v = Volume::new((10, 11, 10), (0.7, 0.7, 0.7), vec![0.0; 1100]);
        let d = downsample_by_2(&v);
        assert_eq!(d.dims, (5, 5, 5));
        assert_eq!(d.voxel_size_mm, (1.4, 1.4, 1.4));
        let c = center_crop(&d, (4, 4, 4)).unwrap();
        assert_eq!(c.dims, (4, 4, 4));
    }

    #[test]
    fn normalize_maps_extremes_and_inverts() {
        let v = Volume::new((1, 1, 3), (1.0, 1.0, 1.0), vec![10.0, 20.0, 30.0]);
        let n = normalize_intensity(&v).unwrap();
        assert_eq!(n.data, vec![-1.0, 0.0, 1.0]);
        let back = invert_normalization(&n).unwrap();
        for (a, b) in back.data.iter().zip(&v.data) {
            assert!((a - b).abs() / b.abs() < 1e-5);
        }
        let flat = Volume::new((1, 1, 2), (1.0, 1.0, 1.0), vec![5.0, 5.0]);
        assert!(normalize_intensity(&flat).is_err());
    }

    #[test]
    fn upsample_replicates_nearest() {
        let v = Volume::new((1, 1, 1), (4.0, 4.0, 4.0), vec![0.5]);
        let u = upsample_to(&v, (2, 2, 2)).unwrap();
        assert_eq!(u.dims, (2, 2, 2));
        assert!(u.data.iter().all(|&x| x == 0.5));
        let w = random_volume((2, 2, 2), 5);
        assert!(upsample_to(&w, (3, 3, 3)).is_err());
        // downsample of the upsample restores the original exactly
        let big = upsample_to(&w, (4, 4, 4)).unwrap();
        assert_eq!(downsample_by_2(&big).data, w.data);
    }

    #[test]
    fn pgm_export_maps_range_to_bytes() {
        let dir = tempfile::tempdir().unwrap();
        let v = Volume::new((2, 2, 2), (1.0, 1.0, 1.0), vec![-1.0; 8]);
        let paths = export_slices(&v, &dir.path().join("lo")).unwrap();
        assert_eq!(paths.len(), 3);
        for p in &paths {
            let bytes = std::fs::read(p).unwrap();
            let header_end = bytes.len() - 4;
            assert_eq!(&bytes[..header_end], b"P5\n2 2\n255\n");
            assert_eq!(&bytes[header_end..], [0, 0, 0, 0]);
        }
        let hi = Volume::new((2, 2, 2), (1.0, 1.0, 1.0), vec![1.0; 8]);
        let paths = export_slices(&hi, &dir.path().join("hi")).unwrap();
        let bytes = std::fs::read(&paths[0]).unwrap();
        assert_eq!(&bytes[bytes.len() - 4..], [255, 255, 255, 255]);
    }

    #[test]
    fn pgm_ramp_golden_bytes() {
        // axial slice of a 1x1x5 ramp: values -1,-0.5,0,0.5,1 -> 0,64,128,191,255
        let v = Volume::new((1, 1, 5), (1.0, 1.0, 1.0), vec![-1.0, -0.5, 0.0, 0.5, 1.0]);
        let dir = tempfile::tempdir().unwrap();
        let paths = export_slices(&v, &dir.path().join("ramp")).unwrap();
        let bytes = std::fs::read(&paths[0]).unwrap();
        assert_eq!(&bytes[bytes.len() - 5..], [0, 64, 128, 191, 255]);
    }

    #[test]
    fn raw_header_survives_round_trip() {
        let v = random_volume((3, 3, 3), 6);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a.nii");
        write_nifti(&v, &path).unwrap();
        let mut r = read_nifti(&path).unwrap();
        // scribble into an orientation field (srow_x lives at 280..296)
        let hdr = r.raw_header.as_mut().unwrap();
        LittleEndian::write_f32(&mut hdr[280..284], 0.125);
        let path2 = dir.path().join("b.nii");
        write_nifti(&r, &path2).unwrap();
        let r2 = read_nifti(&path2).unwrap();
        let hdr2 = r2.raw_header.as_ref().unwrap();
        assert_eq!(LittleEndian::read_f32(&hdr2[280..284]), 0.125);
        assert_eq!(r2.data, r.data);
    }
}
