//! Binary checkpoint container: magic "VGAN", format version, a
//! length-prefixed table of named little-endian f32 tensors (weights and
//! Adam moments), then schedule scalars and the RNG state.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use indexmap::IndexMap;

use crate::error::{Result, VganError};
use crate::nets::NetworkWeights;
use crate::optim::{AdamConfig, OptimizerState};
use crate::schedule::{Phase, TrainSchedule};
use crate::tensor::Tensor;

pub const MAGIC: &[u8; 4] = b"VGAN";
pub const FORMAT_VERSION: u32 = 1;

/// Serialized RNG state for exact resume (ChaCha stream position).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RngState {
    pub seed: [u8; 32],
    pub stream: u64,
    pub word_pos: u128,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint {
    pub version: u32,
    pub g: NetworkWeights,
    pub d: NetworkWeights,
    pub g_opt: OptimizerState,
    pub d_opt: OptimizerState,
    pub schedule: TrainSchedule,
    pub step_count: u64,
    pub epoch: u64,
    pub cursor: u64,
    pub rng: RngState,
}

fn write_tensor<W: Write>(w: &mut W, name: &str, t: &Tensor<f32>) -> Result<()> {
    w.write_u32::<LittleEndian>(name.len() as u32)?;
    w.write_all(name.as_bytes())?;
    w.write_u8(t.shape().len() as u8)?;
    for &d in t.shape() {
        w.write_u32::<LittleEndian>(d as u32)?;
    }
    for &v in t.data() {
        w.write_f32::<LittleEndian>(v)?;
    }
    Ok(())
}

fn read_tensor<R: Read>(r: &mut R) -> Result<(String, Tensor<f32>)> {
    let name_len = r.read_u32::<LittleEndian>()? as usize;
    if name_len > 4096 {
        return Err(VganError::Checkpoint(format!(
            "implausible name length {name_len}; file is corrupt"
        )));
    }
    let mut name = vec![0u8; name_len];
    r.read_exact(&mut name)?;
    let name = String::from_utf8(name)
        .map_err(|_| VganError::Checkpoint("non-utf8 tensor name".into()))?;
    let ndim = r.read_u8()? as usize;
    let mut shape = Vec::with_capacity(ndim);
    for _ in 0..ndim {
        shape.push(r.read_u32::<LittleEndian>()? as usize);
    }
    let n: usize = shape.iter().product();
    let mut data = vec![0f32; n];
    r.read_f32_into::<LittleEndian>(&mut data)
        .map_err(|e| VganError::Checkpoint(format!("truncated tensor {name}: {e}")))?;
    Ok((name, Tensor::from_vec(&shape, data)?))
}

fn write_weights<W: Write>(w: &mut W, prefix: &str, nw: &NetworkWeights) -> Result<()> {
    for (name, t) in nw.iter() {
        write_tensor(w, &format!("{prefix}{name}"), t)?;
    }
    Ok(())
}

fn write_opt<W: Write>(w: &mut W, prefix: &str, opt: &OptimizerState) -> Result<()> {
    for (name, (m, v)) in opt.moments() {
        write_tensor(w, &format!("{prefix}m.{name}"), m)?;
        write_tensor(w, &format!("{prefix}v.{name}"), v)?;
    }
    Ok(())
}

fn write_adam_cfg<W: Write>(w: &mut W, cfg: &AdamConfig) -> Result<()> {
    w.write_f64::<LittleEndian>(cfg.beta1)?;
    w.write_f64::<LittleEndian>(cfg.beta2)?;
    w.write_f64::<LittleEndian>(cfg.eps)?;
    Ok(())
}

fn read_adam_cfg<R: Read>(r: &mut R) -> Result<AdamConfig> {
    Ok(AdamConfig {
        beta1: r.read_f64::<LittleEndian>()?,
        beta2: r.read_f64::<LittleEndian>()?,
        eps: r.read_f64::<LittleEndian>()?,
    })
}

impl Checkpoint {
    pub fn save(&self, path: &Path) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        w.write_all(MAGIC)?;
        w.write_u32::<LittleEndian>(self.version)?;

        let n_tensors = self.g.len()
            + self.d.len()
            + 2 * self.g.len()
            + 2 * self.d.len();
        w.write_u32::<LittleEndian>(n_tensors as u32)?;
        write_weights(&mut w, "", &self.g)?;
        write_weights(&mut w, "", &self.d)?;
        write_opt(&mut w, "adam.g.", &self.g_opt)?;
        write_opt(&mut w, "adam.d.", &self.d_opt)?;

        let s = &self.schedule;
        w.write_u32::<LittleEndian>(s.stage as u32)?;
        w.write_u32::<LittleEndian>(s.target_stage as u32)?;
        w.write_u8(match s.phase {
            Phase::FadeIn => 0,
            Phase::Stabilize => 1,
        })?;
        w.write_u64::<LittleEndian>(s.reals_shown_in_phase)?;
        w.write_u64::<LittleEndian>(s.reals_per_phase)?;
        w.write_u32::<LittleEndian>(s.lr_table.len() as u32)?;
        for &lr in &s.lr_table {
            w.write_f64::<LittleEndian>(lr)?;
        }
        match s.late_lr {
            Some((rate, frac)) => {
                w.write_u8(1)?;
                w.write_f64::<LittleEndian>(rate)?;
                w.write_f64::<LittleEndian>(frac)?;
            }
            None => {
                w.write_u8(0)?;
                w.write_f64::<LittleEndian>(0.0)?;
                w.write_f64::<LittleEndian>(0.0)?;
            }
        }
        w.write_u8(s.is_complete() as u8)?;
        w.write_u64::<LittleEndian>(self.step_count)?;
        w.write_u64::<LittleEndian>(self.epoch)?;
        w.write_u64::<LittleEndian>(self.cursor)?;
        w.write_u64::<LittleEndian>(self.g_opt.t)?;
        w.write_u64::<LittleEndian>(self.d_opt.t)?;
        write_adam_cfg(&mut w, &self.g_opt.cfg)?;
        write_adam_cfg(&mut w, &self.d_opt.cfg)?;

        w.write_all(&self.rng.seed)?;
        w.write_u64::<LittleEndian>(self.rng.stream)?;
        w.write_u128::<LittleEndian>(self.rng.word_pos)?;
        w.flush()?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let mut r = BufReader::new(File::open(path)?);
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(VganError::Checkpoint(format!(
                "bad magic {magic:?}, expected {MAGIC:?}; not a checkpoint file"
            )));
        }
        let version = r.read_u32::<LittleEndian>()?;
        if version != FORMAT_VERSION {
            return Err(VganError::Checkpoint(format!(
                "unsupported checkpoint format version {version}, this build reads {FORMAT_VERSION}"
            )));
        }
        let n_tensors = r.read_u32::<LittleEndian>()? as usize;
        let mut g = NetworkWeights::new();
        let mut d = NetworkWeights::new();
        let mut moments: IndexMap<String, Tensor<f32>> = IndexMap::new();
        for _ in 0..n_tensors {
            let (name, t) = read_tensor(&mut r)?;
            if let Some(rest) = name.strip_prefix("adam.") {
                moments.insert(rest.to_string(), t);
            } else if name.starts_with("g.") {
                g.insert(&name, t);
            } else if name.starts_with("d.") {
                d.insert(&name, t);
            } else {
                return Err(VganError::Checkpoint(format!("unknown tensor {name}")));
            }
        }

        let stage = r.read_u32::<LittleEndian>()? as usize;
        let target_stage = r.read_u32::<LittleEndian>()? as usize;
        let phase = match r.read_u8()? {
            0 => Phase::FadeIn,
            1 => Phase::Stabilize,
            p => {
                return Err(VganError::Checkpoint(format!("invalid phase byte {p}")));
            }
        };
        let reals_shown = r.read_u64::<LittleEndian>()?;
        let reals_per_phase = r.read_u64::<LittleEndian>()?;
        let n_lr = r.read_u32::<LittleEndian>()? as usize;
        let mut lr_table = Vec::with_capacity(n_lr);
        for _ in 0..n_lr {
            lr_table.push(r.read_f64::<LittleEndian>()?);
        }
        let has_late = r.read_u8()? != 0;
        let rate = r.read_f64::<LittleEndian>()?;
        let frac = r.read_f64::<LittleEndian>()?;
        let complete = r.read_u8()? != 0;
        let step_count = r.read_u64::<LittleEndian>()?;
        let epoch = r.read_u64::<LittleEndian>()?;
        let cursor = r.read_u64::<LittleEndian>()?;
        let g_t = r.read_u64::<LittleEndian>()?;
        let d_t = r.read_u64::<LittleEndian>()?;
        let g_cfg = read_adam_cfg(&mut r)?;
        let d_cfg = read_adam_cfg(&mut r)?;

        let mut seed = [0u8; 32];
        r.read_exact(&mut seed)?;
        let stream = r.read_u64::<LittleEndian>()?;
        let word_pos = r.read_u128::<LittleEndian>()?;

        let mut schedule = TrainSchedule::new(
            target_stage,
            reals_per_phase,
            lr_table,
            has_late.then_some((rate, frac)),
        );
        schedule.restore(stage, phase, reals_shown, complete);

        let mut g_opt = OptimizerState::new(&g, g_cfg);
        g_opt.t = g_t;
        let mut d_opt = OptimizerState::new(&d, d_cfg);
        d_opt.t = d_t;
        // moment keys look like "g.m.<param>" / "d.v.<param>" after the
        // "adam." prefix was stripped
        let mut m_map: IndexMap<String, Tensor<f32>> = IndexMap::new();
        let mut v_map: IndexMap<String, Tensor<f32>> = IndexMap::new();
        for (name, t) in moments {
            let (net, rest) = name
                .split_once('.')
                .ok_or_else(|| VganError::Checkpoint(format!("bad moment name {name}")))?;
            let (kind, param) = rest
                .split_once('.')
                .ok_or_else(|| VganError::Checkpoint(format!("bad moment name {name}")))?;
            if net != "g" && net != "d" {
                return Err(VganError::Checkpoint(format!("bad moment name {name}")));
            }
            match kind {
                "m" => m_map.insert(param.to_string(), t),
                "v" => v_map.insert(param.to_string(), t),
                _ => {
                    return Err(VganError::Checkpoint(format!("bad moment name {name}")));
                }
            };
        }
        for (param, m) in m_map {
            let v = v_map.shift_remove(&param).ok_or_else(|| {
                VganError::Checkpoint(format!("missing second moment for {param}"))
            })?;
            let opt = if param.starts_with("g.") {
                &mut g_opt
            } else {
                &mut d_opt
            };
            opt.set_moments(&param, m, v)?;
        }

        Ok(Checkpoint {
            version,
            g,
            d,
            g_opt,
            d_opt,
            schedule,
            step_count,
            epoch,
            cursor,
            rng: RngState {
                seed,
                stream,
                word_pos,
            },
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trainer::{Trainer, TrainerConfig};

    fn tiny_snapshot() -> Checkpoint {
        let mut cfg = TrainerConfig::desk(0, 5);
        cfg.n_filters = 4;
        cfg.latent_dim = 8;
        Trainer::new(cfg).snapshot()
    }

    #[test]
    fn round_trip_is_bit_identical() {
        let cp = tiny_snapshot();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cp.vgan");
        cp.save(&path).unwrap();
        let loaded = Checkpoint::load(&path).unwrap();
        assert_eq!(loaded, cp);
    }

    #[test]
    fn rejects_bad_magic() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.vgan");
        std::fs::write(&path, b"NOPE\x01\x00\x00\x00").unwrap();
        let err = Checkpoint::load(&path).unwrap_err();
        assert!(err.to_string().contains("magic"), "{err}");
    }

    #[test]
    fn rejects_unknown_version() {
        let cp = tiny_snapshot();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cp.vgan");
        cp.save(&path).unwrap();
        let mut bytes = std::fs::read(&path).unwrap();
        bytes[4] = 99;
        std::fs::write(&path, bytes).unwrap();
        let err = Checkpoint::load(&path).unwrap_err();
        assert!(err.to_string().contains("version"), "{err}");
    }

    #[test]
    fn rejects_truncated_file() {
        let cp = tiny_snapshot();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cp.vgan");
        cp.save(&path).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        std::fs::write(&path, &bytes[..bytes.len() / 2]).unwrap();
        assert!(Checkpoint::load(&path).is_err());
    }
}
