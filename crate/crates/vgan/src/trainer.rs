//! WGAN-GP adversarial training driven by the progressive schedule.

use std::fs::OpenOptions;
use std::io::Write as IoWrite;
use std::path::PathBuf;

use indexmap::IndexMap;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::checkpoint::{Checkpoint, RngState, FORMAT_VERSION};
use crate::error::{Result, VganError};
use crate::kernels;
use crate::nets::{
    build_discriminator, build_generator, discriminator_forward, generator_forward, NetworkWeights,
    StageConfig, TapedWeights,
};
use crate::optim::{AdamConfig, OptimizerState};
use crate::schedule::{Phase, TrainSchedule};
use crate::tape::{Tape, Var};
use crate::tensor::Tensor;

pub const DEFAULT_LAMBDA_GP: f64 = 10.0;
pub const DEFAULT_DRIFT_EPS: f64 = 0.001;
pub const DEFAULT_BATCH_SIZES: [usize; 4] = [16, 16, 8, 4];

fn mean_of(t: &Tensor<f32>) -> f64 {
    t.data().iter().map(|&v| v as f64).sum::<f64>() / t.numel() as f64
}

/// i.i.d. standard-normal latents, shape [B, latent_dim].
pub fn sample_latents<R: Rng>(rng: &mut R, batch: usize, latent_dim: usize) -> Tensor<f32> {
    assert!(batch >= 1);
    let data: Vec<f32> = (0..batch * latent_dim)
        .map(|_| rng.sample(StandardNormal))
        .collect();
    Tensor::from_vec(&[batch, latent_dim], data).unwrap()
}

/// Critic and generator losses:
/// loss_d = mean(d_fake) - mean(d_real) + lambda*gp + drift*mean(d_real^2),
/// loss_g = -mean(d_fake).
pub fn wgan_gp_losses(
    tape: &mut Tape<f32>,
    d_real: Var,
    d_fake: Var,
    gp: Var,
    lambda: f64,
    drift_eps: f64,
) -> Result<(Var, Var)> {
    let mean_fake = tape.mean_all(d_fake);
    let mean_real = tape.mean_all(d_real);
    let real_sq = tape.mul(d_real, d_real)?;
    let drift = tape.mean_all(real_sq);

    for (name, v) in [
        ("mean(d_real)", mean_real),
        ("mean(d_fake)", mean_fake),
        ("gradient penalty", gp),
        ("drift term", drift),
    ] {
        if !tape.value(v).all_finite() {
            return Err(VganError::NonFinite(format!("loss term {name}")));
        }
    }

    let neg_real = tape.scale(mean_real, -1.0);
    let base = tape.add(mean_fake, neg_real)?;
    let gp_term = tape.scale(gp, lambda);
    let with_gp = tape.add(base, gp_term)?;
    let drift_term = tape.scale(drift, drift_eps);
    let loss_d = tape.add(with_gp, drift_term)?;
    let loss_g = tape.scale(mean_fake, -1.0);
    Ok((loss_d, loss_g))
}

/// mean over the batch of (||grad_xhat D(xhat)||_2 - 1)^2 with
/// xhat = u*real + (1-u)*fake, u ~ Uniform(0,1) per sample.
#[allow(clippy::too_many_arguments)]
pub fn gradient_penalty<R: Rng>(
    tape: &mut Tape<f32>,
    d_weights: &TapedWeights,
    real: &Tensor<f32>,
    fake: &Tensor<f32>,
    cfg: &StageConfig,
    stage: usize,
    alpha: f64,
    rng: &mut R,
) -> Result<Var> {
    if real.shape() != fake.shape() {
        return Err(VganError::ShapeMismatch {
            left: real.shape().to_vec(),
            right: fake.shape().to_vec(),
            ctx: "gradient_penalty",
        });
    }
    let batch = real.shape()[0];
    let per_sample: usize = real.shape()[1..].iter().product();
    let mut xhat = real.clone();
    for i in 0..batch {
        let u: f32 = rng.gen_range(0.0..1.0);
        let lo = i * per_sample;
        for j in lo..lo + per_sample {
            xhat.data_mut()[j] = u * real.data()[j] + (1.0 - u) * fake.data()[j];
        }
    }
    let xv = tape.leaf(xhat.with_grad());
    let score = discriminator_forward(tape, d_weights, xv, cfg, stage, alpha)?;
    let total = tape.sum_all(score);
    let map = tape.backward(total)?;
    let g = map.grad_var(xv).ok_or_else(|| {
        VganError::NonFinite("gradient penalty: critic detached from its input".into())
    })?;
    if !tape.value(g).all_finite() {
        return Err(VganError::NonFinite("gradient penalty input gradient".into()));
    }
    let g2 = tape.mul(g, g)?;
    let ssum = tape.reduce(g2, &[1, 2, 3, 4], false)?;
    let norm = tape.sqrt_eps(ssum, 1e-12);
    if !tape.value(norm).all_finite() {
        return Err(VganError::NonFinite("gradient penalty norm".into()));
    }
    let dev = tape.add_scalar(norm, -1.0);
    let dev2 = tape.mul(dev, dev)?;
    Ok(tape.mean_all(dev2))
}

#[derive(Clone, Debug)]
pub struct TrainerConfig {
    pub n_filters: usize,
    pub latent_dim: usize,
    pub target_stage: usize,
    pub reals_per_phase: u64,
    pub lr_table: Vec<f64>,
    pub late_lr: Option<(f64, f64)>,
    pub batch_sizes: Vec<usize>,
    pub lambda_gp: f64,
    pub drift_eps: f64,
    pub adam: AdamConfig,
    pub seed: u64,
    /// Extra checkpoints every N steps (phase ends always checkpoint); 0 disables.
    pub checkpoint_every: u64,
    pub out_dir: Option<PathBuf>,
    pub cache_dir: Option<PathBuf>,
}

impl TrainerConfig {
    pub fn desk(target_stage: usize, seed: u64) -> Self {
        TrainerConfig {
            n_filters: 128,
            latent_dim: 128,
            target_stage,
            reals_per_phase: crate::schedule::DEFAULT_REALS_PER_PHASE,
            lr_table: crate::schedule::DEFAULT_LR_TABLE.to_vec(),
            late_lr: Some(crate::schedule::DEFAULT_LATE_LR),
            batch_sizes: DEFAULT_BATCH_SIZES.to_vec(),
            lambda_gp: DEFAULT_LAMBDA_GP,
            drift_eps: DEFAULT_DRIFT_EPS,
            adam: AdamConfig::default(),
            seed,
            checkpoint_every: 0,
            out_dir: None,
            cache_dir: None,
        }
    }

    pub fn stage_cfg(&self) -> StageConfig {
        StageConfig::new(self.target_stage, self.n_filters, self.latent_dim)
    }

    pub fn batch_for_stage(&self, stage: usize) -> usize {
        let idx = stage.min(self.batch_sizes.len() - 1);
        self.batch_sizes[idx]
    }
}

#[derive(Clone, Copy, Debug)]
pub struct StepReport {
    pub step: u64,
    pub stage: usize,
    pub phase: Phase,
    pub alpha: f64,
    pub loss_d: f64,
    pub loss_g: f64,
    pub d_real_mean: f64,
    pub d_fake_mean: f64,
    pub phase_ended: bool,
}

pub struct Trainer {
    pub cfg: TrainerConfig,
    pub g: NetworkWeights,
    pub d: NetworkWeights,
    pub g_opt: OptimizerState,
    pub d_opt: OptimizerState,
    pub schedule: TrainSchedule,
    pub rng: ChaCha8Rng,
    pub step_count: u64,
    pub epoch: u64,
    pub cursor: u64,
}

impl Trainer {
    pub fn new(cfg: TrainerConfig) -> Self {
        let stage_cfg = cfg.stage_cfg();
        let mut init_rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let g = build_generator(&stage_cfg, &mut init_rng);
        let d = build_discriminator(&stage_cfg, &mut init_rng);
        let g_opt = OptimizerState::new(&g, cfg.adam);
        let d_opt = OptimizerState::new(&d, cfg.adam);
        let schedule = TrainSchedule::new(
            cfg.target_stage,
            cfg.reals_per_phase,
            cfg.lr_table.clone(),
            cfg.late_lr,
        );
        let rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(0x9e37_79b9_7f4a_7c15));
        Trainer {
            cfg,
            g,
            d,
            g_opt,
            d_opt,
            schedule,
            rng,
            step_count: 0,
            epoch: 0,
            cursor: 0,
        }
    }

    pub fn from_checkpoint(cp: Checkpoint, cfg: TrainerConfig) -> Result<Self> {
        let mut rng = ChaCha8Rng::from_seed(cp.rng.seed);
        rng.set_stream(cp.rng.stream);
        rng.set_word_pos(cp.rng.word_pos);
        Ok(Trainer {
            cfg,
            g: cp.g,
            d: cp.d,
            g_opt: cp.g_opt,
            d_opt: cp.d_opt,
            schedule: cp.schedule,
            rng,
            step_count: cp.step_count,
            epoch: cp.epoch,
            cursor: cp.cursor,
        })
    }

    pub fn snapshot(&self) -> Checkpoint {
        Checkpoint {
            version: FORMAT_VERSION,
            g: self.g.clone(),
            d: self.d.clone(),
            g_opt: self.g_opt.clone(),
            d_opt: self.d_opt.clone(),
            schedule: self.schedule.clone(),
            step_count: self.step_count,
            epoch: self.epoch,
            cursor: self.cursor,
            rng: RngState {
                seed: self.rng.get_seed(),
                stream: self.rng.get_stream(),
                word_pos: self.rng.get_word_pos(),
            },
        }
    }

    fn collect_grads(
        tape: &Tape<f32>,
        map: &crate::tape::GradMap,
        weights: &TapedWeights,
        prefix: &str,
    ) -> IndexMap<String, Tensor<f32>> {
        weights
            .iter()
            .filter(|(name, _)| name.starts_with(prefix))
            .map(|(name, &var)| (name.clone(), tape.grad_tensor(map, var)))
            .collect()
    }

    /// One discriminator update followed by one generator update.
    pub fn step(&mut self, batch: &Tensor<f32>) -> Result<StepReport> {
        let stage = self.schedule.stage;
        let res = self.schedule.resolution();
        let shape = batch.shape();
        if shape.len() != 5 || shape[1] != 1 || shape[2] != res || shape[3] != res || shape[4] != res
        {
            return Err(VganError::InvalidArgument(format!(
                "batch shape {shape:?} does not match stage {stage} resolution {res}"
            )));
        }
        let b = shape[0];
        let alpha = self.schedule.alpha();
        let lr = self.schedule.learning_rate();
        let stage_cfg = self.cfg.stage_cfg();

        // critic update
        let (loss_d, d_real_mean, d_fake_mean) = {
            let mut tape: Tape<f32> = Tape::new();
            let dw = TapedWeights::load(&mut tape, &self.d, true);
            let gw = TapedWeights::load(&mut tape, &self.g, false);
            let z = sample_latents(&mut self.rng, b, self.cfg.latent_dim);
            let zv = tape.constant(z);
            let fake_v = generator_forward(&mut tape, &gw, zv, &stage_cfg, stage, alpha)?;
            let fake = tape.value(fake_v).clone();
            let real_v = tape.constant(batch.clone());
            let d_real = discriminator_forward(&mut tape, &dw, real_v, &stage_cfg, stage, alpha)?;
            let d_fake = discriminator_forward(&mut tape, &dw, fake_v, &stage_cfg, stage, alpha)?;
            let gp = gradient_penalty(
                &mut tape,
                &dw,
                batch,
                &fake,
                &stage_cfg,
                stage,
                alpha,
                &mut self.rng,
            )?;
            let (loss_d, _) =
                wgan_gp_losses(&mut tape, d_real, d_fake, gp, self.cfg.lambda_gp, self.cfg.drift_eps)?;
            let map = tape.backward(loss_d)?;
            let grads = Self::collect_grads(&tape, &map, &dw, "d.");
            self.d_opt.step(&mut self.d, &grads, lr)?;
            (
                tape.value(loss_d).data()[0] as f64,
                mean_of(tape.value(d_real)),
                mean_of(tape.value(d_fake)),
            )
        };

        // generator update against the freshly updated critic
        let loss_g = {
            let mut tape: Tape<f32> = Tape::new();
            let gw = TapedWeights::load(&mut tape, &self.g, true);
            let dw = TapedWeights::load(&mut tape, &self.d, false);
            let z = sample_latents(&mut self.rng, b, self.cfg.latent_dim);
            let zv = tape.constant(z);
            let fake_v = generator_forward(&mut tape, &gw, zv, &stage_cfg, stage, alpha)?;
            let score = discriminator_forward(&mut tape, &dw, fake_v, &stage_cfg, stage, alpha)?;
            let mean_score = tape.mean_all(score);
            let loss_g = tape.scale(mean_score, -1.0);
            if !tape.value(loss_g).all_finite() {
                return Err(VganError::NonFinite("generator loss".into()));
            }
            let map = tape.backward(loss_g)?;
            let grads = Self::collect_grads(&tape, &map, &gw, "g.");
            self.g_opt.step(&mut self.g, &grads, lr)?;
            tape.value(loss_g).data()[0] as f64
        };

        let phase = self.schedule.phase;
        let phase_ended = self.schedule.advance(b as u64);
        if self.schedule.stage != stage {
            // Reset now so a checkpoint taken at the boundary already holds
            // the new stage's epoch state.
            self.epoch = 0;
            self.cursor = 0;
        }
        self.step_count += 1;
        Ok(StepReport {
            step: self.step_count,
            stage,
            phase,
            alpha,
            loss_d,
            loss_g,
            d_real_mean,
            d_fake_mean,
            phase_ended,
        })
    }

    fn epoch_permutation(&self, stage: usize, n: usize) -> Vec<usize> {
        let mix = self
            .cfg
            .seed
            .wrapping_mul(0x2545_F491_4F6C_DD1D)
            .wrapping_add((stage as u64) << 32)
            .wrapping_add(self.epoch);
        let mut rng = ChaCha8Rng::seed_from_u64(mix);
        let mut perm: Vec<usize> = (0..n).collect();
        // Fisher-Yates
        for i in (1..n).rev() {
            let j = (rng.next_u64() % (i as u64 + 1)) as usize;
            perm.swap(i, j);
        }
        perm
    }

    fn next_batch(&mut self, stage_data: &[Tensor<f32>], stage: usize, b: usize) -> Tensor<f32> {
        let n = stage_data.len();
        let vol = stage_data[0].numel();
        let res = self.schedule.resolution();
        let mut data = Vec::with_capacity(b * vol);
        let mut perm = self.epoch_permutation(stage, n);
        for _ in 0..b {
            if self.cursor as usize >= n {
                self.cursor = 0;
                self.epoch += 1;
                perm = self.epoch_permutation(stage, n);
            }
            data.extend_from_slice(stage_data[perm[self.cursor as usize]].data());
            self.cursor += 1;
        }
        Tensor::from_vec(&[b, 1, res, res, res], data).unwrap()
    }

    fn append_log(&self, report: &StepReport) -> Result<()> {
        let Some(dir) = &self.cfg.out_dir else {
            return Ok(());
        };
        std::fs::create_dir_all(dir)?;
        let mut f = OpenOptions::new()
            .create(true)
            .append(true)
            .open(dir.join("train_log.tsv"))?;
        writeln!(
            f,
            "{}\t{}\t{}\t{}\t{}",
            report.step, report.stage, report.alpha, report.loss_d, report.loss_g
        )?;
        Ok(())
    }

    fn save_checkpoint(&self, tag: &str) -> Result<Option<PathBuf>> {
        let Some(dir) = &self.cfg.out_dir else {
            return Ok(None);
        };
        std::fs::create_dir_all(dir)?;
        let path = dir.join(format!("checkpoint_{tag}.vgan"));
        self.snapshot().save(&path)?;
        Ok(Some(path))
    }

    /// Per-stage training pyramid: repeated 2x average-pool halving from the
    /// dataset resolution down to the stage resolution, cached on disk when
    /// a cache dir is configured.
    fn stage_dataset(&self, dataset: &[Tensor<f32>], stage: usize) -> Result<Vec<Tensor<f32>>> {
        let res = 4usize << stage;
        let src_res = dataset[0].shape()[1];
        if let Some(dir) = &self.cfg.cache_dir {
            let path = dir.join(format!("stage{stage}_res{res}.f32"));
            if path.exists() {
                let bytes = std::fs::read(&path)?;
                let vol = res * res * res;
                let expect = dataset.len() * vol * 4;
                if bytes.len() == expect {
                    let mut out = Vec::with_capacity(dataset.len());
                    for i in 0..dataset.len() {
                        let mut data = vec![0f32; vol];
                        for (j, v) in data.iter_mut().enumerate() {
                            let o = (i * vol + j) * 4;
                            *v = f32::from_le_bytes(bytes[o..o + 4].try_into().unwrap());
                        }
                        out.push(Tensor::from_vec(&[1, res, res, res], data)?);
                    }
                    return Ok(out);
                }
            }
        }
        let mut out = Vec::with_capacity(dataset.len());
        for v in dataset {
            let mut cur = v
                .clone()
                .reshape(&[1, 1, src_res, src_res, src_res])?;
            while cur.shape()[2] > res {
                cur = kernels::downsample2x(&cur);
            }
            out.push(cur.reshape(&[1, res, res, res])?);
        }
        if let Some(dir) = &self.cfg.cache_dir {
            std::fs::create_dir_all(dir)?;
            let path = dir.join(format!("stage{stage}_res{res}.f32"));
            let mut bytes = Vec::with_capacity(out.len() * res * res * res * 4);
            for t in &out {
                for v in t.data() {
                    bytes.extend_from_slice(&v.to_le_bytes());
                }
            }
            std::fs::write(path, bytes)?;
        }
        Ok(out)
    }

    /// Runs the progressive schedule to completion (or `stop_after` total
    /// steps), emitting checkpoints and TSV log lines along the way.
    pub fn run_schedule(
        &mut self,
        dataset: &[Tensor<f32>],
        stop_after: Option<u64>,
        mut on_step: Option<&mut dyn FnMut(&StepReport)>,
    ) -> Result<Checkpoint> {
        if dataset.is_empty() {
            return Err(VganError::Data("empty training dataset".into()));
        }
        let src = dataset[0].shape().to_vec();
        if src.len() != 4 || src[0] != 1 || src[1] != src[2] || src[2] != src[3] {
            return Err(VganError::Data(format!(
                "dataset volumes must be [1,R,R,R] cubes, got {src:?}"
            )));
        }
        let target_res = 4usize << self.cfg.target_stage;
        if src[1] < target_res {
            return Err(VganError::Data(format!(
                "dataset resolution {} below target stage resolution {target_res}",
                src[1]
            )));
        }
        if !src[1].is_power_of_two() {
            return Err(VganError::Data(format!(
                "dataset resolution {} must be a power of two for the stage pyramid",
                src[1]
            )));
        }

        let mut stage_data = self.stage_dataset(dataset, self.schedule.stage)?;
        let mut current_stage = self.schedule.stage;
        let mut last_checkpoint: Option<PathBuf> = None;

        while !self.schedule.is_complete() {
            if let Some(limit) = stop_after {
                if self.step_count >= limit {
                    break;
                }
            }
            if self.schedule.stage != current_stage {
                current_stage = self.schedule.stage;
                self.epoch = 0;
                self.cursor = 0;
                stage_data = self.stage_dataset(dataset, current_stage)?;
            }
            let b = self.cfg.batch_for_stage(current_stage);
            let batch = self.next_batch(&stage_data, current_stage, b);
            let report = self.step(&batch).map_err(|e| match e {
                VganError::NonFinite(msg) => VganError::NonFinite(format!(
                    "{msg} at step {}; last good checkpoint: {}",
                    self.step_count,
                    last_checkpoint
                        .as_ref()
                        .map(|p| p.display().to_string())
                        .unwrap_or_else(|| "none".into())
                )),
                other => other,
            })?;
            self.append_log(&report)?;
            if let Some(cb) = on_step.as_deref_mut() {
                cb(&report);
            }
            let periodic = self.cfg.checkpoint_every > 0
                && self.step_count % self.cfg.checkpoint_every == 0;
            if report.phase_ended || periodic {
                if let Some(p) = self.save_checkpoint(&format!("step{:08}", self.step_count))? {
                    last_checkpoint = Some(p);
                }
            }
        }
        if self.schedule.is_complete() {
            self.save_checkpoint("final")?;
        }
        Ok(self.snapshot())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    fn tiny_cfg(target_stage: usize, seed: u64) -> TrainerConfig {
        let mut cfg = TrainerConfig::desk(target_stage, seed);
        cfg.n_filters = 4;
        cfg.latent_dim = 8;
        cfg.reals_per_phase = 8;
        cfg.batch_sizes = vec![2];
        cfg
    }

    fn toy_dataset(n: usize, res: usize, seed: u64) -> Vec<Tensor<f32>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| {
                let data: Vec<f32> = (0..res * res * res)
                    .map(|_| rng.gen_range(-1.0..1.0))
                    .collect();
                Tensor::from_vec(&[1, res, res, res], data).unwrap()
            })
            .collect()
    }

    #[test]
    fn latents_have_unit_scale() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let z = sample_latents(&mut rng, 64, 128);
        assert_eq!(z.shape(), &[64, 128]);
        let mean = mean_of(&z);
        let var = z.data().iter().map(|&v| (v as f64 - mean).powi(2)).sum::<f64>()
            / (z.numel() - 1) as f64;
        assert!(mean.abs() < 0.05, "mean {mean}");
        assert!((var - 1.0).abs() < 0.05, "var {var}");
    }

    #[test]
    fn losses_match_hand_computation() {
        let mut tape: Tape<f32> = Tape::new();
        let d_real = tape.constant(Tensor::from_vec(&[2, 1], vec![1.0, 3.0]).unwrap());
        let d_fake = tape.constant(Tensor::from_vec(&[2, 1], vec![0.5, -0.5]).unwrap());
        let gp = tape.constant(Tensor::from_vec(&[1], vec![0.25]).unwrap());
        let (ld, lg) = wgan_gp_losses(&mut tape, d_real, d_fake, gp, 10.0, 0.001).unwrap();
        // mean_fake 0, mean_real 2, gp term 2.5, drift 0.001*5
        assert!((tape.value(ld).data()[0] - 0.505).abs() < 1e-6);
        assert!(tape.value(lg).data()[0].abs() < 1e-6);
    }

    #[test]
    fn losses_reject_nonfinite_terms() {
        let mut tape: Tape<f32> = Tape::new();
        let d_real = tape.constant(Tensor::from_vec(&[1, 1], vec![f32::NAN]).unwrap());
        let d_fake = tape.constant(Tensor::from_vec(&[1, 1], vec![0.0]).unwrap());
        let gp = tape.constant(Tensor::scalar(0.0));
        let err = wgan_gp_losses(&mut tape, d_real, d_fake, gp, 10.0, 0.001).unwrap_err();
        assert!(err.to_string().contains("d_real"), "{err}");
    }

    #[test]
    fn gradient_penalty_matches_f64_finite_differences() {
        let cfg = StageConfig::new(0, 4, 8);
        let mut init = ChaCha8Rng::seed_from_u64(11);
        let d = build_discriminator(&cfg, &mut init);
        let real = {
            let mut rng = ChaCha8Rng::seed_from_u64(5);
            let data: Vec<f32> = (0..2 * 64).map(|_| rng.gen_range(-1.0..1.0)).collect();
            Tensor::from_vec(&[2, 1, 4, 4, 4], data).unwrap()
        };

        // real == fake makes xhat independent of the interpolation draw
        let gp_val = {
            let mut tape: Tape<f32> = Tape::new();
            let dw = TapedWeights::load(&mut tape, &d, true);
            let mut rng = ChaCha8Rng::seed_from_u64(7);
            let gp =
                gradient_penalty(&mut tape, &dw, &real, &real, &cfg, 0, 1.0, &mut rng).unwrap();
            tape.value(gp).data()[0] as f64
        };

        // minibatch stddev couples the samples, so differentiate the batch
        // score sum exactly as the analytic path does
        let eval = |x: &Tensor<f64>| -> f64 {
            let mut tape: Tape<f64> = Tape::new();
            let dw = TapedWeights::load(&mut tape, &d, false);
            let xv = tape.constant(x.clone());
            let s = discriminator_forward(&mut tape, &dw, xv, &cfg, 0, 1.0).unwrap();
            tape.value(s).data().iter().sum()
        };
        let base: Tensor<f64> = real.cast();
        let h = 1e-5;
        let mut gp_fd = 0.0;
        for b in 0..2 {
            let mut ssum = 0.0;
            for j in 0..64 {
                let idx = b * 64 + j;
                let mut plus = base.clone();
                plus.data_mut()[idx] += h;
                let mut minus = base.clone();
                minus.data_mut()[idx] -= h;
                let g = (eval(&plus) - eval(&minus)) / (2.0 * h);
                ssum += g * g;
            }
            let norm = (ssum + 1e-12).sqrt();
            gp_fd += (norm - 1.0).powi(2) / 2.0;
        }
        assert!(
            (gp_val - gp_fd).abs() < 1e-3 * gp_fd.max(1.0),
            "analytic {gp_val} vs fd {gp_fd}"
        );
    }

    #[test]
    fn step_updates_both_networks() {
        let cfg = tiny_cfg(0, 42);
        let mut t = Trainer::new(cfg);
        let g0 = t.g.clone();
        let d0 = t.d.clone();
        let batch = toy_dataset(2, 4, 9)
            .into_iter()
            .flat_map(|v| v.data().to_vec())
            .collect::<Vec<_>>();
        let batch = Tensor::from_vec(&[2, 1, 4, 4, 4], batch).unwrap();
        let r = t.step(&batch).unwrap();
        assert!(r.loss_d.is_finite() && r.loss_g.is_finite());
        assert_ne!(t.g, g0);
        assert_ne!(t.d, d0);
        assert_eq!(t.step_count, 1);
        assert_eq!((t.g_opt.t, t.d_opt.t), (1, 1));
    }

    #[test]
    fn step_rejects_wrong_resolution() {
        let mut t = Trainer::new(tiny_cfg(0, 42));
        let bad = Tensor::zeros(&[2, 1, 8, 8, 8]);
        assert!(t.step(&bad).is_err());
    }

    #[test]
    fn full_run_is_deterministic() {
        let data = toy_dataset(4, 8, 77);
        let run = || {
            let mut t = Trainer::new(tiny_cfg(1, 13));
            t.run_schedule(&data, None, None).unwrap()
        };
        let a = run();
        let b = run();
        assert!(a.schedule.is_complete());
        assert_eq!(a, b);
    }

    #[test]
    fn resume_matches_uninterrupted_run() {
        let data = toy_dataset(4, 8, 77);
        let straight = {
            let mut t = Trainer::new(tiny_cfg(1, 13));
            t.run_schedule(&data, None, None).unwrap()
        };

        let mut t = Trainer::new(tiny_cfg(1, 13));
        let mid = t.run_schedule(&data, Some(5), None).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("mid.vgan");
        mid.save(&path).unwrap();
        let loaded = Checkpoint::load(&path).unwrap();
        assert_eq!(loaded, mid);
        let mut resumed = Trainer::from_checkpoint(loaded, tiny_cfg(1, 13)).unwrap();
        let end = resumed.run_schedule(&data, None, None).unwrap();

        assert_eq!(end.g, straight.g);
        assert_eq!(end.d, straight.d);
        assert_eq!(end.g_opt, straight.g_opt);
        assert_eq!(end.d_opt, straight.d_opt);
        assert_eq!(end.rng, straight.rng);
    }

    #[test]
    fn critic_loss_decreases_on_separable_toy_set() {
        // frozen "generator": a fixed pool of dark noise volumes, reals are
        // bright noise, so a linear critic separates them
        let mut rng = ChaCha8Rng::seed_from_u64(64);
        let cfg = tiny_cfg(0, 64);
        let stage_cfg = cfg.stage_cfg();
        let mut d = crate::nets::build_discriminator(&stage_cfg, &mut rng);
        let mut opt = OptimizerState::new(&d, cfg.adam);
        let mk = |rng: &mut ChaCha8Rng, shift: f32| {
            let data: Vec<f32> = (0..2 * 64)
                .map(|_| shift + 0.2 * rng.gen_range(-1.0..1.0f32))
                .collect();
            Tensor::from_vec(&[2, 1, 4, 4, 4], data).unwrap()
        };
        let mut losses = Vec::new();
        for _ in 0..50 {
            let real = mk(&mut rng, 0.6);
            let fake = mk(&mut rng, -0.6);
            let mut tape: Tape<f32> = Tape::new();
            let dw = TapedWeights::load(&mut tape, &d, true);
            let real_v = tape.constant(real.clone());
            let fake_v = tape.constant(fake.clone());
            let d_real = discriminator_forward(&mut tape, &dw, real_v, &stage_cfg, 0, 1.0).unwrap();
            let d_fake = discriminator_forward(&mut tape, &dw, fake_v, &stage_cfg, 0, 1.0).unwrap();
            let gp = gradient_penalty(&mut tape, &dw, &real, &fake, &stage_cfg, 0, 1.0, &mut rng)
                .unwrap();
            let (loss_d, _) =
                wgan_gp_losses(&mut tape, d_real, d_fake, gp, cfg.lambda_gp, cfg.drift_eps)
                    .unwrap();
            let map = tape.backward(loss_d).unwrap();
            let grads = Trainer::collect_grads(&tape, &map, &dw, "d.");
            opt.step(&mut d, &grads, 1e-3).unwrap();
            losses.push(tape.value(loss_d).data()[0] as f64);
        }
        let head: f64 = losses[..10].iter().sum::<f64>() / 10.0;
        let tail: f64 = losses[40..].iter().sum::<f64>() / 10.0;
        assert!(
            tail < head,
            "critic loss did not decrease: first-10 mean {head:.4}, last-10 mean {tail:.4}"
        );
    }

    #[test]
    fn resume_at_stage_boundary_matches_uninterrupted_run() {
        // reals_per_phase 8 / batch 2: step 4 ends stage 0, so this
        // checkpoint sits exactly on the stage transition.
        let data = toy_dataset(4, 8, 31);
        let straight = {
            let mut t = Trainer::new(tiny_cfg(1, 19));
            t.run_schedule(&data, None, None).unwrap()
        };

        let mut t = Trainer::new(tiny_cfg(1, 19));
        let mid = t.run_schedule(&data, Some(4), None).unwrap();
        assert_eq!(mid.schedule.stage, 1);
        assert_eq!((mid.epoch, mid.cursor), (0, 0));
        let mut resumed = Trainer::from_checkpoint(mid, tiny_cfg(1, 19)).unwrap();
        let end = resumed.run_schedule(&data, None, None).unwrap();

        assert_eq!(end.g, straight.g);
        assert_eq!(end.d, straight.d);
        assert_eq!(end.rng, straight.rng);
    }
}
