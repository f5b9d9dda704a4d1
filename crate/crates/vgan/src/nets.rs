//! Progressive generator / discriminator construction and forward passes.
//!
//! Parameter names follow a fixed grammar so checkpoints stay stable:
//! `{g|d}.{base|block<s>|to_voxel<s>|from_voxel<s>|final}.{dense|conv1|conv2}.{weight|bias}`

use indexmap::IndexMap;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Result, VganError};
use crate::layers;
use crate::tape::{Tape, Var};
use crate::tensor::{Scalar, Tensor};

/// Per-resolution architecture plan. Stage `s` trains at `4 * 2^s` voxels
/// per side.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct StageConfig {
    pub stage: usize,
    pub n_filters: usize,
    pub latent_dim: usize,
}

impl StageConfig {
    pub fn new(stage: usize, n_filters: usize, latent_dim: usize) -> Self {
        assert!(n_filters >= 1 && n_filters <= 128, "n_filters must be in 1..=128");
        StageConfig {
            stage,
            n_filters,
            latent_dim,
        }
    }

    pub fn resolution(&self) -> usize {
        4 << self.stage
    }

    pub fn at_stage(mut self, stage: usize) -> Self {
        self.stage = stage;
        self
    }
}

/// Ordered map from canonical parameter names to tensors.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct NetworkWeights {
    params: IndexMap<String, Tensor<f32>>,
}

impl NetworkWeights {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, name: &str, t: Tensor<f32>) {
        assert!(
            self.params.insert(name.to_string(), t).is_none(),
            "duplicate parameter name {name}"
        );
    }

    pub fn get(&self, name: &str) -> Option<&Tensor<f32>> {
        self.params.get(name)
    }

    pub fn get_mut(&mut self, name: &str) -> Option<&mut Tensor<f32>> {
        self.params.get_mut(name)
    }

    pub fn contains(&self, name: &str) -> bool {
        self.params.contains_key(name)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &Tensor<f32>)> {
        self.params.iter()
    }

    pub fn iter_mut(&mut self) -> impl Iterator<Item = (&String, &mut Tensor<f32>)> {
        self.params.iter_mut()
    }

    pub fn names(&self) -> impl Iterator<Item = &String> {
        self.params.keys()
    }

    pub fn len(&self) -> usize {
        self.params.len()
    }

    pub fn is_empty(&self) -> bool {
        self.params.is_empty()
    }

    pub fn param_count(&self) -> usize {
        self.params.values().map(|t| t.numel()).sum()
    }
}

fn normal_tensor<R: Rng>(rng: &mut R, shape: &[usize]) -> Tensor<f32> {
    let n: usize = shape.iter().product();
    let data: Vec<f32> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
    Tensor::from_vec(shape, data).unwrap()
}

/// Generator weights up to and including `cfg.stage`. Weights are N(0,1)
/// (equalized scaling is applied at call time), biases zero.
pub fn build_generator<R: Rng>(cfg: &StageConfig, rng: &mut R) -> NetworkWeights {
    let nf = cfg.n_filters;
    let mut w = NetworkWeights::new();
    w.insert("g.base.dense.weight", normal_tensor(rng, &[nf * 64, cfg.latent_dim]));
    w.insert("g.base.dense.bias", Tensor::zeros(&[nf * 64]));
    w.insert("g.base.conv1.weight", normal_tensor(rng, &[nf, nf, 3, 3, 3]));
    w.insert("g.base.conv1.bias", Tensor::zeros(&[nf]));
    for s in 1..=cfg.stage {
        for conv in ["conv1", "conv2"] {
            w.insert(
                &format!("g.block{s}.{conv}.weight"),
                normal_tensor(rng, &[nf, nf, 3, 3, 3]),
            );
            w.insert(&format!("g.block{s}.{conv}.bias"), Tensor::zeros(&[nf]));
        }
    }
    for s in 0..=cfg.stage {
        w.insert(
            &format!("g.to_voxel{s}.conv1.weight"),
            normal_tensor(rng, &[1, nf, 1, 1, 1]),
        );
        w.insert(&format!("g.to_voxel{s}.conv1.bias"), Tensor::zeros(&[1]));
    }
    w
}

/// Discriminator weights up to and including `cfg.stage`.
pub fn build_discriminator<R: Rng>(cfg: &StageConfig, rng: &mut R) -> NetworkWeights {
    let nf = cfg.n_filters;
    let mut w = NetworkWeights::new();
    for s in 0..=cfg.stage {
        w.insert(
            &format!("d.from_voxel{s}.conv1.weight"),
            normal_tensor(rng, &[nf, 1, 1, 1, 1]),
        );
        w.insert(&format!("d.from_voxel{s}.conv1.bias"), Tensor::zeros(&[nf]));
    }
    for s in 1..=cfg.stage {
        for conv in ["conv1", "conv2"] {
            w.insert(
                &format!("d.block{s}.{conv}.weight"),
                normal_tensor(rng, &[nf, nf, 3, 3, 3]),
            );
            w.insert(&format!("d.block{s}.{conv}.bias"), Tensor::zeros(&[nf]));
        }
    }
    // +1 input channel from the minibatch-stddev map
    w.insert("d.final.conv1.weight", normal_tensor(rng, &[nf, nf + 1, 3, 3, 3]));
    w.insert("d.final.conv1.bias", Tensor::zeros(&[nf]));
    w.insert("d.final.dense.weight", normal_tensor(rng, &[1, nf * 64]));
    w.insert("d.final.dense.bias", Tensor::zeros(&[1]));
    w
}

/// Network weights placed on a tape, ready for forward passes.
pub struct TapedWeights {
    vars: IndexMap<String, Var>,
}

impl TapedWeights {
    /// Loads every parameter as a tape leaf; `trainable` marks them for
    /// differentiation.
    pub fn load<E: Scalar>(tape: &mut Tape<E>, weights: &NetworkWeights, trainable: bool) -> Self {
        let mut vars = IndexMap::new();
        for (name, t) in weights.iter() {
            let mut tensor: Tensor<E> = t.cast();
            tensor.set_requires_grad(trainable);
            vars.insert(name.clone(), tape.leaf(tensor));
        }
        TapedWeights { vars }
    }

    pub fn var(&self, name: &str) -> Result<Var> {
        self.vars.get(name).copied().ok_or_else(|| {
            VganError::InvalidArgument(format!("missing network parameter {name}"))
        })
    }

    pub fn contains(&self, name: &str) -> bool {
        self.vars.contains_key(name)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &Var)> {
        self.vars.iter()
    }
}

fn conv_block<E: Scalar>(
    tape: &mut Tape<E>,
    w: &TapedWeights,
    prefix: &str,
    x: Var,
    pixelnorm: bool,
) -> Result<Var> {
    let weight = w.var(&format!("{prefix}.weight"))?;
    let bias = w.var(&format!("{prefix}.bias"))?;
    let y = layers::conv3d(tape, x, weight, bias, true)?;
    let y = layers::leaky_relu(tape, y);
    if pixelnorm {
        layers::pixelwise_norm(tape, y)
    } else {
        Ok(y)
    }
}

fn to_voxel<E: Scalar>(tape: &mut Tape<E>, w: &TapedWeights, s: usize, x: Var) -> Result<Var> {
    let weight = w.var(&format!("g.to_voxel{s}.conv1.weight"))?;
    let bias = w.var(&format!("g.to_voxel{s}.conv1.bias"))?;
    // Linear projection, no activation. Pixel norm leaves the incoming
    // channel vector at unit RMS, so gain g puts the untrained output at
    // roughly sqrt(g) standard deviation; 0.25 starts the voxel range well
    // inside the data range and lets training grow the amplitude.
    layers::conv3d_gain(tape, x, weight, bias, Some(0.25))
}

fn from_voxel<E: Scalar>(tape: &mut Tape<E>, w: &TapedWeights, s: usize, x: Var) -> Result<Var> {
    let weight = w.var(&format!("d.from_voxel{s}.conv1.weight"))?;
    let bias = w.var(&format!("d.from_voxel{s}.conv1.bias"))?;
    let y = layers::conv3d(tape, x, weight, bias, true)?;
    Ok(layers::leaky_relu(tape, y))
}

/// Maps latents [B, latent_dim] to volumes [B, 1, R, R, R] with R = 4*2^stage.
pub fn generator_forward<E: Scalar>(
    tape: &mut Tape<E>,
    w: &TapedWeights,
    z: Var,
    cfg: &StageConfig,
    stage: usize,
    alpha: f64,
) -> Result<Var> {
    if !w.contains(&format!("g.to_voxel{stage}.conv1.weight")) {
        return Err(VganError::InvalidArgument(format!(
            "generator weights do not cover stage {stage}"
        )));
    }
    if !tape.value(z).all_finite() {
        return Err(VganError::NonFinite("generator latent input".into()));
    }
    let batch = tape.value(z).shape()[0];
    let nf = cfg.n_filters;

    let z = layers::pixelwise_norm(tape, z)?;
    let dw = w.var("g.base.dense.weight")?;
    let db = w.var("g.base.dense.bias")?;
    let x = layers::dense(tape, z, dw, db, true)?;
    let x = tape.reshape(x, &[batch, nf, 4, 4, 4])?;
    let x = layers::leaky_relu(tape, x);
    let x = layers::pixelwise_norm(tape, x)?;
    let mut feat = conv_block(tape, w, "g.base.conv1", x, true)?;
    let mut prev_feat = feat;
    for s in 1..=stage {
        prev_feat = feat;
        let up = tape.upsample2x(feat);
        let h = conv_block(tape, w, &format!("g.block{s}.conv1"), up, true)?;
        feat = conv_block(tape, w, &format!("g.block{s}.conv2"), h, true)?;
    }

    if stage == 0 || alpha >= 1.0 {
        to_voxel(tape, w, stage, feat)
    } else {
        let coarse_vox = to_voxel(tape, w, stage - 1, prev_feat)?;
        let coarse = tape.upsample2x(coarse_vox);
        let fine = to_voxel(tape, w, stage, feat)?;
        layers::fade_blend(tape, alpha, coarse, fine)
    }
}

/// Scores volumes [B, 1, R, R, R]; unbounded critic output [B, 1].
pub fn discriminator_forward<E: Scalar>(
    tape: &mut Tape<E>,
    w: &TapedWeights,
    x: Var,
    cfg: &StageConfig,
    stage: usize,
    alpha: f64,
) -> Result<Var> {
    if !w.contains(&format!("d.from_voxel{stage}.conv1.weight")) {
        return Err(VganError::InvalidArgument(format!(
            "discriminator weights do not cover stage {stage}"
        )));
    }
    let shape = tape.value(x).shape().to_vec();
    let res = 4usize << stage;
    if shape.len() != 5 || shape[1] != 1 || shape[2] != res || shape[3] != res || shape[4] != res {
        return Err(VganError::InvalidArgument(format!(
            "discriminator stage {stage} expects [B,1,{res},{res},{res}], got {shape:?}"
        )));
    }
    let batch = shape[0];
    let nf = cfg.n_filters;

    let mut h = from_voxel(tape, w, stage, x)?;
    if stage > 0 {
        let c1 = conv_block(tape, w, &format!("d.block{stage}.conv1"), h, false)?;
        let c2 = conv_block(tape, w, &format!("d.block{stage}.conv2"), c1, false)?;
        h = tape.downsample2x(c2)?;
        if alpha < 1.0 {
            let pooled = tape.downsample2x(x)?;
            let coarse = from_voxel(tape, w, stage - 1, pooled)?;
            h = layers::fade_blend(tape, alpha, coarse, h)?;
        }
        for s in (1..stage).rev() {
            let c1 = conv_block(tape, w, &format!("d.block{s}.conv1"), h, false)?;
            let c2 = conv_block(tape, w, &format!("d.block{s}.conv2"), c1, false)?;
            h = tape.downsample2x(c2)?;
        }
    }
    let h = layers::minibatch_stddev(tape, h)?;
    let h = conv_block(tape, w, "d.final.conv1", h, false)?;
    let h = tape.reshape(h, &[batch, nf * 64])?;
    let dw = w.var("d.final.dense.weight")?;
    let db = w.var("d.final.dense.bias")?;
    // linear score head, gain 1
    layers::dense_gain(tape, h, dw, db, Some(1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn cfg(stage: usize) -> StageConfig {
        StageConfig::new(stage, 8, 8)
    }

    fn latents(rng: &mut ChaCha8Rng, b: usize, dim: usize) -> Tensor<f32> {
        normal_tensor(rng, &[b, dim])
    }

    #[test]
    fn resolution_law() {
        assert_eq!(cfg(0).resolution(), 4);
        assert_eq!(cfg(3).resolution(), 32);
    }

    #[test]
    fn builds_are_seed_deterministic() {
        let c = cfg(2);
        let g1 = build_generator(&c, &mut ChaCha8Rng::seed_from_u64(7));
        let g2 = build_generator(&c, &mut ChaCha8Rng::seed_from_u64(7));
        assert_eq!(g1, g2);
        let d1 = build_discriminator(&c, &mut ChaCha8Rng::seed_from_u64(7));
        let d2 = build_discriminator(&c, &mut ChaCha8Rng::seed_from_u64(7));
        assert_eq!(d1, d2);
    }

    #[test]
    fn stage3_has_all_projections() {
        let c = cfg(3);
        let g = build_generator(&c, &mut ChaCha8Rng::seed_from_u64(1));
        let d = build_discriminator(&c, &mut ChaCha8Rng::seed_from_u64(2));
        for s in 0..=3 {
            assert!(g.contains(&format!("g.to_voxel{s}.conv1.weight")));
            assert!(d.contains(&format!("d.from_voxel{s}.conv1.weight")));
        }
    }

    #[test]
    fn generator_param_count_matches_hand_tally() {
        let c = StageConfig::new(0, 128, 128);
        let g = build_generator(&c, &mut ChaCha8Rng::seed_from_u64(1));
        let nf = 128usize;
        let expected = nf * 64 * 128 + nf * 64      // base dense
            + nf * nf * 27 + nf                      // base conv
            + nf + 1; // to_voxel0: [1,nf,1,1,1] + bias [1]
        assert_eq!(g.param_count(), expected);
    }

    #[test]
    fn discriminator_param_count_matches_hand_tally() {
        let c = StageConfig::new(1, 16, 16);
        let d = build_discriminator(&c, &mut ChaCha8Rng::seed_from_u64(1));
        let nf = 16usize;
        let expected = 2 * (nf + nf)                 // from_voxel 0,1
            + 2 * (nf * nf * 27 + nf)                // block1 conv1/conv2
            + nf * (nf + 1) * 27 + nf                // final conv (mbstd channel)
            + nf * 64 + 1; // final dense
        assert_eq!(d.param_count(), expected);
    }

    #[test]
    fn shape_law_all_stages() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for stage in 0..=3 {
            let c = cfg(stage);
            let g = build_generator(&c, &mut rng.clone());
            let d = build_discriminator(&c, &mut rng.clone());
            for b in [1usize, 2] {
                let mut tape: Tape = Tape::new();
                let gw = TapedWeights::load(&mut tape, &g, false);
                let z = tape.leaf(latents(&mut rng, b, c.latent_dim));
                let out = generator_forward(&mut tape, &gw, z, &c, stage, 1.0).unwrap();
                let r = 4 << stage;
                assert_eq!(tape.value(out).shape(), &[b, 1, r, r, r]);
                let dwv = TapedWeights::load(&mut tape, &d, false);
                let score = discriminator_forward(&mut tape, &dwv, out, &c, stage, 1.0).unwrap();
                assert_eq!(tape.value(score).shape(), &[b, 1]);
            }
        }
    }

    #[test]
    fn generator_fade_zero_equals_upsampled_previous_stage() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let c = cfg(2);
        let g = build_generator(&c, &mut ChaCha8Rng::seed_from_u64(5));
        let z = latents(&mut rng, 2, c.latent_dim);

        let mut tape: Tape = Tape::new();
        let gw = TapedWeights::load(&mut tape, &g, false);
        let zv = tape.leaf(z.clone());
        let faded = generator_forward(&mut tape, &gw, zv, &c, 2, 0.0).unwrap();
        let prev = generator_forward(&mut tape, &gw, zv, &c, 1, 1.0).unwrap();
        let up = tape.upsample2x(prev);
        let err = crate::oracle::max_rel_err(tape.value(faded), tape.value(up));
        assert!(err <= 1e-6, "{err}");
    }

    #[test]
    fn discriminator_fade_zero_equals_pooled_previous_stage() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let c = cfg(1);
        let d = build_discriminator(&c, &mut ChaCha8Rng::seed_from_u64(6));
        let x = normal_tensor(&mut rng, &[2, 1, 8, 8, 8]);

        let mut tape: Tape = Tape::new();
        let dw = TapedWeights::load(&mut tape, &d, false);
        let xv = tape.leaf(x);
        let faded = discriminator_forward(&mut tape, &dw, xv, &c, 1, 0.0).unwrap();
        let pooled = tape.downsample2x(xv).unwrap();
        let prev = discriminator_forward(&mut tape, &dw, pooled, &c, 0, 1.0).unwrap();
        let err = crate::oracle::max_rel_err(tape.value(faded), tape.value(prev));
        assert!(err <= 1e-6, "{err}");
    }

    #[test]
    fn different_latents_give_different_volumes() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let c = cfg(0);
        let g = build_generator(&c, &mut ChaCha8Rng::seed_from_u64(8));
        let mut tape: Tape = Tape::new();
        let gw = TapedWeights::load(&mut tape, &g, false);
        let z1 = tape.leaf(latents(&mut rng, 1, c.latent_dim));
        let z2 = tape.leaf(latents(&mut rng, 1, c.latent_dim));
        let o1 = generator_forward(&mut tape, &gw, z1, &c, 0, 1.0).unwrap();
        let o2 = generator_forward(&mut tape, &gw, z2, &c, 0, 1.0).unwrap();
        let dist: f32 = tape
            .value(o1)
            .data()
            .iter()
            .zip(tape.value(o2).data())
            .map(|(a, b)| (a - b) * (a - b))
            .sum();
        assert!(dist > 0.0);
    }

    #[test]
    fn stage_beyond_built_weights_errors() {
        let c = cfg(0);
        let g = build_generator(&c, &mut ChaCha8Rng::seed_from_u64(1));
        let mut tape: Tape = Tape::new();
        let gw = TapedWeights::load(&mut tape, &g, false);
        let z = tape.leaf(Tensor::zeros(&[1, 8]));
        assert!(generator_forward(&mut tape, &gw, z, &c, 1, 1.0).is_err());
    }

    #[test]
    fn discriminator_rejects_wrong_resolution() {
        let c = cfg(1);
        let d = build_discriminator(&c, &mut ChaCha8Rng::seed_from_u64(1));
        let mut tape: Tape = Tape::new();
        let dw = TapedWeights::load(&mut tape, &d, false);
        let x = tape.leaf(Tensor::zeros(&[1, 1, 4, 4, 4]));
        assert!(discriminator_forward(&mut tape, &dw, x, &c, 1, 1.0).is_err());
    }

    #[test]
    fn fade_blend_linearity_in_alpha() {
        let mut rng = ChaCha8Rng::seed_from_u64(19);
        let c = cfg(1);
        let g = build_generator(&c, &mut ChaCha8Rng::seed_from_u64(4));
        let z = latents(&mut rng, 1, c.latent_dim);
        let eval = |alpha: f64| {
            let mut tape: Tape = Tape::new();
            let gw = TapedWeights::load(&mut tape, &g, false);
            let zv = tape.leaf(z.clone());
            let o = generator_forward(&mut tape, &gw, zv, &c, 1, alpha).unwrap();
            tape.value(o).data().to_vec()
        };
        let (o0, o1, oh) = (eval(0.0), eval(1.0), eval(0.25));
        for i in 0..o0.len() {
            let expect = 0.75 * o0[i] + 0.25 * o1[i];
            assert!((oh[i] - expect).abs() <= 1e-5, "{} vs {}", oh[i], expect);
        }
    }
}
