//! Built-in verification suites: gradient checks for every layer and both
//! networks, the convolution-vs-naive oracle, NIfTI round trips, the
//! rotation resampling oracle, and the Adam closed form. The CLI `selftest`
//! subcommand and the integration tests both run these.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::augment::{resample_trilinear, Rotation};
use crate::error::Result;
use crate::gradcheck::{grad_check, TapeFn};
use crate::kernels;
use crate::layers;
use crate::nets::{
    build_discriminator, build_generator, discriminator_forward, generator_forward, StageConfig,
    TapedWeights,
};
use crate::oracle;
use crate::tape::{Tape, Var};
use crate::tensor::{Scalar, Tensor};
use crate::volio::{read_nifti, write_nifti, Volume};

#[derive(Clone, Debug)]
pub struct SuiteReport {
    pub name: &'static str,
    pub cases: usize,
    pub max_err: f64,
    pub tolerance: f64,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.max_err.is_finite() && self.max_err <= self.tolerance
    }

    pub fn line(&self) -> String {
        format!(
            "{}: {} ({} cases, max err {:.3e}, tolerance {:.1e})",
            if self.passed() { "PASS" } else { "FAIL" },
            self.name,
            self.cases,
            self.max_err,
            self.tolerance
        )
    }
}

fn random_tensor(rng: &mut ChaCha8Rng, shape: &[usize], lo: f32, hi: f32) -> Tensor<f32> {
    let n: usize = shape.iter().product();
    Tensor::from_vec(shape, (0..n).map(|_| rng.gen_range(lo..hi)).collect()).unwrap()
}

struct LeakyFn;
impl TapeFn for LeakyFn {
    fn apply<E: Scalar>(&self, tape: &mut Tape<E>, x: Var) -> Result<Var> {
        let y = layers::leaky_relu(tape, x);
        Ok(tape.mean_all(y))
    }
}

struct PixelnormFn;
impl TapeFn for PixelnormFn {
    fn apply<E: Scalar>(&self, tape: &mut Tape<E>, x: Var) -> Result<Var> {
        let y = layers::pixelwise_norm(tape, x)?;
        Ok(tape.mean_all(y))
    }
}

struct MbstdFn;
impl TapeFn for MbstdFn {
    fn apply<E: Scalar>(&self, tape: &mut Tape<E>, x: Var) -> Result<Var> {
        let y = layers::minibatch_stddev(tape, x)?;
        Ok(tape.mean_all(y))
    }
}

fn load_const<E: Scalar>(tape: &mut Tape<E>, t: &Tensor<f32>) -> Var {
    tape.constant(t.cast::<E>())
}

/// Gradient of the conv output w.r.t. the input volume.
struct ConvXFn {
    w: Tensor<f32>,
    b: Tensor<f32>,
}
impl TapeFn for ConvXFn {
    fn apply<E: Scalar>(&self, tape: &mut Tape<E>, x: Var) -> Result<Var> {
        let w = load_const(tape, &self.w);
        let b = load_const(tape, &self.b);
        let y = layers::conv3d(tape, x, w, b, true)?;
        Ok(tape.mean_all(y))
    }
}

/// Gradient of the conv output w.r.t. the weights (x held constant).
struct ConvWFn {
    x: Tensor<f32>,
    b: Tensor<f32>,
}
impl TapeFn for ConvWFn {
    fn apply<E: Scalar>(&self, tape: &mut Tape<E>, w: Var) -> Result<Var> {
        let x = load_const(tape, &self.x);
        let b = load_const(tape, &self.b);
        let y = layers::conv3d(tape, x, w, b, true)?;
        Ok(tape.mean_all(y))
    }
}

struct DenseXFn {
    w: Tensor<f32>,
    b: Tensor<f32>,
}
impl TapeFn for DenseXFn {
    fn apply<E: Scalar>(&self, tape: &mut Tape<E>, x: Var) -> Result<Var> {
        let w = load_const(tape, &self.w);
        let b = load_const(tape, &self.b);
        let y = layers::dense(tape, x, w, b, true)?;
        Ok(tape.mean_all(y))
    }
}

struct FadeFn {
    other: Tensor<f32>,
    alpha: f64,
}
impl TapeFn for FadeFn {
    fn apply<E: Scalar>(&self, tape: &mut Tape<E>, x: Var) -> Result<Var> {
        let o = load_const(tape, &self.other);
        let y = layers::fade_blend(tape, self.alpha, o, x)?;
        Ok(tape.mean_all(y))
    }
}

/// Max rel err over `cases` randomized per-layer gradient checks.
pub fn gradient_layer_suite(cases: usize) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(0xABCD);
    let mut max_err = 0.0f64;
    let step = 1e-3;
    let mut keep = |e: f64| {
        if e > max_err {
            max_err = e;
        }
    };
    for _ in 0..cases {
        // keep leaky inputs off the kink at 0
        let x = random_tensor(&mut rng, &[2, 3, 2, 2, 2], 0.05, 1.0)
            .map(|v| if v > 0.5 { v } else { -v });
        keep(grad_check(&LeakyFn, &x, step)?);

        let x = random_tensor(&mut rng, &[2, 4, 2, 2, 2], -1.0, 1.0);
        keep(grad_check(&PixelnormFn, &x, step)?);

        // keep the two samples apart per feature: the batch-stddev sqrt has
        // high curvature where they coincide, which breaks the FD reference
        let base = random_tensor(&mut rng, &[1, 4, 2, 2, 2], -1.0, 1.0);
        let mut both = Vec::with_capacity(64);
        both.extend_from_slice(base.data());
        for &v in base.data() {
            let gap: f32 = rng.gen_range(0.3..0.8);
            both.push(v + if rng.gen_bool(0.5) { gap } else { -gap });
        }
        let x = Tensor::from_vec(&[2, 4, 2, 2, 2], both)?;
        keep(grad_check(&MbstdFn, &x, step)?);

        let w = random_tensor(&mut rng, &[3, 2, 3, 3, 3], -1.0, 1.0);
        let b = random_tensor(&mut rng, &[3], -0.5, 0.5);
        let x = random_tensor(&mut rng, &[2, 2, 4, 4, 4], -1.0, 1.0);
        keep(grad_check(&ConvXFn { w: w.clone(), b: b.clone() }, &x, step)?);
        keep(grad_check(&ConvWFn { x, b }, &w, step)?);

        let w = random_tensor(&mut rng, &[3, 5], -1.0, 1.0);
        let b = random_tensor(&mut rng, &[3], -0.5, 0.5);
        let x = random_tensor(&mut rng, &[2, 5], -1.0, 1.0);
        keep(grad_check(&DenseXFn { w, b }, &x, step)?);

        let other = random_tensor(&mut rng, &[2, 1, 2, 2, 2], -1.0, 1.0);
        let x = random_tensor(&mut rng, &[2, 1, 2, 2, 2], -1.0, 1.0);
        keep(grad_check(&FadeFn { other, alpha: 0.3 }, &x, step)?);
    }
    Ok(max_err)
}

struct GenFn {
    weights: crate::nets::NetworkWeights,
    cfg: StageConfig,
}
impl TapeFn for GenFn {
    fn apply<E: Scalar>(&self, tape: &mut Tape<E>, z: Var) -> Result<Var> {
        let w = TapedWeights::load(tape, &self.weights, false);
        let y = generator_forward(tape, &w, z, &self.cfg, 0, 1.0)?;
        Ok(tape.mean_all(y))
    }
}

struct DiscFn {
    weights: crate::nets::NetworkWeights,
    cfg: StageConfig,
}
impl TapeFn for DiscFn {
    fn apply<E: Scalar>(&self, tape: &mut Tape<E>, x: Var) -> Result<Var> {
        let w = TapedWeights::load(tape, &self.weights, false);
        let y = discriminator_forward(tape, &w, x, &self.cfg, 0, 1.0)?;
        Ok(tape.mean_all(y))
    }
}

/// End-to-end gradient checks: dLoss/dz through the whole generator and
/// dScore/dx through the whole discriminator at stage 0.
pub fn gradient_network_suite(cases: usize) -> Result<f64> {
    let mut max_err = 0.0f64;
    for case in 0..cases {
        let mut rng = ChaCha8Rng::seed_from_u64(0xD00D + case as u64);
        let cfg = StageConfig::new(0, 4, 6);
        let g = build_generator(&cfg, &mut rng);
        let d = build_discriminator(&cfg, &mut rng);

        let z = random_tensor(&mut rng, &[2, 6], -1.0, 1.0);
        let e = grad_check(&GenFn { weights: g, cfg }, &z, 1e-4)?;
        if e > max_err {
            max_err = e;
        }
        let x = random_tensor(&mut rng, &[2, 1, 4, 4, 4], -1.0, 1.0);
        let e = grad_check(&DiscFn { weights: d, cfg }, &x, 1e-4)?;
        if e > max_err {
            max_err = e;
        }
    }
    Ok(max_err)
}

/// Optimized conv3d vs the naive seven-loop f64 oracle over randomized
/// shapes, always including k=1 and a single-voxel volume.
pub fn conv_oracle_suite(cases: usize) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(0xC04);
    let mut max_err = 0.0f64;
    for case in 0..cases {
        let (b, c, o) = (
            rng.gen_range(1..=2usize),
            rng.gen_range(1..=3usize),
            rng.gen_range(1..=3usize),
        );
        let k = if case % 3 == 0 { 1 } else { 3 };
        let (d, h, w) = if case % 5 == 0 {
            (1, 1, 1)
        } else {
            (
                rng.gen_range(1..=4usize),
                rng.gen_range(1..=4usize),
                rng.gen_range(1..=4usize),
            )
        };
        let x = random_tensor(&mut rng, &[b, c, d, h, w], -1.0, 1.0);
        let wt = random_tensor(&mut rng, &[o, c, k, k, k], -1.0, 1.0);
        let scale = layers::equalized_scale(c * k * k * k);

        // both sides at f64 so the comparison isolates the algorithm, not
        // f32 rounding in near-cancelling sums
        let fast = kernels::conv3d_fwd(&x.cast::<f64>(), &wt.cast::<f64>(), scale);
        let slow = oracle::naive_conv3d(&x.cast(), &wt.cast(), &vec![0.0; o], scale);
        let err = oracle::max_rel_err(&fast, &slow);
        if err > max_err {
            max_err = err;
        }
    }
    max_err
}

/// Round trips a random volume through plain and gzip NIfTI; max abs
/// difference (0.0 when bit-identical).
pub fn nifti_suite() -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(0x111);
    let dir = tempfile::tempdir()?;
    let mut max_err = 0.0f64;
    for (i, name) in ["a.nii", "b.nii.gz"].iter().enumerate() {
        let n = 5 + i;
        let data: Vec<f32> = (0..n * n * n).map(|_| rng.gen_range(-1.0f32..1.0)).collect();
        let v = Volume::new((n, n, n), (1.4, 1.4, 1.4), data);
        let path = dir.path().join(name);
        write_nifti(&v, &path)?;
        let r = read_nifti(&path)?;
        if r.dims != v.dims {
            return Ok(f64::INFINITY);
        }
        for (a, b) in r.data.iter().zip(&v.data) {
            let e = (a - b).abs() as f64;
            if e > max_err {
                max_err = e;
            }
        }
    }
    Ok(max_err)
}

/// Identity exactness plus the 90-degree index-permutation oracle.
pub fn rotation_suite() -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(0x222);
    let n = 7;
    let data: Vec<f32> = (0..n * n * n).map(|_| rng.gen_range(-1.0f32..1.0)).collect();
    let v = Volume::new((n, n, n), (1.0, 1.0, 1.0), data);
    let mut max_err = 0.0f64;

    let ident = resample_trilinear(&v, &Rotation::IDENTITY, 0.0);
    for (a, b) in ident.data.iter().zip(&v.data) {
        max_err = max_err.max((a - b).abs() as f64);
    }

    let rot = resample_trilinear(
        &v,
        &Rotation {
            theta_x: 0.0,
            theta_y: 0.0,
            theta_z: 90.0,
        },
        0.0,
    );
    let c = (n - 1) / 2;
    for z in 0..n {
        for y in 0..n {
            for x in 0..n {
                let expect = v.at(z, 2 * c - x, y);
                max_err = max_err.max((rot.at(z, y, x) - expect).abs() as f64);
            }
        }
    }
    max_err
}

/// Single-parameter Adam vs the closed form for t = 1..3.
pub fn adam_suite() -> f64 {
    use crate::nets::NetworkWeights;
    use crate::optim::{AdamConfig, OptimizerState};
    use indexmap::IndexMap;

    let mut w = NetworkWeights::new();
    w.insert("p", Tensor::from_vec(&[1], vec![0.5]).unwrap());
    let cfg = AdamConfig::default();
    let mut opt = OptimizerState::new(&w, cfg);
    let lr = 0.002;
    let (mut ow, mut om, mut ov) = (0.5f64, 0.0, 0.0);
    let mut max_err = 0.0f64;
    for (t, g) in [0.3f64, -0.8, 0.1].into_iter().enumerate() {
        let mut grads = IndexMap::new();
        grads.insert("p".to_string(), Tensor::from_vec(&[1], vec![g as f32]).unwrap());
        opt.step(&mut w, &grads, lr).unwrap();
        let (nw, nm, nv) =
            oracle::adam_scalar_step(ow, g, om, ov, (t + 1) as u64, lr, cfg.beta1, cfg.beta2, cfg.eps);
        ow = nw;
        om = nm;
        ov = nv;
        max_err = max_err.max((w.get("p").unwrap().data()[0] as f64 - ow).abs());
    }
    max_err
}

/// The full battery. `quick` trims case counts for interactive use.
pub fn run_selftest(quick: bool) -> Result<Vec<SuiteReport>> {
    let (layer_cases, net_cases, conv_cases) = if quick { (3, 2, 20) } else { (20, 20, 50) };
    Ok(vec![
        SuiteReport {
            name: "gradient/layers",
            cases: layer_cases,
            max_err: gradient_layer_suite(layer_cases)?,
            tolerance: 1e-3,
        },
        SuiteReport {
            name: "gradient/networks",
            cases: net_cases,
            max_err: gradient_network_suite(net_cases)?,
            tolerance: 1e-2,
        },
        SuiteReport {
            name: "conv/oracle",
            cases: conv_cases,
            max_err: conv_oracle_suite(conv_cases),
            tolerance: 1e-5,
        },
        SuiteReport {
            name: "nifti/roundtrip",
            cases: 2,
            max_err: nifti_suite()?,
            tolerance: 0.0,
        },
        SuiteReport {
            name: "rotation/oracle",
            cases: 2,
            max_err: rotation_suite(),
            tolerance: 1e-5,
        },
        SuiteReport {
            name: "adam/closed-form",
            cases: 3,
            max_err: adam_suite(),
            tolerance: 1e-7,
        },
    ])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quick_selftest_passes() {
        let reports = run_selftest(true).unwrap();
        assert_eq!(reports.len(), 6);
        for r in &reports {
            assert!(r.passed(), "{}", r.line());
        }
    }

    #[test]
    fn injected_conv_bug_trips_the_oracle() {
        // shifting the input by one voxel along W simulates an off-by-one
        // padding bug; the oracle comparison must catch it loudly
        let mut rng = ChaCha8Rng::seed_from_u64(0xBAD);
        let x = random_tensor(&mut rng, &[1, 2, 4, 4, 4], -1.0, 1.0);
        let wt = random_tensor(&mut rng, &[2, 2, 3, 3, 3], -1.0, 1.0);
        let mut shifted = x.clone();
        {
            let d = shifted.data_mut();
            for row in d.chunks_mut(4) {
                row.rotate_right(1);
            }
        }
        let buggy = kernels::conv3d_fwd(&shifted.cast::<f64>(), &wt.cast(), 1.0);
        let good = oracle::naive_conv3d(&x.cast(), &wt.cast(), &vec![0.0; 2], 1.0);
        assert!(oracle::max_rel_err(&buggy, &good) > 1e-2);
    }

    #[test]
    fn report_lines_carry_max_errors() {
        let r = SuiteReport {
            name: "demo",
            cases: 4,
            max_err: 2.5e-4,
            tolerance: 1e-3,
        };
        let line = r.line();
        assert!(line.starts_with("PASS"), "{line}");
        assert!(line.contains("2.500e-4"), "{line}");
        let bad = SuiteReport {
            max_err: 5e-3,
            ..r
        };
        assert!(bad.line().starts_with("FAIL"));
    }
}
