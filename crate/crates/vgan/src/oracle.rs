//! Independent reference implementations used by the self-test command and
//! the test suites. Nothing here shares code with the optimized kernels.

use crate::tensor::{Scalar, Tensor};

/// Plain 7-nested-loop same-padding 3D convolution with bias.
pub fn naive_conv3d(x: &Tensor<f64>, w: &Tensor<f64>, bias: &[f64], scale: f64) -> Tensor<f64> {
    let (b, c, d, h, wd) = {
        let s = x.shape();
        (s[0], s[1], s[2], s[3], s[4])
    };
    let (o, k) = (w.shape()[0], w.shape()[2]);
    let p = (k as isize - 1) / 2;
    let mut out = Tensor::zeros(&[b, o, d, h, wd]);
    let xd = x.data();
    let wdat = w.data();
    let od = out.data_mut();
    for bi in 0..b {
        for oi in 0..o {
            for z in 0..d {
                for y in 0..h {
                    for t in 0..wd {
                        let mut acc = 0.0;
                        for ci in 0..c {
                            for kd in 0..k {
                                for kh in 0..k {
                                    for kw in 0..k {
                                        let zi = z as isize + kd as isize - p;
                                        let yi = y as isize + kh as isize - p;
                                        let ti = t as isize + kw as isize - p;
                                        if zi < 0
                                            || yi < 0
                                            || ti < 0
                                            || zi >= d as isize
                                            || yi >= h as isize
                                            || ti >= wd as isize
                                        {
                                            continue;
                                        }
                                        let xv = xd[(((bi * c + ci) * d + zi as usize) * h
                                            + yi as usize)
                                            * wd
                                            + ti as usize];
                                        let wv =
                                            wdat[(((oi * c + ci) * k + kd) * k + kh) * k + kw];
                                        acc += scale * wv * xv;
                                    }
                                }
                            }
                        }
                        od[(((bi * o + oi) * d + z) * h + y) * wd + t] = acc + bias[oi];
                    }
                }
            }
        }
    }
    out
}

/// 2x2x2 block mean over a raw (D,H,W) grid.
pub fn block_mean_downsample(data: &[f64], dims: (usize, usize, usize)) -> (Vec<f64>, (usize, usize, usize)) {
    let (d, h, w) = dims;
    let (d2, h2, w2) = (d / 2, h / 2, w / 2);
    let mut out = vec![0.0; d2 * h2 * w2];
    for z in 0..d2 {
        for y in 0..h2 {
            for x in 0..w2 {
                let mut acc = 0.0;
                for dz in 0..2 {
                    for dy in 0..2 {
                        for dx in 0..2 {
                            acc += data[((2 * z + dz) * h + 2 * y + dy) * w + 2 * x + dx];
                        }
                    }
                }
                out[(z * h2 + y) * w2 + x] = acc / 8.0;
            }
        }
    }
    (out, (d2, h2, w2))
}

/// Two-pass across-batch standard deviation statistic: the mean over all
/// (c,d,h,w) positions of the population stddev across the batch.
pub fn batch_stddev_statistic(x: &Tensor<f64>) -> f64 {
    let s = x.shape();
    let (b, rest) = (s[0], s[1..].iter().product::<usize>());
    let xd = x.data();
    let mut total = 0.0;
    for j in 0..rest {
        let mut mean = 0.0;
        for i in 0..b {
            mean += xd[i * rest + j];
        }
        mean /= b as f64;
        let mut var = 0.0;
        for i in 0..b {
            let dv = xd[i * rest + j] - mean;
            var += dv * dv;
        }
        var /= b as f64;
        total += (var + 1e-8).sqrt();
    }
    total / rest as f64
}

/// One bias-corrected Adam step on a single scalar, straight from the
/// update equations.
#[allow(clippy::too_many_arguments)]
pub fn adam_scalar_step(
    w: f64,
    g: f64,
    m: f64,
    v: f64,
    t: u64,
    lr: f64,
    beta1: f64,
    beta2: f64,
    eps: f64,
) -> (f64, f64, f64) {
    let m = beta1 * m + (1.0 - beta1) * g;
    let v = beta2 * v + (1.0 - beta2) * g * g;
    let m_hat = m / (1.0 - beta1.powi(t as i32));
    let v_hat = v / (1.0 - beta2.powi(t as i32));
    (w - lr * m_hat / (v_hat.sqrt() + eps), m, v)
}

/// Closed-form number of training steps for a progressive schedule:
/// stage 0 has only a stabilize phase, later stages fade then stabilize.
pub fn schedule_step_count(target_stage: usize, reals_per_phase: u64, batch: u64) -> u64 {
    let steps_per_phase = reals_per_phase.div_ceil(batch);
    let phases = 1 + 2 * target_stage as u64;
    steps_per_phase * phases
}

/// Maximum relative error between two tensors.
pub fn max_rel_err<E: Scalar>(a: &Tensor<E>, b: &Tensor<E>) -> f64 {
    assert_eq!(a.shape(), b.shape());
    a.data()
        .iter()
        .zip(b.data())
        .map(|(&x, &y)| {
            let (x, y) = (x.to_f64(), y.to_f64());
            (x - y).abs() / x.abs().max(y.abs()).max(1e-8)
        })
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn naive_conv_counting() {
        let x = Tensor::full(&[1, 1, 4, 4, 4], 1.0);
        let w = Tensor::full(&[1, 1, 3, 3, 3], 1.0);
        let y = naive_conv3d(&x, &w, &[0.0], 1.0);
        assert_eq!(y.data()[0], 8.0);
        let center = (1 * 4 + 1) * 4 + 1;
        assert_eq!(y.data()[center], 27.0);
    }

    #[test]
    fn adam_first_step_is_minus_lr_when_beta1_zero() {
        let (w, _, _) = adam_scalar_step(0.0, 1.0, 0.0, 0.0, 1, 0.01, 0.0, 0.99, 1e-8);
        assert!((w + 0.01).abs() < 1e-9, "{w}");
    }

    #[test]
    fn schedule_count_example() {
        // reals_per_phase 64, batch 4, target stage 2: 16 + 32 + 32
        assert_eq!(schedule_step_count(2, 64, 4), 80);
    }
}
