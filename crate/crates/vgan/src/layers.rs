//! 3D network layers expressed as tape compositions.

use crate::error::{Result, VganError};
use crate::tape::{Tape, Var};
use crate::tensor::Scalar;

/// Negative-side slope of the leaky rectifier used throughout both networks.
pub const LEAKY_SLOPE: f64 = 0.2;
/// Epsilon inside the pixelwise-norm root.
pub const PIXELNORM_EPS: f64 = 1e-8;
/// Epsilon inside the minibatch-stddev root.
pub const MBSTD_EPS: f64 = 1e-8;

/// Runtime weight scale for equalized learning rate: sqrt(2 / fan_in).
pub fn equalized_scale(fan_in: usize) -> f64 {
    equalized_scale_gain(fan_in, 2.0)
}

/// Equalized scale with an explicit He gain: sqrt(gain / fan_in). Hidden
/// layers use gain 2 (rectifier); the linear heads use a smaller gain.
pub fn equalized_scale_gain(fan_in: usize, gain: f64) -> f64 {
    (gain / fan_in as f64).sqrt()
}

/// Same-padding 3D convolution with bias. `use_equalized` multiplies the
/// weights by sqrt(2 / (in_ch * k^3)) at call time.
pub fn conv3d<E: Scalar>(
    tape: &mut Tape<E>,
    x: Var,
    weight: Var,
    bias: Var,
    use_equalized: bool,
) -> Result<Var> {
    conv3d_gain(tape, x, weight, bias, if use_equalized { Some(2.0) } else { None })
}

/// As [`conv3d`] but with an explicit He gain (`None` disables the scale).
pub fn conv3d_gain<E: Scalar>(
    tape: &mut Tape<E>,
    x: Var,
    weight: Var,
    bias: Var,
    gain: Option<f64>,
) -> Result<Var> {
    let ws = tape.value(weight).shape().to_vec();
    if ws.len() != 5 {
        return Err(VganError::InvalidArgument(format!(
            "conv weight must be [O,C,k,k,k], got {ws:?}"
        )));
    }
    let fan_in = ws[1] * ws[2] * ws[3] * ws[4];
    let scale = gain.map_or(1.0, |g| equalized_scale_gain(fan_in, g));
    let y = tape.conv3d_raw(x, weight, scale)?;
    tape.add_bias_c(y, bias)
}

/// Affine map x[B,N] -> [B,M] with weight [M,N] and bias [M].
pub fn dense<E: Scalar>(
    tape: &mut Tape<E>,
    x: Var,
    weight: Var,
    bias: Var,
    use_equalized: bool,
) -> Result<Var> {
    dense_gain(tape, x, weight, bias, if use_equalized { Some(2.0) } else { None })
}

/// As [`dense`] but with an explicit He gain (`None` disables the scale).
pub fn dense_gain<E: Scalar>(
    tape: &mut Tape<E>,
    x: Var,
    weight: Var,
    bias: Var,
    gain: Option<f64>,
) -> Result<Var> {
    let (xs, ws, bs) = (
        tape.value(x).shape().to_vec(),
        tape.value(weight).shape().to_vec(),
        tape.value(bias).shape().to_vec(),
    );
    if xs.len() != 2 || ws.len() != 2 || xs[1] != ws[1] || bs != [ws[0]] {
        return Err(VganError::ShapeMismatch {
            left: xs,
            right: ws,
            ctx: "dense (x [B,N], weight [M,N], bias [M])",
        });
    }
    let y = tape.matmul(x, weight, false, true)?;
    let y = match gain {
        Some(g) => tape.scale(y, equalized_scale_gain(ws[1], g)),
        None => y,
    };
    let b_row = tape.reshape(bias, &[1, ws[0]])?;
    let b_full = tape.expand(b_row, &[xs[0], ws[0]]);
    tape.add(y, b_full)
}

pub fn leaky_relu<E: Scalar>(tape: &mut Tape<E>, x: Var) -> Var {
    tape.leaky_relu(x, LEAKY_SLOPE)
}

/// Normalizes each voxel's channel vector (axis 1) to unit RMS.
pub fn pixelwise_norm<E: Scalar>(tape: &mut Tape<E>, x: Var) -> Result<Var> {
    let shape = tape.value(x).shape().to_vec();
    if shape.len() < 2 {
        return Err(VganError::InvalidArgument(format!(
            "pixelwise_norm needs a channel axis, got shape {shape:?}"
        )));
    }
    let sq = tape.mul(x, x)?;
    let m = tape.reduce_keep(sq, &[1], true)?;
    let r = tape.rsqrt_eps(m, PIXELNORM_EPS);
    let r_full = tape.expand(r, &shape);
    tape.mul(x, r_full)
}

/// Appends one channel holding the batch-wide mean of the across-batch
/// standard deviation (single group, population variance).
pub fn minibatch_stddev<E: Scalar>(tape: &mut Tape<E>, x: Var) -> Result<Var> {
    let shape = tape.value(x).shape().to_vec();
    if shape.len() != 5 {
        return Err(VganError::InvalidArgument(format!(
            "minibatch_stddev expects [B,C,D,H,W], got {shape:?}"
        )));
    }
    let mu = tape.reduce_keep(x, &[0], true)?;
    let mu_full = tape.expand(mu, &shape);
    let xm = tape.sub(x, mu_full)?;
    let sq = tape.mul(xm, xm)?;
    let var = tape.reduce_keep(sq, &[0], true)?;
    let sd = tape.sqrt_eps(var, MBSTD_EPS);
    let s = tape.mean_all(sd);
    let s = tape.reshape(s, &[1, 1, 1, 1, 1])?;
    let map = tape.expand(s, &[shape[0], 1, shape[2], shape[3], shape[4]]);
    Ok(tape.concat_c(x, map))
}

/// (1 - alpha) * coarse + alpha * fine.
pub fn fade_blend<E: Scalar>(
    tape: &mut Tape<E>,
    alpha: f64,
    coarse: Var,
    fine: Var,
) -> Result<Var> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(VganError::InvalidArgument(format!(
            "fade alpha must be in [0,1], got {alpha}"
        )));
    }
    let c = tape.scale(coarse, 1.0 - alpha);
    let f = tape.scale(fine, alpha);
    tape.add(c, f)
}
