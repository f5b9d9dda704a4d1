//! Raw numeric kernels behind the tape ops.
//!
//! The 3D convolution is a loop-blocked direct kernel: the innermost loop
//! runs over the contiguous W axis and the per-voxel accumulation order
//! (c, kd, kh, kw) is fixed, so results are deterministic even when the
//! outer (batch, channel) loop is parallelized.

use rayon::prelude::*;

use crate::tensor::{Scalar, Tensor};

pub fn conv_dims(x: &Tensor<impl Scalar>, w: &Tensor<impl Scalar>) -> (usize, usize, usize, usize, usize, usize, usize) {
    let (b, c, d, h, wd) = dims5(x.shape());
    let ws = w.shape();
    assert_eq!(ws.len(), 5, "weight must be [O,C,k,k,k]");
    let (o, k) = (ws[0], ws[2]);
    assert_eq!(ws[1], c, "input/weight channel mismatch");
    assert!(ws[3] == k && ws[4] == k, "kernel must be cubic");
    assert!(k % 2 == 1, "kernel extent must be odd");
    (b, c, o, d, h, wd, k)
}

fn dims5(shape: &[usize]) -> (usize, usize, usize, usize, usize) {
    assert_eq!(shape.len(), 5, "expected 5-D [B,C,D,H,W], got {shape:?}");
    (shape[0], shape[1], shape[2], shape[3], shape[4])
}

/// Same-padding stride-1 direct 3D convolution. `scale` is folded into each
/// weight element before accumulation, so equalized-rate scaling is
/// bit-identical to convolving with pre-scaled weights.
pub fn conv3d_fwd<E: Scalar>(x: &Tensor<E>, w: &Tensor<E>, scale: E) -> Tensor<E> {
    let (b, c, o, d, h, wd, k) = conv_dims(x, w);
    let p = (k - 1) / 2;
    let mut out = Tensor::zeros(&[b, o, d, h, wd]);
    let vol = d * h * wd;
    let plane = h * wd;
    let xd = x.data();
    let wdat = w.data();
    out.data_mut()
        .par_chunks_mut(vol)
        .enumerate()
        .for_each(|(bo, chunk)| {
            let (bi, oi) = (bo / o, bo % o);
            for z in 0..d {
                for y in 0..h {
                    let orow = &mut chunk[z * plane + y * wd..z * plane + y * wd + wd];
                    for ci in 0..c {
                        let xbase = (bi * c + ci) * vol;
                        for kd in 0..k {
                            let zi = z + kd;
                            if zi < p || zi - p >= d {
                                continue;
                            }
                            let zi = zi - p;
                            for kh in 0..k {
                                let yi = y + kh;
                                if yi < p || yi - p >= h {
                                    continue;
                                }
                                let yi = yi - p;
                                let xrow = &xd[xbase + zi * plane + yi * wd..xbase + zi * plane + yi * wd + wd];
                                let wbase = ((oi * c + ci) * k + kd) * k * k + kh * k;
                                if k == 3 && wd >= 2 {
                                    // nested fma keeps the kw accumulation
                                    // order while fusing the three taps into
                                    // one pass over the row
                                    let w0 = scale * wdat[wbase];
                                    let w1 = scale * wdat[wbase + 1];
                                    let w2 = scale * wdat[wbase + 2];
                                    orow[0] = w2.mul_add(xrow[1], w1.mul_add(xrow[0], orow[0]));
                                    for t in 1..wd - 1 {
                                        orow[t] = w2.mul_add(
                                            xrow[t + 1],
                                            w1.mul_add(xrow[t], w0.mul_add(xrow[t - 1], orow[t])),
                                        );
                                    }
                                    orow[wd - 1] = w1
                                        .mul_add(xrow[wd - 1], w0.mul_add(xrow[wd - 2], orow[wd - 1]));
                                } else {
                                    for kw in 0..k {
                                        let wv = scale * wdat[wbase + kw];
                                        // output t reads input t + kw - p
                                        let lo = p.saturating_sub(kw);
                                        let hi = (wd + p - kw).min(wd);
                                        for t in lo..hi {
                                            orow[t] = wv.mul_add(xrow[t + kw - p], orow[t]);
                                        }
                                    }
                                }
                            }
                        }
                    }
                }
            }
        });
    out
}

/// Gradient of [`conv3d_fwd`] with respect to the input.
pub fn conv3d_dx<E: Scalar>(gy: &Tensor<E>, w: &Tensor<E>, scale: E) -> Tensor<E> {
    let (b, o, d, h, wd) = dims5(gy.shape());
    let ws = w.shape();
    let (c, k) = (ws[1], ws[2]);
    assert_eq!(ws[0], o, "grad/weight out-channel mismatch");
    let p = (k - 1) / 2;
    let mut gx = Tensor::zeros(&[b, c, d, h, wd]);
    let vol = d * h * wd;
    let plane = h * wd;
    let gyd = gy.data();
    let wdat = w.data();
    gx.data_mut()
        .par_chunks_mut(vol)
        .enumerate()
        .for_each(|(bc, chunk)| {
            let (bi, ci) = (bc / c, bc % c);
            for z in 0..d {
                for y in 0..h {
                    let grow = &mut chunk[z * plane + y * wd..z * plane + y * wd + wd];
                    for oi in 0..o {
                        let gbase = (bi * o + oi) * vol;
                        for kd in 0..k {
                            // gx[z] reads gy[z + p - kd]
                            let zi = z + p;
                            if zi < kd || zi - kd >= d {
                                continue;
                            }
                            let zi = zi - kd;
                            for kh in 0..k {
                                let yi = y + p;
                                if yi < kh || yi - kh >= h {
                                    continue;
                                }
                                let yi = yi - kh;
                                let gyrow = &gyd[gbase + zi * plane + yi * wd..gbase + zi * plane + yi * wd + wd];
                                let wbase = ((oi * c + ci) * k + kd) * k * k + kh * k;
                                if k == 3 && wd >= 2 {
                                    let w0 = scale * wdat[wbase];
                                    let w1 = scale * wdat[wbase + 1];
                                    let w2 = scale * wdat[wbase + 2];
                                    // gx t reads gy t + 1 - kw
                                    grow[0] = w1.mul_add(gyrow[0], w0.mul_add(gyrow[1], grow[0]));
                                    for t in 1..wd - 1 {
                                        grow[t] = w2.mul_add(
                                            gyrow[t - 1],
                                            w1.mul_add(gyrow[t], w0.mul_add(gyrow[t + 1], grow[t])),
                                        );
                                    }
                                    grow[wd - 1] = w2
                                        .mul_add(gyrow[wd - 2], w1.mul_add(gyrow[wd - 1], grow[wd - 1]));
                                } else {
                                    for kw in 0..k {
                                        let wv = scale * wdat[wbase + kw];
                                        // gx t reads gy t + p - kw
                                        let lo = kw.saturating_sub(p);
                                        let hi = (wd + kw).saturating_sub(p).min(wd);
                                        for t in lo..hi {
                                            grow[t] = wv.mul_add(gyrow[t + p - kw], grow[t]);
                                        }
                                    }
                                }
                            }
                        }
                    }
                }
            }
        });
    gx
}

/// Gradient of [`conv3d_fwd`] with respect to the weights.
pub fn conv3d_dw<E: Scalar>(x: &Tensor<E>, gy: &Tensor<E>, k: usize, scale: E) -> Tensor<E> {
    let (b, c, d, h, wd) = dims5(x.shape());
    let (gb, o, gd, gh, gw) = dims5(gy.shape());
    assert!(gb == b && gd == d && gh == h && gw == wd, "conv_dw shape mismatch");
    let p = (k - 1) / 2;
    let mut grad_w = Tensor::zeros(&[o, c, k, k, k]);
    let vol = d * h * wd;
    let plane = h * wd;
    let xd = x.data();
    let gyd = gy.data();
    grad_w
        .data_mut()
        .par_chunks_mut(k * k * k)
        .enumerate()
        .for_each(|(oc, chunk)| {
            let (oi, ci) = (oc / c, oc % c);
            for kd in 0..k {
                for kh in 0..k {
                    for kw in 0..k {
                        // eight independent accumulator lanes break the fma
                        // dependency chain; lane-fill and the final fold are
                        // fixed, so the sum stays deterministic
                        let mut lanes = [E::ZERO; 8];
                        for bi in 0..b {
                            let gbase = (bi * o + oi) * vol;
                            let xbase = (bi * c + ci) * vol;
                            for z in 0..d {
                                let zi = z + kd;
                                if zi < p || zi - p >= d {
                                    continue;
                                }
                                let zi = zi - p;
                                for y in 0..h {
                                    let yi = y + kh;
                                    if yi < p || yi - p >= h {
                                        continue;
                                    }
                                    let yi = yi - p;
                                    let gyrow = &gyd[gbase + z * plane + y * wd..gbase + z * plane + y * wd + wd];
                                    let xrow = &xd[xbase + zi * plane + yi * wd..xbase + zi * plane + yi * wd + wd];
                                    let lo = p.saturating_sub(kw);
                                    let hi = (wd + p - kw).min(wd);
                                    let g = &gyrow[lo..hi];
                                    let xr = &xrow[lo + kw - p..hi + kw - p];
                                    let mut gi = g.chunks_exact(8);
                                    let mut xi = xr.chunks_exact(8);
                                    for (gc, xc) in (&mut gi).zip(&mut xi) {
                                        for j in 0..8 {
                                            lanes[j] = gc[j].mul_add(xc[j], lanes[j]);
                                        }
                                    }
                                    for (j, (gv, xv)) in
                                        gi.remainder().iter().zip(xi.remainder()).enumerate()
                                    {
                                        lanes[j] = gv.mul_add(*xv, lanes[j]);
                                    }
                                }
                            }
                        }
                        let mut acc = E::ZERO;
                        for l in lanes {
                            acc += l;
                        }
                        chunk[(kd * k + kh) * k + kw] = scale * acc;
                    }
                }
            }
        });
    grad_w
}

/// Nearest-neighbor 2x upsampling of the three spatial axes.
pub fn upsample2x<E: Scalar>(x: &Tensor<E>) -> Tensor<E> {
    let (b, c, d, h, w) = dims5(x.shape());
    let mut out = Tensor::zeros(&[b, c, 2 * d, 2 * h, 2 * w]);
    let xd = x.data();
    let od = out.data_mut();
    for bc in 0..b * c {
        let xbase = bc * d * h * w;
        let obase = bc * 8 * d * h * w;
        for z in 0..2 * d {
            for y in 0..2 * h {
                for t in 0..2 * w {
                    od[obase + (z * 2 * h + y) * 2 * w + t] =
                        xd[xbase + ((z / 2) * h + y / 2) * w + t / 2];
                }
            }
        }
    }
    out
}

/// 2x average-pool downsampling; spatial extents must be even.
pub fn downsample2x<E: Scalar>(x: &Tensor<E>) -> Tensor<E> {
    let (b, c, d, h, w) = dims5(x.shape());
    assert!(d % 2 == 0 && h % 2 == 0 && w % 2 == 0, "odd spatial extent");
    let (d2, h2, w2) = (d / 2, h / 2, w / 2);
    let mut out = Tensor::zeros(&[b, c, d2, h2, w2]);
    let xd = x.data();
    let od = out.data_mut();
    let eighth = E::from_f64(0.125);
    for bc in 0..b * c {
        let xbase = bc * d * h * w;
        let obase = bc * d2 * h2 * w2;
        for z in 0..d2 {
            for y in 0..h2 {
                for t in 0..w2 {
                    let mut acc = E::ZERO;
                    for dz in 0..2 {
                        for dy in 0..2 {
                            for dt in 0..2 {
                                acc += xd[xbase
                                    + ((2 * z + dz) * h + 2 * y + dy) * w
                                    + 2 * t
                                    + dt];
                            }
                        }
                    }
                    od[obase + (z * h2 + y) * w2 + t] = acc * eighth;
                }
            }
        }
    }
    out
}

/// `a` is [m,k] (or [k,m] when `ta`), `b` is [k,n] (or [n,k] when `tb`).
pub fn matmul<E: Scalar>(a: &Tensor<E>, b: &Tensor<E>, ta: bool, tb: bool) -> Tensor<E> {
    let (ar, ac) = (a.shape()[0], a.shape()[1]);
    let (br, bc) = (b.shape()[0], b.shape()[1]);
    let (m, ka) = if ta { (ac, ar) } else { (ar, ac) };
    let (kb, n) = if tb { (bc, br) } else { (br, bc) };
    assert_eq!(ka, kb, "matmul inner dim mismatch");
    let k = ka;
    let ad = a.data();
    let bd = b.data();
    let mut out = Tensor::zeros(&[m, n]);
    let od = out.data_mut();
    for i in 0..m {
        for j in 0..n {
            let mut acc = E::ZERO;
            for l in 0..k {
                let av = if ta { ad[l * ac + i] } else { ad[i * ac + l] };
                let bv = if tb { bd[j * bc + l] } else { bd[l * bc + j] };
                acc = av.mul_add(bv, acc);
            }
            od[i * n + j] = acc;
        }
    }
    out
}

fn unravel(mut linear: usize, shape: &[usize], out: &mut [usize]) {
    for i in (0..shape.len()).rev() {
        out[i] = linear % shape[i];
        linear /= shape[i];
    }
}

/// Sum or mean over `axes`, keeping reduced axes as extent 1.
pub fn reduce<E: Scalar>(x: &Tensor<E>, axes: &[usize], mean: bool) -> Tensor<E> {
    let shape = x.shape();
    let out_shape: Vec<usize> = shape
        .iter()
        .enumerate()
        .map(|(i, &d)| if axes.contains(&i) { 1 } else { d })
        .collect();
    let mut out = Tensor::zeros(&out_shape);
    let out_strides = out.strides().to_vec();
    let mut idx = vec![0usize; shape.len()];
    let od = out.data_mut();
    for (linear, &v) in x.data().iter().enumerate() {
        unravel(linear, shape, &mut idx);
        let mut o = 0;
        for (i, &ix) in idx.iter().enumerate() {
            if !axes.contains(&i) {
                o += ix * out_strides[i];
            }
        }
        od[o] += v;
    }
    if mean {
        let count: usize = axes.iter().map(|&i| shape[i]).product();
        let inv = E::from_f64(1.0 / count as f64);
        for v in od.iter_mut() {
            *v = *v * inv;
        }
    }
    out
}

/// Broadcast extent-1 axes of `x` up to `target` (same rank).
pub fn expand<E: Scalar>(x: &Tensor<E>, target: &[usize]) -> Tensor<E> {
    let shape = x.shape();
    assert_eq!(shape.len(), target.len(), "expand rank mismatch");
    for (i, (&s, &t)) in shape.iter().zip(target).enumerate() {
        assert!(s == t || s == 1, "expand axis {i}: {s} -> {t}");
    }
    let mut out = Tensor::zeros(target);
    let in_strides = x.strides().to_vec();
    let xd = x.data();
    let mut idx = vec![0usize; target.len()];
    let od = out.data_mut();
    for (linear, ov) in od.iter_mut().enumerate() {
        unravel(linear, target, &mut idx);
        let mut o = 0;
        for (i, &ix) in idx.iter().enumerate() {
            if shape[i] != 1 {
                o += ix * in_strides[i];
            }
        }
        *ov = xd[o];
    }
    out
}

/// Concatenate along axis 1.
pub fn concat_axis1<E: Scalar>(a: &Tensor<E>, b: &Tensor<E>) -> Tensor<E> {
    let (sa, sb) = (a.shape(), b.shape());
    assert_eq!(sa.len(), sb.len());
    assert_eq!(sa[0], sb[0]);
    assert_eq!(&sa[2..], &sb[2..], "trailing dims must match for concat");
    let inner: usize = sa[2..].iter().product();
    let (ca, cb) = (sa[1], sb[1]);
    let mut shape = sa.to_vec();
    shape[1] = ca + cb;
    let mut out = Tensor::zeros(&shape);
    let od = out.data_mut();
    for i in 0..sa[0] {
        let dst = i * (ca + cb) * inner;
        od[dst..dst + ca * inner].copy_from_slice(&a.data()[i * ca * inner..(i * ca + ca) * inner]);
        od[dst + ca * inner..dst + (ca + cb) * inner]
            .copy_from_slice(&b.data()[i * cb * inner..(i * cb + cb) * inner]);
    }
    out
}

/// Slice channels `[from, to)` along axis 1.
pub fn slice_axis1<E: Scalar>(a: &Tensor<E>, from: usize, to: usize) -> Tensor<E> {
    let sa = a.shape();
    assert!(from < to && to <= sa[1]);
    let inner: usize = sa[2..].iter().product();
    let c = sa[1];
    let mut shape = sa.to_vec();
    shape[1] = to - from;
    let mut out = Tensor::zeros(&shape);
    let od = out.data_mut();
    for i in 0..sa[0] {
        let src = (i * c + from) * inner;
        od[i * (to - from) * inner..(i + 1) * (to - from) * inner]
            .copy_from_slice(&a.data()[src..src + (to - from) * inner]);
    }
    out
}

/// Zero-pad channels along axis 1.
pub fn pad_axis1<E: Scalar>(a: &Tensor<E>, before: usize, after: usize) -> Tensor<E> {
    let sa = a.shape();
    let inner: usize = sa[2..].iter().product();
    let c = sa[1];
    let mut shape = sa.to_vec();
    shape[1] = before + c + after;
    let mut out = Tensor::zeros(&shape);
    let od = out.data_mut();
    for i in 0..sa[0] {
        let dst = (i * shape[1] + before) * inner;
        od[dst..dst + c * inner].copy_from_slice(&a.data()[i * c * inner..(i + 1) * c * inner]);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_1x1_conv() {
        let x = Tensor::from_vec(&[1, 1, 2, 2, 2], (0..8).map(|v| v as f32).collect()).unwrap();
        let w = Tensor::from_vec(&[1, 1, 1, 1, 1], vec![1.0]).unwrap();
        let y = conv3d_fwd(&x, &w, 1.0);
        assert_eq!(y.data(), x.data());
    }

    #[test]
    fn ones_kernel_counts_neighbors() {
        let x = Tensor::full(&[1, 1, 4, 4, 4], 1.0f32);
        let w = Tensor::full(&[1, 1, 3, 3, 3], 1.0f32);
        let y = conv3d_fwd(&x, &w, 1.0);
        // corner voxel has a 2x2x2 in-bounds neighborhood, center 3x3x3
        assert_eq!(y.data()[0], 8.0);
        let center = ((1 * 4) + 1) * 4 + 1;
        assert_eq!(y.data()[center], 27.0);
    }

    #[test]
    fn down_up_roundtrip() {
        let x = Tensor::from_vec(&[1, 1, 2, 2, 2], (0..8).map(|v| v as f32).collect()).unwrap();
        let up = upsample2x(&x);
        assert_eq!(up.shape(), &[1, 1, 4, 4, 4]);
        let back = downsample2x(&up);
        assert_eq!(back.data(), x.data());
    }

    #[test]
    fn downsample_block_mean() {
        let x = Tensor::from_vec(&[1, 1, 2, 2, 2], (0..8).map(|v| v as f32).collect()).unwrap();
        let y = downsample2x(&x);
        assert_eq!(y.data(), &[3.5]);
    }

    #[test]
    fn matmul_transposes() {
        let a = Tensor::from_vec(&[2, 3], vec![1., 2., 3., 4., 5., 6.]).unwrap();
        let b = Tensor::from_vec(&[2, 3], vec![1., 0., 1., 0., 1., 0.]).unwrap();
        let y: Tensor<f64> = matmul(&a, &b, false, true);
        assert_eq!(y.shape(), &[2, 2]);
        assert_eq!(y.data(), &[4., 2., 10., 5.]);
    }

    #[test]
    fn reduce_mean_axis() {
        let x = Tensor::from_vec(&[2, 3], vec![1.0f32, 2., 3., 4., 5., 6.]).unwrap();
        let m = reduce(&x, &[1], true);
        assert_eq!(m.shape(), &[2, 1]);
        assert_eq!(m.data(), &[2.0, 5.0]);
        let s = reduce(&x, &[0, 1], false);
        assert_eq!(s.data(), &[21.0]);
    }

    #[test]
    fn expand_broadcasts() {
        let x = Tensor::from_vec(&[2, 1], vec![1.0f32, 2.0]).unwrap();
        let y = expand(&x, &[2, 3]);
        assert_eq!(y.data(), &[1., 1., 1., 2., 2., 2.]);
    }

    #[test]
    fn concat_slice_pad_axis1() {
        let a = Tensor::from_vec(&[1, 2, 2], vec![1.0f32, 2., 3., 4.]).unwrap();
        let b = Tensor::from_vec(&[1, 1, 2], vec![9.0f32, 9.]).unwrap();
        let c = concat_axis1(&a, &b);
        assert_eq!(c.shape(), &[1, 3, 2]);
        assert_eq!(c.data(), &[1., 2., 3., 4., 9., 9.]);
        let s = slice_axis1(&c, 2, 3);
        assert_eq!(s.data(), &[9., 9.]);
        let p = pad_axis1(&b, 2, 0);
        assert_eq!(p.data(), &[0., 0., 0., 0., 9., 9.]);
    }
}
