//! Reverse-mode differentiation tape.
//!
//! Ops evaluate eagerly; each node records its inputs and enough metadata to
//! emit its vector-Jacobian product *as tape ops*. Because backward builds
//! ordinary nodes, the emitted gradient graph is itself differentiable, which
//! is what the gradient-penalty term needs (gradients of a gradient norm).

use std::collections::HashMap;

use crate::error::{Result, VganError};
use crate::kernels;
use crate::tensor::{Scalar, Tensor};

/// Handle to a node on a [`Tape`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Var(pub(crate) usize);

#[derive(Clone, Debug)]
enum Op {
    Leaf,
    Add(Var, Var),
    Sub(Var, Var),
    Mul(Var, Var),
    Scale(Var, f64),
    AddK(Var),
    LeakyRelu(Var, f64),
    Recip(Var),
    SqrtEps(Var),
    RsqrtEps(Var),
    Reduce { a: Var, axes: Vec<usize>, mean: bool },
    Expand { a: Var },
    Reshape { a: Var },
    MatMul { a: Var, b: Var, ta: bool, tb: bool },
    ConvFwd { x: Var, w: Var, scale: f64 },
    ConvDx { gy: Var, w: Var, scale: f64 },
    ConvDw { x: Var, gy: Var, scale: f64 },
    AddBiasC { x: Var, b: Var },
    Up2(Var),
    Down2(Var),
    ConcatC(Var, Var),
    SliceC { a: Var, from: usize, to: usize },
    PadC { a: Var, before: usize },
}

struct Node<E: Scalar> {
    op: Op,
    value: Tensor<E>,
    requires_grad: bool,
}

/// Gradients produced by one backward pass, keyed by the differentiated vars.
pub struct GradMap {
    grads: HashMap<usize, Var>,
}

impl GradMap {
    pub fn grad_var(&self, v: Var) -> Option<Var> {
        self.grads.get(&v.0).copied()
    }
}

pub struct Tape<E: Scalar = f32> {
    nodes: Vec<Node<E>>,
}

impl<E: Scalar> Default for Tape<E> {
    fn default() -> Self {
        Self::new()
    }
}

impl<E: Scalar> Tape<E> {
    pub fn new() -> Self {
        Tape { nodes: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn push(&mut self, op: Op, value: Tensor<E>, requires_grad: bool) -> Var {
        self.nodes.push(Node {
            op,
            value,
            requires_grad,
        });
        Var(self.nodes.len() - 1)
    }

    fn rg(&self, v: Var) -> bool {
        self.nodes[v.0].requires_grad
    }

    pub fn value(&self, v: Var) -> &Tensor<E> {
        &self.nodes[v.0].value
    }

    /// Records an input tensor; differentiated iff `requires_grad` is set on it.
    pub fn leaf(&mut self, t: Tensor<E>) -> Var {
        let rg = t.requires_grad();
        self.push(Op::Leaf, t, rg)
    }

    pub fn constant(&mut self, t: Tensor<E>) -> Var {
        self.push(Op::Leaf, t, false)
    }

    fn binary_shapes(&self, a: Var, b: Var, ctx: &'static str) -> Result<()> {
        if self.value(a).shape() != self.value(b).shape() {
            return Err(VganError::ShapeMismatch {
                left: self.value(a).shape().to_vec(),
                right: self.value(b).shape().to_vec(),
                ctx,
            });
        }
        Ok(())
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        self.binary_shapes(a, b, "add")?;
        let v = crate::tensor::elementwise_zip(self.value(a), self.value(b), "add", |x, y| x + y)?;
        Ok(self.push(Op::Add(a, b), v, self.rg(a) || self.rg(b)))
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var> {
        self.binary_shapes(a, b, "sub")?;
        let v = crate::tensor::elementwise_zip(self.value(a), self.value(b), "sub", |x, y| x - y)?;
        Ok(self.push(Op::Sub(a, b), v, self.rg(a) || self.rg(b)))
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        self.binary_shapes(a, b, "mul")?;
        let v = crate::tensor::elementwise_zip(self.value(a), self.value(b), "mul", |x, y| x * y)?;
        Ok(self.push(Op::Mul(a, b), v, self.rg(a) || self.rg(b)))
    }

    pub fn scale(&mut self, a: Var, k: f64) -> Var {
        let ke = E::from_f64(k);
        let v = self.value(a).map(|x| x * ke);
        self.push(Op::Scale(a, k), v, self.rg(a))
    }

    pub fn add_scalar(&mut self, a: Var, k: f64) -> Var {
        let ke = E::from_f64(k);
        let v = self.value(a).map(|x| x + ke);
        self.push(Op::AddK(a), v, self.rg(a))
    }

    pub fn leaky_relu(&mut self, a: Var, slope: f64) -> Var {
        let s = E::from_f64(slope);
        let v = self.value(a).map(|x| if x >= E::ZERO { x } else { s * x });
        self.push(Op::LeakyRelu(a, slope), v, self.rg(a))
    }

    pub fn recip(&mut self, a: Var) -> Var {
        let v = self.value(a).map(|x| E::ONE / x);
        self.push(Op::Recip(a), v, self.rg(a))
    }

    pub fn sqrt_eps(&mut self, a: Var, eps: f64) -> Var {
        let e = E::from_f64(eps);
        let v = self.value(a).map(|x| (x + e).sqrt());
        self.push(Op::SqrtEps(a), v, self.rg(a))
    }

    pub fn rsqrt_eps(&mut self, a: Var, eps: f64) -> Var {
        let e = E::from_f64(eps);
        let v = self.value(a).map(|x| E::ONE / (x + e).sqrt());
        self.push(Op::RsqrtEps(a), v, self.rg(a))
    }

    /// Sum/mean over `axes`, reduced extents kept as 1.
    pub fn reduce_keep(&mut self, a: Var, axes: &[usize], mean: bool) -> Result<Var> {
        let shape = self.value(a).shape();
        for &ax in axes {
            if ax >= shape.len() {
                return Err(VganError::InvalidArgument(format!(
                    "reduce axis {ax} out of range for shape {shape:?}"
                )));
            }
            if shape[ax] == 0 {
                return Err(VganError::InvalidArgument(format!(
                    "reduce over zero-extent axis {ax} of shape {shape:?}"
                )));
            }
        }
        let v = kernels::reduce(self.value(a), axes, mean);
        Ok(self.push(
            Op::Reduce {
                a,
                axes: axes.to_vec(),
                mean,
            },
            v,
            self.rg(a),
        ))
    }

    /// Sum/mean over `axes` with reduced extents removed.
    pub fn reduce(&mut self, a: Var, axes: &[usize], mean: bool) -> Result<Var> {
        let kept = self.reduce_keep(a, axes, mean)?;
        let shape: Vec<usize> = self
            .value(kept)
            .shape()
            .iter()
            .enumerate()
            .filter(|(i, _)| !axes.contains(i))
            .map(|(_, &d)| d)
            .collect();
        let shape = if shape.is_empty() { vec![1] } else { shape };
        self.reshape(kept, &shape)
    }

    pub fn mean_all(&mut self, a: Var) -> Var {
        let axes: Vec<usize> = (0..self.value(a).shape().len()).collect();
        self.reduce(a, &axes, true).expect("mean_all")
    }

    pub fn sum_all(&mut self, a: Var) -> Var {
        let axes: Vec<usize> = (0..self.value(a).shape().len()).collect();
        self.reduce(a, &axes, false).expect("sum_all")
    }

    pub fn expand(&mut self, a: Var, target: &[usize]) -> Var {
        let v = kernels::expand(self.value(a), target);
        self.push(Op::Expand { a }, v, self.rg(a))
    }

    pub fn reshape(&mut self, a: Var, shape: &[usize]) -> Result<Var> {
        let v = self.value(a).clone().reshape(shape)?;
        Ok(self.push(Op::Reshape { a }, v, self.rg(a)))
    }

    pub fn matmul(&mut self, a: Var, b: Var, ta: bool, tb: bool) -> Result<Var> {
        let (sa, sb) = (self.value(a).shape(), self.value(b).shape());
        if sa.len() != 2 || sb.len() != 2 {
            return Err(VganError::InvalidArgument(format!(
                "matmul expects matrices, got {sa:?} and {sb:?}"
            )));
        }
        let ka = if ta { sa[0] } else { sa[1] };
        let kb = if tb { sb[1] } else { sb[0] };
        if ka != kb {
            return Err(VganError::ShapeMismatch {
                left: sa.to_vec(),
                right: sb.to_vec(),
                ctx: "matmul",
            });
        }
        let v = kernels::matmul(self.value(a), self.value(b), ta, tb);
        Ok(self.push(Op::MatMul { a, b, ta, tb }, v, self.rg(a) || self.rg(b)))
    }

    /// Same-padding 3D convolution without bias; `scale` multiplies the
    /// weights (equalized learning rate).
    pub fn conv3d_raw(&mut self, x: Var, w: Var, scale: f64) -> Result<Var> {
        let (xs, ws) = (self.value(x).shape(), self.value(w).shape());
        if xs.len() != 5 || ws.len() != 5 || xs[1] != ws[1] {
            return Err(VganError::ShapeMismatch {
                left: xs.to_vec(),
                right: ws.to_vec(),
                ctx: "conv3d (input [B,C,D,H,W] vs weight [O,C,k,k,k])",
            });
        }
        let v = kernels::conv3d_fwd(self.value(x), self.value(w), E::from_f64(scale));
        Ok(self.push(Op::ConvFwd { x, w, scale }, v, self.rg(x) || self.rg(w)))
    }

    fn conv3d_dx_op(&mut self, gy: Var, w: Var, scale: f64) -> Var {
        let v = kernels::conv3d_dx(self.value(gy), self.value(w), E::from_f64(scale));
        self.push(Op::ConvDx { gy, w, scale }, v, self.rg(gy) || self.rg(w))
    }

    fn conv3d_dw_op(&mut self, x: Var, gy: Var, k: usize, scale: f64) -> Var {
        let v = kernels::conv3d_dw(self.value(x), self.value(gy), k, E::from_f64(scale));
        self.push(Op::ConvDw { x, gy, scale }, v, self.rg(x) || self.rg(gy))
    }

    /// Adds a per-channel bias to a [B,C,D,H,W] tensor.
    pub fn add_bias_c(&mut self, x: Var, b: Var) -> Result<Var> {
        let (xs, bs) = (self.value(x).shape(), self.value(b).shape());
        if xs.len() != 5 || bs.len() != 1 || bs[0] != xs[1] {
            return Err(VganError::ShapeMismatch {
                left: xs.to_vec(),
                right: bs.to_vec(),
                ctx: "add_bias_c",
            });
        }
        let shape = xs.to_vec();
        let mut v = self.value(x).clone();
        let bd = self.value(b).data().to_vec();
        let inner: usize = shape[2..].iter().product();
        let c = shape[1];
        for (i, val) in v.data_mut().iter_mut().enumerate() {
            *val += bd[(i / inner) % c];
        }
        Ok(self.push(Op::AddBiasC { x, b }, v, self.rg(x) || self.rg(b)))
    }

    pub fn upsample2x(&mut self, a: Var) -> Var {
        let v = kernels::upsample2x(self.value(a));
        self.push(Op::Up2(a), v, self.rg(a))
    }

    pub fn downsample2x(&mut self, a: Var) -> Result<Var> {
        let s = self.value(a).shape();
        if s[2] % 2 != 0 || s[3] % 2 != 0 || s[4] % 2 != 0 {
            return Err(VganError::InvalidArgument(format!(
                "downsample2x requires even spatial extents, got {s:?}"
            )));
        }
        let v = kernels::downsample2x(self.value(a));
        Ok(self.push(Op::Down2(a), v, self.rg(a)))
    }

    pub fn concat_c(&mut self, a: Var, b: Var) -> Var {
        let v = kernels::concat_axis1(self.value(a), self.value(b));
        self.push(Op::ConcatC(a, b), v, self.rg(a) || self.rg(b))
    }

    pub fn slice_c(&mut self, a: Var, from: usize, to: usize) -> Var {
        let v = kernels::slice_axis1(self.value(a), from, to);
        self.push(Op::SliceC { a, from, to }, v, self.rg(a))
    }

    fn pad_c(&mut self, a: Var, before: usize, after: usize) -> Var {
        let v = kernels::pad_axis1(self.value(a), before, after);
        self.push(Op::PadC { a, before }, v, self.rg(a))
    }

    /// Reverse pass from a scalar `loss`. Gradients are emitted as new tape
    /// nodes, so they can themselves be differentiated by a second call.
    pub fn backward(&mut self, loss: Var) -> Result<GradMap> {
        if self.value(loss).numel() != 1 {
            return Err(VganError::InvalidArgument(format!(
                "backward needs a scalar loss, got shape {:?}",
                self.value(loss).shape()
            )));
        }
        let n = loss.0 + 1;
        let mut grads: Vec<Option<Var>> = vec![None; n];
        let seed_shape = self.value(loss).shape().to_vec();
        let seed = self.constant(Tensor::full(&seed_shape, E::ONE));
        grads[loss.0] = Some(seed);
        for id in (0..n).rev() {
            let Some(g) = grads[id] else { continue };
            if !self.nodes[id].requires_grad {
                continue;
            }
            let contributions = self.vjp(Var(id), g);
            for (input, gin) in contributions {
                if !self.rg(input) || input.0 >= n {
                    continue;
                }
                grads[input.0] = Some(match grads[input.0] {
                    None => gin,
                    Some(prev) => self.add(prev, gin).expect("vjp accumulation shape"),
                });
            }
        }
        let map = grads
            .iter()
            .enumerate()
            .filter_map(|(i, g)| g.map(|v| (i, v)))
            .collect();
        Ok(GradMap { grads: map })
    }

    /// Gradient tensor for `v`; zeros when `v` was not reached (detached).
    pub fn grad_tensor(&self, map: &GradMap, v: Var) -> Tensor<E> {
        match map.grad_var(v) {
            Some(g) => self.value(g).clone(),
            None => Tensor::zeros(self.value(v).shape()),
        }
    }

    fn vjp(&mut self, out: Var, g: Var) -> Vec<(Var, Var)> {
        let op = self.nodes[out.0].op.clone();
        match op {
            Op::Leaf => vec![],
            Op::Add(a, b) => vec![(a, g), (b, g)],
            Op::Sub(a, b) => {
                let ng = self.scale(g, -1.0);
                vec![(a, g), (b, ng)]
            }
            Op::Mul(a, b) => {
                let ga = self.mul(g, b).expect("mul vjp");
                let gb = self.mul(g, a).expect("mul vjp");
                vec![(a, ga), (b, gb)]
            }
            Op::Scale(a, k) => vec![(a, self.scale(g, k))],
            Op::AddK(a) => vec![(a, g)],
            Op::LeakyRelu(a, slope) => {
                let s = E::from_f64(slope);
                let mask = self.value(a).map(|x| if x >= E::ZERO { E::ONE } else { s });
                let m = self.constant(mask);
                let ga = self.mul(g, m).expect("leaky vjp");
                vec![(a, ga)]
            }
            Op::Recip(a) => {
                let y2 = self.mul(out, out).expect("recip vjp");
                let gy = self.mul(g, y2).expect("recip vjp");
                vec![(a, self.scale(gy, -1.0))]
            }
            Op::SqrtEps(a) => {
                let inv = self.recip(out);
                let gh = self.mul(g, inv).expect("sqrt vjp");
                vec![(a, self.scale(gh, 0.5))]
            }
            Op::RsqrtEps(a) => {
                let y2 = self.mul(out, out).expect("rsqrt vjp");
                let y3 = self.mul(y2, out).expect("rsqrt vjp");
                let gh = self.mul(g, y3).expect("rsqrt vjp");
                vec![(a, self.scale(gh, -0.5))]
            }
            Op::Reduce { a, axes, mean } => {
                let target = self.value(a).shape().to_vec();
                let scaled = if mean {
                    let count: usize = axes.iter().map(|&i| target[i]).product();
                    self.scale(g, 1.0 / count as f64)
                } else {
                    g
                };
                vec![(a, self.expand(scaled, &target))]
            }
            Op::Expand { a } => {
                let in_shape = self.value(a).shape().to_vec();
                let out_shape = self.value(out).shape().to_vec();
                let axes: Vec<usize> = in_shape
                    .iter()
                    .zip(&out_shape)
                    .enumerate()
                    .filter(|(_, (&s, &t))| s == 1 && t > 1)
                    .map(|(i, _)| i)
                    .collect();
                let ga = self.reduce_keep(g, &axes, false).expect("expand vjp");
                vec![(a, ga)]
            }
            Op::Reshape { a } => {
                let shape = self.value(a).shape().to_vec();
                vec![(a, self.reshape(g, &shape).expect("reshape vjp"))]
            }
            Op::MatMul { a, b, ta, tb } => {
                let ga = if !ta {
                    self.matmul(g, b, false, !tb).expect("matmul vjp")
                } else {
                    self.matmul(b, g, tb, true).expect("matmul vjp")
                };
                let gb = if !tb {
                    self.matmul(a, g, !ta, false).expect("matmul vjp")
                } else {
                    self.matmul(g, a, true, ta).expect("matmul vjp")
                };
                vec![(a, ga), (b, gb)]
            }
            Op::ConvFwd { x, w, scale } => {
                let k = self.value(w).shape()[2];
                let gx = self.conv3d_dx_op(g, w, scale);
                let gw = self.conv3d_dw_op(x, g, k, scale);
                vec![(x, gx), (w, gw)]
            }
            Op::ConvDx { gy, w, scale } => {
                let k = self.value(w).shape()[2];
                let g_gy = self.conv3d_raw(g, w, scale).expect("conv_dx vjp");
                let g_w = self.conv3d_dw_op(g, gy, k, scale);
                vec![(gy, g_gy), (w, g_w)]
            }
            Op::ConvDw { x, gy, scale } => {
                let g_x = self.conv3d_dx_op(gy, g, scale);
                let g_gy = self.conv3d_raw(x, g, scale).expect("conv_dw vjp");
                vec![(x, g_x), (gy, g_gy)]
            }
            Op::AddBiasC { x, b } => {
                let gb = self
                    .reduce(g, &[0, 2, 3, 4], false)
                    .expect("add_bias_c vjp");
                vec![(x, g), (b, gb)]
            }
            Op::Up2(a) => {
                let d = self.downsample2x(g).expect("up2 vjp");
                vec![(a, self.scale(d, 8.0))]
            }
            Op::Down2(a) => {
                let u = self.upsample2x(g);
                vec![(a, self.scale(u, 0.125))]
            }
            Op::ConcatC(a, b) => {
                let ca = self.value(a).shape()[1];
                let cb = self.value(b).shape()[1];
                let ga = self.slice_c(g, 0, ca);
                let gb = self.slice_c(g, ca, ca + cb);
                vec![(a, ga), (b, gb)]
            }
            Op::SliceC { a, from, to } => {
                let c = self.value(a).shape()[1];
                vec![(a, self.pad_c(g, from, c - to))]
            }
            Op::PadC { a, before } => {
                let c = self.value(a).shape()[1];
                vec![(a, self.slice_c(g, before, before + c))]
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(shape: &[usize], data: Vec<f32>) -> Tensor {
        Tensor::from_vec(shape, data).unwrap()
    }

    #[test]
    fn add_and_scale_values() {
        let mut tape: Tape = Tape::new();
        let a = tape.leaf(t(&[2], vec![1.0, 2.0]));
        let b = tape.leaf(t(&[2], vec![3.0, 4.0]));
        let y = tape.add(a, b).unwrap();
        assert_eq!(tape.value(y).data(), &[4.0, 6.0]);
        let z = tape.scale(a, 0.0);
        assert_eq!(tape.value(z).data(), &[0.0, 0.0]);
    }

    #[test]
    fn add_rejects_shape_mismatch() {
        let mut tape: Tape = Tape::new();
        let a = tape.leaf(t(&[2], vec![1.0, 2.0]));
        let b = tape.leaf(t(&[3], vec![1.0, 2.0, 3.0]));
        let err = tape.add(a, b).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("[2]") && msg.contains("[3]"), "{msg}");
    }

    #[test]
    fn mean_square_gradient() {
        // loss = mean(x^2), x=[1,2,3] -> grad = [2/3, 4/3, 2]
        let mut tape: Tape = Tape::new();
        let x = tape.leaf(t(&[3], vec![1.0, 2.0, 3.0]).with_grad());
        let sq = tape.mul(x, x).unwrap();
        let loss = tape.mean_all(sq);
        let map = tape.backward(loss).unwrap();
        let g = tape.grad_tensor(&map, x);
        let expect = [2.0 / 3.0, 4.0 / 3.0, 2.0];
        for (a, b) in g.data().iter().zip(expect) {
            assert!((a - b).abs() < 1e-6);
        }
    }

    #[test]
    fn fanout_accumulates() {
        let mut tape: Tape = Tape::new();
        let x = tape.leaf(t(&[1], vec![3.0]).with_grad());
        let y = tape.add(x, x).unwrap();
        let map = tape.backward(y).unwrap();
        assert_eq!(tape.grad_tensor(&map, x).data(), &[2.0]);
    }

    #[test]
    fn backward_rejects_non_scalar() {
        let mut tape: Tape = Tape::new();
        let x = tape.leaf(t(&[2], vec![1.0, 2.0]).with_grad());
        assert!(tape.backward(x).is_err());
    }

    #[test]
    fn detached_graph_gives_zero_grad() {
        let mut tape: Tape = Tape::new();
        let x = tape.leaf(t(&[2], vec![1.0, 2.0]).with_grad());
        let y = tape.leaf(t(&[1], vec![5.0]).with_grad());
        let loss = tape.mean_all(y);
        let map = tape.backward(loss).unwrap();
        assert_eq!(tape.grad_tensor(&map, x).data(), &[0.0, 0.0]);
    }

    #[test]
    fn backward_is_deterministic() {
        let run = || {
            let mut tape: Tape = Tape::new();
            let x = tape.leaf(t(&[4], vec![0.3, -0.7, 1.1, 2.5]).with_grad());
            let a = tape.mul(x, x).unwrap();
            let b = tape.add(a, x).unwrap();
            let c = tape.leaky_relu(b, 0.2);
            let loss = tape.mean_all(c);
            let map = tape.backward(loss).unwrap();
            tape.grad_tensor(&map, x).data().to_vec()
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn mean_grad_is_uniform() {
        let mut tape: Tape = Tape::new();
        let x = tape.leaf(t(&[4], vec![2.0, 4.0, 6.0, 8.0]).with_grad());
        let m = tape.mean_all(x);
        assert_eq!(tape.value(m).data(), &[5.0]);
        let map = tape.backward(m).unwrap();
        assert_eq!(tape.grad_tensor(&map, x).data(), &[0.25; 4]);
    }

    #[test]
    fn sum_all_of_ones_cube() {
        let mut tape: Tape = Tape::new();
        let x = tape.leaf(Tensor::full(&[4, 4, 4], 1.0f32));
        let s = tape.sum_all(x);
        assert_eq!(tape.value(s).data(), &[64.0]);
    }

    #[test]
    fn reduce_zero_extent_axis_errors() {
        let mut tape: Tape = Tape::new();
        let x = tape.leaf(Tensor::zeros(&[2, 0]));
        assert!(tape.reduce(x, &[1], true).is_err());
    }

    #[test]
    fn double_backward_of_square() {
        // y = mean(x^2); g = dy/dx = 2x/n; h = d(sum g^2)/dx = 8x/n^2
        let mut tape: Tape = Tape::new();
        let x = tape.leaf(t(&[2], vec![1.0, 3.0]).with_grad());
        let sq = tape.mul(x, x).unwrap();
        let y = tape.mean_all(sq);
        let map = tape.backward(y).unwrap();
        let g = map.grad_var(x).unwrap();
        let g2 = tape.mul(g, g).unwrap();
        let s = tape.sum_all(g2);
        let map2 = tape.backward(s).unwrap();
        let h = tape.grad_tensor(&map2, x);
        let expect = [8.0 * 1.0 / 4.0, 8.0 * 3.0 / 4.0];
        for (a, b) in h.data().iter().zip(expect) {
            assert!((a - b).abs() < 1e-5, "{a} vs {b}");
        }
    }
}
