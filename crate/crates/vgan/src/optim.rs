//! Adam optimizer over named parameter collections.

use indexmap::IndexMap;

use crate::error::{Result, VganError};
use crate::nets::NetworkWeights;
use crate::tensor::Tensor;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AdamConfig {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        // beta1 = 0 keeps no momentum, the convention this GAN family trains with
        AdamConfig {
            beta1: 0.0,
            beta2: 0.99,
            eps: 1e-8,
        }
    }
}

/// First/second moment buffers plus the shared step count.
#[derive(Clone, Debug, PartialEq)]
pub struct OptimizerState {
    pub cfg: AdamConfig,
    pub t: u64,
    moments: IndexMap<String, (Tensor<f32>, Tensor<f32>)>,
}

impl OptimizerState {
    pub fn new(weights: &NetworkWeights, cfg: AdamConfig) -> Self {
        let moments = weights
            .iter()
            .map(|(name, t)| {
                (
                    name.clone(),
                    (Tensor::zeros(t.shape()), Tensor::zeros(t.shape())),
                )
            })
            .collect();
        OptimizerState {
            cfg,
            t: 0,
            moments,
        }
    }

    pub fn moments(&self) -> impl Iterator<Item = (&String, &(Tensor<f32>, Tensor<f32>))> {
        self.moments.iter()
    }

    pub fn moments_mut(
        &mut self,
    ) -> impl Iterator<Item = (&String, &mut (Tensor<f32>, Tensor<f32>))> {
        self.moments.iter_mut()
    }

    pub fn set_moments(&mut self, name: &str, m: Tensor<f32>, v: Tensor<f32>) -> Result<()> {
        match self.moments.get_mut(name) {
            Some(slot) => {
                *slot = (m, v);
                Ok(())
            }
            None => Err(VganError::Checkpoint(format!(
                "optimizer state has no parameter {name}"
            ))),
        }
    }

    /// One bias-corrected Adam step over every parameter that has a gradient.
    /// Parameters without an entry in `grads` are left untouched (their
    /// moments do not decay either; they were not part of this loss).
    pub fn step(
        &mut self,
        weights: &mut NetworkWeights,
        grads: &IndexMap<String, Tensor<f32>>,
        lr: f64,
    ) -> Result<()> {
        if lr <= 0.0 {
            return Err(VganError::InvalidArgument(format!(
                "learning rate must be positive, got {lr}"
            )));
        }
        self.t += 1;
        let AdamConfig { beta1, beta2, eps } = self.cfg;
        let bc1 = 1.0 - beta1.powi(self.t as i32);
        let bc2 = 1.0 - beta2.powi(self.t as i32);
        for (name, grad) in grads {
            let param = weights.get_mut(name).ok_or_else(|| {
                VganError::InvalidArgument(format!("gradient for unknown parameter {name}"))
            })?;
            if grad.shape() != param.shape() {
                return Err(VganError::ShapeMismatch {
                    left: grad.shape().to_vec(),
                    right: param.shape().to_vec(),
                    ctx: "adam_step",
                });
            }
            let (m, v) = self.moments.get_mut(name).expect("moment buffers");
            let pd = param.data_mut();
            let md = m.data_mut();
            let vd = v.data_mut();
            for i in 0..pd.len() {
                let g = grad.data()[i] as f64;
                let mi = beta1 * md[i] as f64 + (1.0 - beta1) * g;
                let vi = beta2 * vd[i] as f64 + (1.0 - beta2) * g * g;
                md[i] = mi as f32;
                vd[i] = vi as f32;
                let m_hat = mi / bc1;
                let v_hat = vi / bc2;
                pd[i] = (pd[i] as f64 - lr * m_hat / (v_hat.sqrt() + eps)) as f32;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::adam_scalar_step;

    fn single_param(w0: f32) -> (NetworkWeights, OptimizerState) {
        let mut w = NetworkWeights::new();
        w.insert("p", Tensor::from_vec(&[1], vec![w0]).unwrap());
        let opt = OptimizerState::new(&w, AdamConfig::default());
        (w, opt)
    }

    #[test]
    fn first_step_matches_closed_form() {
        let (mut w, mut opt) = single_param(0.0);
        let mut grads = IndexMap::new();
        grads.insert("p".to_string(), Tensor::from_vec(&[1], vec![1.0]).unwrap());
        opt.step(&mut w, &grads, 0.01).unwrap();
        assert!((w.get("p").unwrap().data()[0] + 0.01).abs() < 1e-7);
    }

    #[test]
    fn three_steps_match_scalar_oracle() {
        let (mut w, mut opt) = single_param(0.5);
        let cfg = opt.cfg;
        let gs = [0.3f64, -0.8, 0.1];
        let (mut ow, mut om, mut ov) = (0.5f64, 0.0, 0.0);
        for (t, &g) in gs.iter().enumerate() {
            let mut grads = IndexMap::new();
            grads.insert(
                "p".to_string(),
                Tensor::from_vec(&[1], vec![g as f32]).unwrap(),
            );
            opt.step(&mut w, &grads, 0.002).unwrap();
            let (nw, nm, nv) = adam_scalar_step(
                ow,
                g,
                om,
                ov,
                (t + 1) as u64,
                0.002,
                cfg.beta1,
                cfg.beta2,
                cfg.eps,
            );
            ow = nw;
            om = nm;
            ov = nv;
            assert!(
                (w.get("p").unwrap().data()[0] as f64 - ow).abs() < 1e-7,
                "step {t}"
            );
        }
    }

    #[test]
    fn zero_grad_leaves_params_and_decays_moments() {
        let (mut w, mut opt) = single_param(1.0);
        let mut grads = IndexMap::new();
        grads.insert("p".to_string(), Tensor::from_vec(&[1], vec![2.0]).unwrap());
        opt.step(&mut w, &grads, 0.01).unwrap();
        let v_before = opt.moments.get("p").unwrap().1.data()[0];
        let w_before = w.get("p").unwrap().data()[0];
        grads.insert("p".to_string(), Tensor::from_vec(&[1], vec![0.0]).unwrap());
        opt.step(&mut w, &grads, 0.01).unwrap();
        let v_after = opt.moments.get("p").unwrap().1.data()[0];
        // zero gradient: parameter unchanged, second moment decayed by beta2
        assert_eq!(w.get("p").unwrap().data()[0], w_before);
        assert!((v_after - 0.99 * v_before).abs() < 1e-9);
    }

    #[test]
    fn rejects_nonpositive_lr() {
        let (mut w, mut opt) = single_param(0.0);
        let grads = IndexMap::new();
        assert!(opt.step(&mut w, &grads, 0.0).is_err());
    }

    #[test]
    fn two_runs_bit_identical() {
        let run = || {
            let (mut w, mut opt) = single_param(0.25);
            for g in [0.5f32, -0.25, 0.75] {
                let mut grads = IndexMap::new();
                grads.insert("p".to_string(), Tensor::from_vec(&[1], vec![g]).unwrap());
                opt.step(&mut w, &grads, 0.003).unwrap();
            }
            (w.get("p").unwrap().data().to_vec(), opt.t)
        };
        assert_eq!(run(), run());
    }
}
