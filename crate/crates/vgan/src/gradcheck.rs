//! Finite-difference gradient checking.
//!
//! Analytic gradients come from the f32 tape; the numeric side replays the
//! same forward computation on an f64 tape so the central-difference
//! reference stays stable at small steps.

use crate::error::{Result, VganError};
use crate::tape::{Tape, Var};
use crate::tensor::{Scalar, Tensor};

/// A scalar-valued differentiable function expressible at any precision.
pub trait TapeFn {
    fn apply<E: Scalar>(&self, tape: &mut Tape<E>, x: Var) -> Result<Var>;
}

/// Max relative error between tape gradients and central finite differences:
/// max over elements of |analytic - numeric| / max(|analytic|, |numeric|, 1e-8).
pub fn grad_check<F: TapeFn>(f: &F, input: &Tensor<f32>, step: f64) -> Result<f64> {
    if step <= 0.0 {
        return Err(VganError::InvalidArgument(format!(
            "grad_check step must be positive, got {step}"
        )));
    }
    let mut tape: Tape<f32> = Tape::new();
    let x = tape.leaf(input.clone().with_grad());
    let y = f.apply(&mut tape, x)?;
    if tape.value(y).numel() != 1 {
        return Err(VganError::InvalidArgument(format!(
            "grad_check needs a scalar-valued function, got output shape {:?}",
            tape.value(y).shape()
        )));
    }
    let map = tape.backward(y)?;
    let analytic = tape.grad_tensor(&map, x).cast::<f64>();
    if !analytic.all_finite() {
        return Err(VganError::NonFinite("analytic gradient".into()));
    }

    let eval = |data: Tensor<f64>| -> Result<f64> {
        let mut t: Tape<f64> = Tape::new();
        let xv = t.leaf(data);
        let yv = f.apply(&mut t, xv)?;
        let v = t.value(yv).data()[0];
        if !v.is_finite() {
            return Err(VganError::NonFinite("forward value in grad_check".into()));
        }
        Ok(v)
    };

    let x64 = input.cast::<f64>();
    let mut max_err = 0.0f64;
    for i in 0..x64.numel() {
        let a = analytic.data()[i];
        let probe = |h: f64| -> Result<f64> {
            let mut plus = x64.clone();
            plus.data_mut()[i] += h;
            let mut minus = x64.clone();
            minus.data_mut()[i] -= h;
            let numeric = (eval(plus)? - eval(minus)?) / (2.0 * h);
            Ok((a - numeric).abs() / a.abs().max(numeric.abs()).max(1e-8))
        };
        let mut err = probe(step)?;
        // A central difference straddling a piecewise-linear kink reports a
        // blended slope; shrinking the step below the distance to the kink
        // removes the artifact, while a real gradient bug survives.
        let mut h = step;
        while err > 1e-5 && h > step * 1e-3 {
            h /= 10.0;
            err = err.min(probe(h)?);
        }
        if err > max_err {
            max_err = err;
        }
    }
    Ok(max_err)
}
