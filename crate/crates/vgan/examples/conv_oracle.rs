//! Compare the optimized 3D convolution against a naive seven-loop oracle
//! over randomized shapes, and against it again through the autodiff tape.
//!
//! ```bash
//! cargo run --release -p vgan --example conv_oracle
//! ```

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use vgan::selftest::conv_oracle_suite;
use vgan::tensor::Tensor;
use vgan::Tape;

fn main() -> vgan::Result<()> {
    let max_err = conv_oracle_suite(50);
    println!("forward kernel vs naive oracle: max rel err {max_err:.3e} over 50 cases");

    // one worked example through the tape, gradients included
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let x = Tensor::from_vec(
        &[1, 2, 4, 4, 4],
        (0..128).map(|_| rng.gen_range(-1.0f32..1.0)).collect(),
    )?;
    let w = Tensor::from_vec(
        &[3, 2, 3, 3, 3],
        (0..162).map(|_| rng.gen_range(-1.0f32..1.0)).collect(),
    )?;
    let mut tape: Tape<f32> = Tape::new();
    let xv = tape.leaf(x.with_grad());
    let wv = tape.leaf(w.with_grad());
    let y = tape.conv3d_raw(xv, wv, 1.0)?;
    println!("conv [1,2,4,4,4] * [3,2,3,3,3] -> {:?}", tape.value(y).shape());
    let loss = tape.mean_all(y);
    let grads = tape.backward(loss)?;
    println!(
        "input grad shape {:?}, weight grad shape {:?}",
        tape.grad_tensor(&grads, xv).shape(),
        tape.grad_tensor(&grads, wv).shape()
    );
    Ok(())
}
