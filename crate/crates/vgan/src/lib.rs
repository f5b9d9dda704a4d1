//! Volumetric progressive-growing GAN engine.
//!
//! Everything needed to synthesize MR-like brain volumes on a desk machine:
//! a reverse-mode tape over dense f32 tensors, 3D conv layers, progressive
//! generator/discriminator pairs, a WGAN-GP trainer with checkpointing,
//! NIfTI-1 volume I/O with preprocessing, and rotation augmentation.

pub mod augment;
pub mod checkpoint;
pub mod cli;
pub mod config;
pub mod error;
pub mod gradcheck;
pub mod kernels;
pub mod layers;
pub mod nets;
pub mod optim;
pub mod oracle;
pub mod schedule;
pub mod selftest;
pub mod synth;
pub mod tape;
pub mod tensor;
pub mod trainer;
pub mod volio;

pub use error::{Result, VganError};
pub use tape::{Tape, Var};
pub use tensor::Tensor;
