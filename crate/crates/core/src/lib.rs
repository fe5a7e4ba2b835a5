//! Tools for inspecting transform image coders through their decoder's
//! impulse responses.
//!
//! A decoder (a convolutional synthesis network or a classical orthonormal
//! block transform) is probed with single-channel impulses to obtain its
//! basis images, latents are split spatially or by channel and decoded
//! term by term to measure how well the decoder superimposes, and the
//! resulting bases are scored against DCT, Walsh-Hadamard, Haar and KLT
//! references.

mod error;

pub mod analysis;
pub mod entropy;
pub mod linear;
pub mod nn;
pub mod render;
pub mod tensor;

pub use error::{Error, Result};
pub use tensor::{mse, ImagePlane, Shape, Tensor3};
