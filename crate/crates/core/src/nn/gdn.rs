//! Generalized divisive normalization and its inverse.
//!
//!   gdn:  y_i = x_i / sqrt(beta_i + sum_j gamma_ij * x_j^2)
//!   igdn: y_i = x_i * sqrt(beta_i + sum_j gamma_ij * x_j^2)
//!
//! Applied independently at each pixel across channels.

use super::layer::GdnParams;
use crate::error::{Error, Result};
use crate::tensor::Tensor3;

pub fn gdn(input: &Tensor3, p: &GdnParams) -> Result<Tensor3> {
    normalize(input, p, |x, norm| x / norm.sqrt())
}

pub fn igdn(input: &Tensor3, p: &GdnParams) -> Result<Tensor3> {
    normalize(input, p, |x, norm| x * norm.sqrt())
}

fn normalize(input: &Tensor3, p: &GdnParams, f: impl Fn(f64, f64) -> f64) -> Result<Tensor3> {
    let c = p.channels;
    if input.channels() != c {
        return Err(Error::invalid(format!(
            "gdn expects {c} channels, got {}",
            input.channels()
        )));
    }
    let plane = input.height() * input.width();
    let src = input.data();
    let mut out = input.zeros_like();
    let dst = out.data_mut();
    let mut squares = vec![0.0; c];
    for px in 0..plane {
        for (j, sq) in squares.iter_mut().enumerate() {
            let v = src[j * plane + px];
            *sq = v * v;
        }
        for i in 0..c {
            let gamma_row = &p.gamma[i * c..(i + 1) * c];
            let norm = p.beta[i] + gamma_row.iter().zip(&squares).map(|(g, s)| g * s).sum::<f64>();
            if norm <= 0.0 || !norm.is_finite() {
                return Err(Error::Degenerate(format!("gdn normaliser {norm} at channel {i}")));
            }
            dst[i * plane + px] = f(src[i * plane + px], norm);
        }
    }
    Ok(out)
}
