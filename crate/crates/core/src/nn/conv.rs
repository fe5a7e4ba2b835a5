//! Direct convolution kernels.
//!
//! Both kernels accumulate each output element in the same fixed order
//! (bias, then input channel, kernel row, kernel column), so results do not
//! depend on how output channels are scheduled across threads.

use rayon::prelude::*;

use super::layer::ConvParams;
use crate::error::{Error, Result};
use crate::tensor::{Shape, Tensor3};

/// Cross-correlation (no kernel flip) with zero padding.
///
/// `H' = ⌊(H + 2p − kh) / stride⌋ + 1`, likewise for the width.
pub fn conv2d(input: &Tensor3, p: &ConvParams) -> Result<Tensor3> {
    check_input(input, p)?;
    let (kh, kw) = p.kernel;
    let (h, w) = (input.height(), input.width());
    if h + 2 * p.padding < kh || w + 2 * p.padding < kw {
        return Err(Error::invalid(format!(
            "kernel {kh}x{kw} larger than padded input {}x{}",
            h + 2 * p.padding,
            w + 2 * p.padding
        )));
    }
    let oh = (h + 2 * p.padding - kh) / p.stride + 1;
    let ow = (w + 2 * p.padding - kw) / p.stride + 1;
    let pad = p.padding as isize;
    let stride = p.stride as isize;
    let cin = p.in_channels;

    let planes: Vec<Vec<f64>> = (0..p.out_channels)
        .into_par_iter()
        .map(|o| {
            let b = p.bias.as_ref().map_or(0.0, |b| b[o]);
            let mut plane = vec![b; oh * ow];
            for i in 0..cin {
                let src = input.channel(i);
                for ky in 0..kh {
                    for kx in 0..kw {
                        let wv = p.weight[((o * cin + i) * kh + ky) * kw + kx];
                        for y in 0..oh {
                            let iy = y as isize * stride - pad + ky as isize;
                            if iy < 0 || iy >= h as isize {
                                continue;
                            }
                            let row = &src[iy as usize * w..(iy as usize + 1) * w];
                            let out_row = &mut plane[y * ow..(y + 1) * ow];
                            for (x, acc) in out_row.iter_mut().enumerate() {
                                let ix = x as isize * stride - pad + kx as isize;
                                if ix >= 0 && ix < w as isize {
                                    *acc += wv * row[ix as usize];
                                }
                            }
                        }
                    }
                }
            }
            plane
        })
        .collect();

    Ok(Tensor3::from_parts(Shape::new(p.out_channels, oh, ow), planes.concat()))
}

/// Transposed convolution: the adjoint of [`conv2d`] with the same
/// parameters, plus bias.
///
/// `H' = (H − 1)·stride − 2p + kh + output_padding`.
pub fn tconv2d(input: &Tensor3, p: &ConvParams) -> Result<Tensor3> {
    check_input(input, p)?;
    let (kh, kw) = p.kernel;
    let (h, w) = (input.height(), input.width());
    let oh = tconv_extent(h, p.stride, p.padding, kh, p.output_padding);
    let ow = tconv_extent(w, p.stride, p.padding, kw, p.output_padding);
    let (oh, ow) = match (oh, ow) {
        (Some(oh), Some(ow)) if oh > 0 && ow > 0 => (oh as usize, ow as usize),
        _ => {
            return Err(Error::invalid(format!(
                "transposed convolution of {h}x{w} input gives a non-positive output size"
            )))
        }
    };
    let pad = p.padding as isize;
    let stride = p.stride as isize;
    let cout = p.out_channels;

    let planes: Vec<Vec<f64>> = (0..cout)
        .into_par_iter()
        .map(|o| {
            let b = p.bias.as_ref().map_or(0.0, |b| b[o]);
            let mut plane = vec![b; oh * ow];
            for i in 0..p.in_channels {
                let src = input.channel(i);
                for ky in 0..kh {
                    for kx in 0..kw {
                        let wv = p.weight[((i * cout + o) * kh + ky) * kw + kx];
                        for m in 0..h {
                            let oy = m as isize * stride - pad + ky as isize;
                            if oy < 0 || oy >= oh as isize {
                                continue;
                            }
                            let out_row = oy as usize * ow;
                            for n in 0..w {
                                let v = src[m * w + n];
                                // Sparse latents (impulses, decomposition terms) are mostly zero.
                                if v == 0.0 {
                                    continue;
                                }
                                let ox = n as isize * stride - pad + kx as isize;
                                if ox >= 0 && ox < ow as isize {
                                    plane[out_row + ox as usize] += wv * v;
                                }
                            }
                        }
                    }
                }
            }
            plane
        })
        .collect();

    Ok(Tensor3::from_parts(Shape::new(cout, oh, ow), planes.concat()))
}

fn tconv_extent(n: usize, stride: usize, padding: usize, k: usize, output_padding: usize) -> Option<isize> {
    if n == 0 {
        return None;
    }
    Some((n as isize - 1) * stride as isize - 2 * padding as isize + k as isize + output_padding as isize)
}

fn check_input(input: &Tensor3, p: &ConvParams) -> Result<()> {
    if input.channels() != p.in_channels {
        return Err(Error::invalid(format!(
            "convolution expects {} input channels, got {}",
            p.in_channels,
            input.channels()
        )));
    }
    Ok(())
}
