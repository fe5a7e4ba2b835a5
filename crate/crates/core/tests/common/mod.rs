#![allow(dead_code)]

use codec_lens::nn::ConvParams;
use codec_lens::Tensor3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_tensor(rng: &mut ChaCha8Rng, c: usize, h: usize, w: usize, scale: f64) -> Tensor3 {
    Tensor3::from_fn(c, h, w, |_, _, _| rng.random_range(-scale..scale))
}

pub fn data_path(name: &str) -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/data")
        .join(name)
}

/// Random convolution parameters whose kernel fits an `h × w` input.
pub fn random_params(rng: &mut ChaCha8Rng, transposed: bool) -> ConvParams {
    let in_channels = rng.random_range(1..4);
    let out_channels = rng.random_range(1..4);
    let kernel = (rng.random_range(1..6), rng.random_range(1..6));
    let stride = rng.random_range(1..4);
    let padding = rng.random_range(0..kernel.0.min(kernel.1));
    let output_padding = if transposed { rng.random_range(0..stride) } else { 0 };
    let n = in_channels * out_channels * kernel.0 * kernel.1;
    let weight = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    let bias = rng
        .random_bool(0.5)
        .then(|| (0..out_channels).map(|_| rng.random_range(-1.0..1.0)).collect());
    ConvParams {
        in_channels,
        out_channels,
        kernel,
        stride,
        padding,
        output_padding,
        weight,
        bias,
    }
}

/// Transposed-convolution parameters and an input whose output size is positive.
pub fn valid_tconv_case(rng: &mut ChaCha8Rng) -> (ConvParams, Tensor3) {
    loop {
        let p = random_params(rng, true);
        let (h, w) = (rng.random_range(1..7), rng.random_range(1..7));
        let size = |n: usize, k: usize| ((n - 1) * p.stride + k + p.output_padding) as i64 - 2 * p.padding as i64;
        if size(h, p.kernel.0) > 0 && size(w, p.kernel.1) > 0 {
            let x = random_tensor(rng, p.in_channels, h, w, 1.0);
            return (p, x);
        }
    }
}

/// Cross-correlation written as the textbook six nested loops.
pub fn naive_conv2d(x: &Tensor3, p: &ConvParams) -> Tensor3 {
    let (kh, kw) = p.kernel;
    let (h, w) = (x.height() as i64, x.width() as i64);
    let oh = (x.height() + 2 * p.padding - kh) / p.stride + 1;
    let ow = (x.width() + 2 * p.padding - kw) / p.stride + 1;
    let mut out = vec![0.0; p.out_channels * oh * ow];
    for o in 0..p.out_channels {
        for y in 0..oh {
            for xx in 0..ow {
                let mut acc = p.bias.as_ref().map_or(0.0, |b| b[o]);
                for i in 0..p.in_channels {
                    for ky in 0..kh {
                        for kx in 0..kw {
                            let iy = (y * p.stride + ky) as i64 - p.padding as i64;
                            let ix = (xx * p.stride + kx) as i64 - p.padding as i64;
                            if iy < 0 || ix < 0 || iy >= h || ix >= w {
                                continue;
                            }
                            let wgt = p.weight[((o * p.in_channels + i) * kh + ky) * kw + kx];
                            acc += wgt * x.get(i, iy as usize, ix as usize);
                        }
                    }
                }
                out[(o * oh + y) * ow + xx] = acc;
            }
        }
    }
    Tensor3::new(p.out_channels, oh, ow, out).unwrap()
}

/// Transposed convolution as a scatter of every input sample.
pub fn naive_tconv2d(x: &Tensor3, p: &ConvParams) -> Tensor3 {
    let (kh, kw) = p.kernel;
    let oh = (x.height() - 1) * p.stride + kh + p.output_padding - 2 * p.padding;
    let ow = (x.width() - 1) * p.stride + kw + p.output_padding - 2 * p.padding;
    let mut out = vec![0.0; p.out_channels * oh * ow];
    for o in 0..p.out_channels {
        let b = p.bias.as_ref().map_or(0.0, |b| b[o]);
        out[o * oh * ow..(o + 1) * oh * ow].fill(b);
    }
    for i in 0..p.in_channels {
        for iy in 0..x.height() {
            for ix in 0..x.width() {
                for o in 0..p.out_channels {
                    for ky in 0..kh {
                        for kx in 0..kw {
                            let y = (iy * p.stride + ky) as i64 - p.padding as i64;
                            let xx = (ix * p.stride + kx) as i64 - p.padding as i64;
                            if y < 0 || xx < 0 || y >= oh as i64 || xx >= ow as i64 {
                                continue;
                            }
                            let wgt = p.weight[((i * p.out_channels + o) * kh + ky) * kw + kx];
                            out[(o * oh + y as usize) * ow + xx as usize] += wgt * x.get(i, iy, ix);
                        }
                    }
                }
            }
        }
    }
    Tensor3::new(p.out_channels, oh, ow, out).unwrap()
}
