//! Small seeded random-weight networks for tests and the self-test.
//!
//! Weights are drawn as f32 so a LICW round trip is exact.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::layer::{ConvParams, GdnParams, LayerSpec};
use super::net::{AnalysisNet, SynthesisNet};
use crate::error::Result;

pub const TOY_LATENT_CHANNELS: usize = 8;
pub const TOY_FACTOR: usize = 4;

struct Draw(ChaCha8Rng);

impl Draw {
    fn normal(&mut self, n: usize, std: f64) -> Vec<f64> {
        let dist = Normal::new(0.0, std).expect("valid std");
        (0..n).map(|_| f64::from(dist.sample(&mut self.0) as f32)).collect()
    }

    fn uniform(&mut self, n: usize, lo: f64, hi: f64) -> Vec<f64> {
        (0..n).map(|_| f64::from(self.0.random_range(lo..hi) as f32)).collect()
    }

    fn conv(&mut self, cin: usize, cout: usize, k: usize, stride: usize, bias: bool, transposed: bool) -> ConvParams {
        let fan_in = (cin * k * k) as f64;
        ConvParams {
            in_channels: cin,
            out_channels: cout,
            kernel: (k, k),
            stride,
            padding: k / 2,
            output_padding: if transposed { stride - 1 } else { 0 },
            weight: self.normal(cin * cout * k * k, 1.0 / fan_in.sqrt()),
            bias: bias.then(|| self.uniform(cout, -0.1, 0.1)),
        }
    }

    fn gdn(&mut self, c: usize) -> Result<GdnParams> {
        let beta = self.uniform(c, 0.5, 1.5);
        let gamma = self.uniform(c * c, 0.0, 0.2);
        GdnParams::new(beta, gamma)
    }
}

/// `tconv(8→8, 5×5, /2) → IGDN → tconv(8→out, 5×5, /2)`, upsampling by 4.
pub fn toy_synthesis(seed: u64, out_channels: usize) -> Result<SynthesisNet> {
    let mut d = Draw(ChaCha8Rng::seed_from_u64(seed));
    let c = TOY_LATENT_CHANNELS;
    SynthesisNet::new(vec![
        LayerSpec::tconv(d.conv(c, c, 5, 2, true, true))?,
        LayerSpec::igdn(d.gdn(c)?)?,
        LayerSpec::tconv(d.conv(c, out_channels, 5, 2, true, true))?,
    ])
}

/// `conv(in→8, 5×5, /2) → GDN → conv(8→8, 5×5, /2)`, downsampling by 4.
pub fn toy_analysis(seed: u64, in_channels: usize) -> Result<AnalysisNet> {
    let mut d = Draw(ChaCha8Rng::seed_from_u64(seed));
    let c = TOY_LATENT_CHANNELS;
    AnalysisNet::new(vec![
        LayerSpec::conv(d.conv(in_channels, c, 5, 2, true, false))?,
        LayerSpec::gdn(d.gdn(c)?)?,
        LayerSpec::conv(d.conv(c, c, 5, 2, true, false))?,
    ])
}

/// Zero-bias stack of transposed convolutions with stride 2 each, giving
/// a purely linear decoder with upsampling `2^depth`.
pub fn linear_tconv_stack(
    seed: u64,
    latent_channels: usize,
    out_channels: usize,
    depth: usize,
) -> Result<SynthesisNet> {
    let mut d = Draw(ChaCha8Rng::seed_from_u64(seed));
    let mut layers = Vec::with_capacity(depth);
    for i in 0..depth {
        let cin = if i == 0 {
            latent_channels
        } else {
            latent_channels.max(4)
        };
        let cout = if i + 1 == depth {
            out_channels
        } else {
            latent_channels.max(4)
        };
        layers.push(LayerSpec::tconv(d.conv(cin, cout, 5, 2, false, true))?);
    }
    SynthesisNet::new(layers)
}
