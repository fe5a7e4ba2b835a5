use serde::{Deserialize, Serialize};

use super::layer::{ConvParams, LayerSpec};
use crate::error::{Error, Result};
use crate::tensor::Tensor3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NetKind {
    Analysis,
    Synthesis,
}

/// An ordered stack of layers whose channel counts have been checked.
#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    kind: NetKind,
    layers: Vec<LayerSpec>,
    /// Total resampling factor: upsampling for synthesis, downsampling for
    /// analysis.
    factor: usize,
}

impl Network {
    pub fn new(kind: NetKind, layers: Vec<LayerSpec>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::ShapeInconsistency("network has no layers".into()));
        }
        let mut factor = 1usize;
        let mut channels = layers[0].in_channels();
        for (idx, layer) in layers.iter().enumerate() {
            layer.validate()?;
            if layer.in_channels() != channels {
                return Err(Error::ShapeInconsistency(format!(
                    "layer {idx} ({:?}) expects {} channels but receives {channels}",
                    layer.kind(),
                    layer.in_channels()
                )));
            }
            channels = layer.out_channels();
            match (kind, layer) {
                (NetKind::Synthesis, LayerSpec::Tconv(p)) | (NetKind::Analysis, LayerSpec::Conv(p)) => {
                    factor *= p.stride;
                }
                (NetKind::Synthesis, LayerSpec::Conv(p)) if p.stride != 1 => {
                    return Err(Error::ShapeInconsistency(format!(
                        "synthesis layer {idx} downsamples (stride {})",
                        p.stride
                    )));
                }
                (NetKind::Analysis, LayerSpec::Tconv(_)) => {
                    return Err(Error::ShapeInconsistency(format!(
                        "analysis layer {idx} is a transposed convolution"
                    )));
                }
                _ => {}
            }
        }
        Ok(Network { kind, layers, factor })
    }

    pub fn kind(&self) -> NetKind {
        self.kind
    }

    pub fn layers(&self) -> &[LayerSpec] {
        &self.layers
    }

    pub fn in_channels(&self) -> usize {
        self.layers[0].in_channels()
    }

    pub fn out_channels(&self) -> usize {
        self.layers[self.layers.len() - 1].out_channels()
    }

    pub fn factor(&self) -> usize {
        self.factor
    }

    pub fn run(&self, input: &Tensor3) -> Result<Tensor3> {
        let mut x = self.layers[0].apply(input)?;
        for layer in &self.layers[1..] {
            x = layer.apply(&x)?;
        }
        Ok(x)
    }

    /// Copy with every nonlinearity removed and every bias zeroed, leaving a
    /// purely linear map.
    pub fn linearized(&self) -> Network {
        let layers = self
            .layers
            .iter()
            .filter(|l| l.is_linear())
            .map(|l| match l {
                LayerSpec::Conv(p) => LayerSpec::Conv(without_bias(p)),
                LayerSpec::Tconv(p) => LayerSpec::Tconv(without_bias(p)),
                _ => unreachable!(),
            })
            .collect();
        Network {
            kind: self.kind,
            layers,
            factor: self.factor,
        }
    }
}

fn without_bias(p: &ConvParams) -> ConvParams {
    ConvParams {
        bias: None,
        ..p.clone()
    }
}

/// Decoder `g_s`: latent `C × h × w` to image `{1,3} × hs × ws`.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthesisNet(Network);

impl SynthesisNet {
    pub fn new(layers: Vec<LayerSpec>) -> Result<Self> {
        SynthesisNet::from_network(Network::new(NetKind::Synthesis, layers)?)
    }

    pub fn from_network(net: Network) -> Result<Self> {
        if net.kind() != NetKind::Synthesis {
            return Err(Error::ShapeInconsistency("expected a synthesis network".into()));
        }
        if !matches!(net.out_channels(), 1 | 3) {
            return Err(Error::ShapeInconsistency(format!(
                "synthesis output must have 1 or 3 channels, not {}",
                net.out_channels()
            )));
        }
        Ok(SynthesisNet(net))
    }

    pub fn network(&self) -> &Network {
        &self.0
    }

    pub fn latent_channels(&self) -> usize {
        self.0.in_channels()
    }

    pub fn output_channels(&self) -> usize {
        self.0.out_channels()
    }

    pub fn upsampling(&self) -> usize {
        self.0.factor()
    }

    pub fn run(&self, z: &Tensor3) -> Result<Tensor3> {
        self.0.run(z)
    }

    pub fn linearized(&self) -> SynthesisNet {
        SynthesisNet(self.0.linearized())
    }
}

/// Encoder `g_a`: image to latent.
#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisNet(Network);

impl AnalysisNet {
    pub fn new(layers: Vec<LayerSpec>) -> Result<Self> {
        AnalysisNet::from_network(Network::new(NetKind::Analysis, layers)?)
    }

    pub fn from_network(net: Network) -> Result<Self> {
        if net.kind() != NetKind::Analysis {
            return Err(Error::ShapeInconsistency("expected an analysis network".into()));
        }
        Ok(AnalysisNet(net))
    }

    pub fn network(&self) -> &Network {
        &self.0
    }

    pub fn input_channels(&self) -> usize {
        self.0.in_channels()
    }

    pub fn latent_channels(&self) -> usize {
        self.0.out_channels()
    }

    pub fn downsampling(&self) -> usize {
        self.0.factor()
    }

    pub fn run(&self, x: &Tensor3) -> Result<Tensor3> {
        self.0.run(x)
    }
}

/// `x̂ = g_s(z)`. Output is not clamped.
pub fn run_synthesis(net: &SynthesisNet, z: &Tensor3) -> Result<Tensor3> {
    net.run(z)
}

/// `z = g_a(x)`.
pub fn run_analysis(net: &AnalysisNet, x: &Tensor3) -> Result<Tensor3> {
    net.run(x)
}

/// Elementwise round-half-to-even.
pub fn quantize(z: &Tensor3) -> Tensor3 {
    z.map(f64::round_ties_even)
}
