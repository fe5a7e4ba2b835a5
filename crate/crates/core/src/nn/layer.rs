use serde::{Deserialize, Serialize};

use super::{conv, gdn};
use crate::error::{Error, Result};
use crate::tensor::Tensor3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LayerKind {
    Conv,
    Tconv,
    Gdn,
    Igdn,
    Relu,
    LeakyRelu,
}

/// Parameters shared by convolution and transposed convolution.
///
/// Weight layout is `[out, in, kh, kw]` for convolution and
/// `[in, out, kh, kw]` for transposed convolution.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvParams {
    pub in_channels: usize,
    pub out_channels: usize,
    pub kernel: (usize, usize),
    pub stride: usize,
    pub padding: usize,
    /// Extra rows/columns appended to a transposed convolution's output.
    pub output_padding: usize,
    pub weight: Vec<f64>,
    pub bias: Option<Vec<f64>>,
}

impl ConvParams {
    fn validate(&self, kind: LayerKind) -> Result<()> {
        let (kh, kw) = self.kernel;
        if self.in_channels == 0 || self.out_channels == 0 || kh == 0 || kw == 0 {
            return Err(Error::ShapeInconsistency(
                "convolution dimensions must be positive".into(),
            ));
        }
        if self.stride == 0 {
            return Err(Error::ShapeInconsistency("stride must be positive".into()));
        }
        if kind == LayerKind::Conv && self.output_padding != 0 {
            return Err(Error::ShapeInconsistency("output_padding only applies to tconv".into()));
        }
        if kind == LayerKind::Tconv && self.output_padding >= self.stride {
            return Err(Error::ShapeInconsistency(format!(
                "output_padding {} must be smaller than stride {}",
                self.output_padding, self.stride
            )));
        }
        let expected = self.in_channels * self.out_channels * kh * kw;
        if self.weight.len() != expected {
            return Err(Error::ShapeInconsistency(format!(
                "weight has {} values, shape {:?} needs {expected}",
                self.weight.len(),
                self.weight_shape(kind)
            )));
        }
        if let Some(b) = &self.bias {
            if b.len() != self.out_channels {
                return Err(Error::ShapeInconsistency(format!(
                    "bias has {} values for {} output channels",
                    b.len(),
                    self.out_channels
                )));
            }
        }
        check_finite(&self.weight, "weight")?;
        check_finite(self.bias.as_deref().unwrap_or(&[]), "bias")
    }

    pub fn weight_shape(&self, kind: LayerKind) -> [usize; 4] {
        let (kh, kw) = self.kernel;
        match kind {
            LayerKind::Tconv => [self.in_channels, self.out_channels, kh, kw],
            _ => [self.out_channels, self.in_channels, kh, kw],
        }
    }
}

/// GDN/IGDN parameters in their final (already reparameterised) form.
#[derive(Debug, Clone, PartialEq)]
pub struct GdnParams {
    pub channels: usize,
    /// Length `channels`, strictly positive.
    pub beta: Vec<f64>,
    /// Row-major `channels × channels`, non-negative.
    pub gamma: Vec<f64>,
}

impl GdnParams {
    pub fn new(beta: Vec<f64>, gamma: Vec<f64>) -> Result<Self> {
        let p = GdnParams {
            channels: beta.len(),
            beta,
            gamma,
        };
        p.validate()?;
        Ok(p)
    }

    fn validate(&self) -> Result<()> {
        let c = self.channels;
        if c == 0 || self.beta.len() != c {
            return Err(Error::ShapeInconsistency(
                "gdn beta must have one value per channel".into(),
            ));
        }
        if self.gamma.len() != c * c {
            return Err(Error::ShapeInconsistency(format!(
                "gdn gamma has {} values, expected {c}x{c}",
                self.gamma.len()
            )));
        }
        check_finite(&self.beta, "beta")?;
        check_finite(&self.gamma, "gamma")?;
        if self.beta.iter().any(|b| *b <= 0.0) {
            return Err(Error::invalid("gdn beta must be positive"));
        }
        if self.gamma.iter().any(|g| *g < 0.0) {
            return Err(Error::invalid("gdn gamma must be non-negative"));
        }
        Ok(())
    }
}

fn check_finite(values: &[f64], what: &'static str) -> Result<()> {
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite(what));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub enum LayerSpec {
    Conv(ConvParams),
    Tconv(ConvParams),
    Gdn(GdnParams),
    Igdn(GdnParams),
    Relu { channels: usize },
    LeakyRelu { channels: usize, slope: f64 },
}

impl LayerSpec {
    pub fn conv(params: ConvParams) -> Result<Self> {
        params.validate(LayerKind::Conv)?;
        Ok(LayerSpec::Conv(params))
    }

    pub fn tconv(params: ConvParams) -> Result<Self> {
        params.validate(LayerKind::Tconv)?;
        Ok(LayerSpec::Tconv(params))
    }

    pub fn gdn(params: GdnParams) -> Result<Self> {
        params.validate()?;
        Ok(LayerSpec::Gdn(params))
    }

    pub fn igdn(params: GdnParams) -> Result<Self> {
        params.validate()?;
        Ok(LayerSpec::Igdn(params))
    }

    pub fn kind(&self) -> LayerKind {
        match self {
            LayerSpec::Conv(_) => LayerKind::Conv,
            LayerSpec::Tconv(_) => LayerKind::Tconv,
            LayerSpec::Gdn(_) => LayerKind::Gdn,
            LayerSpec::Igdn(_) => LayerKind::Igdn,
            LayerSpec::Relu { .. } => LayerKind::Relu,
            LayerSpec::LeakyRelu { .. } => LayerKind::LeakyRelu,
        }
    }

    pub fn in_channels(&self) -> usize {
        match self {
            LayerSpec::Conv(p) | LayerSpec::Tconv(p) => p.in_channels,
            LayerSpec::Gdn(p) | LayerSpec::Igdn(p) => p.channels,
            LayerSpec::Relu { channels } | LayerSpec::LeakyRelu { channels, .. } => *channels,
        }
    }

    pub fn out_channels(&self) -> usize {
        match self {
            LayerSpec::Conv(p) | LayerSpec::Tconv(p) => p.out_channels,
            other => other.in_channels(),
        }
    }

    pub(crate) fn validate(&self) -> Result<()> {
        match self {
            LayerSpec::Conv(p) => p.validate(LayerKind::Conv),
            LayerSpec::Tconv(p) => p.validate(LayerKind::Tconv),
            LayerSpec::Gdn(p) | LayerSpec::Igdn(p) => p.validate(),
            LayerSpec::Relu { channels } => {
                if *channels == 0 {
                    return Err(Error::ShapeInconsistency("relu needs a channel count".into()));
                }
                Ok(())
            }
            LayerSpec::LeakyRelu { channels, slope } => {
                if *channels == 0 || !slope.is_finite() {
                    return Err(Error::ShapeInconsistency(
                        "leaky_relu needs channels and a finite slope".into(),
                    ));
                }
                Ok(())
            }
        }
    }

    /// True for layers that are linear when their bias is zero.
    pub fn is_linear(&self) -> bool {
        matches!(self, LayerSpec::Conv(_) | LayerSpec::Tconv(_))
    }

    pub fn apply(&self, input: &Tensor3) -> Result<Tensor3> {
        if input.channels() != self.in_channels() {
            return Err(Error::invalid(format!(
                "{:?} layer expects {} input channels, got {}",
                self.kind(),
                self.in_channels(),
                input.channels()
            )));
        }
        match self {
            LayerSpec::Conv(p) => conv::conv2d(input, p),
            LayerSpec::Tconv(p) => conv::tconv2d(input, p),
            LayerSpec::Gdn(p) => gdn::gdn(input, p),
            LayerSpec::Igdn(p) => gdn::igdn(input, p),
            LayerSpec::Relu { .. } => Ok(input.map(|v| v.max(0.0))),
            LayerSpec::LeakyRelu { slope, .. } => {
                let s = *slope;
                Ok(input.map(move |v| if v >= 0.0 { v } else { s * v }))
            }
        }
    }
}
