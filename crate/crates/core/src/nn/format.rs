//! The LICW weight container.
//!
//! ```text
//! offset  size  field
//! 0       4     magic "LICW"
//! 4       4     version (u32 LE, currently 1)
//! 8       8     header length in bytes (u64 LE)
//! 16      n     UTF-8 JSON header
//! 16+n    ...   payload: f32 LE values, tensors contiguous in header order
//! ```
//!
//! The header lists the net kind, the layer stack and one entry per tensor
//! (name, shape, byte offset into the payload). Tensor layouts:
//! conv weight `[out, in, kh, kw]`, tconv weight `[in, out, kh, kw]`,
//! bias and beta `[C]`, gamma `[C, C]`. Convolutions are cross-correlations
//! and GDN parameters are stored after reparameterisation.

use serde::{Deserialize, Serialize};

use super::layer::{ConvParams, GdnParams, LayerKind, LayerSpec};
use super::net::{AnalysisNet, NetKind, Network, SynthesisNet};
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"LICW";
pub const VERSION: u32 = 1;
const PREAMBLE: usize = 16;

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
struct Header {
    kind: NetKind,
    layers: Vec<LayerHeader>,
    tensors: Vec<TensorEntry>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
struct LayerHeader {
    kind: LayerKind,
    in_channels: usize,
    out_channels: usize,
    kernel: [usize; 2],
    stride: usize,
    padding: usize,
    output_padding: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    slope: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
struct TensorEntry {
    name: String,
    shape: Vec<usize>,
    offset: u64,
}

/// A network read from a LICW file.
#[derive(Debug, Clone, PartialEq)]
pub enum LoadedNet {
    Analysis(AnalysisNet),
    Synthesis(SynthesisNet),
}

impl LoadedNet {
    pub fn network(&self) -> &Network {
        match self {
            LoadedNet::Analysis(n) => n.network(),
            LoadedNet::Synthesis(n) => n.network(),
        }
    }

    pub fn into_synthesis(self) -> Result<SynthesisNet> {
        match self {
            LoadedNet::Synthesis(n) => Ok(n),
            LoadedNet::Analysis(_) => Err(Error::invalid("weights describe an analysis net, expected synthesis")),
        }
    }

    pub fn into_analysis(self) -> Result<AnalysisNet> {
        match self {
            LoadedNet::Analysis(n) => Ok(n),
            LoadedNet::Synthesis(_) => Err(Error::invalid("weights describe a synthesis net, expected analysis")),
        }
    }
}

fn tensor_name(layer: usize, field: &str) -> String {
    format!("layers.{layer}.{field}")
}

/// Serialises a network. Values are narrowed to f32.
pub fn save_weights(net: &Network) -> Vec<u8> {
    let mut layers = Vec::with_capacity(net.layers().len());
    let mut tensors = Vec::new();
    let mut payload: Vec<f32> = Vec::new();
    let mut push = |name: String, shape: Vec<usize>, values: &[f64], tensors: &mut Vec<TensorEntry>| {
        tensors.push(TensorEntry {
            name,
            shape,
            offset: (payload.len() * 4) as u64,
        });
        payload.extend(values.iter().map(|&v| v as f32));
    };

    for (idx, layer) in net.layers().iter().enumerate() {
        let kind = layer.kind();
        let mut header = LayerHeader {
            kind,
            in_channels: layer.in_channels(),
            out_channels: layer.out_channels(),
            kernel: [1, 1],
            stride: 1,
            padding: 0,
            output_padding: 0,
            slope: None,
        };
        match layer {
            LayerSpec::Conv(p) | LayerSpec::Tconv(p) => {
                header.kernel = [p.kernel.0, p.kernel.1];
                header.stride = p.stride;
                header.padding = p.padding;
                header.output_padding = p.output_padding;
                push(
                    tensor_name(idx, "weight"),
                    p.weight_shape(kind).to_vec(),
                    &p.weight,
                    &mut tensors,
                );
                if let Some(b) = &p.bias {
                    push(tensor_name(idx, "bias"), vec![b.len()], b, &mut tensors);
                }
            }
            LayerSpec::Gdn(p) | LayerSpec::Igdn(p) => {
                push(tensor_name(idx, "beta"), vec![p.channels], &p.beta, &mut tensors);
                push(
                    tensor_name(idx, "gamma"),
                    vec![p.channels, p.channels],
                    &p.gamma,
                    &mut tensors,
                );
            }
            LayerSpec::Relu { .. } => {}
            LayerSpec::LeakyRelu { slope, .. } => header.slope = Some(*slope),
        }
        layers.push(header);
    }

    let header = Header {
        kind: net.kind(),
        layers,
        tensors,
    };
    let json = serde_json::to_vec(&header).expect("header serialisation cannot fail");
    let mut out = Vec::with_capacity(PREAMBLE + json.len() + payload.len() * 4);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(json.len() as u64).to_le_bytes());
    out.extend_from_slice(&json);
    for v in payload {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn load_weights(bytes: &[u8]) -> Result<LoadedNet> {
    let mut magic = [0u8; 4];
    let n = bytes.len().min(4);
    magic[..n].copy_from_slice(&bytes[..n]);
    if &magic != MAGIC {
        return Err(Error::BadMagic(magic));
    }
    if bytes.len() < PREAMBLE {
        return Err(Error::HeaderLength {
            declared: PREAMBLE as u64,
            available: bytes.len() as u64,
        });
    }
    let version = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
    if version != VERSION {
        return Err(Error::UnsupportedVersion(version));
    }
    let header_len = u64::from_le_bytes(bytes[8..16].try_into().unwrap());
    let available = (bytes.len() - PREAMBLE) as u64;
    if header_len > available {
        return Err(Error::HeaderLength {
            declared: header_len,
            available,
        });
    }
    let header_end = PREAMBLE + header_len as usize;
    let header: Header = serde_json::from_slice(&bytes[PREAMBLE..header_end])?;
    let payload = &bytes[header_end..];

    // Offsets must be contiguous in declaration order and cover the payload.
    let mut expected_offset = 0u64;
    for t in &header.tensors {
        if t.offset != expected_offset {
            return Err(Error::ShapeInconsistency(format!(
                "tensor {} starts at byte {} but the previous tensor ends at {expected_offset}",
                t.name, t.offset
            )));
        }
        expected_offset += t.shape.iter().product::<usize>() as u64 * 4;
    }
    if expected_offset != payload.len() as u64 {
        return Err(Error::PayloadLength {
            expected: expected_offset,
            actual: payload.len() as u64,
        });
    }

    let mut used = vec![false; header.tensors.len()];
    let mut take = |name: String, shape: &[usize]| -> Result<Option<Vec<f64>>> {
        let Some(pos) = header.tensors.iter().position(|t| t.name == name) else {
            return Ok(None);
        };
        let entry = &header.tensors[pos];
        if entry.shape != shape {
            return Err(Error::ShapeInconsistency(format!(
                "tensor {name} has shape {:?}, layer needs {shape:?}",
                entry.shape
            )));
        }
        used[pos] = true;
        let start = entry.offset as usize;
        let end = start + shape.iter().product::<usize>() * 4;
        Ok(Some(
            payload[start..end]
                .chunks_exact(4)
                .map(|c| f64::from(f32::from_le_bytes(c.try_into().unwrap())))
                .collect(),
        ))
    };
    let require = |v: Option<Vec<f64>>, name: String| -> Result<Vec<f64>> {
        v.ok_or_else(|| Error::ShapeInconsistency(format!("missing tensor {name}")))
    };

    let mut layers = Vec::with_capacity(header.layers.len());
    for (idx, lh) in header.layers.iter().enumerate() {
        let layer = match lh.kind {
            LayerKind::Conv | LayerKind::Tconv => {
                let mut params = ConvParams {
                    in_channels: lh.in_channels,
                    out_channels: lh.out_channels,
                    kernel: (lh.kernel[0], lh.kernel[1]),
                    stride: lh.stride,
                    padding: lh.padding,
                    output_padding: lh.output_padding,
                    weight: Vec::new(),
                    bias: None,
                };
                let wname = tensor_name(idx, "weight");
                params.weight = require(take(wname.clone(), &params.weight_shape(lh.kind))?, wname)?;
                params.bias = take(tensor_name(idx, "bias"), &[lh.out_channels])?;
                if lh.kind == LayerKind::Conv {
                    LayerSpec::conv(params)?
                } else {
                    LayerSpec::tconv(params)?
                }
            }
            LayerKind::Gdn | LayerKind::Igdn => {
                if lh.in_channels != lh.out_channels {
                    return Err(Error::ShapeInconsistency(format!(
                        "gdn layer {idx} changes channel count"
                    )));
                }
                let c = lh.in_channels;
                let (bn, gn) = (tensor_name(idx, "beta"), tensor_name(idx, "gamma"));
                let beta = require(take(bn.clone(), &[c])?, bn)?;
                let gamma = require(take(gn.clone(), &[c, c])?, gn)?;
                let params = GdnParams::new(beta, gamma)?;
                if lh.kind == LayerKind::Gdn {
                    LayerSpec::gdn(params)?
                } else {
                    LayerSpec::igdn(params)?
                }
            }
            LayerKind::Relu => LayerSpec::Relu {
                channels: lh.in_channels,
            },
            LayerKind::LeakyRelu => LayerSpec::LeakyRelu {
                channels: lh.in_channels,
                slope: lh
                    .slope
                    .ok_or_else(|| Error::ShapeInconsistency(format!("leaky_relu layer {idx} has no slope")))?,
            },
        };
        if layer.out_channels() != lh.out_channels {
            return Err(Error::ShapeInconsistency(format!(
                "layer {idx} channel counts disagree"
            )));
        }
        layers.push(layer);
    }
    if let Some(pos) = used.iter().position(|u| !u) {
        return Err(Error::ShapeInconsistency(format!(
            "tensor {} is not referenced by any layer",
            header.tensors[pos].name
        )));
    }

    let net = Network::new(header.kind, layers)?;
    Ok(match header.kind {
        NetKind::Analysis => LoadedNet::Analysis(AnalysisNet::from_network(net)?),
        NetKind::Synthesis => LoadedNet::Synthesis(SynthesisNet::from_network(net)?),
    })
}

/// Reads and parses a LICW file.
pub fn load_weights_file(path: &std::path::Path) -> Result<LoadedNet> {
    let bytes = std::fs::read(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    load_weights(&bytes)
}
