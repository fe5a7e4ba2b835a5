use anyhow::{anyhow, bail, Context, Result};
use codec_lens::analysis::{Decoder, Encoder, LinearBlockCodec};
use codec_lens::linear::{dct_matrix, haar_matrix, wht_matrix, OrthogonalTransform, WhtOrdering};
use codec_lens::nn::load_weights_file;

use crate::args::{Builtin, BuiltinKind, ModelArgs};

pub fn builtin_transform(b: Builtin) -> Result<OrthogonalTransform> {
    let t = match b.kind {
        BuiltinKind::Dct => dct_matrix(b.n),
        BuiltinKind::Wht => wht_matrix(b.n, WhtOrdering::Sequency),
        BuiltinKind::Haar => haar_matrix(b.n),
    };
    Ok(t?)
}

pub fn builtin_codec(b: Builtin) -> Result<LinearBlockCodec> {
    Ok(LinearBlockCodec::new(builtin_transform(b)?.separable_2d()?)?)
}

/// Whatever decoder and encoder the command line supplied.
pub struct Model {
    decoder: Option<Box<dyn Decoder>>,
    encoder: Option<Box<dyn Encoder>>,
}

impl Model {
    pub fn load(args: &ModelArgs) -> Result<Self> {
        if let Some(b) = args.decoder {
            let codec = builtin_codec(b).context("building the built-in decoder")?;
            return Ok(Model {
                decoder: Some(Box::new(codec.clone())),
                encoder: Some(Box::new(codec)),
            });
        }
        let decoder: Option<Box<dyn Decoder>> = match &args.weights {
            Some(path) => {
                let net = load_weights_file(path)
                    .and_then(|n| n.into_synthesis())
                    .with_context(|| format!("loading synthesis weights {}", path.display()))?;
                Some(Box::new(net))
            }
            None => None,
        };
        let encoder: Option<Box<dyn Encoder>> = match &args.analysis_weights {
            Some(path) => {
                let net = load_weights_file(path)
                    .and_then(|n| n.into_analysis())
                    .with_context(|| format!("loading analysis weights {}", path.display()))?;
                Some(Box::new(net))
            }
            None => None,
        };
        if decoder.is_none() && encoder.is_none() {
            bail!("give --decoder, or --weights and/or --analysis-weights");
        }
        if let (Some(d), Some(e)) = (&decoder, &encoder) {
            if d.latent_channels() != e.latent_channels() {
                bail!(
                    "synthesis net takes {} latent channels but analysis net produces {}",
                    d.latent_channels(),
                    e.latent_channels()
                );
            }
        }
        Ok(Model { decoder, encoder })
    }

    pub fn decoder(&self) -> Result<&dyn Decoder> {
        self.decoder
            .as_deref()
            .ok_or_else(|| anyhow!("this command needs a decoder: give --weights or --decoder"))
    }

    pub fn encoder(&self) -> Result<&dyn Encoder> {
        self.encoder
            .as_deref()
            .ok_or_else(|| anyhow!("this command needs an encoder: give --analysis-weights or --decoder"))
    }

    pub fn has_encoder(&self) -> bool {
        self.encoder.is_some()
    }
}
