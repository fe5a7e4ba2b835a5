use log::warn;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::decoder::{Decoder, Encoder, OffsetFree};
use super::decompose::channel_impulse_with_extent;
use crate::error::{Error, Result};
use crate::tensor::Tensor3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AmplitudeMode {
    /// Largest signed latent value per channel.
    #[default]
    SignedMax,
    /// Largest latent magnitude per channel.
    AbsMax,
    /// `k_i = 1` for every channel.
    Unit,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Amplitudes {
    pub mode: AmplitudeMode,
    pub values: Vec<f64>,
    /// Channels whose statistic was zero and fell back to `k_i = 1`.
    pub fallback_channels: Vec<usize>,
}

impl Amplitudes {
    pub fn unit(channels: usize) -> Self {
        Amplitudes {
            mode: AmplitudeMode::Unit,
            values: vec![1.0; channels],
            fallback_channels: Vec::new(),
        }
    }
}

/// Per-channel impulse amplitudes measured on encoded images.
///
/// Images are edge-padded to a multiple of the encoder's downsampling
/// factor before encoding.
pub fn amplitudes_from_images<E, T>(enc: &E, images: &[T], mode: AmplitudeMode) -> Result<Amplitudes>
where
    E: Encoder + ?Sized,
    T: AsRef<Tensor3> + Sync,
{
    if images.is_empty() {
        return Err(Error::invalid("amplitude estimation needs at least one image"));
    }
    let channels = enc.latent_channels();
    if mode == AmplitudeMode::Unit {
        return Ok(Amplitudes::unit(channels));
    }
    let per_image: Vec<Vec<f64>> = images
        .par_iter()
        .map(|img| {
            let z = enc.encode(&img.as_ref().pad_edge_to_multiple(enc.downsampling()))?;
            (0..channels)
                .map(|c| match mode {
                    AmplitudeMode::SignedMax => z.channel_max(c),
                    _ => z.channel_abs_max(c),
                })
                .collect()
        })
        .collect::<Result<_>>()?;

    let mut values = per_image[0].clone();
    for stats in &per_image[1..] {
        for (v, s) in values.iter_mut().zip(stats) {
            *v = v.max(*s);
        }
    }
    let mut fallback_channels = Vec::new();
    for (c, v) in values.iter_mut().enumerate() {
        if *v == 0.0 {
            warn!("channel {c} has zero amplitude on every image, using k = 1");
            *v = 1.0;
            fallback_channels.push(c);
        }
    }
    Ok(Amplitudes {
        mode,
        values,
        fallback_channels,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct BasisEntry {
    pub channel: usize,
    pub amplitude: f64,
    /// Decoder response to the channel impulse, `c_out × e·s × e·s`.
    pub image: Tensor3,
    /// Position in the descending-rate order, when known.
    pub rank: Option<usize>,
}

/// Impulse responses, one per latent channel.
#[derive(Debug, Clone, PartialEq)]
pub struct BasisSet {
    entries: Vec<BasisEntry>,
    offset_free: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BasisOptions {
    /// Decode with `g(δ) − g(0)` instead of `g(δ)`.
    pub offset_free: bool,
    /// Odd spatial extent of the impulse latent.
    pub extent: usize,
}

impl Default for BasisOptions {
    fn default() -> Self {
        BasisOptions {
            offset_free: false,
            extent: 1,
        }
    }
}

impl BasisSet {
    pub fn new(entries: Vec<BasisEntry>, offset_free: bool) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::invalid("basis set is empty"));
        }
        for (i, e) in entries.iter().enumerate() {
            if e.channel != i {
                return Err(Error::invalid(format!(
                    "basis entry {i} is labelled channel {}",
                    e.channel
                )));
            }
            if e.amplitude == 0.0 || !e.amplitude.is_finite() {
                return Err(Error::invalid(format!(
                    "channel {i} amplitude must be finite and nonzero"
                )));
            }
        }
        Ok(BasisSet { entries, offset_free })
    }

    pub fn entries(&self) -> &[BasisEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn offset_free(&self) -> bool {
        self.offset_free
    }

    /// Attaches ranks from a permutation listing channels in descending
    /// rate order.
    pub fn set_ranks(&mut self, order: &[usize]) -> Result<()> {
        if order.len() != self.entries.len() {
            return Err(Error::invalid(format!(
                "rank permutation has {} entries for {} channels",
                order.len(),
                self.entries.len()
            )));
        }
        let mut seen = vec![false; order.len()];
        for &c in order {
            if c >= order.len() || std::mem::replace(&mut seen[c], true) {
                return Err(Error::invalid("rank order is not a permutation"));
            }
        }
        for (rank, &channel) in order.iter().enumerate() {
            self.entries[channel].rank = Some(rank);
        }
        Ok(())
    }

    /// Entries by ascending rank when every entry has one, else by channel.
    pub fn ordered(&self) -> Vec<&BasisEntry> {
        let mut v: Vec<&BasisEntry> = self.entries.iter().collect();
        if v.iter().all(|e| e.rank.is_some()) {
            v.sort_by_key(|e| e.rank);
        }
        v
    }

    pub fn to_index(&self) -> BasisIndex {
        BasisIndex {
            offset_free: self.offset_free,
            entries: self
                .entries
                .iter()
                .map(|e| BasisIndexEntry {
                    channel: e.channel,
                    amplitude: e.amplitude,
                    rank: e.rank,
                    shape: [e.image.channels(), e.image.height(), e.image.width()],
                    values: e.image.data().to_vec(),
                })
                .collect(),
        }
    }

    pub fn from_index(index: BasisIndex) -> Result<Self> {
        let entries = index
            .entries
            .into_iter()
            .map(|e| {
                let [c, h, w] = e.shape;
                Ok(BasisEntry {
                    channel: e.channel,
                    amplitude: e.amplitude,
                    rank: e.rank,
                    image: Tensor3::new(c, h, w, e.values)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        BasisSet::new(entries, index.offset_free)
    }
}

/// JSON form of a [`BasisSet`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BasisIndex {
    pub offset_free: bool,
    pub entries: Vec<BasisIndexEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BasisIndexEntry {
    pub channel: usize,
    pub amplitude: f64,
    pub rank: Option<usize>,
    pub shape: [usize; 3],
    pub values: Vec<f64>,
}

/// `b_i = g(δ_i)` with `δ_i` a 1×1 impulse of amplitude `amplitudes[i]`.
pub fn extract_basis<D: Decoder + ?Sized>(dec: &D, amplitudes: &[f64]) -> Result<BasisSet> {
    extract_basis_with(dec, amplitudes, BasisOptions::default())
}

pub fn extract_basis_with<D: Decoder + ?Sized>(dec: &D, amplitudes: &[f64], opts: BasisOptions) -> Result<BasisSet> {
    let channels = dec.latent_channels();
    if amplitudes.len() != channels {
        return Err(Error::invalid(format!(
            "{} amplitudes for a decoder with {channels} latent channels",
            amplitudes.len()
        )));
    }
    let offset = OffsetFree::new(dec);
    let entries = amplitudes
        .par_iter()
        .enumerate()
        .map(|(i, &k)| {
            let run = || -> Result<Tensor3> {
                let delta = channel_impulse_with_extent(channels, i, k, opts.extent)?;
                if opts.offset_free {
                    offset.decode(&delta)
                } else {
                    dec.decode(&delta)
                }
            };
            let image = run().map_err(|e| Error::Channel {
                channel: i,
                source: Box::new(e),
            })?;
            Ok(BasisEntry {
                channel: i,
                amplitude: k,
                image,
                rank: None,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    BasisSet::new(entries, opts.offset_free)
}
