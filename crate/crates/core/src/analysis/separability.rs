use serde::{Deserialize, Serialize};

use super::decoder::{Decoder, OffsetFree};
use super::decompose::{aggregate_channel, aggregate_spatial};
use crate::error::{Error, Result};
use crate::nn::quantize;
use crate::tensor::Tensor3;

/// Label stored in every report so the `std` columns are never ambiguous.
pub const STD_ESTIMAND: &str =
    "population standard deviation of per-element squared error, pooled over all evaluated latents";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpatialSubset {
    /// Only the first `n` latents (spatial decomposition needs `h·w` decodes).
    First(usize),
    All,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SeparabilityOptions {
    pub spatial_subset: SpatialSubset,
    /// Round latents to integers before decomposing.
    pub quantize: bool,
}

impl Default for SeparabilityOptions {
    fn default() -> Self {
        SeparabilityOptions {
            spatial_subset: SpatialSubset::First(1),
            quantize: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatentSeparability {
    pub index: usize,
    pub mse_channel: f64,
    pub std_channel: f64,
    pub mse_spatial: Option<f64>,
    pub std_spatial: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeparabilityReport {
    /// Mean of the per-latent channel-wise MSEs.
    pub mse_channel: f64,
    pub std_channel: f64,
    /// Mean of the per-latent spatial MSEs over the evaluated subset.
    pub mse_spatial: f64,
    pub std_spatial: f64,
    pub channel_latents: usize,
    pub spatial_latents: usize,
    pub per_latent: Vec<LatentSeparability>,
    pub offset_free: bool,
    pub quantized: bool,
    pub std_estimand: String,
}

/// Running count/mean/M2, mergeable across latents.
#[derive(Debug, Clone, Copy, Default)]
struct Moments {
    count: f64,
    mean: f64,
    m2: f64,
}

impl Moments {
    fn of(values: &[f64]) -> Self {
        let count = values.len() as f64;
        if count == 0.0 {
            return Moments::default();
        }
        let mean = values.iter().sum::<f64>() / count;
        let m2 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
        Moments { count, mean, m2 }
    }

    fn merge(self, other: Moments) -> Moments {
        if self.count == 0.0 {
            return other;
        }
        if other.count == 0.0 {
            return self;
        }
        let count = self.count + other.count;
        let delta = other.mean - self.mean;
        Moments {
            count,
            mean: self.mean + delta * other.count / count,
            m2: self.m2 + other.m2 + delta * delta * self.count * other.count / count,
        }
    }

    fn std(&self) -> f64 {
        if self.count == 0.0 {
            0.0
        } else {
            (self.m2 / self.count).max(0.0).sqrt()
        }
    }
}

fn squared_error_moments(reference: &Tensor3, candidate: &Tensor3) -> Result<Moments> {
    Ok(Moments::of(reference.squared_error(candidate)?.data()))
}

/// Channel-wise and spatial superposition error of a decoder.
///
/// For each latent `z` the offset-free joint decode `g′(z)` is compared
/// against `Σ_i g′(z̃_i)` and, for latents inside the spatial subset,
/// against `Σ_{m,n} g′(ẑ_{m,n})`.
pub fn separability<D: Decoder + ?Sized>(
    dec: &D,
    latents: &[Tensor3],
    opts: SeparabilityOptions,
) -> Result<SeparabilityReport> {
    if latents.is_empty() {
        return Err(Error::invalid("separability needs at least one latent"));
    }
    let spatial_limit = match opts.spatial_subset {
        SpatialSubset::First(n) => n.min(latents.len()),
        SpatialSubset::All => latents.len(),
    };
    let g = OffsetFree::new(dec);

    let mut per_latent = Vec::with_capacity(latents.len());
    let mut channel_pool = Moments::default();
    let mut spatial_pool = Moments::default();
    for (index, z) in latents.iter().enumerate() {
        let z = if opts.quantize { quantize(z) } else { z.clone() };
        let joint = g.decode(&z)?;

        let ch = squared_error_moments(&joint, &aggregate_channel(&g, &z)?)?;
        channel_pool = channel_pool.merge(ch);

        let sp = if index < spatial_limit {
            let m = squared_error_moments(&joint, &aggregate_spatial(&g, &z)?)?;
            spatial_pool = spatial_pool.merge(m);
            Some(m)
        } else {
            None
        };

        per_latent.push(LatentSeparability {
            index,
            mse_channel: ch.mean,
            std_channel: ch.std(),
            mse_spatial: sp.map(|m| m.mean),
            std_spatial: sp.map(|m| m.std()),
        });
    }

    let mean_of = |vals: Vec<f64>| {
        if vals.is_empty() {
            0.0
        } else {
            vals.iter().sum::<f64>() / vals.len() as f64
        }
    };
    Ok(SeparabilityReport {
        mse_channel: mean_of(per_latent.iter().map(|p| p.mse_channel).collect()),
        std_channel: channel_pool.std(),
        mse_spatial: mean_of(per_latent.iter().filter_map(|p| p.mse_spatial).collect()),
        std_spatial: spatial_pool.std(),
        channel_latents: latents.len(),
        spatial_latents: spatial_limit,
        per_latent,
        offset_free: true,
        quantized: opts.quantize,
        std_estimand: STD_ESTIMAND.to_string(),
    })
}
